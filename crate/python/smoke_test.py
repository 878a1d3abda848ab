"""Smoke test for the evstab extension module.

Build and install first, e.g. `maturin develop --release` or
`maturin build --release && pip install target/wheels/evstab-*.whl`.
"""

import json
import sys
from fractions import Fraction

import evstab


def orbit(c, n):
    x = Fraction(0)
    for _ in range(n):
        x = x * x + Fraction(1, c)
    return x


def check_sequence():
    for c in (-7, -2, 1, 2, 3, 48, 10**30 + 1):
        seq = evstab.a_sequence(c, 6)
        assert len(seq) == 6
        for n, a in enumerate(seq, start=1):
            assert evstab.a_n(c, n) == a
            # Reduced fractions hide the power of c, so compare the unreduced value.
            assert Fraction(a, c ** (2 ** (n - 1))) == orbit(c, n), (c, n)
            assert evstab.orbit_point(c, n) == orbit(c, n)


def check_classifier():
    v = evstab.detect_case(48)
    assert isinstance(v["case"], int) and v["c"] == "48"
    prof = evstab.predicted_k_profile(48)
    assert set(prof) >= {"k1", "k2", "k3", "k_stable"}

    rep = evstab.verify(2)
    assert rep.verified and rep.c == 2, rep
    rep.recheck()
    again = evstab.VerificationReport.from_json(rep.to_json())
    assert again.to_dict() == rep.to_dict()

    verifier = evstab.Verifier(evstab.Effort("full"))
    for c in (-576, 48, 288, 2400):
        r = verifier.verify(c)
        assert r.verified, r
        r.recheck()

    reports = evstab.verify_range(-30, 30)
    assert len(reports) == 59
    assert all(r.verified for r in reports)

    fast = evstab.Effort("fast", horizon=8)
    assert fast.level == "fast" and fast.horizon == 8
    r = evstab.verify(48, fast)
    assert r.status.split("(")[0] in ("VERIFIED", "CONDITIONAL"), r.status


def check_sieve_and_tables():
    cert = None
    for p in (3, 5, 7, 11, 13, 17, 19, 23):
        cert = evstab.certify_at_prime(2, p)
        if cert is not None:
            break
    assert cert is not None and cert["p"] == p
    text = evstab.table1()
    rows = [l for l in text.splitlines() if l and not l.startswith("#")]
    assert len(rows) > 20
    assert evstab.table1(regen=True, bound=40).strip()


def check_lattice():
    agg = evstab.stab_verify(10**20, check=True)
    assert agg["x"] == str(10**20)
    assert agg["primes"]


def check_curves():
    pts = evstab.curve_points("E184", height=200)
    assert pts
    for pt in pts:
        x, y = int(pt["x"]), int(pt["y"])
        assert y * y == x**3 - x**2 + 1
    try:
        evstab.curve_points("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown curve accepted")


def check_density():
    prof = evstab.density_profile(5, 20_000, t="1/3", checkpoints=[1000, 20_000])
    assert prof.checkpoints[-1][0] == 20_000
    assert not prof.violations
    dividing = sum(
        evstab.divides_orbit(p, 5, "1/3")
        for p in range(2, 1000)
        if all(p % q for q in range(2, int(p**0.5) + 1)) and p not in prof.excluded
    )
    assert dividing == prof.checkpoints[0][1], (dividing, prof.checkpoints[0])
    assert json.loads(json.dumps(prof.to_dict()))["c"] == "5"


def check_bounds_and_errors():
    b = evstab.bounds(10, bits=96)
    assert b["bits"] == 96 and b["m_bound"] >= 1

    for call, exc in (
        (lambda: evstab.a_n(0, 3), ValueError),
        (lambda: evstab.a_n(1.5, 3), ValueError),
        (lambda: evstab.a_n(3, 60), evstab.BudgetError),
    ):
        try:
            call()
        except exc:
            pass
        else:
            raise AssertionError(f"expected {exc.__name__}")


def main():
    for check in (
        check_sequence,
        check_classifier,
        check_sieve_and_tables,
        check_lattice,
        check_curves,
        check_density,
        check_bounds_and_errors,
    ):
        check()
        print(f"ok  {check.__name__}")
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
