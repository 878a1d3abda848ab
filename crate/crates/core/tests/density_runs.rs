use evstab::orbitdensity::{density_profile, divides_orbit};
use evstab::{Integer, Rational};

const CS: [i64; 5] = [2, 5, 6, 7, 10];

#[test]
fn split_invariant_to_1e5() {
    for c in CS {
        let prof = density_profile(&Integer::from(c), &Rational::new(), 100_000, &[1_000, 10_000]).unwrap();
        assert!(prof.violations.is_empty(), "c = {c}: {:?}", prof.violations);
        assert_eq!(prof.checkpoints.len(), 3);
        let last = prof.checkpoints.last().unwrap();
        assert!(last.fraction > 0.0 && last.fraction < 0.55, "c = {c}: {}", last.fraction);
        assert!(prof.hypothesis_met == (c != 3 && c != 8));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let run = || {
        let p = density_profile(&Integer::from(6), &Rational::new(), 50_000, &[5_000]).unwrap();
        (p.to_csv(), serde_json::to_string(&p).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn profile_agrees_with_single_prime_queries() {
    let c = Integer::from(5);
    let t = Rational::from((1, 3));
    let prof = density_profile(&c, &t, 3_000, &[]).unwrap();
    let mut dividing = 0;
    let mut counted = 0;
    for p in (2u64..=3_000).filter(|&p| primal::is_prime(p)) {
        if prof.excluded.contains(&p) {
            assert!(divides_orbit(p, &c, &t).is_err());
            continue;
        }
        counted += 1;
        if divides_orbit(p, &c, &t).unwrap() {
            dividing += 1;
        }
    }
    assert_eq!(prof.excluded, vec![3, 5]);
    let cp = prof.checkpoints[0];
    assert_eq!((cp.dividing, cp.primes), (dividing, counted));
}

#[test]
fn hypothesis_banner() {
    for c in [3, 8, -4, -9] {
        let p = density_profile(&Integer::from(c), &Rational::new(), 1_000, &[]).unwrap();
        assert!(!p.hypothesis_met && p.banner.is_some(), "c = {c}");
    }
    assert!(density_profile(&Integer::from(-1), &Rational::new(), 100, &[]).is_err());
}
