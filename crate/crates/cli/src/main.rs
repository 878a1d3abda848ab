use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evstab::bigratseq::{b_square_status, compute_a, orbit_point};
use evstab::classifier::{verify_range, Effort, Status, VerificationReport, Verifier};
use evstab::curves::{curve_point_search, CurveFact, CurveId, ALL_CURVES};
use evstab::latticever::{check, stab_verify_all, StabOptions};
use evstab::modsieve::{regen_table1, static_table1, table_diff, Target};
use evstab::orbitdensity::density_profile;
use evstab::stabbounds::profile;
use evstab::{Error, Integer, Rational};
use serde::Serialize;
use serde_json::json;

mod exit {
    pub const VERIFIED: u8 = 0;
    pub const FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const BUDGET: u8 = 3;
}

#[derive(Parser)]
#[command(name = "evstab", version, about = "Eventual stability of x^2 + 1/c: orbits, certificates, verification")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// a_n(c), f^n(0) and whether b_n can be a square.
    Seq {
        #[arg(long, allow_hyphen_values = true)]
        c: Integer,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// Case detection and certified irreducibility claims for one c or a range.
    Classify(ClassifyArgs),
    /// Lattice certificates that a_p(c) is not a square for even 4 <= c <= X.
    StabVerify {
        /// Upper bound X; accepts 10^k, 1ek or decimal digits.
        #[arg(long)]
        x: String,
        /// Write the full certificate with every pass trace to this file.
        #[arg(long)]
        emit_trace: Option<PathBuf>,
        /// Re-check every trace with the independent checker.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        assume_a5_nonsquare: bool,
    },
    /// The congruence table: the shipped copy, or regenerated and compared.
    Table1 {
        #[arg(long)]
        regen: bool,
        #[arg(long, default_value_t = 100)]
        bound: u64,
    },
    /// Integral points up to a height, compared with the known lists.
    Curves {
        /// E184, E92, G2, H3, HYP6+ or HYP6- (all when omitted).
        #[arg(long)]
        id: Option<CurveId>,
        #[arg(long, default_value_t = 10_000)]
        height: u64,
    },
    /// Fraction of primes dividing the orbit of t, as CSV or JSON.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        c: Integer,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        t: Rational,
        #[arg(long)]
        bound: u64,
        /// Extra checkpoints below the bound.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        #[arg(long, value_enum, default_value_t = DensityFormat::Csv)]
        format: DensityFormat,
    },
    /// The analytic quantities F(c), eps(c), q(c) and the iterate bound m(c).
    Bounds {
        #[arg(long)]
        c: Integer,
        /// Working precision in bits.
        #[arg(long, env = "EVSTAB_PRECISION", default_value_t = 128)]
        bits: u32,
    },
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true, conflicts_with = "range", required_unless_present = "range")]
    c: Option<Integer>,
    /// Inclusive range LO..HI; 0 and -1 are skipped.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long, value_enum, default_value_t = EffortArg::Full)]
    effort: EffortArg,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    p_max: Option<Vec<u64>>,
    /// Run lattice verification to this X for even c of case 7.
    #[arg(long)]
    lattice_x: Option<String>,
    #[arg(long)]
    assume_a5_nonsquare: bool,
    #[arg(long)]
    curve_height: Option<u64>,
    /// Print counts per case and status instead of the reports.
    #[arg(long)]
    summary: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EffortArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum DensityFormat {
    Csv,
    Json,
}

/// Failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Parse(_) => exit::USAGE,
            Error::Budget { .. } | Error::FactorizationBudget(_) | Error::Precision(_) | Error::NonTermination(_) => {
                exit::BUDGET
            }
            Error::Inconsistent(_) => exit::FAILED,
        };
        Fail(code, e.to_string())
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail(exit::USAGE, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(exit::USAGE, msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn emit<T: Serialize>(cli: &Cli, value: &T) -> Result<(), Fail> {
    let write = |w: &mut dyn Write| -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        w.flush()
    };
    match &cli.out {
        Some(p) => write(&mut BufWriter::new(File::create(p)?))?,
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, Fail> {
    match &cli.cmd {
        Cmd::Seq { c, n, json } => seq(cli, c, *n, *json),
        Cmd::Classify(a) => classify(cli, a),
        Cmd::StabVerify { x, emit_trace, check, assume_a5_nonsquare } => {
            stab(cli, x, emit_trace.as_ref(), *check, *assume_a5_nonsquare)
        }
        Cmd::Table1 { regen, bound } => table1(*regen, *bound),
        Cmd::Curves { id, height } => curves(cli, *id, *height),
        Cmd::Density { c, t, bound, checkpoints, format } => density(cli, c, t, *bound, checkpoints, *format),
        Cmd::Bounds { c, bits } => {
            emit(cli, &profile(c, *bits)?)?;
            Ok(exit::VERIFIED)
        }
    }
}

fn need_domain(c: &Integer) -> Result<(), Fail> {
    if *c == 0 || *c == -1 {
        return Err(usage(format!("c = {c} is excluded")));
    }
    Ok(())
}

fn seq(cli: &Cli, c: &Integer, n: u32, as_json: bool) -> Result<u8, Fail> {
    need_domain(c)?;
    let a = compute_a(c, n)?;
    let point = orbit_point(c, n)?;
    let b = if *c >= 1 && n >= 2 { Some(b_square_status(c, n)?) } else { None };
    if as_json || cli.out.is_some() {
        emit(
            cli,
            &json!({
                "c": c.to_string(),
                "n": n,
                "a_n": a.value.to_string(),
                "orbit_point": point.value.to_string(),
                "a_n_square": a.is_square(),
                "b_status": b,
            }),
        )?;
    } else {
        println!("a_{n} = {}", a.value);
        println!("f^{n}(0) = {}", point.value);
        println!("a_{n} square: {}", if a.is_square() { "yes" } else { "no" });
        if let Some(b) = b {
            println!("b_{n}: {}", serde_json::to_string(&b).expect("serializable"));
        }
    }
    Ok(exit::VERIFIED)
}

fn parse_big(s: &str) -> Result<Integer, Fail> {
    let s = s.trim();
    let pow10 = s.strip_prefix("10^").or_else(|| s.strip_prefix("1e")).or_else(|| s.strip_prefix("1E"));
    if let Some(k) = pow10 {
        let k: u32 = k.parse().map_err(|_| usage(format!("bad exponent in {s}")))?;
        return Ok(Integer::from(Integer::u_pow_u(10, k)));
    }
    s.parse::<Integer>().map_err(|_| usage(format!("cannot parse {s} as an integer")))
}

fn parse_range(s: &str) -> Result<(i64, i64), Fail> {
    // Split at the first ".." after a possible leading sign.
    let at = s.get(1..).and_then(|t| t.find("..")).map(|i| i + 1).ok_or_else(|| usage("range must be LO..HI"))?;
    let lo: i64 = s[..at].trim().parse().map_err(|_| usage(format!("bad range start in {s}")))?;
    let hi: i64 = s[at + 2..].trim().parse().map_err(|_| usage(format!("bad range end in {s}")))?;
    if lo > hi {
        return Err(usage("empty range"));
    }
    Ok((lo, hi))
}

fn effort_of(a: &ClassifyArgs) -> Result<Effort, Fail> {
    let mut e = match a.effort {
        EffortArg::Fast => Effort::fast(),
        EffortArg::Full => Effort::full(),
    };
    if let Some(h) = a.horizon {
        e.horizon = h;
    }
    if let Some(p) = &a.p_max {
        if p.is_empty() {
            return Err(usage("--p-max needs at least one bound"));
        }
        e.p_max = p.clone();
    }
    if let Some(x) = &a.lattice_x {
        e.lattice_x = Some(parse_big(x)?);
    }
    e.assume_a5_nonsquare = a.assume_a5_nonsquare;
    if let Some(h) = a.curve_height {
        e.curve_height = h;
    }
    Ok(e)
}

fn status_code(reports: &[VerificationReport]) -> u8 {
    if reports.iter().any(|r| matches!(r.status, Status::Failed { .. })) {
        exit::FAILED
    } else if reports.iter().all(VerificationReport::is_verified) {
        exit::VERIFIED
    } else {
        exit::BUDGET
    }
}

fn classify(cli: &Cli, a: &ClassifyArgs) -> Result<u8, Fail> {
    let effort = effort_of(a)?;
    let reports = match (&a.c, &a.range) {
        (Some(c), _) => {
            need_domain(c)?;
            vec![Verifier::new(effort).verify(c)?]
        }
        (None, Some(r)) => {
            let (lo, hi) = parse_range(r)?;
            verify_range(lo, hi, &effort)?
        }
        (None, None) => return Err(usage("give --c or --range")),
    };
    for r in reports.iter().filter(|r| !r.is_verified()) {
        eprintln!("c = {}: {}", r.verdict.c, r.status);
    }
    if a.summary {
        let mut cases = std::collections::BTreeMap::<u8, usize>::new();
        for r in &reports {
            *cases.entry(r.verdict.case).or_default() += 1;
        }
        let verified = reports.iter().filter(|r| r.is_verified()).count();
        emit(cli, &json!({ "count": reports.len(), "verified": verified, "cases": cases }))?;
    } else if a.c.is_some() {
        emit(cli, &reports[0])?;
    } else {
        emit(cli, &reports)?;
    }
    Ok(status_code(&reports))
}

fn stab(cli: &Cli, x: &str, trace: Option<&PathBuf>, run_check: bool, a5: bool) -> Result<u8, Fail> {
    let x = parse_big(x)?;
    let agg = stab_verify_all(&x, StabOptions { assume_a5_nonsquare: a5 })?;
    let mut rejected = Vec::new();
    if run_check {
        for cert in agg.lattice_certificates() {
            if let Err(e) = check::check_certificate(cert) {
                rejected.push(json!({ "p": cert.n, "reason": e }));
            }
        }
        for s in &agg.small_c {
            if !s.sieve.verify(&s.c, &Target::Numerator) {
                rejected.push(json!({ "c": s.c.to_string(), "reason": "sieve certificate does not verify" }));
            }
        }
    }
    if let Some(path) = trace {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &agg).map_err(|e| usage(e.to_string()))?;
        w.flush()?;
    }
    let primes: Vec<_> = agg
        .primes
        .iter()
        .map(|e| {
            let (passes, c_bound) = match &e.outcome {
                evstab::latticever::PrimeOutcome::InitialBound => (0, None),
                evstab::latticever::PrimeOutcome::Lattice { certificate } => {
                    (certificate.passes.len(), Some(certificate.c_bound.to_string()))
                }
            };
            json!({ "p": e.p, "passes": passes, "c_bound": c_bound })
        })
        .collect();
    emit(
        cli,
        &json!({
            "x": agg.x.to_string(),
            "min_prime": agg.min_prime,
            "prime_cap": agg.prime_cap,
            "small_c": agg.small_c.iter().map(|s| s.c.to_string()).collect::<Vec<_>>(),
            "primes": primes,
            "checked": run_check,
            "rejected": rejected,
            "gamma_never_doubled": agg.gamma_never_doubled,
            "growth_law_held": agg.growth_law_held,
        }),
    )?;
    Ok(if rejected.is_empty() { exit::VERIFIED } else { exit::FAILED })
}

fn table1(regen: bool, bound: u64) -> Result<u8, Fail> {
    let stat = static_table1();
    if !regen {
        print!("{}", stat.to_text());
        return Ok(exit::VERIFIED);
    }
    let fresh = regen_table1(bound);
    print!("{}", fresh.to_text());
    let diff = table_diff(&fresh, &stat);
    for d in &diff {
        eprintln!("modulus {}: extra {:?}, missing {:?}", d.modulus, d.extra, d.missing);
    }
    Ok(if diff.is_empty() { exit::VERIFIED } else { exit::FAILED })
}

#[derive(Serialize)]
struct CurveRun {
    #[serde(flatten)]
    fact: CurveFact,
    points: Vec<evstab::curves::CurvePoint>,
}

fn curves(cli: &Cli, id: Option<CurveId>, height: u64) -> Result<u8, Fail> {
    let ids: Vec<CurveId> = id.map_or(ALL_CURVES.to_vec(), |i| vec![i]);
    let runs: Vec<CurveRun> = ids
        .iter()
        .map(|&i| CurveRun { fact: CurveFact::checked(i, height), points: curve_point_search(i, height) })
        .collect();
    let ok = runs.iter().all(|r| matches!(r.fact.status, evstab::curves::FactStatus::SearchConfirmed { .. }));
    emit(cli, &runs)?;
    Ok(if ok { exit::VERIFIED } else { exit::FAILED })
}

fn density(
    cli: &Cli,
    c: &Integer,
    t: &Rational,
    bound: u64,
    checkpoints: &[u64],
    format: DensityFormat,
) -> Result<u8, Fail> {
    let prof = density_profile(c, t, bound, checkpoints)?;
    if let Some(b) = &prof.banner {
        eprintln!("{b}");
    }
    match format {
        DensityFormat::Json => emit(cli, &prof)?,
        DensityFormat::Csv => match &cli.out {
            Some(p) => std::fs::write(p, prof.to_csv())?,
            None => print!("{}", prof.to_csv()),
        },
    }
    Ok(if prof.violations.is_empty() { exit::VERIFIED } else { exit::FAILED })
}
