use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use automorph::classes::{default_primes, quaternary_system, similarity_system, SimilaritySystem};
use automorph::intmat::SMatrix;
use automorph::qform::{FormDescriptor, QuadraticForm};
use automorph::{autoring, clifford, isosum, reps, shimlift, theta, Error};

const THREADS_ENV: &str = "AUTOMORPH_THREADS";

#[derive(Parser)]
#[command(name = "automorph", version, about = "Automorph classes of integral quadratic forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Built-in form name (3squares, 4squares-norm) or path to a JSON descriptor.
    #[arg(long, global = true)]
    form: Option<String>,
    /// Inline upper triangle of Q₀, rows separated by ';', e.g. "1,0,0;1,0;1".
    #[arg(long, global = true)]
    q0: Option<String>,
    /// Comma-separated odd primes.
    #[arg(long = "prime", global = true, value_delimiter = ',')]
    primes: Vec<i64>,
    /// Primes used to close the similarity system (default: 3, 5, 7 coprime to det).
    #[arg(long = "system-primes", global = true, value_delimiter = ',')]
    system_primes: Vec<i64>,
    #[arg(long, global = true)]
    n_max: Option<i64>,
    /// Comma-separated values of a.
    #[arg(long = "a", global = true, value_delimiter = ',')]
    a_list: Vec<i64>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; overrides AUTOMORPH_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Derived invariants of a form.
    Form {
        #[arg(value_enum, default_value = "info")]
        action: FormAction,
    },
    /// Representations of n and their orbits, or r(n) for n ≤ n_max.
    Reps {
        #[arg(value_enum)]
        action: RepsAction,
        #[arg(long)]
        n: Option<i64>,
    },
    /// Class representatives of the similarity system.
    Classes {
        #[arg(value_enum, default_value = "system")]
        action: ClassesAction,
    },
    /// Brute-force against closed-form isotropic sums.
    Isosum {
        #[arg(value_enum, default_value = "compare")]
        action: IsosumAction,
        /// Columns K, entries comma-separated, columns separated by ';'.
        #[arg(long)]
        k: Option<String>,
    },
    /// Theta coefficients, Hecke maps and Dirichlet-series checks.
    Theta {
        #[arg(value_enum)]
        action: ThetaAction,
        /// Comma-separated n for the Euler check.
        #[arg(long = "n", value_delimiter = ',')]
        ns: Vec<i64>,
        #[arg(long)]
        m_max: Option<i64>,
    },
    /// Clifford invariants and lifts of ternary automorphs.
    Clifford {
        #[arg(value_enum)]
        action: CliffordAction,
        /// Rows of A separated by ';', entries by ','.
        #[arg(long)]
        matrix: Option<String>,
    },
    /// Counting identity and covering between ternary and quaternary classes.
    Shimura {
        #[arg(value_enum, default_value = "verify")]
        action: ShimuraAction,
    },
    /// Orbit-level commutation relations in the automorph class ring.
    Autoring {
        #[arg(value_enum, default_value = "verify")]
        action: AutoringAction,
        #[arg(long)]
        a_max: Option<i64>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum FormAction {
    Info,
}

#[derive(Copy, Clone, ValueEnum)]
enum RepsAction {
    List,
    Counts,
}

#[derive(Copy, Clone, ValueEnum)]
enum ClassesAction {
    System,
}

#[derive(Copy, Clone, ValueEnum)]
enum IsosumAction {
    Compare,
}

#[derive(Copy, Clone, ValueEnum)]
enum ThetaAction {
    Coeffs,
    Hecke,
    Eichler,
    Euler,
    Shimura,
}

#[derive(Copy, Clone, ValueEnum)]
enum CliffordAction {
    Check,
    Lift,
}

#[derive(Copy, Clone, ValueEnum)]
enum ShimuraAction {
    Verify,
}

#[derive(Copy, Clone, ValueEnum)]
enum AutoringAction {
    Verify,
}

/// Values read from `--config`.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    form: Option<String>,
    q0: Option<String>,
    primes: Option<Vec<i64>>,
    system_primes: Option<Vec<i64>>,
    n_max: Option<i64>,
    a: Option<Vec<i64>>,
    d: Option<usize>,
    format: Option<Format>,
    threads: Option<usize>,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularPrime(p) => {
                Failure::Usage(format!("prime {p} divides det q; singular primes are not supported"))
            }
            Error::EvenPrime => Failure::Usage("p = 2 is not supported; supply odd primes".into()),
            Error::Verification(m) => Failure::Verification(m),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn merge(mut c: Common) -> CliResult<Common> {
    let Some(path) = c.config.clone() else { return Ok(c) };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let rc: RunConfig = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if c.form.is_none() && c.q0.is_none() {
        c.form = rc.form;
        c.q0 = rc.q0;
    }
    if c.primes.is_empty() {
        c.primes = rc.primes.unwrap_or_default();
    }
    if c.system_primes.is_empty() {
        c.system_primes = rc.system_primes.unwrap_or_default();
    }
    if c.a_list.is_empty() {
        c.a_list = rc.a.unwrap_or_default();
    }
    c.n_max = c.n_max.or(rc.n_max);
    c.d = c.d.or(rc.d);
    c.format = c.format.or(rc.format);
    c.threads = c.threads.or(rc.threads);
    Ok(c)
}

fn parse_rows(s: &str) -> CliResult<Vec<Vec<i64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|e| Failure::Usage(format!("bad integer {x:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn load_form(c: &Common) -> CliResult<QuadraticForm> {
    if let Some(q0) = &c.q0 {
        let rows = parse_rows(q0)?;
        return Ok(QuadraticForm::new(rows.len(), &rows)?);
    }
    match c.form.as_deref() {
        None => usage("a form is required: --form <name|path> or --q0 <rows>"),
        Some("3squares") => Ok(QuadraticForm::sum_of_squares(3)),
        Some("4squares-norm") => Ok(clifford::norm_form(&QuadraticForm::sum_of_squares(3))?),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            let d: FormDescriptor = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            Ok(QuadraticForm::from_descriptor(&d)?)
        }
    }
}

fn primes(c: &Common) -> CliResult<&[i64]> {
    if c.primes.is_empty() {
        return usage("--prime is required");
    }
    if let Some(p) = c.primes.iter().find(|&&p| p % 2 == 0 || !automorph::qform::is_prime(p)) {
        return usage(format!("{p} is not an odd prime"));
    }
    Ok(&c.primes)
}

fn n_max(c: &Common, default: i64) -> CliResult<i64> {
    let n = c.n_max.unwrap_or(default);
    if n < 1 {
        return usage("n_max must be at least 1");
    }
    Ok(n)
}

fn system(c: &Common, q: &QuadraticForm) -> CliResult<SimilaritySystem> {
    let sp = if c.system_primes.is_empty() { default_primes(q) } else { c.system_primes.clone() };
    Ok(similarity_system(q, &sp)?)
}

fn fail_unless(ok: bool, statement: &str, detail: String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{statement} failed: {detail}")))
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn emit(v: &Value, format: Format, csv_table: Option<String>) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("json");
            s.push('\n');
            s
        }
        Format::Csv => csv_table.unwrap_or_else(|| {
            let mut s = serde_json::to_string(v).expect("json");
            s.push('\n');
            s
        }),
        Format::Text => match v {
            Value::Object(map) => map.iter().map(|(k, x)| format!("{k}: {x}\n")).collect(),
            other => format!("{other}\n"),
        },
    }
}

fn coeff_csv(columns: &[(&str, &[i64])]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string()];
    header.extend(columns.iter().map(|(h, _)| h.to_string()));
    w.write_record(&header).expect("in-memory write");
    let len = columns.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    for n in 0..len {
        let mut row = vec![n.to_string()];
        row.extend(columns.iter().map(|(_, c)| c[n].to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn run(cli: Cli) -> CliResult<String> {
    let c = merge(cli.common)?;
    let threads = match c.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.parse::<usize>().map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a positive integer")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return usage("parallelism must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let format = c.format.unwrap_or(Format::Json);
    let mut csv_table = None;
    let mut outcome = Ok(());
    let report: Value = match cli.command {
        Command::Form { action: FormAction::Info } => {
            let q = load_form(&c)?;
            json!({
                "m": q.m(),
                "q0": q.descriptor().q0,
                "gram": to_value(q.gram()),
                "det": q.det(),
                "delta": q.delta(),
                "level": q.level(),
                "positive_definite": q.is_positive_definite(),
            })
        }
        Command::Reps { action, n } => {
            let q = load_form(&c)?;
            match action {
                RepsAction::List => {
                    let Some(n) = n else { return usage("--n is required") };
                    let vs = reps::representations(&q, n)?;
                    let e = reps::unit_group(&q)?;
                    let orbits: Vec<Value> =
                        reps::orbits(&vs, &e).into_iter().map(|o| json!({"rep": o.rep, "size": o.size})).collect();
                    json!({"n": n, "count": vs.len(), "unit_order": e.order(), "orbits": orbits})
                }
                RepsAction::Counts => {
                    let counts = reps::representation_counts(&q, n_max(&c, 50)?)?;
                    let signed: Vec<i64> = counts.iter().map(|&x| x as i64).collect();
                    csv_table = Some(coeff_csv(&[("r", &signed)]));
                    json!({"counts": counts})
                }
            }
        }
        Command::Classes { action: ClassesAction::System } => {
            let q = load_form(&c)?;
            let s = system(&c, &q)?;
            json!({"h": s.h(), "system": to_value(&s.descriptor())})
        }
        Command::Isosum { action: IsosumAction::Compare, k } => {
            let q = load_form(&c)?;
            let d = c.d.unwrap_or(1);
            let mut rows = Vec::new();
            for &p in primes(&c)? {
                let ks = match &k {
                    Some(s) => parse_rows(s)?,
                    None => isosum::stratum_samples(&q, p).into_iter().map(|(_, k)| k).collect(),
                };
                rows.extend(isosum::compare(&q, p, d, &ks)?);
            }
            let bad: Vec<String> = rows.iter().filter(|r| !r.agree).map(|r| format!("p={} K={:?}", r.p, r.k)).collect();
            outcome = fail_unless(bad.is_empty(), "Theorem 1.9", bad.join(", "));
            csv_table = Some(isosum::reports_to_csv(&rows));
            to_value(&rows)
        }
        Command::Theta { action, ns, m_max } => match action {
            ThetaAction::Coeffs => {
                let q = load_form(&c)?;
                let r = theta::theta_coeffs(&q, n_max(&c, 50)?)?;
                csv_table = Some(coeff_csv(&[("r", &r)]));
                json!({"coefficients": r})
            }
            ThetaAction::Hecke => {
                let q = load_form(&c)?;
                let n = n_max(&c, 50)?;
                let mut out = BTreeMap::new();
                let mut cols = Vec::new();
                for &p in primes(&c)? {
                    let v = if q.m() % 2 == 0 { theta::hecke_tp(&q, p, n)? } else { theta::hecke_tp2(&q, p, n)? };
                    cols.push((p.to_string(), v.clone()));
                    out.insert(p.to_string(), v);
                }
                let named: Vec<(&str, &[i64])> = cols.iter().map(|(h, v)| (h.as_str(), v.as_slice())).collect();
                csv_table = Some(coeff_csv(&named));
                to_value(&out)
            }
            ThetaAction::Eichler => {
                let q = load_form(&c)?;
                let s = system(&c, &q)?;
                let n = n_max(&c, 100)?;
                let mut out = Vec::new();
                for &p in primes(&c)? {
                    let r = theta::verify_eichler(&s, p, n)?;
                    if outcome.is_ok() {
                        outcome = fail_unless(
                            r.holds,
                            "Eichler commutation relation",
                            format!("p={p} n={:?}", r.first_failure),
                        );
                    }
                    out.push(to_value(&r));
                }
                Value::Array(out)
            }
            ThetaAction::Euler => {
                let q = load_form(&c)?;
                let s = system(&c, &q)?;
                let ns = if ns.is_empty() { vec![1, 3, 5, 9, 15, 25, 27] } else { ns };
                let a_list = if c.a_list.is_empty() { vec![1] } else { c.a_list.clone() };
                let mut out = Vec::new();
                for a in a_list {
                    let r = theta::verify_euler(&s, a, &ns)?;
                    if outcome.is_ok() {
                        outcome = fail_unless(
                            r.failures.is_empty(),
                            "Euler product expansion",
                            format!("a={a} n={:?}", r.failures),
                        );
                    }
                    out.push(to_value(&r));
                }
                Value::Array(out)
            }
            ThetaAction::Shimura => {
                let a_list = if c.a_list.is_empty() { vec![1, 2, 3, 5, 6] } else { c.a_list.clone() };
                let r = theta::shimura_3_4_check(m_max.unwrap_or(99), &a_list)?;
                outcome = fail_unless(r.all_agree, "identity (7.2)", "Dirichlet coefficients differ".into());
                to_value(&r)
            }
        },
        Command::Clifford { action, matrix } => {
            let q = load_form(&c)?;
            match action {
                CliffordAction::Check => {
                    let r = clifford::invariant_report(&q)?;
                    outcome = fail_unless(r.holds(), "Clifford invariants of t and N", format!("{r:?}"));
                    to_value(&r)
                }
                CliffordAction::Lift => {
                    let Some(m) = matrix else { return usage("--matrix is required") };
                    let rows = parse_rows(&m)?;
                    if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                        return usage("--matrix must be 3×3");
                    }
                    let a = SMatrix::from_rows(rows).to_big();
                    let mut out = BTreeMap::new();
                    out.insert("phi".to_string(), to_value(&clifford::phi_lift(&q, &a)?));
                    for &p in &c.primes {
                        let l = clifford::psi_lift(&q, &a, p)?;
                        let z: Vec<String> = l.z.iter().map(|x| x.to_string()).collect();
                        out.insert(format!("psi_{p}"), json!({"psi": to_value(&l.psi), "z": z}));
                    }
                    to_value(&out)
                }
            }
        }
        Command::Shimura { action: ShimuraAction::Verify } => {
            let q = load_form(&c)?;
            if q.m() != 3 {
                return usage("shimura verify needs a ternary form");
            }
            let ps = primes(&c)?.to_vec();
            let sp = if c.system_primes.is_empty() { default_primes(&q) } else { c.system_primes.clone() };
            for &p in &ps {
                if q.det() % p == 0 {
                    return Err(Error::SingularPrime(p).into());
                }
            }
            let ts = similarity_system(&q, &sp)?;
            let qs = quaternary_system(&ts, &sp)?;
            let mut out = Vec::new();
            for p in ps {
                let t = shimlift::verify_theorem_6_3(&ts, &qs, p)?;
                let cov = shimlift::verify_covering(&ts, &qs, p)?;
                if outcome.is_ok() {
                    outcome = fail_unless(t.equal, "Theorem 6.3", format!("p={p} lhs={} rhs={:?}", t.lhs, t.rhs));
                }
                if outcome.is_ok() {
                    outcome = fail_unless(cov.holds(), "Corollary 6.8", format!("p={p} fibers={:?}", cov.fibers));
                }
                let mut v = to_value(&t);
                let obj = v.as_object_mut().expect("object");
                obj.insert("fibers".into(), to_value(&cov.fibers));
                obj.insert("disjoint".into(), json!(cov.disjoint));
                obj.insert("exhaustive".into(), json!(cov.exhaustive));
                obj.insert("rank_checks".into(), to_value(&cov.rank_checks));
                out.push(v);
            }
            if out.len() == 1 {
                out.pop().expect("one report")
            } else {
                Value::Array(out)
            }
        }
        Command::Autoring { action: AutoringAction::Verify, a_max } => {
            let q = load_form(&c)?;
            let s = system(&c, &q)?;
            let a_max = a_max.unwrap_or(20);
            let statement = if q.m() % 2 == 0 { "identity (3.3)" } else { "identity (3.4)" };
            let mut out = Vec::new();
            for &p in primes(&c)? {
                let r = autoring::verify_commutation(&s, p, a_max)?;
                if outcome.is_ok() {
                    outcome = fail_unless(r.holds, statement, format!("p={p} a={:?}", r.failures));
                }
                out.push(to_value(&r));
            }
            Value::Array(out)
        }
    };
    let text = emit(&report, format, csv_table);
    match outcome {
        Ok(()) => Ok(text),
        Err(Failure::Verification(m)) => {
            print!("{text}");
            Err(Failure::Verification(m))
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failure: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
