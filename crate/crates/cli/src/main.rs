use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use locsums::ag::{odd_primes, scan_cancellation, write_scan_csv, SCAN_BUDGET};
use locsums::chars::{admissible_pairs, enumerate_chars};
use locsums::error::Error;
use locsums::hhat::{certify_value, hhat_eval, psi_from_index, CyclicUnits, HhatQuery, DEFAULT_BUDGET};
use locsums::kloosterman::{local_invariants, LocalRepDescriptor};
use locsums::padic::modulus::is_prime;
use locsums::padic::{ExtKind, Ring};
use locsums::zlocal::{write_profile_csv, z0_local_factor, zfin_local_norm, LocalZQuery};

mod report;
mod verify;

use report::{emit, Format, Record, RECORD_HEADER};

/// Overrides the default term budget of every subcommand.
const BUDGET_ENV: &str = "LOCSUMS_BUDGET";

#[derive(Parser, Debug)]
#[command(
    name = "locsums",
    version,
    about = "Local character sums: evaluation, bounds and identity checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// hat H over every psi mod p^k for a grid of descriptors.
    Hhat(GridArgs),
    /// Run the tagged identity suite; exit 0 iff every check passes.
    Verify(VerifyArgs),
    /// Bound certificates for every psi at a = (1, 1, 1).
    Bounds(GridArgs),
    /// Finite-field cancellation scan.
    AgScan(AgArgs),
    /// Truncated local norm profiles and the Z_0 factor.
    Zlocal(ZlocalArgs),
    /// Local invariants for every descriptor of a kind.
    Tables(TablesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Unramified,
    Ramified,
    Principal,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Term budget; defaults to $LOCSUMS_BUDGET, then the library default.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct DescArgs {
    /// Primes.
    #[arg(long = "p", value_delimiter = ',', required = true)]
    p: Vec<u64>,
    /// c0 (the conductor of chi for principal series).
    #[arg(long, value_delimiter = ',', required = true)]
    c0: Vec<u32>,
    #[arg(long, value_enum, default_value = "unramified")]
    kind: Kind,
    /// Descriptor index within the enumeration; all of them if omitted.
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    desc: DescArgs,
    /// Exponents k (psi and the sums live mod p^k).
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u32>,
    /// a1 a2 a3.
    #[arg(long, num_args = 3, default_values_t = [1u64, 1, 1])]
    a: Vec<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long = "p")]
    p: u64,
    #[arg(long)]
    c0: u32,
    /// Exponent k of the checks run mod p^k.
    #[arg(long)]
    k: u32,
    #[arg(long, value_enum, default_value = "unramified")]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Relative tolerance, in [1e-12, 1e-3].
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Seed of the sampled checks.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct AgArgs {
    /// Inclusive prime range `a..b`.
    #[arg(long, value_parser = parse_range, default_value = "3..31")]
    primes: RangeInclusive<u64>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct ZlocalArgs {
    #[command(flatten)]
    desc: DescArgs,
    /// Largest k.
    #[arg(long)]
    k_max: u32,
    /// Largest v_p(m_i).
    #[arg(long, default_value_t = 1)]
    m_max: u32,
    /// sigma1 .. sigma4, each in (1/2, 4].
    #[arg(long, num_args = 4, default_values_t = [1.0, 1.0, 1.0, 1.0])]
    sigma: Vec<f64>,
    /// Report the trivial-character factor instead of the profile.
    #[arg(long)]
    z0: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[command(flatten)]
    desc: DescArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err("empty range".into());
    }
    Ok(a..=b)
}

/// Why a run stopped.
#[derive(Debug)]
enum Failure {
    Violation(String),
    Usage(String),
    Budget(String),
    /// The reader went away (`| head`); not an error.
    ClosedPipe,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::ClosedPipe => 0,
            Failure::Violation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            Error::InternalInconsistency(_) => Failure::Violation(e.to_string()),
            Error::Io {
                kind: io::ErrorKind::BrokenPipe,
                ..
            } => Failure::ClosedPipe,
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

type Run = Result<(), Failure>;

fn budget(flag: Option<u64>) -> Result<u64, Failure> {
    budget_or(flag, DEFAULT_BUDGET)
}

fn budget_or(flag: Option<u64>, default: u64) -> Result<u64, Failure> {
    let b = match flag {
        Some(b) => b,
        None => match std::env::var(BUDGET_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{BUDGET_ENV} must be a positive integer, got {s:?}")))?,
            Err(_) => default,
        },
    };
    if b == 0 {
        return Err(Failure::Usage("budget must be positive".into()));
    }
    Ok(b)
}

pub fn descriptors(p: u64, c0: u32, kind: Kind) -> Result<Vec<LocalRepDescriptor>, Error> {
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    match kind {
        Kind::Unramified | Kind::Ramified => {
            let ext = if kind == Kind::Unramified {
                ExtKind::Unramified
            } else {
                ExtKind::Ramified
            };
            Ok(admissible_pairs(p, c0, ext)?
                .into_iter()
                .map(LocalRepDescriptor::supercuspidal)
                .collect())
        }
        Kind::Principal => enumerate_chars(Ring::base(p, c0)?, |x| x.conductor() == c0)?
            .into_iter()
            .map(LocalRepDescriptor::principal_series)
            .collect(),
    }
}

fn selected(args: &DescArgs) -> Result<Vec<LocalRepDescriptor>, Failure> {
    let mut out = Vec::new();
    for &p in &args.p {
        for &c0 in &args.c0 {
            let all = descriptors(p, c0, args.kind)?;
            match args.index {
                Some(i) => out.push(all.get(i).cloned().ok_or_else(|| {
                    Failure::Usage(format!("index {i} out of range: {} descriptors at p={p} c0={c0}", all.len()))
                })?),
                None => out.extend(all),
            }
        }
    }
    Ok(out)
}

/// Every `(query, value, certificates)` of the grid, in descriptor, `k`,
/// character order.
fn grid(args: &GridArgs, budget: u64) -> Result<Vec<Vec<Record>>, Failure> {
    let a: [u64; 3] = [args.a[0], args.a[1], args.a[2]];
    let mut out = Vec::new();
    for d in selected(&args.desc)? {
        for &k in &args.k {
            let phi = CyclicUnits::get(d.p, k)?.phi;
            let rows: Result<Vec<_>, Error> = (0..phi)
                .into_par_iter()
                .map(|j| {
                    let q = HhatQuery::new(d.clone(), psi_from_index(d.p, k, j)?, a, k)?.with_budget(budget);
                    let v = hhat_eval(&q)?;
                    let certs = certify_value(&q, &v)?;
                    Ok((q, v, certs))
                })
                .collect();
            out.push(rows?);
        }
    }
    Ok(out
        .into_iter()
        .flatten()
        .map(|(q, v, certs)| {
            let mut rows = vec![Record::value(&q, &v, &certs)];
            rows.extend(certs.iter().map(|c| Record::certificate(&q, &v, c)));
            rows
        })
        .collect())
}

fn finish_records(rows: &[Record], format: Format) -> Run {
    emit(rows, RECORD_HEADER, format, io::stdout().lock())?;
    let bad = rows.iter().filter(|r| r.violated()).count();
    if bad > 0 {
        return Err(Failure::Violation(format!("{bad} violated certificates")));
    }
    Ok(())
}

fn cmd_hhat(args: &GridArgs) -> Run {
    let rows: Vec<Record> = grid(args, budget(args.common.budget)?)?
        .into_iter()
        .map(|mut r| r.remove(0))
        .collect();
    finish_records(&rows, args.common.format)
}

fn cmd_bounds(args: &GridArgs) -> Run {
    let rows: Vec<Record> = grid(args, budget(args.common.budget)?)?
        .into_iter()
        .flat_map(|r| r.into_iter().skip(1))
        .collect();
    finish_records(&rows, args.common.format)
}

fn cmd_verify(args: &VerifyArgs) -> Run {
    if !(1e-12..=1e-3).contains(&args.tol) {
        return Err(Failure::Usage("tolerance must lie in [1e-12, 1e-3]".into()));
    }
    let all = descriptors(args.p, args.c0, args.kind)?;
    let desc = all
        .get(args.index)
        .cloned()
        .ok_or_else(|| Failure::Usage(format!("index {} out of range", args.index)))?;
    let ctx = verify::Ctx {
        desc,
        kind: args.kind,
        k: args.k,
        tol: args.tol,
        seed: args.seed,
        budget: budget(args.budget)?,
    };
    let mut out = io::stdout().lock();
    let mut sink = Ok(());
    let results = verify::run(&ctx, |r| {
        if sink.is_ok() {
            sink = writeln!(out, "{r}").and_then(|_| out.flush());
        }
    });
    sink?;
    verify::summarize(&results).map_err(|(code, msg)| match code {
        3 => Failure::Budget(msg),
        _ => Failure::Violation(msg),
    })
}

fn cmd_ag(args: &AgArgs) -> Run {
    let b = budget_or(args.budget, SCAN_BUDGET)?;
    let primes = odd_primes(*args.primes.start(), *args.primes.end());
    let rows = scan_cancellation(&primes, b)?;
    write_scan_csv(&rows, io::stdout().lock())?;
    let bad: Vec<u64> = rows.iter().filter(|r| !r.within_thresholds()).map(|r| r.p).collect();
    if !bad.is_empty() {
        return Err(Failure::Violation(format!("frozen thresholds exceeded at p in {bad:?}")));
    }
    Ok(())
}

fn cmd_zlocal(args: &ZlocalArgs) -> Run {
    let b = budget(args.common.budget)?;
    let sigma = [args.sigma[0], args.sigma[1], args.sigma[2], args.sigma[3]];
    let mut out = io::stdout().lock();
    let mut bad = 0;
    for d in selected(&args.desc)? {
        let mut q = LocalZQuery::new(d.clone(), sigma, args.k_max, args.m_max)?;
        q.budget = b;
        if args.z0 {
            let z = z0_local_factor(&q)?;
            bad += usize::from(z.slack > 1.0);
            #[derive(Serialize)]
            struct Z0Row {
                descriptor: String,
                #[serde(serialize_with = "report::sig")]
                value: f64,
                #[serde(serialize_with = "report::sig")]
                tail_bound: f64,
                #[serde(serialize_with = "report::sig")]
                target: f64,
                #[serde(serialize_with = "report::sig")]
                slack: f64,
                #[serde(serialize_with = "report::sig")]
                proof_slack: f64,
            }
            let row = Z0Row {
                descriptor: d.label(),
                value: z.value,
                tail_bound: z.tail_bound,
                target: z.target,
                slack: z.slack,
                proof_slack: z.proof_slack,
            };
            emit(&[row], &[], args.common.format, &mut out)?;
            continue;
        }
        let prof = zfin_local_norm(&q)?;
        bad += prof.rows.iter().filter(|r| r.slack.is_some_and(|s| s > 1.0 + 1e-9)).count();
        match args.common.format {
            Format::Csv => write_profile_csv(&prof, &mut out)?,
            Format::Json => {
                #[derive(Serialize)]
                struct Row {
                    descriptor: String,
                    k: u32,
                    beta: u32,
                    #[serde(serialize_with = "report::sig")]
                    sum_abs_hhat: f64,
                    #[serde(serialize_with = "report::sig_opt")]
                    bound: Option<f64>,
                    #[serde(serialize_with = "report::sig_opt")]
                    slack: Option<f64>,
                    n_psi: u64,
                    #[serde(serialize_with = "report::sig")]
                    norm_sum: f64,
                    #[serde(serialize_with = "report::sig")]
                    norm_max: f64,
                    #[serde(serialize_with = "report::sig")]
                    tail_bound: f64,
                }
                let rows: Vec<Row> = prof
                    .rows
                    .iter()
                    .map(|r| Row {
                        descriptor: d.label(),
                        k: r.k,
                        beta: r.beta,
                        n_psi: r.n_psi,
                        sum_abs_hhat: r.sum_abs,
                        bound: r.bound,
                        slack: r.slack,
                        norm_sum: r.norm_sum,
                        norm_max: r.norm_max,
                        tail_bound: r.tail_bound,
                    })
                    .collect();
                emit(&rows, &[], Format::Json, &mut out)?;
            }
        }
    }
    if bad > 0 {
        return Err(Failure::Violation(format!("{bad} rows above their bound")));
    }
    Ok(())
}

fn cmd_tables(args: &TablesArgs) -> Run {
    #[derive(Serialize)]
    struct Row {
        descriptor: String,
        kind: &'static str,
        p: u64,
        e: u32,
        d: u32,
        c_pi: u32,
        c_xi: u32,
        c0: u32,
        vq: u32,
        delta: String,
    }
    let rows: Vec<Row> = selected(&args.desc)?
        .iter()
        .map(|d| {
            let inv = local_invariants(d);
            Row {
                descriptor: d.label(),
                kind: d.kind_tag(),
                p: d.p,
                e: inv.e,
                d: inv.d,
                c_pi: inv.c_pi,
                c_xi: inv.c_xi,
                c0: inv.c0,
                vq: inv.vq,
                delta: format!("{}/{}", inv.delta.num, inv.delta.den),
            }
        })
        .collect();
    let header = ["descriptor", "kind", "p", "e", "d", "c_pi", "c_xi", "c0", "vq", "delta"];
    emit(&rows, &header, args.format, io::stdout().lock())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let r = match &cli.command {
        Command::Hhat(a) => cmd_hhat(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::AgScan(a) => cmd_ag(a),
        Command::Zlocal(a) => cmd_zlocal(a),
        Command::Tables(a) => cmd_tables(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ClosedPipe) => ExitCode::SUCCESS,
        Err(f) => {
            if let Failure::Violation(m) | Failure::Usage(m) | Failure::Budget(m) = &f {
                eprintln!("locsums: {m}");
            }
            ExitCode::from(f.code())
        }
    }
}
