//! Command-line front end. Exit codes: 0 success, 2 bad parameters,
//! 3 I/O failure, 4 numerical or backend failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::automata::korshunov_report;
use crate::curve::{solve_completion_curve, DEFAULT_STEP};
use crate::sampler::{simulate_batch, BatchConfig};
use crate::stirling::{
    chi, ldp_limit, psi_log, stirling_exact, surjection_log_probability, transition_error, BackendKind,
};
use crate::Error;

/// Environment variable naming the directory for file outputs when `--out`
/// is not given.
pub const OUT_DIR_ENV: &str = "IMPATIENT_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "impatient", version, about = "The coupon collector conditioned to finish early")]
pub struct Cli {
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the limiting completion curve from x = 1 + nu down to x = a.
    Curve {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact S(m, l) with its saddle point approximation, or a table of
    /// scaled errors with --verify.
    Stirling {
        m: Option<u64>,
        l: Option<u64>,
        #[arg(long, conflicts_with_all = ["m", "l"])]
        verify: bool,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400, 800])]
        ls: Vec<u64>,
    },
    /// Sup-distance of conditioned trajectories to the limit curve.
    Simulate {
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0.2)]
        a: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo density of accessible transition structures.
    Korshunov {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// (1/n) ln P(T_n <= (1 + nu) n) against its limit.
    Ldp {
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400])]
        n: Vec<u64>,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Exact,
    Logdp,
    Saddle,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Exact => BackendKind::Exact,
            Backend::Logdp => BackendKind::LogDp,
            Backend::Saddle => BackendKind::Saddle,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
            Failure::Lib(e) if e.is_usage() => EXIT_USAGE,
            Failure::Lib(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
            Failure::Usage(s) => write!(f, "{s}"),
        }
    }
}

type Out<T> = std::result::Result<T, Failure>;

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn open_out(out: Option<&Path>, default_name: &str) -> Out<Box<dyn Write>> {
    let path = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(default_name)),
    };
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(&p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(w: &mut dyn Write, value: &impl Serialize) -> Out<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Out<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_curve(format: Format, nu: f64, a: f64, step: f64, out: Option<&Path>) -> Out<()> {
    let curve = solve_completion_curve(nu, a, step)?;
    let mut w = open_out(out, &format!("curve_nu{nu}_a{a}.{}", ext(format)))?;
    match format {
        Format::Csv => curve.write_csv(&mut w)?,
        Format::Json => {
            let points: Vec<_> = curve
                .points
                .iter()
                .map(|&(x, y)| json!({"x": x, "y": y, "lambda": x / y - 1.0}))
                .collect();
            write_json(
                &mut w,
                &json!({
                    "nu": nu,
                    "a": a,
                    "step": step,
                    "richardson_deviation": curve.richardson_deviation,
                    "points": points,
                }),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

#[derive(Debug, Serialize)]
struct StirlingRow {
    m: u64,
    l: u64,
    /// Decimal digits of the exact value.
    stirling: String,
    ln_psi: Option<f64>,
    chi: Option<f64>,
    l_chi: Option<f64>,
}

fn cmd_stirling_single(format: Format, m: u64, l: u64) -> Out<()> {
    let s = stirling_exact(m, l)?;
    let (ln_psi, chi_v) = if l >= 1 && l < m {
        (Some(psi_log(m, l)?), Some(chi(m, l)?))
    } else {
        (None, None)
    };
    let row = StirlingRow {
        m,
        l,
        stirling: s.to_string(),
        ln_psi,
        chi: chi_v,
        l_chi: chi_v.map(|c| l as f64 * c),
    };
    let mut w = open_out(None, "unused")?;
    match format {
        Format::Csv => {
            let opt = |v: Option<f64>| v.map(fmt_f).unwrap_or_default();
            writeln!(w, "m,l,stirling,ln_psi,chi,l_chi")?;
            writeln!(w, "{m},{l},{},{},{},{}", row.stirling, opt(row.ln_psi), opt(row.chi), opt(row.l_chi))?;
        }
        Format::Json => write_json(&mut w, &row)?,
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    lambda: f64,
    l: u64,
    m: u64,
    chi: f64,
    l_abs_chi: f64,
    transition_error: f64,
    l_transition_error: f64,
}

fn cmd_stirling_verify(format: Format, lambdas: &[f64], ls: &[u64]) -> Out<()> {
    let mut grid = Vec::new();
    for &lambda in lambdas {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Failure::Usage(format!("lambda must be positive, got {lambda}")));
        }
        for &l in ls {
            if l < 1 {
                return Err(Failure::Usage("l must be positive".into()));
            }
            let m = ((1.0 + lambda) * l as f64).round() as u64;
            if m <= l {
                return Err(Failure::Usage(format!("lambda {lambda} too small for l={l}")));
            }
            grid.push((lambda, l, m));
        }
    }
    let rows = grid
        .par_iter()
        .map(|&(lambda, l, m)| {
            let c = chi(m, l)?;
            let t = transition_error(m, l)?;
            Ok(VerifyRow {
                lambda,
                l,
                m,
                chi: c,
                l_abs_chi: l as f64 * c.abs(),
                transition_error: t,
                l_transition_error: l as f64 * t,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let max_l_chi = rows.iter().map(|r| r.l_abs_chi).fold(0.0, f64::max);
    let max_l_t = rows.iter().map(|r| r.l_transition_error).fold(0.0, f64::max);
    let mut w = open_out(None, "unused")?;
    match format {
        Format::Csv => {
            writeln!(w, "lambda,l,m,chi,l_abs_chi,transition_error,l_transition_error")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    fmt_f(r.lambda),
                    r.l,
                    r.m,
                    fmt_f(r.chi),
                    fmt_f(r.l_abs_chi),
                    fmt_f(r.transition_error),
                    fmt_f(r.l_transition_error)
                )?;
            }
            writeln!(w, "# max_l_abs_chi={}", fmt_f(max_l_chi))?;
            writeln!(w, "# max_l_transition_error={}", fmt_f(max_l_t))?;
        }
        Format::Json => write_json(
            &mut w,
            &json!({
                "rows": rows,
                "max_l_abs_chi": max_l_chi,
                "max_l_transition_error": max_l_t,
            }),
        )?,
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    format: Format,
    big_n: u64,
    n: u64,
    trials: u64,
    a: f64,
    seed: u64,
    backend: Option<Backend>,
    step: f64,
    jobs: usize,
    out: Option<&Path>,
) -> Out<()> {
    let cfg = BatchConfig { backend: backend.map(Into::into), step, ..BatchConfig::new(big_n, n, trials, a, seed) };
    let report = with_jobs(jobs, || simulate_batch(&cfg))??;
    let name = format!("simulate_N{big_n}_n{n}_seed{seed}.{}", ext(format));
    let mut w = open_out(out, &name)?;
    match format {
        Format::Json => write_json(&mut w, &report)?,
        Format::Csv => {
            writeln!(w, "trial,sup_distance")?;
            for (i, d) in report.sup_distances.iter().enumerate() {
                writeln!(w, "{i},{}", fmt_f(*d))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_korshunov(format: Format, k: u32, n: u32, trials: u64, seed: u64, jobs: usize) -> Out<()> {
    let report = with_jobs(jobs, || korshunov_report(k, n, trials, seed))??;
    let mut w = open_out(None, "unused")?;
    match format {
        Format::Json => write_json(&mut w, &report)?,
        Format::Csv => {
            writeln!(w, "k,n,trials,seed,estimate,stderr,korshunov,pollaczek_pi0")?;
            writeln!(
                w,
                "{k},{n},{trials},{seed},{},{},{},{}",
                fmt_f(report.estimate),
                fmt_f(report.stderr),
                fmt_f(report.korshunov),
                fmt_f(report.pollaczek_pi0)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct LdpRow {
    n: u64,
    #[serde(rename = "N")]
    big_n: u64,
    ln_p_over_n: f64,
    limit: f64,
    gap: f64,
}

fn cmd_ldp(format: Format, ns: &[u64], nu: f64) -> Out<()> {
    let limit = ldp_limit(nu)?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Failure::Usage("n values must be positive".into()));
    }
    let rows = ns
        .iter()
        .map(|&n| {
            let big_n = ((1.0 + nu) * n as f64).floor() as u64;
            let lp = surjection_log_probability(big_n, n)? / n as f64;
            Ok(LdpRow { n, big_n, ln_p_over_n: lp, limit, gap: (lp - limit).abs() })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut w = open_out(None, "unused")?;
    match format {
        Format::Json => write_json(&mut w, &json!({"nu": nu, "rows": rows}))?,
        Format::Csv => {
            writeln!(w, "n,N,ln_p_over_n,limit,gap")?;
            for r in &rows {
                writeln!(w, "{},{},{},{},{}", r.n, r.big_n, fmt_f(r.ln_p_over_n), fmt_f(r.limit), fmt_f(r.gap))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Out<()> {
    let f = cli.format;
    match cli.command {
        Command::Curve { nu, a, step, out } => cmd_curve(f.unwrap_or(Format::Csv), nu, a, step, out.as_deref()),
        Command::Stirling { m, l, verify, lambdas, ls } => {
            let f = f.unwrap_or(Format::Csv);
            match (verify, m, l) {
                (true, _, _) => cmd_stirling_verify(f, &lambdas, &ls),
                (false, Some(m), Some(l)) => cmd_stirling_single(f, m, l),
                _ => Err(Failure::Usage("give both m and l, or --verify".into())),
            }
        }
        Command::Simulate { big_n, n, trials, a, seed, backend, step, jobs, out } => cmd_simulate(
            f.unwrap_or(Format::Json),
            big_n,
            n,
            trials,
            a,
            seed,
            backend,
            step,
            jobs,
            out.as_deref(),
        ),
        Command::Korshunov { k, n, trials, seed, jobs } => {
            cmd_korshunov(f.unwrap_or(Format::Json), k, n, trials, seed, jobs)
        }
        Command::Ldp { n, nu } => cmd_ldp(f.unwrap_or(Format::Csv), &n, nu),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr as a single line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        // the reader went away (e.g. `| head`)
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
