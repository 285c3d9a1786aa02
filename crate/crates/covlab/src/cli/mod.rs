//! Command-line front end: config-driven simulation grids, rate tables,
//! lower-bound tables, and the self-verification suites.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 runtime scenario
//! error, 4 verification failure.

pub mod config;
pub mod rates;
pub mod simulate;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::bounds::{
    assouad_frobenius_bound, lecam_two_point, spectral_lower_bound, xi_exact, HypercubeSpec,
};
use crate::error::Result;

/// Environment variable overriding every scenario's base seed.
pub const SEED_ENV_VAR: &str = "COVLAB_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "covlab",
    about = "Covariance posterior risk laboratory",
    version
)]
struct Cli {
    /// Override every scenario's base seed (wins over the environment).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario grid from a JSON config and write a CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (falls back to the config's output_path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count (wins over the config; default auto).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit ln(risk) ~ ln(n) rate exponents over a simulate CSV.
    Rates {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated grouping columns, e.g. "p,loss_family".
        #[arg(long)]
        group: String,
        /// Optional CSV output for the fitted table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print minimax lower bounds for one (p, n, tau) configuration.
    Bounds {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau1: f64,
        #[arg(long)]
        tau2: f64,
        /// Spectral perturbation constant.
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        /// Hypercube tuning constant for the Frobenius bound.
        #[arg(long, default_value_t = 1.0 / 3.0)]
        c1: f64,
    },
    /// Run self-verification suites ("all" or one suite by name).
    Verify {
        suite: Option<String>,
        /// JSON report path.
        #[arg(long, default_value = "covlab_verify.json")]
        report: PathBuf,
    },
}

/// Entry point for the binary: parses real process arguments.
pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

/// Parses and executes a full command line, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text; --help and --version
            // are successful outcomes, anything else is a usage error.
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let seed_override = match resolve_seed(cli.seed) {
        Ok(s) => s,
        Err(message) => {
            eprintln!("error: {message}");
            return EXIT_CONFIG;
        }
    };
    match cli.command {
        Command::Simulate {
            config,
            out,
            threads,
        } => cmd_simulate(&config, out.as_deref(), threads, seed_override),
        Command::Rates { input, group, out } => cmd_rates(&input, &group, out.as_deref()),
        Command::Bounds {
            p,
            n,
            tau1,
            tau2,
            c,
            c1,
        } => cmd_bounds(p, n, tau1, tau2, c, c1),
        Command::Verify { suite, report } => cmd_verify(suite.as_deref(), &report, seed_override),
    }
}

/// Flag wins over environment; absent both means "use config seeds".
fn resolve_seed(flag: Option<u64>) -> std::result::Result<Option<u64>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("{SEED_ENV_VAR} must be an unsigned integer, got \"{text}\"")),
        Err(_) => Ok(None),
    }
}

fn cmd_simulate(
    config_path: &std::path::Path,
    out: Option<&std::path::Path>,
    threads_flag: Option<usize>,
    seed_override: Option<u64>,
) -> i32 {
    let (config, mut cells) = match config::load_config(config_path) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = seed_override {
        for cell in &mut cells {
            cell.scenario.base_seed = seed;
        }
    }
    let out_path: PathBuf = match out {
        Some(path) => path.to_path_buf(),
        None => match &config.output_path {
            Some(path) => PathBuf::from(path),
            None => {
                eprintln!("error: no output path (pass --out or set output_path in the config)");
                return EXIT_CONFIG;
            }
        },
    };
    let threads = match threads_flag {
        Some(n) if n >= 1 => Some(n),
        Some(n) => {
            eprintln!("error: --threads must be >= 1, got {n}");
            return EXIT_CONFIG;
        }
        None => match config.threads.as_ref().map(|t| t.resolve()) {
            Some(Ok(resolved)) => resolved,
            Some(Err(e)) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
            None => None,
        },
    };
    let run_result = run_in_pool(threads, || simulate::run_simulate(&cells, &out_path));
    match run_result {
        Ok(summary) => {
            println!(
                "wrote {} rows ({} error rows) to {}",
                summary.rows,
                summary.error_rows,
                out_path.display()
            );
            if summary.error_rows > 0 {
                EXIT_RUNTIME
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Runs work inside a dedicated thread pool so the thread count is fully
/// determined by flags/config rather than process-global state.
fn run_in_pool<T: Send>(
    threads: Option<usize>,
    work: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| crate::error::Error::config(format!("thread pool setup failed: {e}")))?;
    pool.install(work)
}

fn cmd_rates(
    input: &std::path::Path,
    group: &str,
    out: Option<&std::path::Path>,
) -> i32 {
    let rates = match rates::run_rates(input, group) {
        Ok(rates) => rates,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    print!("{}", rates::format_rates(&rates));
    if let Some(out_path) = out {
        if let Err(e) = rates::write_rates_csv(&rates, out_path) {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    }
    EXIT_OK
}

fn cmd_bounds(p: usize, n: usize, tau1: f64, tau2: f64, c: f64, c1: f64) -> i32 {
    let p_eff = p.min(n);
    let eps = c * (p_eff as f64 / n as f64).sqrt();
    let spectral = match spectral_lower_bound(p, n, tau1, tau2, c) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let xi = match xi_exact(p_eff, n, eps) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let lecam = lecam_two_point(0.0, tau2 * eps * 0.5, xi);
    let spec = HypercubeSpec {
        p,
        n,
        tau: tau2,
        c1,
    };
    let assouad = match assouad_frobenius_bound(&spec) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let k = p.min((n as f64).sqrt().floor() as usize);
    println!("p {p}");
    println!("n {n}");
    println!("p_eff {p_eff}");
    println!("eps {eps}");
    println!("xi {xi}");
    println!("spectral_lower_bound {spectral}");
    println!("lecam_equivalent {lecam}");
    println!("assouad_k {k}");
    println!("assouad_frobenius_bound {assouad}");
    EXIT_OK
}

fn cmd_verify(
    suite: Option<&str>,
    report_path: &std::path::Path,
    seed_override: Option<u64>,
) -> i32 {
    let suite = suite.unwrap_or("all");
    let seed = seed_override.unwrap_or(verify::DEFAULT_VERIFY_SEED);
    let report = match verify::run_suite(suite, seed) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    print!("{}", report.render_text());
    if let Err(e) = verify::write_report(&report, report_path) {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
