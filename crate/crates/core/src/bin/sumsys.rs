//! `sumsys <shale|kernel|units|invariants> [--config file.toml] [overrides]`
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure or exceeded hard limit.
//! `SUMSYS_THREADS` caps the worker pool.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use sumsys_core::config::{self, InvariantsConfig, KernelChoice, KernelConfig, ShaleConfig, UnitsConfig};
use sumsys_core::suite::{run_invariant_suite, run_kernel_suite, run_shale_suite, run_units_suite, ReportBundle};
use sumsys_core::{Error, Result};

#[derive(Parser)]
#[command(name = "sumsys", version, about = "Sum systems, the Shale map and type invariants at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with the suite parameters; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory (default reports/<command>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Vacuum overlaps, functoriality, intertwining, adjoint and weak-continuity tables.
    Shale {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        #[arg(long)]
        vacuum_cutoff: Option<usize>,
        #[arg(long)]
        hard_limit: Option<f64>,
    },
    /// Gram spectra, defect scans, Fourier trend and the existence series.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        gram_h: Option<f64>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        drift_limit: Option<f64>,
    },
    /// Real and imaginary units, pairings, y' boundedness and the existence series.
    Units {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_kernel)]
        kernel: Option<KernelChoice>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        hard_limit: Option<f64>,
    },
    /// Liminf/limsup diagnostics and verdicts on a sequence of elementary sets.
    Invariants {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        keep: Option<f64>,
        #[arg(long)]
        liminf_tol: Option<f64>,
        #[arg(long)]
        decay_ratio: Option<f64>,
        #[arg(long)]
        plateau_tol: Option<f64>,
    },
}

fn parse_kernel(s: &str) -> std::result::Result<KernelChoice, String> {
    match s {
        "standard-l2" => Ok(KernelChoice::StandardL2),
        "tsirelson" => Ok(KernelChoice::Tsirelson),
        _ => Err(format!("unknown kernel {s}; expected standard-l2 or tsirelson")),
    }
}

fn load<T: DeserializeOwned + Default>(common: &Common) -> Result<T> {
    match &common.config {
        Some(path) => config::load(path),
        None => Ok(T::default()),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<(ReportBundle, PathBuf)> {
    let (bundle, common) = match cli.command {
        Command::Shale { common, dims, pairs, cutoffs, vacuum_cutoff, hard_limit } => {
            let mut c: ShaleConfig = load(&common)?;
            c.seed = common.seed.or(c.seed);
            set(&mut c.dims, dims);
            set(&mut c.pairs, pairs);
            set(&mut c.cutoffs, cutoffs);
            set(&mut c.vacuum_cutoff, vacuum_cutoff);
            c.hard_limit = hard_limit.or(c.hard_limit);
            (run_shale_suite(&c)?, common)
        }
        Command::Kernel { common, alpha, eps, gram_h, n_max, drift_limit } => {
            let mut c: KernelConfig = load(&common)?;
            c.seed = common.seed.or(c.seed);
            set(&mut c.alpha, alpha);
            c.eps = eps.or(c.eps);
            set(&mut c.gram_h, gram_h);
            set(&mut c.n_max, n_max);
            set(&mut c.drift_limit, drift_limit);
            (run_kernel_suite(&c)?, common)
        }
        Command::Units { common, kernel, alpha, eps, h, n_max, hard_limit } => {
            let mut c: UnitsConfig = load(&common)?;
            c.seed = common.seed.or(c.seed);
            set(&mut c.kernel.variant, kernel);
            set(&mut c.kernel.alpha, alpha);
            c.kernel.eps = eps.or(c.kernel.eps);
            set(&mut c.h, h);
            set(&mut c.n_max, n_max);
            c.hard_limit = hard_limit.or(c.hard_limit);
            (run_units_suite(&c)?, common)
        }
        Command::Invariants { common, alphas, h, depth, keep, liminf_tol, decay_ratio, plateau_tol } => {
            let mut c: InvariantsConfig = load(&common)?;
            c.seed = common.seed.or(c.seed);
            set(&mut c.alphas, alphas);
            set(&mut c.h, h);
            set(&mut c.depth, depth);
            set(&mut c.keep, keep);
            set(&mut c.thresholds.liminf_tol, liminf_tol);
            set(&mut c.thresholds.decay_ratio, decay_ratio);
            set(&mut c.thresholds.plateau_tol, plateau_tol);
            (run_invariant_suite(&c)?, common)
        }
    };
    let out = common.out.unwrap_or_else(|| config::default_out(&bundle.command));
    bundle.write(&out)?;
    Ok((bundle, out))
}

fn threads() -> Result<()> {
    let Ok(value) = std::env::var("SUMSYS_THREADS") else { return Ok(()) };
    let n: usize = value.parse().map_err(|_| Error::Config(format!("SUMSYS_THREADS={value} is not a count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads().and_then(|()| run(cli));
    match result {
        Ok((bundle, out)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}: {} tables written to {}", bundle.command, bundle.tables.len(), out.display());
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&bundle.verdicts).unwrap_or_default());
            match bundle.quality_failure() {
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
