use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dirac_anomaly::cli::{run, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(name = "dirac", about = "Local and spectral anomaly of Dirac-type operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for randomised checks, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the anomaly.
    Anomaly {
        #[command(subcommand)]
        which: AnomalyCmd,
    },
    /// Run invariant suites: `all` or one suite name.
    Check {
        suite: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum AnomalyCmd {
    /// Curvature-integral formula by quadrature.
    Local(Common),
    /// Lattice homological index and lambda extrapolation.
    Spectral(Common),
    /// Both, plus a comparison record.
    Compare(Common),
}

const DEFAULT_CHECKS: &str = "mode = \"checks\"\nn = 1\nrank = 1\nm = 1\n[field]\nfamily = \"zero\"\n";

fn load(common: &Common, required: bool) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None if required => return Err("--config is required".into()),
        None => ExperimentConfig::from_toml(DEFAULT_CHECKS).map_err(|e| e.to_string())?,
    };
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut cfg, mode) = match &cli.cmd {
        Cmd::Anomaly { which } => {
            let (common, mode) = match which {
                AnomalyCmd::Local(c) => (c, Mode::Local),
                AnomalyCmd::Spectral(c) => (c, Mode::Spectral),
                AnomalyCmd::Compare(c) => (c, Mode::Both),
            };
            match load(common, true) {
                Ok(c) => (c, mode),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        Cmd::Check { suite, common } => match load(common, false) {
            Ok(mut c) => {
                c.checks = if suite == "all" { Vec::new() } else { vec![suite.clone()] };
                (c, Mode::Checks)
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
    };
    cfg.mode = mode;
    match run(&cfg) {
        Ok(out) => {
            if let Some(r) = &out.local {
                println!("local     {:+.12} (error {:.1e})", r.value, r.error_estimate);
            }
            if let Some(r) = &out.spectral {
                println!("spectral  {:+.6} (error {:.1e})", r.value, r.error_estimate);
            }
            if let Some(c) = &out.comparison {
                println!("abs_diff  {:.3e}  rel_diff {:.3e}", c.abs_diff, c.rel_diff);
            }
            if let Some(ch) = &out.checks {
                for s in &ch.suites {
                    let tag = if s.passed { "PASS" } else { "FAIL" };
                    println!("{tag} {:<22} {:.3e} < {:.0e}  {}", s.suite, s.value, s.tolerance, s.detail);
                }
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
