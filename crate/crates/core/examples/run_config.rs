//! Drive an experiment from a TOML config, as the `dirac` binary does.
//!
//! `cargo run --release --example run_config -- configs/n1_local.toml`

use std::path::PathBuf;

use dirac_anomaly::cli::{run, ExperimentConfig};

fn main() -> dirac_anomaly::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/n1_local.toml")));
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.output.dir = std::env::temp_dir().join("dirac_run_config");
    println!("config hash {}", cfg.config_hash());
    let out = run(&cfg)?;
    if let Some(r) = out.local {
        println!("local    {:+.12}", r.value);
    }
    if let Some(r) = out.spectral {
        println!("spectral {:+.6} +- {:.1e}", r.value, r.error_estimate);
    }
    for f in out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
