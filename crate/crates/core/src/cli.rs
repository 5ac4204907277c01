//! Experiment configuration and the runner behind the `dirac` binary.
//!
//! A config is one TOML file describing one experiment:
//!
//! ```toml
//! mode = "both"
//! n = 1
//! rank = 1
//! m = 1
//!
//! [field]
//! family = "abelian_n1"
//! alpha = 0.0
//! beta = 6.283185307179586
//! width = 0.2
//! sigma = 1.0
//! integral = 1.0
//!
//! [lattice]
//! length = 24.0
//! points = 48
//!
//! [lambda_grid]
//! min = 0.5
//! max = 3.9
//! count = 16
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anomaly::{anomaly_local, AnomalyResult, Diagnostics};
use crate::checks::{run_all, run_suite, SuiteReport};
use crate::error::{config_err, Error, Result};
use crate::gauge::{
    AbelianN1, AbelianN2, Bump, GaugeField, Gaussian, NonAbelian, Profile, PureGauge, Sampled, Zero,
};
use crate::quadrature::QuadSpec;
use crate::spectral::extrapolate::{anomaly_spectral, FitModel, LambdaGrid};
use crate::spectral::lattice::{build_lattice, Closure, LatticeSpec, Scheme, StorageMode, DENSE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Local,
    Spectral,
    Both,
    Checks,
}

fn default_center1() -> Vec<f64> {
    vec![0.0]
}

fn default_one() -> f64 {
    1.0
}

/// Built-in field families, or a sampled field read from CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `a_1 = h(x_2) phi(x_1)`.
    AbelianN1 {
        alpha: f64,
        beta: f64,
        width: f64,
        #[serde(default = "default_one")]
        sigma: f64,
        #[serde(default = "default_one")]
        integral: f64,
        #[serde(default = "default_center1")]
        center: Vec<f64>,
    },
    /// `a_1 = h(x_4) phi_1`, `a_3 = h(x_4) phi_3`.
    AbelianN2 {
        alpha: f64,
        beta: f64,
        width: f64,
        phi1: Gaussian,
        phi3: Gaussian,
    },
    /// `SU(2)` Pauli example.
    NonAbelian {
        alpha: f64,
        beta: f64,
        width: f64,
        #[serde(default = "default_one")]
        sigma: f64,
    },
    /// Smooth `U(2)` Gaussian bump.
    Bump {
        #[serde(default = "default_one")]
        sigma: f64,
        #[serde(default = "default_one")]
        strength: f64,
    },
    PureGauge { chi: Gaussian },
    Zero,
    Sampled { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub length: f64,
    pub points: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_closure")]
    pub closure: Closure,
    #[serde(default = "default_window")]
    pub window: Option<f64>,
    #[serde(default = "default_storage")]
    pub storage: StorageMode,
}

fn default_scheme() -> Scheme {
    Scheme::Fourier
}
fn default_closure() -> Closure {
    Closure::Mirror
}
fn default_window() -> Option<f64> {
    Some(0.45)
}
fn default_storage() -> StorageMode {
    StorageMode::Dense
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_prefix() -> String {
    "run".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            prefix: default_prefix(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub rank: usize,
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    pub field: FieldSpec,
    #[serde(default)]
    pub quadrature: QuadSpec,
    pub lattice: Option<LatticeConfig>,
    pub lambda_grid: Option<LambdaGrid>,
    #[serde(default)]
    pub fit: FitModel,
    #[serde(default)]
    pub output: OutputConfig,
    /// Suites for `mode = "checks"`; empty runs all of them.
    #[serde(default)]
    pub checks: Vec<String>,
}

/// 1-based line of the first `key =` assignment in `src`, if any.
fn line_of(src: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    src.lines().position(|l| {
        let t = l.trim_start();
        t.starts_with(leaf) && t[leaf.len()..].trim_start().starts_with('=')
    })
    .map(|i| i + 1)
}

fn with_line(src: &str, e: Error) -> Error {
    match e {
        Error::Config { field, msg } => {
            let msg = match line_of(src, &field) {
                Some(l) => format!("line {l}: {msg}"),
                None => msg,
            };
            Error::Config { field, msg }
        }
        other => other,
    }
}

impl ExperimentConfig {
    /// Parse and validate; validation errors carry the line of the offending key.
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate().map_err(|e| with_line(src, e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn lattice_spec(&self) -> Option<LatticeSpec> {
        self.lattice.as_ref().map(|l| LatticeSpec {
            n: self.n,
            rank: self.rank,
            length: l.length,
            points: l.points,
            scheme: l.scheme,
            closure: l.closure,
            window: l.window,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.n) {
            return Err(config_err("n", "n must be 1 or 2"));
        }
        if self.m < self.n {
            return Err(config_err("m", format!("m = {} must be at least n = {}", self.m, self.n)));
        }
        if self.rank == 0 {
            return Err(config_err("rank", "rank must be positive"));
        }
        let expect = |n: usize, rank: usize| -> Result<()> {
            if self.n != n || self.rank != rank {
                return Err(config_err(
                    "family",
                    format!("this family has n = {n}, N = {rank}; config says n = {}, N = {}", self.n, self.rank),
                ));
            }
            Ok(())
        };
        match &self.field {
            FieldSpec::AbelianN1 { width, sigma, center, .. } => {
                expect(1, 1)?;
                if *width <= 0.0 || *sigma <= 0.0 || center.len() != 1 {
                    return Err(config_err("width", "need width, sigma > 0 and a 1-d center"));
                }
            }
            FieldSpec::AbelianN2 { width, phi1, phi3, .. } => {
                expect(2, 1)?;
                if *width <= 0.0 || phi1.center.len() != 3 || phi3.center.len() != 3 {
                    return Err(config_err("width", "need width > 0 and 3-d Gaussian centers"));
                }
            }
            FieldSpec::NonAbelian { width, .. } => {
                expect(self.n, 2)?;
                if *width <= 0.0 {
                    return Err(config_err("width", "width must be positive"));
                }
            }
            FieldSpec::Bump { sigma, .. } => {
                expect(self.n, 2)?;
                if *sigma <= 0.0 {
                    return Err(config_err("sigma", "sigma must be positive"));
                }
            }
            FieldSpec::PureGauge { chi } => {
                expect(self.n, 1)?;
                if chi.center.len() != 2 * self.n - 1 {
                    return Err(config_err("center", "chi lives on the first 2n - 1 coordinates"));
                }
            }
            FieldSpec::Zero | FieldSpec::Sampled { .. } => {}
        }
        let q = &self.quadrature;
        if q.base_points == 0 || q.max_levels < 2 || !(q.tol > 0.0) {
            return Err(config_err("tol", "quadrature needs base_points > 0, max_levels >= 2, tol > 0"));
        }
        if matches!(self.mode, Mode::Spectral | Mode::Both) {
            let spec = self
                .lattice_spec()
                .ok_or_else(|| config_err("lattice", "spectral modes need a [lattice] table"))?;
            spec.validate(None)?;
            let l = self.lattice.as_ref().unwrap();
            if l.storage == StorageMode::Dense && spec.dim() > DENSE_LIMIT {
                return Err(config_err(
                    "storage",
                    format!("dense storage needs dim <= {DENSE_LIMIT}, lattice has {}", spec.dim()),
                ));
            }
            let g = self
                .lambda_grid
                .ok_or_else(|| config_err("lambda_grid", "spectral modes need a [lambda_grid] table"))?;
            if !(g.min > 0.0 && g.max >= g.min && g.count >= 1) {
                return Err(config_err("min", "need 0 < min <= max and count >= 1"));
            }
            if g.max > spec.lambda_max() * (1.0 + 1e-12) {
                return Err(config_err(
                    "max",
                    format!(
                        "lambda max {} exceeds the validity window 0.1 (pi M / L)^2 = {:.4}",
                        g.max,
                        spec.lambda_max()
                    ),
                ));
            }
            if g.count < self.fit.terms.len() {
                return Err(config_err("count", "fewer grid points than fit terms"));
            }
        }
        for s in &self.checks {
            if !crate::checks::SUITES.contains(&s.as_str()) {
                return Err(config_err("checks", format!("unknown suite `{s}`")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the parsed config. The `[output]` table does
    /// not enter, so `--out` leaves the hash unchanged.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let canon = serde_json::to_string(&c).expect("config serialises");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_field(&self) -> Result<GaugeField> {
        let prof = |alpha: f64, beta: f64, width: f64| Profile { alpha, beta, width };
        let pot: Arc<dyn crate::gauge::Potential> = match &self.field {
            FieldSpec::AbelianN1 {
                alpha,
                beta,
                width,
                sigma,
                integral,
                center,
            } => Arc::new(AbelianN1 {
                profile: prof(*alpha, *beta, *width),
                phi: Gaussian {
                    center: center.clone(),
                    sigma: *sigma,
                    integral: *integral,
                },
            }),
            FieldSpec::AbelianN2 {
                alpha,
                beta,
                width,
                phi1,
                phi3,
            } => Arc::new(AbelianN2 {
                profile: prof(*alpha, *beta, *width),
                phi1: phi1.clone(),
                phi3: phi3.clone(),
            }),
            FieldSpec::NonAbelian {
                alpha,
                beta,
                width,
                sigma,
            } => Arc::new(NonAbelian::pauli(self.n, prof(*alpha, *beta, *width), *sigma)),
            FieldSpec::Bump { sigma, strength } => Arc::new(Bump::pauli(self.n, *sigma, *strength)),
            FieldSpec::PureGauge { chi } => Arc::new(PureGauge {
                n: self.n,
                chi: chi.clone(),
            }),
            FieldSpec::Zero => Arc::new(Zero {
                n: self.n,
                rank: self.rank,
            }),
            FieldSpec::Sampled { path } => {
                let s = Sampled::from_csv(&fs::read_to_string(path)?)?;
                if s.n != self.n || s.rank != self.rank {
                    return Err(config_err("path", "sampled field disagrees with n or N"));
                }
                Arc::new(s)
            }
        };
        Ok(GaugeField::new(pot))
    }
}

/// The JSON record written for every anomaly computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: crate::anomaly::Method,
    pub n: usize,
    #[serde(rename = "N")]
    pub rank: usize,
    pub m: usize,
    pub value: f64,
    pub error_estimate: f64,
    pub config_hash: String,
    pub diagnostics: Diagnostics,
}

impl Record {
    pub fn new(r: AnomalyResult, hash: &str) -> Self {
        Self {
            method: r.method,
            n: r.n,
            rank: r.rank,
            m: r.degree_m,
            value: r.value,
            error_estimate: r.error_estimate,
            config_hash: hash.to_string(),
            diagnostics: r.diagnostics,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub local: f64,
    pub spectral: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub spectral_error: f64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChecksRecord {
    pub seed: u64,
    pub config_hash: String,
    pub suites: Vec<SuiteReport>,
    pub all_passed: bool,
}

/// Everything a run produced, also written to `output.dir`.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub local: Option<Record>,
    pub spectral: Option<Record>,
    pub comparison: Option<Comparison>,
    pub checks: Option<ChecksRecord>,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    /// Whether every requested computation succeeded and every check passed.
    pub fn success(&self) -> bool {
        self.checks.as_ref().is_none_or(|c| c.all_passed)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn write_sweep_csv(path: &Path, result: &AnomalyResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_record(["lambda", "m", "value", "fitted", "cg_iters_total", "wall_time"])
        .map_err(|e| Error::Parse(e.to_string()))?;
    if let Diagnostics::Sweep { rows, .. } = &result.diagnostics {
        for r in rows {
            w.write_record([
                format!("{:.17e}", r.lambda),
                r.m.to_string(),
                format!("{:.17e}", r.value),
                format!("{:.17e}", r.fitted),
                r.cg_iters_total.to_string(),
                format!("{:.3}", r.wall_time),
            ])
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Run one experiment and write its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let hash = cfg.config_hash();
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let file = |suffix: &str| dir.join(format!("{}_{suffix}", cfg.output.prefix));
    let mut out = RunOutput::default();

    if cfg.mode == Mode::Checks {
        let suites = if cfg.checks.is_empty() {
            run_all(cfg.seed)?
        } else {
            cfg.checks
                .iter()
                .map(|s| run_suite(s, cfg.seed))
                .collect::<Result<Vec<_>>>()?
        };
        let rec = ChecksRecord {
            seed: cfg.seed,
            config_hash: hash.clone(),
            all_passed: suites.iter().all(|s| s.passed),
            suites,
        };
        let p = file("checks.json");
        write_json(&p, &rec)?;
        out.files.push(p);
        out.checks = Some(rec);
        return Ok(out);
    }

    let field = cfg.build_field()?;
    if matches!(cfg.mode, Mode::Local | Mode::Both) {
        let r = anomaly_local(&field, cfg.m, &cfg.quadrature)?;
        let rec = Record::new(r, &hash);
        let p = file("local.json");
        write_json(&p, &rec)?;
        out.files.push(p);
        out.local = Some(rec);
    }
    if matches!(cfg.mode, Mode::Spectral | Mode::Both) {
        let spec = cfg.lattice_spec().expect("validated");
        let storage = cfg.lattice.as_ref().unwrap().storage;
        let ops = build_lattice(&spec, &field, storage)?;
        let grid = cfg.lambda_grid.expect("validated").points();
        let r = anomaly_spectral(&ops, cfg.m, &grid, &cfg.fit)?;
        let p = file("sweep.csv");
        write_sweep_csv(&p, &r)?;
        out.files.push(p);
        let rec = Record::new(r, &hash);
        let p = file("spectral.json");
        write_json(&p, &rec)?;
        out.files.push(p);
        out.spectral = Some(rec);
    }
    if let (Some(l), Some(s)) = (&out.local, &out.spectral) {
        let abs = (l.value - s.value).abs();
        let cmp = Comparison {
            local: l.value,
            spectral: s.value,
            abs_diff: abs,
            rel_diff: abs / l.value.abs().max(f64::MIN_POSITIVE),
            spectral_error: s.error_estimate,
            config_hash: hash.clone(),
        };
        let p = file("compare.json");
        write_json(&p, &cmp)?;
        out.files.push(p);
        out.comparison = Some(cmp);
    }
    Ok(out)
}
