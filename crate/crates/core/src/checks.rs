//! Invariant suites shared by `dirac check` and the test targets.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_rep, relation_defect, trace_basis, trace_basis_explicit, CliffordIndexSet};
use crate::error::{config_err, Result};
use crate::gauge::{block_identity_residual, AbelianN1, AbelianN2, Bump, GaugeField, Gaussian, NonAbelian, Profile};
use crate::linalg::c;
use crate::spectral::identities::{difference_of_powers_check, resolvent_trace_identity};
use crate::spectral::lattice::{
    build_lattice, smooth_vector, v_identity_residuals, Closure, LatticeSpec, Scheme, StorageMode,
};

pub const SUITES: [&str; 6] = [
    "clifford",
    "trace_lemma",
    "difference_of_powers",
    "resolvent_trace",
    "block_identity",
    "v_identities",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn report(suite: &str, value: f64, tolerance: f64, detail: String) -> SuiteReport {
    SuiteReport {
        suite: suite.to_string(),
        passed: value < tolerance,
        value,
        tolerance,
        detail,
    }
}

/// Anticommutation relations for every `k <= 9`.
pub fn clifford_relations() -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        worst = worst.max(relation_defect(&build_rep(k)?));
    }
    Ok(report("clifford", worst, 1e-12, "max |{c_i, c_j} - 2 delta_ij|_F over k <= 9".into()))
}

/// Matrix trace of every `pi_{2m-1}(e_I)`, `m <= 4`, against the closed form.
pub fn trace_lemma() -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for m in 1..=4 {
        for set in CliffordIndexSet::all(2 * m - 1) {
            worst = worst.max((trace_basis_explicit(m, &set)? - trace_basis(m, &set)?).norm());
            count += 1;
        }
    }
    Ok(report("trace_lemma", worst, 1e-12, format!("{count} index sets, m <= 4")))
}

/// 100 random trials over `dim in {2, 4, 8, 16, 32}`, `n <= 4`, two values of `z`.
pub fn difference_of_powers_suite(seed: u64) -> Result<SuiteReport> {
    let dims = [2, 4, 8, 16, 32];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let dim = dims[t % dims.len()];
        let n = 1 + (t / dims.len()) % 4;
        let z = if t % 2 == 0 { c(1.0, 0.0) } else { c(0.5, 0.7) };
        worst = worst.max(difference_of_powers_check(dim, z, 1, n, rng.random())?);
    }
    Ok(report("difference_of_powers", worst, 1e-10, "100 trials, dim <= 32, n <= 4".into()))
}

/// Lattice ratio for `n = m = 1`, `L = 24`, `lambda = 1/2` at `M = 16, 32, 64`.
pub fn resolvent_trace_study() -> Result<(Vec<(usize, f64)>, SuiteReport)> {
    let g = Gaussian {
        center: vec![0.0, 0.0],
        sigma: 1.0,
        integral: 1.0,
    };
    let mut rows = Vec::new();
    for m in [16, 32, 64] {
        let spec = LatticeSpec {
            n: 1,
            rank: 1,
            length: 24.0,
            points: m,
            scheme: Scheme::Fourier,
            closure: Closure::Periodic,
            window: None,
        };
        let r = resolvent_trace_identity(&spec, &g, 0.5, 1)?;
        rows.push((m, r.ratio.unwrap_or(f64::NAN)));
    }
    let last = (rows[2].1 - 1.0).abs();
    let improving = rows.windows(2).all(|w| (w[1].1 - 1.0).abs() < (w[0].1 - 1.0).abs());
    let mut rep = report(
        "resolvent_trace",
        last,
        0.01,
        format!("ratios {rows:?}; improving under refinement: {improving}"),
    );
    rep.passed &= improving;
    Ok((rows, rep))
}

fn sample_points(d: usize, count: usize, seed: u64, spread: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect())
        .collect()
}

/// `K = diag(F/2 - G, -F/2 - G)` pointwise for abelian and non-abelian fields, `n = 1, 2`.
pub fn block_identity_suite(seed: u64) -> Result<SuiteReport> {
    let prof = Profile {
        alpha: 0.3,
        beta: 1.7,
        width: 0.5,
    };
    let fields: Vec<GaugeField> = vec![
        GaugeField::new(Arc::new(AbelianN1 {
            profile: prof,
            phi: Gaussian {
                center: vec![0.1],
                sigma: 1.0,
                integral: 1.0,
            },
        })),
        GaugeField::new(Arc::new(AbelianN2 {
            profile: prof,
            phi1: Gaussian {
                center: vec![0.0, -0.5, 0.0],
                sigma: 1.0,
                integral: 1.0,
            },
            phi3: Gaussian {
                center: vec![0.0, 0.5, 0.2],
                sigma: 0.8,
                integral: 1.5,
            },
        })),
        GaugeField::new(Arc::new(NonAbelian::pauli(1, prof, 1.0))),
        GaugeField::new(Arc::new(NonAbelian::pauli(2, prof, 1.0))),
    ];
    let mut worst: f64 = 0.0;
    for (i, f) in fields.iter().enumerate() {
        let pts = sample_points(2 * f.n(), 50, seed + i as u64, 2.0);
        worst = worst.max(block_identity_residual(f, &pts)?);
    }
    Ok(report("block_identity", worst, 1e-12, "4 fields x 50 points".into()))
}

/// `(Delta_l - Delta) psi = (S +- F/2 + G) psi` on a smooth vector, `n = 1`, `U(2)` bump,
/// `M = 64`, `L = 24`, Fourier derivatives.
pub fn v_identities() -> Result<SuiteReport> {
    let f = GaugeField::new(Arc::new(Bump::pauli(1, 1.0, 3.0)));
    let spec = LatticeSpec {
        n: 1,
        rank: 2,
        length: 24.0,
        points: 64,
        scheme: Scheme::Fourier,
        closure: Closure::Periodic,
        window: None,
    };
    let ops = build_lattice(&spec, &f, StorageMode::MatrixFree)?;
    let (r1, r2) = v_identity_residuals(&ops, &smooth_vector(&ops, 1.5));
    Ok(report(
        "v_identities",
        r1.max(r2),
        1e-8,
        format!("relative residuals {r1:.3e} (V_1), {r2:.3e} (V_2)"),
    ))
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "clifford" => clifford_relations(),
        "trace_lemma" => trace_lemma(),
        "difference_of_powers" => difference_of_powers_suite(seed),
        "resolvent_trace" => resolvent_trace_study().map(|r| r.1),
        "block_identity" => block_identity_suite(seed),
        "v_identities" => v_identities(),
        other => Err(config_err(
            "suite",
            format!("unknown suite `{other}`; expected one of {SUITES:?}"),
        )),
    }
}

pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run_suite(s, seed)).collect()
}

/// `2 pi`, for configs and examples.
pub const TWO_PI: f64 = 2.0 * PI;
