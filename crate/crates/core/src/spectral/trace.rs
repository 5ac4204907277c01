//! Windowed homological index `lambda^m Tr chi[(lambda + Delta_2)^{-m} - (lambda + Delta_1)^{-m}]`.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{inner, norm, LatticeOperatorSet, Op, StorageMode};
use crate::error::{Error, Result};
use crate::linalg::{c, pairwise_sum, CMat, C64, ZERO};

/// Eigenvalues of one Laplacian with the weight `sum_i chi_i |U_ik|^2` of each eigenvector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedSpectrum {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSpectrum {
    /// `Tr chi f(Delta)`.
    pub fn trace(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| w * f(*e))
            .collect();
        pairwise_sum(&terms)
    }

    /// `lambda^m Tr chi (lambda + Delta)^{-m}`.
    pub fn resolvent_trace(&self, lambda: f64, m: usize) -> f64 {
        self.trace(|e| (lambda / (lambda + e)).powi(m as i32))
    }
}

/// Both chiralities, diagonalised once and reused across a lambda sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexSpectra {
    pub delta1: WeightedSpectrum,
    pub delta2: WeightedSpectrum,
}

impl IndexSpectra {
    pub fn index(&self, lambda: f64, m: usize) -> f64 {
        self.delta2.resolvent_trace(lambda, m) - self.delta1.resolvent_trace(lambda, m)
    }
}

pub fn weighted_spectrum(ops: &LatticeOperatorSet, op: Op) -> Result<WeightedSpectrum> {
    Ok(weighted_spectrum_of(ops.dense(op)?, &ops.weights()))
}

/// Diagonalise a Hermitian matrix and weight its eigenvectors by `chi`.
pub fn weighted_spectrum_of(mut h: CMat, chi: &[f64]) -> WeightedSpectrum {
    // symmetrise away roundoff before the Hermitian solver
    let ht = h.adjoint();
    h = (h + ht) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let u = &eig.eigenvectors;
    let dim = u.nrows();
    let weights = (0..dim)
        .into_par_iter()
        .map(|k| {
            let col: Vec<f64> = (0..dim).map(|i| chi[i] * u[(i, k)].norm_sqr()).collect();
            pairwise_sum(&col)
        })
        .collect();
    WeightedSpectrum {
        eigenvalues: eig.eigenvalues.iter().copied().collect(),
        weights,
    }
}

pub fn index_spectra(ops: &LatticeOperatorSet) -> Result<IndexSpectra> {
    Ok(IndexSpectra {
        delta1: weighted_spectrum(ops, Op::Delta1)?,
        delta2: weighted_spectrum(ops, Op::Delta2)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

/// Solve `(lambda + op) x = b` by conjugate gradients for a positive semidefinite `op`
/// given by its action `apply(v, out)`.
pub fn cg_solve(
    apply: &(dyn Fn(&[C64], &mut [C64]) + Sync),
    lambda: f64,
    b: &[C64],
    cg: &CgSettings,
    column: usize,
) -> Result<(Vec<C64>, usize)> {
    let n = b.len();
    let mut x = vec![ZERO; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![ZERO; n];
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut rr = inner(&r, &r).re;
    for it in 0..cg.max_iter {
        if rr.sqrt() <= cg.tol * bnorm {
            return Ok((x, it));
        }
        apply(&p, &mut ap);
        for (a, q) in ap.iter_mut().zip(&p) {
            *a += q * lambda;
        }
        let alpha = rr / inner(&p, &ap).re;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = inner(&r, &r).re;
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
        if it + 1 == cg.max_iter {
            break;
        }
    }
    if rr.sqrt() <= cg.tol * bnorm {
        return Ok((x, cg.max_iter));
    }
    Err(Error::Solver {
        column,
        residual: rr.sqrt() / bnorm,
        iterations: cg.max_iter,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepStats {
    pub value: f64,
    /// Largest `|Im|` of a diagonal entry; the trace of a Hermitian resolvent is real.
    pub max_imag: f64,
    pub iterations: u64,
}

/// `lambda^m Tr chi (lambda + op)^{-m}` by nested CG solves on every basis column.
pub fn column_sweep(ops: &LatticeOperatorSet, op: Op, lambda: f64, m: usize, cg: &CgSettings) -> Result<SweepStats> {
    let apply = |v: &[C64], out: &mut [C64]| ops.apply(op, v, out);
    column_sweep_with(&apply, &ops.weights(), lambda, m, cg)
}

/// Column sweep for any operator given by its action; `chi.len()` is the dimension.
pub fn column_sweep_with(
    apply: &(dyn Fn(&[C64], &mut [C64]) + Sync),
    chi: &[f64],
    lambda: f64,
    m: usize,
    cg: &CgSettings,
) -> Result<SweepStats> {
    let dim = chi.len();
    let scale = lambda.powi(m as i32);
    let cols: Vec<Result<(f64, f64, u64)>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            if chi[i] == 0.0 {
                return Ok((0.0, 0.0, 0));
            }
            let mut v = vec![ZERO; dim];
            v[i] = c(1.0, 0.0);
            let mut iters = 0;
            for _ in 0..m {
                let (x, it) = cg_solve(apply, lambda, &v, cg, i)?;
                v = x;
                iters += it as u64;
            }
            Ok((chi[i] * v[i].re * scale, (v[i].im * scale).abs(), iters))
        })
        .collect();
    let cols: Vec<(f64, f64, u64)> = cols.into_iter().collect::<Result<_>>()?;
    let vals: Vec<f64> = cols.iter().map(|t| t.0).collect();
    Ok(SweepStats {
        value: pairwise_sum(&vals),
        max_imag: cols.iter().map(|t| t.1).fold(0.0, f64::max),
        iterations: cols.iter().map(|t| t.2).sum(),
    })
}

/// Homological index at one `lambda`, by the eigen route in dense mode and the column sweep
/// otherwise.
pub fn homological_index(ops: &LatticeOperatorSet, lambda: f64, m: usize) -> Result<f64> {
    if lambda <= 0.0 || m == 0 {
        return Err(Error::Domain(format!("need lambda > 0 and m >= 1, got {lambda}, {m}")));
    }
    match ops.mode {
        StorageMode::Dense => Ok(index_spectra(ops)?.index(lambda, m)),
        StorageMode::MatrixFree => {
            let cg = CgSettings::default();
            Ok(column_sweep(ops, Op::Delta2, lambda, m, &cg)?.value - column_sweep(ops, Op::Delta1, lambda, m, &cg)?.value)
        }
    }
}
