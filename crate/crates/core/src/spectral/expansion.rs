//! The perturbation series of the resolvent powers,
//!
//! ```text
//! (lambda + Delta_l)^{-m} = sum_J omega_l(J, lambda),
//! omega_l(J) = (-1)^{|J|} R Y_l^{j_1} R Y_l^{j_2} ... R Y_l^{j_m},   R = (lambda + Delta)^{-1},
//! Y_l = V_l R,   V_l = Delta_l - Delta,
//! ```
//!
//! super-traced as `Tr chi (omega_2 - omega_1)` with the same trace weight as the index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{LatticeOperatorSet, Op};
use super::trace::index_spectra;
use crate::error::{Error, Result};
use crate::linalg::{c, eye, frob, pairwise_sum, CMat, C64, ZERO};

/// All `J` in `N_0^m` with `|J|_1 <= k`, ordered by `|J|_1` then lexicographically.
pub fn multi_indices(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for j in 0..=left {
            cur.push(j);
            rec(m, left - j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, k, &mut Vec::new(), &mut out);
    out.sort_by_key(|j| (j.iter().sum::<usize>(), std::cmp::Reverse(j.clone())));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub j: Vec<usize>,
    /// `lambda^m Tr chi (omega_2(J) - omega_1(J))`.
    pub super_trace: f64,
    /// `lambda^m sum_i chi_i (|omega_2(J)_ii| + |omega_1(J)_ii|)`, the scale of the cancellation.
    pub abs_mass: f64,
    /// Frobenius norms of `omega_1(J)` and `omega_2(J)` (dense route only).
    pub norms: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub lambda: f64,
    pub m: usize,
    pub k_max: usize,
    pub terms: Vec<TermRecord>,
    /// `lambda^m sum_{|J| <= k} Tr_s omega(J)` for `k = 0..=k_max`.
    pub partial_sums: Vec<f64>,
    /// Homological index at the same `lambda`.
    pub full: f64,
    /// `|full - partial(k)|`.
    pub remainders: Vec<f64>,
    /// Smallest singular values of `1 + Y_1`, `1 + Y_2`.
    pub min_singular: (f64, f64),
    /// Largest singular values of `Y_1`, `Y_2`; the remainder after order `k` is bounded by
    /// a constant times `q^{k+1}` with `q` the larger of the two.
    pub y_norm: (f64, f64),
}

fn diag_weighted(m: &CMat, chi: &[f64]) -> (f64, f64) {
    let re: Vec<f64> = (0..m.nrows()).map(|i| chi[i] * m[(i, i)].re).collect();
    let ab: Vec<f64> = (0..m.nrows()).map(|i| chi[i] * m[(i, i)].norm()).collect();
    (pairwise_sum(&re), pairwise_sum(&ab))
}

/// Dense expansion diagnostics; requires `dim <= 5000`.
pub fn expansion_diagnostics(ops: &LatticeOperatorSet, lambda: f64, m: usize, k_max: usize) -> Result<ExpansionReport> {
    if lambda <= 0.0 || m == 0 {
        return Err(Error::Domain("need lambda > 0 and m >= 1".into()));
    }
    let dim = ops.dim();
    let chi = ops.weights();
    let r = {
        let mut id = ops.dense(Op::Delta)?;
        for i in 0..dim {
            id[(i, i)] += c(lambda, 0.0);
        }
        id.try_inverse()
            .ok_or_else(|| Error::Domain("lambda + Delta is singular".into()))?
    };
    let id = eye(dim);
    let mut min_sv = [0.0; 2];
    let mut ynorm = [0.0; 2];
    // q[l][j] = R Y_l^j
    let mut q: Vec<Vec<CMat>> = Vec::with_capacity(2);
    for (l, op) in [Op::V1, Op::V2].into_iter().enumerate() {
        let y = ops.dense(op)? * &r;
        let sv = (&id + &y).singular_values();
        min_sv[l] = sv.min();
        ynorm[l] = y.singular_values().max();
        if min_sv[l] <= 0.1 {
            return Err(Error::ExpansionInvalid(min_sv[l]));
        }
        let mut list = vec![r.clone()];
        let mut yp = id.clone();
        for _ in 0..k_max {
            yp = &yp * &y;
            list.push(&r * &yp);
        }
        q.push(list);
    }
    let scale = lambda.powi(m as i32);
    let js = multi_indices(m, k_max);
    let terms: Vec<TermRecord> = js
        .par_iter()
        .map(|j| {
            let sign = if j.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
            let mut prods = Vec::with_capacity(2);
            for ql in &q {
                let mut p = ql[j[0]].clone();
                for &jt in &j[1..] {
                    p = &p * &ql[jt];
                }
                prods.push(p * c(sign, 0.0));
            }
            let (t1, a1) = diag_weighted(&prods[0], &chi);
            let (t2, a2) = diag_weighted(&prods[1], &chi);
            TermRecord {
                j: j.clone(),
                super_trace: scale * (t2 - t1),
                abs_mass: scale * (a1 + a2),
                norms: Some((frob(&prods[0]), frob(&prods[1]))),
            }
        })
        .collect();
    let full = index_spectra(ops)?.index(lambda, m);
    let mut partial_sums = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let v: Vec<f64> = terms
            .iter()
            .filter(|t| t.j.iter().sum::<usize>() <= k)
            .map(|t| t.super_trace)
            .collect();
        partial_sums.push(pairwise_sum(&v));
    }
    let remainders = partial_sums.iter().map(|p| (full - p).abs()).collect();
    Ok(ExpansionReport {
        lambda,
        m,
        k_max,
        terms,
        partial_sums,
        full,
        remainders,
        min_singular: (min_sv[0], min_sv[1]),
        y_norm: (ynorm[0], ynorm[1]),
    })
}

/// `Tr_s omega(J)` for the given multi-indices by applying each `omega_l(J)` to every basis
/// column; no matrix is formed. `V_l` is applied as `Delta_l - Delta`, `R` through the DFT.
pub fn expansion_terms_matrix_free(
    ops: &LatticeOperatorSet,
    lambda: f64,
    js: &[Vec<usize>],
) -> Result<Vec<TermRecord>> {
    if lambda <= 0.0 {
        return Err(Error::Domain("need lambda > 0".into()));
    }
    let dim = ops.dim();
    let chi = ops.weights();
    let mut out = Vec::with_capacity(js.len());
    for j in js {
        let m = j.len();
        let scale = lambda.powi(m as i32);
        let sign = if j.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
        let apply = |op: Op, i: usize| -> C64 {
            let mut v = vec![ZERO; dim];
            v[i] = c(1.0, 0.0);
            let mut tmp = vec![ZERO; dim];
            for &jt in j.iter().rev() {
                for _ in 0..jt {
                    ops.free_resolvent(lambda, 1, &mut v);
                    ops.apply(op, &v, &mut tmp);
                    std::mem::swap(&mut v, &mut tmp);
                }
                ops.free_resolvent(lambda, 1, &mut v);
            }
            v[i] * sign
        };
        let cols: Vec<(f64, f64, f64)> = (0..dim)
            .into_par_iter()
            .map(|i| {
                if chi[i] == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let w1 = apply(Op::V1, i);
                let w2 = apply(Op::V2, i);
                (chi[i] * w1.re, chi[i] * w2.re, chi[i] * (w1.norm() + w2.norm()))
            })
            .collect();
        let t1 = pairwise_sum(&cols.iter().map(|t| t.0).collect::<Vec<_>>());
        let t2 = pairwise_sum(&cols.iter().map(|t| t.1).collect::<Vec<_>>());
        let ab = pairwise_sum(&cols.iter().map(|t| t.2).collect::<Vec<_>>());
        out.push(TermRecord {
            j: j.clone(),
            super_trace: scale * (t2 - t1),
            abs_mass: scale * ab,
            norms: None,
        });
    }
    Ok(out)
}

/// Outcome of the vanishing check: every `|Tr_s omega(J)|` against ten times a noise floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingReport {
    pub lambda: f64,
    pub terms: Vec<TermRecord>,
    pub baseline: Vec<TermRecord>,
    /// `max(|baseline|, eps * abs_mass)` per term.
    pub floors: Vec<f64>,
    pub passed: bool,
}

/// Compare each term with the same term for the trivial connection on the same lattice, and
/// with the roundoff scale of its own cancellation.
pub fn vanishing_check(
    ops: &LatticeOperatorSet,
    trivial: &LatticeOperatorSet,
    lambda: f64,
    js: &[Vec<usize>],
) -> Result<VanishingReport> {
    let terms = expansion_terms_matrix_free(ops, lambda, js)?;
    let baseline = expansion_terms_matrix_free(trivial, lambda, js)?;
    let floors: Vec<f64> = terms
        .iter()
        .zip(&baseline)
        .map(|(t, b)| b.super_trace.abs().max(f64::EPSILON * t.abs_mass))
        .collect();
    let passed = terms
        .iter()
        .zip(&floors)
        .all(|(t, f)| t.super_trace.abs() <= 10.0 * f);
    Ok(VanishingReport {
        lambda,
        terms,
        baseline,
        floors,
        passed,
    })
}
