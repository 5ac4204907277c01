//! Composite tensor-product Gauss-Legendre quadrature over a box, refined by doubling the
//! nodes per panel until successive levels agree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::SupportBox;
use crate::linalg::{pairwise_sum_c, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    /// Nodes per panel at level 0.
    pub base_points: usize,
    pub max_levels: usize,
    /// Relative tolerance on `|Q_l - Q_{l-1}|`.
    pub tol: f64,
    /// Absolute floor, so identically vanishing integrands converge.
    pub abs_tol: f64,
    /// Refuse levels whose tensor grid exceeds this many points.
    pub max_points: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            base_points: 16,
            max_levels: 5,
            tol: 1e-10,
            abs_tol: 1e-15,
            max_points: 200_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub nodes_per_panel: usize,
    pub points: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadOutcome {
    pub value: C64,
    pub error: f64,
    pub levels: Vec<LevelRecord>,
}

/// Nodes and weights of the `n`-point rule on `[-1, 1]` (Newton on the Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite rule with `panels` equal panels of `per_panel` nodes on `[lo, hi]`.
pub fn composite(lo: f64, hi: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(per_panel);
    let width = (hi - lo) / panels as f64;
    let mut xs = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let a = lo + width * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            xs.push(a + 0.5 * width * (xi + 1.0));
            ws.push(0.5 * width * wi);
        }
    }
    (xs, ws)
}

fn tensor_sum<M, W, F>(axes: &[(Vec<f64>, Vec<f64>)], make: &M, eval: &F) -> C64
where
    M: Fn() -> W + Sync,
    F: Fn(&mut W, &[f64]) -> C64 + Sync,
{
    let d = axes.len();
    let inner: usize = axes[1..].iter().map(|a| a.0.len()).product();
    let slices: Vec<C64> = (0..axes[0].0.len())
        .into_par_iter()
        .map_init(
            || (make(), vec![0.0; d], vec![C64::new(0.0, 0.0); inner]),
            |(ws, x, buf), i0| {
                x[0] = axes[0].0[i0];
                let w0 = axes[0].1[i0];
                let mut idx = vec![0usize; d];
                for slot in buf.iter_mut() {
                    let mut w = w0;
                    for a in 1..d {
                        x[a] = axes[a].0[idx[a]];
                        w *= axes[a].1[idx[a]];
                    }
                    *slot = eval(ws, x) * w;
                    for a in (1..d).rev() {
                        idx[a] += 1;
                        if idx[a] < axes[a].0.len() {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
                pairwise_sum_c(buf)
            },
        )
        .collect();
    pairwise_sum_c(&slices)
}

/// Integrate `eval` over `bx`. `make` builds a per-worker scratch value passed to `eval`.
pub fn integrate<M, W, F>(bx: &SupportBox, spec: &QuadSpec, make: M, eval: F) -> Result<QuadOutcome>
where
    M: Fn() -> W + Sync,
    F: Fn(&mut W, &[f64]) -> C64 + Sync,
{
    let mut levels: Vec<LevelRecord> = Vec::new();
    let mut prev: Option<C64> = None;
    let mut last_delta = f64::INFINITY;
    for level in 0..spec.max_levels {
        // growth 3/2 per level: doubling would cost 2^d per refinement
        let per = (spec.base_points as f64 * 1.5f64.powi(level as i32)).round() as usize;
        let points: usize = bx.panels.iter().map(|p| p * per).product();
        if points > spec.max_points {
            break;
        }
        let axes: Vec<_> = (0..bx.dim())
            .map(|a| composite(bx.lo[a], bx.hi[a], bx.panels[a].max(1), per))
            .collect();
        let q = tensor_sum(&axes, &make, &eval);
        levels.push(LevelRecord {
            nodes_per_panel: per,
            points,
            re: q.re,
            im: q.im,
        });
        if let Some(p) = prev {
            last_delta = (q - p).norm();
            if last_delta <= spec.tol * q.norm() || last_delta <= spec.abs_tol {
                return Ok(QuadOutcome {
                    value: q,
                    error: last_delta,
                    levels,
                });
            }
        }
        prev = Some(q);
    }
    Err(Error::Quadrature {
        levels: levels.len(),
        last_delta,
        record: levels.iter().map(|l| l.re).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn gaussian_box_integral() {
        let bx = SupportBox {
            lo: vec![-8.0, -8.0],
            hi: vec![8.0, 8.0],
            panels: vec![1, 1],
        };
        let out = integrate(
            &bx,
            &QuadSpec::default(),
            || (),
            |_, x| C64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0),
        )
        .unwrap();
        assert!((out.value.re - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        assert!(out.levels.len() >= 2);
    }

    #[test]
    fn nonconvergence_reports_record() {
        let bx = SupportBox {
            lo: vec![0.0],
            hi: vec![1.0],
            panels: vec![1],
        };
        let spec = QuadSpec {
            max_levels: 2,
            tol: 1e-30,
            ..QuadSpec::default()
        };
        let err = integrate(&bx, &spec, || (), |_, x| C64::new(x[0].sqrt(), 0.0)).unwrap_err();
        assert!(matches!(err, Error::Quadrature { levels: 2, .. }));
    }
}
