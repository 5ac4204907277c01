//! The curvature-integral anomaly
//!
//! ```text
//! Ano = (-1)^n / ((2 pi i)^n n!) * integral Tr g,   K^n = g (x) pi(e_{1..2n}) + lower terms
//! ```
//!
//! evaluated by quadrature through the full Clifford pipeline, and the explicit `U(1)`
//! formulas for `n = 1, 2` that never touch a Clifford matrix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clifford::{basis_element, build_rep, CliffordIndexSet};
use crate::error::{Error, Result};
use crate::gauge::{bivectors, AbelianN1, AbelianN2, FieldSample, GaugeField, Gaussian};
use crate::linalg::{c, zeros, CMat, C64, I, ONE, ZERO};
use crate::quadrature::{integrate, LevelRecord, QuadSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LocalQuadrature,
    ClosedFormN1,
    ClosedFormN2,
    Analytic,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub m: usize,
    pub value: f64,
    pub fitted: f64,
    pub cg_iters_total: u64,
    /// Seconds; kept out of JSON so records stay reproducible.
    #[serde(skip_serializing, default)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    None,
    Quadrature { levels: Vec<LevelRecord> },
    Sweep {
        rows: Vec<SweepRow>,
        coefficients: Vec<f64>,
        model: Vec<String>,
        residual_rms: f64,
        stat_error: f64,
        endpoint_spread: f64,
        truncation: f64,
        warning: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyResult {
    pub method: Method,
    pub n: usize,
    pub rank: usize,
    pub degree_m: usize,
    pub value: f64,
    pub raw_re: f64,
    pub raw_im: f64,
    pub error_estimate: f64,
    pub diagnostics: Diagnostics,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(-1)^n / ((2 pi i)^n n!)`.
pub fn prefactor(n: usize) -> C64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    c(sign / factorial(n), 0.0) / (c(0.0, 2.0 * PI)).powu(n as u32)
}

fn check_degree(field: &GaugeField, m: usize) -> Result<()> {
    if m < field.n() {
        return Err(Error::Domain(format!(
            "degree m = {m} must be at least n = {}",
            field.n()
        )));
    }
    Ok(())
}

struct Scratch {
    sample: FieldSample,
    r: Vec<CMat>,
    k: CMat,
    pow: CMat,
    tmp: CMat,
}

/// The local formula through curvature, Clifford contraction, `K^n` and the top component.
pub fn anomaly_local(field: &GaugeField, m: usize, quad: &QuadSpec) -> Result<AnomalyResult> {
    check_degree(field, m)?;
    let n = field.n();
    let nn = field.rank();
    let rep = build_rep(2 * n)?;
    let biv = bivectors(&rep);
    let top = basis_element(&rep, &CliffordIndexSet::full(2 * n))?;
    let s = rep.dim;
    let fdim = s * nn;
    let d = 2 * n;
    let pairs = crate::gauge::pairs(d);
    let norm = c(1.0 / s as f64, 0.0);
    let make = || Scratch {
        sample: FieldSample::new(n, nn),
        r: vec![zeros(nn); pairs.len()],
        k: zeros(fdim),
        pow: zeros(fdim),
        tmp: zeros(fdim),
    };
    let eval = |w: &mut Scratch, x: &[f64]| -> C64 {
        field.sample(x, &mut w.sample).expect("field sample");
        let sm = &w.sample;
        for (q, &(j, k)) in pairs.iter().enumerate() {
            let r = &mut w.r[q];
            r.copy_from(sm.d(k, j));
            *r -= sm.d(j, k);
            *r *= I;
            r.gemm(-ONE, &sm.a[j], &sm.a[k], ONE);
            r.gemm(ONE, &sm.a[k], &sm.a[j], ONE);
        }
        w.k.fill(ZERO);
        for (b, r) in biv.iter().zip(&w.r) {
            for a in 0..s {
                for bb in 0..s {
                    let coef = b[(a, bb)];
                    if coef == ZERO {
                        continue;
                    }
                    for p in 0..nn {
                        for q in 0..nn {
                            w.k[(a * nn + p, bb * nn + q)] += coef * r[(p, q)];
                        }
                    }
                }
            }
        }
        w.pow.copy_from(&w.k);
        for _ in 1..n {
            w.tmp.gemm(ONE, &w.pow, &w.k, ZERO);
            std::mem::swap(&mut w.pow, &mut w.tmp);
        }
        // Tr g = Tr_fibre((top^dagger (x) 1) K^n) / 2^n
        let mut acc = ZERO;
        for a in 0..s {
            for b in 0..s {
                let wgt = top[(b, a)].conj();
                if wgt == ZERO {
                    continue;
                }
                for r in 0..nn {
                    acc += wgt * w.pow[(b * nn + r, a * nn + r)];
                }
            }
        }
        acc * norm
    };
    let out = integrate(&field.support(), quad, make, eval)?;
    let raw = prefactor(n) * out.value;
    Ok(AnomalyResult {
        method: Method::LocalQuadrature,
        n,
        rank: nn,
        degree_m: m,
        value: raw.re,
        raw_re: raw.re,
        raw_im: raw.im,
        error_estimate: out.error * prefactor(n).norm(),
        diagnostics: Diagnostics::Quadrature { levels: out.levels },
    })
}

/// `(1 / 2 pi) integral d a_1 / d x_2` for `n = 1`, `U(1)`.
pub fn closed_form_n1(field: &GaugeField, m: usize, quad: &QuadSpec) -> Result<AnomalyResult> {
    if field.n() != 1 || field.rank() != 1 {
        return Err(Error::Domain("closed_form_n1 needs n = 1, N = 1".into()));
    }
    check_degree(field, m)?;
    let out = integrate(
        &field.support(),
        quad,
        || (),
        |_, x| field.da(0, 1, x).expect("derivative")[(0, 0)],
    )?;
    let raw = out.value / (2.0 * PI);
    Ok(AnomalyResult {
        method: Method::ClosedFormN1,
        n: 1,
        rank: 1,
        degree_m: m,
        value: raw.re,
        raw_re: raw.re,
        raw_im: raw.im,
        error_estimate: out.error / (2.0 * PI),
        diagnostics: Diagnostics::Quadrature { levels: out.levels },
    })
}

/// `(beta - alpha) / (2 pi) * integral phi` with the Gaussian integral known exactly.
pub fn closed_form_n1_family(fam: &AbelianN1, m: usize) -> AnomalyResult {
    let v = (fam.profile.beta - fam.profile.alpha) / (2.0 * PI) * fam.phi.integral;
    analytic(1, m, v)
}

fn analytic(n: usize, m: usize, v: f64) -> AnomalyResult {
    AnomalyResult {
        method: Method::Analytic,
        n,
        rank: 1,
        degree_m: m,
        value: v,
        raw_re: v,
        raw_im: 0.0,
        error_estimate: 0.0,
        diagnostics: Diagnostics::None,
    }
}

/// `-(1 / 4 pi^2) integral (g12 g34 - g13 g24 + g14 g23)`, `g_ij = i(d_i a_j - d_j a_i)`.
pub fn closed_form_n2(field: &GaugeField, m: usize, quad: &QuadSpec) -> Result<AnomalyResult> {
    if field.n() != 2 || field.rank() != 1 {
        return Err(Error::Domain("closed_form_n2 needs n = 2, N = 1".into()));
    }
    check_degree(field, m)?;
    let eval = |s: &mut FieldSample, x: &[f64]| -> C64 {
        field.sample(x, s).expect("field sample");
        let g = |i: usize, j: usize| (s.d(j, i)[(0, 0)] - s.d(i, j)[(0, 0)]) * I;
        g(0, 1) * g(2, 3) - g(0, 2) * g(1, 3) + g(0, 3) * g(1, 2)
    };
    let out = integrate(&field.support(), quad, || FieldSample::new(2, 1), eval)?;
    let pre = -1.0 / (4.0 * PI * PI);
    let raw = out.value * pre;
    Ok(AnomalyResult {
        method: Method::ClosedFormN2,
        n: 2,
        rank: 1,
        degree_m: m,
        value: raw.re,
        raw_re: raw.re,
        raw_im: raw.im,
        error_estimate: out.error * pre.abs(),
        diagnostics: Diagnostics::Quadrature { levels: out.levels },
    })
}

/// `integral_{R^3} (d phi_1 / d y_2) phi_3 dy` for isotropic Gaussians, in closed form.
pub fn gaussian_overlap_d2(phi1: &Gaussian, phi3: &Gaussian) -> f64 {
    let (s1, s3) = (phi1.sigma * phi1.sigma, phi3.sigma * phi3.sigma);
    let p = 1.0 / s1 + 1.0 / s3;
    let dist2: f64 = phi1
        .center
        .iter()
        .zip(&phi3.center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mu_minus_c1 = (phi3.center[1] - phi1.center[1]) / s3 / p;
    let dim = phi1.center.len() as f64;
    -mu_minus_c1 / s1
        * phi1.amplitude()
        * phi3.amplitude()
        * (-dist2 / (2.0 * (s1 + s3))).exp()
        * (2.0 * PI / p).powf(dim / 2.0)
}

/// `(beta^2 - alpha^2) / (4 pi^2) * integral (d phi_1 / d x_2) phi_3`.
pub fn n2_family_oracle(fam: &AbelianN2, m: usize) -> AnomalyResult {
    let (a, b) = (fam.profile.alpha, fam.profile.beta);
    let v = (b * b - a * a) / (4.0 * PI * PI) * gaussian_overlap_d2(&fam.phi1, &fam.phi3);
    analytic(2, m, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{NonAbelian, Profile, Zero};
    use std::sync::Arc;

    fn n1(alpha: f64, beta: f64, integral: f64) -> AbelianN1 {
        AbelianN1 {
            profile: Profile {
                alpha,
                beta,
                width: 0.2,
            },
            phi: Gaussian {
                center: vec![0.0],
                sigma: 1.0,
                integral,
            },
        }
    }

    #[test]
    fn prefactor_n1() {
        // -1 / (2 pi i) = i / (2 pi)
        assert!((prefactor(1) - c(0.0, 1.0 / (2.0 * PI))).norm() < 1e-16);
    }

    #[test]
    fn n1_examples() {
        let q = QuadSpec::default();
        for (a, b, i, want) in [(0.0, 2.0 * PI, 1.0, 1.0), (-PI, PI, 3.0, 3.0), (1.0, 1.0, 1.0, 0.0)] {
            let fam = n1(a, b, i);
            assert!((closed_form_n1_family(&fam, 1).value - want).abs() < 1e-14);
            let f = GaugeField::new(Arc::new(fam));
            let loc = anomaly_local(&f, 1, &q).unwrap();
            let cf = closed_form_n1(&f, 1, &q).unwrap();
            assert!((loc.value - want).abs() < 1e-8, "{} vs {want}", loc.value);
            assert!((loc.value - cf.value).abs() < 1e-8);
            assert!(loc.raw_im.abs() < 1e-8);
        }
    }

    #[test]
    fn zero_field_and_domain_errors() {
        let q = QuadSpec::default();
        let f = GaugeField::new(Arc::new(Zero { n: 1, rank: 1 }));
        assert_eq!(anomaly_local(&f, 1, &q).unwrap().value, 0.0);
        assert!(anomaly_local(&f, 0, &q).is_err());
        let f2 = GaugeField::new(Arc::new(Zero { n: 2, rank: 1 }));
        assert!(closed_form_n1(&f2, 2, &q).is_err());
        assert!(closed_form_n2(&f, 1, &q).is_err());
    }

    #[test]
    fn degree_independent_bitwise() {
        let f = GaugeField::new(Arc::new(n1(0.0, 2.0 * PI, 1.0)));
        let q = QuadSpec::default();
        let v: Vec<f64> = (1..=3).map(|m| anomaly_local(&f, m, &q).unwrap().value).collect();
        assert_eq!(v[0].to_bits(), v[1].to_bits());
        assert_eq!(v[1].to_bits(), v[2].to_bits());
    }

    #[test]
    fn gaussian_overlap_matches_quadrature() {
        let g1 = Gaussian {
            center: vec![0.0, -0.3, 0.2],
            sigma: 0.9,
            integral: 1.0,
        };
        let g3 = Gaussian {
            center: vec![0.4, 0.6, 0.0],
            sigma: 1.2,
            integral: 2.0,
        };
        let bx = crate::gauge::SupportBox {
            lo: vec![-12.0; 3],
            hi: vec![12.0; 3],
            panels: vec![2; 3],
        };
        let out = integrate(&bx, &QuadSpec::default(), || (), |_, y| {
            c(g1.grad(y, 1) * g3.value(y), 0.0)
        })
        .unwrap();
        assert!((out.value.re - gaussian_overlap_d2(&g1, &g3)).abs() < 1e-10);
    }

    #[test]
    fn nonabelian_local_is_real() {
        let f = GaugeField::new(Arc::new(NonAbelian::pauli(
            1,
            Profile {
                alpha: 0.0,
                beta: 1.0,
                width: 0.5,
            },
            1.0,
        )));
        let r = anomaly_local(&f, 1, &QuadSpec::default()).unwrap();
        assert!(r.raw_im.abs() < 1e-8);
    }
}
