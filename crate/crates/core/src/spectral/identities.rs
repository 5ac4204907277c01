//! Finite-dimensional identities behind the spectral route.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{Lattice, LatticeSpec};
use crate::error::{config_err, Error, Result};
use crate::gauge::Gaussian;
use crate::linalg::{c, eye, frob, pairwise_sum, random_matrix, CMat, C64, ZERO};

fn inverse(m: CMat) -> Result<CMat> {
    m.try_inverse()
        .ok_or_else(|| Error::Domain("singular shifted operator".into()))
}

/// `|(z + D2)^{-n} - (z + D1)^{-n} - sum_i (z + D1)^{-i-1} (D1 - D2) (z + D2)^{-(n-i)}|_F`.
pub fn difference_of_powers(d1: &CMat, d2: &CMat, z: C64, n: usize) -> Result<f64> {
    let dim = d1.nrows();
    let id = eye(dim);
    let r1 = inverse(d1 + &id * z)?;
    let r2 = inverse(d2 + &id * z)?;
    let mut p1 = vec![id.clone()];
    let mut p2 = vec![id];
    for k in 1..=n {
        p1.push(&p1[k - 1] * &r1);
        p2.push(&p2[k - 1] * &r2);
    }
    let f = d1 - d2;
    let lhs = &p2[n] - &p1[n];
    let mut rhs = CMat::zeros(dim, dim);
    for i in 0..n {
        rhs += &p1[i + 1] * &f * &p2[n - i];
    }
    Ok(frob(&(lhs - rhs)))
}

/// Random `D_+` with `N(0, 1/dim)` complex entries, `D1 = D_+ D_+^*`, `D2 = D_+^* D_+`; the
/// largest deviation over `trials`.
pub fn difference_of_powers_check(dim: usize, z: C64, trials: usize, n: usize, seed: u64) -> Result<f64> {
    if dim == 0 || dim > 64 {
        return Err(config_err("dim", "need 1 <= dim <= 64"));
    }
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::Domain(format!("z = {z} lies on (-inf, 0]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let dp = random_matrix(&mut rng, dim, dim) * c(1.0 / (dim as f64).sqrt(), 0.0);
        let dm = dp.adjoint();
        let d1 = &dp * &dm;
        let d2 = &dm * &dp;
        worst = worst.max(difference_of_powers(&d1, &d2, z, n)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventTrace {
    pub lattice: f64,
    pub continuum: f64,
    /// `None` when both sides vanish.
    pub ratio: Option<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(2 pi)^{-2n} int g Vol(S^{2n-1}) lambda^{-m} (n-1)! (m-1)! / (2 (m+n-1)!)`.
pub fn continuum_resolvent_trace(integral: f64, lambda: f64, n: usize, m: usize) -> f64 {
    let vol = 2.0 * PI.powi(n as i32) / factorial(n - 1);
    (2.0 * PI).powi(-2 * n as i32) * integral * vol * lambda.powi(-(m as i32)) * 0.5 * factorial(n - 1)
        * factorial(m - 1)
        / factorial(m + n - 1)
}

/// `Tr(g (lambda + Delta)^{-n-m})` for the free scalar lattice Laplacian against the
/// continuum value. The lattice diagonal is read off the operator applied to one site
/// (the free operator commutes with translations).
pub fn resolvent_trace_identity(spec: &LatticeSpec, g: &Gaussian, lambda: f64, m: usize) -> Result<ResolventTrace> {
    let n = spec.n;
    if m == 0 || lambda <= 0.0 {
        return Err(Error::Domain("need m >= 1 and lambda > 0".into()));
    }
    if g.center.len() != 2 * n {
        return Err(config_err("g.center", format!("expected {} coordinates", 2 * n)));
    }
    for a in 0..2 * n {
        let (lo, hi) = (g.center[a] - g.radius(), g.center[a] + g.radius());
        if lo < -spec.length / 2.0 || hi > spec.length / 2.0 {
            return Err(config_err("g", "bump must be supported inside the box"));
        }
    }
    let lat = Lattice::new(spec.clone());
    let sites = lat.sites();
    let mut e = vec![ZERO; sites];
    e[0] = c(1.0, 0.0);
    let p = (n + m) as i32;
    lat.free_function(&mut e, &|ev| (lambda + ev).powi(-p));
    let diag = e[0].re;
    let gs: Vec<f64> = (0..sites).map(|s| g.value(&lat.position(s))).collect();
    let lattice = pairwise_sum(&gs) * diag;
    let continuum = continuum_resolvent_trace(g.integral, lambda, n, m);
    let ratio = (continuum != 0.0).then(|| lattice / continuum);
    Ok(ResolventTrace {
        lattice,
        continuum,
        ratio,
    })
}
