//! `U(N)` potentials `a_1, ..., a_{2n}` on `R^{2n}` with `a_{2n} = 0`, their curvature
//! `R_jk = i(d_j a_k - d_k a_j + i[a_j, a_k])`, the Clifford contraction
//! `K = sum_{j<k} pi(e_j e_k) (x) R_jk`, and the multiplication operators
//! `F = -2 sum c_j d_{2n} a_j`, `G = i sum_{j<k} c_j c_k (d_k a_j - d_j a_k - i[a_j, a_k])`
//! together with the coefficients of `S = -i sum (2 a_j d_j + d_j a_j + i a_j^2)`.
//!
//! Axes are 0-based in code: axis `2n - 1` is `x_{2n}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::{build_rep, CliffordIndexSet, CliffordRep};
use crate::error::{config_err, Error, Result};
use crate::linalg::{c, commutator, eye, frob, kron, zeros, CMat, I, ZERO};

/// Axis-aligned box outside which `d a_j / d x_{2n}` is declared zero.
/// `panels` is a per-axis hint for composite quadrature (one panel per feature width).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub panels: Vec<usize>,
}

impl SupportBox {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn shifted(&self, s: &[f64]) -> Self {
        Self {
            lo: self.lo.iter().zip(s).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(s).map(|(a, b)| a + b).collect(),
            panels: self.panels.clone(),
        }
    }
}

/// Field values at one point: `a[j]` and `da[j * 2n + l] = d a_j / d x_l`.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub a: Vec<CMat>,
    pub da: Vec<CMat>,
}

impl FieldSample {
    pub fn new(n: usize, rank: usize) -> Self {
        let d = 2 * n;
        Self {
            a: vec![zeros(rank); d],
            da: vec![zeros(rank); d * d],
        }
    }

    pub fn d(&self, j: usize, l: usize) -> &CMat {
        let d = self.a.len();
        &self.da[j * d + l]
    }
}

/// A source of potentials. Only the spatial components `j < 2n - 1` are ever requested;
/// `a_{2n}` is the constant zero by construction.
pub trait Potential: Send + Sync + fmt::Debug {
    fn n(&self) -> usize;
    fn rank(&self) -> usize;
    fn eval(&self, j: usize, x: &[f64]) -> CMat;
    /// Analytic `d a_j / d x_l`, if the family provides one.
    fn deriv(&self, _j: usize, _l: usize, _x: &[f64]) -> Option<CMat> {
        None
    }
    fn support(&self) -> SupportBox;
    /// Fill `out` in one pass; families override this to share work between components.
    fn sample(&self, _x: &[f64], _out: &mut FieldSample) -> bool {
        false
    }
}

/// Step for the finite-difference fallback: a fraction of the support-box width along
/// the differentiated axis, or an absolute length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FdStep {
    Relative(f64),
    Absolute(f64),
}

#[derive(Clone, Debug)]
pub struct GaugeField {
    pot: Arc<dyn Potential>,
    shift: Vec<f64>,
    fd: FdStep,
    force_fd: bool,
}

impl GaugeField {
    pub fn new(pot: Arc<dyn Potential>) -> Self {
        let d = 2 * pot.n();
        Self {
            pot,
            shift: vec![0.0; d],
            fd: FdStep::Relative(1e-3),
            force_fd: false,
        }
    }

    pub fn n(&self) -> usize {
        self.pot.n()
    }

    pub fn rank(&self) -> usize {
        self.pot.rank()
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.pot
    }

    /// Translate the field: the new field at `x` is the old one at `x - s`.
    pub fn translated(mut self, s: &[f64]) -> Self {
        for (a, b) in self.shift.iter_mut().zip(s) {
            *a += b;
        }
        self
    }

    /// Use finite differences even where analytic derivatives exist.
    pub fn with_finite_differences(mut self, step: FdStep) -> Self {
        self.force_fd = true;
        self.fd = step;
        self
    }

    pub fn support(&self) -> SupportBox {
        self.pot.support().shifted(&self.shift)
    }

    fn local(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(a, b)| a - b).collect()
    }

    pub fn a(&self, j: usize, x: &[f64]) -> CMat {
        if j + 1 >= 2 * self.n() {
            return zeros(self.rank());
        }
        self.pot.eval(j, &self.local(x))
    }

    fn fd_step(&self, l: usize) -> Result<f64> {
        let h = match self.fd {
            FdStep::Relative(r) => {
                let sb = self.pot.support();
                r * (sb.hi[l] - sb.lo[l])
            }
            FdStep::Absolute(h) => h,
        };
        if h < 1e-8 {
            return Err(config_err(
                "fd_step",
                format!("finite-difference step {h:e} below 1e-8"),
            ));
        }
        Ok(h)
    }

    /// `d a_j / d x_l`, analytic when available, else a 4th-order centred stencil.
    pub fn da(&self, j: usize, l: usize, x: &[f64]) -> Result<CMat> {
        if j + 1 >= 2 * self.n() {
            return Ok(zeros(self.rank()));
        }
        let y = self.local(x);
        if !self.force_fd {
            if let Some(d) = self.pot.deriv(j, l, &y) {
                return Ok(d);
            }
        }
        let h = self.fd_step(l)?;
        let at = |t: f64| {
            let mut p = y.clone();
            p[l] += t;
            self.pot.eval(j, &p)
        };
        let num = -at(2.0 * h) + at(h) * c(8.0, 0.0) - at(-h) * c(8.0, 0.0) + at(-2.0 * h);
        Ok(num / c(12.0 * h, 0.0))
    }

    /// Fill every component and derivative at `x`.
    pub fn sample(&self, x: &[f64], out: &mut FieldSample) -> Result<()> {
        let d = 2 * self.n();
        if !self.force_fd && self.pot.sample(&self.local(x), out) {
            out.a[d - 1].fill(ZERO);
            for l in 0..d {
                out.da[(d - 1) * d + l].fill(ZERO);
            }
            return Ok(());
        }
        for j in 0..d {
            out.a[j] = self.a(j, x);
            for l in 0..d {
                out.da[j * d + l] = self.da(j, l, x)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// built-in families

/// `h(t) = alpha + (beta - alpha) (1 + tanh(t / w)) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub alpha: f64,
    pub beta: f64,
    pub width: f64,
}

impl Profile {
    pub fn h(&self, t: f64) -> f64 {
        self.alpha + (self.beta - self.alpha) * 0.5 * (1.0 + (t / self.width).tanh())
    }

    pub fn dh(&self, t: f64) -> f64 {
        let th = (t / self.width).tanh();
        (self.beta - self.alpha) * 0.5 * (1.0 - th * th) / self.width
    }

    /// `h` and `h'` sharing one `tanh`.
    pub fn both(&self, t: f64) -> (f64, f64) {
        let th = (t / self.width).tanh();
        (
            self.alpha + (self.beta - self.alpha) * 0.5 * (1.0 + th),
            (self.beta - self.alpha) * 0.5 * (1.0 - th * th) / self.width,
        )
    }

    /// `h'` is below 1e-14 relative outside this half-width.
    pub fn half_support(&self) -> f64 {
        20.0 * self.width
    }
}

/// Isotropic Gaussian `phi(y) = A exp(-|y - c|^2 / (2 sigma^2))` normalised to `integral`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub integral: f64,
}

impl Gaussian {
    pub fn amplitude(&self) -> f64 {
        let d = self.center.len() as i32;
        self.integral / (2.0 * PI * self.sigma * self.sigma).powf(d as f64 / 2.0)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let r2: f64 = y
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.amplitude() * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub fn grad(&self, y: &[f64], axis: usize) -> f64 {
        -(y[axis] - self.center[axis]) / (self.sigma * self.sigma) * self.value(y)
    }

    /// Radius beyond which `phi < 1e-14`.
    pub fn radius(&self) -> f64 {
        let a = self.amplitude().abs().max(1e-300);
        let ratio = a / 1e-14;
        if ratio <= 1.0 {
            0.0
        } else {
            self.sigma * (2.0 * ratio.ln()).sqrt()
        }
    }
}

fn hull(gs: &[&Gaussian], extra: (f64, f64)) -> SupportBox {
    let d = gs[0].center.len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for g in gs {
        let r = g.radius();
        for i in 0..d {
            lo[i] = lo[i].min(g.center[i] - r);
            hi[i] = hi[i].max(g.center[i] + r);
        }
    }
    lo.push(extra.0);
    hi.push(extra.1);
    let mut panels = vec![1; d];
    panels.push(2);
    SupportBox { lo, hi, panels }
}

/// n = 1, U(1): `a_1 = h(x_2) phi(x_1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelianN1 {
    pub profile: Profile,
    pub phi: Gaussian,
}

impl Potential for AbelianN1 {
    fn n(&self) -> usize {
        1
    }
    fn rank(&self) -> usize {
        1
    }
    fn eval(&self, _j: usize, x: &[f64]) -> CMat {
        CMat::from_element(1, 1, c(self.profile.h(x[1]) * self.phi.value(&x[..1]), 0.0))
    }
    fn deriv(&self, _j: usize, l: usize, x: &[f64]) -> Option<CMat> {
        let v = if l == 0 {
            self.profile.h(x[1]) * self.phi.grad(&x[..1], 0)
        } else {
            self.profile.dh(x[1]) * self.phi.value(&x[..1])
        };
        Some(CMat::from_element(1, 1, c(v, 0.0)))
    }
    fn support(&self) -> SupportBox {
        let w = self.profile.half_support();
        hull(&[&self.phi], (-w, w))
    }
    fn sample(&self, x: &[f64], out: &mut FieldSample) -> bool {
        let (h, dh) = self.profile.both(x[1]);
        let p = self.phi.value(&x[..1]);
        let dp = -(x[0] - self.phi.center[0]) / (self.phi.sigma * self.phi.sigma) * p;
        out.a[0][(0, 0)] = c(h * p, 0.0);
        out.da[0][(0, 0)] = c(h * dp, 0.0);
        out.da[1][(0, 0)] = c(dh * p, 0.0);
        true
    }
}

/// n = 2, U(1): `a_1 = h(x_4) phi_1(x_1, x_2, x_3)`, `a_3 = h(x_4) phi_3(x_1, x_2, x_3)`,
/// `a_2 = a_4 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelianN2 {
    pub profile: Profile,
    pub phi1: Gaussian,
    pub phi3: Gaussian,
}

impl Potential for AbelianN2 {
    fn n(&self) -> usize {
        2
    }
    fn rank(&self) -> usize {
        1
    }
    fn eval(&self, j: usize, x: &[f64]) -> CMat {
        let v = match j {
            0 => self.profile.h(x[3]) * self.phi1.value(&x[..3]),
            2 => self.profile.h(x[3]) * self.phi3.value(&x[..3]),
            _ => 0.0,
        };
        CMat::from_element(1, 1, c(v, 0.0))
    }
    fn deriv(&self, j: usize, l: usize, x: &[f64]) -> Option<CMat> {
        let phi = match j {
            0 => &self.phi1,
            2 => &self.phi3,
            _ => return Some(zeros(1)),
        };
        let v = if l == 3 {
            self.profile.dh(x[3]) * phi.value(&x[..3])
        } else {
            self.profile.h(x[3]) * phi.grad(&x[..3], l)
        };
        Some(CMat::from_element(1, 1, c(v, 0.0)))
    }
    fn support(&self) -> SupportBox {
        let w = self.profile.half_support();
        hull(&[&self.phi1, &self.phi3], (-w, w))
    }
    fn sample(&self, x: &[f64], out: &mut FieldSample) -> bool {
        let (h, dh) = self.profile.both(x[3]);
        for (j, g) in [(0usize, &self.phi1), (2, &self.phi3)] {
            let p = g.value(&x[..3]);
            out.a[j][(0, 0)] = c(h * p, 0.0);
            let s2 = g.sigma * g.sigma;
            for l in 0..3 {
                out.da[j * 4 + l][(0, 0)] = c(-h * (x[l] - g.center[l]) / s2 * p, 0.0);
            }
            out.da[j * 4 + 3][(0, 0)] = c(dh * p, 0.0);
        }
        for l in 0..4 {
            out.da[4 + l][(0, 0)] = ZERO;
        }
        out.a[1][(0, 0)] = ZERO;
        true
    }
}

/// Non-abelian test family: `a_j = h(x_{2n}) phi_j(x') T_j + B_j` with Hermitian `T_j`, `B_j`
/// and Gaussians `phi_j` on the first `2n - 1` coordinates.
#[derive(Clone, Debug)]
pub struct NonAbelian {
    pub n: usize,
    pub profile: Profile,
    pub phis: Vec<Gaussian>,
    pub gens: Vec<CMat>,
    pub constants: Vec<CMat>,
}

impl NonAbelian {
    /// `SU(2)`-valued example with Pauli generators; `N = 2`.
    pub fn pauli(n: usize, profile: Profile, sigma: f64) -> Self {
        let px = CMat::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO]);
        let py = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        let pz = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)]);
        let paulis = [px, py, pz];
        let m = 2 * n - 1;
        let phis = (0..m)
            .map(|j| Gaussian {
                center: (0..m).map(|i| 0.3 * ((i + j) % 3) as f64 - 0.3).collect(),
                sigma,
                integral: 1.0 + 0.5 * j as f64,
            })
            .collect();
        let gens = (0..m).map(|j| paulis[j % 3].clone()).collect();
        let constants = (0..m)
            .map(|j| paulis[(j + 1) % 3].clone() * c(0.05 * (j + 1) as f64, 0.0))
            .collect();
        Self {
            n,
            profile,
            phis,
            gens,
            constants,
        }
    }
}

impl Potential for NonAbelian {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        self.gens[0].nrows()
    }
    fn eval(&self, j: usize, x: &[f64]) -> CMat {
        let m = 2 * self.n - 1;
        let s = self.profile.h(x[m]) * self.phis[j].value(&x[..m]);
        &self.gens[j] * c(s, 0.0) + &self.constants[j]
    }
    fn deriv(&self, j: usize, l: usize, x: &[f64]) -> Option<CMat> {
        let m = 2 * self.n - 1;
        let s = if l == m {
            self.profile.dh(x[m]) * self.phis[j].value(&x[..m])
        } else {
            self.profile.h(x[m]) * self.phis[j].grad(&x[..m], l)
        };
        Some(&self.gens[j] * c(s, 0.0))
    }
    fn support(&self) -> SupportBox {
        let w = self.profile.half_support();
        let refs: Vec<&Gaussian> = self.phis.iter().collect();
        hull(&refs, (-w, w))
    }
}

/// Smooth localised test field `a_j = phi_j(x) T_j`, each `phi_j` a Gaussian on all `2n`
/// coordinates. No kink, so lattice derivatives resolve it well.
#[derive(Clone, Debug)]
pub struct Bump {
    pub n: usize,
    pub phis: Vec<Gaussian>,
    pub gens: Vec<CMat>,
}

impl Bump {
    /// Pauli generators (`N = 2`), Gaussians of width `sigma` and total weight `strength`
    /// placed at slightly different centres so that `G` does not vanish.
    pub fn pauli(n: usize, sigma: f64, strength: f64) -> Self {
        let px = CMat::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO]);
        let py = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        let pz = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)]);
        let paulis = [px, py, pz];
        let d = 2 * n;
        let phis = (0..d - 1)
            .map(|j| Gaussian {
                center: (0..d).map(|i| 0.4 * ((i + j) % 3) as f64 - 0.4).collect(),
                sigma,
                integral: strength * (1.0 + 0.25 * j as f64),
            })
            .collect();
        let gens = (0..d - 1).map(|j| paulis[j % 3].clone()).collect();
        Self { n, phis, gens }
    }
}

impl Potential for Bump {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        self.gens[0].nrows()
    }
    fn eval(&self, j: usize, x: &[f64]) -> CMat {
        &self.gens[j] * c(self.phis[j].value(x), 0.0)
    }
    fn deriv(&self, j: usize, l: usize, x: &[f64]) -> Option<CMat> {
        Some(&self.gens[j] * c(self.phis[j].grad(x, l), 0.0))
    }
    fn support(&self) -> SupportBox {
        let d = 2 * self.n;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for g in &self.phis {
            let r = g.radius();
            for i in 0..d {
                lo[i] = lo[i].min(g.center[i] - r);
                hi[i] = hi[i].max(g.center[i] + r);
            }
        }
        SupportBox {
            lo,
            hi,
            panels: vec![1; d],
        }
    }
}

/// Pure gauge `a_j = d chi / d x_j` with `chi` a Gaussian in the first `2n - 1` coordinates.
#[derive(Clone, Debug)]
pub struct PureGauge {
    pub n: usize,
    pub chi: Gaussian,
}

impl Potential for PureGauge {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        1
    }
    fn eval(&self, j: usize, x: &[f64]) -> CMat {
        let m = 2 * self.n - 1;
        CMat::from_element(1, 1, c(self.chi.grad(&x[..m], j), 0.0))
    }
    fn deriv(&self, j: usize, l: usize, x: &[f64]) -> Option<CMat> {
        let m = 2 * self.n - 1;
        if l == m {
            return Some(zeros(1));
        }
        let y = &x[..m];
        let s2 = self.chi.sigma * self.chi.sigma;
        let v = self.chi.value(y);
        let dj = y[j] - self.chi.center[j];
        let dl = y[l] - self.chi.center[l];
        let delta = if j == l { 1.0 } else { 0.0 };
        Some(CMat::from_element(1, 1, c((dj * dl / s2 - delta) / s2 * v, 0.0)))
    }
    fn support(&self) -> SupportBox {
        let mut sb = hull(&[&self.chi], (-1.0, 1.0));
        sb.panels = vec![1; 2 * self.n];
        sb
    }
}

/// Constant Hermitian potentials (no `x_{2n}` dependence); useful as a degenerate case.
#[derive(Clone, Debug)]
pub struct Constant {
    pub n: usize,
    pub values: Vec<CMat>,
}

impl Potential for Constant {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        self.values[0].nrows()
    }
    fn eval(&self, j: usize, _x: &[f64]) -> CMat {
        self.values[j].clone()
    }
    fn deriv(&self, _j: usize, _l: usize, _x: &[f64]) -> Option<CMat> {
        Some(zeros(self.rank()))
    }
    fn support(&self) -> SupportBox {
        let d = 2 * self.n;
        SupportBox {
            lo: vec![-1.0; d],
            hi: vec![1.0; d],
            panels: vec![1; d],
        }
    }
}

/// Identically zero potential.
#[derive(Clone, Debug)]
pub struct Zero {
    pub n: usize,
    pub rank: usize,
}

impl Potential for Zero {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn eval(&self, _j: usize, _x: &[f64]) -> CMat {
        zeros(self.rank)
    }
    fn deriv(&self, _j: usize, _l: usize, _x: &[f64]) -> Option<CMat> {
        Some(zeros(self.rank))
    }
    fn support(&self) -> SupportBox {
        let d = 2 * self.n;
        SupportBox {
            lo: vec![-1.0; d],
            hi: vec![1.0; d],
            panels: vec![1; d],
        }
    }
}

/// Potentials sampled on a regular grid, multilinearly interpolated; derivatives fall
/// back to finite differences.
///
/// CSV layout: a header line `n,N,M_1,...,M_{2n},h_1,...,h_{2n},lo_1,...,lo_{2n}`, then one
/// row per grid point (row-major, last axis fastest) holding, for each spatial component
/// `j < 2n - 1`, the `N x N` entries row-major as `re,im` pairs.
#[derive(Clone, Debug)]
pub struct Sampled {
    pub n: usize,
    pub rank: usize,
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    /// `values[point][j]`.
    pub values: Vec<Vec<CMat>>,
}

impl Sampled {
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = rdr.records();
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
        };
        let head = rows
            .next()
            .ok_or_else(|| Error::Parse("empty sampled-field file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let head: Vec<f64> = head.iter().map(parse).collect::<Result<_>>()?;
        let n = head[0] as usize;
        let rank = head[1] as usize;
        let d = 2 * n;
        if head.len() != 2 + 3 * d || !(1..=2).contains(&n) || rank == 0 {
            return Err(Error::Parse("malformed sampled-field header".into()));
        }
        let dims: Vec<usize> = head[2..2 + d].iter().map(|v| *v as usize).collect();
        let spacing = head[2 + d..2 + 2 * d].to_vec();
        let origin = head[2 + 2 * d..2 + 3 * d].to_vec();
        let total: usize = dims.iter().product();
        let per = (d - 1) * rank * rank * 2;
        let mut values = Vec::with_capacity(total);
        for rec in rows {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let v: Vec<f64> = rec.iter().map(parse).collect::<Result<_>>()?;
            if v.len() != per {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {per}",
                    values.len() + 2,
                    v.len()
                )));
            }
            let comps = (0..d - 1)
                .map(|j| {
                    let off = j * rank * rank * 2;
                    CMat::from_fn(rank, rank, |r, q| {
                        let k = off + 2 * (r * rank + q);
                        c(v[k], v[k + 1])
                    })
                })
                .collect();
            values.push(comps);
        }
        if values.len() != total {
            return Err(Error::Parse(format!(
                "expected {total} rows, found {}",
                values.len()
            )));
        }
        Ok(Self {
            n,
            rank,
            dims,
            spacing,
            origin,
            values,
        })
    }
}

impl Potential for Sampled {
    fn n(&self) -> usize {
        self.n
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn eval(&self, j: usize, x: &[f64]) -> CMat {
        let d = self.dims.len();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let t = ((x[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.dims[a].saturating_sub(2));
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut out = zeros(self.rank);
        for corner in 0..1usize << d {
            let mut w = 1.0;
            let mut idx = 0usize;
            for a in 0..d {
                let up = corner >> a & 1;
                w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
                let i = (base[a] + up).min(self.dims[a] - 1);
                idx = idx * self.dims[a] + i;
            }
            if w != 0.0 {
                out += &self.values[idx][j] * c(w, 0.0);
            }
        }
        out
    }
    fn support(&self) -> SupportBox {
        let d = self.dims.len();
        SupportBox {
            lo: self.origin.clone(),
            hi: (0..d)
                .map(|a| self.origin[a] + self.spacing[a] * (self.dims[a] - 1) as f64)
                .collect(),
            panels: self.dims.iter().map(|m| (m / 8).max(1)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// curvature and contractions

/// Ordered pairs `(j, k)`, `j < k < d`, in lexicographic order.
pub fn pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect()
}

/// `R_jk = i (d_j a_k - d_k a_j + i [a_j, a_k])` for all pairs of a sample.
pub fn curvature_at(s: &FieldSample) -> Vec<CMat> {
    let d = s.a.len();
    pairs(d)
        .into_iter()
        .map(|(j, k)| {
            let inner = s.d(k, j) - s.d(j, k) + commutator(&s.a[j], &s.a[k]) * I;
            inner * I
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CurvatureField {
    pub n: usize,
    pub rank: usize,
    pub points: Vec<Vec<f64>>,
    /// `r[p][q]` for pair `q` of [`pairs`].
    pub r: Vec<Vec<CMat>>,
    pub contraction: Option<Vec<CMat>>,
}

pub fn curvature(field: &GaugeField, points: &[Vec<f64>]) -> Result<CurvatureField> {
    let mut s = FieldSample::new(field.n(), field.rank());
    let mut r = Vec::with_capacity(points.len());
    for p in points {
        field.sample(p, &mut s)?;
        r.push(curvature_at(&s));
    }
    Ok(CurvatureField {
        n: field.n(),
        rank: field.rank(),
        points: points.to_vec(),
        r,
        contraction: None,
    })
}

/// Bivectors `pi_{2n}(e_j e_k)` in [`pairs`] order.
pub fn bivectors(rep: &CliffordRep) -> Vec<CMat> {
    pairs(rep.k)
        .into_iter()
        .map(|(j, k)| rep.gen(j + 1) * rep.gen(k + 1))
        .collect()
}

/// `K = sum_{j<k} pi(e_j e_k) (x) R_jk`.
pub fn contract(biv: &[CMat], r: &[CMat]) -> CMat {
    let mut out = zeros(biv[0].nrows() * r[0].nrows());
    for (b, rr) in biv.iter().zip(r) {
        out += kron(b, rr);
    }
    out
}

pub fn clifford_contraction(mut curv: CurvatureField, rep: &CliffordRep) -> Result<CurvatureField> {
    if rep.k != 2 * curv.n {
        return Err(Error::Shape {
            expected: 2 * curv.n,
            got: rep.k,
        });
    }
    let biv = bivectors(rep);
    curv.contraction = Some(curv.r.iter().map(|r| contract(&biv, r)).collect());
    Ok(curv)
}

/// Pointwise data for `F`, `G` and `S` on `C^{2^{n-1}} (x) C^N`.
#[derive(Clone, Debug)]
pub struct OperatorData {
    pub f: CMat,
    pub g: CMat,
    /// `a_j` for `j < 2n - 1`.
    pub a: Vec<CMat>,
    /// `sum_j d_j a_j`.
    pub div: CMat,
    /// `sum_j a_j^2`.
    pub asq: CMat,
}

/// The `2n - 1` generator representation used for the spinor factor of `F` and `G`.
pub fn odd_rep(n: usize) -> Result<CliffordRep> {
    build_rep(2 * n - 1)
}

pub fn operators_fg_at(s: &FieldSample, odd: &CliffordRep) -> OperatorData {
    let d = s.a.len();
    let m = d - 1;
    let nn = s.a[0].nrows();
    let sd = odd.dim;
    let mut f = zeros(sd * nn);
    for j in 0..m {
        f -= kron(odd.gen(j + 1), s.d(j, m)) * c(2.0, 0.0);
    }
    let mut g = zeros(sd * nn);
    for (j, k) in pairs(m) {
        let inner = s.d(j, k) - s.d(k, j) - commutator(&s.a[j], &s.a[k]) * I;
        g += kron(&(odd.gen(j + 1) * odd.gen(k + 1)), &inner) * I;
    }
    let mut div = zeros(nn);
    let mut asq = zeros(nn);
    for j in 0..m {
        div += s.d(j, j);
        asq += &s.a[j] * &s.a[j];
    }
    OperatorData {
        f,
        g,
        a: s.a[..m].to_vec(),
        div,
        asq,
    }
}

pub fn operators_fg(field: &GaugeField, x: &[f64]) -> Result<OperatorData> {
    let odd = odd_rep(field.n())?;
    let mut s = FieldSample::new(field.n(), field.rank());
    field.sample(x, &mut s)?;
    Ok(operators_fg_at(&s, &odd))
}

/// `diag(F/2 - G, -F/2 - G)` with the chirality index outermost.
pub fn block_from_fg(op: &OperatorData) -> CMat {
    let half = op.f.clone() * c(0.5, 0.0);
    let top = &half - &op.g;
    let bottom = -&half - &op.g;
    let d = top.nrows();
    let mut out = zeros(2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(&top);
    out.view_mut((d, d), (d, d)).copy_from(&bottom);
    out
}

/// Maximum over `points` of `|K - diag(F/2 - G, -F/2 - G)|_F`.
pub fn block_identity_residual(field: &GaugeField, points: &[Vec<f64>]) -> Result<f64> {
    let rep = build_rep(2 * field.n())?;
    let odd = odd_rep(field.n())?;
    let biv = bivectors(&rep);
    let mut s = FieldSample::new(field.n(), field.rank());
    let mut worst: f64 = 0.0;
    for p in points {
        field.sample(p, &mut s)?;
        let k = contract(&biv, &curvature_at(&s));
        let blocks = block_from_fg(&operators_fg_at(&s, &odd));
        worst = worst.max(frob(&(k - blocks)));
    }
    Ok(worst)
}

/// Largest `|a_j - a_j^dagger|_F` over the given points.
pub fn hermiticity_defect(field: &GaugeField, points: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in points {
        for j in 0..2 * field.n() {
            let a = field.a(j, p);
            worst = worst.max(frob(&(&a - a.adjoint())));
        }
    }
    worst
}

/// Largest `|d a_j / d x_{2n}|_F` over points outside the declared support box.
pub fn support_leak(field: &GaugeField, points: &[Vec<f64>]) -> Result<f64> {
    let sb = field.support();
    let d = 2 * field.n();
    let mut worst: f64 = 0.0;
    for p in points.iter().filter(|p| !sb.contains(p)) {
        for j in 0..d - 1 {
            worst = worst.max(frob(&field.da(j, d - 1, p)?));
        }
    }
    Ok(worst)
}

pub fn identity_fiber(n: usize, rank: usize) -> CMat {
    eye((1 << n) * rank)
}

/// Index set `{j+1, k+1}` for a 0-based pair.
pub fn pair_set(j: usize, k: usize) -> CliffordIndexSet {
    CliffordIndexSet::new(vec![j + 1, k + 1]).expect("ordered pair")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn n1_field() -> GaugeField {
        GaugeField::new(Arc::new(AbelianN1 {
            profile: Profile {
                alpha: 0.0,
                beta: 2.0 * PI,
                width: 0.5,
            },
            phi: Gaussian {
                center: vec![0.2],
                sigma: 1.0,
                integral: 1.0,
            },
        }))
    }

    fn n2_field() -> GaugeField {
        GaugeField::new(Arc::new(AbelianN2 {
            profile: Profile {
                alpha: 0.0,
                beta: 1.0,
                width: 0.5,
            },
            phi1: Gaussian {
                center: vec![0.0, 0.0, 0.0],
                sigma: 1.0,
                integral: 1.0,
            },
            phi3: Gaussian {
                center: vec![0.1, 0.7, -0.2],
                sigma: 0.8,
                integral: 2.0,
            },
        }))
    }

    fn nonabelian(n: usize) -> GaugeField {
        GaugeField::new(Arc::new(NonAbelian::pauli(
            n,
            Profile {
                alpha: -0.5,
                beta: 1.0,
                width: 0.7,
            },
            0.9,
        )))
    }

    fn random_points(d: usize, count: usize, seed: u64, span: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..d).map(|_| rng.random_range(-span..span)).collect())
            .collect()
    }

    #[test]
    fn zero_field_has_zero_everything() {
        let f = GaugeField::new(Arc::new(Zero { n: 2, rank: 2 }));
        let pts = random_points(4, 5, 1, 3.0);
        let cf = clifford_contraction(curvature(&f, &pts).unwrap(), &build_rep(4).unwrap()).unwrap();
        for (r, k) in cf.r.iter().zip(cf.contraction.as_ref().unwrap()) {
            assert!(r.iter().all(|m| frob(m) == 0.0));
            assert_eq!(frob(k), 0.0);
        }
        let op = operators_fg(&f, &pts[0]).unwrap();
        assert_eq!(frob(&op.f) + frob(&op.g) + frob(&op.div) + frob(&op.asq), 0.0);
    }

    #[test]
    fn n1_curvature_by_hand() {
        let f = n1_field();
        for p in random_points(2, 20, 2, 3.0) {
            let cf = curvature(&f, std::slice::from_ref(&p)).unwrap();
            let prof = Profile {
                alpha: 0.0,
                beta: 2.0 * PI,
                width: 0.5,
            };
            let phi = (-(p[0] - 0.2f64).powi(2) / 2.0).exp() / (2.0 * PI).sqrt();
            let want = c(0.0, -prof.dh(p[1]) * phi);
            assert!((cf.r[0][0][(0, 0)] - want).norm() < 1e-13);
            let op = operators_fg(&f, &p).unwrap();
            assert!((op.f[(0, 0)] - c(-2.0 * prof.dh(p[1]) * phi, 0.0)).norm() < 1e-13);
            assert_eq!(frob(&op.g), 0.0);
            let k = contract(&bivectors(&build_rep(2).unwrap()), &cf.r[0]);
            let blocks = block_from_fg(&op);
            assert!(frob(&(k - blocks)) < 1e-13);
        }
    }

    #[test]
    fn constant_noncommuting_n1_is_flat() {
        let f = GaugeField::new(Arc::new(Constant {
            n: 1,
            values: vec![CMat::from_row_slice(2, 2, &[ZERO, I, -I, c(0.3, 0.0)])],
        }));
        let cf = curvature(&f, &random_points(2, 4, 3, 2.0)).unwrap();
        for r in &cf.r {
            assert_eq!(frob(&r[0]), 0.0);
        }
    }

    #[test]
    fn analytic_matches_finite_difference() {
        for f in [n1_field(), n2_field(), nonabelian(1), nonabelian(2)] {
            let d = 2 * f.n();
            let fd = f.clone().with_finite_differences(FdStep::Absolute(1e-4));
            for p in random_points(d, 10, 4, 2.0) {
                for j in 0..d {
                    for l in 0..d {
                        let a = f.da(j, l, &p).unwrap();
                        let b = fd.da(j, l, &p).unwrap();
                        assert!(frob(&(a - b)) < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn fd_step_underflow_is_config_error() {
        let f = n1_field().with_finite_differences(FdStep::Relative(1e-12));
        assert!(matches!(f.da(0, 0, &[0.0, 0.0]), Err(Error::Config { .. })));
    }

    #[test]
    fn block_identity_and_hermiticity() {
        for f in [n1_field(), n2_field(), nonabelian(1), nonabelian(2)] {
            let d = 2 * f.n();
            let pts = random_points(d, 25, 5, 2.5);
            assert!(block_identity_residual(&f, &pts).unwrap() < 1e-10);
            assert!(hermiticity_defect(&f, &pts) < 1e-10);
            for p in &pts {
                let op = operators_fg(&f, p).unwrap();
                assert!(frob(&(&op.f - op.f.adjoint())) < 1e-10);
                assert!(frob(&(&op.g - op.g.adjoint())) < 1e-10);
            }
        }
    }

    #[test]
    fn pure_gauge_is_flat() {
        for n in [1, 2] {
            let f = GaugeField::new(Arc::new(PureGauge {
                n,
                chi: Gaussian {
                    center: vec![0.1; 2 * n - 1],
                    sigma: 0.9,
                    integral: 1.5,
                },
            }));
            let cf = curvature(&f, &random_points(2 * n, 30, 6, 2.0)).unwrap();
            for r in cf.r.iter().flatten() {
                assert!(frob(r) < 1e-8);
            }
        }
    }

    #[test]
    fn a_last_component_is_structurally_zero() {
        let f = nonabelian(2);
        assert_eq!(frob(&f.a(3, &[0.1, 0.2, 0.3, 0.4])), 0.0);
        let mut s = FieldSample::new(2, 2);
        f.sample(&[0.1, 0.2, 0.3, 0.4], &mut s).unwrap();
        assert_eq!(frob(&s.a[3]), 0.0);
    }

    #[test]
    fn support_box_holds() {
        let f = n2_field();
        let sb = f.support();
        let mut pts = random_points(4, 40, 7, 4.0);
        for p in pts.iter_mut() {
            p[3] = if p[3] > 0.0 { sb.hi[3] + 0.5 } else { sb.lo[3] - 0.5 };
        }
        assert!(support_leak(&f, &pts).unwrap() < 1e-12);
    }

    #[test]
    fn sample_path_matches_component_path() {
        for f in [n1_field(), n2_field()] {
            let d = 2 * f.n();
            for p in random_points(d, 10, 8, 3.0) {
                let mut fast = FieldSample::new(f.n(), 1);
                f.sample(&p, &mut fast).unwrap();
                for j in 0..d {
                    assert!(frob(&(&fast.a[j] - f.a(j, &p))) < 1e-14);
                    for l in 0..d {
                        assert!(frob(&(fast.d(j, l) - f.da(j, l, &p).unwrap())) < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_csv_round_trip() {
        // n = 1, N = 1, 3x3 grid with a_1 = x_1 + 2 x_2
        let mut text = String::from("1,1,3,3,0.5,0.5,-0.5,-0.5\n");
        for i in 0..3 {
            for j in 0..3 {
                let x = -0.5 + 0.5 * i as f64;
                let y = -0.5 + 0.5 * j as f64;
                text.push_str(&format!("{},0\n", x + 2.0 * y));
            }
        }
        let s = Sampled::from_csv(&text).unwrap();
        let f = GaugeField::new(Arc::new(s));
        let v = f.a(0, &[0.1, -0.2]);
        assert!((v[(0, 0)].re - (0.1 - 0.4)).abs() < 1e-12);
        let dx = f.da(0, 1, &[0.1, -0.2]).unwrap();
        assert!((dx[(0, 0)].re - 2.0).abs() < 1e-9);
        assert!(Sampled::from_csv("1,1,2,2,1,1,0,0\n0,0\n").is_err());
    }
}
