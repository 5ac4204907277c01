//! Periodic lattice discretisation of `D_+ = d_{2n} + i sum c_j d_j + A` on one chirality
//! space `L^2 (x) C^{2^{n-1}} (x) C^N`.
//!
//! Vectors are stored component-major: `v[comp * sites + site]` with
//! `comp = spin * N + gauge` and sites row-major, axis 0 slowest.
//! Derivatives are diagonal in the DFT basis with symbol `i s(k)`; the Nyquist mode keeps
//! its symbol, so `d` stays anti-Hermitian and `Delta` has symbol `sum s(k)^2` on every mode.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordRep;
use crate::error::{config_err, Error, Result};
use crate::gauge::{odd_rep, operators_fg_at, FieldSample, GaugeField};
use crate::linalg::{c, CMat, C64, I, ZERO};

pub const DENSE_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Fourier,
    Fd2,
    Fd4,
}

/// How the field is continued to the periodic box along `x_{2n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Sample the field as is.
    Periodic,
    /// Reflect `x_{2n}` about `+-L/4`: the profile's kink at 0 gets an anti-kink at `+-L/2`.
    Mirror,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageMode {
    MatrixFree,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n: usize,
    pub rank: usize,
    /// Box length per axis.
    pub length: f64,
    /// Points per axis.
    pub points: usize,
    pub scheme: Scheme,
    pub closure: Closure,
    /// Width of the smooth trace window `chi(x_{2n})` supported on `|x_{2n}| < L/4`;
    /// `None` traces over the whole box.
    pub window: Option<f64>,
}

impl LatticeSpec {
    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn sites(&self) -> usize {
        self.points.pow(2 * self.n as u32)
    }

    pub fn components(&self) -> usize {
        (1 << (self.n - 1)) * self.rank
    }

    /// Hilbert dimension of one chirality.
    pub fn dim(&self) -> usize {
        self.sites() * self.components()
    }

    /// `(pi M / L)^2`, the largest free eigenvalue along one axis.
    pub fn cutoff_k2(&self) -> f64 {
        (PI * self.points as f64 / self.length).powi(2)
    }

    /// Upper end of the usable scaling window.
    pub fn lambda_max(&self) -> f64 {
        0.1 * self.cutoff_k2()
    }

    /// Allowed interval for the field support along `axis`: the box (or, along a mirrored
    /// `x_{2n}`, the half-period cell) shrunk by 15% of its length on each side.
    pub fn allowed(&self, axis: usize) -> (f64, f64) {
        let cell = if axis == 2 * self.n - 1 && self.closure == Closure::Mirror {
            self.length / 2.0
        } else {
            self.length
        };
        let half = cell / 2.0 - 0.15 * cell;
        (-half, half)
    }

    pub fn validate(&self, field: Option<&GaugeField>) -> Result<()> {
        if !(1..=2).contains(&self.n) {
            return Err(config_err("lattice.n", "only n = 1, 2 are supported"));
        }
        if self.points < 2 || self.length <= 0.0 {
            return Err(config_err("lattice.points", "need at least 2 points and L > 0"));
        }
        if self.scheme == Scheme::Fourier && self.points % 2 != 0 {
            return Err(config_err("lattice.points", "fourier scheme needs an even M"));
        }
        if let Some(s) = self.window {
            if !(s > 0.0 && s < self.length / 8.0) {
                return Err(config_err("lattice.window", "window width must lie in (0, L/8)"));
            }
        }
        if let Some(f) = field {
            if f.n() != self.n || f.rank() != self.rank {
                return Err(config_err("lattice.n", "lattice and field disagree on n or N"));
            }
            let sb = f.support();
            for a in 0..2 * self.n {
                let (lo, hi) = self.allowed(a);
                if sb.lo[a] < lo - 1e-12 || sb.hi[a] > hi + 1e-12 {
                    return Err(config_err(
                        "lattice.length",
                        format!(
                            "support [{:.3}, {:.3}] on axis {} leaves the margin window [{lo:.3}, {hi:.3}]",
                            sb.lo[a], sb.hi[a], a + 1
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Reflection of `t` into `[-L/4, L/4]` and the derivative of the map.
pub fn mirror_fold(t: f64, length: f64) -> (f64, f64) {
    let q = length / 4.0;
    if t > q {
        (length / 2.0 - t, -1.0)
    } else if t < -q {
        (-length / 2.0 - t, -1.0)
    } else {
        (t, 1.0)
    }
}

/// `chi(t) = (tanh((t + L/4)/s) - tanh((t - L/4)/s)) / 2`.
pub fn window_weight(t: f64, length: f64, s: f64) -> f64 {
    let q = length / 4.0;
    0.5 * (((t + q) / s).tanh() - ((t - q) / s).tanh())
}

/// Grid geometry, derivative symbols and FFT plans.
#[derive(Clone)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub coords: Vec<f64>,
    /// `s(k)` per DFT index; the derivative acts as `i s(k)`.
    pub symbol: Vec<f64>,
    /// `sum_a s(k_a)^2` per DFT mode, in site order.
    free_eigs: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lattice").field("spec", &self.spec).finish()
    }
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Self {
        let m = spec.points;
        let dx = spec.spacing();
        let coords = (0..m).map(|i| -spec.length / 2.0 + dx * i as f64).collect();
        let symbol: Vec<f64> = (0..m)
            .map(|q| {
                let qi = if q < m / 2 { q as f64 } else { q as f64 - m as f64 };
                let k = 2.0 * PI * qi / spec.length;
                match spec.scheme {
                    Scheme::Fourier => k,
                    Scheme::Fd2 => (k * dx).sin() / dx,
                    Scheme::Fd4 => (8.0 * (k * dx).sin() - (2.0 * k * dx).sin()) / (6.0 * dx),
                }
            })
            .collect();
        let d = 2 * spec.n;
        let free_eigs = (0..spec.sites())
            .map(|mode| {
                let mut r = mode;
                let mut acc = 0.0;
                for _ in 0..d {
                    let s = symbol[r % m];
                    acc += s * s;
                    r /= m;
                }
                acc
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        Self {
            spec,
            coords,
            symbol,
            free_eigs,
            fwd,
            inv,
        }
    }

    pub fn d(&self) -> usize {
        2 * self.spec.n
    }

    pub fn sites(&self) -> usize {
        self.spec.sites()
    }

    /// Coordinates of a site.
    pub fn position(&self, site: usize) -> Vec<f64> {
        let m = self.spec.points;
        let d = self.d();
        let mut x = vec![0.0; d];
        let mut r = site;
        for a in (0..d).rev() {
            x[a] = self.coords[r % m];
            r /= m;
        }
        x
    }

    /// Free eigenvalue `sum_a s(k_a)^2` of a DFT mode given in site order.
    pub fn free_eigenvalue(&self, mode: usize) -> f64 {
        self.free_eigs[mode]
    }

    /// Gather the lines along `axis` into `buf` (each line contiguous), or scatter back.
    fn shuffle(&self, axis: usize, data: &mut [C64], buf: &mut [C64], gather: bool) {
        let m = self.spec.points;
        let stride = m.pow((self.d() - 1 - axis) as u32);
        let outer = self.sites() / (m * stride);
        let mut line = 0;
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * m * stride + inner;
                let dst = &mut buf[line * m..(line + 1) * m];
                if gather {
                    for (t, z) in dst.iter_mut().enumerate() {
                        *z = data[base + t * stride];
                    }
                } else {
                    for (t, z) in dst.iter().enumerate() {
                        data[base + t * stride] = *z;
                    }
                }
                line += 1;
            }
        }
    }

    /// Batched 1-d transforms of every line along `axis`, in place.
    fn axis_fft(&self, axis: usize, data: &mut [C64], forward: bool, work: &mut Work) {
        let plan = if forward { &self.fwd } else { &self.inv };
        if work.scratch.len() < plan.get_inplace_scratch_len() {
            work.scratch.resize(plan.get_inplace_scratch_len(), ZERO);
        }
        if axis == self.d() - 1 {
            plan.process_with_scratch(data, &mut work.scratch);
            return;
        }
        work.buf.resize(data.len(), ZERO);
        let mut buf = std::mem::take(&mut work.buf);
        self.shuffle(axis, data, &mut buf, true);
        plan.process_with_scratch(&mut buf, &mut work.scratch);
        self.shuffle(axis, data, &mut buf, false);
        work.buf = buf;
    }

    /// `dst = d_axis src` for a scalar field.
    pub fn derivative(&self, axis: usize, src: &[C64], dst: &mut [C64]) {
        let mut work = Work::default();
        self.derivative_with(axis, src, dst, &mut work);
    }

    pub(crate) fn derivative_with(&self, axis: usize, src: &[C64], dst: &mut [C64], work: &mut Work) {
        let m = self.spec.points;
        let stride = m.pow((self.d() - 1 - axis) as u32);
        dst.copy_from_slice(src);
        self.axis_fft(axis, dst, true, work);
        let scale = 1.0 / m as f64;
        // after the forward pass the DFT index of entry `i` along `axis` is `(i / stride) % m`
        for (i, z) in dst.iter_mut().enumerate() {
            let q = (i / stride) % m;
            *z *= I * (self.symbol[q] * scale);
        }
        self.axis_fft(axis, dst, false, work);
    }

    /// `data <- g(Delta_free) data` for a scalar field, `g` given on free eigenvalues.
    pub fn free_function(&self, data: &mut [C64], g: &dyn Fn(f64) -> f64) {
        let mut work = Work::default();
        self.free_function_with(data, g, &mut work);
    }

    pub(crate) fn free_function_with(&self, data: &mut [C64], g: &dyn Fn(f64) -> f64, work: &mut Work) {
        for a in 0..self.d() {
            self.axis_fft(a, data, true, work);
        }
        let scale = 1.0 / self.sites() as f64;
        for (z, e) in data.iter_mut().zip(&self.free_eigs) {
            *z *= g(*e) * scale;
        }
        for a in 0..self.d() {
            self.axis_fft(a, data, false, work);
        }
    }

    /// Trace weight per site (window, or 1).
    pub fn weights(&self) -> Vec<f64> {
        let d = self.d();
        (0..self.sites())
            .map(|s| match self.spec.window {
                Some(w) => window_weight(self.position(s)[d - 1], self.spec.length, w),
                None => 1.0,
            })
            .collect()
    }
}

/// Reusable FFT buffers.
#[derive(Default)]
pub(crate) struct Work {
    buf: Vec<C64>,
    scratch: Vec<C64>,
}

/// Per-site fibre data: matrices on `C^{2^{n-1}} (x) C^N`, row-major `C x C` blocks.
#[derive(Clone, Debug)]
struct SiteField {
    a_mult: Vec<C64>,
    f: Vec<C64>,
    g: Vec<C64>,
    /// `1 (x) a_j`, one block per spatial `j`.
    a: Vec<Vec<C64>>,
    /// `-i (1 (x) (d_j a_j + i a_j^2))` summed over `j`.
    s0: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    DiracPlus,
    DiracMinus,
    DPlus,
    DMinus,
    Delta,
    Delta1,
    Delta2,
    S,
    F,
    G,
    /// `Delta_1 - Delta`.
    V1,
    /// `Delta_2 - Delta`.
    V2,
    /// `S + F/2 + G`.
    V1Formula,
    /// `S - F/2 + G`.
    V2Formula,
}

/// Discretised operators for one field on one lattice.
#[derive(Clone, Debug)]
pub struct LatticeOperatorSet {
    pub lat: Lattice,
    pub mode: StorageMode,
    odd: CliffordRep,
    comps: usize,
    site: SiteField,
}

fn flat_block(m: &CMat) -> Vec<C64> {
    let c = m.nrows();
    let mut out = Vec::with_capacity(c * c);
    for r in 0..c {
        for q in 0..c {
            out.push(m[(r, q)]);
        }
    }
    out
}

pub fn build_lattice(spec: &LatticeSpec, field: &GaugeField, mode: StorageMode) -> Result<LatticeOperatorSet> {
    spec.validate(Some(field))?;
    if mode == StorageMode::Dense && spec.dim() > DENSE_LIMIT {
        return Err(Error::Capacity(format!(
            "dense mode needs dim <= {DENSE_LIMIT}, lattice has {}",
            spec.dim()
        )));
    }
    let lat = Lattice::new(spec.clone());
    let n = spec.n;
    let d = 2 * n;
    let nn = spec.rank;
    let odd = odd_rep(n)?;
    let comps = spec.components();
    let sites = lat.sites();
    let cc = comps * comps;
    let mut site = SiteField {
        a_mult: vec![ZERO; sites * cc],
        f: vec![ZERO; sites * cc],
        g: vec![ZERO; sites * cc],
        a: vec![vec![ZERO; sites * cc]; d - 1],
        s0: vec![ZERO; sites * cc],
    };
    let spin_id = crate::linalg::eye(odd.dim);
    let mut sample = FieldSample::new(n, nn);
    for s in 0..sites {
        let mut x = lat.position(s);
        let mut flip = 1.0;
        if spec.closure == Closure::Mirror {
            let (t, dt) = mirror_fold(x[d - 1], spec.length);
            x[d - 1] = t;
            flip = dt;
        }
        field.sample(&x, &mut sample)?;
        for j in 0..d {
            let k = j * d + d - 1;
            sample.da[k] *= c(flip, 0.0);
        }
        let op = operators_fg_at(&sample, &odd);
        let mut amult = crate::linalg::zeros(comps);
        for j in 0..d - 1 {
            amult -= crate::linalg::kron(odd.gen(j + 1), &sample.a[j]);
            site.a[j][s * cc..(s + 1) * cc].copy_from_slice(&flat_block(&crate::linalg::kron(&spin_id, &sample.a[j])));
        }
        let s0 = crate::linalg::kron(&spin_id, &(&op.div + &op.asq * I)) * (-I);
        site.a_mult[s * cc..(s + 1) * cc].copy_from_slice(&flat_block(&amult));
        site.f[s * cc..(s + 1) * cc].copy_from_slice(&flat_block(&op.f));
        site.g[s * cc..(s + 1) * cc].copy_from_slice(&flat_block(&op.g));
        site.s0[s * cc..(s + 1) * cc].copy_from_slice(&flat_block(&s0));
    }
    Ok(LatticeOperatorSet {
        lat,
        mode,
        odd,
        comps,
        site,
    })
}

impl LatticeOperatorSet {
    pub fn dim(&self) -> usize {
        self.lat.spec.dim()
    }

    pub fn sites(&self) -> usize {
        self.lat.sites()
    }

    pub fn components(&self) -> usize {
        self.comps
    }

    /// `out += alpha * P(x) v` for per-site blocks `p`.
    fn pointwise_add(&self, p: &[C64], alpha: C64, v: &[C64], out: &mut [C64]) {
        let cs = self.comps;
        let sites = self.sites();
        let cc = cs * cs;
        for s in 0..sites {
            let blk = &p[s * cc..(s + 1) * cc];
            for r in 0..cs {
                let mut acc = ZERO;
                for q in 0..cs {
                    let w = blk[r * cs + q];
                    if w != ZERO {
                        acc += w * v[q * sites + s];
                    }
                }
                out[r * sites + s] += alpha * acc;
            }
        }
    }

    /// `out = d_axis v` component by component.
    fn derivative(&self, axis: usize, v: &[C64], out: &mut [C64]) {
        let sites = self.sites();
        let mut work = Work::default();
        for comp in 0..self.comps {
            let r = comp * sites..(comp + 1) * sites;
            self.lat.derivative_with(axis, &v[r.clone()], &mut out[r], &mut work);
        }
    }

    /// `out += alpha (c_j (x) 1) v`.
    fn spin_add(&self, j: usize, alpha: C64, v: &[C64], out: &mut [C64]) {
        let sites = self.sites();
        let nn = self.lat.spec.rank;
        let cj = self.odd.gen(j + 1);
        let sd = self.odd.dim;
        for a in 0..sd {
            for b in 0..sd {
                let w = cj[(a, b)];
                if w == ZERO {
                    continue;
                }
                for g in 0..nn {
                    let dst = (a * nn + g) * sites;
                    let src = (b * nn + g) * sites;
                    for s in 0..sites {
                        out[dst + s] += alpha * w * v[src + s];
                    }
                }
            }
        }
    }

    /// `out = sign d_{2n} v + i sum_j c_j d_j v`.
    fn dirac(&self, sign: f64, v: &[C64], out: &mut [C64]) {
        let d = self.lat.d();
        let mut tmp = vec![ZERO; v.len()];
        self.derivative(d - 1, v, out);
        if sign < 0.0 {
            out.iter_mut().for_each(|z| *z = -*z);
        }
        for j in 0..d - 1 {
            self.derivative(j, v, &mut tmp);
            self.spin_add(j, I, &tmp, out);
        }
    }

    fn free_delta(&self, v: &[C64], out: &mut [C64]) {
        out.copy_from_slice(v);
        let sites = self.sites();
        let mut work = Work::default();
        for comp in 0..self.comps {
            self.lat
                .free_function_with(&mut out[comp * sites..(comp + 1) * sites], &|e| e, &mut work);
        }
    }

    fn s_apply(&self, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        let d = self.lat.d();
        let mut tmp = vec![ZERO; v.len()];
        for j in 0..d - 1 {
            self.derivative(j, v, &mut tmp);
            self.pointwise_add(&self.site.a[j], c(0.0, -2.0), &tmp, out);
        }
        self.pointwise_add(&self.site.s0, c(1.0, 0.0), v, out);
    }

    /// `out = op v`.
    pub fn apply(&self, op: Op, v: &[C64], out: &mut [C64]) {
        let one = c(1.0, 0.0);
        match op {
            Op::DiracPlus => self.dirac(1.0, v, out),
            Op::DiracMinus => self.dirac(-1.0, v, out),
            Op::DPlus => {
                self.dirac(1.0, v, out);
                self.pointwise_add(&self.site.a_mult, one, v, out);
            }
            Op::DMinus => {
                self.dirac(-1.0, v, out);
                self.pointwise_add(&self.site.a_mult, one, v, out);
            }
            Op::Delta => self.free_delta(v, out),
            Op::Delta1 | Op::Delta2 => {
                let (first, second) = if op == Op::Delta1 {
                    (Op::DMinus, Op::DPlus)
                } else {
                    (Op::DPlus, Op::DMinus)
                };
                let mut tmp = vec![ZERO; v.len()];
                self.apply(first, v, &mut tmp);
                self.apply(second, &tmp, out);
            }
            Op::S => self.s_apply(v, out),
            Op::F | Op::G => {
                out.iter_mut().for_each(|z| *z = ZERO);
                let p = if op == Op::F { &self.site.f } else { &self.site.g };
                self.pointwise_add(p, one, v, out);
            }
            Op::V1 | Op::V2 => {
                let full = if op == Op::V1 { Op::Delta1 } else { Op::Delta2 };
                self.apply(full, v, out);
                let mut tmp = vec![ZERO; v.len()];
                self.free_delta(v, &mut tmp);
                for (o, t) in out.iter_mut().zip(&tmp) {
                    *o -= t;
                }
            }
            Op::V1Formula | Op::V2Formula => {
                self.s_apply(v, out);
                let half = if op == Op::V1Formula { 0.5 } else { -0.5 };
                self.pointwise_add(&self.site.f, c(half, 0.0), v, out);
                self.pointwise_add(&self.site.g, one, v, out);
            }
        }
    }

    pub fn apply_vec(&self, op: Op, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        self.apply(op, v, &mut out);
        out
    }

    /// `(lambda + Delta_free)^{-p} v`, exact in the DFT basis.
    pub fn free_resolvent(&self, lambda: f64, p: i32, v: &mut [C64]) {
        let sites = self.sites();
        let mut work = Work::default();
        for comp in 0..self.comps {
            self.lat.free_function_with(
                &mut v[comp * sites..(comp + 1) * sites],
                &|e| (lambda + e).powi(-p),
                &mut work,
            );
        }
    }

    /// Materialise `op` column by column.
    pub fn dense(&self, op: Op) -> Result<CMat> {
        let dim = self.dim();
        if dim > DENSE_LIMIT {
            return Err(Error::Capacity(format!(
                "dense materialisation needs dim <= {DENSE_LIMIT}, got {dim}"
            )));
        }
        let cols: Vec<Vec<C64>> = (0..dim)
            .into_par_iter()
            .map(|i| {
                let mut e = vec![ZERO; dim];
                e[i] = c(1.0, 0.0);
                self.apply_vec(op, &e)
            })
            .collect();
        Ok(CMat::from_fn(dim, dim, |r, q| cols[q][r]))
    }

    /// Trace weights per basis vector (site weights repeated over components).
    pub fn weights(&self) -> Vec<f64> {
        let w = self.lat.weights();
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.comps {
            out.extend_from_slice(&w);
        }
        out
    }
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A smooth, well-resolved test vector: a Gaussian of width `sigma` per component, shifted
/// and phased differently on each component.
pub fn smooth_vector(ops: &LatticeOperatorSet, sigma: f64) -> Vec<C64> {
    let sites = ops.sites();
    let mut v = vec![ZERO; ops.dim()];
    for comp in 0..ops.components() {
        for s in 0..sites {
            let x = ops.lat.position(s);
            let r2: f64 = x
                .iter()
                .enumerate()
                .map(|(a, t)| (t - 0.3 * a as f64 + 0.2 * comp as f64).powi(2))
                .sum();
            let g = (-r2 / (2.0 * sigma * sigma)).exp();
            v[comp * sites + s] = c(g, 0.1 * (comp as f64 + 1.0) * g * x[0]);
        }
    }
    v
}

/// `|(Delta_l - Delta) v - (S +- F/2 + G) v| / |v|` for `l = 1, 2`.
pub fn v_identity_residuals(ops: &LatticeOperatorSet, v: &[C64]) -> (f64, f64) {
    let nv = norm(v);
    let res = |a: Op, b: Op| {
        let x = ops.apply_vec(a, v);
        let y = ops.apply_vec(b, v);
        let d: Vec<C64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
        norm(&d) / nv
    };
    (res(Op::V1, Op::V1Formula), res(Op::V2, Op::V2Formula))
}
