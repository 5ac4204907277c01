//! Irreducible matrix representations of the complex Clifford algebra Cl_k.
//!
//! Generators are built recursively:
//!
//! * `k = 1`: `e1 -> [1]`
//! * `k = 2m`: `e_i -> pi_{2m-1}(e_i) (x) sx` for `i <= 2m-1`, `e_{2m} -> 1 (x) [[0, i], [-i, 0]]`
//! * `k = 2m+1`: the first `2m` generators of `pi_{2m}`, and `e_{2m+1} -> diag(1, -1)` in block form.
//!
//! In `A (x) B` the right factor `B` is the outer 2x2 block, so in code the new factor
//! sits in front: `kron(sx, c_i)`.
//!
//! Composite fibres `C^{2^n} (x) C^N` keep the spinor index outermost; a block `(a, b)`
//! of a fibre matrix is the `N x N` matrix acting on the gauge slot.

use crate::error::{Error, Result};
use crate::linalg::{c, eye, frob, kron, trace, zeros, CMat, C64, I, ONE, ZERO};

pub const MAX_K: usize = 20;

#[derive(Clone, Debug)]
pub struct CliffordRep {
    pub k: usize,
    pub dim: usize,
    pub generators: Vec<CMat>,
    /// `pi_{k+1}(e_{k+1})` for even `k`; `None` for odd `k`.
    pub grading: Option<CMat>,
}

/// Sorted subset of `{1, ..., k}` (1-based, as in `e_I = e_{i1} ... e_{ij}`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CliffordIndexSet(Vec<usize>);

impl CliffordIndexSet {
    pub fn new(members: Vec<usize>) -> Result<Self> {
        if members.iter().any(|&i| i == 0) {
            return Err(Error::Domain("Clifford indices are 1-based".into()));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "index set {members:?} is not strictly increasing"
            )));
        }
        Ok(Self(members))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `{1, ..., k}`.
    pub fn full(k: usize) -> Self {
        Self((1..=k).collect())
    }

    /// Subset encoded by the low `k` bits of `mask`.
    pub fn from_mask(mask: u64, k: usize) -> Self {
        Self((0..k).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Every subset of `{1, ..., k}`.
    pub fn all(k: usize) -> impl Iterator<Item = Self> {
        (0..1u64 << k).map(move |m| Self::from_mask(m, k))
    }
}

fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

fn sigma_e2m() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, I, -I, ZERO])
}

fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
}

fn recursion(k: usize) -> Vec<CMat> {
    if k == 1 {
        return vec![eye(1)];
    }
    let prev = recursion(k - 1);
    if k % 2 == 0 {
        let half = prev[0].nrows();
        let mut out: Vec<CMat> = prev.iter().map(|g| kron(&sigma_x(), g)).collect();
        out.push(kron(&sigma_e2m(), &eye(half)));
        out
    } else {
        let half = prev[0].nrows() / 2;
        let mut out = prev;
        out.push(kron(&sigma_z(), &eye(half)));
        out
    }
}

pub fn build_rep(k: usize) -> Result<CliffordRep> {
    if k == 0 || k > MAX_K {
        return Err(Error::SizeLimit(format!("k = {k} outside 1..={MAX_K}")));
    }
    let generators = recursion(k);
    let dim = generators[0].nrows();
    let grading = if k % 2 == 0 {
        recursion(k + 1).pop()
    } else {
        None
    };
    Ok(CliffordRep {
        k,
        dim,
        generators,
        grading,
    })
}

impl CliffordRep {
    /// `c_i`, 1-based.
    pub fn gen(&self, i: usize) -> &CMat {
        &self.generators[i - 1]
    }

    pub fn n(&self) -> Option<usize> {
        (self.k % 2 == 0).then_some(self.k / 2)
    }

    pub fn basis_element(&self, set: &CliffordIndexSet) -> Result<CMat> {
        basis_element(self, set)
    }
}

/// `max_{i,j} |c_i c_j + c_j c_i - 2 delta_ij|_F`.
pub fn relation_defect(rep: &CliffordRep) -> f64 {
    let id = eye(rep.dim);
    let mut worst: f64 = 0.0;
    for i in 0..rep.k {
        for j in i..rep.k {
            let (a, b) = (&rep.generators[i], &rep.generators[j]);
            let mut ac = a * b + b * a;
            if i == j {
                ac -= &id * c(2.0, 0.0);
            }
            worst = worst.max(frob(&ac));
        }
    }
    worst
}

/// `pi_k(e_I)` as the literal ordered product.
pub fn basis_element(rep: &CliffordRep, set: &CliffordIndexSet) -> Result<CMat> {
    if let Some(top) = set.max() {
        if top > rep.k {
            return Err(Error::Domain(format!(
                "index {top} exceeds generator count {}",
                rep.k
            )));
        }
    }
    let mut out = eye(rep.dim);
    for &i in set.members() {
        out *= rep.gen(i);
    }
    Ok(out)
}

/// Closed-form trace of `pi_{2m-1}(e_I)` for `I` a subset of `{1, ..., 2m-1}`.
pub fn trace_basis(m: usize, set: &CliffordIndexSet) -> Result<C64> {
    check_odd_subset(m, set)?;
    if set.is_empty() {
        Ok(c(2f64.powi(m as i32 - 1), 0.0))
    } else if set.len() == 2 * m - 1 {
        Ok(c(0.0, -2.0).powu(m as u32 - 1))
    } else {
        Ok(ZERO)
    }
}

/// Trace of `pi_{2m-1}(e_I)` from the matrices themselves.
pub fn trace_basis_explicit(m: usize, set: &CliffordIndexSet) -> Result<C64> {
    check_odd_subset(m, set)?;
    let rep = build_rep(2 * m - 1)?;
    Ok(trace(&basis_element(&rep, set)?))
}

fn check_odd_subset(m: usize, set: &CliffordIndexSet) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("m must be positive".into()));
    }
    if set.max().is_some_and(|t| t > 2 * m - 1) {
        return Err(Error::Domain(format!(
            "index set {:?} not contained in 1..={}",
            set.members(),
            2 * m - 1
        )));
    }
    Ok(())
}

fn even_rep_dims(rep: &CliffordRep, mat: &CMat) -> Result<(usize, usize)> {
    if rep.k % 2 != 0 {
        return Err(Error::Domain("an even generator count is required".into()));
    }
    let s = rep.dim;
    if mat.nrows() != mat.ncols() || mat.nrows() % s != 0 {
        return Err(Error::Shape {
            expected: s,
            got: mat.nrows(),
        });
    }
    Ok((s, mat.nrows() / s))
}

/// `Tr(M (grading (x) 1_N))` for `M` on `C^{2^n} (x) C^N`.
pub fn super_trace(rep: &CliffordRep, mat: &CMat) -> Result<C64> {
    let (s, n) = even_rep_dims(rep, mat)?;
    let grading = rep.grading.as_ref().expect("even k has a grading");
    let mut acc = ZERO;
    for a in 0..s {
        for b in 0..s {
            let w = grading[(b, a)];
            if w == ZERO {
                continue;
            }
            for r in 0..n {
                acc += w * mat[(a * n + r, b * n + r)];
            }
        }
    }
    Ok(acc)
}

/// Partial trace `Tr_spinor((P^dagger (x) 1) M)` for a spinor matrix `P`.
pub fn spinor_partial_trace(p: &CMat, mat: &CMat) -> CMat {
    let s = p.nrows();
    let n = mat.nrows() / s;
    let mut g = zeros(n);
    for a in 0..s {
        for b in 0..s {
            let w = p[(b, a)].conj();
            if w == ZERO {
                continue;
            }
            for r in 0..n {
                for q in 0..n {
                    g[(r, q)] += w * mat[(b * n + r, a * n + q)];
                }
            }
        }
    }
    g
}

/// Coefficient `g` of `pi_{2n}(e_{1..2n}) (x) g` in `M`.
pub fn top_component(rep: &CliffordRep, mat: &CMat) -> Result<CMat> {
    let (s, _) = even_rep_dims(rep, mat)?;
    let top = basis_element(rep, &CliffordIndexSet::full(rep.k))?;
    Ok(spinor_partial_trace(&top, mat) / c(s as f64, 0.0))
}

/// Symbolic product `e_I e_J = sign * e_{I xor J}` (test oracle for the matrix product).
pub fn symbolic_product(a: &CliffordIndexSet, b: &CliffordIndexSet) -> (f64, CliffordIndexSet) {
    let mut swaps = 0usize;
    for &j in b.members() {
        swaps += a.members().iter().filter(|&&i| i > j).count();
    }
    let mut out: Vec<usize> = a
        .members()
        .iter()
        .filter(|i| !b.members().contains(i))
        .chain(b.members().iter().filter(|j| !a.members().contains(j)))
        .copied()
        .collect();
    out.sort_unstable();
    let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
    (sign, CliffordIndexSet(out))
}
