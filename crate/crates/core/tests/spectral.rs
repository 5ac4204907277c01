use std::f64::consts::PI;
use std::sync::Arc;

use dirac_anomaly::gauge::{AbelianN1, Bump, GaugeField, Gaussian, Profile, Zero};
use dirac_anomaly::linalg::{c, random_hermitian, C64};
use dirac_anomaly::spectral::expansion::expansion_diagnostics;
use dirac_anomaly::spectral::extrapolate::validate_grid;
use dirac_anomaly::spectral::identities::difference_of_powers;
use dirac_anomaly::spectral::lattice::{inner, norm, smooth_vector, v_identity_residuals};
use dirac_anomaly::spectral::trace::{column_sweep_with, weighted_spectrum_of, CgSettings};
use dirac_anomaly::spectral::{
    build_lattice, homological_index, index_spectra, resolvent_trace_identity, Closure, LatticeOperatorSet,
    LatticeSpec, Op, Scheme, StorageMode,
};
use dirac_anomaly::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn spec(n: usize, rank: usize, length: f64, points: usize, closure: Closure, window: Option<f64>) -> LatticeSpec {
    LatticeSpec {
        n,
        rank,
        length,
        points,
        scheme: Scheme::Fourier,
        closure,
        window,
    }
}

fn n1_family() -> GaugeField {
    GaugeField::new(Arc::new(AbelianN1 {
        profile: Profile {
            alpha: 0.0,
            beta: 2.0 * PI,
            width: 0.2,
        },
        phi: Gaussian {
            center: vec![0.0],
            sigma: 1.0,
            integral: 1.0,
        },
    }))
}

fn zero(n: usize, rank: usize) -> GaugeField {
    GaugeField::new(Arc::new(Zero { n, rank }))
}

fn random_vec(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect()
}

#[test]
fn free_laplacian_spectrum_is_the_symbol() {
    let s = spec(1, 1, 8.0, 8, Closure::Periodic, None);
    let ops = build_lattice(&s, &zero(1, 1), StorageMode::Dense).unwrap();
    let mut got: Vec<f64> = ops.dense(Op::Delta).unwrap().symmetric_eigenvalues().iter().copied().collect();
    got.sort_by(f64::total_cmp);
    let mut want: Vec<f64> = (0..ops.components())
        .flat_map(|_| (0..ops.sites()).map(|k| ops.lat.free_eigenvalue(k)))
        .collect();
    want.sort_by(f64::total_cmp);
    // the symbol by hand: (2 pi k / L)^2 summed over axes, Nyquist kept
    let k = 2.0 * PI / 8.0;
    assert!((want.last().unwrap() - 2.0 * (4.0 * k).powi(2)).abs() < 1e-12);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

fn bump_ops(closure: Closure) -> LatticeOperatorSet {
    let f = GaugeField::new(Arc::new(Bump::pauli(1, 1.0, 2.0)));
    // the mirrored cell is L/2, so the bump needs the longer box there
    let length = if closure == Closure::Mirror { 48.0 } else { 24.0 };
    build_lattice(&spec(1, 2, length, 16, closure, None), &f, StorageMode::MatrixFree).unwrap()
}

#[test]
fn dirac_minus_is_adjoint_of_dirac_plus() {
    for closure in [Closure::Periodic, Closure::Mirror] {
        let ops = bump_ops(closure);
        let (u, v) = (random_vec(ops.dim(), 1), random_vec(ops.dim(), 2));
        let lhs = inner(&u, &ops.apply_vec(Op::DiracPlus, &v));
        let rhs = inner(&ops.apply_vec(Op::DiracMinus, &u), &v);
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{closure:?}: {lhs} vs {rhs}");
    }
}

#[test]
fn laplacians_are_hermitian_and_positive() {
    let ops = bump_ops(Closure::Mirror);
    let (u, v) = (random_vec(ops.dim(), 3), random_vec(ops.dim(), 4));
    for op in [Op::Delta1, Op::Delta2, Op::Delta] {
        let lhs = inner(&u, &ops.apply_vec(op, &v));
        let rhs = inner(&ops.apply_vec(op, &u), &v);
        assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
        let q = inner(&v, &ops.apply_vec(op, &v));
        assert!(q.re >= 0.0 && q.im.abs() < 1e-9 * q.re.max(1.0));
    }
}

#[test]
fn trivial_connection_has_no_index() {
    let s = spec(1, 1, 24.0, 16, Closure::Mirror, Some(0.45));
    let ops = build_lattice(&s, &zero(1, 1), StorageMode::Dense).unwrap();
    let d1 = ops.apply_vec(Op::Delta1, &random_vec(ops.dim(), 5));
    let d2 = ops.apply_vec(Op::Delta2, &random_vec(ops.dim(), 5));
    let d0 = ops.apply_vec(Op::Delta, &random_vec(ops.dim(), 5));
    for i in 0..ops.dim() {
        assert!((d1[i] - d0[i]).norm() < 1e-10 && (d2[i] - d0[i]).norm() < 1e-10);
    }
    assert!(homological_index(&ops, 1.0, 1).unwrap().abs() < 1e-10);
}

#[test]
fn unwindowed_index_vanishes() {
    // D+ D- and D- D+ are isospectral on a finite lattice
    let s = spec(1, 1, 24.0, 16, Closure::Mirror, None);
    let ops = build_lattice(&s, &n1_family(), StorageMode::Dense).unwrap();
    let sp = index_spectra(&ops).unwrap();
    for lambda in [0.5, 1.0, 1.5] {
        assert!(sp.index(lambda, 1).abs() < 1e-9);
        assert!(sp.index(lambda, 2).abs() < 1e-9);
    }
}

#[test]
fn column_sweep_matches_eigen_route_on_random_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_hermitian(&mut rng, 8);
    let h = &h * h.adjoint();
    let chi: Vec<f64> = (0..8).map(|i| 0.2 + 0.1 * i as f64).collect();
    let apply = |v: &[C64], out: &mut [C64]| {
        for i in 0..8 {
            out[i] = (0..8).map(|j| h[(i, j)] * v[j]).sum();
        }
    };
    let cg = CgSettings {
        tol: 1e-13,
        max_iter: 200,
    };
    let ws = weighted_spectrum_of(h.clone(), &chi);
    for m in 1..=3 {
        let sw = column_sweep_with(&apply, &chi, 0.7, m, &cg).unwrap();
        let ev = ws.resolvent_trace(0.7, m);
        assert!((sw.value - ev).abs() < 1e-9, "m={m}: {} vs {ev}", sw.value);
        assert!(sw.max_imag < 1e-9);
    }
}

#[test]
fn lattice_column_sweep_matches_dense() {
    let s = spec(1, 1, 24.0, 16, Closure::Mirror, Some(0.45));
    let dense = build_lattice(&s, &n1_family(), StorageMode::Dense).unwrap();
    let free = build_lattice(&s, &n1_family(), StorageMode::MatrixFree).unwrap();
    let a = homological_index(&dense, 0.5, 2).unwrap();
    let b = homological_index(&free, 0.5, 2).unwrap();
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn dense_capacity_is_enforced() {
    let g = |y: f64| Gaussian {
        center: vec![0.0, y, 0.0],
        sigma: 0.5,
        integral: 1.0,
    };
    let f = GaugeField::new(Arc::new(dirac_anomaly::gauge::AbelianN2 {
        profile: Profile {
            alpha: 0.0,
            beta: 1.0,
            width: 0.2,
        },
        phi1: g(-0.5),
        phi3: g(0.5),
    }));
    let s = spec(2, 1, 14.0, 8, Closure::Periodic, None);
    assert!(matches!(build_lattice(&s, &f, StorageMode::Dense), Err(Error::Capacity(_))));
    assert!(build_lattice(&s, &f, StorageMode::MatrixFree).is_ok());
}

#[test]
fn lattice_validation() {
    let s = spec(1, 1, 24.0, 16, Closure::Mirror, Some(0.45));
    let ops = build_lattice(&s, &n1_family(), StorageMode::MatrixFree).unwrap();
    let max = s.lambda_max();
    assert!(validate_grid(&ops, &[0.1, max]).is_ok());
    assert!(matches!(validate_grid(&ops, &[0.1, 1.01 * max]), Err(Error::Config { .. })));
    assert!(validate_grid(&ops, &[1.0, 0.5]).is_err());
    assert!(validate_grid(&ops, &[0.0, 0.5]).is_err());
    // odd M with a spectral derivative, and a window wider than L/8
    assert!(spec(1, 1, 24.0, 15, Closure::Periodic, None).validate(None).is_err());
    assert!(spec(1, 1, 24.0, 16, Closure::Periodic, Some(3.5)).validate(None).is_err());
    // a wide profile leaves the mirrored margin
    let wide = GaugeField::new(Arc::new(AbelianN1 {
        profile: Profile {
            alpha: 0.0,
            beta: 1.0,
            width: 0.5,
        },
        phi: Gaussian {
            center: vec![0.0],
            sigma: 1.0,
            integral: 1.0,
        },
    }));
    assert!(matches!(s.validate(Some(&wide)), Err(Error::Config { .. })));
}

#[test]
fn v_identities_converge_at_n2() {
    let f = GaugeField::new(Arc::new(Bump::pauli(2, 1.0, 1.0)));
    let mut last = f64::INFINITY;
    for m in [16, 24] {
        let ops = build_lattice(&spec(2, 2, 24.0, m, Closure::Periodic, None), &f, StorageMode::MatrixFree).unwrap();
        let (r1, r2) = v_identity_residuals(&ops, &smooth_vector(&ops, 1.5));
        let r = r1.max(r2);
        assert!(r < last, "M={m}: {r:.3e} did not improve on {last:.3e}");
        last = r;
    }
}

#[test]
fn expansion_at_n1() {
    let s = spec(1, 1, 24.0, 16, Closure::Mirror, Some(0.45));
    let ops = build_lattice(&s, &n1_family(), StorageMode::Dense).unwrap();
    let rep = expansion_diagnostics(&ops, 10.0, 1, 6).unwrap();
    // the unperturbed term is the same for both chiralities
    assert_eq!(rep.terms[0].j, vec![0]);
    assert!(rep.terms[0].super_trace.abs() < 1e-12);
    let q = rep.y_norm.0.max(rep.y_norm.1);
    assert!(q < 1.0);
    for w in rep.remainders.windows(2) {
        assert!(w[1] < w[0], "{:?}", rep.remainders);
    }
    assert!(*rep.remainders.last().unwrap() < 0.1 * rep.remainders[0]);
}

#[test]
fn difference_of_powers_trivial_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_hermitian(&mut rng, 6);
    let z = c(0.5, 0.7);
    assert!(difference_of_powers(&a, &a, z, 1).unwrap() < 1e-12);
    assert!(difference_of_powers(&a, &(&a * &a), z, 3).unwrap() < 1e-10);
    let sq = dirac_anomaly::linalg::zeros(6);
    assert!(difference_of_powers(&sq, &sq, c(1.0, 0.0), 2).unwrap() < 1e-14);
}

#[test]
fn resolvent_trace_of_zero_bump() {
    let s = spec(1, 1, 24.0, 16, Closure::Periodic, None);
    let g = Gaussian {
        center: vec![0.0, 0.0],
        sigma: 1.0,
        integral: 0.0,
    };
    let r = resolvent_trace_identity(&s, &g, 0.5, 1).unwrap();
    assert_eq!(r.ratio, None);
    assert_eq!(r.lattice, 0.0);
}

#[test]
fn smooth_vector_norm_is_positive() {
    let ops = bump_ops(Closure::Periodic);
    assert!(norm(&smooth_vector(&ops, 1.5)) > 0.0);
}
