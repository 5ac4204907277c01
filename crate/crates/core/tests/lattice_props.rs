use std::sync::Arc;

use dirac_anomaly::gauge::{Bump, GaugeField};
use dirac_anomaly::linalg::{c, C64};
use dirac_anomaly::spectral::lattice::{inner, norm};
use dirac_anomaly::spectral::{build_lattice, fit, Closure, FitModel, Lattice, LatticeSpec, Op, Scheme, StorageMode};
use proptest::prelude::*;

const M: usize = 8;

fn lattice(n: usize) -> Lattice {
    Lattice::new(LatticeSpec {
        n,
        rank: 1,
        length: 10.0,
        points: M,
        scheme: Scheme::Fourier,
        closure: Closure::Periodic,
        window: None,
    })
}

fn cvec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), len)
}

/// Cyclic shift by one site along `axis`.
fn shift(v: &[C64], axis: usize, d: usize) -> Vec<C64> {
    let stride = M.pow((d - 1 - axis) as u32);
    (0..v.len())
        .map(|s| {
            let i = (s / stride) % M;
            let from = s - i * stride + ((i + M - 1) % M) * stride;
            v[from]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivative_is_linear(u in cvec(M * M), v in cvec(M * M), a in -2.0f64..2.0, axis in 0usize..2) {
        let lat = lattice(1);
        let mix: Vec<C64> = u.iter().zip(&v).map(|(x, y)| x * a + y).collect();
        let (mut du, mut dv, mut dm) = (vec![C64::default(); M * M], vec![C64::default(); M * M], vec![C64::default(); M * M]);
        lat.derivative(axis, &u, &mut du);
        lat.derivative(axis, &v, &mut dv);
        lat.derivative(axis, &mix, &mut dm);
        for i in 0..M * M {
            prop_assert!((dm[i] - (du[i] * a + dv[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_commutes_with_translation(u in cvec(M.pow(4)), axis in 0usize..4, dir in 0usize..4) {
        let lat = lattice(2);
        let len = u.len();
        let (mut a, mut b) = (vec![C64::default(); len], vec![C64::default(); len]);
        lat.derivative(axis, &shift(&u, dir, 4), &mut a);
        lat.derivative(axis, &u, &mut b);
        let b = shift(&b, dir, 4);
        for i in 0..len {
            prop_assert!((a[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_is_antihermitian(u in cvec(M * M), v in cvec(M * M), axis in 0usize..2) {
        let lat = lattice(1);
        let (mut du, mut dv) = (vec![C64::default(); M * M], vec![C64::default(); M * M]);
        lat.derivative(axis, &u, &mut du);
        lat.derivative(axis, &v, &mut dv);
        prop_assert!((inner(&u, &dv) + inner(&du, &v)).norm() < 1e-11);
    }

    #[test]
    fn dirac_adjoint_on_random_vectors(seed in 0u64..1000) {
        let f = GaugeField::new(Arc::new(Bump::pauli(1, 1.0, 2.0)));
        let spec = LatticeSpec { n: 1, rank: 2, length: 24.0, points: 12, scheme: Scheme::Fourier, closure: Closure::Periodic, window: None };
        let ops = build_lattice(&spec, &f, StorageMode::MatrixFree).unwrap();
        let gen = |k: u64| -> Vec<C64> {
            (0..ops.dim()).map(|i| {
                let t = (i as u64 * 2654435761 + seed * 97 + k) as f64;
                c(t.sin(), (1.7 * t).cos())
            }).collect()
        };
        let (u, v) = (gen(1), gen(2));
        let lhs = inner(&u, &ops.apply_vec(Op::DiracPlus, &v));
        let rhs = inner(&ops.apply_vec(Op::DiracMinus, &u), &v);
        prop_assert!((lhs - rhs).norm() < 1e-10 * norm(&u) * norm(&v));
    }

    /// Data generated by the model itself is fitted exactly.
    #[test]
    fn fit_recovers_model_data(coef in prop::collection::vec(-2.0f64..2.0, 5)) {
        let model = FitModel::default();
        let k2 = 40.0;
        let lams: Vec<f64> = (0..12).map(|i| 0.5 * 1.18f64.powi(i)).collect();
        let vals: Vec<f64> = lams
            .iter()
            .map(|&l| model.terms.iter().zip(&coef).map(|(t, c)| c * t.eval(l, k2)).sum())
            .collect();
        let out = fit(&lams, &vals, &model, k2).unwrap();
        prop_assert!((out.value - coef[0]).abs() < 1e-7 * (1.0 + coef.iter().map(|c| c.abs()).sum::<f64>()));
        prop_assert!(out.residual_rms < 1e-9);
    }
}
