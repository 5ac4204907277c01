use dirac_anomaly::clifford::{
    build_rep, relation_defect, super_trace, symbolic_product, trace_basis, trace_basis_explicit, CliffordIndexSet,
};
use dirac_anomaly::linalg::{c, frob, is_hermitian, kron, trace, eye, CMat};
use proptest::prelude::*;

proptest! {
    #[test]
    fn anticommutation(k in 1usize..=9) {
        let rep = build_rep(k).unwrap();
        prop_assert!(relation_defect(&rep) < 1e-12);
        for i in 1..=k {
            prop_assert!(is_hermitian(rep.gen(i), 0.0));
        }
    }

    #[test]
    fn product_matches_symbolic(k in 1usize..=8, a in 0u64..256, b in 0u64..256) {
        let mask = (1u64 << k) - 1;
        let rep = build_rep(k).unwrap();
        let (ia, ib) = (CliffordIndexSet::from_mask(a & mask, k), CliffordIndexSet::from_mask(b & mask, k));
        let lhs = rep.basis_element(&ia).unwrap() * rep.basis_element(&ib).unwrap();
        let (sign, ic) = symbolic_product(&ia, &ib);
        let rhs = rep.basis_element(&ic).unwrap() * c(sign, 0.0);
        prop_assert!(frob(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn trace_closed_form(m in 1usize..=5, mask in 0u64..512) {
        let k = 2 * m - 1;
        let set = CliffordIndexSet::from_mask(mask & ((1u64 << k) - 1), k);
        let d = trace_basis_explicit(m, &set).unwrap() - trace_basis(m, &set).unwrap();
        prop_assert!(d.norm() < 1e-12);
    }

    /// The super trace sees only the top basis element.
    #[test]
    fn super_trace_filters_top(n in 1usize..=3, mask in 0u64..64, rank in 1usize..=3) {
        let k = 2 * n;
        let rep = build_rep(k).unwrap();
        let set = CliffordIndexSet::from_mask(mask & ((1u64 << k) - 1), k);
        let g = CMat::from_fn(rank, rank, |i, j| c(1.0 + i as f64, j as f64 - 0.5));
        let st = super_trace(&rep, &kron(&rep.basis_element(&set).unwrap(), &g)).unwrap();
        if set.len() == k {
            let want = c(0.0, -2.0).powu(n as u32) * trace(&g);
            prop_assert!((st - want).norm() < 1e-10, "{st} vs {want}");
        } else {
            prop_assert!(st.norm() < 1e-12);
        }
        prop_assert!(super_trace(&rep, &eye(rep.dim * rank)).unwrap().norm() < 1e-12);
    }
}
