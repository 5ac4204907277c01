//! Clifford generators, relations, the trace lemma table and the super trace.

use dirac_anomaly::clifford::{
    build_rep, relation_defect, super_trace, trace_basis, trace_basis_explicit, CliffordIndexSet,
};
use dirac_anomaly::linalg::{eye, kron};

fn main() -> dirac_anomaly::Result<()> {
    for k in 1..=9 {
        let rep = build_rep(k)?;
        println!("k = {k}: dim {:>3}, relation defect {:.1e}", rep.dim, relation_defect(&rep));
    }

    let rep = build_rep(2)?;
    println!("\nc1 = {}c2 = {}", rep.gen(1), rep.gen(2));

    println!("nonzero traces of pi_(2m-1)(e_I):");
    for m in 1..=4 {
        for set in CliffordIndexSet::all(2 * m - 1) {
            let t = trace_basis(m, &set)?;
            if t.norm() > 0.0 {
                let d = (trace_basis_explicit(m, &set)? - t).norm();
                println!("  m = {m}, I = {:?}: {t} (matrix check {d:.0e})", set.members());
            }
        }
    }

    for n in 1..=3 {
        let rep = build_rep(2 * n)?;
        let top = rep.basis_element(&CliffordIndexSet::full(2 * n))?;
        let st = super_trace(&rep, &kron(&top, &eye(2)))?;
        println!("n = {n}: Tr_s(e_1..e_2n (x) 1_2) = {st}");
    }
    Ok(())
}
