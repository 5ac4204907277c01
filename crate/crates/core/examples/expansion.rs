//! Resolvent expansion of the index at n = 1 and the vanishing diagnostics at n = 2.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use dirac_anomaly::gauge::{AbelianN1, AbelianN2, GaugeField, Gaussian, Profile, Zero};
use dirac_anomaly::spectral::{
    build_lattice, expansion_diagnostics, multi_indices, vanishing_check, Closure, LatticeSpec, Scheme,
    StorageMode,
};

fn main() -> dirac_anomaly::Result<()> {
    let f1 = GaugeField::new(Arc::new(AbelianN1 {
        profile: Profile { alpha: 0.0, beta: 2.0 * PI, width: 0.2 },
        phi: Gaussian { center: vec![0.0], sigma: 1.0, integral: 1.0 },
    }));
    let spec = LatticeSpec {
        n: 1,
        rank: 1,
        length: 24.0,
        points: 16,
        scheme: Scheme::Fourier,
        closure: Closure::Mirror,
        window: Some(0.45),
    };
    let ops = build_lattice(&spec, &f1, StorageMode::Dense)?;
    let rep = expansion_diagnostics(&ops, 10.0, 1, 6)?;
    println!("n=1, M=16, lambda=10, m=1: full {:+.6e}, |Y| = {:.3}", rep.full, rep.y_norm.0.max(rep.y_norm.1));
    for (k, (p, r)) in rep.partial_sums.iter().zip(&rep.remainders).enumerate() {
        println!("  |J| <= {k}: partial {p:+.6e} remainder {r:.2e}");
    }
    match expansion_diagnostics(&ops, 1.0, 1, 2) {
        Ok(r) => println!("lambda=1: |Y| = {:.3}", r.y_norm.0.max(r.y_norm.1)),
        Err(e) => println!("lambda=1: {e}"),
    }

    let g = |y: f64| Gaussian { center: vec![0.0, y, 0.0], sigma: 0.5, integral: 1.0 };
    let f2 = GaugeField::new(Arc::new(AbelianN2 {
        profile: Profile { alpha: 0.0, beta: 1.0, width: 0.2 },
        phi1: g(-0.5),
        phi3: g(0.5),
    }));
    let spec = LatticeSpec { n: 2, length: 14.0, points: 8, closure: Closure::Periodic, window: None, ..spec };
    let t = Instant::now();
    let ops = build_lattice(&spec, &f2, StorageMode::MatrixFree)?;
    let trivial = build_lattice(&spec, &GaugeField::new(Arc::new(Zero { n: 2, rank: 1 })), StorageMode::MatrixFree)?;
    let rep = vanishing_check(&ops, &trivial, 1.0, &multi_indices(2, 1))?;
    println!("\nn=2, M=8, lambda=1 ({:.1?}):", t.elapsed());
    for (term, floor) in rep.terms.iter().zip(&rep.floors) {
        println!("  J = {:?}: Tr_s {:+.3e}, mass {:.3e}, floor {floor:.3e}", term.j, term.super_trace, term.abs_mass);
    }
    println!("  vanishing: {}", rep.passed);
    Ok(())
}
