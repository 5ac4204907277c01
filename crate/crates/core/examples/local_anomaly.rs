//! The anomaly as a curvature integral, against closed forms and an analytic oracle.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use dirac_anomaly::anomaly::{anomaly_local, closed_form_n1, closed_form_n2, n2_family_oracle};
use dirac_anomaly::gauge::{AbelianN1, AbelianN2, GaugeField, Gaussian, NonAbelian, Profile};
use dirac_anomaly::quadrature::QuadSpec;

fn main() -> dirac_anomaly::Result<()> {
    let q = QuadSpec::default();
    for (alpha, beta, integral) in [(0.0, 2.0 * PI, 1.0), (-PI, PI, 3.0), (1.0, 1.0, 1.0)] {
        let f = GaugeField::new(Arc::new(AbelianN1 {
            profile: Profile { alpha, beta, width: 0.2 },
            phi: Gaussian { center: vec![0.0], sigma: 1.0, integral },
        }));
        let t = Instant::now();
        let loc = anomaly_local(&f, 1, &q)?;
        let cf = closed_form_n1(&f, 1, &q)?;
        println!(
            "n=1 alpha={alpha:+.3} beta={beta:+.3} int={integral}: local {:+.12} closed {:+.12} ({:.2?})",
            loc.value,
            cf.value,
            t.elapsed()
        );
    }

    let fam = AbelianN2 {
        profile: Profile { alpha: 0.0, beta: 1.0, width: 0.5 },
        phi1: Gaussian { center: vec![0.0, -0.5, 0.0], sigma: 1.0, integral: 1.0 },
        phi3: Gaussian { center: vec![0.0, 0.5, 0.0], sigma: 1.0, integral: 1.0 },
    };
    let oracle = n2_family_oracle(&fam, 2).value;
    let f = GaugeField::new(Arc::new(fam));
    let q6 = QuadSpec { tol: 1e-6, ..QuadSpec::default() };
    let t = Instant::now();
    let loc = anomaly_local(&f, 2, &q6)?;
    let cf = closed_form_n2(&f, 2, &q6)?;
    println!(
        "n=2: local {:.10e} closed {:.10e} oracle {oracle:.10e} ({:.2?})",
        loc.value,
        cf.value,
        t.elapsed()
    );

    let f = GaugeField::new(Arc::new(NonAbelian::pauli(1, Profile { alpha: 0.0, beta: 1.0, width: 0.5 }, 1.0)));
    let r = anomaly_local(&f, 1, &q)?;
    println!("SU(2) n=1: {:+.10} (imaginary part {:.1e})", r.value, r.raw_im);
    Ok(())
}
