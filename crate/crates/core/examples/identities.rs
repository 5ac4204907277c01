//! Every invariant suite, plus the resolvent-trace refinement table.

use dirac_anomaly::checks::{resolvent_trace_study, run_all};

fn main() -> dirac_anomaly::Result<()> {
    for r in run_all(0)? {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<21} {:.3e} (tol {:.0e})", r.suite, r.value, r.tolerance);
    }
    let (rows, _) = resolvent_trace_study()?;
    println!("\nresolvent trace, lattice / continuum:");
    for (m, ratio) in rows {
        println!("  M = {m:>3}: {ratio:.6}");
    }
    Ok(())
}
