//! Local and spectral computation of the anomaly of Dirac-type operators on `R^{2n}`.
//!
//! * [`clifford`]: the recursive Clifford representations, traces and super trace.
//! * [`gauge`]: `U(N)` potentials, curvature, the Clifford contraction and `F`, `G`, `S`.
//! * [`anomaly`]: the curvature-integral formula by quadrature and the closed forms.
//! * [`spectral`]: periodic lattice operators, homological index, extrapolation, diagnostics.
//! * [`cli`]: configuration-driven runs emitting JSON records and CSV sweeps.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```text
//! cargo run --release --example clifford_tour
//! cargo run --release --example local_anomaly
//! cargo run --release --example spectral_n1
//! ```

pub mod anomaly;
pub mod checks;
pub mod cli;
pub mod clifford;
pub mod error;
pub mod gauge;
pub mod linalg;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
