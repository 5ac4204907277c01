//! Lattice discretisation and the spectral route to the anomaly.

pub mod expansion;
pub mod extrapolate;
pub mod identities;
pub mod lattice;
pub mod trace;

pub use expansion::{expansion_diagnostics, expansion_terms_matrix_free, multi_indices, vanishing_check};
pub use extrapolate::{anomaly_spectral, anomaly_spectral_with, fit, FitModel, FitTerm, LambdaGrid};
pub use identities::{difference_of_powers, difference_of_powers_check, resolvent_trace_identity};
pub use lattice::{build_lattice, Closure, Lattice, LatticeOperatorSet, LatticeSpec, Op, Scheme, StorageMode};
pub use trace::{homological_index, index_spectra, IndexSpectra, WeightedSpectrum};
