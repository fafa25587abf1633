//! Numerical laboratory for pure-state tomography with phaseless unitary
//! measurements.
//!
//! Given an ensemble of `m` unitary matrices (four by default), the crate
//! measures states through the squared moduli of their rows, certifies
//! whether an ensemble separates all states up to a global phase,
//! samples the real-algebraic varieties that control the failure set and
//! audits their dimensions by Jacobian rank, and recovers states from
//! their phaseless measurements via lifted least squares over the
//! positive-semidefinite cone.

pub mod injectivity;
pub mod linalg;
pub mod measurement;
pub mod recovery;
pub mod report;
pub mod rng;
pub mod varieties;

pub use linalg::{CMatrix, CVector, Complex64, RMatrix, RVector};
pub use measurement::{MeasurementVector, Provenance, StructuredKind, UnitaryEnsemble};
pub use rng::SeededRng;
