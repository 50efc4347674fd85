//! Operational error-disturbance trade-offs for approximate joint
//! measurements of two non-commuting observables on finite-dimensional
//! Hilbert spaces (2 ≤ N ≤ 16).
//!
//! The crate is organized bottom-up:
//!
//! * [`operators`] — validated Hermitian linear algebra (eigensolves, norms,
//!   positivity, traces).
//! * [`measurement`] — projective reference bases, joint POVMs on an N×N
//!   outcome grid, their marginals, mixing, relabeling and symmetry
//!   conjugation.
//! * [`metrics`] — calibration and variation error measures between a
//!   marginal POVM and its reference basis, with attained witnesses, plus
//!   state-dependent retrodictive checks.
//! * [`instrument`] — Kraus-form quantum instruments, their induced joint
//!   POVMs and error-disturbance reports.
//! * [`qubit`] — the exactly solved qubit case: canonical frames, the
//!   eight-element symmetrization group, tight trade-off curves and the
//!   POVMs attaining them.
//! * [`mub`] — Fourier-conjugate (mutually unbiased) bases, the swap
//!   construction exchanging the two error components, and equivalence of
//!   complex Hadamard matrices to the Fourier matrix.
//! * [`bound`] — dimension-generic additive trade-off bounds from positivity
//!   of moment matrices, with a certified grid infimum.
//! * [`optimizer`] — seeded multi-restart minimization of the total error
//!   over joint POVMs, and sweep certification against the qubit curves.
//!
//! All matrices are dense `nalgebra` structures over `Complex64`; all public
//! values are immutable after construction and safe to share across threads.

pub mod bound;
pub mod error;
pub mod instrument;
pub mod measurement;
pub mod metrics;
pub mod mub;
pub mod operators;
pub mod optimizer;
pub mod qubit;
pub mod schema;

pub use error::{EdrError, PovmViolation, Result, ViolationKind};
pub use operators::{CMat, CVec, DensityOperator, Eigendecomposition, HermitianOperator};
