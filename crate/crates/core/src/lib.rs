//! Sparse phase retrieval from magnitude-only measurements.
//!
//! Recovers an `s`-sparse signal `x` from `y_j = |<a_j, x>|^2` by alternating
//! a hard-thresholded projected gradient step with Gauss-Newton refinement on
//! the captured support. The crate provides the measurement models (complex
//! Gaussian and partial-DFT ensembles), the intensity objective with its
//! restricted Jacobian machinery, a spectral initializer, the solver itself
//! (plus a fresh-sample variant that uses disjoint measurement partitions per
//! iteration), and an orthonormal Haar transform for wavelet-sparse signals.
//!
//! ```
//! use grahtp::{init, sensing, solver};
//! use grahtp::numerics::{relative_error, Field};
//!
//! let truth = sensing::gen_sparse_signal(128, 4, Field::Real, 7).unwrap();
//! let ensemble =
//!     sensing::sample_ensemble(sensing::EnsembleKind::ComplexGaussian, 256, 128, 8).unwrap();
//! let y = sensing::measure(&ensemble, &truth.vector).unwrap();
//!
//! let z0 = init::spectral_init(&ensemble, &y, 4, Field::Real).unwrap().z0;
//! let cfg = solver::SolverConfig::new(4);
//! let result = solver::solve(&ensemble, &y, &cfg, &z0, Some(&truth.vector)).unwrap();
//!
//! let r = relative_error(&result.final_state.z, &truth.vector).unwrap();
//! assert!(r < 1e-6, "recovery failed: rel err {r}");
//! ```
//!
//! All randomness flows through a self-contained xoshiro256++ generator with
//! Box-Muller normals, so every artifact is reproducible from its seeds alone.

pub mod error;
pub mod init;
pub mod numerics;
pub mod objective;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod wavelet;

pub use error::{Error, Result};
pub use numerics::{DenseVector, Field, SupportSet};
pub use sensing::{EnsembleKind, Measurements, SensingEnsemble, SparseSignal};
pub use solver::{SolveResult, SolveStatus, SolverConfig};
