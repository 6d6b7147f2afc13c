//! Robust NOMA beamforming for multi-beam LEO satellite downlinks.
//!
//! The crate covers the stochastic downlink channel, the NOMA signal model,
//! two robust power-minimization designs (average-SINR and outage
//! constrained), three comparison baselines, a Monte-Carlo evaluator and
//! the dense conic interior-point solver the designs run on.

pub mod baselines;
pub mod channel;
pub mod cone;
pub mod error;
pub mod evaluator;
pub mod experiment;
pub mod network;
pub mod numerics;
pub mod robust_avg;
pub mod robust_outage;
pub mod scenario;

pub use cone::{ConeBlock, ConicProblem, ConicSolution, SolveStatus, SolverOptions};
pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use numerics::{CMatrix, CVector, HermitianMatrix, RealSymmetricEmbedding, C64};
