use thiserror::Error;

use crate::cone::SolveStatus;

/// Errors surfaced by the design, simulation and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scenario or design parameter is outside its admissible range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Operands with incompatible shapes were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative numerical kernel stopped before meeting its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The conic solver returned something other than an optimal point.
    #[error("conic solver returned {status:?} while solving {stage}")]
    Solver { stage: String, status: SolveStatus },

    /// The design problem has no feasible point; `family` names the
    /// constraint family reported by the solver certificate.
    #[error("design infeasible ({family})")]
    Infeasible { family: String },

    /// The rank-one penalty loop hit its iteration cap.
    #[error("penalty loop did not converge after {iters} iterations (max rank gap {max_gap:.3e})")]
    NotConverged { iters: usize, max_gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
