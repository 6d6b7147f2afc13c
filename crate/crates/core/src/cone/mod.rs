//! Dense primal-dual interior-point solver for mixed cone programs.
//!
//! Problems are stated in the inequality form
//!
//! ```text
//! minimize    c^T x
//! subject to  G x + s = h,   A x = b,   s in K
//! ```
//!
//! where `K` is an ordered product of nonnegative orthants, second-order
//! cones and PSD cones (packed with [`kernels::svec`]). The dual is
//!
//! ```text
//! maximize    -h^T z - b^T y
//! subject to  G^T z + A^T y + c = 0,   z in K
//! ```
//!
//! The solver runs a Mehrotra predictor-corrector on the homogeneous
//! self-dual embedding with Nesterov-Todd scaling, so infeasibility is
//! detected from certificate rays instead of diverging iterates.

mod builder;
mod ipm;
pub mod kernels;
mod text;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use builder::{AffineForm, ComplexPsdVar, ProblemBuilder, PsdLift};
pub use ipm::solve;
pub use text::{dump_problem, load_problem};

use crate::error::{Error, Result};

/// One block of the cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeBlock {
    /// Nonnegative orthant of the given dimension.
    NonNeg(usize),
    /// Second-order cone `{(t, u) : |u| <= t}` of the given total dimension.
    Soc(usize),
    /// Real symmetric PSD matrices of the given order, packed in svec form.
    Psd(usize),
}

impl ConeBlock {
    /// Number of packed entries of the block.
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::NonNeg(k) | ConeBlock::Soc(k) => k,
            ConeBlock::Psd(n) => kernels::svec_len(n),
        }
    }

    /// Barrier degree contributed by the block.
    pub fn degree(&self) -> usize {
        match *self {
            ConeBlock::NonNeg(k) => k,
            ConeBlock::Soc(_) => 1,
            ConeBlock::Psd(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub c: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub cones: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn cone_dim(&self) -> usize {
        self.cones.iter().map(ConeBlock::dim).sum()
    }

    /// Row ranges of each cone block inside `s`, `z`, `h` and `G`.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut off = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = off..off + c.dim();
                off += c.dim();
                r
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let m = self.cone_dim();
        let bad = |what: String| Err(Error::Dimension(what));
        if self.g.shape() != (m, n) {
            return bad(format!("G is {:?}, expected ({m}, {n})", self.g.shape()));
        }
        if self.h.len() != m {
            return bad(format!("h has length {}, expected {m}", self.h.len()));
        }
        if self.a.ncols() != n || self.a.nrows() != self.b.len() {
            return bad(format!(
                "A is {:?} with b of length {}, expected {} columns",
                self.a.shape(),
                self.b.len(),
                n
            ));
        }
        for c in &self.cones {
            match *c {
                ConeBlock::NonNeg(0) | ConeBlock::Psd(0) => return bad("empty cone block".into()),
                ConeBlock::Soc(k) if k < 1 => return bad("empty second-order cone".into()),
                _ => {}
            }
        }
        let finite = self.c.iter().chain(self.g.iter()).chain(self.h.iter());
        if finite
            .chain(self.a.iter())
            .chain(self.b.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config(
                "problem data contains non-finite values".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub abstol: f64,
    pub reltol: f64,
    pub feastol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary safeguard.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abstol: 1e-8,
            reltol: 1e-8,
            feastol: 1e-8,
            max_iter: 100,
            step_fraction: 0.99,
        }
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterLog {
    pub iter: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `s^T z / tau^2`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
}

/// Ray proving infeasibility.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// `G^T z + A^T y = 0`, `h^T z + b^T y = -1`, `z in K`.
    PrimalInfeasible { y: DVector<f64>, z: DVector<f64> },
    /// `G x + s = 0`, `A x = 0`, `c^T x = -1`, `s in K`.
    DualInfeasible { x: DVector<f64>, s: DVector<f64> },
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
    pub log: Vec<IterLog>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Normalized KKT residuals `(primal, dual, complementarity)` of a point,
/// recomputed from the problem data.
pub fn kkt_residuals(p: &ConicProblem, sol: &ConicSolution) -> (f64, f64, f64) {
    let rp_ineq = (&p.g * &sol.x + &sol.s - &p.h).norm() / p.h.norm().max(1.0);
    let rp_eq = if p.b.is_empty() {
        0.0
    } else {
        (&p.a * &sol.x - &p.b).norm() / p.b.norm().max(1.0)
    };
    let rd =
        (p.g.transpose() * &sol.z + p.a.transpose() * &sol.y + &p.c).norm() / p.c.norm().max(1.0);
    let comp = sol.s.dot(&sol.z).abs()
        / sol
            .primal_objective
            .abs()
            .max(sol.dual_objective.abs())
            .max(1.0);
    (rp_ineq.max(rp_eq), rd, comp)
}
