//! Shared fixtures for the benchmarks.

use leobeam::cone::{AffineForm, ProblemBuilder};
use leobeam::{CMatrix, ConicProblem, HermitianMatrix, C64};

/// Minimum-eigenvalue SDP of order `k` with a norm bound on the diagonal.
pub fn sdp_fixture(k: usize) -> ConicProblem {
    let m = CMatrix::from_fn(k, k, |i, j| {
        C64::new(
            ((i * 7 + j * 3) % 5) as f64 - 2.0,
            ((i + 2 * j) % 3) as f64 - 1.0,
        )
    });
    let g = HermitianMatrix::symmetrize(&m + m.adjoint());
    let mut b = ProblemBuilder::new();
    let w = b.add_hermitian_psd(k);
    b.add_objective(&w.functional(&g));
    let mut unit_trace = w.trace();
    unit_trace.constant = -1.0;
    b.equality(unit_trace);
    let mut cone = vec![AffineForm::constant(1.0)];
    cone.extend((0..k).map(|i| w.diag_entry(i)));
    b.soc(cone);
    b.build()
}
