use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernels::{self, Scaling};
use super::{
    Certificate, ConeBlock, ConicProblem, ConicSolution, IterLog, SolveStatus, SolverOptions,
};
use crate::error::{Error, Result};

/// Block-structured view of the cone part of the problem.
struct Blocks {
    cones: Vec<ConeBlock>,
    ranges: Vec<std::ops::Range<usize>>,
    /// Columns of `G` with a nonzero entry inside each block.
    cols: Vec<Vec<usize>>,
    m: usize,
}

impl Blocks {
    fn new(p: &ConicProblem) -> Self {
        let ranges = p.block_ranges();
        let cols = ranges
            .iter()
            .map(|r| {
                (0..p.g.ncols())
                    .filter(|&j| r.clone().any(|i| p.g[(i, j)] != 0.0))
                    .collect()
            })
            .collect();
        Self {
            cones: p.cones.clone(),
            ranges,
            cols,
            m: p.cone_dim(),
        }
    }

    fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.m);
        for (c, r) in self.cones.iter().zip(&self.ranges) {
            kernels::identity_into(*c, &mut e.as_mut_slice()[r.clone()]);
        }
        e
    }

    fn min_eig(&self, u: &DVector<f64>) -> Result<f64> {
        let mut t = f64::INFINITY;
        for (c, r) in self.cones.iter().zip(&self.ranges) {
            t = t.min(kernels::min_eig(*c, &u.as_slice()[r.clone()])?);
        }
        Ok(t)
    }

    fn identity_scalings(&self) -> Vec<Scaling> {
        self.cones
            .iter()
            .map(|c| match *c {
                ConeBlock::NonNeg(k) => Scaling::NonNeg { d: vec![1.0; k] },
                ConeBlock::Soc(k) => {
                    let mut v = vec![0.0; k];
                    v[0] = 1.0;
                    Scaling::Soc { beta: 1.0, v }
                }
                ConeBlock::Psd(n) => Scaling::Psd {
                    n,
                    r: DMatrix::identity(n, n),
                    rinv: DMatrix::identity(n, n),
                },
            })
            .collect()
    }

    fn map<F>(&self, u: &DVector<f64>, mut f: F) -> DVector<f64>
    where
        F: FnMut(usize, &[f64], &mut [f64]),
    {
        let mut out = DVector::zeros(self.m);
        for (b, r) in self.ranges.iter().enumerate() {
            f(
                b,
                &u.as_slice()[r.clone()],
                &mut out.as_mut_slice()[r.clone()],
            );
        }
        out
    }
}

/// Factorized reduced KKT system for one scaling.
struct Kkt<'a> {
    p: &'a ConicProblem,
    blocks: &'a Blocks,
    scal: &'a [Scaling],
    pmat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    schur: Option<Cholesky<f64, Dyn>>,
}

impl<'a> Kkt<'a> {
    fn factor(p: &'a ConicProblem, blocks: &'a Blocks, scal: &'a [Scaling]) -> Result<Self> {
        let n = p.num_vars();
        let mut pmat = DMatrix::zeros(blocks.m, n);
        for (b, r) in blocks.ranges.iter().enumerate() {
            let gb = p.g.rows(r.start, r.len()).into_owned();
            let mut out = DMatrix::zeros(r.len(), n);
            scal[b].apply_inv_t_columns(&gb, &blocks.cols[b], &mut out);
            pmat.rows_mut(r.start, r.len()).copy_from(&out);
        }
        let mut hmat = pmat.tr_mul(&pmat);
        if p.a.nrows() > 0 {
            hmat += p.a.tr_mul(&p.a);
        }
        let chol = regularized_cholesky(hmat)?;
        let schur = if p.a.nrows() > 0 {
            let hinv_at = chol.solve(&p.a.transpose());
            let s = &p.a * hinv_at;
            Some(regularized_cholesky(s)?)
        } else {
            None
        };
        Ok(Self {
            p,
            blocks,
            scal,
            pmat,
            chol,
            schur,
        })
    }

    fn w_inv_t(&self, u: &DVector<f64>) -> DVector<f64> {
        self.blocks.map(u, |b, i, o| self.scal[b].apply_inv_t(i, o))
    }

    fn w_inv(&self, u: &DVector<f64>) -> DVector<f64> {
        self.blocks.map(u, |b, i, o| self.scal[b].apply_inv(i, o))
    }

    fn w(&self, u: &DVector<f64>) -> DVector<f64> {
        self.blocks.map(u, |b, i, o| self.scal[b].apply(i, o))
    }

    fn w_t(&self, u: &DVector<f64>) -> DVector<f64> {
        self.blocks.map(u, |b, i, o| self.scal[b].apply_t(i, o))
    }

    fn solve_once(
        &self,
        bx: &DVector<f64>,
        by: &DVector<f64>,
        bz: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let bzt = self.w_inv_t(bz);
        let r1 = bx + self.pmat.tr_mul(&bzt);
        let (ux, uy) = match &self.schur {
            None => (self.chol.solve(&r1), DVector::zeros(0)),
            Some(schur) => {
                let a = &self.p.a;
                let rhs = &r1 + a.tr_mul(by);
                let t = self.chol.solve(&rhs);
                let uy = schur.solve(&(a * &t - by));
                let ux = self.chol.solve(&(rhs - a.tr_mul(&uy)));
                (ux, uy)
            }
        };
        let uz = self.w_inv(&(&self.pmat * &ux - bzt));
        (ux, uy, uz)
    }

    /// Solves `[0 A' G'; A 0 0; G 0 -W'W] u = b` with one round of
    /// iterative refinement against the unreduced system.
    fn solve(
        &self,
        bx: &DVector<f64>,
        by: &DVector<f64>,
        bz: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (mut ux, mut uy, mut uz) = self.solve_once(bx, by, bz);
        for _ in 0..2 {
            let ex = bx - (self.p.a.tr_mul(&uy) + self.p.g.tr_mul(&uz));
            let ey = by - &self.p.a * &ux;
            let ez = bz - (&self.p.g * &ux - self.w_t(&self.w(&uz)));
            let scale = bx.amax().max(by.amax()).max(bz.amax()).max(1e-300);
            let err = ex.amax().max(ey.amax()).max(ez.amax());
            if err <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.solve_once(&ex, &ey, &ez);
            ux += cx;
            uy += cy;
            uz += cz;
        }
        (ux, uy, uz)
    }
}

fn regularized_cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Ok(c);
    }
    let scale = m.diagonal().amax().max(1.0);
    let mut delta = 1e-14 * scale;
    for _ in 0..8 {
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += delta;
        }
        if let Some(c) = reg.cholesky() {
            return Ok(c);
        }
        delta *= 100.0;
    }
    Err(Error::Numerical(
        "KKT matrix is not positive definite".into(),
    ))
}

struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    /// `W^{-T} ds` and `W dz`.
    ds_scaled: DVector<f64>,
    dz_scaled: DVector<f64>,
}

/// Solves a conic program. Ill-posed input is rejected with an error;
/// every other outcome, including numerical breakdown, is reported through
/// [`SolveStatus`] with the last iterate attached.
pub fn solve(p: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    p.validate()?;
    let n = p.num_vars();
    let blocks = Blocks::new(p);
    let nu: usize = p.cones.iter().map(ConeBlock::degree).sum();
    let e = blocks.identity();

    let resx0 = p.c.norm().max(1.0);
    let resy0 = p.b.norm().max(1.0);
    let resz0 = p.h.norm().max(1.0);

    // Starting point from the identity-scaled KKT system.
    let id = blocks.identity_scalings();
    let kkt0 = Kkt::factor(p, &blocks, &id)?;
    let (x, _, zt) = kkt0.solve(&DVector::zeros(n), &p.b, &p.h);
    let mut s = -zt;
    let (_, y, mut z) = kkt0.solve(
        &(-&p.c),
        &DVector::zeros(p.b.len()),
        &DVector::zeros(blocks.m),
    );
    let ts = blocks.min_eig(&s)?;
    if ts <= 1e-8 * s.norm().max(1.0) {
        s += &e * (1.0 - ts);
    }
    let tz = blocks.min_eig(&z)?;
    if tz <= 1e-8 * z.norm().max(1.0) {
        z += &e * (1.0 - tz);
    }
    let mut it = Iterate {
        x,
        y,
        z,
        s,
        tau: 1.0,
        kappa: 1.0,
    };
    let mut log = Vec::new();

    for iter in 0..=opts.max_iter {
        let rx = p.a.tr_mul(&it.y) + p.g.tr_mul(&it.z) + &p.c * it.tau;
        let ry = &p.b * it.tau - &p.a * &it.x;
        let rz = &p.h * it.tau - &p.g * &it.x - &it.s;
        let cx = p.c.dot(&it.x);
        let by = p.b.dot(&it.y);
        let hz = p.h.dot(&it.z);
        let rt = -cx - by - hz - it.kappa;

        let pcost = cx / it.tau;
        let dcost = -(by + hz) / it.tau;
        let gap = it.s.dot(&it.z);
        let gap_hat = gap / (it.tau * it.tau);
        let pres = (ry.norm() / resy0).max(rz.norm() / resz0) / it.tau;
        let dres = rx.norm() / resx0 / it.tau;
        let relgap = gap_hat / pcost.abs().max(dcost.abs()).max(1e-300);

        log.push(IterLog {
            iter,
            primal_objective: pcost,
            dual_objective: dcost,
            gap: gap_hat,
            primal_residual: pres,
            dual_residual: dres,
            tau: it.tau,
            kappa: it.kappa,
        });
        log::trace!(
            "ipm {iter:3}: pcost {pcost:+.8e} dcost {dcost:+.8e} gap {gap_hat:.2e} pres {pres:.2e} dres {dres:.2e} k/t {:.2e}",
            it.kappa / it.tau
        );

        if pres <= opts.feastol
            && dres <= opts.feastol
            && (gap_hat <= opts.abstol || relgap <= opts.reltol)
        {
            return Ok(finish(
                p,
                it,
                SolveStatus::Optimal,
                iter,
                log,
                pres,
                dres,
                relgap,
            ));
        }
        if hz + by < 0.0 {
            let pinf = (p.a.tr_mul(&it.y) + p.g.tr_mul(&it.z)).norm() / resx0 / -(hz + by);
            if pinf <= opts.feastol {
                return Ok(finish(
                    p,
                    it,
                    SolveStatus::PrimalInfeasible,
                    iter,
                    log,
                    pres,
                    dres,
                    relgap,
                ));
            }
        }
        if cx < 0.0 {
            let ax = if p.b.is_empty() {
                0.0
            } else {
                (&p.a * &it.x).norm() / resy0
            };
            let dinf = ax.max((&p.g * &it.x + &it.s).norm() / resz0) / -cx;
            if dinf <= opts.feastol {
                return Ok(finish(
                    p,
                    it,
                    SolveStatus::DualInfeasible,
                    iter,
                    log,
                    pres,
                    dres,
                    relgap,
                ));
            }
        }
        if iter == opts.max_iter {
            break;
        }

        match newton_step(p, &blocks, &mut it, &e, nu, gap, opts, [&rx, &ry, &rz], rt) {
            Ok(()) => {}
            Err(err) => {
                log::debug!("interior-point iteration {iter} stopped: {err}");
                return Ok(finish(
                    p,
                    it,
                    SolveStatus::MaxIter,
                    iter,
                    log,
                    pres,
                    dres,
                    relgap,
                ));
            }
        }
    }
    let last = *log.last().expect("at least one iterate");
    let relgap = last.gap
        / last
            .primal_objective
            .abs()
            .max(last.dual_objective.abs())
            .max(1e-300);
    Ok(finish(
        p,
        it,
        SolveStatus::MaxIter,
        opts.max_iter,
        log,
        last.primal_residual,
        last.dual_residual,
        relgap,
    ))
}

#[allow(clippy::too_many_arguments)]
fn newton_step(
    p: &ConicProblem,
    blocks: &Blocks,
    it: &mut Iterate,
    e: &DVector<f64>,
    nu: usize,
    gap: f64,
    opts: &SolverOptions,
    [rx, ry, rz]: [&DVector<f64>; 3],
    rt: f64,
) -> Result<()> {
    let mut scal = Vec::with_capacity(blocks.cones.len());
    let mut lambdas = Vec::with_capacity(blocks.cones.len());
    for (c, r) in blocks.cones.iter().zip(&blocks.ranges) {
        let (w, l) =
            Scaling::compute(*c, &it.s.as_slice()[r.clone()], &it.z.as_slice()[r.clone()])?;
        scal.push(w);
        lambdas.push(l);
    }
    let kkt = Kkt::factor(p, blocks, &scal)?;
    let mu = (gap + it.tau * it.kappa) / (nu as f64 + 1.0);

    let neg_c = -&p.c;
    let (x1, y1, z1) = kkt.solve(&neg_c, &p.b, &p.h);
    let wz1 = kkt.w(&z1);
    let tau_base = wz1.norm_squared();

    let mut lam_sq = DVector::zeros(blocks.m);
    let mut lam_packed = DVector::zeros(blocks.m);
    for (b, r) in blocks.ranges.iter().enumerate() {
        lambdas[b].write_packed(&mut lam_packed.as_mut_slice()[r.clone()]);
        let lp = lam_packed.as_slice()[r.clone()].to_vec();
        lambdas[b].prod(&lp, &mut lam_sq.as_mut_slice()[r.clone()]);
    }

    let direction = |sigma: f64, corr: Option<&DVector<f64>>, corr_tau: f64| -> Direction {
        let mut target = e * (sigma * mu) - &lam_sq;
        if let Some(c) = corr {
            target -= c;
        }
        let d_s = blocks.map(&target, |b, i, o| lambdas[b].div(i, o));
        let rhs_x = rx * -(1.0 - sigma);
        let rhs_y = ry * (1.0 - sigma);
        let rhs_z = rz * (1.0 - sigma) - kkt.w_t(&d_s);
        let (x2, y2, z2) = kkt.solve(&rhs_x, &rhs_y, &rhs_z);
        let num = -(1.0 - sigma) * rt
            + p.c.dot(&x2)
            + p.b.dot(&y2)
            + p.h.dot(&z2)
            + (sigma * mu - it.tau * it.kappa - corr_tau) / it.tau;
        let dtau = num / (tau_base + it.kappa / it.tau);
        let dx = x2 + &x1 * dtau;
        let dy = y2 + &y1 * dtau;
        let dz = z2 + &z1 * dtau;
        let dkappa = (sigma * mu - it.tau * it.kappa - corr_tau - it.kappa * dtau) / it.tau;
        let dz_scaled = kkt.w(&dz);
        let ds_scaled = d_s - &dz_scaled;
        let ds = kkt.w_t(&ds_scaled);
        Direction {
            dx,
            dy,
            dz,
            ds,
            dtau,
            dkappa,
            ds_scaled,
            dz_scaled,
        }
    };

    let max_alpha = |d: &Direction| -> Result<f64> {
        let mut a = f64::INFINITY;
        for (b, r) in blocks.ranges.iter().enumerate() {
            let c = blocks.cones[b];
            a = a.min(kernels::max_step_scaled(
                &lambdas[b],
                c,
                &d.ds_scaled.as_slice()[r.clone()],
            )?);
            a = a.min(kernels::max_step_scaled(
                &lambdas[b],
                c,
                &d.dz_scaled.as_slice()[r.clone()],
            )?);
        }
        if d.dtau < 0.0 {
            a = a.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-it.kappa / d.dkappa);
        }
        Ok(a)
    };

    let aff = direction(0.0, None, 0.0);
    let alpha_aff = max_alpha(&aff)?.min(1.0);
    let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

    let mut corr = DVector::zeros(blocks.m);
    for (b, r) in blocks.ranges.iter().enumerate() {
        kernels::jordan_prod(
            blocks.cones[b],
            &aff.ds_scaled.as_slice()[r.clone()],
            &aff.dz_scaled.as_slice()[r.clone()],
            &mut corr.as_mut_slice()[r.clone()],
        );
    }
    let d = direction(sigma, Some(&corr), aff.dtau * aff.dkappa);
    let alpha = (opts.step_fraction * max_alpha(&d)?).min(1.0);
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Numerical(format!("step length {alpha}")));
    }

    it.x += &d.dx * alpha;
    it.y += &d.dy * alpha;
    it.z += &d.dz * alpha;
    it.s += &d.ds * alpha;
    it.tau += alpha * d.dtau;
    it.kappa += alpha * d.dkappa;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &ConicProblem,
    it: Iterate,
    status: SolveStatus,
    iterations: usize,
    log: Vec<IterLog>,
    pres: f64,
    dres: f64,
    relgap: f64,
) -> ConicSolution {
    let Iterate {
        x, y, z, s, tau, ..
    } = it;
    let mut certificate = None;
    let (x, y, z, s) = match status {
        SolveStatus::PrimalInfeasible => {
            let scale = -(p.h.dot(&z) + p.b.dot(&y));
            let (y, z) = (y / scale, z / scale);
            certificate = Some(Certificate::PrimalInfeasible {
                y: y.clone(),
                z: z.clone(),
            });
            (
                DVector::from_element(x.len(), f64::NAN),
                y,
                z,
                DVector::from_element(s.len(), f64::NAN),
            )
        }
        SolveStatus::DualInfeasible => {
            let scale = -p.c.dot(&x);
            let (x, s) = (x / scale, s / scale);
            certificate = Some(Certificate::DualInfeasible {
                x: x.clone(),
                s: s.clone(),
            });
            (
                x,
                DVector::from_element(y.len(), f64::NAN),
                DVector::from_element(z.len(), f64::NAN),
                s,
            )
        }
        _ => (x / tau, y / tau, z / tau, s / tau),
    };
    let primal_objective = p.c.dot(&x);
    let dual_objective = -(p.h.dot(&z) + p.b.dot(&y));
    ConicSolution {
        status,
        x,
        y,
        z,
        s,
        primal_objective,
        dual_objective,
        gap: relgap,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
        certificate,
        log,
    }
}
