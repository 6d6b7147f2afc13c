//! Average-SINR constrained power minimization with a rank-one penalty loop.
//!
//! Each beam is lifted to a Hermitian PSD matrix `W_m`. The expected SINR
//! constraint becomes linear in the `W_m` once the channel covariance is
//! replaced by `D = diag(h) E[q q^H] diag(h)^H`. The rank-one requirement is
//! handled by repeatedly solving
//!
//! ```text
//! min  sum_m tr(W_m) + rho sum_m (tr(W_m) - v_m^H W_m v_m)
//! ```
//!
//! where `v_m` is the leading eigenvector of the previous iterate, growing
//! `rho` while any rank gap `tr(W_m) - lambda_max(W_m)` is above tolerance.

use log::{debug, info};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channel::{expected_phase_matrix, ChannelVector, PhasorStats};
use crate::cone::{
    solve, AffineForm, Certificate, ComplexPsdVar, ConicSolution, ProblemBuilder, SolveStatus,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::network::{BeamDesign, DesignMeta, Network};
use crate::numerics::{
    canonical_phase, max_eigpair, CMatrix, CVector, EigPair, HermitianMatrix, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub initial_rho: f64,
    pub growth: f64,
    pub rank_gap_tol: f64,
    pub max_iters: usize,
    /// Relative change of the total power below which the loop may stop.
    pub objective_tol: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            initial_rho: 1.0,
            growth: 3.0,
            rank_gap_tol: 1e-6,
            max_iters: 30,
            objective_tol: 1e-6,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_rho > 0.0) || !(self.growth > 1.0) || !(self.rank_gap_tol > 0.0) {
            return Err(Error::Config(
                "penalty config needs rho > 0, growth > 1 and a positive gap tolerance".into(),
            ));
        }
        if self.max_iters == 0 || !(self.objective_tol > 0.0) {
            return Err(Error::Config(
                "penalty config needs max_iters >= 1 and objective_tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// A family of convex constraints on the lifted beams `W_1..W_M`.
pub trait ConstraintFamily: Sync {
    fn name(&self) -> &'static str;
    fn network(&self) -> &Network;
    fn add_constraints(&self, b: &mut ProblemBuilder, w: &[ComplexPsdVar]);
}

/// `diag(h) Q' diag(h)^H`.
pub fn expected_channel_matrix(ch: &ChannelVector, stats: &PhasorStats) -> HermitianMatrix {
    let h = &ch.estimated;
    let q = stats.expected_matrix.matrix();
    let k = h.len();
    HermitianMatrix::symmetrize(CMatrix::from_fn(k, k, |i, j| {
        h[i] * q[(i, j)] * h[j].conj()
    }))
}

#[derive(Debug, Clone)]
pub struct AvgDesignSpec {
    pub network: Network,
    /// Linear SINR targets per region and user.
    pub gamma: Vec<Vec<f64>>,
    expected: Vec<Vec<HermitianMatrix>>,
}

impl AvgDesignSpec {
    pub fn new(network: Network, gamma: Vec<Vec<f64>>) -> Result<Self> {
        network.validate()?;
        if gamma.len() != network.regions.len()
            || gamma
                .iter()
                .zip(&network.regions)
                .any(|(g, r)| g.len() != r.len())
        {
            return Err(Error::Config(
                "SINR targets must match the region/user layout".into(),
            ));
        }
        if gamma.iter().flatten().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::Config("SINR targets must be positive".into()));
        }
        let mut expected = Vec::with_capacity(network.regions.len());
        for r in &network.regions {
            let mut row = Vec::with_capacity(r.len());
            for u in &r.users {
                row.push(expected_channel_matrix(
                    &u.channel,
                    &expected_phase_matrix(&u.phase)?,
                ));
            }
            expected.push(row);
        }
        Ok(Self {
            network,
            gamma,
            expected,
        })
    }

    pub fn uniform(network: Network, gamma: f64) -> Result<Self> {
        let g = network
            .regions
            .iter()
            .map(|r| vec![gamma; r.len()])
            .collect();
        Self::new(network, g)
    }

    pub fn expected_matrix(&self, m: usize, n: usize) -> &HermitianMatrix {
        &self.expected[m][n]
    }
}

/// `tr(D T') - gamma sigma0^2` with
/// `T' = alpha W_m - gamma (t1 W_m + sum_{j != m} t2_j W_j)`.
pub fn avg_constraint(spec: &AvgDesignSpec, m: usize, n: usize, w: &[ComplexPsdVar]) -> AffineForm {
    let net = &spec.network;
    let plan = &net.regions[m];
    let gamma = spec.gamma[m][n];
    let d = spec.expected_matrix(m, n);
    let mut row = AffineForm::constant(-gamma * net.noise_power);
    for (j, var) in w.iter().enumerate() {
        let coef = if j == m {
            plan.alpha[n] - gamma * plan.intra_weight(n)
        } else {
            -gamma * net.regions[j].load()
        };
        if coef != 0.0 {
            row.add_scaled(&var.functional(d), coef);
        }
    }
    row.compact()
}

impl ConstraintFamily for AvgDesignSpec {
    fn name(&self) -> &'static str {
        "average-SINR"
    }

    fn network(&self) -> &Network {
        &self.network
    }

    fn add_constraints(&self, b: &mut ProblemBuilder, w: &[ComplexPsdVar]) {
        for (m, n) in self.network.user_indices() {
            let scale = 1.0 / (self.gamma[m][n] * self.network.noise_power);
            b.nonneg_labeled(avg_constraint(self, m, n, w).scaled(scale), self.name());
        }
    }
}

/// Result of one convex solve in the design loop.
#[derive(Debug, Clone)]
pub struct StageResult {
    pub w: Vec<HermitianMatrix>,
    pub solution: ConicSolution,
    /// `sum_m tr(W_m)`.
    pub power: f64,
}

fn dominant_label(z: &DVector<f64>, labels: &[String]) -> String {
    let mut best: Option<(&str, f64)> = None;
    let mut acc: Vec<(&str, f64)> = Vec::new();
    for (v, l) in z.iter().zip(labels) {
        if l == "psd" {
            continue;
        }
        match acc.iter_mut().find(|(name, _)| *name == l.as_str()) {
            Some(e) => e.1 += v.abs(),
            None => acc.push((l.as_str(), v.abs())),
        }
    }
    for (name, mass) in acc {
        if best.is_none_or(|b| mass > b.1) {
            best = Some((name, mass));
        }
    }
    best.map_or_else(|| "psd".to_string(), |b| b.0.to_string())
}

/// Solves the relaxed problem, optionally with the linearized penalty
/// `rho sum_m (tr(W_m) - v_m^H W_m v_m)`.
pub fn solve_stage<F: ConstraintFamily + ?Sized>(
    family: &F,
    penalty: Option<(&[CVector], f64)>,
    opts: &SolverOptions,
    stage: &str,
) -> Result<StageResult> {
    let net = family.network();
    let k = net.feeds;
    let mut b = ProblemBuilder::new();
    let w: Vec<ComplexPsdVar> = (0..net.regions.len())
        .map(|_| b.add_hermitian_psd(k))
        .collect();
    for (m, var) in w.iter().enumerate() {
        match penalty {
            None => b.add_objective(&var.trace()),
            Some((v, rho)) => {
                let vv = HermitianMatrix::outer(&v[m]);
                let g =
                    HermitianMatrix::identity(k).scale(1.0 + rho).matrix() - vv.scale(rho).matrix();
                b.add_objective(&var.functional(&HermitianMatrix::symmetrize(g)));
            }
        }
    }
    family.add_constraints(&mut b, &w);
    for kk in 0..k {
        let mut row = AffineForm::constant(net.feed_caps[kk]);
        for var in &w {
            row = row.term(var.diag_param(kk), -1.0);
        }
        b.nonneg_labeled(row, "per-feed power");
    }
    let (problem, labels) = b.build_labeled();
    let sol = solve(&problem, opts)?;
    debug!(
        "{stage}: {:?} after {} iterations, gap {:.2e}",
        sol.status, sol.iterations, sol.gap
    );
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => {
            let family = match &sol.certificate {
                Some(Certificate::PrimalInfeasible { z, .. }) => dominant_label(z, &labels),
                _ => family.name().to_string(),
            };
            return Err(Error::Infeasible { family });
        }
        status => {
            return Err(Error::Solver {
                stage: stage.to_string(),
                status,
            })
        }
    }
    let ws: Vec<HermitianMatrix> = w.iter().map(|v| v.value(sol.x.as_slice())).collect();
    let power = ws.iter().map(HermitianMatrix::trace).sum();
    Ok(StageResult {
        w: ws,
        solution: sol,
        power,
    })
}

/// Iterate of the penalty loop.
#[derive(Debug, Clone)]
pub struct PenaltyIterState {
    pub iteration: usize,
    pub w: Vec<HermitianMatrix>,
    pub eig: Vec<EigPair>,
    /// `tr(W_m) - lambda_max(W_m)`.
    pub gaps: Vec<f64>,
    pub rho: f64,
    pub power: f64,
    pub solver_status: SolveStatus,
    pub solver_iterations: usize,
}

impl PenaltyIterState {
    fn from_stage(iteration: usize, stage: StageResult, rho: f64) -> Result<Self> {
        let eig = stage
            .w
            .iter()
            .map(max_eigpair)
            .collect::<Result<Vec<_>>>()?;
        let gaps = stage
            .w
            .iter()
            .zip(&eig)
            .map(|(w, e)| w.trace() - e.value)
            .collect();
        Ok(Self {
            iteration,
            w: stage.w,
            eig,
            gaps,
            rho,
            power: stage.power,
            solver_status: stage.solution.status,
            solver_iterations: stage.solution.iterations,
        })
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    /// `sum tr(W) + rho sum (tr(W) - v^H W v)` with `v` the own eigenvectors.
    pub fn penalized_objective(&self) -> f64 {
        self.power + self.rho * self.gaps.iter().sum::<f64>()
    }
}

/// Relaxed problem without the rank-one requirement.
pub fn solve_sdr_init<F: ConstraintFamily + ?Sized>(
    family: &F,
    opts: &SolverOptions,
) -> Result<PenaltyIterState> {
    let stage = solve_stage(family, None, opts, "initial relaxation")?;
    PenaltyIterState::from_stage(0, stage, 0.0)
}

/// One penalized solve linearized at the eigenvectors of `state`.
pub fn penalty_step<F: ConstraintFamily + ?Sized>(
    state: &PenaltyIterState,
    family: &F,
    rho: f64,
    opts: &SolverOptions,
) -> Result<PenaltyIterState> {
    let v: Vec<CVector> = state.eig.iter().map(|e| e.vector.clone()).collect();
    let stage = solve_stage(
        family,
        Some((&v, rho)),
        opts,
        &format!("penalty iteration {}", state.iteration + 1),
    )?;
    PenaltyIterState::from_stage(state.iteration + 1, stage, rho)
}

/// `w_m = sqrt(lambda_max) v_max` with the largest entry real-positive.
pub fn extract_beams(w: &[HermitianMatrix], gap_tol: f64) -> Result<Vec<CVector>> {
    let mut beams = Vec::with_capacity(w.len());
    let mut worst = 0.0f64;
    for wm in w {
        let e = max_eigpair(wm)?;
        worst = worst.max(wm.trace() - e.value);
        let scale = C64::new(e.value.max(0.0).sqrt(), 0.0);
        beams.push(canonical_phase(&e.vector.map(|v| v * scale)));
    }
    if worst > gap_tol {
        return Err(Error::NotConverged {
            iters: 0,
            max_gap: worst,
        });
    }
    Ok(beams)
}

/// Full history of a penalty run.
#[derive(Debug, Clone)]
pub struct PenaltyOutcome {
    pub design: BeamDesign,
    pub history: Vec<PenaltyIterState>,
}

pub fn run_penalty_loop<F: ConstraintFamily + ?Sized>(
    family: &F,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
    algorithm: &str,
) -> Result<PenaltyOutcome> {
    cfg.validate()?;
    let mut state = solve_sdr_init(family, opts)?;
    let mut history = vec![state.clone()];
    let mut rho = cfg.initial_rho;
    let mut converged = state.max_gap() <= cfg.rank_gap_tol;
    while !converged && state.iteration < cfg.max_iters {
        let next = penalty_step(&state, family, rho, opts)?;
        let change = (next.power - state.power).abs() / state.power.abs().max(f64::MIN_POSITIVE);
        debug!(
            "{algorithm}: iteration {} power {:.6e} max gap {:.3e} rho {rho}",
            next.iteration,
            next.power,
            next.max_gap()
        );
        converged = next.max_gap() <= cfg.rank_gap_tol && change <= cfg.objective_tol;
        if next.max_gap() > cfg.rank_gap_tol {
            rho *= cfg.growth;
        }
        state = next;
        history.push(state.clone());
    }
    if !converged {
        return Err(Error::NotConverged {
            iters: state.iteration,
            max_gap: state.max_gap(),
        });
    }
    let beams = extract_beams(&state.w, cfg.rank_gap_tol)?;
    info!(
        "{algorithm}: converged after {} penalty iterations, power {:.6e} W",
        state.iteration, state.power
    );
    let mut meta = DesignMeta::new(algorithm);
    meta.iterations = state.iteration;
    meta.max_rank_gap = state.max_gap();
    let design = BeamDesign {
        beams,
        lifted: Some(state.w.clone()),
        noise_power: family.network().noise_power,
        meta,
    };
    Ok(PenaltyOutcome { design, history })
}

pub fn design_noncritical(spec: &AvgDesignSpec, cfg: &PenaltyConfig) -> Result<BeamDesign> {
    Ok(run_penalty_loop(spec, cfg, &SolverOptions::default(), "avg")?.design)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::channel::PhaseErrorModel;
    use crate::network::sinr;
    use crate::scenario::{build_network, AlphaPolicy, ScenarioConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn desk_config() -> ScenarioConfig {
        ScenarioConfig {
            alpha: AlphaPolicy::Explicit(vec![0.25, 0.75]),
            ..Default::default()
        }
    }

    fn db(x: f64) -> f64 {
        10f64.powf(x / 10.0)
    }

    #[test]
    fn expected_matrix_perfect_csi_is_rank_one() {
        let net = build_network(&ScenarioConfig {
            phase_std_deg: 0.0,
            ..desk_config()
        })
        .unwrap();
        let u = net.user(0, 0);
        let d = expected_channel_matrix(&u.channel, &expected_phase_matrix(&u.phase).unwrap());
        let want = HermitianMatrix::outer(&u.channel.estimated);
        assert!((d.matrix() - want.matrix()).norm() < 1e-12 * want.matrix().norm());
    }

    #[test]
    fn expected_matrix_matches_sampling() {
        let net = build_network(&desk_config()).unwrap();
        let u = net.user(1, 1);
        let d = expected_channel_matrix(&u.channel, &expected_phase_matrix(&u.phase).unwrap());
        assert!(d.min_eigenvalue().unwrap() > -1e-9 * d.matrix().norm());
        let sampler = u.phase.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let k = net.feeds;
        let h = &u.channel.estimated;
        let mut sum = CMatrix::zeros(k, k);
        let mut sq = nalgebra::DMatrix::<f64>::zeros(k, k);
        for _ in 0..n {
            let e = sampler.sample(&mut rng);
            let hh = crate::channel::perturb(h, &e);
            let s = &hh * hh.adjoint();
            sq += s.map(|v| v.re * v.re);
            sum += s;
        }
        let nf = n as f64;
        for i in 0..k {
            for j in 0..k {
                let mean = sum[(i, j)].re / nf;
                let se = ((sq[(i, j)] / nf - mean * mean).max(0.0) / nf).sqrt();
                assert!(
                    (mean - d.matrix()[(i, j)].re).abs() <= 3.0 * se + 1e-9 * d.matrix().norm()
                );
            }
        }
    }

    #[test]
    fn single_user_constraint_is_power_floor() {
        let mut net = build_network(&ScenarioConfig {
            beams: 1,
            users_per_beam: 1,
            feeds: 3,
            ..desk_config_single()
        })
        .unwrap();
        net.regions[0].alpha = vec![1.0];
        let spec = AvgDesignSpec::uniform(net, 2.0).unwrap();
        let var = ComplexPsdVar { dim: 3, offset: 0 };
        let row = avg_constraint(&spec, 0, 0, &[var]);
        let mut x = vec![0.0; 9];
        assert!((row.eval(&x) + 2.0).abs() < 1e-12);
        let w = HermitianMatrix::identity(3).scale(0.01);
        var.write(&w, &mut x);
        let d = spec.expected_matrix(0, 0);
        assert!((row.eval(&x) - (d.inner(&w) - 2.0)).abs() < 1e-10);
    }

    fn desk_config_single() -> ScenarioConfig {
        ScenarioConfig {
            alpha: AlphaPolicy::RankProportional,
            ..Default::default()
        }
    }

    /// Literal evaluation of the expected-SINR inequality.
    fn direct_margin(spec: &AvgDesignSpec, m: usize, n: usize, ws: &[HermitianMatrix]) -> f64 {
        let net = &spec.network;
        let plan = &net.regions[m];
        let gamma = spec.gamma[m][n];
        let d = spec.expected_matrix(m, n).matrix();
        let tr = |w: &HermitianMatrix| (d * w.matrix()).trace().re;
        let t1: f64 = (0..n).map(|i| plan.alpha[i]).sum::<f64>()
            + (n + 1..plan.len())
                .map(|i| plan.eta[n] * plan.alpha[i])
                .sum::<f64>();
        let mut t = t1 * tr(&ws[m]);
        for (j, w) in ws.iter().enumerate() {
            if j != m {
                let t2: f64 = net.regions[j].alpha.iter().sum();
                t += t2 * tr(w);
            }
        }
        plan.alpha[n] * tr(&ws[m]) - gamma * t - gamma * net.noise_power
    }

    #[test]
    fn constraint_row_matches_direct_formula() {
        let net = build_network(&desk_config()).unwrap();
        let spec = AvgDesignSpec::uniform(net, db(1.0)).unwrap();
        let k = spec.network.feeds;
        let vars: Vec<ComplexPsdVar> = (0..3)
            .map(|m| ComplexPsdVar {
                dim: k,
                offset: m * k * k,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ws: Vec<HermitianMatrix> = (0..3)
            .map(|_| {
                let v = CVector::from_fn(k, |_, _| {
                    C64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))
                });
                HermitianMatrix::outer(&v)
            })
            .collect();
        let mut x = vec![0.0; 3 * k * k];
        for (v, w) in vars.iter().zip(&ws) {
            v.write(w, &mut x);
        }
        for (m, n) in spec.network.user_indices() {
            let want = direct_margin(&spec, m, n, &ws);
            let got = avg_constraint(&spec, m, n, &vars).eval(&x);
            assert!(
                (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "{got} vs {want}"
            );
        }
        // gamma -> 0: W = 0 satisfies every row
        let tiny = AvgDesignSpec::uniform(spec.network.clone(), 1e-12).unwrap();
        let zero = vec![0.0; 3 * k * k];
        for (m, n) in tiny.network.user_indices() {
            assert!(avg_constraint(&tiny, m, n, &vars).eval(&zero) >= -1e-11);
        }
    }

    #[test]
    fn single_user_relaxation_matches_closed_form() {
        let cfg = ScenarioConfig {
            beams: 1,
            users_per_beam: 1,
            feeds: 4,
            ..desk_config_single()
        };
        let mut net = build_network(&cfg).unwrap();
        net.regions[0].alpha = vec![0.9];
        let gamma = 3.0;
        let spec = AvgDesignSpec::uniform(net, gamma).unwrap();
        let st = solve_sdr_init(&spec, &SolverOptions::default()).unwrap();
        let lmax = max_eigpair(spec.expected_matrix(0, 0)).unwrap().value;
        let want = gamma * spec.network.noise_power / (0.9 * lmax);
        assert!(
            (st.power / want - 1.0).abs() < 1e-5,
            "{} vs {want}",
            st.power
        );
        assert!(st.max_gap() < 1e-6);
    }

    #[test]
    fn rank_one_start_has_zero_penalty() {
        let cfg = ScenarioConfig {
            beams: 1,
            users_per_beam: 1,
            feeds: 4,
            ..desk_config_single()
        };
        let net = build_network(&cfg).unwrap();
        let spec = AvgDesignSpec::uniform(net, 2.0).unwrap();
        let opts = SolverOptions::default();
        let st = solve_sdr_init(&spec, &opts).unwrap();
        let next = penalty_step(&st, &spec, 1.0, &opts).unwrap();
        assert!(st.max_gap() < 1e-7 && next.max_gap() < 1e-7);
        assert!((next.power / st.power - 1.0).abs() < 1e-6);
        assert!(next.penalized_objective() >= 0.0);
    }

    #[test]
    fn extraction_of_scaled_projector() {
        let u = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let w = HermitianMatrix::outer(&u).scale(4.0);
        let beams = extract_beams(std::slice::from_ref(&w), 1e-9).unwrap();
        let back = HermitianMatrix::outer(&beams[0]);
        assert!((back.matrix() - w.matrix()).norm() < 1e-10);
        assert!((beams[0].norm_squared() - 4.0).abs() < 1e-10);
        let full = HermitianMatrix::identity(2);
        assert!(matches!(
            extract_beams(&[full], 1e-6),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn desk_design_serves_every_user() {
        let net = build_network(&desk_config()).unwrap();
        let gamma = db(3.0);
        let spec = AvgDesignSpec::uniform(net, gamma).unwrap();
        let out = run_penalty_loop(
            &spec,
            &PenaltyConfig::default(),
            &SolverOptions::default(),
            "avg",
        )
        .unwrap();
        let d = &out.design;
        assert!(out
            .history
            .iter()
            .all(|s| s.solver_status == SolveStatus::Optimal));
        assert!(d.meta.max_rank_gap <= 1e-6);
        assert!(out
            .history
            .iter()
            .all(|s| s.gaps.iter().all(|g| *g >= -1e-9)));
        let caps = crate::network::per_feed_power(d);
        assert!(caps.iter().all(|p| *p <= spec.network.feed_caps[0] + 1e-8));
        let ws = d.lifted.as_ref().unwrap();
        assert!((d.total_power() - ws.iter().map(|w| w.trace()).sum::<f64>()).abs() <= 1e-6 * 3.0);
        for (m, n) in spec.network.user_indices() {
            let rank_one: Vec<HermitianMatrix> =
                d.beams.iter().map(HermitianMatrix::outer).collect();
            let margin = direct_margin(&spec, m, n, &rank_one) / (gamma * spec.network.noise_power);
            assert!(margin > -1e-4, "user ({m},{n}) margin {margin}");
        }
        // at zero phase error the nominal SINR meets the target
        let perfect = PhaseErrorModel::white(0.0, spec.network.feeds);
        let mut net0 = spec.network.clone();
        for r in &mut net0.regions {
            for u in &mut r.users {
                u.phase = perfect.clone();
            }
        }
        let d0 = design_noncritical(
            &AvgDesignSpec::uniform(net0.clone(), gamma).unwrap(),
            &PenaltyConfig::default(),
        )
        .unwrap();
        for (m, n) in net0.user_indices() {
            let s = sinr(&net0, m, n, &net0.user(m, n).channel.estimated, &d0.beams);
            assert!(s.gamma >= gamma * (1.0 - 1e-4), "({m},{n}) {}", s.gamma);
        }
    }
}
