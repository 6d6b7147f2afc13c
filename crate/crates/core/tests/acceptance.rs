//! End-to-end acceptance criteria on the desk-scale instance.
//!
//! Every criterion prints one PASS/FAIL line on stderr (outside the test
//! harness capture) and the test fails if any criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use leobeam::baselines::{design_nonrobust, design_zfbf, tdma_power};
use leobeam::channel::{
    beam_gain, db_to_linear, expected_phase_matrix, BeamPattern, PhaseErrorModel,
};
use leobeam::cone::kernels::{smat, svec};
use leobeam::cone::{kkt_residuals, solve};
use leobeam::evaluator::evaluate;
use leobeam::experiment::{ExperimentConfig, Instance};
use leobeam::network::Network;
use leobeam::robust_avg::{design_noncritical, run_penalty_loop, AvgDesignSpec, PenaltyConfig};
use leobeam::robust_outage::{
    build_z, design_critical, exact_quadratic, taylor_quadratic, OutageSpec,
};
use leobeam::scenario::{build_network, ScenarioConfig};
use leobeam::{ConeBlock, ConicProblem, HermitianMatrix, SolveStatus, SolverOptions};

const SAMPLES: usize = 100_000;
const EVAL_SEED: u64 = 17;

type Check = Result<String, String>;

fn desk_network(mutate: impl FnOnce(&mut ScenarioConfig)) -> Network {
    let mut cfg = ExperimentConfig::default().scenario;
    mutate(&mut cfg);
    build_network(&cfg).expect("desk scenario builds")
}

fn gamma3() -> f64 {
    db_to_linear(3.0)
}

fn criterion_1() -> Check {
    let p = BeamPattern {
        max_gain: db_to_linear(17.0),
        angle_3db: 0.4f64.to_radians(),
    };
    let rel = (beam_gain(&p, 0.0) - p.max_gain).abs() / p.max_gain;
    let half = beam_gain(&p, p.angle_3db) / p.max_gain;
    let msg = format!("boresight rel err {rel:.1e}, gain(phi3dB)/Gm = {half:.4}");
    if rel <= 1e-9 && (half - 0.5).abs() <= 0.05 * 0.5 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Check {
    let sigma = 5f64.to_radians();
    let k = 3;
    let model = PhaseErrorModel::white(sigma, k);
    let e = expected_phase_matrix(&model)
        .map_err(|e| e.to_string())?
        .expected_matrix;
    let closed = (-sigma * sigma).exp();
    let off = e.matrix()[(0, 1)];
    if (off.re - closed).abs() > 1e-15 || off.im != 0.0 || (off.re - 0.99241).abs() > 5e-6 {
        return Err(format!("off-diagonal {off} vs exp(-sigma^2) = {closed}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sampler = model.sampler().map_err(|e| e.to_string())?;
    let mut sum = DMatrix::<f64>::zeros(k, k);
    let mut sq = DMatrix::<f64>::zeros(k, k);
    for _ in 0..SAMPLES {
        let d = sampler.sample(&mut rng);
        for i in 0..k {
            for j in 0..k {
                // Re(q q^H)_{ij}; the imaginary part has mean zero by symmetry
                let v = (d[i] - d[j]).cos();
                sum[(i, j)] += v;
                sq[(i, j)] += v * v;
            }
        }
    }
    let n = SAMPLES as f64;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let mean = sum[(i, j)] / n;
            let se = ((sq[(i, j)] / n - mean * mean).max(0.0) / n).sqrt();
            let dev = (mean - e.matrix()[(i, j)].re).abs();
            if dev > 3.0 * se + 1e-15 {
                return Err(format!(
                    "entry ({i},{j}): sample {mean} vs {} (se {se:.2e})",
                    e.matrix()[(i, j)].re
                ));
            }
            if se > 0.0 {
                worst = worst.max(dev / se);
            }
        }
    }
    Ok(format!(
        "off-diagonal {:.5} = exp(-sigma^2); Monte-Carlo within {worst:.2} SE",
        off.re
    ))
}

fn criterion_3() -> Check {
    let spec = AvgDesignSpec::uniform(desk_network(|_| {}), gamma3()).map_err(|e| e.to_string())?;
    let out = run_penalty_loop(
        &spec,
        &PenaltyConfig::default(),
        &SolverOptions::default(),
        "avg",
    )
    .map_err(|e| e.to_string())?;
    let all_optimal = out
        .history
        .iter()
        .all(|s| s.solver_status == SolveStatus::Optimal);
    let last = out.history.last().unwrap();
    let msg = format!(
        "{} penalty iterations, max rank gap {:.2e}, every step optimal: {all_optimal}",
        last.iteration,
        last.max_gap()
    );
    if all_optimal && last.max_gap() <= 1e-6 && last.iteration <= 8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Check {
    let net = desk_network(|c| {
        c.phase_std_deg = 5.0;
        c.eta = 0.05;
    });
    let spec = AvgDesignSpec::uniform(net.clone(), gamma3()).map_err(|e| e.to_string())?;
    let d = design_noncritical(&spec, &PenaltyConfig::default()).map_err(|e| e.to_string())?;
    let rep = evaluate(&d, &net, &spec.gamma, SAMPLES, EVAL_SEED).map_err(|e| e.to_string())?;
    let ratio = rep.min_mean_ratio();
    let msg = format!("min mean SINR / gamma = {ratio:.4} over {SAMPLES} samples");
    if ratio >= 0.95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Check {
    let net = desk_network(|_| {});
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [0.05, 0.2] {
        let spec = OutageSpec::uniform(net.clone(), gamma3(), p).map_err(|e| e.to_string())?;
        let d = design_critical(&spec, &PenaltyConfig::default()).map_err(|e| e.to_string())?;
        let rep = evaluate(&d, &net, &spec.gamma, SAMPLES, EVAL_SEED).map_err(|e| e.to_string())?;
        for u in &rep.users {
            if u.outage > p + 3.0 * u.se_outage {
                ok = false;
                parts.push(format!(
                    "user ({},{}) outage {:.4} > {p} + 3 SE",
                    u.m, u.n, u.outage
                ));
            }
        }
        parts.push(format!("p={p}: max outage {:.4}", rep.max_outage()));
    }
    if ok {
        Ok(parts.join(", "))
    } else {
        Err(parts.join(", "))
    }
}

fn avg_power(net: &Network, gamma_db: f64) -> Result<f64, String> {
    let spec =
        AvgDesignSpec::uniform(net.clone(), db_to_linear(gamma_db)).map_err(|e| e.to_string())?;
    Ok(design_noncritical(&spec, &PenaltyConfig::default())
        .map_err(|e| e.to_string())?
        .total_power())
}

fn outage_power(net: &Network, gamma_db: f64, p: f64) -> Result<f64, String> {
    let spec =
        OutageSpec::uniform(net.clone(), db_to_linear(gamma_db), p).map_err(|e| e.to_string())?;
    Ok(design_critical(&spec, &PenaltyConfig::default())
        .map_err(|e| e.to_string())?
        .total_power())
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9))
}

fn criterion_6() -> Check {
    let mut failures = Vec::new();
    let net = desk_network(|_| {});
    let grid = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
    let pg: Vec<f64> = grid
        .iter()
        .map(|g| avg_power(&net, *g))
        .collect::<Result<_, _>>()?;
    if !nondecreasing(&pg) {
        failures.push(format!("gamma trend {pg:?}"));
    }
    let ps: Vec<f64> = [0.0, 5.0, 10.0]
        .iter()
        .map(|s| avg_power(&desk_network(|c| c.phase_std_deg = *s), 3.0))
        .collect::<Result<_, _>>()?;
    if !nondecreasing(&ps) {
        failures.push(format!("sigma trend {ps:?}"));
    }
    let pp: Vec<f64> = [0.01, 0.05, 0.2]
        .iter()
        .map(|p| outage_power(&net, 3.0, *p))
        .collect::<Result<_, _>>()?;
    let (g1, g2) = (pp[0] - pp[1], pp[1] - pp[2]);
    if !(pp[0] >= pp[1] && pp[1] >= pp[2] && g1 > g2) {
        failures.push(format!("p trend {pp:?}"));
    }
    let hi = grid[grid.len() - 1];
    let e01 = avg_power(&desk_network(|c| c.eta = 0.01), hi)?;
    let e10 = avg_power(&desk_network(|c| c.eta = 0.1), hi)?;
    if !(e10 > e01) {
        failures.push(format!("eta: P(0.1) {e10:.5e} vs P(0.01) {e01:.5e}"));
    }
    let msg = format!(
        "gamma {:.3e}..{:.3e} W; sigma {:.4e}/{:.4e}/{:.4e}; p gaps {g1:.3e} > {g2:.3e}; eta {e01:.4e} < {e10:.4e}",
        pg[0], pg[5], ps[0], ps[1], ps[2]
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{}; {msg}", failures.join("; ")))
    }
}

fn criterion_7() -> Check {
    let net = desk_network(|c| c.phase_std_deg = 5.0);
    let avg = AvgDesignSpec::uniform(net.clone(), gamma3()).map_err(|e| e.to_string())?;
    let out = OutageSpec::uniform(net.clone(), gamma3(), 0.05).map_err(|e| e.to_string())?;
    let dn = design_nonrobust(&avg, &PenaltyConfig::default()).map_err(|e| e.to_string())?;
    let dr = design_critical(&out, &PenaltyConfig::default()).map_err(|e| e.to_string())?;
    let en = evaluate(&dn, &net, &avg.gamma, SAMPLES, EVAL_SEED)
        .map_err(|e| e.to_string())?
        .max_outage();
    let er = evaluate(&dr, &net, &avg.gamma, SAMPLES, EVAL_SEED)
        .map_err(|e| e.to_string())?
        .max_outage();
    let msg = format!("max outage non-robust {en:.4} vs outage design {er:.4}");
    if en >= 2.0 * er {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Check {
    let inst = Instance::from_config(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let spec = inst.avg_spec().map_err(|e| e.to_string())?;
    let alg1 = design_noncritical(&spec, &PenaltyConfig::default())
        .map_err(|e| e.to_string())?
        .total_power();
    let zf = design_zfbf(&spec).map_err(|e| e.to_string())?.total_power();
    let tdma = tdma_power(&spec);
    let msg = format!("TDMA {tdma:.4e} W, ZFBF {zf:.4e} W, avg design {alg1:.4e} W");
    if tdma > zf && zf >= alg1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------- criterion 9: random cone programs against an ADMM oracle ----------

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn interior_point(rng: &mut ChaCha8Rng, cone: ConeBlock) -> Vec<f64> {
    match cone {
        ConeBlock::NonNeg(d) => (0..d).map(|_| rng.random_range(0.5..1.5)).collect(),
        ConeBlock::Soc(d) => {
            let tail: Vec<f64> = (1..d).map(|_| normal(rng)).collect();
            let norm = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = vec![norm + rng.random_range(0.5..1.0)];
            v.extend(tail);
            v
        }
        ConeBlock::Psd(n) => {
            let r = DMatrix::from_fn(n, n, |_, _| normal(rng));
            svec(&(&r * r.transpose() + DMatrix::identity(n, n) * 0.5))
        }
    }
}

fn project(cone: ConeBlock, v: &mut [f64]) {
    match cone {
        ConeBlock::NonNeg(_) => v.iter_mut().for_each(|x| *x = x.max(0.0)),
        ConeBlock::Soc(_) => {
            let t = v[0];
            let norm = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= t {
                return;
            }
            if norm <= -t {
                v.iter_mut().for_each(|x| *x = 0.0);
                return;
            }
            let a = 0.5 * (t + norm);
            v[0] = a;
            for x in &mut v[1..] {
                *x *= a / norm;
            }
        }
        ConeBlock::Psd(n) => {
            let eig = smat(v, n).symmetric_eigen();
            let clipped = eig.eigenvalues.map(|l| l.max(0.0));
            let m =
                &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
            v.copy_from_slice(&svec(&m));
        }
    }
}

fn random_problem(rng: &mut ChaCha8Rng) -> ConicProblem {
    loop {
        let n = rng.random_range(2..=6usize);
        let mut cones = vec![ConeBlock::NonNeg(rng.random_range(1..=3))];
        cones.push(ConeBlock::Soc(rng.random_range(2..=4)));
        match rng.random_range(0..3) {
            0 => cones.push(ConeBlock::Psd(2)),
            1 => cones.push(ConeBlock::Psd(3)),
            _ => {}
        }
        let m: usize = cones.iter().map(|c| c.dim()).sum();
        let p = rng.random_range(0..=1usize.min(n - 1));
        if m + p < n {
            continue;
        }
        let g = DMatrix::from_fn(m, n, |_, _| normal(rng));
        let a = DMatrix::from_fn(p, n, |_, _| normal(rng));
        let stacked = DMatrix::from_fn(
            m + p,
            n,
            |i, j| if i < m { g[(i, j)] } else { a[(i - m, j)] },
        );
        let sv = stacked.clone().svd(false, false).singular_values;
        if sv.min() < 1e-2 * sv.max() {
            continue;
        }
        let x0 = DVector::from_fn(n, |_, _| normal(rng));
        let s0 = DVector::from_vec(cones.iter().flat_map(|c| interior_point(rng, *c)).collect());
        let z0 = DVector::from_vec(cones.iter().flat_map(|c| interior_point(rng, *c)).collect());
        let y0 = DVector::from_fn(p, |_, _| normal(rng));
        let h = &g * &x0 + s0;
        let b = &a * &x0;
        let c = -(g.transpose() * z0) - a.transpose() * y0;
        return ConicProblem {
            c,
            g,
            h,
            a,
            b,
            cones,
        };
    }
}

/// Over-relaxed ADMM on `min c^T x  s.t.  M x + v = q,  v in K x {0}`.
fn admm_objective(p: &ConicProblem) -> f64 {
    let (m, n, k) = (p.g.nrows(), p.g.ncols(), p.a.nrows());
    let big = DMatrix::from_fn(
        m + k,
        n,
        |i, j| if i < m { p.g[(i, j)] } else { p.a[(i - m, j)] },
    );
    let q = DVector::from_fn(m + k, |i, _| if i < m { p.h[i] } else { p.b[i - m] });
    let rho = 1.0;
    let alpha = 1.6;
    let chol = (big.transpose() * &big)
        .cholesky()
        .expect("full column rank");
    let mut v = DVector::zeros(m + k);
    let mut lam = DVector::zeros(m + k);
    let mut x = DVector::zeros(n);
    let ranges = {
        let mut out = Vec::new();
        let mut off = 0;
        for c in &p.cones {
            out.push((off..off + c.dim(), *c));
            off += c.dim();
        }
        out
    };
    for _ in 0..400_000 {
        x = chol.solve(&(big.transpose() * (&q - &v - &lam) - &p.c / rho));
        let mx = &big * &x;
        let relaxed = &mx * alpha + (&q - &v) * (1.0 - alpha);
        let v_prev = v.clone();
        v = &q - &relaxed - &lam;
        for (r, c) in &ranges {
            project(*c, &mut v.as_mut_slice()[r.clone()]);
        }
        for i in m..m + k {
            v[i] = 0.0;
        }
        lam += &relaxed + &v - &q;
        let rp = (&mx + &v - &q).norm();
        let rd = rho * (big.transpose() * (&v - &v_prev)).norm();
        if rp < 1e-11 * (1.0 + q.norm()) && rd < 1e-11 * (1.0 + p.c.norm()) {
            break;
        }
    }
    p.c.dot(&x)
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let opts = SolverOptions::default();
    let (mut worst_kkt, mut worst_obj): (f64, f64) = (0.0, 0.0);
    for case in 0..50 {
        let p = random_problem(&mut rng);
        let sol = solve(&p, &opts).map_err(|e| format!("case {case}: {e}"))?;
        if sol.status != SolveStatus::Optimal {
            return Err(format!("case {case}: status {:?}", sol.status));
        }
        let (rp, rd, comp) = kkt_residuals(&p, &sol);
        let kkt = rp.max(rd).max(comp);
        worst_kkt = worst_kkt.max(kkt);
        let oracle = admm_objective(&p);
        let obj = p.c.dot(&sol.x);
        let rel = (obj - oracle).abs() / oracle.abs().max(1.0);
        worst_obj = worst_obj.max(rel);
        for l in &sol.log {
            let scale = 1.0 + l.primal_objective.abs().max(l.dual_objective.abs());
            let feasible = l.primal_residual <= 1e-8 && l.dual_residual <= 1e-8;
            if l.gap < 0.0 || (feasible && l.primal_objective - l.dual_objective < -1e-8 * scale) {
                return Err(format!(
                    "case {case}: weak duality violated at iteration {}",
                    l.iter
                ));
            }
        }
        if kkt > 1e-7 || rel > 1e-4 {
            return Err(format!(
                "case {case}: kkt {kkt:.2e}, objective {obj} vs oracle {oracle}"
            ));
        }
    }
    Ok(format!(
        "50 problems, worst KKT residual {worst_kkt:.1e}, worst objective mismatch {worst_obj:.1e}"
    ))
}

fn criterion_10() -> Check {
    let net = desk_network(|_| {});
    let spec = OutageSpec::uniform(net.clone(), gamma3(), 0.05).map_err(|e| e.to_string())?;
    let d = design_critical(&spec, &PenaltyConfig::default()).map_err(|e| e.to_string())?;
    let ws: Vec<HermitianMatrix> = d.beams.iter().map(HermitianMatrix::outer).collect();
    let scales = [1e-1, 3e-2, 1e-2, 3e-3];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut total = [0.0; 4];
    for (m, n) in net.user_indices() {
        let z = build_z(&spec, m, n, &ws);
        for _ in 0..10 {
            let dir = DVector::from_fn(net.feeds, |_, _| normal(&mut rng)).normalize();
            for (t, s) in total.iter_mut().zip(scales) {
                let th = &dir * s;
                *t += (exact_quadratic(&z, &th) - taylor_quadratic(&z, &th)).abs();
            }
        }
    }
    let x: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = total.iter().map(|e| e.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 4.0, y.iter().sum::<f64>() / 4.0);
    let slope = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let msg = format!("log-log slope {slope:.3}");
    if (slope - 3.0).abs() <= 0.3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("boresight identity", criterion_1, Duration::from_secs(1)),
        ("expectation matrix", criterion_2, Duration::from_secs(10)),
        (
            "average design convergence",
            criterion_3,
            Duration::from_secs(120),
        ),
        (
            "average design service",
            criterion_4,
            Duration::from_secs(300),
        ),
        (
            "outage design conservativeness",
            criterion_5,
            Duration::from_secs(600),
        ),
        ("trend suite", criterion_6, Duration::from_secs(1800)),
        (
            "robust vs non-robust",
            criterion_7,
            Duration::from_secs(600),
        ),
        ("baseline ordering", criterion_8, Duration::from_secs(300)),
        ("solver correctness", criterion_9, Duration::from_secs(120)),
        ("expansion order", criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = f();
        let el = t.elapsed();
        let (tag, msg) = match &result {
            Ok(m) => ("PASS", m.clone()),
            Err(m) => ("FAIL", m.clone()),
        };
        let timing = if el <= *budget {
            String::new()
        } else {
            format!(" [over {:?} budget]", budget)
        };
        writeln!(
            err,
            "[{tag}] {:>2}. {name}: {msg} ({:.2?}){timing}",
            i + 1,
            el
        )
        .unwrap();
        if result.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
