//! Fast invariant checks printed as one line each.

use leobeam::channel::{
    beam_gain, db_to_linear, expected_phase_matrix, sample_phase_error, BeamPattern,
    PhaseErrorModel,
};
use leobeam::cone::{solve, AffineForm, ProblemBuilder};
use leobeam::experiment::{design_only, Algorithm, ExperimentConfig, Instance};
use leobeam::network::sinr;
use leobeam::robust_outage::{exact_quadratic, taylor_quadratic};
use leobeam::scenario::{substream, STREAM_EVAL};
use leobeam::{CMatrix, DVector, HermitianMatrix, SolverOptions, C64};

fn boresight() -> Result<String, String> {
    let p = BeamPattern {
        max_gain: db_to_linear(17.0),
        angle_3db: 0.4f64.to_radians(),
    };
    let g0 = beam_gain(&p, 0.0) / p.max_gain;
    let half = beam_gain(&p, p.angle_3db) / p.max_gain;
    if (g0 - 1.0).abs() <= 1e-9 && (half - 0.5).abs() <= 0.025 {
        Ok(format!("boresight {g0:.12}, half power {half:.4}"))
    } else {
        Err(format!("boresight {g0}, half power {half}"))
    }
}

fn phase_expectation() -> Result<String, String> {
    let sigma = 5f64.to_radians();
    let model = PhaseErrorModel::white(sigma, 2);
    let e = expected_phase_matrix(&model)
        .map_err(|e| e.to_string())?
        .expected_matrix
        .matrix()[(0, 1)]
        .re;
    let mut rng = substream(0, STREAM_EVAL, 0);
    let n = 20_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let d = sample_phase_error(&model, &mut rng).map_err(|e| e.to_string())?;
        let v = (d[0] - d[1]).cos();
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
    if (e - (-sigma * sigma).exp()).abs() < 1e-12 && (mean - e).abs() <= 3.0 * se {
        Ok(format!("E[q q^H] off-diagonal {e:.5}, sampled {mean:.5}"))
    } else {
        Err(format!("closed form {e}, sampled {mean} +- {se}"))
    }
}

fn small_lp() -> Result<String, String> {
    // min x + y  s.t.  x + 2y >= 2, 2x + y >= 2
    let mut b = ProblemBuilder::new();
    let (x, y) = (b.add_var(), b.add_var());
    b.add_objective(&AffineForm::var(x).term(y, 1.0));
    b.nonneg(AffineForm::constant(-2.0).term(x, 1.0).term(y, 2.0));
    b.nonneg(AffineForm::constant(-2.0).term(x, 2.0).term(y, 1.0));
    b.nonneg(AffineForm::var(x));
    b.nonneg(AffineForm::var(y));
    let sol = solve(&b.build(), &SolverOptions::default()).map_err(|e| e.to_string())?;
    let obj = sol.x[x] + sol.x[y];
    if sol.is_optimal() && (obj - 4.0 / 3.0).abs() < 1e-7 {
        Ok(format!("LP optimum {obj:.9}"))
    } else {
        Err(format!("{:?} objective {obj}", sol.status))
    }
}

fn taylor_order() -> Result<String, String> {
    let z = CMatrix::from_fn(3, 3, |i, j| {
        C64::new(1.0 + (i + 2 * j) as f64 * 0.3, (i as f64 - j as f64) * 0.7)
    });
    let z = HermitianMatrix::symmetrize(z);
    let dir = DVector::from_vec(vec![0.6, -0.3, 0.74]);
    let err = |s: f64| (exact_quadratic(&z, &(&dir * s)) - taylor_quadratic(&z, &(&dir * s))).abs();
    let slope = (err(1e-2).ln() - err(1e-1).ln()) / (1e-2f64.ln() - 1e-1f64.ln());
    if (slope - 3.0).abs() <= 0.3 {
        Ok(format!("expansion remainder slope {slope:.3}"))
    } else {
        Err(format!("slope {slope}"))
    }
}

fn desk_design() -> Result<String, String> {
    let cfg = ExperimentConfig::default();
    let inst = Instance::from_config(&cfg).map_err(|e| e.to_string())?;
    let run = design_only(&inst, Algorithm::Avg, &cfg.design.penalty).map_err(|e| e.to_string())?;
    let d = run.design.ok_or("no beams")?;
    let mut sigma0 = inst.network.clone();
    for r in &mut sigma0.regions {
        for u in &mut r.users {
            u.phase.std_dev = 0.0;
        }
    }
    let worst = inst
        .network
        .user_indices()
        .into_iter()
        .map(|(m, n)| {
            sinr(
                &sigma0,
                m,
                n,
                &sigma0.user(m, n).channel.estimated,
                &d.beams,
            )
            .gamma
                / inst.gamma[m][n]
        })
        .fold(f64::INFINITY, f64::min);
    if run.max_rank_gap <= 1e-6 && worst > 0.95 {
        Ok(format!(
            "desk design {:.4e} W, rank gap {:.1e}, nominal SINR ratio {worst:.3}",
            run.total_power, run.max_rank_gap
        ))
    } else {
        Err(format!(
            "rank gap {:.3e}, nominal SINR ratio {worst}",
            run.max_rank_gap
        ))
    }
}

pub fn run() -> bool {
    let checks: [(&str, fn() -> Result<String, String>); 5] = [
        ("beam pattern", boresight),
        ("phase expectation", phase_expectation),
        ("conic solver", small_lp),
        ("second-order expansion", taylor_order),
        ("average design", desk_design),
    ];
    let mut ok = true;
    for (name, f) in checks {
        match f() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                ok = false;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    ok
}
