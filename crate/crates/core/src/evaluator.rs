//! Monte-Carlo evaluation of beam designs under sampled phase errors.
//!
//! Rain and the estimated channels stay fixed; only the phase error is
//! redrawn. Every user owns a generator substream derived from the seed, so
//! results do not depend on how the work is scheduled.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{linear_to_db, perturb};
use crate::error::{Error, Result};
use crate::network::{per_feed_power, sinr, BeamDesign, Network};
use crate::scenario::{substream, STREAM_EVAL};

pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserEval {
    pub m: usize,
    pub n: usize,
    pub target: f64,
    pub mean_sinr: f64,
    pub se_mean_sinr: f64,
    /// Empirical `Pr{SINR < target}`.
    pub outage: f64,
    pub se_outage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub users: Vec<UserEval>,
    pub samples: usize,
    pub seed: u64,
    pub total_power: f64,
    pub per_feed_power: Vec<f64>,
}

impl EvalReport {
    pub fn max_outage(&self) -> f64 {
        self.users.iter().map(|u| u.outage).fold(0.0, f64::max)
    }

    /// Smallest `mean_sinr / target` over users.
    pub fn min_mean_ratio(&self) -> f64 {
        self.users
            .iter()
            .map(|u| u.mean_sinr / u.target)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,n,mean_sinr_db,outage,se_outage,samples,seed")?;
        for u in &self.users {
            writeln!(
                out,
                "{},{},{:.6},{:.6e},{:.6e},{},{}",
                u.m,
                u.n,
                linear_to_db(u.mean_sinr),
                u.outage,
                u.se_outage,
                self.samples,
                self.seed
            )?;
        }
        Ok(())
    }
}

/// Draws `samples` phase-error realizations per user and aggregates the true SINR.
pub fn evaluate(
    design: &BeamDesign,
    network: &Network,
    gamma: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<EvalReport> {
    if samples == 0 {
        return Err(Error::Config("evaluation needs at least one sample".into()));
    }
    if design.beams.len() != network.regions.len() || design.feeds() != network.feeds {
        return Err(Error::Dimension("design does not match the network".into()));
    }
    let users = network.user_indices();
    let users = users
        .par_iter()
        .enumerate()
        .map(|(idx, &(m, n))| {
            let link = network.user(m, n);
            let sampler = link.phase.sampler()?;
            let mut rng = substream(seed, STREAM_EVAL, idx as u64);
            let target = gamma[m][n];
            let (mut mean, mut m2, mut fails) = (0.0, 0.0, 0usize);
            for i in 0..samples {
                let e = sampler.sample(&mut rng);
                let h = perturb(&link.channel.estimated, &e);
                let g = sinr(network, m, n, &h, &design.beams).gamma;
                let delta = g - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (g - mean);
                if g < target {
                    fails += 1;
                }
            }
            let nf = samples as f64;
            let var = m2 / nf;
            let p = fails as f64 / nf;
            Ok(UserEval {
                m,
                n,
                target,
                mean_sinr: mean,
                se_mean_sinr: (var / nf).sqrt(),
                outage: p,
                se_outage: (p * (1.0 - p) / nf).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        users,
        samples,
        seed,
        total_power: design.total_power(),
        per_feed_power: per_feed_power(design).iter().copied().collect(),
    })
}

/// Outcome of one grid point.
#[derive(Debug, Clone)]
pub struct SweepPoint<T> {
    pub value: f64,
    pub outcome: Result<T>,
}

impl<T> SweepPoint<T> {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(_) => "ok".into(),
            Err(Error::Infeasible { family }) => format!("infeasible:{family}"),
            Err(Error::NotConverged { .. }) => "not-converged".into(),
            Err(e) => format!("error:{}", e.to_string().replace(',', ";")),
        }
    }
}

/// Runs `design_fn` at every grid value in parallel; failures are kept per point.
pub fn sweep<T, F>(grid: &[f64], design_fn: F) -> Result<Vec<SweepPoint<T>>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    Ok(grid
        .par_iter()
        .map(|&value| SweepPoint {
            value,
            outcome: design_fn(value),
        })
        .collect())
}
