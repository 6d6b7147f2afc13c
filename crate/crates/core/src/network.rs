//! NOMA signal model: superposition coding inside each region, SIC with a
//! linear residual, and per-user SINR.
//!
//! Users of a region are stored in SIC order, strongest first. User `n`
//! sees the stronger users' streams in full and the weaker users' streams
//! `i > n` scaled by its residual coefficient `eta`.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelVector, PhaseErrorModel};
use crate::error::{Error, Result};
use crate::numerics::{CVector, HermitianMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    pub channel: ChannelVector,
    pub phase: PhaseErrorModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPlan {
    pub region: usize,
    /// Users in SIC order.
    pub users: Vec<UserLink>,
    pub alpha: Vec<f64>,
    pub eta: Vec<f64>,
}

impl RegionPlan {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.users.len();
        if n == 0 {
            return Err(Error::Config(format!(
                "region {} has no users",
                self.region
            )));
        }
        if self.alpha.len() != n || self.eta.len() != n {
            return Err(Error::Config(format!(
                "region {}: {} users but {} power splits and {} SIC coefficients",
                self.region,
                n,
                self.alpha.len(),
                self.eta.len()
            )));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config(format!(
                "region {}: power splits must be nonnegative",
                self.region
            )));
        }
        let total: f64 = self.alpha.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "region {}: power splits sum to {total}, exceeding 1 (intra-region allocation must satisfy sum alpha <= 1)",
                self.region
            )));
        }
        if self.eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Config(format!(
                "region {}: SIC coefficients must lie in [0, 1]",
                self.region
            )));
        }
        Ok(())
    }

    /// `t1 = sum_{i<n} alpha_i + eta_n sum_{i>n} alpha_i`.
    pub fn intra_weight(&self, n: usize) -> f64 {
        let before: f64 = self.alpha[..n].iter().sum();
        let after: f64 = self.alpha[n + 1..].iter().sum();
        before + self.eta[n] * after
    }

    /// `t2 = sum_i alpha_i`, the load this region puts on other regions.
    pub fn load(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Rank-proportional split: the user at SIC position `n` (0 = strongest)
/// gets weight `n + 1`, normalized to sum to one.
pub fn rank_proportional_alpha(users: usize) -> Vec<f64> {
    let total = (users * (users + 1) / 2) as f64;
    (1..=users).map(|r| r as f64 / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub feeds: usize,
    pub regions: Vec<RegionPlan>,
    pub noise_power: f64,
    pub feed_caps: DVector<f64>,
}

impl Network {
    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::Config("network has no regions".into()));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::Config(format!(
                "noise power must be positive, got {}",
                self.noise_power
            )));
        }
        if self.feed_caps.len() != self.feeds || self.feed_caps.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config(
                "per-feed caps must be positive, one per feed".into(),
            ));
        }
        for r in &self.regions {
            r.validate()?;
            for u in &r.users {
                if u.channel.feeds() != self.feeds || u.phase.feeds() != self.feeds {
                    return Err(Error::Dimension(format!(
                        "region {} has a user with the wrong feed count",
                        r.region
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.regions.iter().map(RegionPlan::len).sum()
    }

    /// `(m, n)` for every user.
    pub fn user_indices(&self) -> Vec<(usize, usize)> {
        self.regions
            .iter()
            .enumerate()
            .flat_map(|(m, r)| (0..r.len()).map(move |n| (m, n)))
            .collect()
    }

    pub fn user(&self, m: usize, n: usize) -> &UserLink {
        &self.regions[m].users[n]
    }
}

/// Indices sorted by descending channel norm, ties by index.
pub fn sic_order(channels: &[ChannelVector]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..channels.len()).collect();
    idx.sort_by(|&a, &b| {
        channels[b]
            .norm()
            .total_cmp(&channels[a].norm())
            .then(a.cmp(&b))
    });
    idx
}

/// Weight of stream `(j, i)` in the interference seen by user `(m, n)`.
pub fn beta_coeff(j: usize, i: usize, m: usize, n: usize, eta: f64) -> f64 {
    if j == m && i == n {
        0.0
    } else if j == m && i > n {
        eta
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub algorithm: String,
    pub status: String,
    pub iterations: usize,
    pub max_rank_gap: f64,
    pub notes: Vec<String>,
}

impl DesignMeta {
    pub fn new(algorithm: &str) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            status: "ok".to_string(),
            iterations: 0,
            max_rank_gap: 0.0,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamDesign {
    pub beams: Vec<CVector>,
    pub lifted: Option<Vec<HermitianMatrix>>,
    pub noise_power: f64,
    pub meta: DesignMeta,
}

impl BeamDesign {
    pub fn total_power(&self) -> f64 {
        self.beams.iter().map(|w| w.norm_squared()).sum()
    }

    pub fn feeds(&self) -> usize {
        self.beams.first().map_or(0, |w| w.len())
    }

    /// Checks `W_m = w_m w_m^H` when both are stored.
    pub fn check_lifted(&self, tol: f64) -> Result<()> {
        if let Some(ws) = &self.lifted {
            for (m, (w, big)) in self.beams.iter().zip(ws).enumerate() {
                let diff = HermitianMatrix::outer(w).matrix() - big.matrix();
                let scale = big.matrix().norm().max(1e-300);
                if diff.norm() > tol * scale {
                    return Err(Error::Numerical(format!(
                        "beam {m} does not match its lifted matrix"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn per_feed_power(design: &BeamDesign) -> DVector<f64> {
    let mut p = DVector::zeros(design.feeds());
    for w in &design.beams {
        for (k, v) in w.iter().enumerate() {
            p[k] += v.norm_sqr();
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrEntry {
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub desired: f64,
    /// Stronger users of the own region.
    pub intra: f64,
    /// Weaker users of the own region after imperfect SIC.
    pub residual: f64,
    pub inter: f64,
    pub noise: f64,
}

/// SINR of user `(m, n)` for the channel `h`.
pub fn sinr(net: &Network, m: usize, n: usize, h: &CVector, beams: &[CVector]) -> SinrEntry {
    let gains: Vec<f64> = beams.iter().map(|w| h.dotc(w).norm_sqr()).collect();
    sinr_from_gains(net, m, n, &gains)
}

/// Same as [`sinr`] from precomputed `|h^H w_j|^2`.
pub fn sinr_from_gains(net: &Network, m: usize, n: usize, gains: &[f64]) -> SinrEntry {
    let plan = &net.regions[m];
    let g = gains[m];
    let desired = plan.alpha[n] * g;
    let intra = plan.alpha[..n].iter().sum::<f64>() * g;
    let residual = plan.eta[n] * plan.alpha[n + 1..].iter().sum::<f64>() * g;
    let inter: f64 = net
        .regions
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != m)
        .map(|(j, r)| r.load() * gains[j])
        .sum();
    let noise = net.noise_power;
    SinrEntry {
        m,
        n,
        gamma: desired / (intra + residual + inter + noise),
        desired,
        intra,
        residual,
        inter,
        noise,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SinrReport {
    pub entries: Vec<SinrEntry>,
}

impl SinrReport {
    /// SINR of every user at the estimated channels.
    pub fn nominal(net: &Network, design: &BeamDesign) -> Self {
        let entries = net
            .user_indices()
            .into_iter()
            .map(|(m, n)| sinr(net, m, n, &net.user(m, n).channel.estimated, &design.beams))
            .collect();
        Self { entries }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,n,gamma_linear,desired,intra,residual,inter,noise")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                e.m, e.n, e.gamma, e.desired, e.intra, e.residual, e.inter, e.noise
            )?;
        }
        Ok(())
    }
}
