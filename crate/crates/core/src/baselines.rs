//! Comparison schemes: a non-robust design, zero-forcing beams and TDMA.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channel::PhaseErrorModel;
use crate::error::{Error, Result};
use crate::network::{per_feed_power, BeamDesign, DesignMeta, Network};
use crate::numerics::{CMatrix, CVector, C64};
use crate::robust_avg::{design_noncritical, AvgDesignSpec, PenaltyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Nonrobust,
    Zfbf,
    Tdma,
}

/// Copy of `network` that believes the estimated channels are exact.
pub fn perfect_csi(network: &Network) -> Network {
    let mut net = network.clone();
    for r in &mut net.regions {
        for u in &mut r.users {
            u.phase = PhaseErrorModel {
                std_dev: 0.0,
                covariance: u.phase.covariance.clone(),
            };
        }
    }
    net
}

/// Average-SINR design computed as if the phase error were zero.
pub fn design_nonrobust(spec: &AvgDesignSpec, cfg: &PenaltyConfig) -> Result<BeamDesign> {
    let nominal = AvgDesignSpec::new(perfect_csi(&spec.network), spec.gamma.clone())?;
    let mut d = design_noncritical(&nominal, cfg)?;
    d.meta.algorithm = "nonrobust".into();
    Ok(d)
}

/// Unit-norm columns of `H (H^H H)^{-1}` for the strongest user of each region.
pub fn zf_directions(network: &Network) -> Result<Vec<CVector>> {
    let m = network.regions.len();
    let k = network.feeds;
    if m > k {
        return Err(Error::Dimension(format!(
            "zero forcing needs beams <= feeds, got {m} > {k}"
        )));
    }
    let h = CMatrix::from_fn(k, m, |i, j| network.user(j, 0).channel.estimated[i]);
    let gram = h.adjoint() * &h;
    let scale = gram.diagonal().iter().map(|v| v.re).fold(0.0, f64::max);
    let ev = crate::numerics::HermitianMatrix::symmetrize(gram.clone()).eigenvalues()?;
    let lmin = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > 1e-12 * scale) {
        return Err(Error::Numerical(
            "representative channels are linearly dependent".into(),
        ));
    }
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical("representative Gram matrix is singular".into()))?;
    let u = h * inv;
    Ok((0..m).map(|j| u.column(j).normalize()).collect())
}

/// Zero-forcing beams, each scaled to the least power meeting the
/// average-SINR targets of its own region with inter-region leakage taken
/// as nulled. Per-feed caps are checked afterwards.
pub fn design_zfbf(spec: &AvgDesignSpec) -> Result<BeamDesign> {
    let net = &spec.network;
    let dirs = zf_directions(net)?;
    let mut powers = vec![0.0; dirs.len()];
    for (m, n) in net.user_indices() {
        let plan = &net.regions[m];
        let gamma = spec.gamma[m][n];
        let useful = (plan.alpha[n] - gamma * plan.intra_weight(n))
            * spec.expected_matrix(m, n).quad_form(&dirs[m]);
        if !(useful > 0.0) {
            return Err(Error::Infeasible {
                family: "average-SINR".into(),
            });
        }
        powers[m] = f64::max(powers[m], gamma * net.noise_power / useful);
    }
    let beams: Vec<CVector> = dirs
        .iter()
        .zip(&powers)
        .map(|(u, p)| u * C64::new(p.sqrt(), 0.0))
        .collect();
    let mut meta = DesignMeta::new("zfbf");
    meta.notes
        .push("reconstruction: zero forcing on the strongest user per region".into());
    let design = BeamDesign {
        beams,
        lifted: None,
        noise_power: net.noise_power,
        meta,
    };
    let feed = per_feed_power(&design);
    if let Some(k) = (0..net.feeds).find(|&k| feed[k] > net.feed_caps[k] * (1.0 + 1e-6)) {
        return Err(Error::Infeasible {
            family: format!("per-feed power (feed {k})"),
        });
    }
    Ok(design)
}

/// Slot SINR that matches the rate of `gamma` over `users` equal slots.
pub fn tdma_slot_target(gamma: f64, users: usize) -> f64 {
    (1.0 + gamma).powi(users as i32) - 1.0
}

/// Per-user slot powers of matched-filter TDMA.
pub fn tdma_slot_powers(spec: &AvgDesignSpec) -> DVector<f64> {
    let net = &spec.network;
    let total = net.num_users();
    let idx = net.user_indices();
    DVector::from_iterator(
        idx.len(),
        idx.iter().map(|&(m, n)| {
            let h = &net.user(m, n).channel.estimated;
            let u = h.normalize();
            let gain = spec.expected_matrix(m, n).quad_form(&u);
            tdma_slot_target(spec.gamma[m][n], total) * net.noise_power / gain
        }),
    )
}

/// Time-averaged total transmit power of TDMA.
pub fn tdma_power(spec: &AvgDesignSpec) -> f64 {
    let p = tdma_slot_powers(spec);
    p.sum() / p.len() as f64
}
