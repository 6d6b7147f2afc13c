//! Scenario geometry and network instance generation.
//!
//! Beam centres sit on a hexagonal lattice with spacing `2 d0 tan(phi_3dB)`
//! on a flat ground plane at distance `d0` below the satellite. Each beam
//! owns a share of the feeds; a single feed points at the beam centre and
//! several feeds point at a small ring around it. Users are uniform over
//! the footprint disc of radius `d0 tan(phi_3dB)`.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    assemble_channel, beam_gain, db_to_linear, large_scale_gain, sample_estimated_phases,
    sample_rain, BeamPattern, LinkBudget, PhaseErrorModel, RainModel,
};
use crate::error::{Error, Result};
use crate::network::{rank_proportional_alpha, sic_order, Network, RegionPlan, UserLink};

/// Stream domains keep geometry, channel and evaluation draws disjoint.
pub const STREAM_GEOMETRY: u64 = 0;
pub const STREAM_CHANNEL: u64 = 1;
pub const STREAM_EVAL: u64 = 2;

/// Generator for substream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 40) | index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "values")]
pub enum AlphaPolicy {
    /// Weight proportional to SIC rank, weakest user largest.
    RankProportional,
    /// Explicit split in SIC order, strongest user first.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub feeds: usize,
    pub beams: usize,
    pub users_per_beam: usize,
    pub link: LinkBudget,
    pub max_gain_dbi: f64,
    pub angle_3db_deg: f64,
    pub rain: RainModel,
    pub phase_std_deg: f64,
    /// Row-major normalized covariance; identity when absent.
    pub phase_covariance: Option<Vec<Vec<f64>>>,
    pub eta: f64,
    pub alpha: AlphaPolicy,
    pub noise_power: f64,
    pub feed_cap_w: f64,
    /// Radius of the feed pointing ring as a fraction of the footprint radius.
    pub feed_ring: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            feeds: 12,
            beams: 3,
            users_per_beam: 2,
            link: LinkBudget::default(),
            max_gain_dbi: 17.0,
            angle_3db_deg: 0.4,
            rain: RainModel::default(),
            phase_std_deg: 5.0,
            phase_covariance: None,
            eta: 0.05,
            alpha: AlphaPolicy::Explicit(vec![0.25, 0.75]),
            noise_power: 1.0,
            feed_cap_w: 1.0,
            feed_ring: 0.3,
            seed: 2024,
        }
    }
}

impl ScenarioConfig {
    /// Full-size layout: 60 feeds, 10 beams, 3 users per beam.
    pub fn full_scale() -> Self {
        Self {
            feeds: 60,
            beams: 10,
            users_per_beam: 3,
            alpha: AlphaPolicy::RankProportional,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Config(s));
        if self.beams == 0 || self.users_per_beam == 0 {
            return bad("beams and users_per_beam must be positive".into());
        }
        if self.feeds < self.beams {
            return bad(format!(
                "need at least one feed per beam ({} feeds, {} beams)",
                self.feeds, self.beams
            ));
        }
        self.link.validate()?;
        self.rain.validate()?;
        self.pattern().validate()?;
        if !(self.phase_std_deg >= 0.0) {
            return bad(format!(
                "phase_std_deg must be >= 0, got {}",
                self.phase_std_deg
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if !(self.noise_power > 0.0) || !(self.feed_cap_w > 0.0) {
            return bad("noise_power and feed_cap_w must be positive".into());
        }
        if !(0.0..1.0).contains(&self.feed_ring) {
            return bad(format!(
                "feed_ring must lie in [0, 1), got {}",
                self.feed_ring
            ));
        }
        if let AlphaPolicy::Explicit(a) = &self.alpha {
            if a.len() != self.users_per_beam {
                return bad(format!(
                    "alpha has {} entries for {} users per beam",
                    a.len(),
                    self.users_per_beam
                ));
            }
            if a.iter().any(|v| !(*v > 0.0)) {
                return bad("alpha entries must be positive".into());
            }
            let total: f64 = a.iter().sum();
            if total > 1.0 + 1e-12 {
                return bad(format!(
                    "alpha sums to {total}: the intra-region power split must satisfy sum alpha <= 1"
                ));
            }
        }
        self.phase_model()?.validate()
    }

    pub fn pattern(&self) -> BeamPattern {
        BeamPattern {
            max_gain: db_to_linear(self.max_gain_dbi),
            angle_3db: self.angle_3db_deg.to_radians(),
        }
    }

    pub fn phase_model(&self) -> Result<PhaseErrorModel> {
        let sigma = self.phase_std_deg.to_radians();
        match &self.phase_covariance {
            None => Ok(PhaseErrorModel::white(sigma, self.feeds)),
            Some(rows) => {
                if rows.len() != self.feeds || rows.iter().any(|r| r.len() != self.feeds) {
                    return Err(Error::Config(format!(
                        "phase_covariance must be {0}x{0}",
                        self.feeds
                    )));
                }
                let c = DMatrix::from_fn(self.feeds, self.feeds, |i, j| rows[i][j]);
                Ok(PhaseErrorModel {
                    std_dev: sigma,
                    covariance: c,
                })
            }
        }
    }

    pub fn alpha(&self) -> Vec<f64> {
        match &self.alpha {
            AlphaPolicy::RankProportional => rank_proportional_alpha(self.users_per_beam),
            AlphaPolicy::Explicit(a) => a.clone(),
        }
    }
}

/// Ground positions in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub altitude: f64,
    pub footprint_radius: f64,
    pub beam_centres: Vec<[f64; 2]>,
    /// Ground aim point of each feed.
    pub feed_aims: Vec<[f64; 2]>,
    pub feed_beam: Vec<usize>,
    /// Users per beam, before SIC ordering.
    pub users: Vec<Vec<[f64; 2]>>,
}

/// First `count` points of a hexagonal lattice, nearest the origin first.
pub fn hex_centres(count: usize, spacing: f64) -> Vec<[f64; 2]> {
    let mut rings = 0i64;
    while 3 * rings * (rings + 1) + 1 < count as i64 {
        rings += 1;
    }
    let mut pts = Vec::new();
    for i in -rings..=rings {
        for j in -rings..=rings {
            let k = -i - j;
            if k.abs() > rings {
                continue;
            }
            let x = spacing * (i as f64 + 0.5 * j as f64);
            let y = spacing * (3f64.sqrt() / 2.0 * j as f64);
            pts.push([x, y]);
        }
    }
    let key = |p: &[f64; 2]| {
        let r = (p[0].hypot(p[1]) / spacing * 1e6).round() as i64;
        let mut a = p[1].atan2(p[0]);
        if a < -1e-9 {
            a += std::f64::consts::TAU;
        }
        (r, (a * 1e6).round() as i64)
    };
    pts.sort_by_key(key);
    pts.truncate(count);
    pts
}

/// Angle at the satellite between the directions to ground points `a`, `b`.
pub fn off_axis_angle(altitude: f64, a: [f64; 2], b: [f64; 2]) -> f64 {
    let va = Vector3::new(a[0], a[1], -altitude);
    let vb = Vector3::new(b[0], b[1], -altitude);
    va.cross(&vb).norm().atan2(va.dot(&vb))
}

pub fn generate_geometry(cfg: &ScenarioConfig) -> Geometry {
    let altitude = cfg.link.distance;
    let radius = altitude * cfg.angle_3db_deg.to_radians().tan();
    let centres = hex_centres(cfg.beams, 2.0 * radius);
    let mut feed_aims = Vec::with_capacity(cfg.feeds);
    let mut feed_beam = Vec::with_capacity(cfg.feeds);
    for m in 0..cfg.beams {
        let count = (m..cfg.feeds).step_by(cfg.beams).count();
        for i in 0..count {
            let c = centres[m];
            let aim = if count == 1 {
                c
            } else {
                let a = std::f64::consts::TAU * i as f64 / count as f64;
                let rho = cfg.feed_ring * radius;
                [c[0] + rho * a.cos(), c[1] + rho * a.sin()]
            };
            feed_aims.push(aim);
            feed_beam.push(m);
        }
    }
    let mut rng = substream(cfg.seed, STREAM_GEOMETRY, 0);
    let users = centres
        .iter()
        .map(|c| {
            (0..cfg.users_per_beam)
                .map(|_| {
                    let r = radius * rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    [c[0] + r * a.cos(), c[1] + r * a.sin()]
                })
                .collect()
        })
        .collect();
    Geometry {
        altitude,
        footprint_radius: radius,
        beam_centres: centres,
        feed_aims,
        feed_beam,
        users,
    }
}

/// Builds the SIC-ordered network of estimated channels.
pub fn build_network(cfg: &ScenarioConfig) -> Result<Network> {
    cfg.validate()?;
    let geo = generate_geometry(cfg);
    let pattern = cfg.pattern();
    let c = large_scale_gain(&cfg.link);
    let phase = cfg.phase_model()?;
    let alpha = cfg.alpha();
    let mut regions = Vec::with_capacity(cfg.beams);
    let mut uid = 0u64;
    for (m, users) in geo.users.iter().enumerate() {
        let mut links = Vec::with_capacity(users.len());
        for pos in users {
            let mut rng = substream(cfg.seed, STREAM_CHANNEL, uid);
            uid += 1;
            let gains = DVector::from_iterator(
                cfg.feeds,
                geo.feed_aims
                    .iter()
                    .map(|aim| beam_gain(&pattern, off_axis_angle(geo.altitude, *aim, *pos))),
            );
            let rain = sample_rain(&cfg.rain, cfg.feeds, &mut rng)?;
            let phases = sample_estimated_phases(cfg.feeds, &mut rng);
            links.push(UserLink {
                channel: assemble_channel(c, &gains, &rain, &phases)?,
                phase: phase.clone(),
            });
        }
        let chans: Vec<_> = links.iter().map(|l| l.channel.clone()).collect();
        let order = sic_order(&chans);
        let users = order.into_iter().map(|i| links[i].clone()).collect();
        regions.push(RegionPlan {
            region: m,
            users,
            alpha: alpha.clone(),
            eta: vec![cfg.eta; cfg.users_per_beam],
        });
    }
    let net = Network {
        feeds: cfg.feeds,
        regions,
        noise_power: cfg.noise_power,
        feed_caps: DVector::from_element(cfg.feeds, cfg.feed_cap_w),
    };
    net.validate()?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_centres_are_lattice_neighbours() {
        let pts = hex_centres(7, 2.0);
        assert_eq!(pts[0], [0.0, 0.0]);
        for p in &pts[1..] {
            assert!((p[0].hypot(p[1]) - 2.0).abs() < 1e-12);
        }
        let three = hex_centres(3, 1.0);
        let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        assert!((d(three[1], three[2]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_axis_angle_matches_trigonometry() {
        let h = 1000e3;
        let r = h * 0.4f64.to_radians().tan();
        let a = off_axis_angle(h, [0.0, 0.0], [r, 0.0]);
        assert!((a - 0.4f64.to_radians()).abs() < 1e-12);
        assert_eq!(off_axis_angle(h, [5.0, 3.0], [5.0, 3.0]), 0.0);
    }

    #[test]
    fn feeds_split_evenly() {
        let cfg = ScenarioConfig::default();
        let g = generate_geometry(&cfg);
        assert_eq!(g.feed_aims.len(), 12);
        for m in 0..3 {
            assert_eq!(g.feed_beam.iter().filter(|b| **b == m).count(), 4);
        }
        for (m, users) in g.users.iter().enumerate() {
            for u in users {
                let c = g.beam_centres[m];
                assert!((u[0] - c[0]).hypot(u[1] - c[1]) <= g.footprint_radius);
            }
        }
    }

    #[test]
    fn network_is_reproducible_and_sic_ordered() {
        let cfg = ScenarioConfig::default();
        let a = build_network(&cfg).unwrap();
        let b = build_network(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a.regions {
            for n in 1..r.len() {
                assert!(r.users[n - 1].channel.norm() >= r.users[n].channel.norm());
            }
        }
        let other = build_network(&ScenarioConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_oversubscribed_alpha() {
        let cfg = ScenarioConfig {
            alpha: AlphaPolicy::Explicit(vec![0.5, 0.6]),
            ..Default::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("sum alpha <= 1"), "{msg}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ScenarioConfig {
            alpha: AlphaPolicy::Explicit(vec![0.25, 0.75]),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ScenarioConfig = serde_json::from_str(r#"{"feeds": 6}"#).unwrap();
        assert_eq!(partial.feeds, 6);
        assert_eq!(partial.beams, 3);
    }
}
