//! Multi-beam LEO downlink channel: link budget, feed radiation pattern,
//! rain attenuation and the Gaussian phase-error model.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    bessel_j, psd_factor, psd_sqrt, sym_eigen, CMatrix, CVector, HermitianMatrix, C64,
};

pub const LIGHT_SPEED: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.38e-23;

/// Argument scale of the feed pattern: `u = 2.07123 sin(phi) / sin(phi_3dB)`.
pub const PATTERN_CONSTANT: f64 = 2.07123;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub light_speed: f64,
    pub carrier_frequency: f64,
    pub distance: f64,
    /// Receive antenna gain, linear.
    pub rx_gain: f64,
    pub boltzmann: f64,
    pub bandwidth: f64,
    pub noise_temperature: f64,
}

impl Default for LinkBudget {
    /// 20 GHz carrier, 1000 km, 25 MHz. The receiver figure of merit
    /// G/T = 34 dB/K is carried in `rx_gain` with a unit temperature.
    fn default() -> Self {
        Self {
            light_speed: LIGHT_SPEED,
            carrier_frequency: 20e9,
            distance: 1000e3,
            rx_gain: db_to_linear(34.0),
            boltzmann: BOLTZMANN,
            bandwidth: 25e6,
            noise_temperature: 1.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("light_speed", self.light_speed),
            ("carrier_frequency", self.carrier_frequency),
            ("distance", self.distance),
            ("rx_gain", self.rx_gain),
            ("boltzmann", self.boltzmann),
            ("bandwidth", self.bandwidth),
            ("noise_temperature", self.noise_temperature),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "link budget field {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `(c / (4 pi f d0))^2`.
    pub fn free_space_loss(&self) -> f64 {
        let x = self.light_speed
            / (4.0 * std::f64::consts::PI * self.carrier_frequency * self.distance);
        x * x
    }
}

/// Large-scale gain `(c / (4 pi f d0))^2 G / (k B T)`, normalized to the
/// receiver noise power.
pub fn large_scale_gain(budget: &LinkBudget) -> f64 {
    budget.free_space_loss() * budget.rx_gain
        / (budget.boltzmann * budget.bandwidth * budget.noise_temperature)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    /// Peak gain, linear.
    pub max_gain: f64,
    /// Half-power angle in radians.
    pub angle_3db: f64,
}

impl BeamPattern {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_gain > 0.0) {
            return Err(Error::Config(format!(
                "beam max gain must be positive, got {}",
                self.max_gain
            )));
        }
        if !(self.angle_3db > 0.0 && self.angle_3db < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!(
                "3 dB angle {} rad outside (0, pi/2)",
                self.angle_3db
            )));
        }
        Ok(())
    }

    pub fn argument(&self, angle: f64) -> f64 {
        PATTERN_CONSTANT * angle.sin() / self.angle_3db.sin()
    }
}

/// `J1(u)/(2u) + 36 J3(u)/u^3`, continuous at the origin where it equals 1.
pub(crate) fn pattern_amplitude(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        // Leading terms: 1/4 - u^2/32 and 3/4 - 3u^2/32.
        return 1.0 - u * u / 8.0;
    }
    bessel_j(1, u) / (2.0 * u) + 36.0 * bessel_j(3, u) / (u * u * u)
}

/// Gain from one feed towards a direction `angle` radians off its boresight.
pub fn beam_gain(pattern: &BeamPattern, angle: f64) -> f64 {
    let a = pattern_amplitude(pattern.argument(angle));
    pattern.max_gain * a * a
}

/// Rain fading with dB-domain moments. `mean_db` is the mean attenuation
/// expressed as a (non-positive) gain in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainModel {
    pub mean_db: f64,
    pub variance_db: f64,
}

impl Default for RainModel {
    fn default() -> Self {
        Self {
            mean_db: -2.6,
            variance_db: 1.63,
        }
    }
}

impl RainModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance_db >= 0.0) || !self.variance_db.is_finite() {
            return Err(Error::Config(format!(
                "rain variance must be >= 0, got {}",
                self.variance_db
            )));
        }
        if !(self.mean_db <= 0.0) {
            return Err(Error::Config(format!(
                "rain mean gain must be <= 0 dB, got {}",
                self.mean_db
            )));
        }
        if self.mean_db == 0.0 && self.variance_db > 0.0 {
            return Err(Error::Config(
                "rain variance requires a nonzero mean loss".into(),
            ));
        }
        Ok(())
    }

    /// Parameters `(mu, s)` of the lognormal loss `L_dB`, matched so that
    /// `E[L] = -mean_db` and `Var[L] = variance_db`.
    pub fn lognormal_params(&self) -> (f64, f64) {
        let m = -self.mean_db;
        let s2 = (1.0 + self.variance_db / (m * m)).ln();
        (m.ln() - 0.5 * s2, s2.sqrt())
    }
}

/// Per-feed rain gains in dB (all non-positive).
pub fn sample_rain_db<R: Rng + ?Sized>(
    model: &RainModel,
    feeds: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    model.validate()?;
    if model.mean_db == 0.0 {
        return Ok(DVector::zeros(feeds));
    }
    let (mu, s) = model.lognormal_params();
    if s == 0.0 {
        return Ok(DVector::from_element(feeds, model.mean_db));
    }
    let dist = LogNormal::new(mu, s).map_err(|e| Error::Config(format!("rain model: {e}")))?;
    Ok(DVector::from_fn(feeds, |_, _| -dist.sample(rng)))
}

/// Per-feed rain coefficients `r = 10^(gain_dB / 20)` in `(0, 1]`.
pub fn sample_rain<R: Rng + ?Sized>(
    model: &RainModel,
    feeds: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(sample_rain_db(model, feeds, rng)?.map(|g| 10f64.powf(g / 20.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseErrorModel {
    /// Standard deviation in radians.
    pub std_dev: f64,
    /// Normalized covariance with unit diagonal.
    pub covariance: DMatrix<f64>,
}

impl PhaseErrorModel {
    pub fn white(std_dev: f64, feeds: usize) -> Self {
        Self {
            std_dev,
            covariance: DMatrix::identity(feeds, feeds),
        }
    }

    pub fn feeds(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn is_white(&self) -> bool {
        self.covariance == DMatrix::identity(self.feeds(), self.feeds())
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.covariance;
        if !(self.std_dev >= 0.0 && self.std_dev.is_finite()) {
            return Err(Error::Config(format!(
                "phase std dev must be >= 0, got {}",
                self.std_dev
            )));
        }
        if !c.is_square() {
            return Err(Error::Config("phase covariance must be square".into()));
        }
        for i in 0..c.nrows() {
            if (c[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "phase covariance diagonal {i} is {}, expected 1",
                    c[(i, i)]
                )));
            }
            for j in 0..i {
                if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Config("phase covariance is not symmetric".into()));
                }
            }
        }
        let lmin = sym_eigen(c.clone())?.eigenvalues.min();
        if lmin < -1e-10 {
            return Err(Error::Config(format!(
                "phase covariance is not PSD (min eigenvalue {lmin:.3e})"
            )));
        }
        Ok(())
    }

    /// Symmetric square root `C^{1/2}`.
    pub fn covariance_sqrt(&self) -> Result<DMatrix<f64>> {
        if self.is_white() {
            return Ok(self.covariance.clone());
        }
        psd_sqrt(&self.covariance)
    }

    pub fn sampler(&self) -> Result<PhaseSampler> {
        self.validate()?;
        let factor = if self.is_white() {
            None
        } else {
            Some(psd_factor(&self.covariance)? * self.std_dev)
        };
        Ok(PhaseSampler {
            std_dev: self.std_dev,
            factor,
            feeds: self.feeds(),
        })
    }
}

/// Precomputed `sigma L` with `L L^T = C`.
#[derive(Debug, Clone)]
pub struct PhaseSampler {
    std_dev: f64,
    factor: Option<DMatrix<f64>>,
    feeds: usize,
}

impl PhaseSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.feeds, |_, _| rng.sample::<f64, _>(StandardNormal));
        if self.std_dev == 0.0 {
            return DVector::zeros(self.feeds);
        }
        match &self.factor {
            None => z * self.std_dev,
            Some(f) => f * z,
        }
    }
}

/// `e ~ N(0, sigma^2 C)`.
pub fn sample_phase_error<R: Rng + ?Sized>(
    model: &PhaseErrorModel,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(model.sampler()?.sample(rng))
}

/// Estimated channel of one user with its amplitude components.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub estimated: CVector,
    pub large_scale: f64,
    pub beam_gain: DVector<f64>,
    pub rain: DVector<f64>,
    pub phases: DVector<f64>,
}

impl ChannelVector {
    pub fn feeds(&self) -> usize {
        self.estimated.len()
    }

    /// `C b(k) r(k)`, the power gain at each feed.
    pub fn power_gains(&self) -> DVector<f64> {
        self.beam_gain.component_mul(&self.rain) * self.large_scale
    }

    pub fn norm(&self) -> f64 {
        self.estimated.norm()
    }
}

pub fn sample_estimated_phases<R: Rng + ?Sized>(feeds: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(feeds, |_, _| rng.random_range(0.0..std::f64::consts::TAU))
}

/// `h(k) = sqrt(C) b(k)^{1/2} r(k)^{1/2} exp(j theta(k))`.
pub fn assemble_channel(
    large_scale: f64,
    beam_gain: &DVector<f64>,
    rain: &DVector<f64>,
    phases: &DVector<f64>,
) -> Result<ChannelVector> {
    let k = beam_gain.len();
    if rain.len() != k || phases.len() != k {
        return Err(Error::Dimension(format!(
            "channel components have lengths {k}, {}, {}",
            rain.len(),
            phases.len()
        )));
    }
    let estimated = CVector::from_fn(k, |i, _| {
        C64::from_polar((large_scale * beam_gain[i] * rain[i]).sqrt(), phases[i])
    });
    Ok(ChannelVector {
        estimated,
        large_scale,
        beam_gain: beam_gain.clone(),
        rain: rain.clone(),
        phases: phases.clone(),
    })
}

/// `h = diag(h_est) exp(j e)`.
pub fn perturb_channel(ch: &ChannelVector, e: &DVector<f64>) -> Result<CVector> {
    if e.len() != ch.feeds() {
        return Err(Error::Dimension(format!(
            "phase error of length {} for {} feeds",
            e.len(),
            ch.feeds()
        )));
    }
    Ok(perturb(&ch.estimated, e))
}

pub(crate) fn perturb(h: &CVector, e: &DVector<f64>) -> CVector {
    CVector::from_fn(h.len(), |k, _| h[k] * C64::from_polar(1.0, e[k]))
}

/// `E[q q^H]` for `q = exp(j e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorStats {
    pub expected_matrix: HermitianMatrix,
}

/// Entry `(l, s)` is `exp(-sigma^2 (C_ll + C_ss - 2 C_ls) / 2)`.
pub fn expected_phase_matrix(model: &PhaseErrorModel) -> Result<PhasorStats> {
    model.validate()?;
    let c = &model.covariance;
    let s2 = model.std_dev * model.std_dev;
    let k = model.feeds();
    let m = CMatrix::from_fn(k, k, |l, s| {
        C64::new(
            (-0.5 * s2 * (c[(l, l)] + c[(s, s)] - 2.0 * c[(l, s)])).exp(),
            0.0,
        )
    });
    Ok(PhasorStats {
        expected_matrix: HermitianMatrix::symmetrize(m),
    })
}

/// Writes one row per (user, feed) with the estimated channel and its
/// amplitude components.
pub fn write_channel_table<W: Write>(
    channels: &[ChannelVector],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "user,feed,re,im,large_scale,beam_gain,rain")?;
    for (u, ch) in channels.iter().enumerate() {
        for k in 0..ch.feeds() {
            let h = ch.estimated[k];
            writeln!(
                out,
                "{u},{k},{:e},{:e},{:e},{:e},{:e}",
                h.re, h.im, ch.large_scale, ch.beam_gain[k], ch.rain[k]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn series_j(n: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..40 {
            term *= -(x * x / 4.0) / (k as f64 * (k + n) as f64);
            sum += term;
        }
        sum
    }

    fn oracle_gain(g: f64, phi: f64, phi3: f64) -> f64 {
        let u = 2.07123 * phi.sin() / phi3.sin();
        let a = series_j(1, u) / (2.0 * u) + 36.0 * series_j(3, u) / u.powi(3);
        g * a * a
    }

    fn table_pattern() -> BeamPattern {
        BeamPattern {
            max_gain: db_to_linear(17.0),
            angle_3db: 0.4f64.to_radians(),
        }
    }

    #[test]
    fn boresight_gain_is_peak() {
        let p = table_pattern();
        assert!((beam_gain(&p, 0.0) / p.max_gain - 1.0).abs() < 1e-12);
        let near = beam_gain(&p, 1e-6);
        assert!(((near - beam_gain(&p, 0.0)) / p.max_gain).abs() < 1e-6);
    }

    #[test]
    fn half_power_at_3db_angle() {
        let p = table_pattern();
        let ratio = beam_gain(&p, p.angle_3db) / p.max_gain;
        assert!((ratio - 0.5).abs() < 0.025, "ratio {ratio}");
        let want = oracle_gain(p.max_gain, p.angle_3db, p.angle_3db);
        assert!((beam_gain(&p, p.angle_3db) / want - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gain_matches_series_oracle() {
        let p = table_pattern();
        for deg in [0.05, 0.2, 0.35, 0.6, 1.1] {
            let phi = f64::to_radians(deg);
            let want = oracle_gain(p.max_gain, phi, p.angle_3db);
            assert!((beam_gain(&p, phi) / want - 1.0).abs() < 1e-9, "deg {deg}");
        }
    }

    #[test]
    fn large_scale_scaling_laws() {
        let b = LinkBudget::default();
        let base = large_scale_gain(&b);
        let far = large_scale_gain(&LinkBudget {
            distance: 2.0 * b.distance,
            ..b
        });
        let wide = large_scale_gain(&LinkBudget {
            bandwidth: 2.0 * b.bandwidth,
            ..b
        });
        assert!((base / far - 4.0).abs() < 1e-12);
        assert!((base / wide - 2.0).abs() < 1e-12);
        // (299792458 / (4 pi 2e10 1e6))^2 by hand
        let fsl = b.free_space_loss();
        assert!((fsl / 1.4229e-18 - 1.0).abs() < 1e-3, "{fsl:e}");
        assert!((linear_to_db(fsl) + 178.47).abs() < 0.05);
    }

    #[test]
    fn degenerate_rain_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = RainModel {
            mean_db: -2.6,
            variance_db: 0.0,
        };
        let r = sample_rain_db(&m, 5, &mut rng).unwrap();
        assert!(r.iter().all(|v| (*v + 2.6).abs() < 1e-12));
    }

    #[test]
    fn rain_moments_match_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = RainModel::default();
        let n = 1_000_000;
        let d = sample_rain_db(&m, n, &mut rng).unwrap();
        let mean = d.mean();
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean + 2.6).abs() < 0.05, "mean {mean}");
        assert!((var / 1.63 - 1.0).abs() < 0.02, "var {var}");
        let amp = sample_rain(&m, 10_000, &mut rng).unwrap();
        assert!(amp.iter().all(|a| *a > 0.0 && *a <= 1.0));
    }

    #[test]
    fn zero_phase_error_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = sample_phase_error(&PhaseErrorModel::white(0.0, 4), &mut rng).unwrap();
        assert_eq!(e, DVector::zeros(4));
    }

    #[test]
    fn phase_error_sample_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma = 5f64.to_radians();
        let n = 1_000_000;
        let white = PhaseErrorModel::white(sigma, 3).sampler().unwrap();
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            let e = white.sample(&mut rng);
            acc += &e * e.transpose();
        }
        acc /= n as f64;
        for i in 0..3 {
            assert!((acc[(i, i)] / (sigma * sigma) - 1.0).abs() < 0.01);
        }

        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.2, 0.6, 1.0, 0.4, 0.2, 0.4, 1.0]);
        let model = PhaseErrorModel {
            std_dev: sigma,
            covariance: c.clone(),
        };
        let s = model.sampler().unwrap();
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            let e = s.sample(&mut rng);
            acc += &e * e.transpose();
        }
        acc /= n as f64 * sigma * sigma;
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (acc[(i, j)] - c[(i, j)]).abs() < 0.01,
                    "({i},{j}) {}",
                    acc[(i, j)]
                );
            }
        }
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let m = PhaseErrorModel {
            std_dev: 0.1,
            covariance: c,
        };
        assert!(matches!(m.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn assemble_unit_components() {
        let ones = DVector::from_element(4, 1.0);
        let ch = assemble_channel(1.0, &ones, &ones, &DVector::zeros(4)).unwrap();
        assert!(ch
            .estimated
            .iter()
            .all(|h| (*h - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn assemble_matches_direct_formula() {
        let b = DVector::from_vec(vec![50.0, 20.0, 3.0, 0.5]);
        let r = DVector::from_vec(vec![0.7, 0.8, 0.9, 1.0]);
        let th = DVector::from_vec(vec![0.1, 2.0, 4.0, 6.0]);
        let c = 10.37;
        let ch = assemble_channel(c, &b, &r, &th).unwrap();
        for k in 0..4 {
            let amp = c.sqrt() * b[k].sqrt() * r[k].sqrt();
            let direct = C64::new(amp * th[k].cos(), amp * th[k].sin());
            assert!((ch.estimated[k] - direct).norm() < 1e-12);
            let p = ch.estimated[k].norm_sqr();
            assert!((p / ch.power_gains()[k] - 1.0).abs() < 1e-12);
        }
        let other = assemble_channel(c, &b, &r, &DVector::zeros(4)).unwrap();
        for k in 0..4 {
            assert!((other.estimated[k].norm() - ch.estimated[k].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbation_is_phase_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = DVector::from_vec(vec![4.0, 9.0, 1.0]);
        let ones = DVector::from_element(3, 1.0);
        let ch = assemble_channel(2.0, &b, &ones, &sample_estimated_phases(3, &mut rng)).unwrap();
        assert_eq!(
            perturb_channel(&ch, &DVector::zeros(3)).unwrap(),
            ch.estimated
        );
        let e = DVector::from_vec(vec![0.3, -1.2, 2.5]);
        let h = perturb_channel(&ch, &e).unwrap();
        for k in 0..3 {
            assert!((h[k].norm() - ch.estimated[k].norm()).abs() < 1e-12);
            let ratio = h[k] / ch.estimated[k];
            assert!((ratio - C64::from_polar(1.0, e[k])).norm() < 1e-12);
        }
        assert!(perturb_channel(&ch, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn expected_phase_matrix_closed_form() {
        let zero = expected_phase_matrix(&PhaseErrorModel::white(0.0, 3)).unwrap();
        assert!(zero
            .expected_matrix
            .matrix()
            .iter()
            .all(|v| (*v - C64::new(1.0, 0.0)).norm() < 1e-15));

        let sigma = 5f64.to_radians();
        let stats = expected_phase_matrix(&PhaseErrorModel::white(sigma, 4)).unwrap();
        let q = stats.expected_matrix.matrix();
        assert!((q[(0, 1)].re - 0.99241).abs() < 5e-6);
        assert_eq!(q[(0, 1)].im, 0.0);
        assert!(stats.expected_matrix.min_eigenvalue().unwrap() > 0.0);
    }

    #[test]
    fn expected_phase_matrix_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 1.0]);
        let model = PhaseErrorModel {
            std_dev: 0.4,
            covariance: c,
        };
        let stats = expected_phase_matrix(&model).unwrap();
        let s = model.sampler().unwrap();
        let n = 100_000;
        let mut sum = CMatrix::zeros(3, 3);
        let mut sumsq = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            let e = s.sample(&mut rng);
            let q = CVector::from_fn(3, |k, _| C64::from_polar(1.0, e[k]));
            let qq = &q * q.adjoint();
            sumsq += qq.map(|v| v.re * v.re);
            sum += qq;
        }
        let nf = n as f64;
        for i in 0..3 {
            for j in 0..3 {
                let mean = sum[(i, j)] / nf;
                let var = sumsq[(i, j)] / nf - mean.re * mean.re;
                let se = (var.max(0.0) / nf).sqrt();
                let want = stats.expected_matrix.matrix()[(i, j)];
                assert!((mean.re - want.re).abs() <= 3.0 * se + 1e-12, "({i},{j})");
                assert!(mean.im.abs() < 1e-2);
            }
        }
    }

    #[test]
    fn channel_table_has_one_row_per_feed() {
        let ones = DVector::from_element(2, 1.0);
        let ch = assemble_channel(1.0, &ones, &ones, &DVector::zeros(2)).unwrap();
        let mut buf = Vec::new();
        write_channel_table(&[ch.clone(), ch], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("user,feed,re,im"));
    }
}
