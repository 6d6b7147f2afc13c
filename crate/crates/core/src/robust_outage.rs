//! Outage-probability constrained power minimization.
//!
//! With `q = exp(j theta)` and `theta = sigma C^{1/2} nu`, the true SINR
//! constraint of user `(m, n)` reads `q^H Z q >= sigma0^2`. A second-order
//! expansion in `theta` turns it into a Gaussian quadratic form
//! `nu^T Q nu + 2 r^T nu + s >= 0`, whose failure probability is bounded
//! analytically. Requiring the bound to stay below `p` gives one linear row
//! and two second-order cones per user.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::channel::ChannelVector;
use crate::cone::{AffineForm, ComplexPsdVar, ProblemBuilder, SolverOptions};
use crate::error::{Error, Result};
use crate::network::{BeamDesign, Network};
use crate::numerics::{CMatrix, HermitianMatrix, C64};
use crate::robust_avg::{run_penalty_loop, ConstraintFamily, PenaltyConfig, PenaltyOutcome};

/// Phase deviation beyond which the second-order expansion is unreliable.
pub const MAX_EXPANSION_STD_DEV: f64 = 15.0 * std::f64::consts::PI / 180.0;

/// `diag(h)^H M diag(h)`.
fn conjugate_by_channel(h: &nalgebra::DVector<C64>, m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(h.len(), h.len(), |i, j| h[i].conj() * m[(i, j)] * h[j])
}

/// Entry `i` of the diagonal becomes `A_ii - sum_n A_in`; off-diagonals are kept.
pub fn f1_map(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for i in 0..a.nrows() {
        out[(i, i)] -= a.row(i).sum();
    }
    out
}

/// `2 sum_n B_in`.
pub fn f2_map(b: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(b.nrows(), |i, _| 2.0 * b.row(i).sum())
}

/// Second-order expansion of `q^H Z q` around `theta = 0`.
pub fn taylor_quadratic(z: &HermitianMatrix, theta: &DVector<f64>) -> f64 {
    let a = z.real_part();
    let b = z.imag_part();
    let constant: f64 = z.matrix().iter().map(|v| v.re).sum();
    constant + theta.dot(&(f1_map(&a) * theta)) + theta.dot(&f2_map(&b))
}

/// `q^H Z q` with `q = exp(j theta)`.
pub fn exact_quadratic(z: &HermitianMatrix, theta: &DVector<f64>) -> f64 {
    let q = nalgebra::DVector::from_fn(theta.len(), |i, _| C64::from_polar(1.0, theta[i]));
    z.quad_form(&q)
}

/// `sqrt(ln(1/p))`.
pub fn outage_exponent(p: f64) -> f64 {
    (1.0 / p).ln().sqrt()
}

/// Root of `(1 - 1/(2 mu^2)) mu = sqrt(ln(1/p))` above `1/sqrt(2)`.
pub fn mu_from_outage(p: f64) -> f64 {
    let g = outage_exponent(p);
    (g + (g * g + 2.0).sqrt()) / 2.0
}

/// Tail bound on `Pr{nu^T Q nu + 2 r^T nu + s <= 0}` at `tau = tr(Q) + s`
/// and `T = mu |Q|_F + |r| / sqrt(2)`.
pub fn lemma2_bound(tau: f64, t: f64, mu: f64) -> f64 {
    if tau <= 0.0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let lm = (1.0 - 1.0 / (2.0 * mu * mu)) * mu;
    if tau <= 2.0 * lm * t {
        (-(tau * tau) / (4.0 * t * t)).exp()
    } else {
        (-tau * lm / t + lm * lm).exp().min(1.0)
    }
}

/// Numeric quadratic-form data of one user at fixed beams.
#[derive(Debug, Clone)]
pub struct OutageBundle {
    pub z: HermitianMatrix,
    pub q: DMatrix<f64>,
    pub r: DVector<f64>,
    pub s: f64,
    pub mu: f64,
}

impl OutageBundle {
    pub fn tau(&self) -> f64 {
        self.q.trace() + self.s
    }

    pub fn spread(&self) -> f64 {
        self.mu * self.q.norm() + self.r.norm() / std::f64::consts::SQRT_2
    }

    pub fn bound(&self) -> f64 {
        lemma2_bound(self.tau(), self.spread(), self.mu)
    }
}

/// Linear images of one Hermitian basis element.
#[derive(Debug, Clone)]
struct ParamImage {
    q_packed: Vec<f64>,
    r: DVector<f64>,
    s: f64,
    trace_q: f64,
}

#[derive(Debug, Clone)]
pub struct OutageSpec {
    pub network: Network,
    pub gamma: Vec<Vec<f64>>,
    pub outage: Vec<Vec<f64>>,
    sqrt_cov: Vec<Vec<DMatrix<f64>>>,
    images: Vec<Vec<Vec<ParamImage>>>,
}

fn packed_sym(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            out.push(if i == j {
                m[(i, j)]
            } else {
                s2 * 0.5 * (m[(i, j)] + m[(j, i)])
            });
        }
    }
    out
}

impl OutageSpec {
    pub fn new(network: Network, gamma: Vec<Vec<f64>>, outage: Vec<Vec<f64>>) -> Result<Self> {
        network.validate()?;
        let shape_ok = |v: &Vec<Vec<f64>>| {
            v.len() == network.regions.len()
                && v.iter()
                    .zip(&network.regions)
                    .all(|(g, r)| g.len() == r.len())
        };
        if !shape_ok(&gamma) || !shape_ok(&outage) {
            return Err(Error::Config(
                "SINR and outage targets must match the region/user layout".into(),
            ));
        }
        if gamma.iter().flatten().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::Config("SINR targets must be positive".into()));
        }
        if let Some(p) = outage.iter().flatten().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Config(format!(
                "outage probability must lie in (0, 1), got {p}"
            )));
        }
        let k = network.feeds;
        let basis: Vec<HermitianMatrix> = {
            let var = ComplexPsdVar { dim: k, offset: 0 };
            (0..var.num_params()).map(|p| var.basis(p)).collect()
        };
        let mut sqrt_cov = Vec::new();
        let mut images = Vec::new();
        for r in &network.regions {
            let mut sq_row = Vec::new();
            let mut im_row = Vec::new();
            for u in &r.users {
                u.phase.validate()?;
                if u.phase.std_dev > MAX_EXPANSION_STD_DEV {
                    warn!(
                        "phase std dev {:.1} deg exceeds the {:.0} deg expansion range",
                        u.phase.std_dev.to_degrees(),
                        MAX_EXPANSION_STD_DEV.to_degrees()
                    );
                }
                let s = u.phase.covariance_sqrt()?;
                let imgs = basis
                    .iter()
                    .map(|e| {
                        let z = conjugate_by_channel(&u.channel.estimated, e.matrix());
                        let (q, rv, sv) = quadratic_parts(&z, &s, u.phase.std_dev);
                        ParamImage {
                            q_packed: packed_sym(&q),
                            trace_q: q.trace(),
                            r: rv,
                            s: sv,
                        }
                    })
                    .collect();
                sq_row.push(s);
                im_row.push(imgs);
            }
            sqrt_cov.push(sq_row);
            images.push(im_row);
        }
        Ok(Self {
            network,
            gamma,
            outage,
            sqrt_cov,
            images,
        })
    }

    pub fn uniform(network: Network, gamma: f64, p: f64) -> Result<Self> {
        let g = network
            .regions
            .iter()
            .map(|r| vec![gamma; r.len()])
            .collect();
        let o = network.regions.iter().map(|r| vec![p; r.len()]).collect();
        Self::new(network, g, o)
    }

    /// Weight of `W_j` in `Z_{m,n}`.
    pub fn z_coefficients(&self, m: usize, n: usize) -> Vec<f64> {
        let plan = &self.network.regions[m];
        (0..self.network.regions.len())
            .map(|j| {
                if j == m {
                    plan.alpha[n] / self.gamma[m][n] - plan.intra_weight(n)
                } else {
                    -self.network.regions[j].load()
                }
            })
            .collect()
    }

    fn channel(&self, m: usize, n: usize) -> &ChannelVector {
        &self.network.user(m, n).channel
    }
}

/// `Q = sigma^2 S f1(A) S`, `r = sigma S f2(B) / 2` and `s = sum Z` (without noise).
fn quadratic_parts(z: &CMatrix, s: &DMatrix<f64>, sigma: f64) -> (DMatrix<f64>, DVector<f64>, f64) {
    let a = z.map(|v| v.re);
    let b = z.map(|v| v.im);
    let q = s * f1_map(&a) * s * (sigma * sigma);
    let r = s * f2_map(&b) * (0.5 * sigma);
    let total = z.iter().map(|v| v.re).sum();
    (q, r, total)
}

/// `Z_{m,n} = diag(h)^H ((alpha/gamma - t1) W_m - sum_{j != m} t2_j W_j) diag(h)`.
pub fn build_z(spec: &OutageSpec, m: usize, n: usize, ws: &[HermitianMatrix]) -> HermitianMatrix {
    let k = spec.network.feeds;
    let mut mix = CMatrix::zeros(k, k);
    for (c, w) in spec.z_coefficients(m, n).iter().zip(ws) {
        mix += w.matrix() * C64::new(*c, 0.0);
    }
    HermitianMatrix::symmetrize(conjugate_by_channel(&spec.channel(m, n).estimated, &mix))
}

pub fn outage_bundle(
    spec: &OutageSpec,
    m: usize,
    n: usize,
    ws: &[HermitianMatrix],
) -> OutageBundle {
    let z = build_z(spec, m, n, ws);
    let sigma = spec.network.user(m, n).phase.std_dev;
    let (q, r, total) = quadratic_parts(z.matrix(), &spec.sqrt_cov[m][n], sigma);
    OutageBundle {
        z,
        q,
        r,
        s: total - spec.network.noise_power,
        mu: mu_from_outage(spec.outage[m][n]),
    }
}

/// Cone rows of one user in terms of the beam variables and the slacks `x`, `y`.
#[derive(Debug, Clone)]
pub struct OutageRows {
    /// `tr(Q) + s - 2 g (x + y) >= 0`.
    pub margin: AffineForm,
    /// `(x, r / sqrt(2))`.
    pub linear_cone: Vec<AffineForm>,
    /// `(y, mu svec(Q))`.
    pub quadratic_cone: Vec<AffineForm>,
}

pub fn soc_rows(
    spec: &OutageSpec,
    m: usize,
    n: usize,
    w: &[ComplexPsdVar],
    x: usize,
    y: usize,
) -> OutageRows {
    let k = spec.network.feeds;
    let p = spec.outage[m][n];
    let g = outage_exponent(p);
    let mu = mu_from_outage(p);
    let imgs = &spec.images[m][n];
    let coefs = spec.z_coefficients(m, n);
    let mut margin = AffineForm::constant(-spec.network.noise_power);
    let mut r_rows = vec![AffineForm::new(); k];
    let mut q_rows = vec![AffineForm::new(); k * (k + 1) / 2];
    let inv_s2 = std::f64::consts::FRAC_1_SQRT_2;
    for (var, c) in w.iter().zip(&coefs) {
        if *c == 0.0 {
            continue;
        }
        for (local, img) in imgs.iter().enumerate() {
            let idx = var.offset + local;
            let t = c * (img.trace_q + img.s);
            if t != 0.0 {
                margin = margin.term(idx, t);
            }
            for (row, v) in r_rows.iter_mut().zip(img.r.iter()) {
                if *v != 0.0 {
                    row.terms.push((idx, c * v * inv_s2));
                }
            }
            for (row, v) in q_rows.iter_mut().zip(&img.q_packed) {
                if *v != 0.0 {
                    row.terms.push((idx, c * v * mu));
                }
            }
        }
    }
    margin = margin.term(x, -2.0 * g).term(y, -2.0 * g);
    let mut linear_cone = vec![AffineForm::var(x)];
    linear_cone.extend(r_rows.into_iter().map(AffineForm::compact));
    let mut quadratic_cone = vec![AffineForm::var(y)];
    quadratic_cone.extend(q_rows.into_iter().map(AffineForm::compact));
    OutageRows {
        margin: margin.compact(),
        linear_cone,
        quadratic_cone,
    }
}

impl ConstraintFamily for OutageSpec {
    fn name(&self) -> &'static str {
        "outage"
    }

    fn network(&self) -> &Network {
        &self.network
    }

    fn add_constraints(&self, b: &mut ProblemBuilder, w: &[ComplexPsdVar]) {
        for (m, n) in self.network.user_indices() {
            let x = b.add_var();
            let y = b.add_var();
            let rows = soc_rows(self, m, n, w, x, y);
            b.nonneg_labeled(rows.margin, self.name());
            b.soc_labeled(rows.linear_cone, self.name());
            b.soc_labeled(rows.quadratic_cone, self.name());
        }
    }
}

pub fn design_critical_traced(
    spec: &OutageSpec,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<PenaltyOutcome> {
    let mut out = run_penalty_loop(spec, cfg, opts, "outage")?;
    out.design
        .meta
        .notes
        .push("phase covariance root: symmetric".into());
    Ok(out)
}

pub fn design_critical(spec: &OutageSpec, cfg: &PenaltyConfig) -> Result<BeamDesign> {
    Ok(design_critical_traced(spec, cfg, &SolverOptions::default())?.design)
}
