//! Per-cone vector kernels: svec packing, Jordan products, Nesterov-Todd
//! scalings and step-to-boundary computations.
//!
//! PSD blocks are packed column-major over the lower triangle with the
//! off-diagonal entries scaled by sqrt(2), so the Euclidean inner product
//! of two packed vectors equals the trace inner product of the matrices.

use nalgebra::{DMatrix, DVector};

use super::ConeBlock;
use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(n));
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            let x = v[k] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Identity element `e` of a cone block.
pub fn identity_into(block: ConeBlock, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    match block {
        ConeBlock::NonNeg(_) => out.iter_mut().for_each(|x| *x = 1.0),
        ConeBlock::Soc(_) => out[0] = 1.0,
        ConeBlock::Psd(n) => {
            let mut k = 0;
            for j in 0..n {
                out[k] = 1.0;
                k += n - j;
            }
        }
    }
}

/// Largest `t` such that `u - t e` lies in the cone, i.e. the minimum
/// "eigenvalue" of `u` in the Jordan-algebra sense.
pub fn min_eig(block: ConeBlock, u: &[f64]) -> Result<f64> {
    Ok(match block {
        ConeBlock::NonNeg(_) => u.iter().copied().fold(f64::INFINITY, f64::min),
        ConeBlock::Soc(_) => u[0] - norm(&u[1..]),
        ConeBlock::Psd(n) => {
            let m = smat(u, n);
            let eig = crate::numerics::sym_eigen(m)?;
            eig.eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        }
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jordan product `u o v`.
pub fn jordan_prod(block: ConeBlock, u: &[f64], v: &[f64], out: &mut [f64]) {
    match block {
        ConeBlock::NonNeg(_) => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        ConeBlock::Soc(_) => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
        ConeBlock::Psd(n) => {
            let a = smat(u, n);
            let b = smat(v, n);
            let p = &a * &b;
            let sym = (&p + p.transpose()) * 0.5;
            out.copy_from_slice(&svec(&sym));
        }
    }
}

/// Scaled point of the NT scaling. For PSD blocks it is diagonal and only
/// the eigenvalues are stored.
#[derive(Debug, Clone)]
pub enum Lambda {
    NonNeg(Vec<f64>),
    Soc(Vec<f64>),
    Psd(Vec<f64>),
}

impl Lambda {
    pub fn write_packed(&self, out: &mut [f64]) {
        match self {
            Lambda::NonNeg(l) | Lambda::Soc(l) => out.copy_from_slice(l),
            Lambda::Psd(l) => {
                out.iter_mut().for_each(|x| *x = 0.0);
                let n = l.len();
                let mut k = 0;
                for j in 0..n {
                    out[k] = l[j];
                    k += n - j;
                }
            }
        }
    }

    /// `lambda o u`.
    pub fn prod(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Lambda::NonNeg(l) => {
                for i in 0..l.len() {
                    out[i] = l[i] * u[i];
                }
            }
            Lambda::Soc(l) => {
                out[0] = dot(l, u);
                for i in 1..l.len() {
                    out[i] = l[0] * u[i] + u[0] * l[i];
                }
            }
            Lambda::Psd(l) => {
                let n = l.len();
                let mut k = 0;
                for j in 0..n {
                    for i in j..n {
                        out[k] = 0.5 * (l[i] + l[j]) * u[k];
                        k += 1;
                    }
                }
            }
        }
    }

    /// Solves `lambda o x = w` for `x`.
    pub fn div(&self, w: &[f64], out: &mut [f64]) {
        match self {
            Lambda::NonNeg(l) => {
                for i in 0..l.len() {
                    out[i] = w[i] / l[i];
                }
            }
            Lambda::Soc(l) => {
                let l1 = &l[1..];
                let det = l[0] * l[0] - dot(l1, l1);
                let x0 = (l[0] * w[0] - dot(l1, &w[1..])) / det;
                out[0] = x0;
                for i in 1..l.len() {
                    out[i] = (w[i] - x0 * l[i]) / l[0];
                }
            }
            Lambda::Psd(l) => {
                let n = l.len();
                let mut k = 0;
                for j in 0..n {
                    for i in j..n {
                        out[k] = 2.0 * w[k] / (l[i] + l[j]);
                        k += 1;
                    }
                }
            }
        }
    }

    pub fn inner_self(&self) -> f64 {
        match self {
            Lambda::NonNeg(l) | Lambda::Soc(l) | Lambda::Psd(l) => dot(l, l),
        }
    }
}

/// Nesterov-Todd scaling `W` of one cone block, with `W z = W^{-T} s`.
#[derive(Debug, Clone)]
pub enum Scaling {
    /// `W = diag(d)`.
    NonNeg { d: Vec<f64> },
    /// `W = beta (2 v v^T - J)`.
    Soc { beta: f64, v: Vec<f64> },
    /// `W(U) = r^T U r`; `rinv = r^{-1}`.
    Psd {
        n: usize,
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
    },
}

impl Scaling {
    pub fn compute(block: ConeBlock, s: &[f64], z: &[f64]) -> Result<(Scaling, Lambda)> {
        match block {
            ConeBlock::NonNeg(_) => {
                let d: Vec<f64> = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let l = s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                Ok((Scaling::NonNeg { d }, Lambda::NonNeg(l)))
            }
            ConeBlock::Soc(_) => {
                let sjs = s[0] * s[0] - dot(&s[1..], &s[1..]);
                let zjz = z[0] * z[0] - dot(&z[1..], &z[1..]);
                if sjs <= 0.0 || zjz <= 0.0 {
                    return Err(Error::Numerical(
                        "iterate left the second-order cone".into(),
                    ));
                }
                let sn = sjs.sqrt();
                let zn = zjz.sqrt();
                let sb: Vec<f64> = s.iter().map(|x| x / sn).collect();
                let zb: Vec<f64> = z.iter().map(|x| x / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                let mut wb: Vec<f64> = sb.clone();
                wb[0] += zb[0];
                for i in 1..wb.len() {
                    wb[i] -= zb[i];
                }
                wb.iter_mut().for_each(|x| *x /= 2.0 * gamma);
                let beta = (sn / zn).sqrt();
                let denom = (2.0 * (wb[0] + 1.0)).sqrt();
                let mut v = wb;
                v[0] += 1.0;
                v.iter_mut().for_each(|x| *x /= denom);
                let sc = Scaling::Soc { beta, v };
                let mut l = vec![0.0; z.len()];
                sc.apply(z, &mut l);
                Ok((sc, Lambda::Soc(l)))
            }
            ConeBlock::Psd(n) => {
                let smat_s = smat(s, n);
                let smat_z = smat(z, n);
                let ls = smat_s
                    .cholesky()
                    .ok_or_else(|| Error::Numerical("primal PSD iterate lost definiteness".into()))?
                    .l();
                let lz = smat_z
                    .cholesky()
                    .ok_or_else(|| Error::Numerical("dual PSD iterate lost definiteness".into()))?
                    .l();
                let prod = lz.transpose() * &ls;
                let svd = prod.svd(true, true);
                let u = svd.u.expect("svd u");
                let vt = svd.v_t.expect("svd v_t");
                let sig = svd.singular_values;
                if sig.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::Numerical("degenerate PSD scaling".into()));
                }
                let isq = sig.map(|x| 1.0 / x.sqrt());
                let dinv = DMatrix::from_diagonal(&isq);
                let r = &ls * vt.transpose() * &dinv;
                let rinv = &dinv * u.transpose() * lz.transpose();
                Ok((
                    Scaling::Psd { n, r, rinv },
                    Lambda::Psd(sig.as_slice().to_vec()),
                ))
            }
        }
    }

    /// `W u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { d } => {
                for i in 0..d.len() {
                    out[i] = d[i] * u[i];
                }
            }
            Scaling::Soc { beta, v } => {
                // beta (2 v v^T u - J u)
                let vu = dot(v, u);
                out[0] = beta * (2.0 * v[0] * vu - u[0]);
                for i in 1..v.len() {
                    out[i] = beta * (2.0 * v[i] * vu + u[i]);
                }
            }
            Scaling::Psd { n, r, .. } => {
                let m = smat(u, *n);
                out.copy_from_slice(&svec(&(r.transpose() * m * r)));
            }
        }
    }

    /// `W^T u`.
    pub fn apply_t(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { .. } | Scaling::Soc { .. } => self.apply(u, out),
            Scaling::Psd { n, r, .. } => {
                let m = smat(u, *n);
                out.copy_from_slice(&svec(&(r * m * r.transpose())));
            }
        }
    }

    /// `W^{-1} u`.
    pub fn apply_inv(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { d } => {
                for i in 0..d.len() {
                    out[i] = u[i] / d[i];
                }
            }
            Scaling::Soc { beta, v } => {
                // (1/beta) (2 J v v^T J u - J u)
                let jv0 = v[0];
                let vju = v[0] * u[0] - dot(&v[1..], &u[1..]);
                out[0] = (2.0 * jv0 * vju - u[0]) / beta;
                for i in 1..v.len() {
                    out[i] = (-2.0 * v[i] * vju + u[i]) / beta;
                }
            }
            Scaling::Psd { n, rinv, .. } => {
                let m = smat(u, *n);
                out.copy_from_slice(&svec(&(rinv.transpose() * m * rinv)));
            }
        }
    }

    /// `W^{-T} u`.
    pub fn apply_inv_t(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { .. } | Scaling::Soc { .. } => self.apply_inv(u, out),
            Scaling::Psd { n, rinv, .. } => {
                let m = smat(u, *n);
                out.copy_from_slice(&svec(&(rinv * m * rinv.transpose())));
            }
        }
    }

    /// `W^{-T}` applied to every column of `g` (rows of this block only).
    pub fn apply_inv_t_columns(&self, g: &DMatrix<f64>, cols: &[usize], out: &mut DMatrix<f64>) {
        let mut buf_in = vec![0.0; g.nrows()];
        let mut buf_out = vec![0.0; g.nrows()];
        for &j in cols {
            for (i, x) in buf_in.iter_mut().enumerate() {
                *x = g[(i, j)];
            }
            self.apply_inv_t(&buf_in, &mut buf_out);
            for (i, x) in buf_out.iter().enumerate() {
                out[(i, j)] = *x;
            }
        }
    }
}

/// Largest `alpha` (possibly infinite) with `u + alpha du` in the cone,
/// for `u` in the interior.
pub fn max_step(block: ConeBlock, u: &[f64], du: &[f64]) -> Result<f64> {
    match block {
        ConeBlock::NonNeg(_) => Ok(u
            .iter()
            .zip(du)
            .filter(|(_, d)| **d < 0.0)
            .map(|(x, d)| -x / d)
            .fold(f64::INFINITY, f64::min)),
        ConeBlock::Soc(_) => {
            // (u0 + a du0)^2 - |u1 + a du1|^2 >= 0 and u0 + a du0 >= 0
            let a = du[0] * du[0] - dot(&du[1..], &du[1..]);
            let b = u[0] * du[0] - dot(&u[1..], &du[1..]);
            let c = u[0] * u[0] - dot(&u[1..], &u[1..]);
            let mut alpha = f64::INFINITY;
            if du[0] < 0.0 {
                alpha = -u[0] / du[0];
            }
            // Smallest positive root of a t^2 + 2 b t + c.
            let root = if a.abs() < 1e-300 {
                if b < 0.0 {
                    -c / (2.0 * b)
                } else {
                    f64::INFINITY
                }
            } else {
                let disc = b * b - a * c;
                if disc < 0.0 {
                    f64::INFINITY
                } else {
                    let sq = disc.sqrt();
                    let q = -(b + b.signum() * sq);
                    let r1 = q / a;
                    let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
                    [r1, r2]
                        .into_iter()
                        .filter(|r| *r > 0.0)
                        .fold(f64::INFINITY, f64::min)
                }
            };
            Ok(alpha.min(root))
        }
        ConeBlock::Psd(n) => {
            let um = smat(u, n);
            let dm = smat(du, n);
            let l = um
                .cholesky()
                .ok_or_else(|| Error::Numerical("PSD point not interior in step search".into()))?
                .l();
            let linv = l
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            let mut m = &linv * dm * linv.transpose();
            m = (&m + m.transpose()) * 0.5;
            let eig = crate::numerics::sym_eigen(m)?;
            let lmin = eig
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            Ok(if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            })
        }
    }
}

/// Maximum step in scaled coordinates, where the PSD point is diagonal.
pub fn max_step_scaled(lambda: &Lambda, block: ConeBlock, du: &[f64]) -> Result<f64> {
    match lambda {
        Lambda::Psd(l) => {
            let n = l.len();
            let dm = smat(du, n);
            let isq = DVector::from_iterator(n, l.iter().map(|x| 1.0 / x.sqrt()));
            let m = DMatrix::from_fn(n, n, |i, j| dm[(i, j)] * isq[i] * isq[j]);
            let eig = crate::numerics::sym_eigen(m)?;
            let lmin = eig
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            Ok(if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            })
        }
        Lambda::NonNeg(l) | Lambda::Soc(l) => max_step(block, l, du),
    }
}
