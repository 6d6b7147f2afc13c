//! Special functions and dense linear-algebra kernels.
//!
//! Complex Hermitian matrices are handled through their real symmetric
//! embedding `[[A, -B], [B, A]]` of `A + jB`, which lets every eigen and
//! cone computation run on real symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Switchover between the ascending series and the Hankel expansion.
const BESSEL_SERIES_LIMIT: f64 = 12.0;
const EIG_MAX_ITER: usize = 10_000;
/// Relative eigen-residual accepted from [`max_eigpair`].
pub const EIG_RESIDUAL_TOL: f64 = 1e-9;

/// Bessel function of the first kind `J_n(x)` for small integer orders.
///
/// Uses the ascending power series for `|x| < 12` and the Hankel
/// asymptotic expansion beyond. Intended for the orders 1 and 3 that appear
/// in the feed radiation pattern; any order up to 4 is supported.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    assert!(order <= 4, "bessel_j supports orders 0..=4, got {order}");
    assert!(x.is_finite(), "bessel_j argument must be finite");
    let ax = x.abs();
    let v = if ax < BESSEL_SERIES_LIMIT {
        bessel_series(order, ax)
    } else {
        bessel_hankel(order, ax)
    };
    if x < 0.0 && order % 2 == 1 {
        -v
    } else {
        v
    }
}

fn bessel_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200u32 {
        term *= -q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && (k as f64) > half {
            break;
        }
    }
    sum
}

fn bessel_hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let inv8x = 1.0 / (8.0 * x);
    // t_k = a_k(n) / x^k; P collects even k with alternating sign, Q odd k.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut t: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        let next = t * (mu - odd * odd) * inv8x / k as f64;
        if next.abs() >= prev || next == 0.0 {
            break;
        }
        prev = next.abs();
        t = next;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * t;
        } else {
            q += sign * t;
        }
        if t.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * n as f64 + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Complex Hermitian matrix with conjugate-symmetric storage.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking conjugate symmetry to a relative tolerance
    /// of `1e-10`; the stored copy is exactly symmetrized.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..=i {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-10 * scale {
                    return Err(Error::Numerical(format!(
                        "matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// `(m + m^H) / 2` without any check.
    pub fn symmetrize(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self(h)
    }

    /// The rank-one matrix `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrize(v * v.adjoint())
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    /// Builds `A + jB` from a real symmetric part and a real skew part.
    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::Dimension(
                "real and imaginary parts differ in shape".into(),
            ));
        }
        Self::new(re.zip_map(im, C64::new))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `v^H M v`, real for Hermitian `M`.
    pub fn quad_form(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    /// `Re tr(G M)` for another Hermitian `G`.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.im)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * C64::new(a, 0.0))
    }

    /// Eigenvalues in ascending order (each listed once).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let emb = embed_hermitian(self);
        let mut ev = sym_eigen(emb.embedded.clone())?
            .eigenvalues
            .as_slice()
            .to_vec();
        ev.sort_by(f64::total_cmp);
        // Every eigenvalue of the source shows up twice.
        Ok(ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

/// Real symmetric embedding `[[A, -B], [B, A]]` of a Hermitian `A + jB`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymmetricEmbedding {
    pub source_dim: usize,
    pub embedded: DMatrix<f64>,
}

impl RealSymmetricEmbedding {
    pub fn trace(&self) -> f64 {
        self.embedded.trace()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut ev = sym_eigen(self.embedded.clone())?
            .eigenvalues
            .as_slice()
            .to_vec();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let scale = self.embedded.amax().max(1.0);
        Ok(self.eigenvalues()?[0] >= -tol * scale)
    }

    /// Inverse of [`embed_hermitian`], averaging the duplicated blocks.
    pub fn to_hermitian(&self) -> HermitianMatrix {
        let n = self.source_dim;
        let e = &self.embedded;
        let m = CMatrix::from_fn(n, n, |i, j| {
            let re = 0.5 * (e[(i, j)] + e[(n + i, n + j)]);
            let im = 0.5 * (e[(n + i, j)] - e[(i, n + j)]);
            C64::new(re, im)
        });
        HermitianMatrix::symmetrize(m)
    }
}

pub fn embed_hermitian(m: &HermitianMatrix) -> RealSymmetricEmbedding {
    let n = m.dim();
    let src = m.matrix();
    let embedded = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (i, j) = (r % n, c % n);
        let z = src[(i, j)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    RealSymmetricEmbedding {
        source_dim: n,
        embedded,
    }
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: f64,
    pub vector: CVector,
}

pub(crate) fn sym_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    SymmetricEigen::try_new(m, f64::EPSILON, EIG_MAX_ITER).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge within {EIG_MAX_ITER} sweeps (n = {n})"
        ))
    })
}

/// Leading eigenpair, extracted from the real embedding: the top real
/// eigenvector `[x; y]` maps back to `x + jy`.
pub fn max_eigpair(m: &HermitianMatrix) -> Result<EigPair> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Dimension("empty matrix has no eigenpair".into()));
    }
    let emb = embed_hermitian(m);
    let eig = sym_eigen(emb.embedded)?;
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let col = eig.eigenvectors.column(idx);
    let mut vector = CVector::from_fn(n, |i, _| C64::new(col[i], col[n + i]));
    let norm = vector.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Numerical("degenerate eigenvector".into()));
    }
    vector.unscale_mut(norm);

    let residual = (m.matrix() * &vector - &vector * C64::new(value, 0.0)).norm();
    let scale = m.matrix().norm().max(f64::MIN_POSITIVE);
    if residual > EIG_RESIDUAL_TOL * scale {
        return Err(Error::Numerical(format!(
            "eigen-residual {residual:.3e} exceeds {:.1e} * |M|",
            EIG_RESIDUAL_TOL
        )));
    }
    Ok(EigPair { value, vector })
}

/// Symmetric PSD square root via eigendecomposition. Small negative
/// eigenvalues (roundoff) are clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m.clone())?;
    let scale = m.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
        return Err(Error::Config("matrix is not positive semidefinite".into()));
    }
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&d) * v.transpose())
}

/// A lower-triangular factor `L` with `L L^T = m` for PSD `m`. Falls back
/// to the symmetric root when Cholesky breaks down on a singular matrix.
pub fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match m.clone().cholesky() {
        Some(ch) => Ok(ch.l()),
        None => psd_sqrt(m),
    }
}

/// Fixes the global phase so the largest-magnitude entry is real and
/// nonnegative.
pub fn canonical_phase(v: &CVector) -> CVector {
    let Some((_, pivot)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
    else {
        return v.clone();
    };
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    let rot = pivot.conj() / pivot.norm();
    v.map(|z| z * rot)
}
