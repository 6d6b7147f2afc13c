//! Incremental construction of [`ConicProblem`]s from affine forms, with
//! complex Hermitian PSD variables lifted to real symmetric blocks.

use nalgebra::{DMatrix, DVector};

use super::kernels::svec;
use super::{ConeBlock, ConicProblem};
use crate::numerics::{embed_hermitian, HermitianMatrix, C64};

/// Sparse affine function `sum_i a_i x_i + constant` of the decision vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineForm {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(mut self, i: usize, a: f64) -> Self {
        self.terms.push((i, a));
        self
    }

    pub fn add_scaled(&mut self, other: &AffineForm, a: f64) {
        self.terms
            .extend(other.terms.iter().map(|&(i, v)| (i, a * v)));
        self.constant += a * other.constant;
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = Self::new();
        out.add_scaled(self, a);
        out
    }

    /// Merges repeated indices and drops exact zeros.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, v) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
    }
}

/// A complex Hermitian matrix variable of order `dim`, parameterized by
/// `dim^2` consecutive real decision variables starting at `offset`: the
/// diagonal first, then `(Re, Im)` of each strictly upper entry in
/// row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexPsdVar {
    pub dim: usize,
    pub offset: usize,
}

/// The real symmetric cone block that carries a [`ComplexPsdVar`]: each
/// row is one packed entry of the embedding `[[Re W, -Im W], [Im W, Re W]]`.
#[derive(Debug, Clone)]
pub struct PsdLift {
    pub block: ConeBlock,
    pub rows: Vec<AffineForm>,
}

impl ComplexPsdVar {
    pub fn num_params(&self) -> usize {
        self.dim * self.dim
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // number of pairs in rows before i, plus offset within row i
        let n = self.dim;
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    pub fn diag_param(&self, i: usize) -> usize {
        self.offset + i
    }

    /// Indices of the real and imaginary parameters of entry `(i, j)`, `i < j`.
    pub fn offdiag_params(&self, i: usize, j: usize) -> (usize, usize) {
        let p = self.offset + self.dim + 2 * self.pair_index(i, j);
        (p, p + 1)
    }

    /// Hermitian value of the variable at the decision vector `x`.
    pub fn value(&self, x: &[f64]) -> HermitianMatrix {
        let n = self.dim;
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for i in 0..n {
            m[(i, i)] = C64::new(x[self.diag_param(i)], 0.0);
            for j in i + 1..n {
                let (re, im) = self.offdiag_params(i, j);
                m[(i, j)] = C64::new(x[re], x[im]);
                m[(j, i)] = C64::new(x[re], -x[im]);
            }
        }
        HermitianMatrix::symmetrize(m)
    }

    /// Hermitian basis element of local parameter `p`.
    pub fn basis(&self, p: usize) -> HermitianMatrix {
        let mut x = vec![0.0; self.offset + self.num_params()];
        x[self.offset + p] = 1.0;
        self.value(&x)
    }

    /// Writes the parameters of `w` into `x`.
    pub fn write(&self, w: &HermitianMatrix, x: &mut [f64]) {
        let m = w.matrix();
        for i in 0..self.dim {
            x[self.diag_param(i)] = m[(i, i)].re;
            for j in i + 1..self.dim {
                let (re, im) = self.offdiag_params(i, j);
                x[re] = m[(i, j)].re;
                x[im] = m[(i, j)].im;
            }
        }
    }

    /// Real embedding of the variable as a PSD block of order `2 dim`.
    pub fn lift(&self) -> PsdLift {
        let n = self.dim;
        let big = 2 * n;
        let s2 = std::f64::consts::SQRT_2;
        // Embedded entry (r, c) as a signed parameter reference.
        let entry = |r: usize, c: usize| -> Option<(usize, f64)> {
            let (i, j) = (r % n, c % n);
            let same_block = (r < n) == (c < n);
            if same_block {
                // Re W_ij
                if i == j {
                    Some((self.diag_param(i), 1.0))
                } else {
                    let (re, _) = self.offdiag_params(i.min(j), i.max(j));
                    Some((re, 1.0))
                }
            } else {
                // lower-left block is Im W, upper-right is -Im W
                if i == j {
                    return None;
                }
                let (_, im) = self.offdiag_params(i.min(j), i.max(j));
                let im_sign = if i < j { 1.0 } else { -1.0 };
                let block_sign = if r >= n { 1.0 } else { -1.0 };
                Some((im, im_sign * block_sign))
            }
        };
        let mut rows = Vec::with_capacity(big * (big + 1) / 2);
        for c in 0..big {
            for r in c..big {
                let scale = if r == c { 1.0 } else { s2 };
                let form = match entry(r, c) {
                    Some((p, a)) => AffineForm::new().term(p, scale * a),
                    None => AffineForm::new(),
                };
                rows.push(form);
            }
        }
        PsdLift {
            block: ConeBlock::Psd(big),
            rows,
        }
    }

    /// `Re tr(G W)` as an affine form. Computed through the embedding:
    /// `tr(embed(G) embed(W)) = 2 Re tr(G W)`, so the embedded inner
    /// product is halved.
    pub fn functional(&self, g: &HermitianMatrix) -> AffineForm {
        assert_eq!(g.dim(), self.dim, "functional dimension mismatch");
        let packed_g = svec(&embed_hermitian(g).embedded);
        let lift = self.lift();
        let mut out = AffineForm::new();
        for (gv, row) in packed_g.iter().zip(&lift.rows) {
            if *gv != 0.0 {
                out.add_scaled(row, 0.5 * gv);
            }
        }
        out.compact()
    }

    /// `tr(W)`.
    pub fn trace(&self) -> AffineForm {
        let mut f = AffineForm::new();
        for i in 0..self.dim {
            f = f.term(self.diag_param(i), 1.0);
        }
        f
    }

    /// `W_kk`.
    pub fn diag_entry(&self, k: usize) -> AffineForm {
        AffineForm::var(self.diag_param(k))
    }

    /// `(Re W_ij, Im W_ij)` as affine forms.
    pub fn entry(&self, i: usize, j: usize) -> (AffineForm, AffineForm) {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => (AffineForm::var(self.diag_param(i)), AffineForm::new()),
            Ordering::Less => {
                let (re, im) = self.offdiag_params(i, j);
                (AffineForm::var(re), AffineForm::var(im))
            }
            Ordering::Greater => {
                let (re, im) = self.offdiag_params(j, i);
                (AffineForm::var(re), AffineForm::new().term(im, -1.0))
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct ProblemBuilder {
    num_vars: usize,
    objective: Vec<f64>,
    nonneg: Vec<(AffineForm, String)>,
    socs: Vec<(Vec<AffineForm>, String)>,
    psds: Vec<(usize, Vec<AffineForm>)>,
    eqs: Vec<AffineForm>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.objective.push(0.0);
        self.num_vars - 1
    }

    /// Allocates a Hermitian variable and constrains it PSD.
    pub fn add_hermitian_psd(&mut self, dim: usize) -> ComplexPsdVar {
        let var = ComplexPsdVar {
            dim,
            offset: self.num_vars,
        };
        self.num_vars += var.num_params();
        self.objective.resize(self.num_vars, 0.0);
        let lift = var.lift();
        if let ConeBlock::Psd(n) = lift.block {
            self.psds.push((n, lift.rows));
        }
        var
    }

    pub fn add_objective(&mut self, form: &AffineForm) {
        for &(i, a) in &form.terms {
            self.objective[i] += a;
        }
    }

    /// `form >= 0`.
    pub fn nonneg(&mut self, form: AffineForm) {
        self.nonneg_labeled(form, "nonneg");
    }

    pub fn nonneg_labeled(&mut self, form: AffineForm, label: &str) {
        self.nonneg.push((form, label.to_string()));
    }

    /// `forms[0] >= |forms[1..]|`.
    pub fn soc(&mut self, forms: Vec<AffineForm>) {
        self.soc_labeled(forms, "soc");
    }

    pub fn soc_labeled(&mut self, forms: Vec<AffineForm>, label: &str) {
        assert!(!forms.is_empty());
        self.socs.push((forms, label.to_string()));
    }

    /// `form == 0`.
    pub fn equality(&mut self, form: AffineForm) {
        self.eqs.push(form);
    }

    pub fn build(self) -> ConicProblem {
        self.build_labeled().0
    }

    /// Builds the problem along with a label for every cone row.
    pub fn build_labeled(self) -> (ConicProblem, Vec<String>) {
        let n = self.num_vars;
        let mut cones = Vec::new();
        let mut rows: Vec<AffineForm> = Vec::new();
        let mut labels = Vec::new();
        if !self.nonneg.is_empty() {
            cones.push(ConeBlock::NonNeg(self.nonneg.len()));
            for (f, l) in self.nonneg {
                rows.push(f);
                labels.push(l);
            }
        }
        for (s, l) in self.socs {
            cones.push(ConeBlock::Soc(s.len()));
            labels.extend(std::iter::repeat_n(l, s.len()));
            rows.extend(s);
        }
        for (order, r) in self.psds {
            cones.push(ConeBlock::Psd(order));
            labels.extend(std::iter::repeat_n("psd".to_string(), r.len()));
            rows.extend(r);
        }
        let m = rows.len();
        let mut g = DMatrix::zeros(m, n);
        let mut h = DVector::zeros(m);
        for (r, form) in rows.iter().enumerate() {
            h[r] = form.constant;
            for &(i, a) in &form.terms {
                g[(r, i)] -= a;
            }
        }
        let p = self.eqs.len();
        let mut a = DMatrix::zeros(p, n);
        let mut b = DVector::zeros(p);
        for (r, form) in self.eqs.iter().enumerate() {
            b[r] = -form.constant;
            for &(i, v) in &form.terms {
                a[(r, i)] += v;
            }
        }
        (
            ConicProblem {
                c: DVector::from_vec(self.objective),
                g,
                h,
                a,
                b,
                cones,
            },
            labels,
        )
    }
}
