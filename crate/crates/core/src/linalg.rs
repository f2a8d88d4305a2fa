//! Dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Kronecker product of the factors, leftmost factor outermost.
pub fn tensor_product(ops: &[CMat]) -> Result<CMat> {
    let (first, rest) = ops.split_first().ok_or(Error::EmptyTensorFactors)?;
    ensure_square(first)?;
    let mut acc = first.clone();
    for op in rest {
        ensure_square(op)?;
        acc = acc.kronecker(op);
    }
    Ok(acc)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `max|A - A†|`.
pub fn hermitian_residual(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Hermitian within `tol` relative to the largest entry.
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && hermitian_residual(m) <= tol * max_abs(m)
}

/// `max(max|P² - P|, max|P - P†|)`.
pub fn projector_residual(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(m * m), m).max(hermitian_residual(m))
}

pub fn is_projector(m: &CMat, tol: f64) -> bool {
    projector_residual(m) <= tol
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Unnormalized Hilbert-Schmidt inner product `tr(a† b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the orthonormal eigenvectors matching `values`.
    pub vectors: CMat,
}

pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

impl HermitianEigen {
    /// `V f(Λ) V†` for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (c, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for r in 0..n {
                scaled[(r, c)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Column-major vectorization.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.iter().copied())
}

pub fn unvectorize(v: &CVec, dim: usize) -> CMat {
    assert_eq!(v.len(), dim * dim);
    CMat::from_iterator(dim, dim, v.iter().copied())
}

pub fn basis_vector(dim: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[k] = ONE;
    v
}

/// Matrix unit `|a⟩⟨b|`.
pub fn matrix_unit(dim: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    m[(a, b)] = ONE;
    m
}

pub fn ket_bra(ket: &CVec, bra: &CVec) -> CMat {
    ket * bra.adjoint()
}

/// Projector onto the span of the given orthonormal vectors.
pub fn span_projector(vectors: &[CVec], dim: usize) -> CMat {
    vectors.iter().fold(CMat::zeros(dim, dim), |acc, v| acc + ket_bra(v, v))
}

/// Orthonormal basis of Hermitian matrices for `B(C^dim)` under `tr(a† b)`:
/// diagonal units first, then the symmetric and antisymmetric off-diagonal
/// pairs in row-major order.
pub fn hermitian_basis(dim: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(dim * dim);
    for k in 0..dim {
        basis.push(matrix_unit(dim, k, k));
    }
    for a in 0..dim {
        for b in (a + 1)..dim {
            let mut sym = CMat::zeros(dim, dim);
            sym[(a, b)] = C64::new(s, 0.0);
            sym[(b, a)] = C64::new(s, 0.0);
            basis.push(sym);
            let mut anti = CMat::zeros(dim, dim);
            anti[(a, b)] = C64::new(0.0, -s);
            anti[(b, a)] = C64::new(0.0, s);
            basis.push(anti);
        }
    }
    basis
}

/// Columns of the unitary discrete Fourier basis; for `dim = 2` this is the
/// Hadamard basis `|±⟩`.
pub fn fourier_basis(dim: usize) -> CMat {
    let norm = 1.0 / (dim as f64).sqrt();
    CMat::from_fn(dim, dim, |j, k| {
        let phase = 2.0 * std::f64::consts::PI * (j * k) as f64 / dim as f64;
        C64::from_polar(norm, phase)
    })
}
