//! Small dense-matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry modulus, `‖M‖_max`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Below this size the native complex product is faster than the split.
const SPLIT_PRODUCT_MIN: usize = 24;

/// Complex matrix product. Large operands go through four real products,
/// which use the blocked real kernel and are much faster than the generic
/// complex loop.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_PRODUCT_MIN {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}

/// `A B C`, left to right.
pub fn mul3(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> CMatrix {
    mul(&mul(a, b), c)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    mul(a, b) - mul(b, a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    mul(a, b) + mul(b, a)
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| c(v))))
}

/// `Σ_k |v_k⟩⟨v_k|` over the columns of `vectors`.
pub fn column_projector(vectors: &CMatrix) -> CMatrix {
    mul(vectors, &vectors.adjoint())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization, `vec(X)_{i + n j} = X_{ij}`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Places `upper_right` in the (1,2) block and `lower_left` in the (2,1)
/// block of a 2n×2n matrix.
pub fn off_diag(upper_right: &CMatrix, lower_left: &CMatrix) -> CMatrix {
    let n = upper_right.nrows();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n)).copy_from(upper_right);
    out.view_mut((n, 0), (n, n)).copy_from(lower_left);
    out
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    max_abs_diff(&mul(&u.adjoint(), u), &identity(u.ncols()))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
