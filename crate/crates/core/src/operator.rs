//! Dense complex operators, Hermitian spectral calculus and density matrices.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, max_abs_diff, CMatrix, CVector};

/// Default relative threshold separating zero modes from round-off.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

const HERMITICITY_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-10;
const UNITARITY_TOL: f64 = 1e-12;
const NOT_PSD_TOL: f64 = 1e-8;

/// A square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if let Some((idx, _)) = m.iter().enumerate().find(|(_, z)| !(z.re.is_finite() && z.im.is_finite())) {
            let n = m.nrows();
            return Err(Error::NonFinite { row: idx % n, col: idx / n });
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(linalg::identity(n))
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

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Operator {
        Operator(self.0.scale(factor))
    }
}

impl AsRef<CMatrix> for Operator {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Hermitian operator, stored exactly Hermitianized.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(Operator);

impl HermitianOperator {
    /// Accepts `m` when `‖M − M†‖_max ≤ 1e-12 (1 + ‖M‖_max)`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let op = Operator::new(m)?;
        let residual = linalg::hermiticity_residual(op.matrix());
        if residual > HERMITICITY_TOL * (1.0 + max_abs(op.matrix())) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::hermitianize(op.into_matrix()))
    }

    /// Takes the Hermitian part without checking how far `m` was from it.
    pub fn hermitianize(m: CMatrix) -> Self {
        Self(Operator(linalg::hermitian_part(&m)))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        Self(Operator(linalg::real_diagonal(values)))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Operator::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0.into_matrix()
    }
}

impl AsRef<CMatrix> for HermitianOperator {
    fn as_ref(&self) -> &CMatrix {
        self.matrix()
    }
}

/// Eigenvalues in ascending order with the matching unitary eigenvector
/// matrix (column `k` belongs to eigenvalue `k`).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U f(Λ) U†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            scaled.column_mut(k).scale_mut(fk);
        }
        linalg::mul(&scaled, &u.adjoint())
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

pub fn spectral_decompose(m: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = m.dim();
    if n == 0 {
        return Ok(SpectralDecomposition { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) });
    }
    let scale = max_abs(m.matrix());
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::NoConvergence { residual: f64::NAN })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let decomposition = SpectralDecomposition { eigenvalues, eigenvectors };
    let residual = max_abs_diff(&decomposition.reconstruct(), m.matrix());
    let unitarity = linalg::unitarity_residual(&decomposition.eigenvectors);
    if residual > RECONSTRUCTION_TOL * (1.0 + scale) || unitarity > UNITARITY_TOL * n.max(1) as f64 {
        return Err(Error::NoConvergence { residual: residual.max(unitarity) });
    }
    Ok(decomposition)
}

/// `U f(Λ) U†` for a real function `f`.
pub fn apply_function(m: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let spec = spectral_decompose(m)?;
    apply_function_to(&spec, f)
}

pub fn apply_function_to(spec: &SpectralDecomposition, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    if let Some(&bad) = spec.eigenvalues.iter().find(|&&x| !f(x).is_finite()) {
        return Err(Error::Domain { eigenvalue: bad });
    }
    Ok(HermitianOperator::hermitianize(spec.reconstruct_with(f)))
}

/// Moore–Penrose style inverse square root: eigenvalues above
/// `zero_tol · λ_max` map to `λ^{-1/2}`, the rest (the zero modes) to 0.
pub fn pseudo_inv_sqrt(m: &HermitianOperator, zero_tol: f64) -> Result<HermitianOperator> {
    let spec = spectral_decompose(m)?;
    pseudo_inv_sqrt_of(&spec, zero_tol)
}

pub fn pseudo_inv_sqrt_of(spec: &SpectralDecomposition, zero_tol: f64) -> Result<HermitianOperator> {
    let lambda_max = spec.max_eigenvalue().max(0.0);
    if let Some(&bad) = spec.eigenvalues.iter().find(|&&x| x < -NOT_PSD_TOL * lambda_max) {
        return Err(Error::NotPsd { eigenvalue: bad });
    }
    let cutoff = zero_tol * lambda_max;
    Ok(HermitianOperator::hermitianize(spec.reconstruct_with(|x| if x > cutoff { x.sqrt().recip() } else { 0.0 })))
}

/// Positive semidefinite square root with negative round-off clipped to 0.
pub fn psd_sqrt_of(spec: &SpectralDecomposition) -> HermitianOperator {
    HermitianOperator::hermitianize(spec.reconstruct_with(|x| x.max(0.0).sqrt()))
}

/// Hermitian, positive semidefinite operator with a known trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    trace_target: f64,
}

impl DensityMatrix {
    /// Validates positivity (min eigenvalue ≥ −1e-10) and
    /// `|Tr ρ − trace_target| ≤ 1e-10`.
    pub fn new(m: CMatrix, trace_target: f64) -> Result<Self> {
        let op = HermitianOperator::new(m)?;
        Self::from_hermitian(op, trace_target)
    }

    /// Unit-trace density matrix.
    pub fn normalized(m: CMatrix) -> Result<Self> {
        Self::new(m, 1.0)
    }

    /// Checks positivity only; the trace target is whatever the trace is.
    pub fn with_measured_trace(m: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(m)?;
        let trace = linalg::trace(op.matrix()).re;
        Self::from_hermitian(op, trace)
    }

    pub fn from_hermitian(op: HermitianOperator, trace_target: f64) -> Result<Self> {
        let spec = spectral_decompose(&op)?;
        let min_eigenvalue = spec.min_eigenvalue();
        if min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        let trace = linalg::trace(op.matrix()).re;
        if (trace - trace_target).abs() > TRACE_TOL {
            return Err(Error::TraceMismatch { trace, target: trace_target });
        }
        Ok(Self { op, trace_target })
    }

    /// For matrices that are positive by construction (congruences of
    /// validated states, Wishart samples). Skips the eigensolver.
    pub(crate) fn positive_by_construction(m: CMatrix) -> Self {
        let op = HermitianOperator::hermitianize(m);
        let trace_target = linalg::trace(op.matrix()).re;
        Self { op, trace_target }
    }

    /// Convex combination `(1 − w)·self + w·other`.
    pub fn mixture(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Invalid(format!("mixture weight {w} outside [0, 1]")));
        }
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let m = self.matrix().scale(1.0 - w) + other.matrix().scale(w);
        let trace_target = (1.0 - w) * self.trace_target + w * other.trace_target;
        Ok(Self { op: HermitianOperator::hermitianize(m), trace_target })
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Invalid("pure state needs a nonzero finite vector".into()));
        }
        let unit = psi.unscale(norm);
        Self::normalized(&unit * unit.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }

    pub fn into_matrix(self) -> CMatrix {
        self.op.into_matrix()
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        self.matrix()
    }
}

/// `S = −Tr ρ log ρ` (natural log, `0 log 0 = 0`).
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    // Construction already ran the eigensolver successfully on this matrix.
    let spec = spectral_decompose(rho.as_hermitian()).expect("validated density matrix");
    entropy_of_spectrum(spec.eigenvalues())
}

/// Entropy of a spectrum with every eigenvalue clipped to `[0, 1]`.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|&p| p.clamp(0.0, 1.0)).filter(|&p| p > 0.0).fold(0.0, |acc, p| acc - p * p.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityDiagnostics {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub passed: bool,
}

/// Residual report for an arbitrary square matrix; never fails.
/// The trace is reported but not judged.
pub fn validate_density(m: &CMatrix, tol: f64) -> DensityDiagnostics {
    let hermiticity = linalg::hermiticity_residual(m);
    let trace = linalg::trace(m).re;
    let min_eigenvalue =
        spectral_decompose(&HermitianOperator::hermitianize(m.clone())).map(|s| s.min_eigenvalue()).unwrap_or(f64::NAN);
    DensityDiagnostics { hermiticity, min_eigenvalue, trace, passed: hermiticity <= tol && min_eigenvalue >= -tol }
}

/// Real polynomial `Σ_k a_k x^k`, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self(coefficients)
    }

    /// `P(x) = x`.
    pub fn identity() -> Self {
        Self(vec![0.0, 1.0])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn is_identity(&self) -> bool {
        let trimmed: Vec<f64> = {
            let mut v = self.0.clone();
            while v.last() == Some(&0.0) {
                v.pop();
            }
            v
        };
        trimmed == [0.0, 1.0]
    }

    /// Evaluates the polynomial on a matrix by Horner's rule.
    pub fn eval_matrix(&self, m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        self.0.iter().rev().fold(CMatrix::zeros(n, n), |acc, &a| linalg::mul(&acc, m) + linalg::identity(n).scale(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_diagonal, I};
    use crate::random::{random_hermitian, seeded};

    #[test]
    fn mixture_is_convex_and_checked() {
        let a = DensityMatrix::normalized(real_diagonal(&[1.0, 0.0])).unwrap();
        let b = DensityMatrix::normalized(real_diagonal(&[0.0, 1.0])).unwrap();
        let m = a.mixture(&b, 0.25).unwrap();
        assert!(linalg::max_abs_diff(m.matrix(), &real_diagonal(&[0.75, 0.25])) < 1e-15);
        assert_eq!(m.trace_target(), 1.0);
        assert!(a.mixture(&b, 1.5).is_err());
        let c3 = DensityMatrix::normalized(real_diagonal(&[1.0, 0.0, 0.0])).unwrap();
        assert!(a.mixture(&c3, 0.5).is_err());
    }

    fn herm(values: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(values)
    }

    /// Scaling-and-squaring Taylor exponential, independent of the
    /// spectral path.
    fn expm_taylor(m: &CMatrix) -> CMatrix {
        let norm = max_abs(m) * m.nrows() as f64;
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = m.unscale(2f64.powi(squarings));
        let n = m.nrows();
        let mut term = linalg::identity(n);
        let mut sum = linalg::identity(n);
        for k in 1..30 {
            term = &term * &a / c(k as f64);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(matches!(Operator::new(CMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 0)] = c(f64::NAN);
        assert_eq!(Operator::new(m), Err(Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn diagonal_decomposition_sorts() {
        let spec = spectral_decompose(&herm(&[2.0, 0.0, 1.0])).unwrap();
        assert_eq!(spec.eigenvalues(), &[0.0, 1.0, 2.0]);
        // permutation eigenvectors
        for k in 0..3 {
            let v = spec.eigenvector(k);
            let idx = [1, 2, 0][k];
            assert!((v[idx].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_decomposition() {
        let spec = spectral_decompose(&HermitianOperator::new(linalg::identity(4)).unwrap()).unwrap();
        assert!(spec.eigenvalues().iter().all(|&x| (x - 1.0).abs() < 1e-14));
        assert!(max_abs_diff(&spec.reconstruct(), &linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = seeded(7);
        let m = random_hermitian(6, 1.0, &mut rng);
        let spec = spectral_decompose(&m).unwrap();
        assert!(max_abs_diff(&spec.reconstruct(), m.matrix()) < 1e-10 * (1.0 + max_abs(m.matrix())));
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn function_examples() {
        let mut rng = seeded(3);
        let m = random_hermitian(5, 1.0, &mut rng);
        let same = apply_function(&m, |x| x).unwrap();
        assert!(max_abs_diff(same.matrix(), m.matrix()) < 1e-12);

        let sq = apply_function(&herm(&[1.0, 2.0]), |x| x * x).unwrap();
        assert!(max_abs_diff(sq.matrix(), &real_diagonal(&[1.0, 4.0])) < 1e-14);

        let e = apply_function(&m, f64::exp).unwrap();
        let oracle = expm_taylor(m.matrix());
        assert!(max_abs_diff(e.matrix(), &oracle) < 1e-9);
        assert!(max_abs(&linalg::commutator(e.matrix(), m.matrix())) < 1e-10);
    }

    #[test]
    fn function_domain_error_names_eigenvalue() {
        let err = apply_function(&herm(&[-1.0, 4.0]), f64::sqrt).unwrap_err();
        assert_eq!(err, Error::Domain { eigenvalue: -1.0 });
    }

    #[test]
    fn pseudo_inverse_root_examples() {
        let r = pseudo_inv_sqrt(&herm(&[0.0, 1.0, 4.0]), DEFAULT_ZERO_TOL).unwrap();
        assert!(max_abs_diff(r.matrix(), &real_diagonal(&[0.0, 1.0, 0.5])) < 1e-14);

        let id = HermitianOperator::new(linalg::identity(3)).unwrap();
        let r = pseudo_inv_sqrt(&id, DEFAULT_ZERO_TOL).unwrap();
        assert!(max_abs_diff(r.matrix(), &linalg::identity(3)) < 1e-14);

        // a = [[0,1,0],[0,0,√2],[0,0,0]], h1 = a†a
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 1)] = c(1.0);
        a[(1, 2)] = c(2f64.sqrt());
        let h1 = HermitianOperator::new(a.adjoint() * &a).unwrap();
        let r = pseudo_inv_sqrt(&h1, DEFAULT_ZERO_TOL).unwrap();
        let p = r.matrix() * h1.matrix() * r.matrix();
        assert!(max_abs_diff(&p, &real_diagonal(&[0.0, 1.0, 1.0])) < 1e-12);
    }

    #[test]
    fn pseudo_inverse_rejects_indefinite() {
        let err = pseudo_inv_sqrt(&herm(&[-1.0, 2.0]), DEFAULT_ZERO_TOL).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::normalized(real_diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!(von_neumann_entropy(&pure), 0.0);

        let mixed = DensityMatrix::normalized(real_diagonal(&[0.5, 0.5])).unwrap();
        assert!((von_neumann_entropy(&mixed) - 2f64.ln()).abs() < 1e-14);

        let skew = DensityMatrix::normalized(real_diagonal(&[0.75, 0.25])).unwrap();
        let oracle = 0.75 * (4.0f64 / 3.0).ln() + 0.25 * 4f64.ln();
        assert!((von_neumann_entropy(&skew) - oracle).abs() < 1e-14);
    }

    #[test]
    fn validation_diagnostics() {
        let d = validate_density(&linalg::identity(2).scale(0.5), 1e-10);
        assert!(d.passed);
        assert!((d.trace - 1.0).abs() < 1e-15);

        let mut nilpotent = CMatrix::zeros(2, 2);
        nilpotent[(0, 1)] = c(1.0);
        let d = validate_density(&nilpotent, 1e-10);
        assert!(!d.passed);
        assert!(d.hermiticity > 0.5);

        let d = validate_density(&real_diagonal(&[1.2, -0.2]), 1e-10);
        assert!(!d.passed);
        assert!((d.min_eigenvalue + 0.2).abs() < 1e-14);
        assert!((d.trace - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_construction_errors() {
        assert!(matches!(DensityMatrix::normalized(real_diagonal(&[1.2, -0.2])), Err(Error::NotPositive { .. })));
        assert!(matches!(DensityMatrix::normalized(real_diagonal(&[0.7, 0.7])), Err(Error::TraceMismatch { .. })));
        let mut m = real_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = 0.1 * I;
        m[(1, 0)] = -0.1 * I;
        assert!(DensityMatrix::normalized(m).is_ok());
    }

    #[test]
    fn polynomial_eval() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert!(Polynomial::new(vec![0.0, 1.0, 0.0]).is_identity());
        let m = real_diagonal(&[1.0, 2.0]);
        assert!(max_abs_diff(&p.eval_matrix(&m), &real_diagonal(&[2.0, 9.0])) < 1e-14);
    }
}
