//! Supersymmetric partner pairs built from a supercharge matrix `q⁻`.
//!
//! Given `q⁻` the pair carries `q⁺ = (q⁻)†`, the partner Hamiltonians
//! `h₁ = q⁺q⁻` and `h₂ = q⁻q⁺` (or caller-supplied Hamiltonians with a
//! factorization polynomial `𝒫`, `q⁺q⁻ = 𝒫(h₁)`), the zero modes of
//! `q^±`, and the square roots of `𝒫(h)` with the zero modes projected
//! out. On top of that it maps density matrices and FGKLS operators
//! between the partners and measures every algebraic identity of the
//! construction.

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::linalg::{self, anticommutator, c, commutator, max_abs, max_abs_diff, mul, mul3, CMatrix, CVector};
use crate::operator::{
    spectral_decompose, DensityMatrix, HermitianOperator, Operator, Polynomial, SpectralDecomposition,
};

/// Tolerance for the no-mixing precondition between zero modes and the
/// positive sector.
pub const MIXING_TOL: f64 = 1e-8;

const EIGENVECTOR_TOL: f64 = 1e-8;
const CONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SusyPair {
    q_minus: CMatrix,
    q_plus: CMatrix,
    h1: HermitianOperator,
    h2: HermitianOperator,
    factorization: Polynomial,
    spec1: SpectralDecomposition,
    spec2: SpectralDecomposition,
    singular_values: Vec<f64>,
    zero_modes_minus: CMatrix,
    zero_modes_plus: CMatrix,
    root1: HermitianOperator,
    root2: HermitianOperator,
    inv_root1: HermitianOperator,
    inv_root2: HermitianOperator,
    levels1: Vec<usize>,
    levels2: Vec<usize>,
    zero_tol: f64,
}

/// First-order pair: `h₁ = q⁺q⁻`, `h₂ = q⁻q⁺`, `𝒫(h) = h`.
pub fn build_susy_pair(q_minus: &Operator, zero_tol: f64) -> Result<SusyPair> {
    let q = q_minus.matrix();
    let qp = q.adjoint();
    let h1 = HermitianOperator::hermitianize(mul(&qp, q));
    let h2 = HermitianOperator::hermitianize(mul(q, &qp));
    assemble(q.clone(), h1, h2, Polynomial::identity(), zero_tol)
}

/// Pair with explicit Hamiltonians and factorization polynomial. The
/// intertwining relations and `q⁺q⁻ = 𝒫(h₁)`, `q⁻q⁺ = 𝒫(h₂)` are verified
/// to `1e-8` relative.
pub fn build_susy_pair_with(
    q_minus: &Operator,
    h1: HermitianOperator,
    h2: HermitianOperator,
    factorization: Polynomial,
    zero_tol: f64,
) -> Result<SusyPair> {
    let n = q_minus.dim();
    for h in [&h1, &h2] {
        if h.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: h.dim() });
        }
    }
    let q = q_minus.matrix();
    let qp = q.adjoint();
    let scale = (1.0 + max_abs(h1.matrix()).max(max_abs(h2.matrix()))) * (1.0 + max_abs(q));
    let intertwining = max_abs_diff(&mul(h1.matrix(), &qp), &mul(&qp, h2.matrix()))
        .max(max_abs_diff(&mul(q, h1.matrix()), &mul(h2.matrix(), q)));
    if intertwining > CONSTRUCTION_TOL * scale {
        return Err(Error::Invalid(format!("q- does not intertwine the Hamiltonians (residual {intertwining:.3e})")));
    }
    let f1 = mul(&qp, q);
    let f2 = mul(q, &qp);
    let fact = max_abs_diff(&factorization.eval_matrix(h1.matrix()), &f1)
        .max(max_abs_diff(&factorization.eval_matrix(h2.matrix()), &f2));
    if fact > CONSTRUCTION_TOL * (1.0 + max_abs(&f1)) {
        return Err(Error::Invalid(format!("q+q- does not match the factorization polynomial (residual {fact:.3e})")));
    }
    assemble(q.clone(), h1, h2, factorization, zero_tol)
}

fn assemble(
    q_minus: CMatrix,
    h1: HermitianOperator,
    h2: HermitianOperator,
    factorization: Polynomial,
    zero_tol: f64,
) -> Result<SusyPair> {
    let n = q_minus.nrows();
    let q_plus = q_minus.adjoint();

    let svd = SVD::new(q_minus.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v = svd.v_t.expect("right singular vectors requested").adjoint();
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = zero_tol * sigma_max;
    let kernel: Vec<usize> = (0..n).filter(|&k| sigma[k] <= cutoff).collect();

    let columns = |m: &CMatrix, idx: &[usize]| {
        let mut out = CMatrix::zeros(n, idx.len());
        for (dst, &src) in idx.iter().enumerate() {
            out.set_column(dst, &m.column(src));
        }
        out
    };
    let zero_modes_minus = columns(&v, &kernel);
    let zero_modes_plus = columns(&u, &kernel);

    let weighted = |basis: &CMatrix, f: &dyn Fn(f64) -> f64| {
        let mut scaled = basis.clone();
        for (k, &s) in sigma.iter().enumerate().take(n) {
            let w = if s <= cutoff { 0.0 } else { f(s) };
            scaled.column_mut(k).scale_mut(w);
        }
        HermitianOperator::hermitianize(mul(&scaled, &basis.adjoint()))
    };
    let root1 = weighted(&v, &|s| s);
    let root2 = weighted(&u, &|s| s);
    let inv_root1 = weighted(&v, &|s| s.recip());
    let inv_root2 = weighted(&u, &|s| s.recip());

    let spec1 = spectral_decompose(&h1)?;
    let spec2 = spectral_decompose(&h2)?;
    let levels1 = positive_levels(&spec1, &zero_modes_minus);
    let levels2 = positive_levels(&spec2, &zero_modes_plus);

    Ok(SusyPair {
        q_minus,
        q_plus,
        h1,
        h2,
        factorization,
        spec1,
        spec2,
        singular_values: sigma,
        zero_modes_minus,
        zero_modes_plus,
        root1,
        root2,
        inv_root1,
        inv_root2,
        levels1,
        levels2,
        zero_tol,
    })
}

/// Eigenvector indices whose weight in the zero-mode span is below 1/2.
fn positive_levels(spec: &SpectralDecomposition, zero_modes: &CMatrix) -> Vec<usize> {
    (0..spec.dim())
        .filter(|&k| {
            let overlap = zero_modes.adjoint() * spec.eigenvector(k);
            overlap.norm_squared() < 0.5
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntertwiningResidual {
    /// `‖h₁q⁺ − q⁺h₂‖_max`
    pub h1_q_plus: f64,
    /// `‖q⁻h₁ − h₂q⁻‖_max`
    pub q_minus_h1: f64,
}

impl IntertwiningResidual {
    pub fn max(&self) -> f64 {
        self.h1_q_plus.max(self.q_minus_h1)
    }
}

impl SusyPair {
    pub fn dim(&self) -> usize {
        self.q_minus.nrows()
    }

    pub fn q_minus(&self) -> &CMatrix {
        &self.q_minus
    }

    pub fn q_plus(&self) -> &CMatrix {
        &self.q_plus
    }

    pub fn h1(&self) -> &HermitianOperator {
        &self.h1
    }

    pub fn h2(&self) -> &HermitianOperator {
        &self.h2
    }

    pub fn spectrum1(&self) -> &SpectralDecomposition {
        &self.spec1
    }

    pub fn spectrum2(&self) -> &SpectralDecomposition {
        &self.spec2
    }

    pub fn factorization(&self) -> &Polynomial {
        &self.factorization
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Orthonormal kernel basis of `q⁻` (columns `ψ₋ʲ`).
    pub fn zero_modes_minus(&self) -> &CMatrix {
        &self.zero_modes_minus
    }

    /// Orthonormal kernel basis of `q⁺` (columns `ψ₊ʲ`).
    pub fn zero_modes_plus(&self) -> &CMatrix {
        &self.zero_modes_plus
    }

    pub fn zero_mode_count(&self) -> usize {
        self.zero_modes_minus.ncols()
    }

    /// `√𝒫(h₁)` with the zero modes of `q⁻` projected out.
    pub fn root1(&self) -> &HermitianOperator {
        &self.root1
    }

    pub fn root2(&self) -> &HermitianOperator {
        &self.root2
    }

    /// `1/√𝒫(h₁)`, zero on the zero modes of `q⁻`.
    pub fn inv_root1(&self) -> &HermitianOperator {
        &self.inv_root1
    }

    pub fn inv_root2(&self) -> &HermitianOperator {
        &self.inv_root2
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    /// Projector off the zero modes of `q⁻`.
    pub fn positive_projector1(&self) -> CMatrix {
        linalg::identity(self.dim()) - linalg::column_projector(&self.zero_modes_minus)
    }

    pub fn positive_projector2(&self) -> CMatrix {
        linalg::identity(self.dim()) - linalg::column_projector(&self.zero_modes_plus)
    }

    /// Positive-sector energies of `h₁`, ascending.
    pub fn energies(&self) -> Vec<f64> {
        self.levels1.iter().map(|&k| self.spec1.eigenvalues()[k]).collect()
    }

    /// Positive-sector eigenvalues of `h₂`, ascending; computed from the
    /// `h₂` eigensolver, independent of the partner states.
    pub fn partner_energies(&self) -> Vec<f64> {
        self.levels2.iter().map(|&k| self.spec2.eigenvalues()[k]).collect()
    }

    /// Columns `|E_m⟩`: eigenvectors of `h₁` outside the zero-mode span.
    pub fn energy_basis(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim(), self.levels1.len());
        for (dst, &src) in self.levels1.iter().enumerate() {
            out.set_column(dst, &self.spec1.eigenvectors().column(src));
        }
        out
    }

    /// Columns `|Ẽ_m⟩ = q⁻|E_m⟩ / √𝒫(E_m)`, phase-locked to `energy_basis`.
    pub fn partner_basis(&self) -> CMatrix {
        let basis = self.energy_basis();
        let mut out = mul(&self.q_minus, &basis);
        for (k, e) in self.energies().into_iter().enumerate() {
            let norm = self.factorization.eval(e).max(0.0).sqrt();
            out.column_mut(k).unscale_mut(norm);
        }
        out
    }

    /// `[ψ₋ | |E_m⟩]`, a unitary basis for partner 1 with zero modes first.
    pub fn level_basis1(&self) -> CMatrix {
        concat_columns(&self.zero_modes_minus, &self.energy_basis())
    }

    /// `[ψ₊ | |Ẽ_m⟩]`, index-aligned with [`SusyPair::level_basis1`].
    pub fn level_basis2(&self) -> CMatrix {
        concat_columns(&self.zero_modes_plus, &self.partner_basis())
    }

    /// Diagonal of `h` in the aligned level bases (zero modes first).
    pub fn level_energies1(&self) -> Vec<f64> {
        diagonal_in(&self.level_basis1(), self.h1.matrix())
    }

    pub fn level_energies2(&self) -> Vec<f64> {
        diagonal_in(&self.level_basis2(), self.h2.matrix())
    }

    /// Overlap matrix `⟨E_m|Ẽ_k⟩` on the positive sector.
    pub fn overlaps(&self) -> CMatrix {
        mul(&self.energy_basis().adjoint(), &self.partner_basis())
    }

    pub fn intertwining_scale(&self) -> f64 {
        1.0 + max_abs(self.h1.matrix())
    }

    /// Returns `‖h₁q⁺−q⁺h₂‖_max` and `‖q⁻h₁−h₂q⁻‖_max`.
    pub fn check_intertwining(&self) -> IntertwiningResidual {
        let (h1, h2) = (self.h1.matrix(), self.h2.matrix());
        IntertwiningResidual {
            h1_q_plus: max_abs_diff(&mul(h1, &self.q_plus), &mul(&self.q_plus, h2)),
            q_minus_h1: max_abs_diff(&mul(&self.q_minus, h1), &mul(h2, &self.q_minus)),
        }
    }

    /// `max(‖q⁻ψ₋‖, ‖q⁺ψ₊‖)` over all zero modes.
    pub fn zero_mode_residual(&self) -> f64 {
        max_abs(&mul(&self.q_minus, &self.zero_modes_minus)).max(max_abs(&mul(&self.q_plus, &self.zero_modes_plus)))
    }

    /// Largest per-eigenvalue gap between the positive-sector spectra of
    /// `h₁` and `h₂`; infinite when the level counts differ.
    pub fn isospectrality_residual(&self) -> f64 {
        let (a, b) = (self.energies(), self.partner_energies());
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        a.iter().zip(&b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
    }

    /// Partner eigenstate `q⁻ψ / √𝒫(E)` of `h₂` for an `h₁` eigenpair.
    pub fn partner_state(&self, psi: &CVector, energy: f64) -> Result<CVector> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.len() });
        }
        let residual = (self.h1.matrix() * psi - psi.scale(energy)).norm();
        if residual > EIGENVECTOR_TOL * (1.0 + max_abs(self.h1.matrix())) * psi.norm().max(1.0) {
            return Err(Error::NotEigenvector { residual });
        }
        let p = self.factorization.eval(energy);
        let sigma_max = self.singular_values.iter().copied().fold(0.0, f64::max);
        if p <= self.zero_tol * sigma_max * sigma_max {
            return Err(Error::ZeroMode { energy });
        }
        Ok((&self.q_minus * psi).unscale(p.sqrt()))
    }

    /// Zero-mode block `β₁ʲᵏ = ⟨ψ₋ʲ|ρ₁|ψ₋ᵏ⟩`.
    pub fn beta_minus(&self, rho1: &CMatrix) -> CMatrix {
        mul3(&self.zero_modes_minus.adjoint(), rho1, &self.zero_modes_minus)
    }

    /// Zero-mode block `β₂ʲᵏ = ⟨ψ₊ʲ|ρ₂|ψ₊ᵏ⟩`.
    pub fn beta_plus(&self, rho2: &CMatrix) -> CMatrix {
        mul3(&self.zero_modes_plus.adjoint(), rho2, &self.zero_modes_plus)
    }

    /// Corrupts one entry of the stored `q⁺` so that the intertwining
    /// checks must fail. Used for fault injection in the check suite.
    #[doc(hidden)]
    pub fn with_corrupted_q_plus(mut self, epsilon: f64) -> Self {
        let n = self.dim();
        self.q_plus[(n - 1, 0)] += c(epsilon);
        self
    }

    /// Adds `epsilon` to the last diagonal entry of the stored `h₂`,
    /// leaving every derived quantity untouched.
    #[doc(hidden)]
    pub fn with_shifted_h2(mut self, epsilon: f64) -> Self {
        let n = self.dim();
        let mut h2 = self.h2.into_matrix();
        h2[(n - 1, n - 1)] += c(epsilon);
        self.h2 = HermitianOperator::hermitianize(h2);
        self
    }
}

fn concat_columns(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, a.ncols() + b.ncols());
    out.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(b);
    out
}

fn diagonal_in(basis: &CMatrix, h: &CMatrix) -> Vec<f64> {
    (basis.adjoint() * h * basis).diagonal().iter().map(|z| z.re).collect()
}

/// Norm of the coherence block `P₀ ρ (1 − P₀)` between a zero-mode span and
/// its complement.
pub fn zero_mode_mixing(rho: &CMatrix, zero_modes: &CMatrix) -> f64 {
    if zero_modes.ncols() == 0 {
        return 0.0;
    }
    let p0 = linalg::column_projector(zero_modes);
    let complement = linalg::identity(rho.nrows()) - &p0;
    max_abs(&mul3(&p0, rho, &complement))
}

fn check_beta(beta: Option<&CMatrix>, k: usize) -> Result<CMatrix> {
    let Some(beta) = beta else {
        return Ok(CMatrix::zeros(k, k));
    };
    if beta.nrows() != k || beta.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, found: beta.nrows() });
    }
    let h = HermitianOperator::new(beta.clone())?;
    let spec = spectral_decompose(&h)?;
    if spec.min_eigenvalue() < -1e-10 {
        return Err(Error::NotPsd { eigenvalue: spec.min_eigenvalue() });
    }
    Ok(h.into_matrix())
}

#[allow(clippy::too_many_arguments)]
fn map_density(
    rho: &DensityMatrix,
    n: usize,
    source_zero: &CMatrix,
    target_zero: &CMatrix,
    charge: &CMatrix,
    inv_root: &CMatrix,
    beta: Option<&CMatrix>,
) -> Result<DensityMatrix> {
    if rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.dim() });
    }
    let residual = zero_mode_mixing(rho.matrix(), source_zero);
    if residual > MIXING_TOL {
        return Err(Error::ZeroModeMixing { residual });
    }
    let beta = check_beta(beta, target_zero.ncols())?;
    let left = mul(charge, inv_root);
    let right = left.adjoint();
    let mapped = target_zero * beta * target_zero.adjoint() + mul3(&left, rho.matrix(), &right);
    Ok(DensityMatrix::positive_by_construction(mapped))
}

/// `ρ₂ = Σ β₂ʲᵏ |ψ₊ʲ⟩⟨ψ₊ᵏ| + q⁻ 𝒫(h₁)^{-1/2} ρ₁ 𝒫(h₁)^{-1/2} q⁺`.
///
/// `ρ₁` must not couple the zero modes of `q⁻` to the positive sector.
/// An absent `beta2` means the zero block. The trace target of the result
/// is its actual trace.
pub fn map_density_forward(pair: &SusyPair, rho1: &DensityMatrix, beta2: Option<&CMatrix>) -> Result<DensityMatrix> {
    map_density(
        rho1,
        pair.dim(),
        &pair.zero_modes_minus,
        &pair.zero_modes_plus,
        &pair.q_minus,
        pair.inv_root1.matrix(),
        beta2,
    )
}

/// `ρ₁ = Σ β₁ʲᵏ |ψ₋ʲ⟩⟨ψ₋ᵏ| + q⁺ 𝒫(h₂)^{-1/2} ρ₂ 𝒫(h₂)^{-1/2} q⁻`.
pub fn map_density_backward(pair: &SusyPair, rho2: &DensityMatrix, beta1: Option<&CMatrix>) -> Result<DensityMatrix> {
    map_density(
        rho2,
        pair.dim(),
        &pair.zero_modes_plus,
        &pair.zero_modes_minus,
        &pair.q_plus,
        pair.inv_root2.matrix(),
        beta1,
    )
}

/// `|(Tr ρ₁ − Tr β₁) − (Tr ρ₂ − Tr β₂)|`.
pub fn trace_identity_residual(pair: &SusyPair, rho1: &CMatrix, rho2: &CMatrix) -> f64 {
    let lhs = linalg::trace(rho1).re - linalg::trace(&pair.beta_minus(rho1)).re;
    let rhs = linalg::trace(rho2).re - linalg::trace(&pair.beta_plus(rho2)).re;
    (lhs - rhs).abs()
}

/// Residuals of `√𝒫(h₁)ρ₁q⁺ = q⁺ρ₂√𝒫(h₂)` and `√𝒫(h₂)ρ₂q⁻ = q⁻ρ₁√𝒫(h₁)`.
pub fn density_intertwining_residuals(pair: &SusyPair, rho1: &CMatrix, rho2: &CMatrix) -> [f64; 2] {
    let (r1, r2) = (pair.root1.matrix(), pair.root2.matrix());
    [
        max_abs_diff(&mul3(r1, rho1, &pair.q_plus), &mul3(&pair.q_plus, rho2, r2)),
        max_abs_diff(&mul3(r2, rho2, &pair.q_minus), &mul3(&pair.q_minus, rho1, r1)),
    ]
}

/// Partner FGKLS operator `A₂ = q⁻ 𝒫(h₁)^{-1/2} A₁ 𝒫(h₁)^{-1/2} q⁺`.
pub fn map_lindblad(pair: &SusyPair, a1: &Operator) -> Result<Operator> {
    if a1.dim() != pair.dim() {
        return Err(Error::DimensionMismatch { expected: pair.dim(), found: a1.dim() });
    }
    let r = pair.inv_root1.matrix();
    let left = mul(&pair.q_minus, r);
    Operator::new(mul3(&left, a1.matrix(), &left.adjoint()))
}

/// Reverse map `A₁ = q⁺ 𝒫(h₂)^{-1/2} A₂ 𝒫(h₂)^{-1/2} q⁻`.
pub fn map_lindblad_reverse(pair: &SusyPair, a2: &Operator) -> Result<Operator> {
    if a2.dim() != pair.dim() {
        return Err(Error::DimensionMismatch { expected: pair.dim(), found: a2.dim() });
    }
    let r = pair.inv_root2.matrix();
    let left = mul(&pair.q_plus, r);
    Operator::new(mul3(&left, a2.matrix(), &left.adjoint()))
}

/// Relative residuals of the FGKLS-operator intertwining relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladIntertwining {
    /// `max_j ‖q⁻A₁ʲ√𝒫(h₁) − √𝒫(h₂)A₂ʲq⁻‖ / (1 + ‖A₁ʲ‖‖h₁‖)`
    pub operator: f64,
    /// Same relation for `Σ_j Aʲ†Aʲ`.
    pub dissipation: f64,
}

pub fn check_lindblad_intertwining(
    pair: &SusyPair,
    a1s: &[Operator],
    a2s: &[Operator],
) -> Result<LindbladIntertwining> {
    if a1s.len() != a2s.len() {
        return Err(Error::Invalid("partner operator lists differ in length".into()));
    }
    let n = pair.dim();
    let (r1, r2) = (pair.root1.matrix(), pair.root2.matrix());
    let h_norm = max_abs(pair.h1.matrix());
    let q = &pair.q_minus;
    let mut operator: f64 = 0.0;
    let mut sum1 = CMatrix::zeros(n, n);
    let mut sum2 = CMatrix::zeros(n, n);
    for (a1, a2) in a1s.iter().zip(a2s) {
        for a in [a1, a2] {
            if a.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.dim() });
            }
        }
        let (a1, a2) = (a1.matrix(), a2.matrix());
        let res = max_abs_diff(&mul3(q, a1, r1), &mul3(r2, a2, q));
        operator = operator.max(res / (1.0 + max_abs(a1) * h_norm));
        sum1 += mul(&a1.adjoint(), a1);
        sum2 += mul(&a2.adjoint(), a2);
    }
    let res = max_abs_diff(&mul3(q, &sum1, r1), &mul3(r2, &sum2, q));
    Ok(LindbladIntertwining { operator, dissipation: res / (1.0 + max_abs(&sum1) * h_norm) })
}

/// Block operators on the doubled space `ℋ ⊕ ℋ`.
#[derive(Clone, Debug)]
pub struct SuperOperators {
    /// `diag(h₁, h₂)`
    pub hamiltonian: CMatrix,
    /// `𝒫(H)`, evaluated on the Hamiltonians by the polynomial.
    pub factorization: CMatrix,
    /// `Q`, upper-right block `q⁺`.
    pub q: CMatrix,
    /// `Q̄ = Q†`, lower-left block `q⁻`.
    pub q_bar: CMatrix,
    /// `√𝒫(H)` with the zero modes projected out.
    pub root: CMatrix,
    pub inv_root: CMatrix,
    pub q_n: CMatrix,
    pub q_bar_n: CMatrix,
    /// Projector off the joint zero-mode space.
    pub projector: CMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperAlgebraResidual {
    /// `max(‖Q²‖, ‖Q̄²‖, ‖Qₙ²‖, ‖Q̄ₙ²‖)`
    pub nilpotency: f64,
    /// `max(‖[H,Q]‖, ‖[H,Q̄]‖)`
    pub conservation: f64,
    /// `‖{Q,Q̄} − 𝒫(H)‖`
    pub factorization: f64,
    /// `‖{Qₙ,Q̄ₙ} − Π‖`
    pub normalized: f64,
    /// Left versus right normalization, `‖Q𝒫^{-1/2} − 𝒫^{-1/2}Q‖` and the same for `Q̄`.
    pub normalization_order: f64,
    /// `1 + ‖H‖_max`
    pub scale: f64,
}

pub fn build_super_operators(pair: &SusyPair) -> SuperOperators {
    let n = pair.dim();
    let zero = CMatrix::zeros(n, n);
    let hamiltonian = linalg::block_diag(pair.h1.matrix(), pair.h2.matrix());
    let factorization = linalg::block_diag(
        &pair.factorization.eval_matrix(pair.h1.matrix()),
        &pair.factorization.eval_matrix(pair.h2.matrix()),
    );
    let q = linalg::off_diag(&pair.q_plus, &zero);
    let q_bar = linalg::off_diag(&zero, &pair.q_minus);
    let root = linalg::block_diag(pair.root1.matrix(), pair.root2.matrix());
    let inv_root = linalg::block_diag(pair.inv_root1.matrix(), pair.inv_root2.matrix());
    let q_n = mul(&q, &inv_root);
    let q_bar_n = mul(&q_bar, &inv_root);
    let projector = linalg::block_diag(&pair.positive_projector1(), &pair.positive_projector2());
    SuperOperators { hamiltonian, factorization, q, q_bar, root, inv_root, q_n, q_bar_n, projector }
}

impl SuperOperators {
    pub fn residuals(&self) -> SuperAlgebraResidual {
        let sq = |m: &CMatrix| max_abs(&mul(m, m));
        SuperAlgebraResidual {
            nilpotency: sq(&self.q).max(sq(&self.q_bar)).max(sq(&self.q_n)).max(sq(&self.q_bar_n)),
            conservation: max_abs(&commutator(&self.hamiltonian, &self.q))
                .max(max_abs(&commutator(&self.hamiltonian, &self.q_bar))),
            factorization: max_abs_diff(&anticommutator(&self.q, &self.q_bar), &self.factorization),
            normalized: max_abs_diff(&anticommutator(&self.q_n, &self.q_bar_n), &self.projector),
            normalization_order: max_abs(&commutator(&self.q, &self.inv_root))
                .max(max_abs(&commutator(&self.q_bar, &self.inv_root))),
            scale: 1.0 + max_abs(&self.hamiltonian),
        }
    }

    /// `Q X Q̄ + Q̄ X Q`.
    pub fn charge_sandwich(&self, x: &CMatrix) -> CMatrix {
        mul3(&self.q, x, &self.q_bar) + mul3(&self.q_bar, x, &self.q)
    }

    pub fn normalized_sandwich(&self, x: &CMatrix) -> CMatrix {
        mul3(&self.q_n, x, &self.q_bar_n) + mul3(&self.q_bar_n, x, &self.q_n)
    }

    pub fn root_sandwich(&self, x: &CMatrix) -> CMatrix {
        mul3(&self.root, x, &self.root)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperDensityResidual {
    /// `‖√𝒫ρ̂√𝒫 − (Qρ̂Q̄ + Q̄ρ̂Q)‖`
    pub sandwich: f64,
    /// `‖Q̄ρ̂√𝒫 − √𝒫ρ̂Q̄‖`
    pub intertwine_q_bar: f64,
    /// `‖Qρ̂√𝒫 − √𝒫ρ̂Q‖`
    pub intertwine_q: f64,
    /// `‖[Qₙ, ρ̂]‖`
    pub commute_q_n: f64,
    /// `‖[Q̄ₙ, ρ̂]‖`
    pub commute_q_bar_n: f64,
    /// `‖Πρ̂Π − (Qₙρ̂Q̄ₙ + Q̄ₙρ̂Qₙ)‖`
    pub normalized_sandwich: f64,
}

impl SuperDensityResidual {
    pub fn max(&self) -> f64 {
        [
            self.sandwich,
            self.intertwine_q_bar,
            self.intertwine_q,
            self.commute_q_n,
            self.commute_q_bar_n,
            self.normalized_sandwich,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates the super-density relations for `ρ̂ = diag(ρ₁, ρ₂)`.
///
/// Every relation is reduced to its nonzero `n × n` blocks, so no doubled
/// matrix is formed; [`check_super_density_with`] is the literal block form.
pub fn check_super_density(pair: &SusyPair, rho1: &CMatrix, rho2: &CMatrix) -> Result<SuperDensityResidual> {
    let n = pair.dim();
    for r in [rho1, rho2] {
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: r.nrows() });
        }
    }
    let (qm, qp) = (&pair.q_minus, &pair.q_plus);
    let (r1, r2) = (pair.root1.matrix(), pair.root2.matrix());
    // Upper-right block of Qₙ and lower-left block of Q̄ₙ.
    let x = mul(qp, pair.inv_root2.matrix());
    let y = mul(qm, pair.inv_root1.matrix());
    let (p1, p2) = (pair.positive_projector1(), pair.positive_projector2());
    let diff = |a: CMatrix, b: CMatrix| max_abs_diff(&a, &b);
    Ok(SuperDensityResidual {
        sandwich: diff(mul3(r1, rho1, r1), mul3(qp, rho2, qm)).max(diff(mul3(r2, rho2, r2), mul3(qm, rho1, qp))),
        intertwine_q_bar: diff(mul3(qm, rho1, r1), mul3(r2, rho2, qm)),
        intertwine_q: diff(mul3(qp, rho2, r2), mul3(r1, rho1, qp)),
        commute_q_n: diff(mul(&x, rho2), mul(rho1, &x)),
        commute_q_bar_n: diff(mul(&y, rho1), mul(rho2, &y)),
        normalized_sandwich: diff(mul3(&p1, rho1, &p1), mul3(&x, rho2, &y))
            .max(diff(mul3(&p2, rho2, &p2), mul3(&y, rho1, &x))),
    })
}

/// Literal evaluation on the doubled space with prebuilt block operators.
pub fn check_super_density_with(ops: &SuperOperators, rho1: &CMatrix, rho2: &CMatrix) -> Result<SuperDensityResidual> {
    let n = ops.hamiltonian.nrows() / 2;
    for r in [rho1, rho2] {
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: r.nrows() });
        }
    }
    let rho = linalg::block_diag(rho1, rho2);
    let root = &ops.root;
    Ok(SuperDensityResidual {
        sandwich: max_abs_diff(&ops.root_sandwich(&rho), &ops.charge_sandwich(&rho)),
        intertwine_q_bar: max_abs_diff(&mul3(&ops.q_bar, &rho, root), &mul3(root, &rho, &ops.q_bar)),
        intertwine_q: max_abs_diff(&mul3(&ops.q, &rho, root), &mul3(root, &rho, &ops.q)),
        commute_q_n: max_abs(&commutator(&ops.q_n, &rho)),
        commute_q_bar_n: max_abs(&commutator(&ops.q_bar_n, &rho)),
        normalized_sandwich: max_abs_diff(&mul3(&ops.projector, &rho, &ops.projector), &ops.normalized_sandwich(&rho)),
    })
}

/// Super-notation relations for `Âʲ = diag(A₁ʲ, A₂ʲ)` with
/// `A₂ʲ = map_lindblad(A₁ʲ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperLindbladResidual {
    /// Unnormalized intertwining of `Q̄` with `Â`, of `Q` with `Â†`, and of
    /// both with `Σ Â†Â`, through `√𝒫(H)`.
    pub intertwining: f64,
    /// The same relations with the normalized charges (plain commutators).
    pub normalized: f64,
    /// For Hermitian `Â`: `√𝒫ÂʲÂ√𝒫 = QÂQ̄ + Q̄ÂQ` for each `Â` and for
    /// `Σ Â²`, plus the normalized form on the positive sector. `None`
    /// when some `A₁ʲ` is not Hermitian.
    pub hermitian: Option<f64>,
}

pub fn check_super_lindblad(pair: &SusyPair, a1s: &[Operator]) -> Result<SuperLindbladResidual> {
    let ops = build_super_operators(pair);
    let n = pair.dim();
    let root = &ops.root;
    let mut hats = Vec::with_capacity(a1s.len());
    for a1 in a1s {
        let a2 = map_lindblad(pair, a1)?;
        hats.push(linalg::block_diag(a1.matrix(), a2.matrix()));
    }
    let sum = hats.iter().fold(CMatrix::zeros(2 * n, 2 * n), |acc, a| acc + mul(&a.adjoint(), a));

    let through_root = |charge: &CMatrix, x: &CMatrix| max_abs_diff(&mul3(charge, x, root), &mul3(root, x, charge));
    let mut intertwining = through_root(&ops.q_bar, &sum).max(through_root(&ops.q, &sum));
    let mut normalized = max_abs(&commutator(&ops.q_bar_n, &sum)).max(max_abs(&commutator(&ops.q_n, &sum)));
    for a in &hats {
        let adj = a.adjoint();
        intertwining = intertwining.max(through_root(&ops.q_bar, a)).max(through_root(&ops.q, &adj));
        normalized = normalized.max(max_abs(&commutator(&ops.q_bar_n, a))).max(max_abs(&commutator(&ops.q_n, &adj)));
    }

    let all_hermitian =
        a1s.iter().all(|a| linalg::hermiticity_residual(a.matrix()) <= 1e-12 * (1.0 + max_abs(a.matrix())));
    let hermitian = all_hermitian.then(|| {
        let squares = hats.iter().fold(CMatrix::zeros(2 * n, 2 * n), |acc, a| acc + mul(a, a));
        let p = &ops.projector;
        hats.iter().chain(std::iter::once(&squares)).fold(0.0, |acc: f64, x| {
            acc.max(max_abs_diff(&ops.root_sandwich(x), &ops.charge_sandwich(x)))
                .max(max_abs_diff(&mul3(p, x, p), &ops.normalized_sandwich(x)))
        })
    });
    Ok(SuperLindbladResidual { intertwining, normalized, hermitian })
}
