//! Concrete supersymmetric pairs and the example FGKLS operator families.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{Dissipator, LindbladSet, Profile};
use crate::linalg::{self, c, max_abs, max_abs_diff, CMatrix};
use crate::operator::{apply_function_to, spectral_decompose, Operator, Polynomial, DEFAULT_ZERO_TOL};
use crate::susy::{build_susy_pair, SusyPair};

/// Truncated annihilation operator, `a_{n−1,n} = √n`.
pub fn annihilation_operator(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    a
}

/// Pair with `q⁻ = a` on `n` Fock levels: `h₁ = diag(0, …, n−1)` and
/// `h₂ = diag(1, …, n−1, 0)`. The top level is a zero mode of `q⁺` that
/// exists only because of the truncation.
pub fn build_oscillator(n: usize) -> Result<SusyPair> {
    if n < 2 {
        return Err(Error::Invalid(format!("oscillator needs at least 2 levels (got {n})")));
    }
    build_susy_pair(&Operator::new(annihilation_operator(n))?, DEFAULT_ZERO_TOL)
}

/// Product of Givens rotations by `theta` on neighbouring coordinates,
/// `G(0,1)·G(1,2)···G(n−2,n−1)`. For `n = 2` this is the plain rotation
/// `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation_unitary(n: usize, theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    (0..n.saturating_sub(1)).fold(linalg::identity(n), |acc, k| {
        let mut g = linalg::identity(n);
        g[(k, k)] = c(co);
        g[(k, k + 1)] = c(-s);
        g[(k + 1, k)] = c(s);
        g[(k + 1, k + 1)] = c(co);
        acc * g
    })
}

/// Abstract pair defined by its positive spectrum and the unitary that
/// places the partner eigenstates, `|Ẽ_n⟩ = U e_n`.
#[derive(Clone, Debug)]
pub struct SpectralModelSpec {
    energies: Vec<f64>,
    include_zero_level: bool,
    tilde_unitary: CMatrix,
}

impl SpectralModelSpec {
    pub fn new(energies: Vec<f64>, include_zero_level: bool, tilde_unitary: CMatrix) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::Invalid("spectral model needs at least one energy".into()));
        }
        if energies.iter().any(|&e| !e.is_finite() || e <= 0.0) {
            return Err(Error::Invalid("energies must be finite and strictly positive".into()));
        }
        if energies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("energies must be strictly increasing".into()));
        }
        if tilde_unitary.nrows() != energies.len() || tilde_unitary.ncols() != energies.len() {
            return Err(Error::DimensionMismatch { expected: energies.len(), found: tilde_unitary.nrows() });
        }
        let residual = linalg::unitarity_residual(&tilde_unitary);
        if residual > 1e-12 {
            return Err(Error::NonUnitary { residual });
        }
        Ok(Self { energies, include_zero_level, tilde_unitary })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn include_zero_level(&self) -> bool {
        self.include_zero_level
    }

    pub fn tilde_unitary(&self) -> &CMatrix {
        &self.tilde_unitary
    }
}

/// `q⁻ = Σ_n √E_n |Ẽ_n⟩⟨E_n|` with `|E_n⟩` the coordinate basis.
///
/// With a zero level, `|E_0⟩ = e_0` is annihilated, the positive levels sit
/// at `e_1 … e_N`, and `U` acts on the first `N` coordinates so that the
/// zero mode of `q⁺` is `e_N` (the oscillator layout).
pub fn build_spectral_model(spec: &SpectralModelSpec) -> Result<SusyPair> {
    let n = spec.energies.len();
    let offset = usize::from(spec.include_zero_level);
    let dim = n + offset;
    let mut q = CMatrix::zeros(dim, dim);
    for (k, &e) in spec.energies.iter().enumerate() {
        let root = e.sqrt();
        for i in 0..n {
            q[(i, k + offset)] = spec.tilde_unitary[(i, k)] * root;
        }
    }
    build_susy_pair(&Operator::new(q)?, DEFAULT_ZERO_TOL)
}

/// First-derivative discretization used for the grid supercharge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivativeScheme {
    /// Sinc (band-limited) derivative, `D_ij = (−1)^{i−j} / ((i−j)Δx)`.
    #[default]
    Sinc,
    /// Second-order central differences. Its square decouples even and odd
    /// sites, so every level of `h₁` comes with a partner-spectrum copy.
    Central,
}

/// Uniform grid on `[−L, L]` with `M` points and superpotential samples.
#[derive(Clone, Debug)]
pub struct GridModelSpec {
    half_width: f64,
    points: usize,
    superpotential: Vec<f64>,
    derivative: Vec<f64>,
    scheme: DerivativeScheme,
}

impl GridModelSpec {
    /// Superpotential given by samples; its derivative (for the potential
    /// diagnostics only) is taken by finite differences.
    pub fn new(half_width: f64, points: usize, superpotential: Vec<f64>) -> Result<Self> {
        Self::validate(half_width, points, &superpotential)?;
        let dx = 2.0 * half_width / (points - 1) as f64;
        let w = &superpotential;
        let derivative = (0..points)
            .map(|i| match i {
                0 => (w[1] - w[0]) / dx,
                i if i == points - 1 => (w[i] - w[i - 1]) / dx,
                i => (w[i + 1] - w[i - 1]) / (2.0 * dx),
            })
            .collect();
        Ok(Self { half_width, points, superpotential, derivative, scheme: DerivativeScheme::default() })
    }

    /// `W(x) = Σ_k a_k x^k` sampled on the grid, with the exact derivative.
    pub fn from_polynomial(half_width: f64, points: usize, coefficients: &[f64]) -> Result<Self> {
        if points < 3 {
            return Err(Error::Invalid(format!("grid needs at least 3 points (got {points})")));
        }
        let w = Polynomial::new(coefficients.to_vec());
        let dw = Polynomial::new(coefficients.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect());
        let x = grid_points(half_width, points);
        let superpotential: Vec<f64> = x.iter().map(|&x| w.eval(x)).collect();
        Self::validate(half_width, points, &superpotential)?;
        let derivative = x.iter().map(|&x| dw.eval(x)).collect();
        Ok(Self { half_width, points, superpotential, derivative, scheme: DerivativeScheme::default() })
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn validate(half_width: f64, points: usize, w: &[f64]) -> Result<()> {
        if points < 3 {
            return Err(Error::Invalid(format!("grid needs at least 3 points (got {points})")));
        }
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::Invalid(format!("half width must be positive (got {half_width})")));
        }
        if w.len() != points {
            return Err(Error::DimensionMismatch { expected: points, found: w.len() });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("superpotential samples must be finite".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        grid_points(self.half_width, self.points)
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }
}

fn grid_points(half_width: f64, points: usize) -> Vec<f64> {
    let dx = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|i| -half_width + i as f64 * dx).collect()
}

/// Antisymmetric first-derivative matrix with zero Dirichlet data outside
/// the grid.
pub fn derivative_matrix(points: usize, dx: f64, scheme: DerivativeScheme) -> CMatrix {
    CMatrix::from_fn(points, points, |i, j| {
        let d = i as i64 - j as i64;
        match scheme {
            DerivativeScheme::Central => match d {
                -1 => c(0.5 / dx),
                1 => c(-0.5 / dx),
                _ => c(0.0),
            },
            DerivativeScheme::Sinc => {
                if d == 0 {
                    c(0.0)
                } else {
                    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                    c(sign / (d as f64 * dx))
                }
            }
        }
    })
}

/// Grid pair plus the continuum potentials sampled for comparison.
#[derive(Clone, Debug)]
pub struct GridModel {
    pub pair: SusyPair,
    pub x: Vec<f64>,
    /// `W² − W′`
    pub v1: Vec<f64>,
    /// `W² + W′`
    pub v2: Vec<f64>,
    /// `‖h₁ − (−D² + diag V₁)‖_max`, reported rather than enforced.
    pub discretization_residual: f64,
}

/// `q⁻ = D + diag(W)` (so `q^± = ∓∂ + W`), `q⁺` its exact adjoint.
pub fn build_grid_darboux(spec: &GridModelSpec) -> Result<GridModel> {
    let m = spec.points;
    let d = derivative_matrix(m, spec.spacing(), spec.scheme);
    let q = &d + linalg::real_diagonal(&spec.superpotential);
    let pair = build_susy_pair(&Operator::new(q)?, DEFAULT_ZERO_TOL)?;

    let (v1, v2): (Vec<f64>, Vec<f64>) =
        spec.superpotential.iter().zip(&spec.derivative).map(|(w, dw)| (w * w - dw, w * w + dw)).unzip();
    let continuum = -linalg::mul(&d, &d) + linalg::real_diagonal(&v1);
    let discretization_residual = max_abs_diff(pair.h1().matrix(), &continuum);
    Ok(GridModel { pair, x: spec.grid(), v1, v2, discretization_residual })
}

/// The four example dissipator families.
#[derive(Clone, Debug, PartialEq)]
pub enum ExampleLindbladSpec {
    /// `A₁ʲ = fⱼ(h₁)`, `A₂ʲ = fⱼ(h₂)` for real polynomials `fⱼ`.
    FunctionOfH(Vec<Polynomial>),
    /// `A = Σ_s γ_s(t)|E_s⟩⟨E_s|` on two levels of `h₁` (indices into its
    /// ascending spectrum) and the same profiles on `|Ẽ_s⟩`.
    ProjectorPair { gammas: [Profile; 2], levels: [usize; 2] },
    /// `A₁ = A₂ = Δ q⁻ 𝒫(h₁)^{-1/2}`; requires a pair without zero modes.
    SuperchargeBuilt { delta: f64 },
    /// `A₁ = (1 − P₀) Δ q⁻ 𝒫(h₁)^{-1/2}`, `A₂ = Δ q⁻ 𝒫(h₁)^{-1/2}` where `P₀`
    /// projects on the zero modes of `q⁻`.
    SuperchargeBuiltZeroMode { delta: f64 },
}

/// Builds the partner FGKLS operator sets `(for h₁, for h₂)`.
pub fn build_example_lindblads(pair: &SusyPair, spec: &ExampleLindbladSpec) -> Result<(LindbladSet, LindbladSet)> {
    match spec {
        ExampleLindbladSpec::FunctionOfH(fs) => {
            let spec2 = spectral_decompose(pair.h2())?;
            let mut a1 = Vec::with_capacity(fs.len());
            let mut a2 = Vec::with_capacity(fs.len());
            for f in fs {
                a1.push(apply_function_to(pair.spectrum1(), |x| f.eval(x))?.as_operator().clone());
                a2.push(apply_function_to(&spec2, |x| f.eval(x))?.as_operator().clone());
            }
            Ok((LindbladSet::new(a1)?, LindbladSet::new(a2)?))
        }
        ExampleLindbladSpec::ProjectorPair { gammas, levels } => {
            let spec1 = pair.spectrum1();
            let mut terms1 = Vec::with_capacity(2);
            let mut terms2 = Vec::with_capacity(2);
            for (gamma, &level) in gammas.iter().zip(levels) {
                if level >= pair.dim() {
                    return Err(Error::Invalid(format!("level {level} outside dimension {}", pair.dim())));
                }
                let e = spec1.eigenvector(level);
                let tilde = pair.partner_state(&e, spec1.eigenvalues()[level])?;
                terms1.push((gamma.clone(), Operator::new(&e * e.adjoint())?));
                terms2.push((gamma.clone(), Operator::new(&tilde * tilde.adjoint())?));
            }
            Ok((
                LindbladSet::from_dissipators(vec![Dissipator::combination(terms1)?])?,
                LindbladSet::from_dissipators(vec![Dissipator::combination(terms2)?])?,
            ))
        }
        ExampleLindbladSpec::SuperchargeBuilt { delta } => {
            if pair.zero_mode_count() > 0 {
                return Err(Error::ZeroModesPresent { count: pair.zero_mode_count() });
            }
            let left = linalg::mul(pair.q_minus(), pair.inv_root1().matrix()) * c(*delta);
            let right = linalg::mul(pair.inv_root2().matrix(), pair.q_minus()) * c(*delta);
            let residual = max_abs_diff(&left, &right);
            if residual > 1e-10 * (1.0 + max_abs(&left)) {
                return Err(Error::Invalid(format!(
                    "supercharge dissipator orderings disagree (residual {residual:.3e})"
                )));
            }
            let a = Operator::new(left)?;
            Ok((LindbladSet::new(vec![a.clone()])?, LindbladSet::new(vec![a])?))
        }
        ExampleLindbladSpec::SuperchargeBuiltZeroMode { delta } => {
            let a2 = linalg::mul(pair.q_minus(), pair.inv_root1().matrix()) * c(*delta);
            let a1 = linalg::mul(&pair.positive_projector1(), &a2);
            Ok((LindbladSet::new(vec![Operator::new(a1)?])?, LindbladSet::new(vec![Operator::new(a2)?])?))
        }
    }
}

/// Lindbladian of the two-level projector dissipator written out in the
/// energy basis as three terms:
///
/// `Σ_{s,u} γ_s r_su γ_u* |E_s⟩⟨E_u| − ½ Σ_s Σ_n r_ns |γ_s|² |E_n⟩⟨E_s|
///  − ½ Σ_s Σ_m r_sm |γ_s|² |E_s⟩⟨E_m|`.
///
/// `r` holds the coefficients in a basis whose indices `levels` are the two
/// projected states; the result is in the same basis.
pub fn projector_pair_lindbladian(r: &CMatrix, gammas: [Complex64; 2], levels: [usize; 2]) -> CMatrix {
    let n = r.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (gs, &s) in gammas.iter().zip(&levels) {
        for (gu, &u) in gammas.iter().zip(&levels) {
            out[(s, u)] += gs * r[(s, u)] * gu.conj();
        }
    }
    for (g, &s) in gammas.iter().zip(&levels) {
        let w = 0.5 * g.norm_sqr();
        for k in 0..n {
            out[(k, s)] -= r[(k, s)] * w;
            out[(s, k)] -= r[(s, k)] * w;
        }
    }
    out
}
