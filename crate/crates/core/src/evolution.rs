//! FGKLS master-equation dynamics: the Lindbladian, fixed-step RK4, an
//! exact superoperator propagator used as an oracle, and energy-basis
//! coefficient equations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, mul, mul3, CMatrix, I};
use crate::operator::{
    entropy_of_spectrum, spectral_decompose, DensityMatrix, HermitianOperator, Operator, SpectralDecomposition,
};

/// Largest Hilbert-space dimension accepted by [`evolve_exact`]; the
/// generator is `dim² × dim²`.
pub const MAX_EXACT_DIM: usize = 64;

const UNITARY_OVERLAP_TOL: f64 = 1e-10;

/// Scalar time profile `γ(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Constant(Complex64),
    /// `start + (end − start)(1 − e^{−rate·t})`
    ExponentialRamp {
        start: Complex64,
        end: Complex64,
        rate: f64,
    },
    /// `offset + amplitude · sin(frequency·t + phase)`
    Sinusoid {
        offset: Complex64,
        amplitude: Complex64,
        frequency: f64,
        phase: f64,
    },
}

impl Profile {
    pub fn value(&self, t: f64) -> Complex64 {
        match *self {
            Profile::Constant(v) => v,
            Profile::ExponentialRamp { start, end, rate } => start + (end - start) * (1.0 - (-rate * t).exp()),
            Profile::Sinusoid { offset, amplitude, frequency, phase } => {
                offset + amplitude * (frequency * t + phase).sin()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Constant(_) => true,
            Profile::ExponentialRamp { start, end, rate } => start == end || *rate == 0.0,
            Profile::Sinusoid { amplitude, frequency, .. } => amplitude.norm() == 0.0 || *frequency == 0.0,
        }
    }
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant(c(1.0))
    }
}

/// One FGKLS operator `A(t) = Σ_k γ_k(t) B_k`. The common case is a single
/// term with a constant unit profile.
#[derive(Clone, Debug)]
pub struct Dissipator {
    terms: Vec<(Profile, CMatrix)>,
    cached: Option<Cached>,
}

#[derive(Clone, Debug)]
struct Cached {
    a: CMatrix,
    a_dag: CMatrix,
    a_dag_a: CMatrix,
}

impl Cached {
    fn new(a: CMatrix) -> Self {
        let a_dag = a.adjoint();
        let a_dag_a = mul(&a_dag, &a);
        Self { a, a_dag, a_dag_a }
    }
}

impl Dissipator {
    pub fn constant(a: Operator) -> Self {
        Self::profiled(a, Profile::default())
    }

    pub fn profiled(a: Operator, profile: Profile) -> Self {
        Self::assemble(vec![(profile, a.into_matrix())])
    }

    /// `A(t) = Σ_k γ_k(t) B_k`; all `B_k` must share one dimension.
    pub fn combination(terms: Vec<(Profile, Operator)>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::Invalid("a dissipator needs at least one term".into()));
        };
        let n = first.1.dim();
        if let Some((_, bad)) = terms.iter().find(|(_, b)| b.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
        }
        Ok(Self::assemble(terms.into_iter().map(|(p, b)| (p, b.into_matrix())).collect()))
    }

    fn assemble(terms: Vec<(Profile, CMatrix)>) -> Self {
        let mut out = Self { terms, cached: None };
        if out.is_time_independent() {
            out.cached = Some(Cached::new(out.at(0.0)));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.terms[0].1.nrows()
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|(p, _)| p.is_constant())
    }

    pub fn terms(&self) -> &[(Profile, CMatrix)] {
        &self.terms
    }

    /// The operator at time `t`.
    pub fn at(&self, t: f64) -> CMatrix {
        let n = self.dim();
        self.terms.iter().fold(CMatrix::zeros(n, n), |acc, (p, b)| acc + b * p.value(t))
    }

    fn evaluated(&self, t: f64) -> std::borrow::Cow<'_, Cached> {
        match &self.cached {
            Some(cached) => std::borrow::Cow::Borrowed(cached),
            None => std::borrow::Cow::Owned(Cached::new(self.at(t))),
        }
    }
}

/// The collection `{Aʲ}` of FGKLS operators for one system.
#[derive(Clone, Debug, Default)]
pub struct LindbladSet {
    dissipators: Vec<Dissipator>,
}

impl LindbladSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Constant operators with unit profiles.
    pub fn new(operators: Vec<Operator>) -> Result<Self> {
        Self::from_dissipators(operators.into_iter().map(Dissipator::constant).collect())
    }

    /// `γʲ(t) Aʲ` for each pair.
    pub fn with_profiles(operators: Vec<Operator>, profiles: Vec<Profile>) -> Result<Self> {
        if operators.len() != profiles.len() {
            return Err(Error::Invalid(format!("{} operators but {} profiles", operators.len(), profiles.len())));
        }
        Self::from_dissipators(operators.into_iter().zip(profiles).map(|(a, p)| Dissipator::profiled(a, p)).collect())
    }

    pub fn from_dissipators(dissipators: Vec<Dissipator>) -> Result<Self> {
        if let Some(first) = dissipators.first() {
            let n = first.dim();
            if let Some(bad) = dissipators.iter().find(|d| d.dim() != n) {
                return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
            }
        }
        Ok(Self { dissipators })
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    pub fn len(&self) -> usize {
        self.dissipators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dissipators.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dissipators.first().map(Dissipator::dim)
    }

    pub fn is_time_independent(&self) -> bool {
        self.dissipators.iter().all(Dissipator::is_time_independent)
    }

    /// Operators evaluated at `t`.
    pub fn operators_at(&self, t: f64) -> Vec<CMatrix> {
        self.dissipators.iter().map(|d| d.at(t)).collect()
    }

    /// Checks every profile is finite on `[t0, t1]` (sampled densely).
    pub fn check_window(&self, t0: f64, t1: f64) -> Result<()> {
        const SAMPLES: usize = 64;
        for d in &self.dissipators {
            for (p, _) in &d.terms {
                for k in 0..=SAMPLES {
                    let t = t0 + (t1 - t0) * k as f64 / SAMPLES as f64;
                    let v = p.value(t);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::Invalid(format!("profile is not finite at t = {t}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest `‖Aʲ(t)‖_max²`, the natural scale of `L[ρ]`.
    pub fn scale_at(&self, t: f64) -> f64 {
        self.dissipators.iter().map(|d| max_abs(&d.at(t)).powi(2)).fold(0.0, f64::max)
    }
}

/// `L[ρ] = Σⱼ (AʲρAʲ† − ½ρAʲ†Aʲ − ½Aʲ†Aʲρ)` with `Aʲ = Aʲ(t)`.
pub fn lindbladian(rho: &CMatrix, dissipators: &LindbladSet, t: f64) -> Result<CMatrix> {
    let n = rho.nrows();
    if let Some(d) = dissipators.dim() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: d, found: n });
        }
    }
    Ok(lindbladian_unchecked(rho, dissipators, t))
}

fn lindbladian_unchecked(rho: &CMatrix, dissipators: &LindbladSet, t: f64) -> CMatrix {
    let n = rho.nrows();
    let mut out = CMatrix::zeros(n, n);
    for d in &dissipators.dissipators {
        let e = d.evaluated(t);
        out += mul3(&e.a, rho, &e.a_dag);
        out -= (mul(rho, &e.a_dag_a) + mul(&e.a_dag_a, rho)).scale(0.5);
    }
    out
}

/// Hermitian Hamiltonian plus its FGKLS operators.
#[derive(Clone, Debug)]
pub struct FgklsSystem {
    hamiltonian: HermitianOperator,
    dissipators: LindbladSet,
}

impl FgklsSystem {
    pub fn new(hamiltonian: HermitianOperator, dissipators: LindbladSet) -> Result<Self> {
        if let Some(d) = dissipators.dim() {
            if d != hamiltonian.dim() {
                return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: d });
            }
        }
        Ok(Self { hamiltonian, dissipators })
    }

    pub fn closed(hamiltonian: HermitianOperator) -> Self {
        Self { hamiltonian, dissipators: LindbladSet::empty() }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &LindbladSet {
        &self.dissipators
    }
}

/// `−i[H, ρ] + L[ρ]`.
pub fn fgkls_rhs(rho: &CMatrix, system: &FgklsSystem, t: f64) -> Result<CMatrix> {
    if rho.nrows() != system.dim() || rho.ncols() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: rho.nrows() });
    }
    Ok(rhs_unchecked(rho, system, t))
}

fn rhs_unchecked(rho: &CMatrix, system: &FgklsSystem, t: f64) -> CMatrix {
    let h = system.hamiltonian.matrix();
    let commutator = mul(h, rho) - mul(rho, h);
    commutator * -I + lindbladian_unchecked(rho, &system.dissipators, t)
}

/// Uniform grid `t0 + k·(t1 − t0)/steps`, sampled every `sample_every`
/// steps (the final step is always sampled).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub sample_every: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize, sample_every: usize) -> Result<Self> {
        let ordered = t0.is_finite() && t1.is_finite() && t1 > t0;
        if !ordered {
            return Err(Error::Invalid(format!("time window needs t1 > t0 (got {t0}, {t1})")));
        }
        if steps == 0 || sample_every == 0 {
            return Err(Error::Invalid("steps and sample_every must be positive".into()));
        }
        Ok(Self { t0, t1, steps, sample_every })
    }

    /// Grid with step `h` from `t0` to `t1`, rounding the step count.
    pub fn with_step(t0: f64, t1: f64, h: f64, sample_every: usize) -> Result<Self> {
        let steps = ((t1 - t0) / h).round() as usize;
        Self::new(t0, t1, steps.max(1), sample_every)
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn is_sample(&self, k: usize) -> bool {
        k.is_multiple_of(self.sample_every) || k == self.steps
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.steps).filter(|&k| self.is_sample(k)).map(|k| self.time(k)).collect()
    }
}

/// Sampled trajectory with per-sample diagnostics.
#[derive(Clone, Debug, Default)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<HermitianOperator>,
    /// `Tr ρ(t) − Tr ρ(t0)`
    pub trace_drift: Vec<f64>,
    pub min_eig: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl EvolutionResult {
    fn push(&mut self, t: f64, state: HermitianOperator, initial_trace: f64) -> Result<()> {
        let spec = spectral_decompose(&state)?;
        self.times.push(t);
        self.trace_drift.push(linalg::trace(state.matrix()).re - initial_trace);
        self.min_eig.push(spec.min_eigenvalue());
        self.entropy.push(entropy_of_spectrum(spec.eigenvalues()));
        self.states.push(state);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&HermitianOperator> {
        self.states.last()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.trace_drift.iter().fold(0.0, |acc, d| acc.max(d.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One classic fourth-order Runge–Kutta step for `dy/dt = f(t, y)`.
pub fn rk4_step(y: &CMatrix, t: f64, h: f64, f: impl Fn(f64, &CMatrix) -> CMatrix) -> CMatrix {
    let half = h / 2.0;
    let k1 = f(t, y);
    let k2 = f(t + half, &(y + &k1 * c(half)));
    let k3 = f(t + half, &(y + &k2 * c(half)));
    let k4 = f(t + h, &(y + &k3 * c(h)));
    y + (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0)
}

/// Fixed-step RK4 integration of the master equation, Hermitianizing after
/// every step. Positivity is monitored, never enforced.
pub fn evolve_rk4(system: &FgklsSystem, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<EvolutionResult> {
    if rho0.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: rho0.dim() });
    }
    system.dissipators.check_window(grid.t0, grid.t1)?;
    let h = grid.step();
    let initial_trace = linalg::trace(rho0.matrix()).re;
    let mut result = EvolutionResult::default();
    let mut rho = rho0.matrix().clone();
    result.push(grid.t0, rho0.as_hermitian().clone(), initial_trace)?;
    for k in 1..=grid.steps {
        let t = grid.time(k - 1);
        let next = rk4_step(&rho, t, h, |s, y| rhs_unchecked(y, system, s));
        rho = linalg::hermitian_part(&next);
        if !linalg::all_finite(&rho) {
            return Err(Error::Divergence { step: k });
        }
        if grid.is_sample(k) {
            result.push(grid.time(k), HermitianOperator::hermitianize(rho.clone()), initial_trace)?;
        }
    }
    Ok(result)
}

/// The `n² × n²` generator of the master equation acting on column-stacked
/// density matrices. Only time-independent dissipators are accepted.
pub fn liouvillian_matrix(system: &FgklsSystem) -> Result<CMatrix> {
    if !system.dissipators.is_time_independent() {
        return Err(Error::TimeDependentProfile);
    }
    let n = system.dim();
    let id = linalg::identity(n);
    let h = system.hamiltonian.matrix();
    let mut g = linalg::kron(&id, h) * -I + linalg::kron(&h.transpose(), &id) * I;
    for a in system.dissipators.operators_at(0.0) {
        let ada = a.adjoint() * &a;
        g += linalg::kron(&a.conjugate(), &a);
        g -= (linalg::kron(&id, &ada) + linalg::kron(&ada.transpose(), &id)).scale(0.5);
    }
    Ok(g)
}

/// Exact propagation `vec ρ(t) = exp(𝓛 t) vec ρ(0)` at each elapsed time
/// in `times`.
pub fn evolve_exact(system: &FgklsSystem, rho0: &DensityMatrix, times: &[f64]) -> Result<EvolutionResult> {
    let n = system.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho0.dim() });
    }
    if n > MAX_EXACT_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_EXACT_DIM });
    }
    let g = liouvillian_matrix(system)?;
    let v0 = linalg::vectorize(rho0.matrix());
    let initial_trace = linalg::trace(rho0.matrix()).re;
    let mut result = EvolutionResult::default();
    for &t in times {
        let state = if t == 0.0 {
            rho0.as_hermitian().clone()
        } else {
            let v = (&g * c(t)).exp() * &v0;
            HermitianOperator::hermitianize(linalg::unvectorize(&v, n))
        };
        result.push(t, state, initial_trace)?;
    }
    Ok(result)
}

/// `r_mn = ⟨E_m|ρ|E_n⟩` over an orthonormal (possibly partial) basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix(CMatrix);

impl CoefficientMatrix {
    pub fn new(r: CMatrix) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::NotSquare { rows: r.nrows(), cols: r.ncols() });
        }
        Ok(Self(r))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.0[(m, n)]
    }

    /// `Σ r_mn |E_m⟩⟨E_n|`.
    pub fn reconstruct(&self, basis: &CMatrix) -> CMatrix {
        mul3(basis, &self.0, &basis.adjoint())
    }
}

pub fn coefficients_in_basis(rho: &CMatrix, basis: &CMatrix) -> Result<CoefficientMatrix> {
    if basis.nrows() != rho.nrows() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), found: basis.nrows() });
    }
    Ok(CoefficientMatrix(mul3(&basis.adjoint(), rho, basis)))
}

pub fn coefficients_in_eigenbasis(rho: &CMatrix, basis: &SpectralDecomposition) -> Result<CoefficientMatrix> {
    coefficients_in_basis(rho, basis.eigenvectors())
}

/// Closed-form coefficients for dissipators that are real functions of
/// the Hamiltonian:
/// `r_mn(t) = r_mn(0) · exp{[−i(E_m−E_n) − ½ Σⱼ (fⱼ(E_n) − fⱼ(E_m))²] t}`.
pub fn example1_analytic_coefficients(
    r0: &CoefficientMatrix,
    energies: &[f64],
    fs: &[&dyn Fn(f64) -> f64],
    t: f64,
) -> Result<CoefficientMatrix> {
    let n = r0.dim();
    if energies.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: energies.len() });
    }
    let values: Vec<Vec<f64>> = fs.iter().map(|f| energies.iter().map(|&e| f(e)).collect()).collect();
    for (fv, _) in values.iter().zip(fs) {
        if let Some((k, _)) = fv.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain { eigenvalue: energies[k] });
        }
    }
    let r = CMatrix::from_fn(n, n, |m, k| {
        let damping: f64 = values.iter().map(|fv| (fv[k] - fv[m]).powi(2)).sum::<f64>() * 0.5;
        let rate = Complex64::new(-damping, -(energies[m] - energies[k]));
        r0.0[(m, k)] * (rate * t).exp()
    });
    Ok(CoefficientMatrix(r))
}

fn check_square(r: &CMatrix, energies: &[f64], overlaps: &CMatrix) -> Result<()> {
    let n = energies.len();
    for found in [r.nrows(), r.ncols(), overlaps.nrows(), overlaps.ncols()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    Ok(())
}

/// Coefficient equation for the supercharge-built dissipator
/// `A = Δ Σ_n |Ẽ_n⟩⟨E_n|` with a unitary overlap matrix `O_mk = ⟨E_m|Ẽ_k⟩`:
///
/// `dr_mn/dt = −i r_mn (E_m − E_n − iΔ²) + Δ² Σ_kl r_kl O_mk O*_nl`.
pub fn example3_coefficient_rhs(r: &CMatrix, energies: &[f64], overlaps: &CMatrix, delta: f64) -> Result<CMatrix> {
    check_square(r, energies, overlaps)?;
    let residual = linalg::unitarity_residual(overlaps);
    if residual > UNITARY_OVERLAP_TOL {
        return Err(Error::NonUnitary { residual });
    }
    let n = energies.len();
    let d2 = delta * delta;
    let feed = overlaps * r * overlaps.adjoint();
    Ok(CMatrix::from_fn(n, n, |m, k| {
        -I * r[(m, k)] * Complex64::new(energies[m] - energies[k], -d2) + feed[(m, k)] * d2
    }))
}

/// Same dissipator with an arbitrary (contractive) overlap matrix, as
/// arises when a projector removes zero modes:
///
/// `dr/dt = −i[E, r] + Δ² (O r O† − ½{O†O, r})`.
///
/// Coincides with [`example3_coefficient_rhs`] when `O` is unitary.
pub fn overlap_coefficient_rhs(r: &CMatrix, energies: &[f64], overlaps: &CMatrix, delta: f64) -> Result<CMatrix> {
    check_square(r, energies, overlaps)?;
    let n = energies.len();
    let d2 = delta * delta;
    let oo = overlaps.adjoint() * overlaps;
    let dissipative = (overlaps * r * overlaps.adjoint() - (&oo * r + r * &oo).scale(0.5)) * c(d2);
    let coherent = CMatrix::from_fn(n, n, |m, k| -I * r[(m, k)] * (energies[m] - energies[k]));
    Ok(coherent + dissipative)
}

/// RK4 for an autonomous coefficient equation; returns `(t, r)` at every
/// sample of `grid`.
pub fn integrate_coefficients(
    r0: &CMatrix,
    grid: &TimeGrid,
    rhs: impl Fn(&CMatrix) -> Result<CMatrix>,
) -> Result<Vec<(f64, CMatrix)>> {
    rhs(r0)?;
    let h = grid.step();
    let mut r = r0.clone();
    let mut out = vec![(grid.t0, r.clone())];
    for k in 1..=grid.steps {
        r = rk4_step(&r, grid.time(k - 1), h, |_, y| rhs(y).expect("validated on the initial state"));
        if !linalg::all_finite(&r) {
            return Err(Error::Divergence { step: k });
        }
        if grid.is_sample(k) {
            out.push((grid.time(k), r.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, real_diagonal};
    use crate::random::{random_density, random_hermitian, random_operator, random_unitary, seeded};

    fn lowering() -> CMatrix {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(1.0);
        a
    }

    fn ket(n: usize, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = c(1.0);
        m
    }

    fn coherent_pair(n: usize, i: usize, j: usize) -> DensityMatrix {
        let mut v = crate::linalg::CVector::zeros(n);
        v[i] = c(0.6);
        v[j] = Complex64::new(0.0, 0.8);
        DensityMatrix::pure(&v).unwrap()
    }

    fn set(ops: Vec<CMatrix>) -> LindbladSet {
        LindbladSet::new(ops.into_iter().map(|a| Operator::new(a).unwrap()).collect()).unwrap()
    }

    fn random_system(n: usize, seed: u64) -> FgklsSystem {
        let mut rng = seeded(seed);
        let h = random_hermitian(n, 1.0, &mut rng);
        let ops = (0..2).map(|_| random_operator(n, 0.5, &mut rng)).collect();
        FgklsSystem::new(h, set(ops)).unwrap()
    }

    fn max_state_error(a: &EvolutionResult, b: &EvolutionResult) -> f64 {
        let last = |r: &EvolutionResult| r.final_state().unwrap().matrix().clone();
        max_abs_diff(&last(a), &last(b))
    }

    #[test]
    fn identity_dissipator_is_silent() {
        let mut rng = seeded(1);
        let rho = random_density(3, &mut rng);
        let l = lindbladian(rho.matrix(), &set(vec![linalg::identity(3)]), 0.0).unwrap();
        assert!(max_abs(&l) < 1e-15);
    }

    #[test]
    fn two_level_decay_term() {
        let l = lindbladian(&ket(2, 1), &set(vec![lowering()]), 0.0).unwrap();
        assert!(max_abs_diff(&l, &(ket(2, 0) - ket(2, 1))) < 1e-15);
    }

    #[test]
    fn lindbladian_is_traceless() {
        let mut rng = seeded(2);
        for n in [2, 3, 5, 8] {
            let rho = random_density(n, &mut rng);
            let ops: Vec<CMatrix> = (0..3).map(|_| random_operator(n, 2.0, &mut rng)).collect();
            let dissipators = set(ops);
            let l = lindbladian(rho.matrix(), &dissipators, 0.0).unwrap();
            let scale = 1.0 + max_abs(rho.matrix()) * dissipators.scale_at(0.0);
            assert!(linalg::trace(&l).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn lindbladian_rejects_mismatched_dimension() {
        let r = lindbladian(&ket(3, 0), &set(vec![lowering()]), 0.0);
        assert_eq!(r, Err(Error::DimensionMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn stationary_eigenstate() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.5, 3.0]);
        let system = FgklsSystem::closed(h);
        assert_eq!(max_abs(&fgkls_rhs(&ket(3, 1), &system, 0.0).unwrap()), 0.0);
    }

    #[test]
    fn rhs_without_hamiltonian_is_lindbladian() {
        let mut rng = seeded(3);
        let rho = random_density(4, &mut rng);
        let dissipators = set(vec![random_operator(4, 1.0, &mut rng)]);
        let system = FgklsSystem::new(HermitianOperator::zeros(4), dissipators.clone()).unwrap();
        let lhs = fgkls_rhs(rho.matrix(), &system, 0.3).unwrap();
        let rhs = lindbladian(rho.matrix(), &dissipators, 0.3).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-15);
    }

    #[test]
    fn commutator_rotates_coherence_phase() {
        let omega = 1.7;
        let system = FgklsSystem::closed(HermitianOperator::from_real_diagonal(&[0.0, omega]));
        let rho = coherent_pair(2, 0, 1);
        let d = fgkls_rhs(rho.matrix(), &system, 0.0).unwrap();
        let expected = I * omega * rho.matrix()[(0, 1)];
        assert!((d[(0, 1)] - expected).norm() < 1e-15);
    }

    #[test]
    fn rhs_preserves_hermiticity() {
        let system = random_system(5, 4);
        let rho = random_density(5, &mut seeded(5));
        let d = fgkls_rhs(rho.matrix(), &system, 0.0).unwrap();
        assert!(linalg::hermiticity_residual(&d) < 1e-12);
    }

    #[test]
    fn closed_eigenstate_trajectory_is_constant() {
        let system = FgklsSystem::closed(HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0]));
        let rho0 = DensityMatrix::pure(&crate::linalg::CVector::from_vec(vec![c(0.0), c(1.0), c(0.0)])).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 200, 10).unwrap();
        let result = evolve_rk4(&system, &rho0, &grid).unwrap();
        assert_eq!(result.len(), 21);
        for state in &result.states {
            assert!(max_abs_diff(state.matrix(), rho0.matrix()) < 1e-12);
        }
    }

    #[test]
    fn dephasing_two_level_matches_closed_form() {
        let energies = [0.0, 1.0];
        let h = HermitianOperator::from_real_diagonal(&energies);
        let system = FgklsSystem::new(h, set(vec![real_diagonal(&energies)])).unwrap();
        let rho0 = coherent_pair(2, 0, 1);
        let grid = TimeGrid::new(0.0, 3.0, 3000, 500).unwrap();
        let result = evolve_rk4(&system, &rho0, &grid).unwrap();
        for (t, state) in result.times.iter().zip(&result.states) {
            let expected = rho0.matrix()[(0, 1)].norm() * (-0.5 * t).exp();
            assert!((state.matrix()[(0, 1)].norm() - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_matches_exact_propagator() {
        let system = random_system(4, 6);
        let rho0 = random_density(4, &mut seeded(7));
        let grid = TimeGrid::with_step(0.0, 1.0, 1e-3, 1000).unwrap();
        let rk = evolve_rk4(&system, &rho0, &grid).unwrap();
        let exact = evolve_exact(&system, &rho0, &[1.0]).unwrap();
        assert!(max_state_error(&rk, &exact) < 1e-6);
        assert!(rk.max_trace_drift() < 1e-10);
        assert!(exact.max_trace_drift() < 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let system = random_system(4, 8);
        let rho0 = random_density(4, &mut seeded(9));
        let t1 = 2.0;
        let exact = evolve_exact(&system, &rho0, &[t1]).unwrap();
        let error = |steps: usize| {
            let grid = TimeGrid::new(0.0, t1, steps, steps).unwrap();
            max_state_error(&evolve_rk4(&system, &rho0, &grid).unwrap(), &exact)
        };
        let ratio = error(50) / error(100);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn exact_at_zero_returns_initial_state() {
        let system = random_system(3, 10);
        let rho0 = random_density(3, &mut seeded(11));
        let result = evolve_exact(&system, &rho0, &[0.0]).unwrap();
        assert_eq!(result.states[0].matrix(), rho0.matrix());
    }

    #[test]
    fn exact_two_level_decay() {
        let system = FgklsSystem::new(HermitianOperator::zeros(2), set(vec![lowering()])).unwrap();
        let rho0 = DensityMatrix::new(ket(2, 1), 1.0).unwrap();
        let result = evolve_exact(&system, &rho0, &[1.3, 40.0]).unwrap();
        let p = (-1.3f64).exp();
        assert!(max_abs_diff(result.states[0].matrix(), &real_diagonal(&[1.0 - p, p])) < 1e-12);
        assert!(max_abs_diff(result.states[1].matrix(), &ket(2, 0)) < 1e-8);
    }

    #[test]
    fn exact_closed_system_is_unitary_conjugation() {
        let mut rng = seeded(12);
        let h = random_hermitian(5, 1.0, &mut rng);
        let rho0 = random_density(5, &mut rng);
        let t = 0.8;
        let spec = spectral_decompose(&h).unwrap();
        let v = spec.eigenvectors();
        let phases = CMatrix::from_diagonal(&crate::linalg::CVector::from_iterator(
            5,
            spec.eigenvalues().iter().map(|&e| (-I * e * t).exp()),
        ));
        let u = v * phases * v.adjoint();
        let expected = &u * rho0.matrix() * u.adjoint();
        let result = evolve_exact(&FgklsSystem::closed(h), &rho0, &[t]).unwrap();
        assert!(max_abs_diff(result.states[0].matrix(), &expected) < 1e-10);
    }

    #[test]
    fn exact_rejects_profiles_and_large_systems() {
        let a = Operator::new(lowering()).unwrap();
        let ramp = Profile::ExponentialRamp { start: c(0.0), end: c(1.0), rate: 1.0 };
        let dissipators = LindbladSet::with_profiles(vec![a], vec![ramp]).unwrap();
        let system = FgklsSystem::new(HermitianOperator::zeros(2), dissipators).unwrap();
        let rho0 = DensityMatrix::new(ket(2, 1), 1.0).unwrap();
        assert_eq!(evolve_exact(&system, &rho0, &[1.0]).unwrap_err(), Error::TimeDependentProfile);

        let n = MAX_EXACT_DIM + 1;
        let big = FgklsSystem::closed(HermitianOperator::zeros(n));
        let rho = DensityMatrix::new(ket(n, 0), 1.0).unwrap();
        assert_eq!(evolve_exact(&big, &rho, &[1.0]).unwrap_err(), Error::TooLarge { dim: n, max: MAX_EXACT_DIM });
    }

    #[test]
    fn ramped_dephasing_matches_integrated_rate() {
        let (a, b, k) = (0.2, 1.0, 1.5);
        let sz = Operator::new(real_diagonal(&[1.0, -1.0])).unwrap();
        let profile = Profile::ExponentialRamp { start: c(a), end: c(b), rate: k };
        let dissipators = LindbladSet::with_profiles(vec![sz], vec![profile]).unwrap();
        let system = FgklsSystem::new(HermitianOperator::zeros(2), dissipators).unwrap();
        let rho0 = coherent_pair(2, 0, 1);
        let grid = TimeGrid::new(0.0, 2.0, 2000, 250).unwrap();
        let result = evolve_rk4(&system, &rho0, &grid).unwrap();
        let integral = |t: f64| {
            b * b * t
                + 2.0 * b * (a - b) * (1.0 - (-k * t).exp()) / k
                + (a - b).powi(2) * (1.0 - (-2.0 * k * t).exp()) / (2.0 * k)
        };
        for (t, state) in result.times.iter().zip(&result.states) {
            let expected = rho0.matrix()[(0, 1)] * (-2.0 * integral(*t)).exp();
            assert!((state.matrix()[(0, 1)] - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn sinusoid_and_ramp_profiles() {
        let p = Profile::Sinusoid { offset: c(1.0), amplitude: I, frequency: 2.0, phase: 0.5 };
        let t = 0.3f64;
        assert!((p.value(t) - (c(1.0) + I * (2.0 * t + 0.5).sin())).norm() < 1e-15);
        assert!(!p.is_constant());
        assert!(Profile::ExponentialRamp { start: c(1.0), end: c(1.0), rate: 3.0 }.is_constant());
        assert_eq!(Profile::default().value(7.0), c(1.0));
    }

    #[test]
    fn profile_must_be_finite_on_window() {
        let a = Operator::new(lowering()).unwrap();
        let runaway = Profile::ExponentialRamp { start: c(0.0), end: c(1.0), rate: -1000.0 };
        let dissipators = LindbladSet::with_profiles(vec![a], vec![runaway]).unwrap();
        let system = FgklsSystem::new(HermitianOperator::zeros(2), dissipators).unwrap();
        let rho0 = DensityMatrix::new(ket(2, 1), 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 10, 1).unwrap();
        assert!(matches!(evolve_rk4(&system, &rho0, &grid), Err(Error::Invalid(_))));
    }

    #[test]
    fn divergence_reports_step() {
        let system = FgklsSystem::closed(HermitianOperator::from_real_diagonal(&[0.0, 1e150]));
        let rho0 = coherent_pair(2, 0, 1);
        let grid = TimeGrid::new(0.0, 1.0, 4, 1).unwrap();
        assert_eq!(evolve_rk4(&system, &rho0, &grid).unwrap_err(), Error::Divergence { step: 1 });
    }

    #[test]
    fn time_grid_validation_and_sampling() {
        assert!(TimeGrid::new(1.0, 1.0, 10, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 10, 0).is_err());
        let grid = TimeGrid::new(0.0, 1.0, 10, 4).unwrap();
        assert_eq!(grid.sample_times(), vec![0.0, 0.4, 0.8, 1.0]);
    }

    #[test]
    fn coefficient_examples() {
        let mut rng = seeded(13);
        let rho = random_density(4, &mut rng);
        let identity = coefficients_in_basis(rho.matrix(), &linalg::identity(4)).unwrap();
        assert_eq!(identity.matrix(), rho.matrix());

        let u = random_unitary(4, &mut rng);
        let r = coefficients_in_basis(rho.matrix(), &u).unwrap();
        assert!(max_abs_diff(&r.reconstruct(&u), rho.matrix()) < 1e-12);

        let diag = real_diagonal(&[0.5, 0.3, 0.2]);
        let spec = spectral_decompose(&HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        let r = coefficients_in_eigenbasis(&diag, &spec).unwrap();
        assert!(max_abs(&(r.matrix() - CMatrix::from_diagonal(&r.matrix().diagonal()))) < 1e-15);
    }

    #[test]
    fn analytic_coefficients_examples() {
        let r0 = CoefficientMatrix::new(coherent_pair(2, 0, 1).into_matrix()).unwrap();
        let identity = |x: f64| x;
        let damped = example1_analytic_coefficients(&r0, &[0.0, 1.0], &[&identity], 2.0).unwrap();
        assert!((damped.get(0, 1).norm() / r0.get(0, 1).norm() - (-1.0f64).exp()).abs() < 1e-14);
        for k in 0..2 {
            assert_eq!(damped.get(k, k), r0.get(k, k));
        }

        let flat = |_: f64| 2.5;
        let rotated = example1_analytic_coefficients(&r0, &[0.0, 1.0], &[&flat], 2.0).unwrap();
        assert!((rotated.get(0, 1).norm() - r0.get(0, 1).norm()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_function_values_leave_coherence_undamped() {
        // f(x) = (x − 2)² takes the same value on E = 1 and E = 3.
        let energies = [1.0, 2.0, 3.0];
        let h = HermitianOperator::from_real_diagonal(&energies);
        let a = Operator::new(real_diagonal(&[1.0, 0.0, 1.0])).unwrap();
        let system = FgklsSystem::new(h, LindbladSet::new(vec![a]).unwrap()).unwrap();
        let psi = crate::linalg::CVector::from_element(3, c(1.0 / 3f64.sqrt()));
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 3000, 3000).unwrap();
        let out = evolve_rk4(&system, &rho0, &grid).unwrap();
        let r = out.final_state().unwrap().matrix();
        assert!((r[(0, 2)].norm() - 1.0 / 3.0).abs() < 1e-12);
        assert!((r[(0, 1)].norm() - (-1.5f64).exp() / 3.0).abs() < 1e-10);

        let f = |x: f64| (x - 2.0).powi(2);
        let r0 = CoefficientMatrix::new(rho0.into_matrix()).unwrap();
        let analytic = example1_analytic_coefficients(&r0, &energies, &[&f], 3.0).unwrap();
        assert!(max_abs_diff(analytic.matrix(), r) < 1e-10);
    }

    #[test]
    fn analytic_coefficients_reject_nan() {
        let r0 = CoefficientMatrix::new(coherent_pair(2, 0, 1).into_matrix()).unwrap();
        let bad = |x: f64| (x - 0.5).sqrt();
        let err = example1_analytic_coefficients(&r0, &[0.0, 1.0], &[&bad], 1.0);
        assert_eq!(err.unwrap_err(), Error::Domain { eigenvalue: 0.0 });
    }

    #[test]
    fn identity_overlaps_cancel_dissipation() {
        let energies = [0.5, 1.0, 2.0];
        let r = random_density(3, &mut seeded(14)).into_matrix();
        let d = example3_coefficient_rhs(&r, &energies, &linalg::identity(3), 0.8).unwrap();
        let expected = CMatrix::from_fn(3, 3, |m, n| -I * (energies[m] - energies[n]) * r[(m, n)]);
        assert!(max_abs_diff(&d, &expected) < 1e-15);
    }

    #[test]
    fn zero_delta_is_pure_rotation() {
        let energies = [0.5, 1.0];
        let mut rng = seeded(15);
        let o = random_unitary(2, &mut rng);
        let r = random_density(2, &mut rng).into_matrix();
        let d = example3_coefficient_rhs(&r, &energies, &o, 0.0).unwrap();
        let expected = CMatrix::from_fn(2, 2, |m, n| -I * (energies[m] - energies[n]) * r[(m, n)]);
        assert!(max_abs_diff(&d, &expected) < 1e-15);
    }

    #[test]
    fn strict_form_needs_unitary_overlaps() {
        let mut o = linalg::identity(2);
        o[(0, 0)] = c(0.0);
        let r = linalg::identity(2);
        let err = example3_coefficient_rhs(&r, &[1.0, 2.0], &o, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonUnitary { .. }));
        assert!(overlap_coefficient_rhs(&r, &[1.0, 2.0], &o, 1.0).is_ok());
    }

    /// Two levels with `A = Δ q⁻ h₁^{-1/2} = Δ U` in the energy basis.
    #[test]
    fn coefficient_equation_matches_master_equation() {
        let (theta, delta) = (0.3f64, 0.5);
        let energies = [1.0, 2.0];
        let (s, co) = theta.sin_cos();
        let u = CMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)]);
        let a = &u * c(delta);
        let system = FgklsSystem::new(HermitianOperator::from_real_diagonal(&energies), set(vec![a])).unwrap();
        let rho0 = coherent_pair(2, 0, 1);

        let strict = example3_coefficient_rhs(rho0.matrix(), &energies, &u, delta).unwrap();
        let general = overlap_coefficient_rhs(rho0.matrix(), &energies, &u, delta).unwrap();
        let full = fgkls_rhs(rho0.matrix(), &system, 0.0).unwrap();
        assert!(max_abs_diff(&strict, &full) < 1e-14);
        assert!(max_abs_diff(&general, &full) < 1e-14);
        assert!(linalg::trace(&strict).norm() < 1e-12);

        let grid = TimeGrid::with_step(0.0, 5.0, 1e-3, 100).unwrap();
        let rk = evolve_rk4(&system, &rho0, &grid).unwrap();
        let coeffs =
            integrate_coefficients(rho0.matrix(), &grid, |r| example3_coefficient_rhs(r, &energies, &u, delta))
                .unwrap();
        assert_eq!(coeffs.len(), rk.len());
        for ((t, r), state) in coeffs.iter().zip(&rk.states) {
            assert!(max_abs_diff(r, state.matrix()) < 1e-6, "t = {t}");
        }
        let h = 1e-4;
        let short = TimeGrid::new(0.0, h, 1, 1).unwrap();
        let step = evolve_rk4(&system, &rho0, &short).unwrap();
        let finite_difference = (step.final_state().unwrap().matrix() - rho0.matrix()).unscale(h);
        assert!(max_abs_diff(&finite_difference, &strict) < 1e-3);
    }
}
