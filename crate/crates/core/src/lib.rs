//! Supersymmetric partner construction for open quantum systems.
//!
//! A pair of isospectral Hamiltonians `h₁ = q⁺q⁻`, `h₂ = q⁻q⁺` is built
//! from a supercharge matrix. Density matrices and FGKLS (Lindblad)
//! operators are carried from one partner to the other, both partners are
//! evolved under the master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σⱼ (AʲρAʲ† − ½{Aʲ†Aʲ, ρ})
//! ```
//!
//! and every algebraic identity of the construction can be measured on
//! finite truncations.

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod random;
pub mod susy;

pub use error::{Error, Result};
pub use evolution::{
    coefficients_in_basis, coefficients_in_eigenbasis, evolve_exact, evolve_rk4, example1_analytic_coefficients,
    example3_coefficient_rhs, fgkls_rhs, integrate_coefficients, lindbladian, liouvillian_matrix,
    overlap_coefficient_rhs, CoefficientMatrix, Dissipator, EvolutionResult, FgklsSystem, LindbladSet, Profile,
    TimeGrid,
};
pub use linalg::{CMatrix, CVector};
pub use models::{
    build_example_lindblads, build_grid_darboux, build_oscillator, build_spectral_model, rotation_unitary,
    DerivativeScheme, ExampleLindbladSpec, GridModel, GridModelSpec, SpectralModelSpec,
};
pub use operator::{
    apply_function, pseudo_inv_sqrt, spectral_decompose, validate_density, von_neumann_entropy, DensityDiagnostics,
    DensityMatrix, HermitianOperator, Operator, Polynomial, SpectralDecomposition, DEFAULT_ZERO_TOL,
};
pub use susy::{
    build_super_operators, build_susy_pair, build_susy_pair_with, check_lindblad_intertwining, check_super_density,
    check_super_lindblad, map_density_backward, map_density_forward, map_lindblad, map_lindblad_reverse,
    SuperOperators, SusyPair,
};
