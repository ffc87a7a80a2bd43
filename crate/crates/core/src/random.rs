//! Seeded random matrices for tests, the check suite and random-unitary
//! models. Everything draws from ChaCha8 so results are reproducible.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMatrix, CVector};
use crate::operator::{DensityMatrix, HermitianOperator};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. complex Gaussian entries of unit variance.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn random_vector(n: usize, rng: &mut impl Rng) -> CVector {
    let v = CVector::from_fn(n, |_, _| Complex64::new(normal(rng), normal(rng)));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` pushed back into `Q`.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}

pub fn random_hermitian(n: usize, scale: f64, rng: &mut impl Rng) -> HermitianOperator {
    let g = ginibre(n, n, rng);
    HermitianOperator::hermitianize((&g + g.adjoint()).scale(0.5 * scale))
}

pub fn random_operator(n: usize, scale: f64, rng: &mut impl Rng) -> CMatrix {
    ginibre(n, n, rng).scale(scale)
}

/// Full-rank unit-trace density matrix `G G† / Tr(G G†)`.
pub fn random_density(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(n, n, rng);
    let m = linalg::mul(&g, &g.adjoint());
    let tr = linalg::trace(&m).re;
    DensityMatrix::positive_by_construction(m.unscale(tr))
}

/// Density matrix supported on the column span of `basis`
/// (orthonormal columns), unit trace.
pub fn random_density_in(basis: &CMatrix, rng: &mut impl Rng) -> DensityMatrix {
    let k = basis.ncols();
    let g = ginibre(k, k, rng);
    let inner = &g * g.adjoint();
    let m = linalg::mul3(basis, &inner, &basis.adjoint());
    let tr = linalg::trace(&m).re;
    DensityMatrix::positive_by_construction(m.unscale(tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary_and_reproducible() {
        let u = random_unitary(6, &mut seeded(11));
        assert!(linalg::unitarity_residual(&u) < 1e-13);
        assert_eq!(u, random_unitary(6, &mut seeded(11)));
    }

    #[test]
    fn density_is_valid() {
        let rho = random_density(5, &mut seeded(1));
        assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-12);
    }
}
