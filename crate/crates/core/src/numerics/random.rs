use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::{expm_i_hermitian, nearest_unitary};
use crate::{real, CMat, CVec, Real};

/// Portable seeded generator used for every random object.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-variance Gaussian sample, drawn in `f64` so every scalar type sees
/// the same stream.
pub fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    real(rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat<T> {
    let mut m = CMat::zeros(rows, cols);
    // row-major fill keeps the stream order independent of storage layout
    for r in 0..rows {
        for c in 0..cols {
            let re = standard_normal(rng);
            let im = standard_normal(rng);
            m[(r, c)] = Complex::new(re, im);
        }
    }
    m
}

/// `(G + G^H) / 2` with independent unit-variance real and imaginary parts in `G`.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat<T> {
    let g = gaussian_matrix::<T, R>(dim, dim, rng);
    (&g + g.adjoint()) * Complex::from(real::<T>(0.5))
}

/// `exp(i η H)` with `H` from [`random_hermitian`].
pub fn random_unitary_exp<T: Real, R: Rng + ?Sized>(dim: usize, eta: T, rng: &mut R) -> CMat<T> {
    let h = random_hermitian::<T, R>(dim, rng);
    expm_i_hermitian(&h, eta).expect("Hermitian generator always decomposes")
}

/// Haar-distributed unitary (polar factor of a Ginibre matrix).
pub fn random_haar_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat<T> {
    loop {
        let g = gaussian_matrix::<T, R>(dim, dim, rng);
        if let Ok(u) = nearest_unitary(&g) {
            return u;
        }
    }
}

pub fn random_pure_state<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec<T> {
    let mut v = DVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let re = standard_normal(rng);
            let im = standard_normal(rng);
            Complex::new(re, im)
        }),
    );
    let n = v.norm();
    v.unscale_mut(n);
    v
}

/// Full-rank random state `G G^H / tr(G G^H)` from a square Ginibre matrix.
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat<T> {
    let g = gaussian_matrix::<T, R>(dim, dim, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let rho = w.unscale(tr);
    (&rho + rho.adjoint()) * Complex::from(real::<T>(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eig_hermitian, max_abs_diff, unitarity_residual};

    #[test]
    fn zero_eta_gives_identity() {
        let mut rng = rng_from_seed(0);
        let u = random_unitary_exp::<f64, _>(6, 0.0, &mut rng);
        assert!(max_abs_diff(&u, &CMat::identity(6, 6)) < 1e-14);
    }

    #[test]
    fn seeded_objects_are_reproducible() {
        let a = random_unitary_exp::<f64, _>(5, 0.1, &mut rng_from_seed(42));
        let b = random_unitary_exp::<f64, _>(5, 0.1, &mut rng_from_seed(42));
        assert_eq!(a, b);
        let a = random_pure_state::<f64, _>(7, &mut rng_from_seed(1));
        let b = random_pure_state::<f64, _>(7, &mut rng_from_seed(1));
        assert_eq!(a, b);
    }

    #[test]
    fn generated_unitaries_are_unitary() {
        let mut rng = rng_from_seed(10);
        for dim in [1, 2, 5, 10] {
            assert!(unitarity_residual(&random_unitary_exp::<f64, _>(dim, 0.7, &mut rng)) <= 1e-12);
            assert!(unitarity_residual(&random_haar_unitary::<f64, _>(dim, &mut rng)) <= 1e-12);
        }
    }

    #[test]
    fn density_matrix_is_a_state() {
        let mut rng = rng_from_seed(12);
        let rho = random_density_matrix::<f64, _>(3, &mut rng);
        let e = eig_hermitian(&rho).unwrap();
        assert!(e.values.iter().all(|&v| v >= -1e-12));
        assert!((rho.trace().re - 1.0).abs() <= 1e-12);
        let psi = random_pure_state::<f64, _>(9, &mut rng);
        assert!((psi.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = rng_from_seed(10);
        let u = random_unitary_exp::<f32, _>(4, 0.5, &mut rng);
        assert!(unitarity_residual(&u) < 1e-5);
    }
}
