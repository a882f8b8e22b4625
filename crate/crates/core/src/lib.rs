//! Hidden open-quantum-evolution (OQE) models, purified process tensors and
//! their reconstruction from multi-time measurements.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] dense complex kernels (SVD, Hermitian eigensolver, polar
//!   factor, two-level unitary parameterisation, random objects, entropies).
//! * [`oqe`] the system + environment model and its brute-force simulation.
//! * [`process_tensor`] the purified process tensor (PPT) as a matrix product
//!   state, dense process tensors and contraction with interventions.
//! * [`tomography`] window-wise disentangling tomography of the PPT.
//! * [`reconstruction`] recovery of a unitary model from a reconstructed PPT.
//! * [`memory`] memory size, memory complexity and transfer-matrix fixed points.
//! * [`io`] JSON file formats for models, PPTs and transcripts.
//!
//! All numerical code is generic over the real scalar type through [`Real`];
//! the `f64` aliases at the crate root are what the CLI and tests use.
//!
//! Conventions used throughout:
//!
//! * system + environment kets are indexed system-major, `s * D + e`;
//! * a PPT site tensor `B[a, i, o, b]` is stored as a `(d*χ_right) x (d*χ_left)`
//!   matrix with rows `o * χ_right + b` and columns `i * χ_left + a`, scaled by
//!   `1/√d` so that a site built from a unitary `U` is exactly `U / √d`;
//! * dense process tensors are indexed by `(o_k, i_{k-1}, o_{k-1}, …, i_0, o_0)`
//!   row-major with `o_k` most significant.

pub mod error;
pub mod io;
pub mod memory;
pub mod numerics;
pub mod oqe;
pub mod process_tensor;
pub mod reconstruction;
pub mod tomography;

use nalgebra::{DMatrix, DVector, RealField};
pub use num_complex::Complex;

pub use error::{OqeError, Result};

/// Real scalar the library is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + num_traits::ToPrimitive + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = CMat<f64>;
pub type ComplexVector = CVec<f64>;
pub type Model = oqe::OqeModel<f64>;
pub type Operation = oqe::QuantumOperation<f64>;
pub type Ppt = process_tensor::PurifiedProcessTensor<f64>;
pub type DenseProcessTensor = process_tensor::ProcessTensorDense<f64>;
pub type Reconstructed = reconstruction::ReconstructedOqe<f64>;

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Complex number from real and imaginary parts given as `f64`.
#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(real(re), real(im))
}

/// Tolerance calibrated for `f64`, widened in proportion to the machine
/// epsilon of lower-precision scalars.
pub fn tol<T: Real>(base: f64) -> T {
    let eps: f64 = T::default_epsilon().to_f64().unwrap_or(f64::EPSILON);
    real(base * (eps / f64::EPSILON).max(1.0))
}
