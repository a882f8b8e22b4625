//! Two-level (Givens-type) parameterisation of `U(n)`.
//!
//! `U = T_1 T_2 … T_m · diag(e^{iδ_0}, …, e^{iδ_{n-1}})` with `m = n(n-1)/2`
//! rotations on adjacent rows `(p, p+1)`. Each rotation carries an angle `θ`
//! and a phase `φ`:
//!
//! ```text
//! T_p(θ, φ) = [ e^{iφ} cos θ   -e^{iφ} sin θ ]   on rows/cols p, p+1
//!             [        sin θ          cos θ  ]
//! ```
//!
//! The rotation order is the order in which `params_from_unitary` nulls the
//! sub-diagonal: column by column, bottom row first.

use num_complex::Complex;

use crate::{CMat, OqeError, Real, Result};

/// Upper row `p` of each rotation, in product order.
pub fn rotation_pairs(dim: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
    for c in 0..dim.saturating_sub(1) {
        for r in (c + 1..dim).rev() {
            out.push(r - 1);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryParams<T: Real> {
    pub dim: usize,
    /// One angle per rotation.
    pub angles: Vec<T>,
    /// One phase per rotation followed by `dim` diagonal phases.
    pub phases: Vec<T>,
}

fn block<T: Real>(theta: T, phi: T) -> [[Complex<T>; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let e = Complex::new(phi.cos(), phi.sin());
    [[e.scale(c), -e.scale(s)], [Complex::from(s), Complex::from(c)]]
}

fn d_block_theta<T: Real>(theta: T, phi: T) -> [[Complex<T>; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let e = Complex::new(phi.cos(), phi.sin());
    [[-e.scale(s), -e.scale(c)], [Complex::from(c), Complex::from(-s)]]
}

fn d_block_phi<T: Real>(theta: T, phi: T) -> [[Complex<T>; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let ie = Complex::new(-phi.sin(), phi.cos());
    let z = Complex::from(T::zero());
    [[ie.scale(c), -ie.scale(s)], [z, z]]
}

/// `m <- m · B` on columns `p, p+1`.
fn mul_cols<T: Real>(m: &mut CMat<T>, p: usize, b: &[[Complex<T>; 2]; 2]) {
    for r in 0..m.nrows() {
        let x = m[(r, p)];
        let y = m[(r, p + 1)];
        m[(r, p)] = x * b[0][0] + y * b[1][0];
        m[(r, p + 1)] = x * b[0][1] + y * b[1][1];
    }
}

/// `m <- B^H · m` on rows `p, p+1`.
fn adj_mul_rows<T: Real>(m: &mut CMat<T>, p: usize, b: &[[Complex<T>; 2]; 2]) {
    for c in 0..m.ncols() {
        let x = m[(p, c)];
        let y = m[(p + 1, c)];
        m[(p, c)] = b[0][0].conj() * x + b[1][0].conj() * y;
        m[(p + 1, c)] = b[0][1].conj() * x + b[1][1].conj() * y;
    }
}

impl<T: Real> UnitaryParams<T> {
    pub fn n_rotations(dim: usize) -> usize {
        dim * dim.saturating_sub(1) / 2
    }

    /// Total real parameter count, `dim²`.
    pub fn n_params(dim: usize) -> usize {
        dim * dim
    }

    pub fn zeros(dim: usize) -> Self {
        let m = Self::n_rotations(dim);
        UnitaryParams { dim, angles: vec![T::zero(); m], phases: vec![T::zero(); m + dim] }
    }

    /// Flat layout: angles, then phases.
    pub fn to_flat(&self) -> Vec<T> {
        self.angles.iter().chain(self.phases.iter()).copied().collect()
    }

    pub fn from_flat(dim: usize, flat: &[T]) -> Result<Self> {
        let m = Self::n_rotations(dim);
        if flat.len() != dim * dim {
            return Err(OqeError::Shape(format!(
                "unitary of dimension {dim} needs {} parameters, got {}",
                dim * dim,
                flat.len()
            )));
        }
        Ok(UnitaryParams { dim, angles: flat[..m].to_vec(), phases: flat[m..].to_vec() })
    }

    fn check(&self) -> Result<()> {
        let m = Self::n_rotations(self.dim);
        if self.angles.len() != m || self.phases.len() != m + self.dim {
            return Err(OqeError::Shape(format!(
                "inconsistent parameter counts for dimension {}: {} angles, {} phases",
                self.dim,
                self.angles.len(),
                self.phases.len()
            )));
        }
        Ok(())
    }

    /// Builds the unitary; unitary for any parameter values.
    pub fn to_unitary(&self) -> Result<CMat<T>> {
        self.check()?;
        let n = self.dim;
        let mut u = CMat::identity(n, n);
        for (m, &p) in rotation_pairs(n).iter().enumerate() {
            mul_cols(&mut u, p, &block(self.angles[m], self.phases[m]));
        }
        let off = self.angles.len();
        for c in 0..n {
            let d = self.phases[off + c];
            let e = Complex::new(d.cos(), d.sin());
            for r in 0..n {
                u[(r, c)] *= e;
            }
        }
        Ok(u)
    }

    /// Decomposes a unitary; `from_unitary(u).to_unitary() == u` to rounding.
    pub fn from_unitary(u: &CMat<T>) -> Result<Self> {
        if !u.is_square() {
            return Err(OqeError::Shape(format!("expected a square matrix, got {:?}", u.shape())));
        }
        let n = u.nrows();
        let mut v = u.clone();
        let mut angles = Vec::with_capacity(Self::n_rotations(n));
        let mut phases = Vec::with_capacity(Self::n_rotations(n) + n);
        let mut col = 0;
        let mut rows_left = n.saturating_sub(1);
        for p in rotation_pairs(n) {
            let a = v[(p, col)];
            let b = v[(p + 1, col)];
            let (ma, mb) = (a.norm_sqr().sqrt(), b.norm_sqr().sqrt());
            let theta = mb.atan2(ma);
            let phi = if ma > T::zero() && mb > T::zero() { a.im.atan2(a.re) - b.im.atan2(b.re) } else { T::zero() };
            let blk = block(theta, phi);
            adj_mul_rows(&mut v, p, &blk);
            angles.push(theta);
            phases.push(phi);
            rows_left -= 1;
            if rows_left == 0 {
                col += 1;
                rows_left = n.saturating_sub(col + 1);
            }
        }
        for c in 0..n {
            let z = v[(c, c)];
            phases.push(z.im.atan2(z.re));
        }
        Ok(UnitaryParams { dim: n, angles, phases })
    }

    /// Gradient of `Re tr(C · U(params))` in the flat parameter layout.
    pub fn pullback(&self, cot: &CMat<T>) -> Result<Vec<T>> {
        self.check()?;
        let n = self.dim;
        if cot.shape() != (n, n) {
            return Err(OqeError::Shape(format!("cotangent must be {n}x{n}, got {:?}", cot.shape())));
        }
        let pairs = rotation_pairs(n);
        let m = pairs.len();
        let u = self.to_unitary()?;
        let mut grad = vec![T::zero(); n * n];

        // y_k = S_k C P_k with U = P_k F_k S_k; y_{k+1} = F_{k+1}^H y_k F_k
        let mut y = &u * cot;
        if m > 0 {
            adj_mul_rows(&mut y, pairs[0], &block(self.angles[0], self.phases[0]));
        } else {
            y = diag_adj_mul_rows(self, &y);
        }
        for k in 0..m {
            let (theta, phi, p) = (self.angles[k], self.phases[k], pairs[k]);
            grad[k] = trace_block(&y, p, &d_block_theta(theta, phi));
            grad[m + k] = trace_block(&y, p, &d_block_phi(theta, phi));
            mul_cols(&mut y, p, &block(theta, phi));
            if k + 1 < m {
                adj_mul_rows(&mut y, pairs[k + 1], &block(self.angles[k + 1], self.phases[k + 1]));
            } else {
                y = diag_adj_mul_rows(self, &y);
            }
        }
        // diagonal factor: dΔ/dδ_c = i e^{iδ_c} E_cc
        for c in 0..n {
            let d = self.phases[m + c];
            let ie = Complex::new(-d.sin(), d.cos());
            grad[2 * m + c] = (y[(c, c)] * ie).re;
        }
        Ok(grad)
    }
}

fn diag_adj_mul_rows<T: Real>(params: &UnitaryParams<T>, y: &CMat<T>) -> CMat<T> {
    let off = params.angles.len();
    let mut out = y.clone();
    for r in 0..params.dim {
        let d = params.phases[off + r];
        let e = Complex::new(d.cos(), -d.sin());
        for c in 0..y.ncols() {
            out[(r, c)] *= e;
        }
    }
    out
}

/// `Re tr(Y · dF)` for `dF` supported on the 2x2 block at `p`.
fn trace_block<T: Real>(y: &CMat<T>, p: usize, df: &[[Complex<T>; 2]; 2]) -> T {
    let mut acc = Complex::from(T::zero());
    for a in 0..2 {
        for b in 0..2 {
            acc += y[(p + b, p + a)] * df[a][b];
        }
    }
    acc.re
}
