use std::cmp::Ordering;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::{real, tol, CMat, OqeError, Real, Result};

/// Relative threshold below which singular values and eigenvalues count as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

const SVD_MAX_SWEEPS: usize = 100;

/// Thin singular value decomposition `a = u * diag(s) * vh`, `s` descending.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub u: CMat<T>,
    pub s: DVector<T>,
    pub vh: CMat<T>,
}

pub fn svd<T: Real>(a: &CMat<T>) -> Result<Svd<T>> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(OqeError::Shape(format!("cannot decompose an empty {rows}x{cols} matrix")));
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(OqeError::NumericalFailure { rows, cols });
    }
    if rows < cols {
        let t = jacobi_svd(a.adjoint())?;
        return Ok(Svd { u: t.vh.adjoint(), s: t.s, vh: t.u.adjoint() });
    }
    jacobi_svd(a.clone())
}

/// One-sided (Hestenes) Jacobi SVD of a matrix with `rows >= cols`.
fn jacobi_svd<T: Real>(mut a: CMat<T>) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    let mut v = CMat::<T>::identity(n, n);
    let eps = T::default_epsilon();
    let total = a.norm_squared();
    let negligible = total * eps * eps;
    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm_sqr().sqrt();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(g);
                let zeta = (beta - alpha) / (g + g);
                let root = (T::one() + zeta * zeta).sqrt();
                let t = if zeta >= T::zero() { T::one() / (zeta + root) } else { T::one() / (zeta - root) };
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = c * t;
                rotate_columns(&mut a, p, q, c, sn, phase);
                rotate_columns(&mut v, p, q, c, sn, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(OqeError::NumericalFailure { rows: m, cols: n });
    }
    let norms: Vec<T> = (0..n).map(|c| a.column(c).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y)));
    let top = norms[order[0]];
    let mut u = CMat::zeros(m, n);
    let mut kept = 0;
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > T::zero() && s > top * eps * real::<T>(m as f64) {
            u.set_column(dst, &a.column(src).unscale(s));
            kept += 1;
        }
    }
    if kept < n {
        let fill = complete_columns(&u.columns(0, kept).into_owned(), n - kept);
        u.columns_mut(kept, n - kept).copy_from(&fill.columns(0, n - kept));
    }
    let s = DVector::from_iterator(n, order.iter().map(|&i| norms[i]));
    let vh = CMat::from_fn(n, n, |r, c| v[(c, order[r])].conj());
    Ok(Svd { u, s, vh })
}

/// Columns `(p, q) <- (c p − s e^{-iφ} q, s e^{iφ} p + c q)`.
fn rotate_columns<T: Real>(m: &mut CMat<T>, p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    for r in 0..m.nrows() {
        let x = m[(r, p)];
        let y = m[(r, q)];
        m[(r, p)] = x.scale(c) - y * phase.conj().scale(s);
        m[(r, q)] = x * phase.scale(s) + y.scale(c);
    }
}

/// Number of entries at least `RANK_THRESHOLD` times the largest one.
pub fn relative_rank<T: Real>(values: &[T]) -> usize {
    let largest = values.iter().fold(T::zero(), |m, &v| if v > m { v } else { m });
    if largest <= T::zero() {
        return 0;
    }
    let cut = largest * real::<T>(RANK_THRESHOLD);
    values.iter().filter(|&&v| v >= cut).count()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    /// Columns are eigenvectors, each phase-fixed so that its first
    /// significant component is real and positive.
    pub vectors: CMat<T>,
}

pub fn eig_hermitian<T: Real>(a: &CMat<T>) -> Result<Eigh<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(OqeError::Shape(format!("eig_hermitian needs a square matrix, got {}x{}", n, a.ncols())));
    }
    let scale = a.iter().fold(T::one(), |m, z| m.max(z.modulus()));
    let asym = max_abs_diff(a, &a.adjoint());
    if asym > tol::<T>(1e-10) * scale {
        return Err(OqeError::ContractViolation(format!(
            "matrix is not Hermitian: max |A - A^H| = {:e}",
            asym.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let sym = (a + a.adjoint()) * Complex::from(real::<T>(0.5));
    let dec = SymmetricEigen::try_new(sym, T::default_epsilon(), 0)
        .ok_or(OqeError::NumericalFailure { rows: n, cols: n })?;

    let mut vecs: Vec<DVector<Complex<T>>> = (0..n).map(|c| dec.eigenvectors.column(c).into_owned()).collect();
    for v in vecs.iter_mut() {
        fix_phase(v);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        dec.eigenvalues[y]
            .partial_cmp(&dec.eigenvalues[x])
            .unwrap_or(Ordering::Equal)
    });
    // within clusters of numerically equal eigenvalues, order by the vectors
    let tie = tol::<T>(1e-12) * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && dec.eigenvalues[order[end - 1]] - dec.eigenvalues[order[end]] <= tie {
            end += 1;
        }
        order[start..end].sort_by(|&x, &y| compare_vectors(&vecs[x], &vecs[y]));
        start = end;
    }

    let values = order.iter().map(|&c| dec.eigenvalues[c]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| vecs[order[c]][r]);
    Ok(Eigh { values, vectors })
}

fn first_significant<T: Real>(v: &DVector<Complex<T>>) -> Option<usize> {
    let big = v.iter().fold(T::zero(), |m, z| m.max(z.modulus()));
    let cut = big * real::<T>(1e-8);
    v.iter().position(|z| z.modulus() > cut)
}

fn fix_phase<T: Real>(v: &mut DVector<Complex<T>>) {
    if let Some(p) = first_significant(v) {
        let z = v[p];
        let phase = z.conj() / Complex::from(z.modulus());
        for x in v.iter_mut() {
            *x *= phase;
        }
        v[p] = Complex::from(v[p].re);
    }
}

/// Total order on phase-fixed vectors: earlier first significant component
/// first, then larger leading magnitude, then lexicographic on components.
fn compare_vectors<T: Real>(a: &DVector<Complex<T>>, b: &DVector<Complex<T>>) -> Ordering {
    let pa = first_significant(a).unwrap_or(usize::MAX);
    let pb = first_significant(b).unwrap_or(usize::MAX);
    pa.cmp(&pb)
        .then_with(|| {
            if pa == usize::MAX {
                return Ordering::Equal;
            }
            let ma = a[pa].modulus().to_f64().unwrap_or(0.0);
            let mb = b[pb].modulus().to_f64().unwrap_or(0.0);
            mb.total_cmp(&ma)
        })
        .then_with(|| {
            for (x, y) in a.iter().zip(b.iter()) {
                let c = y.re.to_f64().unwrap_or(0.0).total_cmp(&x.re.to_f64().unwrap_or(0.0))
                    .then_with(|| y.im.to_f64().unwrap_or(0.0).total_cmp(&x.im.to_f64().unwrap_or(0.0)));
                if c != Ordering::Equal {
                    return c;
                }
            }
            Ordering::Equal
        })
}

/// Polar factor of a square full-rank matrix: the unitary closest in
/// Frobenius norm.
pub fn nearest_unitary<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    if a.nrows() != a.ncols() {
        return Err(OqeError::Shape(format!("nearest_unitary needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let dec = svd(a)?;
    let largest = dec.s[0];
    let smallest = dec.s[dec.s.len() - 1];
    if smallest < largest * real::<T>(RANK_THRESHOLD) || largest <= T::zero() {
        return Err(OqeError::DegeneratePolar {
            smallest: smallest.to_f64().unwrap_or(0.0),
            largest: largest.to_f64().unwrap_or(0.0),
        });
    }
    Ok(&dec.u * &dec.vh)
}

/// Columns completing `partial` (n x r, any full-column-rank set) to an
/// orthonormal basis of C^n, found by Gram-Schmidt over the canonical basis
/// in index order.
pub fn complete_basis<T: Real>(partial: &CMat<T>) -> CMat<T> {
    complete_columns(partial, partial.nrows())
}

/// First `want` columns of [`complete_basis`] (fewer if the space runs out).
pub fn complete_columns<T: Real>(partial: &CMat<T>, want: usize) -> CMat<T> {
    let n = partial.nrows();
    let mut basis: Vec<DVector<Complex<T>>> = Vec::with_capacity(n);
    for c in 0..partial.ncols() {
        let mut v = partial.column(c).into_owned();
        orthogonalize(&mut v, &basis);
        let norm = v.norm();
        if norm > real::<T>(1e-8) {
            basis.push(v.unscale(norm));
        }
    }
    let given = basis.len();
    let mut extra = Vec::new();
    for e in 0..n {
        if basis.len() == n || extra.len() == want {
            break;
        }
        let mut v = DVector::<Complex<T>>::zeros(n);
        v[e] = Complex::from(T::one());
        orthogonalize(&mut v, &basis);
        let norm = v.norm();
        if norm > real::<T>(1e-6) {
            let v = v.unscale(norm);
            basis.push(v.clone());
            extra.push(v);
        }
    }
    debug_assert_eq!(basis.len() - given, extra.len());
    CMat::from_fn(n, extra.len(), |r, c| extra[c][r])
}

fn orthogonalize<T: Real>(v: &mut DVector<Complex<T>>, basis: &[DVector<Complex<T>>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(v);
            v.axpy(-proj, b, Complex::from(T::one()));
        }
    }
}

/// `exp(i t H)` for Hermitian `H`, built from its eigenbasis so the result is
/// unitary to rounding.
pub fn expm_i_hermitian<T: Real>(h: &CMat<T>, t: T) -> Result<CMat<T>> {
    let e = eig_hermitian(h)?;
    let n = h.nrows();
    let mut scaled = e.vectors.clone();
    for c in 0..n {
        let angle = t * e.values[c];
        let ph = Complex::new(angle.cos(), angle.sin());
        for r in 0..n {
            scaled[(r, c)] *= ph;
        }
    }
    Ok(scaled * e.vectors.adjoint())
}

pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

pub fn max_abs_diff<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).modulus()))
}

/// `max |U^H U - I|`.
pub fn unitarity_residual<T: Real>(u: &CMat<T>) -> T {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &CMat::identity(n, n))
}

pub fn is_unitary<T: Real>(u: &CMat<T>, tolerance: T) -> bool {
    u.is_square() && unitarity_residual(u) <= tolerance
}

/// Partial trace over every subsystem not listed in `keep`. Kept subsystems
/// stay in their original order.
pub fn partial_trace<T: Real>(rho: &CMat<T>, dims: &[usize], keep: &[usize]) -> Result<CMat<T>> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(OqeError::Shape(format!(
            "partial_trace: dims {:?} give {} but matrix is {}x{}",
            dims,
            total,
            rho.nrows(),
            rho.ncols()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(OqeError::Shape(format!("partial_trace: subsystem {bad} out of range")));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !kept.contains(s)).collect();

    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let offsets = |subs: &[usize]| -> Vec<usize> {
        let n: usize = subs.iter().map(|&s| dims[s]).product();
        (0..n)
            .map(|mut idx| {
                let mut off = 0;
                for &s in subs.iter().rev() {
                    off += (idx % dims[s]) * strides[s];
                    idx /= dims[s];
                }
                off
            })
            .collect()
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(&traced);
    let m = keep_off.len();
    let mut out = CMat::zeros(m, m);
    for (r, &kr) in keep_off.iter().enumerate() {
        for (c, &kc) in keep_off.iter().enumerate() {
            let mut acc = Complex::from(T::zero());
            for &t in &trace_off {
                acc += rho[(kr + t, kc + t)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Factor `rho ≈ A A^H` keeping eigenvalues above `1e-13` of the largest.
/// Fails if an eigenvalue is below `-1e-8`.
pub fn psd_factor<T: Real>(rho: &CMat<T>) -> Result<CMat<T>> {
    let e = eig_hermitian(rho)?;
    let min = e.values.last().copied().unwrap_or(T::zero());
    if min < -tol::<T>(1e-8) {
        return Err(OqeError::ContractViolation(format!(
            "matrix is not positive semidefinite: eigenvalue {:e}",
            min.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let top = e.values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let cut = top * real::<T>(1e-13);
    let keep = e.values.iter().take_while(|&&v| v > cut && v > T::zero()).count();
    let mut a = CMat::zeros(rho.nrows(), keep.max(1));
    for c in 0..keep {
        let w = e.values[c].sqrt();
        for r in 0..rho.nrows() {
            a[(r, c)] = e.vectors[(r, c)].scale(w);
        }
    }
    Ok(a)
}

/// Positive square root of a PSD matrix (negative eigenvalues clipped).
pub fn hermitian_sqrt_factor<T: Real>(rho: &CMat<T>) -> Result<CMat<T>> {
    let e = eig_hermitian(rho)?;
    let n = rho.nrows();
    let mut scaled = e.vectors.clone();
    for c in 0..n {
        let w = e.values[c].max(T::zero()).sqrt();
        for r in 0..n {
            scaled[(r, c)] = scaled[(r, c)].scale(w);
        }
    }
    Ok(&scaled * e.vectors.adjoint())
}

/// Uhlmann fidelity `tr²√(√ρ σ √ρ)`, evaluated as the squared trace norm of
/// `A^H B` for factorizations `ρ = A A^H`, `σ = B B^H`.
pub fn fidelity<T: Real>(rho: &CMat<T>, sigma: &CMat<T>) -> Result<T> {
    if rho.shape() != sigma.shape() {
        return Err(OqeError::Shape(format!("fidelity: {:?} vs {:?}", rho.shape(), sigma.shape())));
    }
    for (name, m) in [("rho", rho), ("sigma", sigma)] {
        let tr = m.trace();
        if (tr.re - T::one()).abs() > tol::<T>(1e-8) || tr.im.abs() > tol::<T>(1e-8) {
            return Err(OqeError::ContractViolation(format!(
                "fidelity: {name} has trace {:?}, expected 1",
                (tr.re.to_f64(), tr.im.to_f64())
            )));
        }
    }
    let a = psd_factor(rho)?;
    let b = psd_factor(sigma)?;
    let overlap = a.adjoint() * b;
    let sv = svd(&overlap)?;
    let tn = sv.s.iter().fold(T::zero(), |acc, &s| acc + s);
    Ok((tn * tn).min(T::one()).max(T::zero()))
}

/// Rényi-γ entropy in bits of a probability spectrum; `gamma == 1` is the
/// von Neumann limit. Entries below `1e-14` are dropped.
pub fn renyi_from_spectrum<T: Real>(spectrum: &[T], gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(OqeError::Domain(format!(
            "Renyi order must be positive, got {}",
            gamma.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let floor = real::<T>(1e-14);
    let ln2 = T::ln_2();
    let probs = spectrum.iter().copied().filter(|&p| p > floor);
    let h = if (gamma - T::one()).abs() < real::<T>(1e-12) {
        probs.fold(T::zero(), |acc, p| acc - p * p.ln()) / ln2
    } else {
        let s = probs.fold(T::zero(), |acc, p| acc + p.powf(gamma));
        s.ln() / ln2 / (T::one() - gamma)
    };
    Ok(h.max(T::zero()))
}

pub fn renyi_entropy<T: Real>(rho: &CMat<T>, gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(OqeError::Domain("Renyi order must be positive".into()));
    }
    let e = eig_hermitian(rho)?;
    renyi_from_spectrum(&e.values, gamma)
}

#[allow(dead_code)]
pub(crate) fn real_diag<T: Real>(values: &[f64]) -> CMat<T> {
    let n = values.len();
    DMatrix::from_fn(n, n, |r, c| if r == c { Complex::from(real::<T>(values[r])) } else { Complex::from(T::zero()) })
}
