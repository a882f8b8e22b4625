use num_complex::Complex;

use crate::{CMat, OqeError, Real, Result};

/// Dense pure state over a chain of legs, row-major with leg 0 most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct LegState<T: Real> {
    dims: Vec<usize>,
    amps: Vec<Complex<T>>,
}

impl<T: Real> LegState<T> {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex<T>>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != amps.len() {
            return Err(OqeError::Shape(format!("legs {:?} need {} amplitudes, got {}", dims, n, amps.len())));
        }
        Ok(LegState { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    fn split(&self, start: usize, end: usize) -> (usize, usize, usize) {
        let left = self.dims[..start].iter().product();
        let mid = self.dims[start..end].iter().product();
        let right = self.dims[end..].iter().product();
        (left, mid, right)
    }

    fn check_range(&self, start: usize, end: usize) -> Result<()> {
        if start > end || end > self.dims.len() {
            return Err(OqeError::Shape(format!("leg range {start}..{end} outside 0..{}", self.dims.len())));
        }
        Ok(())
    }

    /// Applies `gate` to the contiguous legs `start..end`.
    pub fn apply(&mut self, start: usize, end: usize, gate: &CMat<T>) -> Result<()> {
        self.check_range(start, end)?;
        let (left, mid, right) = self.split(start, end);
        if gate.shape() != (mid, mid) {
            return Err(OqeError::Shape(format!("gate {:?} does not act on a {mid}-dimensional block", gate.shape())));
        }
        let mut buf = vec![Complex::from(T::zero()); mid];
        for l in 0..left {
            for r in 0..right {
                let base = l * mid * right + r;
                for (m, b) in buf.iter_mut().enumerate() {
                    *b = self.amps[base + m * right];
                }
                for m in 0..mid {
                    let mut acc = Complex::from(T::zero());
                    for (m2, b) in buf.iter().enumerate() {
                        acc += gate[(m, m2)] * *b;
                    }
                    self.amps[base + m * right] = acc;
                }
            }
        }
        Ok(())
    }

    /// Reduced density matrix of the contiguous legs `start..end`.
    pub fn reduced(&self, start: usize, end: usize) -> Result<CMat<T>> {
        self.check_range(start, end)?;
        let (left, mid, right) = self.split(start, end);
        let mut rho = CMat::zeros(mid, mid);
        for l in 0..left {
            let block = &self.amps[l * mid * right..(l + 1) * mid * right];
            for a in 0..mid {
                for b in a..mid {
                    let mut acc = Complex::from(T::zero());
                    for r in 0..right {
                        acc += block[a * right + r] * block[b * right + r].conj();
                    }
                    rho[(a, b)] += acc;
                }
            }
        }
        for a in 0..mid {
            for b in 0..a {
                rho[(a, b)] = rho[(b, a)].conj();
            }
        }
        Ok(rho)
    }

    /// Amplitudes as a `(Π dims[..cut]) x (Π dims[cut..])` matrix.
    pub fn matricize(&self, cut: usize) -> CMat<T> {
        let rows: usize = self.dims[..cut].iter().product();
        let cols = self.amps.len() / rows.max(1);
        CMat::from_row_slice(rows, cols, &self.amps)
    }

    /// Appends a new last leg in state `|0⟩`-weighted product form:
    /// `ψ ⊗ v`.
    pub fn append(&self, v: &[Complex<T>]) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * v.len());
        for a in &self.amps {
            for b in v {
                amps.push(*a * *b);
            }
        }
        let mut dims = self.dims.clone();
        dims.push(v.len());
        LegState { dims, amps }
    }

    /// Inserts `pair` (a state on two new legs) before leg `pos`.
    pub fn insert_pair(&self, pos: usize, pair: &CMat<T>) -> Self {
        let (p0, p1) = pair.shape();
        let left: usize = self.dims[..pos].iter().product();
        let right: usize = self.dims[pos..].iter().product();
        let mut amps = Vec::with_capacity(self.amps.len() * p0 * p1);
        for l in 0..left {
            for a in 0..p0 {
                for b in 0..p1 {
                    let w = pair[(a, b)];
                    for r in 0..right {
                        amps.push(w * self.amps[l * right + r]);
                    }
                }
            }
        }
        let mut dims = self.dims[..pos].to_vec();
        dims.push(p0);
        dims.push(p1);
        dims.extend_from_slice(&self.dims[pos..]);
        LegState { dims, amps }
    }

    /// Merges legs `start..end` into one leg (amplitudes unchanged).
    pub fn merge(mut self, start: usize, end: usize) -> Self {
        let merged: usize = self.dims[start..end].iter().product();
        self.dims.splice(start..end, [merged]);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_abs_diff, partial_trace, random_haar_unitary, random_pure_state, rng_from_seed};

    #[test]
    fn reduced_matches_partial_trace() {
        let mut rng = rng_from_seed(1);
        let psi = random_pure_state::<f64, _>(24, &mut rng);
        let st = LegState::new(vec![2, 3, 4], psi.as_slice().to_vec()).unwrap();
        let full = &psi * psi.adjoint();
        for (s, e, keep) in [(0, 1, vec![0]), (1, 2, vec![1]), (1, 3, vec![1, 2]), (0, 3, vec![0, 1, 2])] {
            let a = st.reduced(s, e).unwrap();
            let b = partial_trace(&full, &[2, 3, 4], &keep).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-14);
        }
    }

    #[test]
    fn apply_matches_kronecker_product() {
        let mut rng = rng_from_seed(2);
        let psi = random_pure_state::<f64, _>(12, &mut rng);
        let g = random_haar_unitary::<f64, _>(3, &mut rng);
        let mut st = LegState::new(vec![2, 3, 2], psi.as_slice().to_vec()).unwrap();
        st.apply(1, 2, &g).unwrap();
        let big = CMat::<f64>::identity(2, 2).kronecker(&g).kronecker(&CMat::identity(2, 2));
        let expect = big * psi;
        let got = CMat::from_column_slice(12, 1, st.amplitudes());
        assert!(max_abs_diff(&got, &CMat::from_column_slice(12, 1, expect.as_slice())) < 1e-14);
    }
}
