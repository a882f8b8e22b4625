//! Purified process tensor (PPT) as a matrix product state, dense process
//! tensors and their contraction with interventions.

use num_complex::Complex;

use crate::numerics::{eig_hermitian, fidelity, partial_trace, svd, LegState};
use crate::oqe::{OqeModel, QuantumOperation};
use crate::{real, CMat, OqeError, Real, Result};

/// Largest dense process-tensor dimension `d^{2k+1}` accepted.
pub const MAX_DENSE_DIM: usize = 1 << 11;
/// Largest dense state vector (number of amplitudes) accepted.
pub const MAX_STATE_LEN: usize = 1 << 22;

/// MPS form of the purified process tensor.
///
/// `site0` is `d x χ_0` with entries `⟨o_0 α_0|ψ^SE⟩`; `sites[j-1]` is the
/// `(d χ_j) x (d χ_{j-1})` matrix of site `j` (rows `o_j * χ_j + α_j`,
/// columns `i_{j-1} * χ_{j-1} + α_{j-1}`), carrying a factor `1/√d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedProcessTensor<T: Real> {
    pub d: usize,
    pub site0: CMat<T>,
    pub sites: Vec<CMat<T>>,
}

/// Dense process tensor over `(o_k, i_{k-1}, o_{k-1}, …, i_0, o_0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessTensorDense<T: Real> {
    pub d: usize,
    pub k: usize,
    pub matrix: CMat<T>,
}

impl<T: Real> PurifiedProcessTensor<T> {
    pub fn new(d: usize, site0: CMat<T>, sites: Vec<CMat<T>>) -> Result<Self> {
        if d == 0 || site0.nrows() != d || site0.ncols() == 0 {
            return Err(OqeError::Shape(format!("site 0 has shape {:?} for d = {d}", site0.shape())));
        }
        let mut left = site0.ncols();
        for (j, s) in sites.iter().enumerate() {
            if s.ncols() != d * left || s.nrows() % d != 0 || s.nrows() == 0 {
                return Err(OqeError::Shape(format!(
                    "site {} has shape {:?}, incompatible with d = {d} and left bond {left}",
                    j + 1,
                    s.shape()
                )));
            }
            left = s.nrows() / d;
        }
        Ok(PurifiedProcessTensor { d, site0, sites })
    }

    pub fn k(&self) -> usize {
        self.sites.len()
    }

    /// `χ_0, …, χ_k`.
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(self.site0.ncols()).chain(self.sites.iter().map(|s| s.nrows() / self.d)).collect()
    }

    pub fn bond_dim(&self, j: usize) -> usize {
        if j == 0 {
            self.site0.ncols()
        } else {
            self.sites[j - 1].nrows() / self.d
        }
    }

    /// `χ_j x χ_{j-1}` block `B^{i,o}` of site `j ≥ 1`.
    pub fn block(&self, j: usize, i: usize, o: usize) -> CMat<T> {
        let (r, l) = (self.bond_dim(j), self.bond_dim(j - 1));
        self.sites[j - 1].view((o * r, i * l), (r, l)).into_owned()
    }

    /// Per-site deviation from `Σ_{i,o,α_j} B B^* = δ` on the left bond.
    pub fn canonical_residuals(&self) -> Vec<T> {
        (1..=self.k())
            .map(|j| {
                let s = &self.sites[j - 1];
                let l = self.bond_dim(j - 1);
                let g = s.adjoint() * s;
                let mut worst = T::zero();
                for a in 0..l {
                    for b in 0..l {
                        let mut acc = Complex::from(T::zero());
                        for i in 0..self.d {
                            acc += g[(i * l + a, i * l + b)];
                        }
                        if a == b {
                            acc -= Complex::from(T::one());
                        }
                        worst = worst.max(acc.norm_sqr().sqrt());
                    }
                }
                worst
            })
            .collect()
    }

    pub fn max_canonical_residual(&self) -> T {
        self.canonical_residuals().into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    /// `⟨Υ|Υ⟩`.
    pub fn norm_sqr(&self) -> T {
        env_overlap(self, self).map(|e| e.trace().re).unwrap_or(T::zero())
    }

    /// First `k'` steps: the `k'`-step PPT of the same process.
    pub fn truncate(&self, k_new: usize) -> Result<Self> {
        if k_new > self.k() {
            return Err(OqeError::StepMismatch { expected: k_new, got: self.k() });
        }
        Ok(PurifiedProcessTensor { d: self.d, site0: self.site0.clone(), sites: self.sites[..k_new].to_vec() })
    }

    /// PPT of steps `j..j+m` with identity interventions contracted into the
    /// first `j` slots.
    pub fn window(&self, j: usize, m: usize) -> Result<Self> {
        if j + m > self.k() {
            return Err(OqeError::StepMismatch { expected: j + m, got: self.k() });
        }
        let d = self.d;
        let sqrt_d = real::<T>(d as f64).sqrt();
        let mut v = self.site0.clone();
        for s in &self.sites[..j] {
            let l = v.ncols();
            let flat = CMat::from_row_slice(d * l, 1, v.transpose().as_slice());
            let next = s * flat * Complex::from(sqrt_d);
            let r = s.nrows() / d;
            v = CMat::from_fn(d, r, |o, b| next[(o * r + b, 0)]);
        }
        Ok(PurifiedProcessTensor { d, site0: v, sites: self.sites[j..j + m].to_vec() })
    }

    /// Applies `w` to the final environment index `α_k`.
    pub fn apply_env_gauge(&self, w: &CMat<T>) -> Result<Self> {
        let chi = self.bond_dim(self.k());
        if w.shape() != (chi, chi) {
            return Err(OqeError::Shape(format!("gauge {:?} on bond of dimension {chi}", w.shape())));
        }
        let mut out = self.clone();
        let big = crate::numerics::kron(&CMat::identity(self.d, self.d), w);
        match out.sites.last_mut() {
            Some(s) => *s = &big * &*s,
            None => out.site0 = &out.site0 * w.transpose(),
        }
        Ok(out)
    }

    /// Dense purified state on legs `[d, d², …, d², χ_k]`, i.e. `o_0`, the
    /// pairs `(i_{j-1}, o_j)` and the final environment.
    pub fn to_state(&self) -> Result<LegState<T>> {
        let d = self.d;
        let k = self.k();
        let len = d.pow(2 * k as u32 + 1) * self.bond_dim(k);
        if len > MAX_STATE_LEN {
            return Err(OqeError::Resource { what: "dense PPT state", needed: len, limit: MAX_STATE_LEN });
        }
        let mut v = self.site0.clone();
        for (j, s) in self.sites.iter().enumerate() {
            let l = self.bond_dim(j);
            let r = self.bond_dim(j + 1);
            let rows = v.nrows();
            let mut next = CMat::zeros(rows * d * d, r);
            for i in 0..d {
                for o in 0..d {
                    let blk = s.view((o * r, i * l), (r, l));
                    let part = &v * blk.transpose();
                    for p in 0..rows {
                        for b in 0..r {
                            next[((p * d + i) * d + o, b)] = part[(p, b)];
                        }
                    }
                }
            }
            v = next;
        }
        let mut dims = vec![d];
        dims.extend(std::iter::repeat_n(d * d, k));
        dims.push(self.bond_dim(k));
        LegState::new(dims, v.transpose().as_slice().to_vec())
    }

    pub fn to_dense(&self) -> Result<ProcessTensorDense<T>> {
        let d = self.d;
        let k = self.k();
        let n = d.pow(2 * k as u32 + 1);
        if n > MAX_DENSE_DIM {
            return Err(OqeError::Resource { what: "dense process tensor dimension", needed: n, limit: MAX_DENSE_DIM });
        }
        let state = self.to_state()?;
        let chi = self.bond_dim(k);
        let v = CMat::from_row_slice(n, chi, state.amplitudes());
        let perm = reversal_permutation(d, 2 * k + 1);
        let vp = CMat::from_fn(n, chi, |r, c| v[(perm[r], c)]);
        Ok(ProcessTensorDense { d, k, matrix: &vp * vp.adjoint() })
    }

    /// `ρ_k` for the intervention sequence `ops` (one per slot).
    pub fn predict_state(&self, ops: &[QuantumOperation<T>]) -> Result<CMat<T>> {
        let chois: Vec<CMat<T>> = ops.iter().map(|o| o.choi()).collect();
        self.predict_state_choi(&chois)
    }

    /// `ρ_k` for interventions given by their Choi matrices
    /// `J[(i,o),(i',o')]`; any linear map is accepted.
    pub fn predict_state_choi(&self, chois: &[CMat<T>]) -> Result<CMat<T>> {
        let d = self.d;
        if chois.len() != self.k() {
            return Err(OqeError::StepMismatch { expected: self.k(), got: chois.len() });
        }
        if let Some(c) = chois.iter().find(|c| c.shape() != (d * d, d * d)) {
            return Err(OqeError::Shape(format!("Choi matrix {:?} for d = {d}", c.shape())));
        }
        let dd = real::<T>(d as f64);
        let flat0 = CMat::from_row_slice(self.site0.len(), 1, self.site0.transpose().as_slice());
        let mut x = &flat0 * flat0.adjoint();
        for (j, (s, choi)) in self.sites.iter().zip(chois).enumerate() {
            let l = self.bond_dim(j);
            let y = contract_choi(choi, &x, d, l);
            x = s * y * s.adjoint() * Complex::from(dd);
        }
        partial_trace(&x, &[d, self.bond_dim(self.k())], &[0])
    }
}

/// `Y[(i,a),(i',a')] = Σ_{o,o'} J[(i,o),(i',o')] X[(o,a),(o',a')]`.
fn contract_choi<T: Real>(choi: &CMat<T>, x: &CMat<T>, d: usize, chi: usize) -> CMat<T> {
    let mut y = CMat::zeros(d * chi, d * chi);
    for i in 0..d {
        for ip in 0..d {
            for o in 0..d {
                for op in 0..d {
                    let w = choi[(i * d + o, ip * d + op)];
                    if w == Complex::from(T::zero()) {
                        continue;
                    }
                    let src = x.view((o * chi, op * chi), (chi, chi));
                    let mut dst = y.view_mut((i * chi, ip * chi), (chi, chi));
                    dst += src * w;
                }
            }
        }
    }
    y
}

/// Index map from `(o_k, …, o_0)` ordering to the natural leg order
/// `(o_0, i_0, …, o_k)`: both are base-`d` digit reversals of each other.
fn reversal_permutation(d: usize, legs: usize) -> Vec<usize> {
    let n = d.pow(legs as u32);
    (0..n)
        .map(|mut r| {
            let mut out = 0;
            for _ in 0..legs {
                out = out * d + r % d;
                r /= d;
            }
            out
        })
        .collect()
}

impl<T: Real> ProcessTensorDense<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(eig_hermitian(&self.matrix)?.values.last().copied().unwrap_or(T::zero()))
    }

    /// Traces out the final output `o_k`; for a causal process this equals
    /// `I/d ⊗ Υ_{k-1:0}`.
    pub fn trace_final_output(&self) -> Result<CMat<T>> {
        let rest = self.dim() / self.d;
        partial_trace(&self.matrix, &[self.d, rest], &[1])
    }

    /// `ρ_k = d^k Σ Υ[(o,r),(o',r')] J[r,r']` with `J = J_{k-1} ⊗ … ⊗ J_0`.
    pub fn predict_state_choi(&self, chois: &[CMat<T>]) -> Result<CMat<T>> {
        if chois.len() != self.k {
            return Err(OqeError::StepMismatch { expected: self.k, got: chois.len() });
        }
        let mut big = CMat::from_element(1, 1, Complex::from(T::one()));
        for c in chois.iter().rev() {
            big = crate::numerics::kron(&big, c);
        }
        let d = self.d;
        let rest = big.nrows();
        if rest * d != self.dim() {
            return Err(OqeError::Shape("Choi matrices do not match the process tensor".into()));
        }
        let scale = real::<T>((d as f64).powi(self.k as i32));
        Ok(CMat::from_fn(d, d, |o, op| {
            let blk = self.matrix.view((o * rest, op * rest), (rest, rest));
            blk.component_mul(&big).sum() * scale
        }))
    }
}

fn pure_model<T: Real>(model: &OqeModel<T>) -> Result<OqeModel<T>> {
    if model.initial.is_pure() {
        Ok(model.clone())
    } else {
        model.purify()
    }
}

fn ppt_from_unitaries<'a, T: Real>(
    d: usize,
    env: usize,
    psi: &[Complex<T>],
    us: impl Iterator<Item = &'a CMat<T>>,
) -> PurifiedProcessTensor<T> {
    let scale = Complex::from(T::one() / real::<T>(d as f64).sqrt());
    PurifiedProcessTensor {
        d,
        site0: CMat::from_row_slice(d, env, psi),
        sites: us.map(|u| u * scale).collect(),
    }
}

/// PPT of the first `k` steps of `model`. Mixed initial states are purified
/// first; bond dimensions equal the (purified) environment dimension.
pub fn build_ppt<T: Real>(model: &OqeModel<T>, k: usize) -> Result<PurifiedProcessTensor<T>> {
    model.check_horizon(k)?;
    let m = pure_model(model)?;
    let psi = m.pure_state()?;
    Ok(ppt_from_unitaries(m.sys_dim, m.env_dim, psi.as_slice(), (1..=k).map(|j| m.unitary(j).expect("horizon checked"))))
}

/// Sequential circuit: each step inserts the pair `Σ_i |i⟩|i⟩/√d` in front of
/// the environment and applies the step unitary to the second half of the
/// pair and the environment. Legs `[d, d², …, d², D]`.
pub fn build_circuit_state<T: Real>(model: &OqeModel<T>, k: usize) -> Result<LegState<T>> {
    model.check_horizon(k)?;
    let m = pure_model(model)?;
    let (d, env) = (m.sys_dim, m.env_dim);
    let len = d.pow(2 * k as u32 + 1) * env;
    if len > MAX_STATE_LEN {
        return Err(OqeError::Resource { what: "circuit state", needed: len, limit: MAX_STATE_LEN });
    }
    let bell = CMat::identity(d, d) * Complex::from(T::one() / real::<T>(d as f64).sqrt());
    let mut st = LegState::new(vec![d, env], m.pure_state()?.as_slice().to_vec())?;
    for j in 1..=k {
        let n = st.dims().len();
        st = st.insert_pair(n - 1, &bell);
        let n = st.dims().len();
        st.apply(n - 2, n, m.unitary(j).expect("horizon checked"))?;
        st = st.merge(n - 3, n - 1);
    }
    Ok(st)
}

pub fn to_dense<T: Real>(ppt: &PurifiedProcessTensor<T>) -> Result<ProcessTensorDense<T>> {
    ppt.to_dense()
}

pub fn predict_state<T: Real>(ppt: &PurifiedProcessTensor<T>, ops: &[QuantumOperation<T>]) -> Result<CMat<T>> {
    ppt.predict_state(ops)
}

/// Right-canonical PPT from a dense state on legs `[d, d², …, d², E]` by a
/// right-to-left SVD sweep; bonds are truncated at the relative rank
/// threshold. The norm of the state ends up in `site0`.
pub fn ppt_from_state<T: Real>(d: usize, state: &LegState<T>) -> Result<PurifiedProcessTensor<T>> {
    let dims = state.dims();
    if dims.len() < 2 || dims[0] != d || dims[1..dims.len() - 1].iter().any(|&x| x != d * d) {
        return Err(OqeError::Shape(format!("legs {:?} are not [d, d², …, d², E] for d = {d}", dims)));
    }
    let k = dims.len() - 2;
    let mut right = dims[k + 1];
    let mut sites = Vec::with_capacity(k);
    let rows: usize = dims[..=k].iter().product();
    let mut c = CMat::from_row_slice(rows, right, state.amplitudes());
    for _ in (1..=k).rev() {
        let prefix = c.nrows() / (d * d);
        let m = CMat::from_row_slice(prefix, d * d * right, c.transpose().as_slice());
        let f = svd(&m)?;
        let r = crate::numerics::relative_rank(f.s.as_slice()).max(1);
        let vh = f.vh.rows(0, r);
        let site = CMat::from_fn(d * right, d * r, |row, col| {
            let (o, b) = (row / right, row % right);
            let (i, a) = (col / r, col % r);
            vh[(a, (i * d + o) * right + b)]
        });
        sites.push(site);
        let mut us = f.u.columns(0, r).into_owned();
        for (col, s) in f.s.iter().take(r).enumerate() {
            us.column_mut(col).scale_mut(*s);
        }
        c = us;
        right = r;
    }
    sites.reverse();
    PurifiedProcessTensor::new(d, c, sites)
}

/// `Υ_{j+m:j}`: the `m`-step process tensor of the model whose initial state
/// is the model's state at step `j` under identity interventions.
pub fn reduced_window<T: Real>(model: &OqeModel<T>, j: usize, m: usize) -> Result<ProcessTensorDense<T>> {
    window_ppt(model, j, m)?.to_dense()
}

/// PPT form of [`reduced_window`].
pub fn window_ppt<T: Real>(model: &OqeModel<T>, j: usize, m: usize) -> Result<PurifiedProcessTensor<T>> {
    model.check_horizon(j + m)?;
    let pm = pure_model(model)?;
    let mut psi = pm.pure_state()?.clone();
    for step in 1..=j {
        psi = pm.unitary(step).expect("horizon checked") * psi;
    }
    Ok(ppt_from_unitaries(
        pm.sys_dim,
        pm.env_dim,
        psi.as_slice(),
        (j + 1..=j + m).map(|s| pm.unitary(s).expect("horizon checked")),
    ))
}

/// [`reduced_window`] evaluated on a PPT.
pub fn reduced_window_ppt<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize, m: usize) -> Result<ProcessTensorDense<T>> {
    ppt.window(j, m)?.to_dense()
}

pub fn process_fidelity<T: Real>(a: &ProcessTensorDense<T>, b: &ProcessTensorDense<T>) -> Result<T> {
    if a.d != b.d || a.k != b.k {
        return Err(OqeError::Shape(format!("process tensors (d={}, k={}) vs (d={}, k={})", a.d, a.k, b.d, b.k)));
    }
    fidelity(&a.matrix, &b.matrix)
}

/// `V_a^H V_b` over all physical legs, where `V` is the PPT state reshaped
/// as (physical) x (final environment).
pub fn env_overlap<T: Real>(a: &PurifiedProcessTensor<T>, b: &PurifiedProcessTensor<T>) -> Result<CMat<T>> {
    if a.d != b.d || a.k() != b.k() {
        return Err(OqeError::Shape(format!("PPTs (d={}, k={}) vs (d={}, k={})", a.d, a.k(), b.d, b.k())));
    }
    let d = a.d;
    let mut e = a.site0.adjoint() * &b.site0;
    for j in 1..=a.k() {
        let (al, ar) = (a.bond_dim(j - 1), a.bond_dim(j));
        let (bl, br) = (b.bond_dim(j - 1), b.bond_dim(j));
        let mut next = CMat::zeros(ar, br);
        for i in 0..d {
            for o in 0..d {
                let ab = a.sites[j - 1].view((o * ar, i * al), (ar, al));
                let bb = b.sites[j - 1].view((o * br, i * bl), (br, bl));
                next += ab.map(|z| z.conj()) * &e * bb.transpose();
            }
        }
        e = next;
    }
    Ok(e)
}

/// Fidelity between the process tensors of two PPTs without forming them:
/// `‖V_a^H V_b‖_1² / (‖V_a‖² ‖V_b‖²)`.
pub fn ppt_fidelity<T: Real>(a: &PurifiedProcessTensor<T>, b: &PurifiedProcessTensor<T>) -> Result<T> {
    let e = env_overlap(a, b)?;
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let tn = svd(&e)?.s.iter().fold(T::zero(), |acc, &s| acc + s);
    Ok((tn * tn / (na * nb)).min(T::one()).max(T::zero()))
}
