//! Hidden system + environment model and its brute-force simulation.

use nalgebra::DVector;
use num_complex::Complex;

use serde::{Deserialize, Serialize};

use crate::numerics::{
    eig_hermitian, is_unitary, kron, partial_trace, random_density_matrix, random_pure_state, random_unitary_exp,
    rng_from_seed, svd, unitarity_residual,
};
use crate::{real, tol, CMat, CVec, OqeError, Real, Result};

/// System + environment initial state.
#[derive(Clone, Debug, PartialEq)]
pub enum SeState<T: Real> {
    Pure(CVec<T>),
    Mixed(CMat<T>),
}

impl<T: Real> SeState<T> {
    pub fn dim(&self) -> usize {
        match self {
            SeState::Pure(v) => v.len(),
            SeState::Mixed(m) => m.nrows(),
        }
    }

    pub fn density(&self) -> CMat<T> {
        match self {
            SeState::Pure(v) => v * v.adjoint(),
            SeState::Mixed(m) => m.clone(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, SeState::Pure(_))
    }
}

/// Per-step SE unitaries `U_{j:j-1}`, `j = 1..`.
#[derive(Clone, Debug, PartialEq)]
pub enum Evolution<T: Real> {
    TimeDependent(Vec<CMat<T>>),
    /// One unitary reused at every step, so any horizon is available.
    TimeIndependent(CMat<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OqeModel<T: Real> {
    pub sys_dim: usize,
    pub env_dim: usize,
    pub seed: Option<u64>,
    pub initial: SeState<T>,
    pub evolution: Evolution<T>,
}

impl<T: Real> OqeModel<T> {
    pub fn time_independent(sys_dim: usize, env_dim: usize, psi: CVec<T>, u: CMat<T>) -> Self {
        OqeModel { sys_dim, env_dim, seed: None, initial: SeState::Pure(psi), evolution: Evolution::TimeIndependent(u) }
    }

    pub fn time_dependent(sys_dim: usize, env_dim: usize, psi: CVec<T>, us: Vec<CMat<T>>) -> Self {
        OqeModel { sys_dim, env_dim, seed: None, initial: SeState::Pure(psi), evolution: Evolution::TimeDependent(us) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn se_dim(&self) -> usize {
        self.sys_dim * self.env_dim
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self.evolution, Evolution::TimeIndependent(_))
    }

    /// Number of available steps; `None` when time-independent.
    pub fn horizon(&self) -> Option<usize> {
        match &self.evolution {
            Evolution::TimeDependent(us) => Some(us.len()),
            Evolution::TimeIndependent(_) => None,
        }
    }

    pub fn check_horizon(&self, k: usize) -> Result<()> {
        match self.horizon() {
            Some(h) if h < k => Err(OqeError::StepMismatch { expected: k, got: h }),
            _ => Ok(()),
        }
    }

    /// `U_{j:j-1}` for `j >= 1`.
    pub fn unitary(&self, j: usize) -> Option<&CMat<T>> {
        if j == 0 {
            return None;
        }
        match &self.evolution {
            Evolution::TimeDependent(us) => us.get(j - 1),
            Evolution::TimeIndependent(u) => Some(u),
        }
    }

    pub fn pure_state(&self) -> Result<&CVec<T>> {
        match &self.initial {
            SeState::Pure(v) => Ok(v),
            SeState::Mixed(_) => Err(OqeError::ContractViolation(
                "model has a mixed initial state; purify it first".into(),
            )),
        }
    }

    /// Checks dimensions, normalization and unitarity, reporting every
    /// violation with its location.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.sys_dim == 0 || self.env_dim == 0 {
            issues.push(format!("dimensions must be positive (d = {}, D = {})", self.sys_dim, self.env_dim));
        }
        let n = self.se_dim();
        let norm_tol = tol::<T>(1e-12);
        match &self.initial {
            SeState::Pure(v) => {
                if v.len() != n {
                    issues.push(format!("initial state: length {} but d*D = {}", v.len(), n));
                }
                let norm = v.norm();
                if (norm - T::one()).abs() > norm_tol {
                    issues.push(format!("initial state: norm {} differs from 1", norm.to_f64().unwrap_or(f64::NAN)));
                }
            }
            SeState::Mixed(rho) => {
                if rho.shape() != (n, n) {
                    issues.push(format!("initial state: shape {:?} but d*D = {}", rho.shape(), n));
                } else {
                    let tr = rho.trace();
                    if (tr.re - T::one()).abs() > norm_tol || tr.im.abs() > norm_tol {
                        issues.push(format!("initial state: trace {} differs from 1", tr.re.to_f64().unwrap_or(f64::NAN)));
                    }
                    match eig_hermitian(rho) {
                        Ok(e) => {
                            if let Some(&min) = e.values.last() {
                                if min < -tol::<T>(1e-10) {
                                    issues.push(format!(
                                        "initial state: negative eigenvalue {:e}",
                                        min.to_f64().unwrap_or(f64::NAN)
                                    ));
                                }
                            }
                        }
                        Err(e) => issues.push(format!("initial state: {e}")),
                    }
                }
            }
        }
        let check_u = |label: String, u: &CMat<T>, issues: &mut Vec<String>| {
            if u.shape() != (n, n) {
                issues.push(format!("{label}: shape {:?}, expected {n}x{n}", u.shape()));
            } else if !is_unitary(u, tol::<T>(1e-12)) {
                issues.push(format!(
                    "{label}: not unitary (max |U^H U - I| = {:e})",
                    unitarity_residual(u).to_f64().unwrap_or(f64::NAN)
                ));
            }
        };
        match &self.evolution {
            Evolution::TimeDependent(us) => {
                for (i, u) in us.iter().enumerate() {
                    check_u(format!("unitary at step j = {}", i + 1), u, &mut issues);
                }
            }
            Evolution::TimeIndependent(u) => check_u("time-independent unitary".into(), u, &mut issues),
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(OqeError::Validation(issues))
        }
    }

    /// Replaces a mixed initial state by a purification on an external factor
    /// of dimension `d*D` (external index least significant), with every
    /// unitary extended as `U ⊗ I`. Pure models gain an external factor of
    /// dimension 1.
    pub fn purify(&self) -> Result<OqeModel<T>> {
        let n = self.se_dim();
        let (ext, psi) = match &self.initial {
            SeState::Pure(v) => (1, v.clone()),
            SeState::Mixed(rho) => {
                let e = eig_hermitian(rho)?;
                let mut psi = CVec::zeros(n * n);
                for (s, &p) in e.values.iter().enumerate() {
                    let w = p.max(T::zero()).sqrt();
                    for x in 0..n {
                        psi[x * n + s] = e.vectors[(x, s)].scale(w);
                    }
                }
                (n, psi)
            }
        };
        let id = CMat::identity(ext, ext);
        let evolution = match &self.evolution {
            Evolution::TimeDependent(us) => Evolution::TimeDependent(us.iter().map(|u| kron(u, &id)).collect()),
            Evolution::TimeIndependent(u) => Evolution::TimeIndependent(kron(u, &id)),
        };
        Ok(OqeModel {
            sys_dim: self.sys_dim,
            env_dim: self.env_dim * ext,
            seed: self.seed,
            initial: SeState::Pure(psi),
            evolution,
        })
    }
}

/// CP map `ρ ↦ Σ K ρ K^H`; trace non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOperation<T: Real> {
    pub dim: usize,
    pub kraus: Vec<CMat<T>>,
}

impl<T: Real> QuantumOperation<T> {
    pub fn new(kraus: Vec<CMat<T>>) -> Result<Self> {
        let dim = kraus.first().map(|k| k.nrows()).ok_or_else(|| OqeError::Shape("operation needs at least one Kraus operator".into()))?;
        if kraus.iter().any(|k| k.shape() != (dim, dim)) {
            return Err(OqeError::Shape("Kraus operators must all be square and of equal size".into()));
        }
        let op = QuantumOperation { dim, kraus };
        let gram = op.kraus_gram();
        let top = eig_hermitian(&gram)?.values[0];
        if top > T::one() + tol::<T>(1e-10) {
            return Err(OqeError::ContractViolation(format!(
                "Kraus operators increase trace (largest eigenvalue of ΣK^HK is {})",
                top.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        QuantumOperation { dim, kraus: vec![CMat::identity(dim, dim)] }
    }

    pub fn unitary(u: CMat<T>) -> Result<Self> {
        Self::new(vec![u])
    }

    fn kraus_gram(&self) -> CMat<T> {
        self.kraus.iter().fold(CMat::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k)
    }

    pub fn is_trace_preserving(&self) -> bool {
        let g = self.kraus_gram();
        crate::numerics::max_abs_diff(&g, &CMat::identity(self.dim, self.dim)) <= tol::<T>(1e-10)
    }

    pub fn apply(&self, rho: &CMat<T>) -> CMat<T> {
        self.kraus.iter().fold(CMat::zeros(self.dim, self.dim), |acc, k| acc + k * rho * k.adjoint())
    }

    /// Acts on the system factor of a system-major SE operator.
    pub fn apply_on_system(&self, rho_se: &CMat<T>, env_dim: usize) -> CMat<T> {
        let id = CMat::identity(env_dim, env_dim);
        self.kraus.iter().fold(CMat::zeros(rho_se.nrows(), rho_se.ncols()), |acc, k| {
            let big = kron(k, &id);
            acc + &big * rho_se * big.adjoint()
        })
    }

    /// Choi-type matrix `J[(i,o),(i',o')] = Σ_K K[i,o] conj(K[i',o'])`, output
    /// index `i` most significant. Contracting it against the input pair of
    /// a process-tensor slot applies the operation.
    pub fn choi(&self) -> CMat<T> {
        let d = self.dim;
        let mut j = CMat::zeros(d * d, d * d);
        for k in &self.kraus {
            let v: Vec<Complex<T>> = (0..d * d).map(|x| k[(x / d, x % d)]).collect();
            for r in 0..d * d {
                for c in 0..d * d {
                    j[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        j
    }
}

/// Kind of random initial SE state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// `ψ^S ⊗ ψ^E` with both factors random.
    Separable,
    /// Random pure SE state.
    Pure,
    /// Random full-rank SE density matrix.
    Mixed,
}

impl std::str::FromStr for InitKind {
    type Err = OqeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separable" => Ok(InitKind::Separable),
            "pure" => Ok(InitKind::Pure),
            "mixed" => Ok(InitKind::Mixed),
            other => Err(OqeError::Domain(format!("unknown initial state kind '{other}'"))),
        }
    }
}

/// Seeded random model with unitaries `exp(iηH)`. `steps = None` gives a
/// time-independent model; `Some(k)` draws `k` independent unitaries. The
/// initial state is drawn first, then the unitaries.
pub fn random_model<T: Real>(
    sys_dim: usize,
    env_dim: usize,
    eta: T,
    init: InitKind,
    steps: Option<usize>,
    seed: u64,
) -> OqeModel<T> {
    let mut rng = rng_from_seed(seed);
    let n = sys_dim * env_dim;
    let initial = match init {
        InitKind::Separable => {
            let s: CVec<T> = random_pure_state(sys_dim, &mut rng);
            SeState::Pure(s.kronecker(&random_pure_state(env_dim, &mut rng)))
        }
        InitKind::Pure => SeState::Pure(random_pure_state(n, &mut rng)),
        InitKind::Mixed => SeState::Mixed(random_density_matrix(n, &mut rng)),
    };
    let evolution = match steps {
        None => Evolution::TimeIndependent(random_unitary_exp(n, eta, &mut rng)),
        Some(k) => Evolution::TimeDependent((0..k).map(|_| random_unitary_exp(n, eta, &mut rng)).collect()),
    };
    OqeModel { sys_dim, env_dim, seed: Some(seed), initial, evolution }
}

/// `ρ_k = tr_E(𝒰_k Λ_{k-1} … 𝒰_1 Λ_0 ρ_0^{SE})` by dense SE evolution.
pub fn simulate_process<T: Real>(model: &OqeModel<T>, ops: &[QuantumOperation<T>]) -> Result<CMat<T>> {
    let k = ops.len();
    model.check_horizon(k)?;
    if let Some(op) = ops.iter().find(|op| op.dim != model.sys_dim) {
        return Err(OqeError::Shape(format!("operation of dimension {} on a {}-level system", op.dim, model.sys_dim)));
    }
    let mut rho = model.initial.density();
    for (j, op) in ops.iter().enumerate() {
        rho = op.apply_on_system(&rho, model.env_dim);
        let u = model.unitary(j + 1).expect("horizon checked");
        rho = u * rho * u.adjoint();
    }
    partial_trace(&rho, &[model.sys_dim, model.env_dim], &[0])
}

/// `d^4` operations whose Choi matrices span the whole operation space: the
/// identity channel followed by measure-and-prepare maps `ρ ↦ ⟨ψ_m|ρ|ψ_m⟩ |ψ_n⟩⟨ψ_n|`
/// over an informationally complete set of `d²` pure states (one of those
/// maps is dropped to make room for the identity).
pub fn informationally_complete_ops<T: Real>(d: usize) -> Result<Vec<QuantumOperation<T>>> {
    if d < 2 {
        return Err(OqeError::Domain(format!("informationally complete set needs d >= 2, got {d}")));
    }
    let h = real::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let mut states: Vec<CVec<T>> = (0..d)
        .map(|k| {
            let mut v = CVec::zeros(d);
            v[k] = Complex::from(T::one());
            v
        })
        .collect();
    for a in 0..d {
        for b in a + 1..d {
            for phase in [Complex::from(T::one()), Complex::new(T::zero(), T::one())] {
                let mut v: DVector<Complex<T>> = CVec::zeros(d);
                v[a] = Complex::from(h);
                v[b] = phase.scale(h);
                states.push(v);
            }
        }
    }
    let mut ops = vec![QuantumOperation::identity(d)];
    let candidates: Vec<QuantumOperation<T>> = states
        .iter()
        .flat_map(|m| states.iter().map(move |n| QuantumOperation { dim: d, kraus: vec![n * m.adjoint()] }))
        .collect();
    // drop the last candidate that keeps the set spanning
    for skip in (0..candidates.len()).rev() {
        let trial: Vec<_> = ops
            .iter()
            .cloned()
            .chain(candidates.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, o)| o.clone()))
            .collect();
        if choi_rank(&trial)? == d.pow(4) {
            ops = trial;
            return Ok(ops);
        }
    }
    Err(OqeError::NumericalFailure { rows: d.pow(4), cols: d.pow(4) })
}

/// Rank of the vectorized Choi matrices of `ops`.
pub fn choi_rank<T: Real>(ops: &[QuantumOperation<T>]) -> Result<usize> {
    let cols: Vec<CMat<T>> = ops.iter().map(|o| o.choi()).collect();
    let len = cols.first().map(|c| c.len()).unwrap_or(0);
    let m = CMat::from_fn(len, cols.len(), |r, c| cols[c][r]);
    let s = svd(&m)?.s;
    Ok(crate::numerics::relative_rank(s.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_abs_diff, random_haar_unitary};
    use crate::C64;

    fn model(d: usize, dd: usize, seed: u64) -> OqeModel<f64> {
        random_model(d, dd, 0.8, InitKind::Pure, None, seed)
    }

    fn random_op(d: usize, rng: &mut crate::numerics::SeedRng) -> QuantumOperation<f64> {
        // two-outcome instrument branch: sqrt(p) U
        let u1 = random_haar_unitary::<f64, _>(d, rng);
        let u2 = random_haar_unitary::<f64, _>(d, rng);
        QuantumOperation::new(vec![u1 * C64::from(0.6f64.sqrt()), u2 * C64::from(0.3f64.sqrt())]).unwrap()
    }

    #[test]
    fn validation_reports_each_issue() {
        let m = model(2, 3, 1);
        assert!(m.validate().is_ok());

        let mut bad = m.clone();
        if let SeState::Pure(v) = &mut bad.initial {
            *v *= C64::from(2.0);
        }
        let err = bad.validate().unwrap_err();
        assert!(err.to_string().contains("norm"), "{err}");

        let mut rng = rng_from_seed(4);
        let mut us: Vec<CMat<f64>> = (0..3).map(|_| random_haar_unitary(6, &mut rng)).collect();
        us[1][(0, 0)] += C64::from(0.1);
        let td = OqeModel::time_dependent(2, 3, random_pure_state(6, &mut rng), us);
        let err = td.validate().unwrap_err();
        assert!(err.to_string().contains("step j = 2"), "{err}");
    }

    #[test]
    fn zero_steps_is_reduced_initial_state() {
        let m = model(2, 3, 2);
        let rho = simulate_process(&m, &[]).unwrap();
        let expect = partial_trace(&m.initial.density(), &[2, 3], &[0]).unwrap();
        assert!(max_abs_diff(&rho, &expect) < 1e-15);
    }

    #[test]
    fn decoupled_evolution_is_unitary_on_system() {
        let mut rng = rng_from_seed(3);
        let us = random_haar_unitary::<f64, _>(2, &mut rng);
        let ue = random_haar_unitary::<f64, _>(3, &mut rng);
        let ps = random_pure_state::<f64, _>(2, &mut rng);
        let pe = random_pure_state::<f64, _>(3, &mut rng);
        let psi = ps.kronecker(&pe);
        let m = OqeModel::time_independent(2, 3, psi, kron(&us, &ue));
        let ops = vec![QuantumOperation::identity(2); 4];
        let rho = simulate_process(&m, &ops).unwrap();
        let mut uk = CMat::identity(2, 2);
        for _ in 0..4 {
            uk = &us * uk;
        }
        let expect = &uk * (&ps * ps.adjoint()) * uk.adjoint();
        assert!(max_abs_diff(&rho, &expect) < 1e-13);

        // environment initial state does not matter
        let pe2 = random_pure_state::<f64, _>(3, &mut rng);
        let m2 = OqeModel::time_independent(2, 3, ps.kronecker(&pe2), kron(&us, &ue));
        assert!(max_abs_diff(&simulate_process(&m2, &ops).unwrap(), &rho) < 1e-13);
    }

    #[test]
    fn trace_preserving_ops_keep_unit_trace() {
        let m = model(2, 3, 5);
        let mut rng = rng_from_seed(6);
        for k in 0..5 {
            let ops: Vec<_> = (0..k).map(|_| QuantumOperation::unitary(random_haar_unitary(2, &mut rng)).unwrap()).collect();
            let rho = simulate_process(&m, &ops).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-10);
            let ops: Vec<_> = (0..k).map(|_| random_op(2, &mut rng)).collect();
            let t = simulate_process(&m, &ops).unwrap().trace().re;
            assert!(t > 0.0 && t <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn step_count_checked() {
        let mut rng = rng_from_seed(7);
        let us = vec![random_haar_unitary::<f64, _>(4, &mut rng)];
        let m = OqeModel::time_dependent(2, 2, random_pure_state(4, &mut rng), us);
        let ops = vec![QuantumOperation::identity(2); 2];
        assert!(matches!(simulate_process(&m, &ops), Err(OqeError::StepMismatch { .. })));
    }

    #[test]
    fn purify_pure_is_identity_transformation() {
        let m = model(2, 3, 8);
        let p = m.purify().unwrap();
        assert_eq!(p.env_dim, 3);
        assert_eq!(p.initial, m.initial);
        assert_eq!(p.evolution, m.evolution);
    }

    #[test]
    fn purification_schmidt_coefficients() {
        let ra = CMat::<f64>::from_diagonal(&DVector::from_vec(vec![C64::from(0.75), C64::from(0.25)]));
        let mut rng = rng_from_seed(9);
        let rb = random_density_matrix::<f64, _>(2, &mut rng);
        let rho = kron(&ra, &rb);
        let m = OqeModel {
            sys_dim: 2,
            env_dim: 2,
            seed: None,
            initial: SeState::Mixed(rho.clone()),
            evolution: Evolution::TimeIndependent(random_unitary_exp(4, 0.5, &mut rng)),
        };
        let p = m.purify().unwrap();
        assert_eq!(p.env_dim, 8);
        let psi = p.pure_state().unwrap();
        let mat = CMat::from_row_slice(4, 4, psi.as_slice());
        let sv = svd(&mat).unwrap().s;
        let ev = eig_hermitian(&rho).unwrap().values;
        for (s, e) in sv.iter().zip(ev.iter()) {
            assert!((s - e.max(0.0).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn purified_model_reproduces_mixed_dynamics() {
        for seed in 0..100u64 {
            let mut rng = rng_from_seed(1000 + seed);
            let rho = random_density_matrix::<f64, _>(4, &mut rng);
            let u = random_unitary_exp(4, 1.0, &mut rng);
            let m = OqeModel {
                sys_dim: 2,
                env_dim: 2,
                seed: Some(seed),
                initial: SeState::Mixed(rho),
                evolution: Evolution::TimeIndependent(u),
            };
            let p = m.purify().unwrap();
            let k = (seed % 4) as usize;
            let ops: Vec<_> = (0..k).map(|_| random_op(2, &mut rng)).collect();
            let a = simulate_process(&m, &ops).unwrap();
            let b = simulate_process(&p, &ops).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-10);
        }
    }

    #[test]
    fn ic_set_spans_operation_space() {
        let ops = informationally_complete_ops::<f64>(2).unwrap();
        assert_eq!(ops.len(), 16);
        assert_eq!(choi_rank(&ops).unwrap(), 16);
        assert_eq!(ops[0], QuantumOperation::identity(2));
        let ops3 = informationally_complete_ops::<f64>(3).unwrap();
        assert_eq!(ops3.len(), 81);
        assert_eq!(choi_rank(&ops3).unwrap(), 81);
        for op in ops.iter().chain(ops3.iter()) {
            assert!(QuantumOperation::new(op.kraus.clone()).is_ok());
        }
    }

    #[test]
    fn choi_contraction_applies_operation() {
        let mut rng = rng_from_seed(10);
        let op = random_op(3, &mut rng);
        let rho = random_density_matrix::<f64, _>(3, &mut rng);
        let j = op.choi();
        let out = CMat::from_fn(3, 3, |i, ip| {
            let mut acc = C64::from(0.0);
            for o in 0..3 {
                for op_ in 0..3 {
                    acc += j[(i * 3 + o, ip * 3 + op_)] * rho[(o, op_)];
                }
            }
            acc
        });
        assert!(max_abs_diff(&out, &op.apply(&rho)) < 1e-14);
    }

    #[test]
    fn trace_increasing_kraus_rejected() {
        let k = CMat::<f64>::identity(2, 2) * C64::from(1.1);
        assert!(QuantumOperation::new(vec![k]).is_err());
        assert!(QuantumOperation::<f64>::identity(2).is_trace_preserving());
    }

    #[test]
    fn random_models_are_valid_and_reproducible() {
        for init in [InitKind::Separable, InitKind::Pure, InitKind::Mixed] {
            let a = random_model::<f64>(2, 3, 0.1, init, None, 4);
            a.validate().unwrap();
            assert_eq!(a, random_model(2, 3, 0.1, init, None, 4));
            assert_ne!(a, random_model(2, 3, 0.1, init, None, 5));
        }
        let td = random_model::<f64>(2, 2, 1.0, InitKind::Pure, Some(3), 1);
        assert_eq!(td.horizon(), Some(3));
        let sep = random_model::<f64>(2, 3, 0.1, InitKind::Separable, None, 2);
        let psi = sep.pure_state().unwrap();
        let m = CMat::from_fn(2, 3, |s, e| psi[s * 3 + e]);
        assert_eq!(crate::numerics::relative_rank(svd(&m).unwrap().s.as_slice()), 1);
        assert!("thermal".parse::<InitKind>().is_err());
    }
}
