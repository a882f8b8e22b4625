//! Window-wise disentangling tomography of the purified process tensor.
//!
//! A sweep over windows of `κ` neighbouring sites measures each window's
//! reduced state, applies the gate mapping its eigenbasis onto the
//! computational basis (which frees the leading site into `|0⟩`), and moves
//! one site to the right. The spectrum of the last window, together with the
//! recorded gates, determines the PPT up to a unitary on the environment.

use serde::{Deserialize, Serialize};

use crate::numerics::{complete_basis, eig_hermitian, LegState};
use crate::oqe::OqeModel;
use crate::process_tensor::{build_circuit_state, ppt_from_state, PurifiedProcessTensor};
use crate::{real, tol, CMat, OqeError, Real, Result};

/// Eigenvalues below this fraction of the largest are completed from the
/// canonical basis instead of taken from the eigensolver.
const KERNEL_CUT: f64 = 1e-14;

/// Leakage allowed on top of the oracle's noise level.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TomographyPlan {
    pub d: usize,
    pub k: usize,
    pub d_bound: usize,
    pub kappa: usize,
    pub f: usize,
}

impl TomographyPlan {
    /// Window `j` covers sites `j..j+κ`.
    pub fn window(&self, j: usize) -> (usize, usize) {
        (j, j + self.kappa)
    }

    /// Dimension of the sites following the first one in a window.
    pub fn capacity(&self) -> usize {
        self.d.pow(2 * (self.kappa as u32 - 1))
    }

    pub fn num_windows(&self) -> usize {
        self.f + 1
    }
}

/// Window size `κ = ⌈log_{d²} D⌉ + 1`.
pub fn window_size(d: usize, d_bound: usize) -> Result<usize> {
    if d < 2 {
        return Err(OqeError::Domain(format!("system dimension must be at least 2, got {d}")));
    }
    if d_bound == 0 {
        return Err(OqeError::Domain("environment bound must be at least 1".into()));
    }
    let mut kappa = 1;
    let mut cap = 1usize;
    while cap < d_bound {
        cap = cap.saturating_mul(d * d);
        kappa += 1;
    }
    Ok(kappa)
}

/// Window size `κ` and number of sweeps `f = k − κ + 1`.
pub fn plan(d: usize, k: usize, d_bound: usize) -> Result<TomographyPlan> {
    let kappa = window_size(d, d_bound)?;
    if k < kappa {
        return Err(OqeError::HorizonTooShort { k, kappa });
    }
    Ok(TomographyPlan { d, k, d_bound, kappa, f: k - kappa + 1 })
}

/// Number of local tomography runs and of real parameters they estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub runs: usize,
    pub window_dim: usize,
    pub parameters: usize,
}

pub fn cost_estimate(plan: &TomographyPlan) -> CostEstimate {
    let runs = plan.k - plan.kappa + 2;
    let window_dim = plan.d.pow(2 * plan.kappa as u32);
    CostEstimate { runs, window_dim, parameters: runs * window_dim * window_dim }
}

/// Access to the state being disentangled: local tomography of contiguous
/// sites and application of gates to them.
pub trait MeasurementOracle<T: Real> {
    /// Physical site dimensions `[d, d², …, d²]`.
    fn site_dims(&self) -> Vec<usize>;
    /// Noise level of the tomography estimates.
    fn noise(&self) -> f64;
    fn tomography(&self, start: usize, end: usize) -> Result<CMat<T>>;
    fn apply_gate(&mut self, start: usize, end: usize, gate: &CMat<T>) -> Result<()>;
}

/// Simulator backend: exact dense circuit state with depolarized estimates
/// `(1 − ε) ρ + ε I / dim`.
#[derive(Clone, Debug)]
pub struct CircuitOracle<T: Real> {
    state: LegState<T>,
    epsilon: f64,
}

impl<T: Real> CircuitOracle<T> {
    pub fn new(model: &OqeModel<T>, k: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(OqeError::Domain(format!("noise level must lie in [0, 1), got {epsilon}")));
        }
        Ok(CircuitOracle { state: build_circuit_state(model, k)?, epsilon })
    }

    pub fn state(&self) -> &LegState<T> {
        &self.state
    }
}

impl<T: Real> MeasurementOracle<T> for CircuitOracle<T> {
    fn site_dims(&self) -> Vec<usize> {
        let dims = self.state.dims();
        dims[..dims.len() - 1].to_vec()
    }

    fn noise(&self) -> f64 {
        self.epsilon
    }

    fn tomography(&self, start: usize, end: usize) -> Result<CMat<T>> {
        if end >= self.state.dims().len() {
            return Err(OqeError::Shape(format!("window {start}..{end} reaches the environment")));
        }
        let mut rho = self.state.reduced(start, end)?;
        let n = rho.nrows();
        if self.epsilon > 0.0 {
            let eps = real::<T>(self.epsilon);
            rho *= crate::Complex::from(T::one() - eps);
            for i in 0..n {
                rho[(i, i)] += crate::Complex::from(eps / real::<T>(n as f64));
            }
        }
        let herm = (&rho + rho.adjoint()) * crate::Complex::from(real::<T>(0.5));
        let tr = herm.trace().re;
        Ok(herm / crate::Complex::from(tr))
    }

    fn apply_gate(&mut self, start: usize, end: usize, gate: &CMat<T>) -> Result<()> {
        if end >= self.state.dims().len() {
            return Err(OqeError::Shape(format!("window {start}..{end} reaches the environment")));
        }
        self.state.apply(start, end, gate)
    }
}

pub fn local_tomography<T: Real, O: MeasurementOracle<T> + ?Sized>(
    oracle: &O,
    start: usize,
    end: usize,
) -> Result<CMat<T>> {
    oracle.tomography(start, end)
}

/// Gate `O_j = Σ_l |l⟩⟨φ_l|` for the eigenvectors `φ_l` of a window state in
/// descending eigenvalue order.
#[derive(Clone, Debug, PartialEq)]
pub struct Disentangler<T: Real> {
    pub start: usize,
    pub end: usize,
    pub gate: CMat<T>,
    /// Window spectrum in descending order.
    pub spectrum: Vec<T>,
}

pub fn build_disentangler<T: Real>(rho_window: &CMat<T>, plan: &TomographyPlan, j: usize) -> Result<Disentangler<T>> {
    let (start, end) = plan.window(j);
    let e = eig_hermitian(rho_window)?;
    let n = rho_window.nrows();
    let top = e.values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let cut = top * real::<T>(KERNEL_CUT);
    let keep = e.values.iter().take_while(|&&v| v > cut).count();
    let mut basis = CMat::zeros(n, n);
    basis.columns_mut(0, keep).copy_from(&e.vectors.columns(0, keep));
    if keep < n {
        let rest = complete_basis(&e.vectors.columns(0, keep).into_owned());
        basis.columns_mut(keep, n - keep).copy_from(&rest);
    }
    Ok(Disentangler { start, end, gate: basis.adjoint(), spectrum: e.values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub start: usize,
    pub end: usize,
    pub spectrum: Vec<f64>,
    /// Weight beyond the first `D_bound` eigenvalues.
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyTranscript {
    pub plan: TomographyPlan,
    pub epsilon: f64,
    pub cost: CostEstimate,
    pub windows: Vec<WindowRecord>,
    /// Squared Schmidt coefficients `λ_s²` of the final environment cut.
    pub final_spectrum: Vec<f64>,
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Full sweep: returns the reconstructed PPT (right-canonical, environment
/// basis chosen as the computational basis) and the transcript.
pub fn run_tomography<T: Real, O: MeasurementOracle<T> + ?Sized>(
    oracle: &mut O,
    plan: &TomographyPlan,
) -> Result<(PurifiedProcessTensor<T>, TomographyTranscript)> {
    let dims = oracle.site_dims();
    if dims.len() != plan.k + 1 {
        return Err(OqeError::StepMismatch { expected: plan.k, got: dims.len().saturating_sub(1) });
    }
    let threshold = LEAKAGE_TOLERANCE + oracle.noise();
    let mut gates = Vec::with_capacity(plan.num_windows());
    let mut windows = Vec::with_capacity(plan.num_windows());
    for j in 0..plan.num_windows() {
        let (start, end) = plan.window(j);
        let rho = local_tomography(oracle, start, end)?;
        let dis = build_disentangler(&rho, plan, j)?;
        let leakage = dis.spectrum.iter().skip(plan.d_bound).fold(0.0, |acc, &v| acc + to_f64(v).max(0.0));
        windows.push(WindowRecord { start, end, spectrum: dis.spectrum.iter().map(|&v| to_f64(v)).collect(), leakage });
        if !(leakage <= threshold) {
            return Err(OqeError::EnvBoundTooSmall { leakage, location: format!("window {start}..{end}") });
        }
        oracle.apply_gate(start, end, &dis.gate)?;
        gates.push(dis);
    }

    // After the last gate the trailing κ−1 sites hold Σ_s λ_s |s⟩ ⊗ |b_s⟩_E.
    let last = gates.last().expect("at least one window");
    let weights: Vec<T> = last.spectrum.iter().take(plan.d_bound).map(|&v| v.max(T::zero())).collect();
    let total = weights.iter().fold(T::zero(), |a, &b| a + b);
    let weights: Vec<T> = weights.iter().map(|&w| w / total).collect();

    let env = plan.d_bound;
    let mut state_dims = dims.clone();
    state_dims.push(env);
    let len: usize = state_dims.iter().product();
    let mut amps = vec![crate::Complex::from(T::zero()); len];
    for (s, &w) in weights.iter().enumerate() {
        amps[s * env + s] = crate::Complex::from(w.sqrt());
    }
    let mut state = LegState::new(state_dims, amps)?;
    for g in gates.iter().rev() {
        state.apply(g.start, g.end, &g.gate.adjoint())?;
    }
    let ppt = ppt_from_state(plan.d, &state)?;
    debug_assert!(ppt.max_canonical_residual() < tol::<T>(1e-8));

    let transcript = TomographyTranscript {
        plan: *plan,
        epsilon: oracle.noise(),
        cost: cost_estimate(plan),
        windows,
        final_spectrum: weights.iter().map(|&v| to_f64(v)).collect(),
    };
    Ok((ppt, transcript))
}

/// Tomography of the `k`-step process of `model` through its circuit state.
pub fn tomography_of_model<T: Real>(
    model: &OqeModel<T>,
    k: usize,
    d_bound: usize,
    epsilon: f64,
) -> Result<(PurifiedProcessTensor<T>, TomographyTranscript)> {
    let p = plan(model.sys_dim, k, d_bound)?;
    let mut oracle = CircuitOracle::new(model, k, epsilon)?;
    run_tomography(&mut oracle, &p)
}
