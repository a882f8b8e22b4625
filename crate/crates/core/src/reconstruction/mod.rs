//! Recovery of a unitary OQE model from a reconstructed PPT by maximum
//! likelihood over parameterized unitaries.
//!
//! The loss is `‖W|Υ̃⟩ − |Υ⟩‖²`, where `|Υ̃⟩` is the PPT of the candidate
//! model and `W` acts on the final environment index (time-independent mode
//! only; `W = I` otherwise).

mod lbfgs;

pub use lbfgs::{minimize, IterationRecord, Minimum, OptimizerSettings, StopReason};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{complete_columns, kron, nearest_unitary, random_haar_unitary, rng_from_seed, svd, UnitaryParams};
use crate::oqe::OqeModel;
use crate::process_tensor::{reduced_window, ProcessTensorDense, PurifiedProcessTensor};
use crate::{real, CMat, CVec, OqeError, Real, Result};

/// Dense loss evaluation is used up to this many state amplitudes.
const DENSE_LOSS_LIMIT: usize = 1 << 16;
const ALIGN_SWEEPS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    TimeDependent,
    TimeIndependent,
}

impl std::str::FromStr for FitMode {
    type Err = OqeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time-dependent" => Ok(FitMode::TimeDependent),
            "time-independent" => Ok(FitMode::TimeIndependent),
            other => Err(OqeError::Domain(format!("unknown fit mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionProblem<T: Real> {
    /// Target PPT with its final bond padded to `env_dim`.
    pub target: PurifiedProcessTensor<T>,
    pub mode: FitMode,
    pub env_dim: usize,
    pub settings: OptimizerSettings,
    /// Seeds of additional random starts, run besides the site-based start.
    pub restarts: Vec<u64>,
}

impl<T: Real> ReconstructionProblem<T> {
    pub fn new(target: &PurifiedProcessTensor<T>, mode: FitMode) -> Result<Self> {
        let env_dim = target.bond_dims().into_iter().max().unwrap_or(1);
        Self::with_env_dim(target, mode, env_dim)
    }

    pub fn with_env_dim(target: &PurifiedProcessTensor<T>, mode: FitMode, env_dim: usize) -> Result<Self> {
        let min_k = match mode {
            FitMode::TimeDependent => 1,
            FitMode::TimeIndependent => 2,
        };
        if target.k() < min_k {
            return Err(OqeError::HorizonTooShort { k: target.k(), kappa: min_k });
        }
        if let Some(j) = target.bond_dims().iter().position(|&b| b > env_dim) {
            return Err(OqeError::Shape(format!(
                "bond {j} has dimension {} above the environment dimension {env_dim}",
                target.bond_dim(j)
            )));
        }
        Ok(ReconstructionProblem {
            target: pad_final_bond(target, env_dim),
            mode,
            env_dim,
            settings: OptimizerSettings::default(),
            restarts: Vec::new(),
        })
    }

    pub fn settings(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn restarts(mut self, seeds: Vec<u64>) -> Self {
        self.restarts = seeds;
        self
    }

    pub fn sys_dim(&self) -> usize {
        self.target.d
    }

    pub fn k(&self) -> usize {
        self.target.k()
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructedOqe<T: Real> {
    pub model: OqeModel<T>,
    /// Environment unitary `Ũ^E` (time-independent fits).
    pub gauge: Option<CMat<T>>,
    pub loss: T,
    pub log: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
    /// Seed of the winning start; `None` for the site-based start.
    pub start: Option<u64>,
}

impl<T: Real> ReconstructedOqe<T> {
    pub fn predict_future(&self, j: usize, m: usize) -> Result<ProcessTensorDense<T>> {
        predict_future(self, j, m)
    }
}

fn pad_final_bond<T: Real>(ppt: &PurifiedProcessTensor<T>, env: usize) -> PurifiedProcessTensor<T> {
    let d = ppt.d;
    let chi = ppt.bond_dim(ppt.k());
    if chi == env {
        return ppt.clone();
    }
    let mut out = ppt.clone();
    match out.sites.last_mut() {
        Some(s) => {
            let cols = s.ncols();
            let mut padded = CMat::zeros(d * env, cols);
            for o in 0..d {
                padded.view_mut((o * env, 0), (chi, cols)).copy_from(&s.view((o * chi, 0), (chi, cols)));
            }
            *s = padded;
        }
        None => {
            let mut padded = CMat::zeros(d, env);
            padded.view_mut((0, 0), (d, chi)).copy_from(&out.site0);
            out.site0 = padded;
        }
    }
    out
}

/// Closest unitary to a site tensor embedded in the full `dD x dD` space.
/// Columns of the thin left bond are fitted by a polar factor; padding
/// columns are completed deterministically.
fn site_unitary<T: Real>(site: &CMat<T>, d: usize, env: usize) -> Result<CMat<T>> {
    let (cr, cl) = (site.nrows() / d, site.ncols() / d);
    let scale = Complex::from(real::<T>(d as f64).sqrt());
    let n = d * env;
    let mut y = CMat::zeros(n, d * cl);
    for o in 0..d {
        y.view_mut((o * env, 0), (cr, d * cl)).copy_from(&(site.view((o * cr, 0), (cr, d * cl)) * scale));
    }
    let f = svd(&y)?;
    let q = &f.u * &f.vh;
    let extra = complete_columns(&q, n - q.ncols());
    let mut u = CMat::zeros(n, n);
    let mut next_extra = 0;
    for i in 0..d {
        for a in 0..env {
            let col = if a < cl {
                q.column(i * cl + a).into_owned()
            } else {
                next_extra += 1;
                extra.column(next_extra - 1).into_owned()
            };
            u.set_column(i * env + a, &col);
        }
    }
    Ok(u)
}

fn initial_state<T: Real>(site0: &CMat<T>, env: usize) -> Result<CVec<T>> {
    let (d, chi) = site0.shape();
    let mut psi = CVec::zeros(d * env);
    for o in 0..d {
        for a in 0..chi {
            psi[o * env + a] = site0[(o, a)];
        }
    }
    let norm = psi.norm();
    if norm <= T::zero() {
        return Err(OqeError::ContractViolation("target PPT has a vanishing initial site".into()));
    }
    Ok(psi.unscale(norm))
}

/// Unitary whose first column is `psi`.
fn state_unitary<T: Real>(psi: &CVec<T>) -> CMat<T> {
    let n = psi.len();
    let col = CMat::from_column_slice(n, 1, psi.as_slice());
    let rest = complete_columns(&col, n - 1);
    let mut v = CMat::zeros(n, n);
    v.set_column(0, &psi.clone());
    for c in 0..rest.ncols() {
        v.set_column(c + 1, &rest.column(c).into_owned());
    }
    v
}

/// Loss and gradient for one problem, over a flat parameter vector.
///
/// Layout: time-dependent `[U_1, …, U_k]` with the initial state fixed by
/// the target; time-independent `[V, U, W]` with `ψ̃ = V|0⟩`.
pub struct Objective<'a, T: Real> {
    problem: &'a ReconstructionProblem<T>,
    fixed_psi: Option<CVec<T>>,
    target_amps: Option<Vec<Complex<T>>>,
}

struct Parts<T: Real> {
    params: Vec<UnitaryParams<T>>,
    psi: CVec<T>,
    us: Vec<CMat<T>>,
    gauge: Option<CMat<T>>,
}

impl<'a, T: Real> Objective<'a, T> {
    pub fn new(problem: &'a ReconstructionProblem<T>) -> Result<Self> {
        let fixed_psi = match problem.mode {
            FitMode::TimeDependent => Some(initial_state(&problem.target.site0, problem.env_dim)?),
            FitMode::TimeIndependent => None,
        };
        let len = problem.sys_dim().pow(2 * problem.k() as u32 + 1) * problem.env_dim;
        let target_amps =
            if len <= DENSE_LOSS_LIMIT { Some(problem.target.to_state()?.into_amplitudes()) } else { None };
        Ok(Objective { problem, fixed_psi, target_amps })
    }

    fn n(&self) -> usize {
        self.problem.sys_dim() * self.problem.env_dim
    }

    pub fn num_params(&self) -> usize {
        let n2 = self.n() * self.n();
        match self.problem.mode {
            FitMode::TimeDependent => self.problem.k() * n2,
            FitMode::TimeIndependent => 2 * n2 + self.problem.env_dim * self.problem.env_dim,
        }
    }

    fn unpack(&self, x: &[T]) -> Result<Parts<T>> {
        if x.len() != self.num_params() {
            return Err(OqeError::Shape(format!("expected {} parameters, got {}", self.num_params(), x.len())));
        }
        let n = self.n();
        let n2 = n * n;
        let env = self.problem.env_dim;
        match self.problem.mode {
            FitMode::TimeDependent => {
                let params =
                    x.chunks(n2).map(|c| UnitaryParams::from_flat(n, c)).collect::<Result<Vec<_>>>()?;
                let us = params.iter().map(|p| p.to_unitary()).collect::<Result<Vec<_>>>()?;
                let psi = self.fixed_psi.clone().expect("fixed state in time-dependent mode");
                Ok(Parts { params, psi, us, gauge: None })
            }
            FitMode::TimeIndependent => {
                let pv = UnitaryParams::from_flat(n, &x[..n2])?;
                let pu = UnitaryParams::from_flat(n, &x[n2..2 * n2])?;
                let pw = UnitaryParams::from_flat(env, &x[2 * n2..])?;
                let psi = pv.to_unitary()?.column(0).into_owned();
                let us = vec![pu.to_unitary()?];
                let w = pw.to_unitary()?;
                Ok(Parts { params: vec![pv, pu, pw], psi, us, gauge: Some(w) })
            }
        }
    }

    fn model_ppt(&self, parts: &Parts<T>) -> PurifiedProcessTensor<T> {
        let d = self.problem.sys_dim();
        let env = self.problem.env_dim;
        let scale = Complex::from(T::one() / real::<T>(d as f64).sqrt());
        let sites =
            (0..self.problem.k()).map(|j| &parts.us[j.min(parts.us.len() - 1)] * scale).collect();
        PurifiedProcessTensor { d, site0: CMat::from_row_slice(d, env, parts.psi.as_slice()), sites }
    }

    fn dense_loss(&self, parts: &Parts<T>, target: &[Complex<T>]) -> Result<T> {
        let env = self.problem.env_dim;
        let amps = self.model_ppt(parts).to_state()?.into_amplitudes();
        let mut acc = T::zero();
        for (chunk, t) in amps.chunks(env).zip(target.chunks(env)) {
            for a in 0..env {
                let v = match &parts.gauge {
                    Some(w) => (0..env).fold(Complex::from(T::zero()), |s, b| s + w[(a, b)] * chunk[b]),
                    None => chunk[a],
                };
                acc += (v - t[a]).norm_sqr();
            }
        }
        Ok(acc)
    }

    /// Loss only.
    pub fn loss(&self, x: &[T]) -> Result<T> {
        let parts = self.unpack(x)?;
        match &self.target_amps {
            Some(t) => self.dense_loss(&parts, t),
            None => Ok(self.value_and_gradient_parts(&parts, false)?.0),
        }
    }

    /// Loss and gradient.
    pub fn evaluate(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        let parts = self.unpack(x)?;
        let (overlap_loss, grad) = self.value_and_gradient_parts(&parts, true)?;
        let loss = match &self.target_amps {
            Some(t) => self.dense_loss(&parts, t)?,
            None => overlap_loss,
        };
        Ok((loss, grad))
    }

    /// With `s = Re⟨Υ|W|Υ̃⟩`, the loss is `⟨Υ|Υ⟩ + 1 − 2s`. Gradients of `s`
    /// come from left and right environments of the overlap network.
    fn value_and_gradient_parts(&self, parts: &Parts<T>, with_grad: bool) -> Result<(T, Vec<T>)> {
        let d = self.problem.sys_dim();
        let env = self.problem.env_dim;
        let k = self.problem.k();
        let target = &self.problem.target;
        let model = self.model_ppt(parts);
        let sqrt_d = real::<T>(d as f64).sqrt();

        let mut lefts = Vec::with_capacity(k + 1);
        lefts.push(target.site0.adjoint() * &model.site0);
        for j in 1..=k {
            let (al, ar) = (target.bond_dim(j - 1), target.bond_dim(j));
            let e = lefts.last().expect("non-empty");
            let mut next = CMat::zeros(ar, env);
            for i in 0..d {
                for o in 0..d {
                    let a = target.sites[j - 1].view((o * ar, i * al), (ar, al));
                    let b = model.sites[j - 1].view((o * env, i * env), (env, env));
                    next += a.map(|z| z.conj()) * e * b.transpose();
                }
            }
            lefts.push(next);
        }
        let g = parts.gauge.as_ref().map(|w| w.transpose()).unwrap_or_else(|| CMat::identity(env, env));
        let s = (&lefts[k] * &g).trace().re;
        let loss = target.norm_sqr() + T::one() - s - s;
        if !with_grad {
            return Ok((loss, Vec::new()));
        }

        let n = d * env;
        let mut site_cots: Vec<CMat<T>> = Vec::with_capacity(k);
        let mut r = g;
        for j in (1..=k).rev() {
            let al = target.bond_dim(j - 1);
            let ar = target.bond_dim(j);
            let mut cot = CMat::zeros(n, n);
            let mut next = CMat::zeros(env, al);
            for i in 0..d {
                for o in 0..d {
                    let a = target.sites[j - 1].view((o * ar, i * al), (ar, al)).map(|z| z.conj());
                    let b = model.sites[j - 1].view((o * env, i * env), (env, env));
                    let m = &r * &a * &lefts[j - 1];
                    cot.view_mut((o * env, i * env), (env, env)).copy_from(&m);
                    next += b.transpose() * &r * &a;
                }
            }
            site_cots.push(cot.transpose().unscale(sqrt_d));
            r = next;
        }
        site_cots.reverse();
        let c0 = target.site0.map(|z| z.conj()) * r.transpose();

        let minus_two = |v: Vec<T>| v.into_iter().map(|x| -(x + x)).collect::<Vec<T>>();
        let mut grad = Vec::with_capacity(self.num_params());
        match self.problem.mode {
            FitMode::TimeDependent => {
                for (p, c) in parts.params.iter().zip(&site_cots) {
                    grad.extend(minus_two(p.pullback(c)?));
                }
            }
            FitMode::TimeIndependent => {
                let mut cv = CMat::zeros(n, n);
                for o in 0..d {
                    for a in 0..env {
                        cv[(0, o * env + a)] = c0[(o, a)];
                    }
                }
                let cu = site_cots.iter().fold(CMat::zeros(n, n), |acc, c| acc + c);
                let cw = lefts[k].transpose();
                grad.extend(minus_two(parts.params[0].pullback(&cv)?));
                grad.extend(minus_two(parts.params[1].pullback(&cu)?));
                grad.extend(minus_two(parts.params[2].pullback(&cw)?));
            }
        }
        Ok((loss, grad))
    }

    fn reconstructed(&self, x: &[T], loss: T) -> Result<ReconstructedOqe<T>> {
        let parts = self.unpack(x)?;
        let (d, env) = (self.problem.sys_dim(), self.problem.env_dim);
        let model = match self.problem.mode {
            FitMode::TimeDependent => OqeModel::time_dependent(d, env, parts.psi, parts.us),
            FitMode::TimeIndependent => {
                OqeModel::time_independent(d, env, parts.psi, parts.us.into_iter().next().expect("one unitary"))
            }
        };
        Ok(ReconstructedOqe { model, gauge: parts.gauge, loss, log: Vec::new(), stop: None, start: None })
    }
}

fn flatten<T: Real>(us: &[CMat<T>]) -> Result<Vec<T>> {
    let mut x = Vec::new();
    for u in us {
        x.extend(UnitaryParams::from_unitary(u)?.to_flat());
    }
    Ok(x)
}

fn initial_parameters<T: Real>(problem: &ReconstructionProblem<T>) -> Result<Vec<T>> {
    let (d, env) = (problem.sys_dim(), problem.env_dim);
    let t = &problem.target;
    match problem.mode {
        FitMode::TimeDependent => {
            let us = t.sites.iter().map(|s| site_unitary(s, d, env)).collect::<Result<Vec<_>>>()?;
            flatten(&us)
        }
        FitMode::TimeIndependent => {
            let k = t.k();
            let (a, u) = align_gauges(&site_unitary(&t.sites[k - 1], d, env)?, &t.sites[k - 2], d, env)?;
            let mut psi = pad_rows(&t.window(k - 1, 0)?.site0, env);
            for _ in 0..k - 1 {
                psi = u.adjoint() * psi;
            }
            let norm = psi.norm();
            let psi = if norm > T::zero() { psi.unscale(norm) } else { initial_state(&t.site0, env)? };
            flatten(&[state_unitary(&psi), u, a])
        }
    }
}

fn pad_rows<T: Real>(site0: &CMat<T>, env: usize) -> CVec<T> {
    let (d, chi) = site0.shape();
    CVec::from_fn(d * env, |x, _| if x % env < chi { site0[(x / env, x % env)] } else { Complex::from(T::zero()) })
}

fn polar<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let f = svd(m)?;
    Ok(&f.u * &f.vh)
}

/// Aligns the bond gauges of the last two target sites. For a
/// time-independent process `S_k = (I⊗A) Ũ` and `S_{k-1} ∝ Ũ (I⊗Δ)` with
/// `Ũ` the step unitary in the gauge of bond `k − 1`, `A` unitary and `Δ` an
/// isometry from bond `k − 2`; both are found by alternating Procrustes
/// steps. Returns `(A, Ũ)`.
fn align_gauges<T: Real>(last: &CMat<T>, prev: &CMat<T>, d: usize, env: usize) -> Result<(CMat<T>, CMat<T>)> {
    let (cr, cl) = (prev.nrows() / d, prev.ncols() / d);
    let scale = Complex::from(real::<T>(d as f64).sqrt());
    let mut p = CMat::zeros(d * env, d * cl);
    for o in 0..d {
        p.view_mut((o * env, 0), (cr, d * cl)).copy_from(&(prev.view((o * cr, 0), (cr, d * cl)) * scale));
    }
    let id = CMat::identity(d, d);
    let mut delta = CMat::from_fn(env, cl, |r, c| if r == c { Complex::from(T::one()) } else { Complex::from(T::zero()) });
    let mut a = CMat::identity(env, env);
    let mut last_res = T::max_value().unwrap_or(T::one());
    for _ in 0..ALIGN_SWEEPS {
        let x = last * kron(&id, &delta);
        let mut acc = CMat::zeros(env, env);
        for o in 0..d {
            acc += x.rows(o * env, env) * p.rows(o * env, env).adjoint();
        }
        a = polar(&acc)?;
        let y = kron(&id, &a.adjoint()) * last;
        let mut acc = CMat::zeros(env, cl);
        for i in 0..d {
            acc += y.columns(i * env, env).adjoint() * p.columns(i * cl, cl);
        }
        delta = polar(&acc)?;
        let res = (&p - &y * kron(&id, &delta)).norm();
        if last_res - res <= real::<T>(1e-15) * (T::one() + res) {
            break;
        }
        last_res = res;
    }
    Ok((a.clone(), nearest_unitary(&(kron(&id, &a.adjoint()) * last))?))
}

fn random_parameters<T: Real>(problem: &ReconstructionProblem<T>, seed: u64) -> Result<Vec<T>> {
    let n = problem.sys_dim() * problem.env_dim;
    let mut rng = rng_from_seed(seed);
    let mut us: Vec<CMat<T>> = match problem.mode {
        FitMode::TimeDependent => (0..problem.k()).map(|_| random_haar_unitary(n, &mut rng)).collect(),
        FitMode::TimeIndependent => vec![random_haar_unitary(n, &mut rng), random_haar_unitary(n, &mut rng)],
    };
    if problem.mode == FitMode::TimeIndependent {
        us.push(random_haar_unitary(problem.env_dim, &mut rng));
    }
    flatten(&us)
}

/// Unoptimized model: nearest unitaries to the (padded) target sites and the
/// initial state read off the first site. The time-independent variant uses
/// the last site, with bond gauges aligned against site `k − 1`.
pub fn init_from_sites<T: Real>(problem: &ReconstructionProblem<T>) -> Result<ReconstructedOqe<T>> {
    let obj = Objective::new(problem)?;
    let x = initial_parameters(problem)?;
    let loss = obj.loss(&x)?;
    obj.reconstructed(&x, loss)
}

fn run_start<T: Real>(problem: &ReconstructionProblem<T>, start: Option<u64>) -> Result<ReconstructedOqe<T>> {
    let obj = Objective::new(problem)?;
    let x0 = match start {
        None => initial_parameters(problem)?,
        Some(seed) => random_parameters(problem, seed)?,
    };
    let min = minimize(|x| obj.evaluate(x), x0, &problem.settings)?;
    let mut rec = obj.reconstructed(&min.x, min.loss)?;
    rec.log = min.log;
    rec.stop = Some(min.stop);
    rec.start = start;
    Ok(rec)
}

fn fit<T: Real>(problem: &ReconstructionProblem<T>) -> Result<ReconstructedOqe<T>> {
    let starts: Vec<Option<u64>> = std::iter::once(None).chain(problem.restarts.iter().map(|&s| Some(s))).collect();
    let results: Vec<Result<ReconstructedOqe<T>>> = starts.par_iter().map(|&s| run_start(problem, s)).collect();
    let mut best: Option<ReconstructedOqe<T>> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(rec) => {
                if best.as_ref().is_none_or(|b| rec.loss < b.loss) {
                    best = Some(rec);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start"))
}

/// Fit of one unitary per step with the initial state taken from the target.
pub fn fit_time_dependent<T: Real>(problem: &ReconstructionProblem<T>) -> Result<ReconstructedOqe<T>> {
    if problem.mode != FitMode::TimeDependent {
        return Err(OqeError::ContractViolation("problem is not in time-dependent mode".into()));
    }
    fit(problem)
}

/// Fit of `(ψ̃, Ũ, Ũ^E)`.
pub fn fit_time_independent<T: Real>(problem: &ReconstructionProblem<T>) -> Result<ReconstructedOqe<T>> {
    if problem.mode != FitMode::TimeIndependent {
        return Err(OqeError::ContractViolation("problem is not in time-independent mode".into()));
    }
    fit(problem)
}

/// `Υ̃_{j+m:j}` of a time-independent reconstruction.
pub fn predict_future<T: Real>(rec: &ReconstructedOqe<T>, j: usize, m: usize) -> Result<ProcessTensorDense<T>> {
    if !rec.model.is_time_independent() {
        return Err(OqeError::ContractViolation("prediction beyond the fit horizon needs a time-independent model".into()));
    }
    reduced_window(&rec.model, j, m)
}
