//! Memory size, memory complexity, effective environment states and the
//! transfer matrix of a PPT.

use nalgebra::Schur;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::numerics::{eig_hermitian, hermitian_sqrt_factor, kron, max_abs_diff, relative_rank, renyi_from_spectrum, svd};
use crate::oqe::{Evolution, OqeModel, SeState};
use crate::process_tensor::{build_ppt, PurifiedProcessTensor};
use crate::{real, tol, CMat, OqeError, Real, Result};

/// Canonicality violations above this are rejected by [`TransferMatrix`].
const CANONICAL_TOLERANCE: f64 = 1e-8;
/// Second eigenvalue modulus below `1 − GAP` counts as non-degenerate.
const GAP: f64 = 1e-9;

/// Gram matrices of the right blocks `⟨R_a|R_{a'}⟩` at every bond, computed
/// from the final environment inwards.
fn right_grams<T: Real>(ppt: &PurifiedProcessTensor<T>) -> Vec<CMat<T>> {
    let k = ppt.k();
    let mut grams = vec![CMat::identity(ppt.bond_dim(k), ppt.bond_dim(k))];
    for j in (1..=k).rev() {
        let r = grams.last().expect("non-empty");
        let mut next = CMat::zeros(ppt.bond_dim(j - 1), ppt.bond_dim(j - 1));
        for i in 0..ppt.d {
            for o in 0..ppt.d {
                let b = ppt.block(j, i, o);
                next += b.adjoint() * r * &b;
            }
        }
        grams.push(next);
    }
    grams.reverse();
    grams
}

/// Schmidt coefficients (singular values, descending) of the PPT at every
/// bond `j = 0..=k`, via a left-canonical SVD sweep.
pub fn schmidt_values<T: Real>(ppt: &PurifiedProcessTensor<T>) -> Result<Vec<Vec<T>>> {
    let rg = right_grams(ppt);
    let d = ppt.d;
    let mut out = Vec::with_capacity(ppt.k() + 1);
    let f = svd(&ppt.site0)?;
    let mut r = weighted_rows(&f.s, &f.vh);
    for j in 0..=ppt.k() {
        if j > 0 {
            let chi = ppt.bond_dim(j);
            let rows = r.nrows();
            let mut w = CMat::zeros(rows * d * d, chi);
            for i in 0..d {
                for o in 0..d {
                    let part = &r * ppt.block(j, i, o).transpose();
                    w.view_mut(((i * d + o) * rows, 0), (rows, chi)).copy_from(&part);
                }
            }
            let f = svd(&w)?;
            r = weighted_rows(&f.s, &f.vh);
        }
        let sq = hermitian_sqrt_factor(&rg[j])?.map(|z| z.conj());
        out.push(svd(&(&r * sq))?.s.iter().copied().collect());
    }
    Ok(out)
}

fn weighted_rows<T: Real>(s: &nalgebra::DVector<T>, vh: &CMat<T>) -> CMat<T> {
    let mut r = vh.clone();
    for (row, &sv) in s.iter().enumerate() {
        r.row_mut(row).scale_mut(sv);
    }
    r
}

fn probabilities<T: Real>(values: &[T]) -> Vec<T> {
    let total = values.iter().fold(T::zero(), |a, &s| a + s * s);
    values.iter().map(|&s| s * s / total).collect()
}

/// Normalized squared Schmidt spectrum at bond `j`.
pub fn schmidt_spectrum<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize) -> Result<Vec<T>> {
    check_bond(ppt, j)?;
    let all = schmidt_values(&ppt.truncate(ppt.k())?)?;
    Ok(probabilities(&all[j]))
}

fn check_bond<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize) -> Result<()> {
    if j > ppt.k() {
        return Err(OqeError::StepMismatch { expected: j, got: ppt.k() });
    }
    Ok(())
}

/// Schmidt rank at bond `j` (relative threshold on singular values).
pub fn memory_size<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize) -> Result<usize> {
    check_bond(ppt, j)?;
    Ok(relative_rank(&schmidt_values(ppt)?[j]))
}

/// Rényi-γ entropy (bits) of `Υ_{j:0}`, from the bond-`j` Schmidt spectrum.
pub fn memory_complexity<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize, gamma: T) -> Result<T> {
    check_bond(ppt, j)?;
    renyi_from_spectrum(&probabilities(&schmidt_values(ppt)?[j]), gamma)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryPoint {
    pub j: usize,
    pub memory_size: usize,
    pub complexity: f64,
}

/// `(j, 𝒟_j, 𝒞^γ_j)` for every bond of the PPT.
pub fn memory_sweep<T: Real>(ppt: &PurifiedProcessTensor<T>, gamma: T) -> Result<Vec<MemoryPoint>> {
    schmidt_values(ppt)?
        .iter()
        .enumerate()
        .map(|(j, s)| {
            Ok(MemoryPoint {
                j,
                memory_size: relative_rank(s),
                complexity: renyi_from_spectrum(&probabilities(s), gamma)?.to_f64().unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// One step of the environment recursion `ρ ↦ Σ_{i,o} B^{io} ρ B^{io†}`.
pub fn env_step<T: Real>(site: &CMat<T>, d: usize, rho: &CMat<T>) -> CMat<T> {
    let l = site.ncols() / d;
    let r = site.nrows() / d;
    let mut out = CMat::zeros(r, r);
    for i in 0..d {
        for o in 0..d {
            let b = site.view((o * r, i * l), (r, l));
            out += b * rho * b.adjoint();
        }
    }
    out
}

/// Effective environment state after step `j`, seeded by
/// `ρ^E_0 = tr_S ρ_0^{SE}`.
pub fn effective_env_state<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize) -> Result<CMat<T>> {
    check_bond(ppt, j)?;
    Ok(effective_env_states(ppt, j).pop().expect("non-empty"))
}

/// `ρ^E_0, …, ρ^E_j`.
pub fn effective_env_states<T: Real>(ppt: &PurifiedProcessTensor<T>, j: usize) -> Vec<CMat<T>> {
    let mut states = vec![ppt.site0.transpose() * ppt.site0.map(|z| z.conj())];
    for s in &ppt.sites[..j.min(ppt.k())] {
        let next = env_step(s, ppt.d, states.last().expect("non-empty"));
        states.push(next);
    }
    states
}

/// `T = Σ_{i,o} (B^{io})^* ⊗ B^{io}` for one canonical site.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix<T: Real> {
    pub d: usize,
    pub bond: usize,
    site: CMat<T>,
    pub matrix: CMat<T>,
}

impl<T: Real> TransferMatrix<T> {
    /// `site` in the PPT layout; both bonds must have the same dimension.
    pub fn from_site(site: &CMat<T>, d: usize) -> Result<Self> {
        if site.nrows() != site.ncols() || site.nrows() % d != 0 {
            return Err(OqeError::Shape(format!("site {:?} is not a square (dD)x(dD) tensor", site.shape())));
        }
        let bond = site.nrows() / d;
        let single = PurifiedProcessTensor::new(d, CMat::zeros(d, bond), vec![site.clone()])?;
        let res = single.max_canonical_residual();
        if res > tol::<T>(CANONICAL_TOLERANCE) {
            return Err(OqeError::ContractViolation(format!(
                "site violates the canonical condition by {:e}",
                res.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let mut matrix = CMat::zeros(bond * bond, bond * bond);
        for i in 0..d {
            for o in 0..d {
                let b = single.block(1, i, o);
                matrix += kron(&b.map(|z| z.conj()), &b);
            }
        }
        Ok(TransferMatrix { d, bond, site: site.clone(), matrix })
    }

    /// Transfer matrix of `U/√d` for an SE unitary.
    pub fn from_unitary(u: &CMat<T>, d: usize) -> Result<Self> {
        Self::from_site(&(u * Complex::from(T::one() / real::<T>(d as f64).sqrt())), d)
    }

    /// `ρ ↦ Σ B ρ B†` (the environment recursion).
    pub fn apply(&self, rho: &CMat<T>) -> CMat<T> {
        env_step(&self.site, self.d, rho)
    }

    /// `X ↦ Σ B† X B` (adjoint map).
    pub fn apply_adjoint(&self, x: &CMat<T>) -> CMat<T> {
        let b = self.bond;
        let mut out = CMat::zeros(b, b);
        for i in 0..self.d {
            for o in 0..self.d {
                let blk = self.site.view((o * b, i * b), (b, b));
                out += blk.adjoint() * x * blk;
            }
        }
        out
    }

    /// Eigenvalues sorted by decreasing modulus.
    pub fn spectrum(&self) -> Result<Vec<Complex<T>>> {
        let n = self.matrix.nrows();
        let ev = Schur::new(self.matrix.clone())
            .eigenvalues()
            .ok_or(OqeError::NumericalFailure { rows: n, cols: n })?;
        let mut v: Vec<Complex<T>> = ev.iter().copied().collect();
        v.sort_by(|a, b| {
            b.norm_sqr()
                .partial_cmp(&a.norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
        });
        Ok(v)
    }

    pub fn spectral_radius(&self) -> Result<T> {
        Ok(self.spectrum()?.first().map(|z| z.norm_sqr().sqrt()).unwrap_or(T::zero()))
    }

    /// Largest deviation of `I/D` from being a fixed point of the map and of
    /// its adjoint.
    pub fn identity_fixed_point_residual(&self) -> T {
        let b = self.bond;
        let id = CMat::identity(b, b) * Complex::from(T::one() / real::<T>(b as f64));
        max_abs_diff(&self.apply(&id), &id).max(max_abs_diff(&self.apply_adjoint(&id), &id))
    }

    /// Fixed point of the recursion by power iteration from `start`.
    pub fn fixed_point_power(&self, start: &CMat<T>, max_iter: usize, tolerance: T) -> (CMat<T>, usize) {
        let mut rho = start.clone();
        for it in 1..=max_iter {
            let next = self.apply(&rho);
            let diff = max_abs_diff(&next, &rho);
            rho = next;
            if diff <= tolerance {
                return (rho, it);
            }
        }
        (rho, max_iter)
    }

    /// Fixed point from the dense eigenvector of the eigenvalue closest to 1,
    /// normalized to unit trace.
    pub fn fixed_point_dense(&self) -> Result<CMat<T>> {
        let b = self.bond;
        let n = b * b;
        // physical map in row-major vectorization: vec(BρB†) = (B ⊗ B^*) vec(ρ)
        let phys = self.matrix.map(|z| z.conj());
        let shifted = &phys - CMat::identity(n, n);
        let f = svd(&shifted)?;
        let v = f.vh.row(n - 1).map(|z| z.conj());
        let mut rho = CMat::from_fn(b, b, |r, c| v[r * b + c]);
        rho = (&rho + rho.adjoint()) * Complex::from(real::<T>(0.5));
        let tr = rho.trace();
        Ok(rho / tr)
    }
}

/// Memory-limit check for a time-independent model: observed memory size and
/// complexity at the horizon against the predicted limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub mixed: bool,
    pub horizon: usize,
    pub gamma: f64,
    pub conclusive: bool,
    pub spectral_radius: f64,
    pub second_modulus: f64,
    pub identity_fixed_point_residual: f64,
    pub predicted_memory_size: usize,
    pub predicted_complexity: f64,
    /// Rényi entropy of the initial SE state (0 for pure states).
    pub initial_entropy: f64,
    pub observed_memory_size: usize,
    pub observed_complexity: f64,
    pub complexity_gap: f64,
    /// Distance of `ρ^E_horizon` from the predicted fixed point.
    pub fixed_point_residual: f64,
    pub sweep: Vec<MemoryPoint>,
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn theorem1_check<T: Real>(model: &OqeModel<T>, horizon: usize, gamma: T) -> Result<Theorem1Report> {
    let u = match &model.evolution {
        Evolution::TimeIndependent(u) => u,
        Evolution::TimeDependent(_) => {
            return Err(OqeError::ContractViolation("theorem check needs a time-independent model".into()))
        }
    };
    model.validate()?;
    let (d, env) = (model.sys_dim, model.env_dim);
    let tm = TransferMatrix::from_unitary(u, d)?;
    let spec = tm.spectrum()?;
    let radius = spec[0].norm_sqr().sqrt();
    let second = spec.get(1).map(|z| z.norm_sqr().sqrt()).unwrap_or(T::zero());
    let conclusive = second < T::one() - real::<T>(GAP);

    let (mixed, rank0, entropy0, target) = match &model.initial {
        SeState::Pure(_) => {
            (false, 1, T::zero(), CMat::identity(env, env) * Complex::from(T::one() / real::<T>(env as f64)))
        }
        SeState::Mixed(rho) => {
            let e = eig_hermitian(rho)?;
            let rank = relative_rank(&e.values.iter().map(|&v| v.max(T::zero()).sqrt()).collect::<Vec<_>>());
            let ent = renyi_from_spectrum(&e.values.iter().map(|&v| v.max(T::zero())).collect::<Vec<_>>(), gamma)?;
            let n = d * env;
            let ext = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                e.values.iter().map(|&v| Complex::from(v.max(T::zero()))),
            ));
            let target = kron(&(CMat::identity(env, env) * Complex::from(T::one() / real::<T>(env as f64))), &ext);
            (true, rank, ent, target)
        }
    };

    let ppt = build_ppt(model, horizon)?;
    let sweep = memory_sweep(&ppt, gamma)?;
    let last = sweep.last().expect("non-empty sweep").clone();
    let rho_h = effective_env_state(&ppt, horizon)?;
    let predicted_complexity = entropy0 + real::<T>((env as f64).log2());
    Ok(Theorem1Report {
        mixed,
        horizon,
        gamma: f64_of(gamma),
        conclusive,
        spectral_radius: f64_of(radius),
        second_modulus: f64_of(second),
        identity_fixed_point_residual: f64_of(tm.identity_fixed_point_residual()),
        predicted_memory_size: rank0 * env,
        predicted_complexity: f64_of(predicted_complexity),
        initial_entropy: f64_of(entropy0),
        observed_memory_size: last.memory_size,
        observed_complexity: last.complexity,
        complexity_gap: (last.complexity - f64_of(predicted_complexity)).abs(),
        fixed_point_residual: f64_of(max_abs_diff(&rho_h, &target)),
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{
        random_density_matrix, random_haar_unitary, random_pure_state, random_unitary_exp, rng_from_seed,
    };
    use crate::oqe::QuantumOperation;
    use crate::C64;
    use proptest::prelude::*;

    fn model(d: usize, env: usize, eta: f64, seed: u64) -> OqeModel<f64> {
        let mut rng = rng_from_seed(seed);
        let psi = random_pure_state(d * env, &mut rng);
        let u = random_unitary_exp(d * env, eta, &mut rng);
        OqeModel::time_independent(d, env, psi, u)
    }

    fn decoupled(seed: u64) -> OqeModel<f64> {
        let mut rng = rng_from_seed(seed);
        let us = random_haar_unitary::<f64, _>(2, &mut rng);
        let ue = random_haar_unitary::<f64, _>(3, &mut rng);
        let psi = random_pure_state::<f64, _>(2, &mut rng).kronecker(&random_pure_state(3, &mut rng));
        OqeModel::time_independent(2, 3, psi, kron(&us, &ue))
    }

    #[test]
    fn decoupled_model_has_no_memory() {
        let ppt = build_ppt(&decoupled(1), 5).unwrap();
        for j in 0..=5 {
            assert_eq!(memory_size(&ppt, j).unwrap(), 1);
            for g in [0.5, 1.0, 2.0] {
                assert!(memory_complexity(&ppt, j, g).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generic_model_saturates_bond() {
        let ppt = build_ppt(&model(2, 5, 1.0, 2), 6).unwrap();
        let sizes: Vec<usize> = (0..=6).map(|j| memory_size(&ppt, j).unwrap()).collect();
        assert_eq!(sizes[0], 2);
        assert!(sizes[2..].iter().all(|&s| s == 5), "{sizes:?}");
    }

    #[test]
    fn schmidt_spectrum_matches_dense_reduction() {
        let ppt = build_ppt(&model(2, 3, 1.0, 3), 3).unwrap();
        let st = ppt.to_state().unwrap();
        for j in 0..=3 {
            let dense = svd(&st.matricize(j + 1)).unwrap().s;
            let ours = schmidt_values(&ppt).unwrap();
            for (a, b) in ours[j].iter().zip(dense.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_canonical_ppt_spectrum_uses_right_gram() {
        let mut rng = rng_from_seed(4);
        let ppt = build_ppt(&model(2, 3, 1.0, 5), 3).unwrap();
        let g = crate::numerics::random_haar_unitary::<f64, _>(3, &mut rng) * C64::new(1.7, 0.3);
        // insert an invertible gauge on bond 1: B_1 -> G B_1, B_2 -> B_2 G^{-1}
        let ginv = g.clone().try_inverse().unwrap();
        let mut q = ppt.clone();
        q.sites[0] = kron(&CMat::identity(2, 2), &g) * &q.sites[0];
        q.sites[1] = &q.sites[1] * kron(&CMat::identity(2, 2), &ginv);
        let st = q.to_state().unwrap();
        let ours = schmidt_values(&q).unwrap();
        for j in 0..=3 {
            let dense = svd(&st.matricize(j + 1)).unwrap().s;
            for (a, b) in ours[j].iter().zip(dense.iter()) {
                assert!((a - b).abs() < 1e-11, "bond {j}");
            }
        }
    }

    #[test]
    fn complexity_non_increasing_in_gamma() {
        let ppt = build_ppt(&model(2, 5, 1.0, 6), 4).unwrap();
        for j in 0..=4 {
            let vals: Vec<f64> = [0.3, 0.7, 1.0, 1.5, 2.0, 5.0].iter().map(|&g| memory_complexity(&ppt, j, g).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{vals:?}");
        }
        assert!(memory_complexity(&ppt, 1, 0.0).is_err());
    }

    #[test]
    fn env_states_are_states_and_match_schmidt() {
        let ppt = build_ppt(&model(2, 5, 1.0, 7), 8).unwrap();
        let states = effective_env_states(&ppt, 8);
        let values = schmidt_values(&ppt).unwrap();
        for (j, rho) in states.iter().enumerate() {
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            let e = eig_hermitian(rho).unwrap().values;
            assert!(*e.last().unwrap() >= -1e-10);
            let sq = probabilities(&values[j]);
            for (a, b) in e.iter().zip(sq.iter()) {
                assert!((a - b).abs() < 1e-10, "bond {j}");
            }
        }
    }

    #[test]
    fn product_initial_env_state() {
        let mut rng = rng_from_seed(8);
        let pe = random_pure_state::<f64, _>(3, &mut rng);
        let psi = random_pure_state::<f64, _>(2, &mut rng).kronecker(&pe);
        let m = OqeModel::time_independent(2, 3, psi, random_unitary_exp(6, 1.0, &mut rng));
        let rho = effective_env_state(&build_ppt(&m, 2).unwrap(), 0).unwrap();
        assert!(max_abs_diff(&rho, &(&pe * pe.adjoint())) < 1e-14);
    }

    #[test]
    fn env_state_predicts_next_step_locally() {
        // depolarizing interventions discard the system: only ρ^E_{j-1} matters
        let m = model(2, 3, 1.0, 9);
        let ppt = build_ppt(&m, 4).unwrap();
        let half = C64::from(0.5f64.sqrt());
        let depol = QuantumOperation::new(
            (0..2)
                .flat_map(|a| (0..2).map(move |b| CMat::from_fn(2, 2, |r, c| if r == a && c == b { half } else { C64::from(0.0) })))
                .collect(),
        )
        .unwrap();
        for j in 1..=4 {
            let sub = ppt.truncate(j).unwrap();
            let rho = sub.predict_state(&vec![depol.clone(); j]).unwrap();
            let env = effective_env_state(&ppt, j - 1).unwrap();
            let b = ppt.bond_dim(j);
            let local = CMat::from_fn(2, 2, |o, op| {
                let mut acc = C64::from(0.0);
                for i in 0..2 {
                    let x = ppt.block(j, i, o) * &env * ppt.block(j, i, op).adjoint();
                    acc += x.trace();
                }
                acc
            });
            let _ = b;
            assert!(max_abs_diff(&rho, &local) < 1e-10, "j = {j}");
        }
    }

    #[test]
    fn transfer_matrix_properties() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(100 + seed);
            let u = random_haar_unitary::<f64, _>(10, &mut rng);
            let tm = TransferMatrix::from_unitary(&u, 2).unwrap();
            assert!(tm.spectral_radius().unwrap() <= 1.0 + 1e-10);
            assert!(tm.identity_fixed_point_residual() <= 1e-12);
        }
    }

    #[test]
    fn decoupled_transfer_is_degenerate() {
        let mut rng = rng_from_seed(11);
        let us = random_haar_unitary::<f64, _>(2, &mut rng);
        let ue = random_haar_unitary::<f64, _>(3, &mut rng);
        let tm = TransferMatrix::from_unitary(&kron(&us, &ue), 2).unwrap();
        let unimodular = tm.spectrum().unwrap().iter().filter(|z| (z.norm() - 1.0).abs() < 1e-10).count();
        assert!(unimodular >= 3);
    }

    #[test]
    fn generic_transfer_has_single_unit_eigenvalue() {
        let mut violations = 0;
        for seed in 0..20 {
            let mut rng = rng_from_seed(200 + seed);
            let u = random_haar_unitary::<f64, _>(10, &mut rng);
            let spec = TransferMatrix::from_unitary(&u, 2).unwrap().spectrum().unwrap();
            assert!((spec[0] - C64::from(1.0)).norm() < 1e-10);
            if spec[1].norm() >= 1.0 - 1e-10 {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn non_canonical_site_rejected() {
        let s = CMat::<f64>::identity(4, 4);
        assert!(matches!(TransferMatrix::from_site(&s, 2), Err(OqeError::ContractViolation(_))));
    }

    #[test]
    fn fixed_points_agree() {
        let mut rng = rng_from_seed(12);
        let u = random_unitary_exp::<f64, _>(10, 1.0, &mut rng);
        let tm = TransferMatrix::from_unitary(&u, 2).unwrap();
        let start = random_density_matrix::<f64, _>(5, &mut rng);
        let (power, _) = tm.fixed_point_power(&start, 100_000, 1e-15);
        let dense = tm.fixed_point_dense().unwrap();
        assert!(max_abs_diff(&power, &dense) < 1e-8);
        let id = CMat::identity(5, 5) * C64::from(0.2);
        assert!(max_abs_diff(&dense, &id) < 1e-8);
    }

    #[test]
    fn env_state_converges_geometrically() {
        let m = model(2, 5, 1.0, 13);
        let tm = TransferMatrix::from_unitary(m.unitary(1).unwrap(), 2).unwrap();
        let lam2 = tm.spectrum().unwrap()[1].norm();
        let ppt = build_ppt(&m, 60).unwrap();
        let id = CMat::identity(5, 5) * C64::from(0.2);
        let res: Vec<f64> = effective_env_states(&ppt, 60).iter().map(|r| max_abs_diff(r, &id)).collect();
        let c = (30..=60).map(|j| res[j] / lam2.powi(j as i32)).fold(0.0, f64::max);
        let c0 = res[30] / lam2.powi(30);
        assert!(c <= 10.0 * c0.max(1e-300) || res[60] < 1e-13, "C = {c}, C30 = {c0}");
    }

    #[test]
    fn theorem_limits_pure_and_mixed() {
        let m = model(2, 5, 1.0, 14);
        let r = theorem1_check(&m, 40, 1.0).unwrap();
        assert!(r.conclusive);
        assert_eq!(r.predicted_memory_size, 5);
        assert_eq!(r.observed_memory_size, 5);
        assert!(r.complexity_gap < 0.02, "{}", r.complexity_gap);

        let mut rng = rng_from_seed(15);
        let mixed = OqeModel { initial: SeState::Mixed(random_density_matrix(10, &mut rng)), ..m };
        let r = theorem1_check(&mixed, 40, 1.0).unwrap();
        assert_eq!(r.predicted_memory_size, 50);
        assert_eq!(r.observed_memory_size, 50);
        assert!(r.complexity_gap < 0.02, "{}", r.complexity_gap);
        assert!(r.fixed_point_residual < 1e-3);
    }

    #[test]
    fn decoupled_theorem_check_is_inconclusive() {
        let r = theorem1_check(&decoupled(16), 10, 1.0).unwrap();
        assert!(!r.conclusive);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn canonical_sites_obey_appendix_bounds(seed in any::<u64>(), eta in 0.05f64..3.0) {
            let mut rng = rng_from_seed(seed);
            let u = random_unitary_exp::<f64, _>(10, eta, &mut rng);
            let tm = TransferMatrix::from_unitary(&u, 2).unwrap();
            prop_assert!(tm.spectral_radius().unwrap() <= 1.0 + 1e-10);
            prop_assert!(tm.identity_fixed_point_residual() <= 1e-12);
        }
    }
}
