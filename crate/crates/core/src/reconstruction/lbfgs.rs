//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{real, OqeError, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { max_iterations: 5000, gradient_tolerance: 1e-10, memory: 12, armijo: 1e-4, max_backtracks: 60 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GradientTolerance,
    IterationLimit,
    /// No step along the search direction decreased the loss.
    LineSearchStalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loss: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub loss: T,
    pub gradient_norm: T,
    pub stop: StopReason,
    pub log: Vec<IterationRecord>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Minimizes `f`, which returns the loss and its gradient. Accepted iterates
/// never increase the loss.
pub fn minimize<T: Real, F>(mut f: F, x0: Vec<T>, settings: &OptimizerSettings) -> Result<Minimum<T>>
where
    F: FnMut(&[T]) -> Result<(T, Vec<T>)>,
{
    let mut x = x0;
    let (mut loss, mut g) = f(&x)?;
    if !loss.is_finite() {
        return Err(OqeError::OptimizationDiverged { iteration: 0, last_loss: to_f64(loss) });
    }
    let mut pairs: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(settings.memory);
    let mut log = vec![IterationRecord { iteration: 0, loss: to_f64(loss), gradient_norm: to_f64(dot(&g, &g).sqrt()), step: 0.0 }];
    let gtol = real::<T>(settings.gradient_tolerance);
    let c1 = real::<T>(settings.armijo);
    let half = real::<T>(0.5);

    for it in 1..=settings.max_iterations {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < gtol {
            return Ok(Minimum { x, loss, gradient_norm: gnorm, stop: StopReason::GradientTolerance, log });
        }

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = *rho * dot(s, &q);
            for (qi, &yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = pairs.back().map(|(s, y, _)| dot(s, y) / dot(y, y)).unwrap_or_else(|| T::one() / gnorm.max(T::one()));
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = *rho * dot(y, &q);
            for (qi, &si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<T> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < T::zero()) {
            pairs.clear();
            dir = g.iter().map(|&v| -v / gnorm.max(T::one())).collect();
            slope = dot(&g, &dir);
        }

        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let trial: Vec<T> = x.iter().zip(&dir).map(|(&xi, &di)| xi + step * di).collect();
            let (l, gr) = f(&trial)?;
            if !l.is_finite() {
                return Err(OqeError::OptimizationDiverged { iteration: it, last_loss: to_f64(loss) });
            }
            if l <= loss + c1 * step * slope && l < loss {
                accepted = Some((trial, l, gr));
                break;
            }
            step *= half;
        }
        let Some((xn, ln, gn)) = accepted else {
            return Ok(Minimum { x, loss, gradient_norm: gnorm, stop: StopReason::LineSearchStalled, log });
        };

        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::default_epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == settings.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, T::one() / sy));
        }
        x = xn;
        loss = ln;
        g = gn;
        log.push(IterationRecord {
            iteration: it,
            loss: to_f64(loss),
            gradient_norm: to_f64(dot(&g, &g).sqrt()),
            step: to_f64(step),
        });
    }
    let gnorm = dot(&g, &g).sqrt();
    Ok(Minimum { x, loss, gradient_norm: gnorm, stop: StopReason::IterationLimit, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let l = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        Ok((l, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
    }

    #[test]
    fn solves_rosenbrock() {
        let m = minimize(rosenbrock, vec![-1.2, 1.0], &OptimizerSettings::default()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
        assert!(m.log.windows(2).all(|w| w[1].loss <= w[0].loss));
    }

    #[test]
    fn quadratic_reaches_gradient_tolerance() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let w = [1.0, 10.0, 100.0];
            Ok((x.iter().zip(w).map(|(v, w)| w * v * v).sum(), x.iter().zip(w).map(|(v, w)| 2.0 * w * v).collect()))
        };
        let m = minimize(f, vec![1.0, -2.0, 0.5], &OptimizerSettings::default()).unwrap();
        assert_eq!(m.stop, StopReason::GradientTolerance);
        assert!(m.loss < 1e-18);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((if x[0] > 0.5 { f64::NAN } else { -x[0] }, vec![-1.0])) };
        let e = minimize(f, vec![0.0], &OptimizerSettings::default()).unwrap_err();
        assert!(matches!(e, OqeError::OptimizationDiverged { .. }));
    }
}
