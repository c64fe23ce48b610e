//! Poisson-weighted least-squares fit of a Gaussian dip
//! y = B (1 - V exp(-(x - x0)^2 / (2 w^2))), by Levenberg-Marquardt.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fitted dip parameters with standard errors from the inverse normal
/// matrix, plus goodness-of-fit summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDipFit<T: Scalar> {
    pub baseline: T,
    pub visibility: T,
    pub center: T,
    pub width: T,
    pub baseline_err: T,
    pub visibility_err: T,
    pub center_err: T,
    pub width_err: T,
    pub chi2: T,
    pub reduced_chi2: T,
    pub n_points: usize,
    pub iterations: usize,
}

fn model<T: Scalar>(p: &SVector<T, 4>, x: T) -> T {
    let (b, v, x0, w) = (p[0], p[1], p[2], p[3]);
    let z = (x - x0) / w;
    b * (T::one() - v * (-z * z / T::from_f64_lossy(2.0)).exp())
}

fn jacobian_row<T: Scalar>(p: &SVector<T, 4>, x: T) -> SVector<T, 4> {
    let (b, v, x0, w) = (p[0], p[1], p[2], p[3]);
    let dx = x - x0;
    let g = (-dx * dx / (T::from_f64_lossy(2.0) * w * w)).exp();
    SVector::<T, 4>::from([
        T::one() - v * g,
        -b * g,
        -b * v * g * dx / (w * w),
        -b * v * g * dx * dx / (w * w * w),
    ])
}

fn chi2<T: Scalar>(p: &SVector<T, 4>, x: &[T], y: &[T], weights: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..x.len() {
        let r = y[i] - model(p, x[i]);
        acc += weights[i] * r * r;
    }
    acc
}

/// Fits the dip model to count data. Weights are Poissonian
/// (1 / max(y, 1)); degenerate data (too few points, no positive counts,
/// a collapsed abscissa, or a non-converging search) is reported as a fit
/// failure with diagnostics.
pub fn fit_gaussian<T: Scalar>(x: &[T], y: &[T]) -> Result<GaussianDipFit<T>> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    if n < 5 {
        return Err(Error::FitFailure(format!("need at least 5 points, got {n}")));
    }
    let y_max = y.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if y_max <= T::zero() {
        return Err(Error::FitFailure("no positive counts".into()));
    }
    let x_min = x.iter().copied().fold(x[0], |a, b| a.min(b));
    let x_max = x.iter().copied().fold(x[0], |a, b| a.max(b));
    if !(x_max > x_min) {
        return Err(Error::FitFailure("degenerate abscissa".into()));
    }

    // Initial guesses: baseline from the top quartile, center at the
    // minimum, width from the grid span.
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = (n / 4).max(1);
    let b0 = sorted[..top].iter().fold(T::zero(), |s, &v| s + v) / T::from_usize(top).unwrap();
    let y_min = sorted[n - 1];
    let v0 = (T::one() - y_min / b0).max(T::zero());
    let idx_min = (0..n).min_by(|&i, &j| y[i].partial_cmp(&y[j]).unwrap()).unwrap();
    let w0 = (x_max - x_min) / T::from_f64_lossy(6.0);
    let mut p = SVector::<T, 4>::from([b0, v0, x[idx_min], w0]);

    let weights: Vec<T> = y.iter().map(|&v| T::one() / v.max(T::one())).collect();

    // Box constraints keep the search inside the physically meaningful
    // region: a dip of at most full depth, no narrower than the grid can
    // resolve, centered near it.
    let span = x_max - x_min;
    let w_lo = span / T::from_usize(n - 1).unwrap();
    let w_hi = span * T::from_f64_lossy(4.0);
    let x0_lo = x_min - span;
    let x0_hi = x_max + span;
    let v_lo = T::from_f64_lossy(-0.2);
    let v_hi = T::from_f64_lossy(1.2);
    let in_bounds = |q: &SVector<T, 4>| -> bool {
        q[0] > T::zero()
            && q[1] >= v_lo
            && q[1] <= v_hi
            && q[2] >= x0_lo
            && q[2] <= x0_hi
            && q[3] >= w_lo
            && q[3] <= w_hi
    };

    let mut lambda = T::from_f64_lossy(1e-3);
    let mut current = chi2(&p, x, y, &weights);
    let mut iterations = 0usize;
    let mut stalled = 0usize;
    let mut converged = false;
    let max_iter = 500;

    while iterations < max_iter {
        iterations += 1;
        let mut normal = SMatrix::<T, 4, 4>::zeros();
        let mut grad = SVector::<T, 4>::zeros();
        for i in 0..n {
            let j = jacobian_row(&p, x[i]);
            let r = y[i] - model(&p, x[i]);
            normal += j * j.transpose() * weights[i];
            grad += j * (weights[i] * r);
        }
        let grad_scale = grad.iter().fold(T::zero(), |a, &g| a.max(g.abs()));
        if grad_scale < T::from_f64_lossy(1e-9) * (T::one() + current) {
            converged = true;
            break;
        }
        let mut damped = normal;
        let floor = T::from_f64_lossy(1e-30);
        for k in 0..4 {
            damped[(k, k)] += lambda * normal[(k, k)].max(floor);
        }
        let step = match damped.try_inverse() {
            Some(inv) => inv * grad,
            None => {
                lambda *= T::from_f64_lossy(10.0);
                continue;
            }
        };
        let mut trial = p + step;
        trial[3] = trial[3].abs();
        let trial_chi2 = if in_bounds(&trial) && trial.iter().all(|v| v.is_finite_value()) {
            chi2(&trial, x, y, &weights)
        } else {
            T::from_f64_lossy(f64::INFINITY)
        };
        if trial_chi2.is_finite_value() && trial_chi2 <= current {
            let improvement = (current - trial_chi2) / current.max(T::from_f64_lossy(1e-300));
            p = trial;
            current = trial_chi2;
            lambda = (lambda / T::from_f64_lossy(10.0)).max(T::from_f64_lossy(1e-14));
            if improvement < T::from_f64_lossy(1e-9) {
                stalled += 1;
                if stalled >= 3 {
                    converged = true;
                    break;
                }
            } else {
                stalled = 0;
            }
        } else {
            lambda *= T::from_f64_lossy(10.0);
            if lambda > T::from_f64_lossy(1e12) {
                // No downhill direction within numerical resolution: the
                // search sits at a local minimum.
                converged = true;
                break;
            }
        }
    }

    if !p.iter().all(|v| v.is_finite_value()) {
        return Err(Error::FitFailure(format!(
            "parameters diverged after {iterations} iterations"
        )));
    }
    if !converged {
        return Err(Error::FitFailure(format!(
            "no convergence after {max_iter} iterations (chi2 = {})",
            current.to_f64_lossy()
        )));
    }

    // Covariance from the undamped normal matrix at the optimum; the
    // pseudo-inverse covers directions the data does not constrain (e.g.
    // center and width of a flat scan).
    let mut normal = SMatrix::<T, 4, 4>::zeros();
    for i in 0..n {
        let j = jacobian_row(&p, x[i]);
        normal += j * j.transpose() * weights[i];
    }
    let cov = normal.try_inverse().or_else(|| {
        normal
            .svd(true, true)
            .pseudo_inverse(T::from_f64_lossy(1e-12))
            .ok()
    });
    let errs = match cov {
        Some(c) => [
            c[(0, 0)].max(T::zero()).sqrt(),
            c[(1, 1)].max(T::zero()).sqrt(),
            c[(2, 2)].max(T::zero()).sqrt(),
            c[(3, 3)].max(T::zero()).sqrt(),
        ],
        None => return Err(Error::FitFailure("singular normal matrix".into())),
    };

    let dof = T::from_usize(n - 4).unwrap();
    Ok(GaussianDipFit {
        baseline: p[0],
        visibility: p[1],
        center: p[2],
        width: p[3],
        baseline_err: errs[0],
        visibility_err: errs[1],
        center_err: errs[2],
        width_err: errs[3],
        chi2: current,
        reduced_chi2: current / dof,
        n_points: n,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn dip(b: f64, v: f64, x0: f64, w: f64, x: f64) -> f64 {
        b * (1.0 - v * (-(x - x0) * (x - x0) / (2.0 * w * w)).exp())
    }

    #[test]
    fn noiseless_roundtrip_recovers_parameters() {
        let (b, v, x0, w) = (1450.0, 0.92, 120.0, 900.0);
        let x: Vec<f64> = (0..41).map(|i| -4000.0 + 200.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&xi| dip(b, v, x0, w, xi)).collect();
        let fit = fit_gaussian(&x, &y).unwrap();
        assert_relative_eq!(fit.baseline, b, max_relative = 1e-6);
        assert_relative_eq!(fit.visibility, v, max_relative = 1e-6);
        assert_relative_eq!(fit.center, x0, max_relative = 1e-4);
        assert_relative_eq!(fit.width, w, max_relative = 1e-6);
        assert!(fit.chi2 < 1e-10);
    }

    fn poisson(rng: &mut ChaCha12Rng, lambda: f64) -> u64 {
        // Knuth's method; adequate for the rates used in tests.
        let l = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.random::<f64>();
            if p <= l {
                return k;
            }
            k += 1;
        }
    }

    #[test]
    fn poisson_noisy_dip_recovers_visibility_within_three_sigma() {
        let (b, v, x0, w) = (1200.0, 0.96, 0.0, 1400.0);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..41).map(|i| -7000.0 + 350.0 * i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| poisson(&mut rng, dip(b, v, x0, w, xi)) as f64)
            .collect();
        let fit = fit_gaussian(&x, &y).unwrap();
        assert!(
            (fit.visibility - v).abs() < 3.0 * fit.visibility_err,
            "V = {} +- {} vs true {v}",
            fit.visibility,
            fit.visibility_err
        );
        assert!(fit.reduced_chi2 > 0.3 && fit.reduced_chi2 < 3.0);
    }

    #[test]
    fn constant_data_fits_zero_visibility() {
        let x: Vec<f64> = (0..21).map(|i| i as f64 * 100.0).collect();
        let y = vec![800.0f64; 21];
        let fit = fit_gaussian(&x, &y).unwrap();
        assert!(fit.visibility.abs() <= fit.visibility_err.max(1e-9));
        assert_relative_eq!(fit.baseline, 800.0, max_relative = 1e-9);
    }

    #[test]
    fn degenerate_inputs_are_fit_failures() {
        let x = vec![0.0f64, 1.0, 2.0, 3.0];
        let y = vec![1.0f64, 1.0, 1.0, 1.0];
        assert!(matches!(fit_gaussian(&x, &y), Err(Error::FitFailure(_))));
        let x = vec![0.0f64; 6];
        let y = vec![1.0f64; 6];
        assert!(matches!(fit_gaussian(&x, &y), Err(Error::FitFailure(_))));
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y = vec![0.0f64; 6];
        assert!(matches!(fit_gaussian(&x, &y), Err(Error::FitFailure(_))));
    }
}
