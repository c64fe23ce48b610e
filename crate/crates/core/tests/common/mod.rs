//! Independent numerical oracles shared by the integration and acceptance
//! suites. Everything here deliberately avoids the production code paths it
//! is used to check.

// Each integration test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

pub mod bosonic;

/// 1 / (2 sqrt(2 ln 2)): intensity FWHM -> standard deviation.
pub const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_54;

/// Composite Simpson rule on [a, b] with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Squared amplitude overlap of two Gaussian wavepackets with intensity
/// FWHM `tau1`, `tau2` and relative delay `delta`, by direct quadrature of
/// the overlap integral.
pub fn overlap_probability_quadrature(delta: f64, tau1: f64, tau2: f64) -> f64 {
    let s1 = tau1 * FWHM_TO_SIGMA;
    let s2 = tau2 * FWHM_TO_SIGMA;
    let n1 = (2.0 * std::f64::consts::PI * s1 * s1).powf(-0.25);
    let n2 = (2.0 * std::f64::consts::PI * s2 * s2).powf(-0.25);
    let span = 8.0 * s1.max(s2) + delta.abs();
    let amp = simpson(
        |t| n1 * n2 * (-t * t / (4.0 * s1 * s1) - (t - delta) * (t - delta) / (4.0 * s2 * s2)).exp(),
        -span,
        span,
        4000,
    );
    amp * amp
}

/// Jitter-averaged overlap probability: quadrature of the single-shot
/// overlap over a Gaussian delay distribution with mean `delay` and
/// standard deviation `jitter`.
pub fn mode_overlap_quadrature(delay: f64, jitter: f64, tau1: f64, tau2: f64) -> f64 {
    if jitter == 0.0 {
        return overlap_probability_quadrature(delay, tau1, tau2);
    }
    let norm = 1.0 / (jitter * (2.0 * std::f64::consts::PI).sqrt());
    simpson(
        |d| {
            let w = norm * (-(d - delay) * (d - delay) / (2.0 * jitter * jitter)).exp();
            w * overlap_probability_quadrature(d, tau1, tau2)
        },
        delay - 8.0 * jitter,
        delay + 8.0 * jitter,
        400,
    )
}

use swapsim_core::bsm::{pattern_povm, swap, BsmModel, BsmSignature};
use swapsim_core::qcore::{embed_operator, partial_trace_matrix, DensityMatrix};
use swapsim_core::sources::ModeOverlap;

/// Checks the production effective-operator BSM against the mode-level
/// bosonic oracle for one input pair and one mode overlap, both at the
/// aggregated signature level and per click pattern. Panics on any
/// discrepancy above `tol`.
pub fn assert_bsm_matches_oracle(
    rho12: &DensityMatrix<f64>,
    rho34: &DensityMatrix<f64>,
    v_mode: f64,
    tol: f64,
) {
    let oracle = bosonic::bosonic_bsm(rho12.matrix(), rho34.matrix(), v_mode);
    let overlap = ModeOverlap::new(v_mode).unwrap();
    let model = BsmModel::ideal(overlap);
    let outcomes = swap(rho12, rho34, &model).unwrap();

    let masks_of = |sig: BsmSignature| -> Vec<u8> {
        match sig {
            BsmSignature::PsiMinus => vec![0b1001, 0b0110],
            BsmSignature::PsiPlus => vec![0b0011, 0b1100],
            BsmSignature::NoSignature => vec![0b0101, 0b1010, 0b0001, 0b0010, 0b0100, 0b1000],
        }
    };

    for outcome in &outcomes {
        let (p_oracle, cond_oracle) = oracle.aggregate(&masks_of(outcome.signature));
        assert!(
            (outcome.probability - p_oracle).abs() < tol,
            "signature {:?} probability: production {} vs oracle {}",
            outcome.signature,
            outcome.probability,
            p_oracle
        );
        if let Some(cond) = &outcome.conditional_14 {
            let cond_oracle = cond_oracle.expect("oracle conditional present");
            for i in 0..4 {
                for j in 0..4 {
                    let d = (cond.matrix()[(i, j)] - cond_oracle[(i, j)]).norm();
                    assert!(
                        d < tol,
                        "signature {:?} conditional differs at ({i},{j}) by {d:.3e}",
                        outcome.signature
                    );
                }
            }
        }
    }

    // Pattern-level comparison along the exact path the Monte Carlo uses.
    let joint = rho12.tensor(rho34).unwrap();
    let povm = pattern_povm(overlap);
    let mut seen = std::collections::BTreeSet::new();
    for (pattern, element) in &povm {
        let full = embed_operator(element, 4, &[1, 2]).unwrap();
        let prod = full * joint.matrix();
        let mut p = 0.0;
        for i in 0..16 {
            p += prod[(i, i)].re;
        }
        let p_oracle = oracle.pattern_probs.get(&pattern.mask).copied().unwrap_or(0.0);
        assert!(
            (p - p_oracle).abs() < tol,
            "pattern {:#06b}: production {p} vs oracle {p_oracle}",
            pattern.mask
        );
        if p > 1e-12 {
            let reduced = partial_trace_matrix(&prod, 4, &[0, 3]);
            let cond_oracle = oracle.conditional(pattern.mask).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let d = (reduced[(i, j)] / num_complex::Complex::new(p, 0.0)
                        - cond_oracle[(i, j)])
                        .norm();
                    assert!(
                        d < tol,
                        "pattern {:#06b} conditional differs at ({i},{j}) by {d:.3e}",
                        pattern.mask
                    );
                }
            }
        }
        seen.insert(pattern.mask);
    }
    for mask in oracle.pattern_probs.keys() {
        assert!(
            seen.contains(mask),
            "oracle produced pattern {mask:#06b} missing from the production POVM"
        );
    }
}
