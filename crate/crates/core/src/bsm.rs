//! Linear-optics Bell-state measurement on photons 2 and 3: Hong-Ou-Mandel
//! interference at a 50:50 splitter followed by polarizing beam splitters.
//! Partial temporal-mode distinguishability enters through effective
//! conditioning operators; the mode-level bosonic calculation that derives
//! them lives in the test suite as an independent oracle.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    bell_state, embed_operator, partial_trace_matrix, re, BellLabel, DensityMatrix,
    PolarizerSetting,
};
use crate::scalar::Scalar;
use crate::sources::ModeOverlap;

/// The four BSM detectors. `Q1*` sit behind the PBS on splitter port 1,
/// `Q2*` behind the PBS on port 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BsmDetector {
    Q1H,
    Q1V,
    Q2H,
    Q2V,
}

impl BsmDetector {
    pub const ALL: [BsmDetector; 4] = [
        BsmDetector::Q1H,
        BsmDetector::Q1V,
        BsmDetector::Q2H,
        BsmDetector::Q2V,
    ];

    /// Bit position in a click mask.
    pub fn bit(self) -> u8 {
        match self {
            BsmDetector::Q1H => 0,
            BsmDetector::Q1V => 1,
            BsmDetector::Q2H => 2,
            BsmDetector::Q2V => 3,
        }
    }

    pub fn mask(self) -> u8 {
        1 << self.bit()
    }
}

/// Which Bell state a click pattern projects on, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BsmSignature {
    PsiMinus,
    PsiPlus,
    NoSignature,
}

impl BsmSignature {
    /// The two signatures that herald a swap, in count-table order.
    pub const VALID: [BsmSignature; 2] = [BsmSignature::PsiMinus, BsmSignature::PsiPlus];

    pub fn index(self) -> Option<usize> {
        match self {
            BsmSignature::PsiMinus => Some(0),
            BsmSignature::PsiPlus => Some(1),
            BsmSignature::NoSignature => None,
        }
    }
}

const MASK_Q1H_Q2V: u8 = 0b1001;
const MASK_Q1V_Q2H: u8 = 0b0110;
const MASK_Q1H_Q1V: u8 = 0b0011;
const MASK_Q2H_Q2V: u8 = 0b1100;

/// Signature of a click mask over the four BSM detectors: coincidences
/// between opposite-polarization detectors on different ports herald a
/// psi- projection, on the same port a psi+ projection; every other
/// pattern is discarded.
pub fn signature_from_mask(mask: u8) -> BsmSignature {
    match mask & 0b1111 {
        MASK_Q1H_Q2V | MASK_Q1V_Q2H => BsmSignature::PsiMinus,
        MASK_Q1H_Q1V | MASK_Q2H_Q2V => BsmSignature::PsiPlus,
        _ => BsmSignature::NoSignature,
    }
}

/// Signature of a set of clicked detectors within one pulse window.
pub fn bsm_signature_map(clicks: &[BsmDetector]) -> BsmSignature {
    let mask = clicks.iter().fold(0u8, |m, d| m | d.mask());
    signature_from_mask(mask)
}

/// BSM configuration: temporal-mode overlap of the interfering photons and
/// per-detector efficiency (the latter only enters the Monte Carlo; the
/// analytic operations assume unit efficiency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsmModel<T: Scalar> {
    pub v_mode: ModeOverlap<T>,
    pub detection_efficiency: T,
}

impl<T: Scalar> BsmModel<T> {
    pub fn new(v_mode: ModeOverlap<T>, detection_efficiency: T) -> Result<Self> {
        if detection_efficiency < T::zero() || detection_efficiency > T::one() {
            return Err(Error::InvalidParameter(format!(
                "detection efficiency {} outside [0, 1]",
                detection_efficiency.to_f64_lossy()
            )));
        }
        Ok(Self {
            v_mode,
            detection_efficiency,
        })
    }

    pub fn ideal(v_mode: ModeOverlap<T>) -> Self {
        Self {
            v_mode,
            detection_efficiency: T::one(),
        }
    }
}

/// One BSM outcome branch: its probability and, for the two valid
/// signatures, the conditional state of photons 1 and 4.
#[derive(Debug, Clone)]
pub struct BsmOutcome<T: Scalar> {
    pub signature: BsmSignature,
    pub probability: T,
    pub conditional_14: Option<DensityMatrix<T>>,
}

/// A two-photon detector click pattern: which detectors receive light and
/// whether both photons bunch onto a single detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickPattern {
    pub mask: u8,
    pub bunched: bool,
}

impl ClickPattern {
    pub fn signature(&self) -> BsmSignature {
        signature_from_mask(self.mask)
    }
}

/// (|HV><HV| + |VH><VH|) / 2: the distinguishable-photon conditioning term,
/// common to both signatures (classical 50:50 routing of each photon).
fn classical_term<T: Scalar>() -> DMatrix<Complex<T>> {
    let mut m = DMatrix::from_element(4, 4, Complex::new(T::zero(), T::zero()));
    let half = T::from_f64_lossy(0.5);
    m[(1, 1)] = re(half);
    m[(2, 2)] = re(half);
    m
}

fn basis_projector<T: Scalar>(index: usize) -> DMatrix<Complex<T>> {
    let mut m = DMatrix::from_element(4, 4, Complex::new(T::zero(), T::zero()));
    m[(index, index)] = re(T::one());
    m
}

/// Effective conditioning operator on qubits (2, 3) for a valid signature:
/// M_s = V |s><s| + (1 - V) (|HV><HV| + |VH><VH|) / 2.
pub fn conditioning_operator<T: Scalar>(
    signature: BsmSignature,
    v_mode: ModeOverlap<T>,
) -> Result<DMatrix<Complex<T>>> {
    let label = match signature {
        BsmSignature::PsiMinus => BellLabel::PsiMinus,
        BsmSignature::PsiPlus => BellLabel::PsiPlus,
        BsmSignature::NoSignature => {
            return Err(Error::InvalidParameter(
                "no conditioning operator for NoSignature".into(),
            ))
        }
    };
    let v = v_mode.value();
    let quantum = bell_state::<T>(label).projector();
    let classical = classical_term::<T>();
    Ok(quantum.map(|x| x * re(v)) + classical.map(|x| x * re(T::one() - v)))
}

/// The complete click-pattern POVM on qubits (2, 3) at unit detection
/// efficiency: ten patterns whose operators sum to the identity. Used by
/// the Monte Carlo to sample detector-level events.
pub fn pattern_povm<T: Scalar>(v_mode: ModeOverlap<T>) -> Vec<(ClickPattern, DMatrix<Complex<T>>)> {
    let v = v_mode.value();
    let half = T::from_f64_lossy(0.5);
    let quarter = T::from_f64_lossy(0.25);
    let m_minus = conditioning_operator(BsmSignature::PsiMinus, v_mode).unwrap();
    let m_plus = conditioning_operator(BsmSignature::PsiPlus, v_mode).unwrap();
    let hh = basis_projector::<T>(0);
    let vv = basis_projector::<T>(3);

    let mut povm = Vec::with_capacity(10);
    // Valid signatures split evenly over their two click patterns.
    for mask in [MASK_Q1H_Q2V, MASK_Q1V_Q2H] {
        povm.push((
            ClickPattern { mask, bunched: false },
            m_minus.map(|x| x * re(half)),
        ));
    }
    for mask in [MASK_Q1H_Q1V, MASK_Q2H_Q2V] {
        povm.push((
            ClickPattern { mask, bunched: false },
            m_plus.map(|x| x * re(half)),
        ));
    }
    // Equal-polarization photons on different ports: purely the
    // distinguishable component.
    let w_cross = half * (T::one() - v);
    povm.push((
        ClickPattern { mask: BsmDetector::Q1H.mask() | BsmDetector::Q2H.mask(), bunched: false },
        hh.map(|x| x * re(w_cross)),
    ));
    povm.push((
        ClickPattern { mask: BsmDetector::Q1V.mask() | BsmDetector::Q2V.mask(), bunched: false },
        vv.map(|x| x * re(w_cross)),
    ));
    // Both photons bunched onto one detector (equal polarization only; a
    // PBS output carries a single polarization).
    let w_bunch = quarter * (T::one() + v);
    for det in [BsmDetector::Q1H, BsmDetector::Q2H] {
        povm.push((
            ClickPattern { mask: det.mask(), bunched: true },
            hh.map(|x| x * re(w_bunch)),
        ));
    }
    for det in [BsmDetector::Q1V, BsmDetector::Q2V] {
        povm.push((
            ClickPattern { mask: det.mask(), bunched: true },
            vv.map(|x| x * re(w_bunch)),
        ));
    }
    povm
}

fn hermitize<T: Scalar>(m: DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let adj = m.adjoint();
    (m + adj).map(|x| x * re(T::from_f64_lossy(0.5)))
}

/// Conditions the joint state on a POVM element acting on qubits (1, 2) of
/// the four-qubit register and traces out the measured pair, returning the
/// probability and unnormalized reduced state on photons (1, 4).
fn condition_on_bsm<T: Scalar>(
    joint: &DensityMatrix<T>,
    element: &DMatrix<Complex<T>>,
) -> (T, DMatrix<Complex<T>>) {
    let full = embed_operator(element, 4, &[1, 2]).expect("4-qubit embed");
    let prod = full * joint.matrix();
    let mut prob = T::zero();
    for i in 0..16 {
        prob += prod[(i, i)].re;
    }
    let reduced = partial_trace_matrix(&prod, 4, &[0, 3]);
    (prob, hermitize(reduced))
}

/// Applies the partial-distinguishability BSM to photons 2 and 3 of the
/// joint input `rho12 (x) rho34`, returning one outcome per signature
/// (psi-, psi+, none). Conditional states accompany the valid signatures
/// whenever their probability is above the impossibility floor.
pub fn swap<T: Scalar>(
    rho12: &DensityMatrix<T>,
    rho34: &DensityMatrix<T>,
    model: &BsmModel<T>,
) -> Result<Vec<BsmOutcome<T>>> {
    if rho12.n_qubits() != 2 || rho34.n_qubits() != 2 {
        return Err(Error::Dimension {
            expected: 4,
            got: rho12.dim().max(rho34.dim()),
        });
    }
    let joint = rho12.tensor(rho34)?;
    let mut outcomes = Vec::with_capacity(3);
    let mut total_valid = T::zero();
    for signature in BsmSignature::VALID {
        let m = conditioning_operator(signature, model.v_mode)?;
        let (prob, reduced) = condition_on_bsm(&joint, &m);
        let conditional = if prob >= T::PROBABILITY_FLOOR {
            let normalized = reduced.map(|x| x / re(prob));
            Some(DensityMatrix::from_parts_unchecked(2, normalized))
        } else {
            None
        };
        total_valid += prob.max(T::zero());
        outcomes.push(BsmOutcome {
            signature,
            probability: prob.max(T::zero()),
            conditional_14: conditional,
        });
    }
    if total_valid < T::PROBABILITY_FLOOR {
        // Degenerate input: no valid signature can ever fire.
        return Ok(vec![BsmOutcome {
            signature: BsmSignature::NoSignature,
            probability: T::one(),
            conditional_14: None,
        }]);
    }
    outcomes.push(BsmOutcome {
        signature: BsmSignature::NoSignature,
        probability: (T::one() - total_valid).max(T::zero()),
        conditional_14: None,
    });
    Ok(outcomes)
}

/// Polarization correlation of the swapped photons conditioned on a BSM
/// signature.
pub fn swapped_correlation<T: Scalar>(
    rho12: &DensityMatrix<T>,
    rho34: &DensityMatrix<T>,
    model: &BsmModel<T>,
    signature: BsmSignature,
    a: PolarizerSetting<T>,
    b: PolarizerSetting<T>,
) -> Result<T> {
    let outcomes = swap(rho12, rho34, model)?;
    let outcome = outcomes
        .iter()
        .find(|o| o.signature == signature)
        .ok_or(Error::NoConditionalState)?;
    let conditional = outcome
        .conditional_14
        .as_ref()
        .ok_or(Error::NoConditionalState)?;
    crate::qcore::correlation(conditional, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Outcome;
    use crate::sources::{emit_state, SourceParams};
    use approx::assert_relative_eq;

    fn overlap(v: f64) -> ModeOverlap<f64> {
        ModeOverlap::new(v).unwrap()
    }

    fn singlet() -> DensityMatrix<f64> {
        bell_state::<f64>(BellLabel::PsiMinus).density()
    }

    fn deg(x: f64) -> PolarizerSetting<f64> {
        PolarizerSetting::new(x)
    }

    #[test]
    fn signature_map_matches_detector_wiring() {
        use BsmDetector::*;
        assert_eq!(bsm_signature_map(&[Q1H, Q2V]), BsmSignature::PsiMinus);
        assert_eq!(bsm_signature_map(&[Q1V, Q2H]), BsmSignature::PsiMinus);
        assert_eq!(bsm_signature_map(&[Q2H, Q2V]), BsmSignature::PsiPlus);
        assert_eq!(bsm_signature_map(&[Q1H, Q1V]), BsmSignature::PsiPlus);
        assert_eq!(bsm_signature_map(&[Q1H, Q2H]), BsmSignature::NoSignature);
        assert_eq!(bsm_signature_map(&[Q1V, Q2V]), BsmSignature::NoSignature);
        assert_eq!(bsm_signature_map(&[Q1H]), BsmSignature::NoSignature);
        assert_eq!(bsm_signature_map(&[]), BsmSignature::NoSignature);
        assert_eq!(
            bsm_signature_map(&[Q1H, Q2V, Q2H]),
            BsmSignature::NoSignature
        );
        // Duplicate clicks collapse to one detector.
        assert_eq!(bsm_signature_map(&[Q1H, Q1H]), BsmSignature::NoSignature);
    }

    #[test]
    fn ideal_swap_projects_onto_matching_bell_states() {
        // Bell-basis expansion of psi- (x) psi-: each signature fires with
        // probability 1/4 and leaves photons 1, 4 in that Bell state.
        let model = BsmModel::ideal(overlap(1.0));
        let outcomes = swap(&singlet(), &singlet(), &model).unwrap();
        assert_eq!(outcomes.len(), 3);
        let psim = &outcomes[0];
        assert_relative_eq!(psim.probability, 0.25, epsilon = 1e-12);
        let cond = psim.conditional_14.as_ref().unwrap();
        cond.validate().unwrap();
        assert_relative_eq!(
            cond.fidelity_with(&bell_state(BellLabel::PsiMinus)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let psip = &outcomes[1];
        assert_relative_eq!(psip.probability, 0.25, epsilon = 1e-12);
        let cond = psip.conditional_14.as_ref().unwrap();
        assert_relative_eq!(
            cond.fidelity_with(&bell_state(BellLabel::PsiPlus)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(outcomes[2].probability, 0.5, epsilon = 1e-12);
        assert!(outcomes[2].conditional_14.is_none());
    }

    #[test]
    fn distinguishable_swap_yields_classical_mixture() {
        // Classical routing enumeration: each photon independently takes
        // either splitter port, so valid signatures still fire with
        // probability 1/4 but the conditional state is the incoherent
        // anticorrelated mixture.
        let model = BsmModel::ideal(overlap(0.0));
        let outcomes = swap(&singlet(), &singlet(), &model).unwrap();
        for outcome in &outcomes[..2] {
            assert_relative_eq!(outcome.probability, 0.25, epsilon = 1e-12);
            let cond = outcome.conditional_14.as_ref().unwrap();
            cond.validate().unwrap();
            assert_relative_eq!(cond.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
            assert_relative_eq!(cond.matrix()[(2, 2)].re, 0.5, epsilon = 1e-12);
            assert!(cond.matrix()[(1, 2)].norm_sqr() < 1e-24);
            assert_relative_eq!(cond.purity(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn white_noise_in_white_noise_out() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(2).unwrap();
        for v in [0.0, 0.3, 1.0] {
            let model = BsmModel::ideal(overlap(v));
            let outcomes = swap(&mixed, &mixed, &model).unwrap();
            for outcome in &outcomes[..2] {
                let cond = outcome.conditional_14.as_ref().unwrap();
                for i in 0..4 {
                    assert_relative_eq!(cond.matrix()[(i, i)].re, 0.25, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn signature_probabilities_sum_to_one() {
        let wa = emit_state(&SourceParams::<f64> {
            state_visibility: 0.8,
            ..Default::default()
        })
        .unwrap();
        let wb = emit_state(&SourceParams::<f64> {
            state_visibility: 0.55,
            target: BellLabel::PhiPlus,
            ..Default::default()
        })
        .unwrap();
        for v in [0.0, 0.4, 0.96, 1.0] {
            let model = BsmModel::ideal(overlap(v));
            let outcomes = swap(&wa, &wb, &model).unwrap();
            let total: f64 = outcomes.iter().map(|o| o.probability).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
            for o in &outcomes {
                if let Some(c) = &o.conditional_14 {
                    c.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn signature_probabilities_independent_of_mode_overlap() {
        for v in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let model = BsmModel::ideal(overlap(v));
            let outcomes = swap(&singlet(), &singlet(), &model).unwrap();
            assert_relative_eq!(outcomes[0].probability, 0.25, epsilon = 1e-12);
            assert_relative_eq!(outcomes[1].probability, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn conditional_is_pure_at_unit_overlap() {
        let phi = bell_state::<f64>(BellLabel::PhiPlus).density();
        let model = BsmModel::ideal(overlap(1.0));
        let outcomes = swap(&singlet(), &phi, &model).unwrap();
        for outcome in &outcomes[..2] {
            if let Some(cond) = &outcome.conditional_14 {
                assert_relative_eq!(cond.purity(), 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn swap_is_continuous_in_mode_overlap() {
        let model_a = BsmModel::ideal(overlap(0.6));
        let model_b = BsmModel::ideal(overlap(0.6 + 1e-6));
        let a = swap(&singlet(), &singlet(), &model_a).unwrap();
        let b = swap(&singlet(), &singlet(), &model_b).unwrap();
        for (oa, ob) in a.iter().zip(&b) {
            if let (Some(ca), Some(cb)) = (&oa.conditional_14, &ob.conditional_14) {
                let max = ca
                    .matrix()
                    .iter()
                    .zip(cb.matrix().iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(max < 1e-5, "jump {max:.3e}");
            }
        }
    }

    #[test]
    fn degenerate_input_gives_all_no_signature() {
        // Parallel-polarized product input can never produce an
        // opposite-polarization coincidence.
        let hh = crate::qcore::PureState::<f64>::basis(2, 0).unwrap().density();
        let model = BsmModel::ideal(overlap(0.7));
        let outcomes = swap(&hh, &hh, &model).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].signature, BsmSignature::NoSignature);
        assert_relative_eq!(outcomes[0].probability, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn swapped_correlation_ideal_values() {
        let model = BsmModel::ideal(overlap(1.0));
        let e = swapped_correlation(
            &singlet(),
            &singlet(),
            &model,
            BsmSignature::PsiMinus,
            deg(0.0),
            deg(22.5),
        )
        .unwrap();
        assert_relative_eq!(e, -0.70711, epsilon = 5e-6);
        // psi+ branch: E(a, b) = -cos 2(a + b); trace-formula oracle value
        // at (45, 22.5) is +cos(45 deg).
        let e = swapped_correlation(
            &singlet(),
            &singlet(),
            &model,
            BsmSignature::PsiPlus,
            deg(45.0),
            deg(22.5),
        )
        .unwrap();
        assert_relative_eq!(e, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        let e = swapped_correlation(
            &singlet(),
            &singlet(),
            &model,
            BsmSignature::PsiPlus,
            deg(0.0),
            deg(22.5),
        )
        .unwrap();
        assert_relative_eq!(e, -(45f64.to_radians().cos()), epsilon = 1e-12);
    }

    #[test]
    fn swapped_correlation_partial_overlap_frozen_value() {
        // Full density-matrix evaluation: E = -V cos 2(a-b) -
        // (1-V) cos 2a cos 2b for ideal singlet inputs; at V = 0.96,
        // (45, 22.5) the classical term vanishes.
        let model = BsmModel::ideal(overlap(0.96));
        let e = swapped_correlation(
            &singlet(),
            &singlet(),
            &model,
            BsmSignature::PsiMinus,
            deg(45.0),
            deg(22.5),
        )
        .unwrap();
        assert_relative_eq!(e, -0.96 * std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(e, -0.678_822_509_939_086, epsilon = 1e-12);
    }

    #[test]
    fn swapped_correlation_rejects_no_signature() {
        let model = BsmModel::ideal(overlap(1.0));
        let r = swapped_correlation(
            &singlet(),
            &singlet(),
            &model,
            BsmSignature::NoSignature,
            deg(0.0),
            deg(22.5),
        );
        assert!(matches!(r, Err(Error::NoConditionalState)));
    }

    #[test]
    fn pattern_povm_is_complete() {
        for v in [0.0, 0.37, 0.96, 1.0] {
            let povm = pattern_povm(overlap(v));
            assert_eq!(povm.len(), 10);
            let mut sum = DMatrix::from_element(4, 4, Complex::new(0.0, 0.0));
            for (_, op) in &povm {
                sum += op;
            }
            for i in 0..4 {
                for j in 0..4 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_relative_eq!(sum[(i, j)].re, expect, epsilon = 1e-12);
                    assert_relative_eq!(sum[(i, j)].im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pattern_povm_signatures_aggregate_to_conditioning_operators() {
        let v = overlap(0.42);
        let povm = pattern_povm(v);
        for signature in BsmSignature::VALID {
            let m = conditioning_operator(signature, v).unwrap();
            let mut agg = DMatrix::from_element(4, 4, Complex::new(0.0, 0.0));
            for (pat, op) in &povm {
                if pat.signature() == signature {
                    agg += op;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    assert!((agg[(i, j)] - m[(i, j)]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn outcome_value_indexing() {
        assert_eq!(Outcome::Plus.index(), 0);
        assert_eq!(Outcome::Minus.index(), 1);
        assert_eq!(Outcome::Plus.value::<f64>(), 1.0);
        assert_eq!(Outcome::Minus.value::<f64>(), -1.0);
    }
}
