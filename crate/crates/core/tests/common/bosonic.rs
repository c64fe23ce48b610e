//! Mode-level oracle for the linear-optics Bell-state measurement: an
//! explicit bosonic two-photon calculation over the beam splitter + PBS
//! network with two temporal modes per polarization, enumerating every
//! detector click pattern.
//!
//! Modes are indexed port x polarization x temporal bin. Photon 2 enters
//! input a in temporal mode 0; photon 3 enters input b in a temporal mode
//! with amplitude sqrt(V) on bin 0 and sqrt(1 - V) on an orthogonal bin 1.
//! The 50:50 splitter maps a -> (c + d)/sqrt2, b -> (c - d)/sqrt2; port c
//! feeds PBS Q1, port d feeds PBS Q2.

use nalgebra::DMatrix;
use num_complex::Complex;
use std::collections::BTreeMap;

type C64 = Complex<f64>;

const N_MODES: usize = 8;

/// Detector bit assignment matching the production click masks:
/// bit 0 = Q1H, bit 1 = Q1V, bit 2 = Q2H, bit 3 = Q2V.
fn detector_of_mode(mode: usize) -> u8 {
    let port = mode / 4;
    let pol = (mode / 2) % 2;
    (port * 2 + pol) as u8
}

fn mode_index(port: usize, pol: usize, temporal: usize) -> usize {
    port * 4 + pol * 2 + temporal
}

/// Two-photon Fock basis: unordered mode pairs (m1 <= m2).
fn two_photon_basis() -> Vec<(usize, usize)> {
    let mut basis = Vec::new();
    for m1 in 0..N_MODES {
        for m2 in m1..N_MODES {
            basis.push((m1, m2));
        }
    }
    basis
}

/// Isometry from the (photon2, photon3) polarization basis (dimension 4)
/// into the two-photon output Fock space (dimension 36).
fn network_isometry(v_mode: f64) -> DMatrix<C64> {
    let basis = two_photon_basis();
    let pos: BTreeMap<(usize, usize), usize> = basis
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let lam = v_mode.sqrt();
    let mu = (1.0 - v_mode).sqrt();

    let mut l = DMatrix::from_element(basis.len(), 4, C64::new(0.0, 0.0));
    for p2 in 0..2 {
        for p3 in 0..2 {
            let col = p2 * 2 + p3;
            // Photon 2: input a, temporal bin 0.
            let terms2 = [
                (mode_index(0, p2, 0), r),
                (mode_index(1, p2, 0), r),
            ];
            // Photon 3: input b, temporal superposition.
            let terms3 = [
                (mode_index(0, p3, 0), lam * r),
                (mode_index(1, p3, 0), -lam * r),
                (mode_index(0, p3, 1), mu * r),
                (mode_index(1, p3, 1), -mu * r),
            ];
            for &(ma, ca) in &terms2 {
                for &(mb, cb) in &terms3 {
                    let key = if ma <= mb { (ma, mb) } else { (mb, ma) };
                    let boson = if ma == mb { std::f64::consts::SQRT_2 } else { 1.0 };
                    l[(pos[&key], col)] += C64::new(ca * cb * boson, 0.0);
                }
            }
        }
    }
    l
}

/// Result of the full mode-level computation: probability and unnormalized
/// conditional state of photons (1, 4) for every click pattern (mask over
/// the four BSM detectors).
pub struct BosonicBsmResult {
    pub pattern_probs: BTreeMap<u8, f64>,
    pub pattern_states_unnormalized: BTreeMap<u8, DMatrix<C64>>,
}

impl BosonicBsmResult {
    /// Normalized conditional state for a click mask.
    pub fn conditional(&self, mask: u8) -> Option<DMatrix<C64>> {
        let p = *self.pattern_probs.get(&mask)?;
        if p < 1e-15 {
            return None;
        }
        Some(self.pattern_states_unnormalized[&mask].map(|x| x / p))
    }

    /// Aggregated probability and normalized conditional over several masks.
    pub fn aggregate(&self, masks: &[u8]) -> (f64, Option<DMatrix<C64>>) {
        let mut p = 0.0;
        let mut acc = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
        for m in masks {
            if let Some(q) = self.pattern_probs.get(m) {
                p += q;
                acc += &self.pattern_states_unnormalized[m];
            }
        }
        if p < 1e-15 {
            (p, None)
        } else {
            (p, Some(acc.map(|x| x / p)))
        }
    }
}

/// Runs the bosonic network on the joint input rho12 (x) rho34 (each a 4x4
/// polarization density matrix, photon ordering 1,2 and 3,4) and projects
/// every two-photon detector pattern.
pub fn bosonic_bsm(
    rho12: &DMatrix<C64>,
    rho34: &DMatrix<C64>,
    v_mode: f64,
) -> BosonicBsmResult {
    assert_eq!(rho12.nrows(), 4);
    assert_eq!(rho34.nrows(), 4);
    let rho = rho12.kronecker(rho34); // qubit order (1, 2, 3, 4)

    let l = network_isometry(v_mode);
    let basis = two_photon_basis();
    let fock = basis.len();

    // Isometry self-check: columns orthonormal.
    let gram = l.adjoint() * &l;
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (gram[(i, j)].re - expect).abs() < 1e-12 && gram[(i, j)].im.abs() < 1e-12,
                "network map is not an isometry"
            );
        }
    }

    // rho' = U rho U^dagger on (photon1, fock, photon4), built entrywise
    // from rho[(i1 i2 i3 i4), (j1 j2 j3 j4)] L[f, (i2 i3)] conj(L[g, (j2 j3)]).
    let dim = 2 * fock * 2;
    let mut rho_out = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i1 in 0..2 {
        for i4 in 0..2 {
            for j1 in 0..2 {
                for j4 in 0..2 {
                    for i23 in 0..4 {
                        for j23 in 0..4 {
                            let row_in = i1 * 8 + i23 * 2 + i4;
                            let col_in = j1 * 8 + j23 * 2 + j4;
                            let val = rho[(row_in, col_in)];
                            if val.norm_sqr() == 0.0 {
                                continue;
                            }
                            for f in 0..fock {
                                let lf = l[(f, i23)];
                                if lf.norm_sqr() == 0.0 {
                                    continue;
                                }
                                for g in 0..fock {
                                    let lg = l[(g, j23)];
                                    if lg.norm_sqr() == 0.0 {
                                        continue;
                                    }
                                    let row = i1 * (fock * 2) + f * 2 + i4;
                                    let col = j1 * (fock * 2) + g * 2 + j4;
                                    rho_out[(row, col)] += val * lf * lg.conj();
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Photodetection is diagonal in the Fock basis; group basis states by
    // which detectors see at least one photon.
    let mut pattern_probs: BTreeMap<u8, f64> = BTreeMap::new();
    let mut pattern_states: BTreeMap<u8, DMatrix<C64>> = BTreeMap::new();
    for (f, &(m1, m2)) in basis.iter().enumerate() {
        let mask = (1u8 << detector_of_mode(m1)) | (1u8 << detector_of_mode(m2));
        let state = pattern_states
            .entry(mask)
            .or_insert_with(|| DMatrix::from_element(4, 4, C64::new(0.0, 0.0)));
        let mut p = 0.0;
        for i1 in 0..2 {
            for i4 in 0..2 {
                for j1 in 0..2 {
                    for j4 in 0..2 {
                        let row = i1 * (fock * 2) + f * 2 + i4;
                        let col = j1 * (fock * 2) + f * 2 + j4;
                        let v = rho_out[(row, col)];
                        state[(i1 * 2 + i4, j1 * 2 + j4)] += v;
                        if i1 == j1 && i4 == j4 {
                            p += v.re;
                        }
                    }
                }
            }
        }
        *pattern_probs.entry(mask).or_insert(0.0) += p;
    }

    let total: f64 = pattern_probs.values().sum();
    assert!((total - 1.0).abs() < 1e-10, "pattern probabilities sum to {total}");

    BosonicBsmResult {
        pattern_probs,
        pattern_states_unnormalized: pattern_states,
    }
}
