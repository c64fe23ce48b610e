//! Exact state algebra for up to four polarization qubits: pure states,
//! density matrices, tensor products, projectors, partial traces and
//! polarization measurements.
//!
//! Conventions used throughout the crate:
//! * basis labels H -> 0, V -> 1;
//! * qubit `k` occupies bit `n_qubits - 1 - k` of the basis index, so the
//!   lowest photon index is the most significant bit. For two qubits the
//!   basis order is (HH, HV, VH, VV).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported register size.
pub const MAX_QUBITS: usize = 4;

#[inline]
pub(crate) fn re<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
    ];
}

/// Binary outcome of a polarization measurement, valued +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value<T: Scalar>(self) -> T {
        match self {
            Outcome::Plus => T::one(),
            Outcome::Minus => -T::one(),
        }
    }

    /// 0 for +1, 1 for -1; used to index count tables.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

/// Linear-polarization analyzer orientation in degrees, normalized to
/// [0, 180). Outcome +1 means transmission along `angle`, -1 along
/// `angle + 90`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizerSetting<T: Scalar> {
    angle_deg: T,
}

impl<T: Scalar> PolarizerSetting<T> {
    pub fn new(angle_deg: T) -> Self {
        let half_turn = T::from_f64_lossy(180.0);
        let mut a = angle_deg - half_turn * (angle_deg / half_turn).floor();
        if a < T::zero() {
            a += half_turn;
        }
        Self { angle_deg: a }
    }

    pub fn angle_deg(&self) -> T {
        self.angle_deg
    }

    pub fn angle_rad(&self) -> T {
        self.angle_deg * T::pi() / T::from_f64_lossy(180.0)
    }

    /// The +/-1-valued observable A(theta) = cos(2 theta) Z + sin(2 theta) X.
    pub fn observable(&self) -> DMatrix<Complex<T>> {
        let two_theta = self.angle_rad() * T::from_f64_lossy(2.0);
        let c = two_theta.cos();
        let s = two_theta.sin();
        DMatrix::from_row_slice(2, 2, &[re(c), re(s), re(s), re(-c)])
    }

    /// Rank-one projector onto the transmitted (+1) or reflected (-1) port.
    pub fn projector(&self, outcome: Outcome) -> DMatrix<Complex<T>> {
        let theta = match outcome {
            Outcome::Plus => self.angle_rad(),
            Outcome::Minus => self.angle_rad() + T::frac_pi_2(),
        };
        let c = theta.cos();
        let s = theta.sin();
        DMatrix::from_row_slice(2, 2, &[re(c * c), re(c * s), re(c * s), re(s * s)])
    }
}

/// Normalized pure state on `n_qubits` polarization qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Scalar> {
    n_qubits: usize,
    amplitudes: DVector<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    pub fn new(n_qubits: usize, amplitudes: DVector<Complex<T>>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        let norm_sq: T = amplitudes.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, v| s + v);
        if (norm_sq - T::one()).abs() > T::HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {} differs from 1",
                norm_sq.to_f64_lossy()
            )));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Single computational basis state; `index` bits follow the crate
    /// ordering convention.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidIndices(format!("basis index {index} out of range")));
        }
        let mut amps = DVector::from_element(dim, Complex::new(T::zero(), T::zero()));
        amps[index] = re(T::one());
        Ok(Self { n_qubits, amplitudes: amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.amplitudes.len(),
                got: other.amplitudes.len(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        check_qubit_count(n)?;
        Ok(Self {
            n_qubits: n,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    /// Rank-one density matrix |psi><psi|.
    pub fn density(&self) -> DensityMatrix<T> {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: m,
        }
    }

    pub fn projector(&self) -> DMatrix<Complex<T>> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Trace-one positive Hermitian operator on `n_qubits` polarization qubits;
/// the universal state representation of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Scalar> {
    n_qubits: usize,
    matrix: DMatrix<Complex<T>>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity and unit trace. Positivity is checked by
    /// [`DensityMatrix::validate`], which is run by the test suites on every
    /// produced state.
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex<T>>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let state = Self { n_qubits, matrix };
        state.check_hermitian()?;
        state.check_trace()?;
        Ok(state)
    }

    /// For operations that preserve validity by construction.
    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: DMatrix<Complex<T>>) -> Self {
        Self { n_qubits, matrix }
    }

    /// I / 2^n.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        let w = T::one() / T::from_usize(dim).unwrap();
        Ok(Self {
            n_qubits,
            matrix: DMatrix::from_diagonal_element(dim, dim, re(w)),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..self.dim() {
            t += self.matrix[(i, i)].re;
        }
        t
    }

    /// Tr(rho^2); 1 for pure states.
    pub fn purity(&self) -> T {
        let mut p = T::zero();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                p += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        p
    }

    /// Re Tr(rho op) for a Hermitian operator of matching dimension.
    pub fn expectation(&self, op: &DMatrix<Complex<T>>) -> T {
        let mut e = T::zero();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                e += (self.matrix[(i, j)] * op[(j, i)]).re;
            }
        }
        e
    }

    /// <psi| rho |psi>.
    pub fn fidelity_with(&self, psi: &PureState<T>) -> Result<T> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: psi.amplitudes().len(),
            });
        }
        Ok(self.expectation(&psi.projector()))
    }

    /// Eigenvalues of the (Hermitian) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut vals: Vec<T> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    fn check_hermitian(&self) -> Result<()> {
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                if d.re.abs() > T::HERMITICITY_TOL || d.im.abs() > T::HERMITICITY_TOL {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_trace(&self) -> Result<()> {
        let t = self.trace();
        if (t - T::one()).abs() > T::TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {} differs from 1",
                t.to_f64_lossy()
            )));
        }
        Ok(())
    }

    /// Full invariant check: Hermitian, trace one, eigenvalues above
    /// `-POSITIVITY_TOL`.
    pub fn validate(&self) -> Result<()> {
        self.check_hermitian()?;
        self.check_trace()?;
        let min = self.eigenvalues()[0];
        if min < -T::POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {}",
                min.to_f64_lossy()
            )));
        }
        Ok(())
    }

    /// Kronecker product with `other`; combined register limited to four
    /// qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        check_qubit_count(n)?;
        Ok(Self {
            n_qubits: n,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Reduced state on `keep` (ascending qubit indices, which keeps the
    /// original relative ordering).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let keep = check_subset(keep, self.n_qubits)?;
        let reduced = partial_trace_matrix(&self.matrix, self.n_qubits, &keep);
        Ok(Self {
            n_qubits: keep.len(),
            matrix: reduced,
        })
    }
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

/// Validates a qubit index subset and returns it sorted ascending.
fn check_subset(subset: &[usize], n_qubits: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidIndices("empty subset".into()));
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != subset.len() {
        return Err(Error::InvalidIndices("duplicate indices".into()));
    }
    if *s.last().unwrap() >= n_qubits {
        return Err(Error::InvalidIndices(format!(
            "index {} out of range for {} qubits",
            s.last().unwrap(),
            n_qubits
        )));
    }
    Ok(s)
}

/// Bit position of qubit `k` in a basis index (qubit 0 is most significant).
#[inline]
fn bit_of(n_qubits: usize, qubit: usize) -> usize {
    n_qubits - 1 - qubit
}

/// Partial trace over the complement of `keep` (sorted ascending) on a raw
/// matrix. Used internally where intermediate operators are not yet valid
/// density matrices.
pub fn partial_trace_matrix<T: Scalar>(
    m: &DMatrix<Complex<T>>,
    n_qubits: usize,
    keep: &[usize],
) -> DMatrix<Complex<T>> {
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let dim_keep = 1usize << keep.len();
    let dim_tr = 1usize << traced.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = DMatrix::from_element(dim_keep, dim_keep, zero);

    // Scatter (keep-index, traced-index) pairs back into full basis indices.
    let compose = |ik: usize, it: usize| -> usize {
        let mut idx = 0usize;
        for (pos, q) in keep.iter().enumerate() {
            let bit = (ik >> (keep.len() - 1 - pos)) & 1;
            idx |= bit << bit_of(n_qubits, *q);
        }
        for (pos, q) in traced.iter().enumerate() {
            let bit = (it >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << bit_of(n_qubits, *q);
        }
        idx
    };

    for ik in 0..dim_keep {
        for jk in 0..dim_keep {
            let mut acc = zero;
            for it in 0..dim_tr {
                acc += m[(compose(ik, it), compose(jk, it))];
            }
            out[(ik, jk)] = acc;
        }
    }
    out
}

/// Embeds an operator acting on `targets` (in the given order: operator
/// qubit 0 maps to `targets[0]`) into the full `n_qubits` register.
pub fn embed_operator<T: Scalar>(
    op: &DMatrix<Complex<T>>,
    n_qubits: usize,
    targets: &[usize],
) -> Result<DMatrix<Complex<T>>> {
    check_qubit_count(n_qubits)?;
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != targets.len() || targets.iter().any(|&q| q >= n_qubits) {
        return Err(Error::InvalidIndices(format!("bad target set {targets:?}")));
    }
    let sub_dim = 1usize << targets.len();
    if op.nrows() != sub_dim || op.ncols() != sub_dim {
        return Err(Error::Dimension {
            expected: sub_dim,
            got: op.nrows(),
        });
    }

    let dim = 1usize << n_qubits;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = DMatrix::from_element(dim, dim, zero);
    let rest_mask: usize = (0..n_qubits)
        .filter(|q| !targets.contains(q))
        .map(|q| 1usize << bit_of(n_qubits, q))
        .sum();

    let gather = |idx: usize| -> usize {
        let mut sub = 0usize;
        for (pos, q) in targets.iter().enumerate() {
            let bit = (idx >> bit_of(n_qubits, *q)) & 1;
            sub |= bit << (targets.len() - 1 - pos);
        }
        sub
    };

    for i in 0..dim {
        for j in 0..dim {
            if i & rest_mask == j & rest_mask {
                out[(i, j)] = op[(gather(i), gather(j))];
            }
        }
    }
    Ok(out)
}

/// The normalized Bell state for `label`, global phase fixed so the first
/// nonzero amplitude in basis order is real positive.
pub fn bell_state<T: Scalar>(label: BellLabel) -> PureState<T> {
    let h = T::one() / T::from_f64_lossy(2.0).sqrt();
    let z = T::zero();
    let amps = match label {
        BellLabel::PsiPlus => [z, h, h, z],
        BellLabel::PsiMinus => [z, h, -h, z],
        BellLabel::PhiPlus => [h, z, z, h],
        BellLabel::PhiMinus => [h, z, z, -h],
    };
    let v = DVector::from_iterator(4, amps.iter().map(|&a| re(a)));
    PureState::new(2, v).expect("Bell states are normalized by construction")
}

/// Projects `rho` with an (idempotent, Hermitian) projector acting on
/// `targets`, returning the outcome probability and the renormalized
/// conditional state.
pub fn apply_projector<T: Scalar>(
    rho: &DensityMatrix<T>,
    projector: &DMatrix<Complex<T>>,
    targets: &[usize],
) -> Result<(T, DensityMatrix<T>)> {
    let sub_dim = 1usize << targets.len();
    if projector.nrows() != sub_dim || projector.ncols() != sub_dim {
        return Err(Error::Dimension {
            expected: sub_dim,
            got: projector.nrows(),
        });
    }
    for i in 0..sub_dim {
        for j in 0..sub_dim {
            let herm = projector[(i, j)] - projector[(j, i)].conj();
            if herm.norm_sqr() > T::PROJECTOR_TOL * T::PROJECTOR_TOL {
                return Err(Error::NotAProjector("not Hermitian".into()));
            }
        }
    }
    let p2 = projector * projector;
    for i in 0..sub_dim {
        for j in 0..sub_dim {
            let d = p2[(i, j)] - projector[(i, j)];
            if d.norm_sqr() > T::PROJECTOR_TOL * T::PROJECTOR_TOL {
                return Err(Error::NotAProjector("not idempotent".into()));
            }
        }
    }

    let full = embed_operator(projector, rho.n_qubits(), targets)?;
    let sandwich = &full * rho.matrix() * &full;
    let mut prob = T::zero();
    for i in 0..rho.dim() {
        prob += sandwich[(i, i)].re;
    }
    if prob < T::PROBABILITY_FLOOR {
        return Err(Error::OutcomeImpossible {
            prob: prob.to_f64_lossy(),
        });
    }
    let conditional = sandwich.map(|v| v / re(prob));
    Ok((
        prob,
        DensityMatrix::from_parts_unchecked(rho.n_qubits(), conditional),
    ))
}

/// E(a, b) = Tr[rho A(a) (x) A(b)] for a two-qubit state; lies in [-1, 1].
pub fn correlation<T: Scalar>(
    rho: &DensityMatrix<T>,
    a: PolarizerSetting<T>,
    b: PolarizerSetting<T>,
) -> Result<T> {
    if rho.n_qubits() != 2 {
        return Err(Error::Dimension {
            expected: 4,
            got: rho.dim(),
        });
    }
    let op = a.observable().kronecker(&b.observable());
    Ok(rho.expectation(&op))
}
