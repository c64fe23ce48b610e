//! CHSH inequality evaluation from analytic correlations or counted data,
//! with Poissonian error propagation and two-fold normalization of
//! four-fold coincidence counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::PolarizerSetting;
use crate::scalar::Scalar;

/// Analyzer angles in degrees: `a1`, `a2` for photon 1 and `b1`, `b2` for
/// photon 4. The defaults are the standard settings for maximal CHSH
/// violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngleSettings<T: Scalar> {
    pub a1: T,
    pub a2: T,
    pub b1: T,
    pub b2: T,
}

impl<T: Scalar> Default for AngleSettings<T> {
    fn default() -> Self {
        Self {
            a1: T::zero(),
            a2: T::from_f64_lossy(45.0),
            b1: T::from_f64_lossy(22.5),
            b2: T::from_f64_lossy(67.5),
        }
    }
}

impl<T: Scalar> AngleSettings<T> {
    pub fn validate(&self) -> Result<()> {
        let same = |x: T, y: T| {
            (PolarizerSetting::new(x).angle_deg() - PolarizerSetting::new(y).angle_deg()).abs()
                < T::from_f64_lossy(1e-9)
        };
        if same(self.a1, self.a2) || same(self.b1, self.b2) {
            return Err(Error::InvalidParameter(
                "angle settings must give four distinct setting pairs".into(),
            ));
        }
        Ok(())
    }

    /// The four setting pairs in canonical order: (a1,b1), (a1,b2),
    /// (a2,b1), (a2,b2).
    pub fn pairs(&self) -> [(PolarizerSetting<T>, PolarizerSetting<T>); 4] {
        let a1 = PolarizerSetting::new(self.a1);
        let a2 = PolarizerSetting::new(self.a2);
        let b1 = PolarizerSetting::new(self.b1);
        let b2 = PolarizerSetting::new(self.b2);
        [(a1, b1), (a1, b2), (a2, b1), (a2, b2)]
    }
}

/// A correlation value with its standard error and, when estimated from
/// data, the four outcome-pair counts (N++, N+-, N-+, N--) it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate<T: Scalar> {
    pub e: T,
    pub std_error: T,
    pub counts: Option<[u64; 4]>,
}

impl<T: Scalar> CorrelationEstimate<T> {
    /// An exactly known correlation (analytic path).
    pub fn exact(e: T) -> Self {
        Self {
            e,
            std_error: T::zero(),
            counts: None,
        }
    }

    /// E = (N++ + N-- - N+- - N-+) / N with first-order Poisson error
    /// propagation, which reduces to sigma = sqrt((1 - E^2) / N).
    pub fn from_counts(counts: [u64; 4]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::NoData("all four counts are zero".into()));
        }
        let vals: Vec<T> = counts
            .iter()
            .map(|&c| T::from_u64(c).expect("count fits scalar"))
            .collect();
        let n = T::from_u64(total).expect("count fits scalar");
        let e = (vals[0] + vals[3] - vals[1] - vals[2]) / n;
        let var = (T::one() - e * e) / n;
        Ok(Self {
            e,
            std_error: var.max(T::zero()).sqrt(),
            counts: Some(counts),
        })
    }

    /// Same estimator over real-valued (e.g. drift-normalized) counts.
    /// `raw_counts` records the unnormalized integers when available.
    pub fn from_weighted_counts(weighted: [T; 4], raw_counts: Option<[u64; 4]>) -> Result<Self> {
        let n = weighted.iter().fold(T::zero(), |s, &v| s + v);
        if n <= T::zero() {
            return Err(Error::NoData("non-positive total weight".into()));
        }
        let e = (weighted[0] + weighted[3] - weighted[1] - weighted[2]) / n;
        let var = (T::one() - e * e) / n;
        Ok(Self {
            e,
            std_error: var.max(T::zero()).sqrt(),
            counts: raw_counts,
        })
    }
}

/// Which of the two swapped-state CHSH combinations is evaluated. The sign
/// pattern follows the BSM outcome: S = |+-E11 -+E12 + E21 + E22| with the
/// upper signs for the psi- outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChshVariant {
    ForPsiMinus,
    ForPsiPlus,
}

impl ChshVariant {
    pub const BOTH: [ChshVariant; 2] = [ChshVariant::ForPsiMinus, ChshVariant::ForPsiPlus];

    fn signs<T: Scalar>(self) -> [T; 4] {
        match self {
            ChshVariant::ForPsiMinus => [T::one(), -T::one(), T::one(), T::one()],
            ChshVariant::ForPsiPlus => [-T::one(), T::one(), T::one(), T::one()],
        }
    }
}

/// A CHSH evaluation: S, its standard error and the four underlying
/// correlation estimates in canonical setting order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult<T: Scalar> {
    pub variant: ChshVariant,
    pub s: T,
    pub std_error: T,
    pub estimates: [CorrelationEstimate<T>; 4],
}

/// Combines four correlation estimates for the settings (a1,b1), (a1,b2),
/// (a2,b1), (a2,b2) into the CHSH parameter for the given variant; errors
/// add in quadrature.
pub fn chsh_s<T: Scalar>(
    variant: ChshVariant,
    estimates: [CorrelationEstimate<T>; 4],
) -> ChshResult<T> {
    let signs = variant.signs::<T>();
    let mut s = T::zero();
    let mut var = T::zero();
    for (sign, est) in signs.iter().zip(estimates.iter()) {
        s += *sign * est.e;
        var += est.std_error * est.std_error;
    }
    ChshResult {
        variant,
        s: s.abs(),
        std_error: var.sqrt(),
        estimates,
    }
}

/// (S - 2) / sigma: how many standard deviations the local bound is
/// exceeded by.
pub fn violation_significance<T: Scalar>(result: &ChshResult<T>) -> Result<T> {
    if result.std_error <= T::zero() {
        return Err(Error::InvalidParameter(
            "significance requires a positive standard error".into(),
        ));
    }
    Ok((result.s - T::from_f64_lossy(2.0)) / result.std_error)
}

/// Corrects four-fold counts for slow drift using the per-setting two-fold
/// coincidence rates: each count is scaled by the mean two-fold product
/// over its own product, then the whole table is rescaled to preserve the
/// grand total.
pub fn normalize_fourfolds<T: Scalar>(
    raw: &[T],
    twofold_1: &[T],
    twofold_4: &[T],
) -> Result<Vec<T>> {
    let n = raw.len();
    if n == 0 || twofold_1.len() != n || twofold_4.len() != n {
        return Err(Error::InvalidParameter(
            "count and two-fold slices must have equal nonzero length".into(),
        ));
    }
    let mut products = Vec::with_capacity(n);
    for i in 0..n {
        let p = twofold_1[i] * twofold_4[i];
        if p <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "zero two-fold product at setting {i}"
            )));
        }
        products.push(p);
    }
    let mean = products.iter().fold(T::zero(), |s, &p| s + p) / T::from_usize(n).unwrap();
    let scaled: Vec<T> = raw
        .iter()
        .zip(&products)
        .map(|(&r, &p)| r * mean / p)
        .collect();
    let raw_total = raw.iter().fold(T::zero(), |s, &v| s + v);
    let scaled_total = scaled.iter().fold(T::zero(), |s, &v| s + v);
    if scaled_total <= T::zero() {
        return Ok(scaled);
    }
    let rescale = raw_total / scaled_total;
    Ok(scaled.into_iter().map(|v| v * rescale).collect())
}
