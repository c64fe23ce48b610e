//! Event-level Monte Carlo of the full experiment: pulse train, Bernoulli
//! pair emissions, BSM detector patterns with partial distinguishability,
//! analyzer clicks, efficiency thinning, dark counts and coincidence
//! counting, plus the Hong-Ou-Mandel delay scan.
//!
//! Sampling happens at the outcome-probability level: the exact joint
//! distribution over detector-level outcomes is computed once per analyzer
//! setting and then sampled per pulse, which keeps the Monte Carlo in
//! one-to-one correspondence with the analytic model it is checked against.
//! Counting is per pulse window; the coincidence window is validated to be
//! shorter than the pulse period and accidentals across windows are not
//! modeled.

mod fit;

pub use fit::{fit_gaussian, GaussianDipFit};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::bsm::{pattern_povm, signature_from_mask, BsmModel, BsmSignature, ClickPattern};
use crate::chsh::{chsh_s, AngleSettings, ChshResult, ChshVariant, CorrelationEstimate};
use crate::error::{Error, Result};
use crate::qcore::{DensityMatrix, Outcome, PolarizerSetting};
use crate::scalar::Scalar;
use crate::sources::{emit_state, mode_overlap, ModeOverlap, SourceParams, TimingParams};

/// Click-mask bit positions for the eight detectors: the four BSM
/// detectors reuse [`crate::bsm::BsmDetector::bit`]; the analyzer arms add
/// transmit/reflect channels.
const BIT_D1_PLUS: u8 = 4;
const BIT_D1_MINUS: u8 = 5;
const BIT_D4_PLUS: u8 = 6;
const BIT_D4_MINUS: u8 = 7;
const N_DETECTORS: usize = 8;

/// Analyzer orientation used for both heralding arms during HOM scans; the
/// parallel setting projects the interfering photons onto equal
/// polarizations for singlet sources.
const HOM_ANALYZER_DEG: f64 = 0.0;

/// Full configuration of a simulated run. Identical configurations
/// (including the seed) reproduce identical count tables bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig<T: Scalar> {
    pub n_pulses: u64,
    pub source_a: SourceParams<T>,
    pub source_b: SourceParams<T>,
    pub timing: TimingParams<T>,
    /// Per-detector efficiency.
    pub detection_efficiency: T,
    /// Dark-count probability per detector per coincidence window.
    pub dark_count_prob: T,
    pub coincidence_window_ns: T,
    pub rng_seed: u64,
    pub settings: AngleSettings<T>,
    /// Overrides the mode overlap computed from timing and filters, for
    /// runs pinned to a measured HOM visibility.
    pub v_mode_override: Option<T>,
}

impl<T: Scalar> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            n_pulses: 1_000_000,
            source_a: SourceParams::default(),
            source_b: SourceParams::default(),
            timing: TimingParams::default(),
            detection_efficiency: T::one(),
            dark_count_prob: T::zero(),
            coincidence_window_ns: T::from_f64_lossy(6.0),
            rng_seed: 1,
            settings: AngleSettings::default(),
            v_mode_override: None,
        }
    }
}

impl<T: Scalar> RunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.source_a.validate()?;
        self.source_b.validate()?;
        self.timing.validate()?;
        self.settings.validate()?;
        if self.n_pulses == 0 {
            return Err(Error::InvalidConfig("n_pulses must be positive".into()));
        }
        let unit = |x: T, name: &str| {
            if x < T::zero() || x > T::one() {
                Err(Error::InvalidConfig(format!(
                    "{name} = {} outside [0, 1]",
                    x.to_f64_lossy()
                )))
            } else {
                Ok(())
            }
        };
        unit(self.detection_efficiency, "detection_efficiency")?;
        unit(self.dark_count_prob, "dark_count_prob")?;
        if self.coincidence_window_ns <= T::zero()
            || self.coincidence_window_ns >= self.timing.pulse_period_ns
        {
            return Err(Error::InvalidConfig(format!(
                "coincidence window {} ns must lie in (0, pulse period {} ns)",
                self.coincidence_window_ns.to_f64_lossy(),
                self.timing.pulse_period_ns.to_f64_lossy()
            )));
        }
        if let Some(v) = self.v_mode_override {
            ModeOverlap::new(v)?;
        }
        Ok(())
    }

    /// Effective mode overlap of the run: the override when present,
    /// otherwise computed from the static delay, jitter and the BSM-arm
    /// coherence times.
    pub fn v_mode(&self) -> Result<ModeOverlap<T>> {
        if let Some(v) = self.v_mode_override {
            return ModeOverlap::new(v);
        }
        mode_overlap(
            self.timing.static_delay_fs,
            self.timing.sync_jitter_fs,
            self.source_a.bsm_arm_coherence_fs(),
            self.source_b.bsm_arm_coherence_fs(),
        )
    }

    /// The BSM model the run samples from.
    pub fn bsm_model(&self) -> Result<BsmModel<T>> {
        BsmModel::new(self.v_mode()?, self.detection_efficiency)
    }
}

/// Coincidence counts of one run: four-fold counts per (BSM signature,
/// setting pair, outcome pair) and the per-setting two-fold counts that
/// normalize them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CountsTable {
    pub n_pulses: u64,
    /// Index order: [signature (0 = psi-, 1 = psi+)][setting pair
    /// (a1b1, a1b2, a2b1, a2b2)][outcome pair (++, +-, -+, --)].
    pub fourfolds: [[[u64; 4]; 4]; 2],
    /// Windows with an arm-1 click coinciding with any BSM click, per
    /// setting pair.
    pub twofolds_arm1: [u64; 4],
    /// Same for arm 4.
    pub twofolds_arm4: [u64; 4],
}

impl CountsTable {
    /// Component-wise sum; partitioned runs merge associatively and
    /// commutatively.
    pub fn merge(&mut self, other: &CountsTable) {
        self.n_pulses += other.n_pulses;
        for s in 0..2 {
            for k in 0..4 {
                for o in 0..4 {
                    self.fourfolds[s][k][o] += other.fourfolds[s][k][o];
                }
            }
        }
        for k in 0..4 {
            self.twofolds_arm1[k] += other.twofolds_arm1[k];
            self.twofolds_arm4[k] += other.twofolds_arm4[k];
        }
    }

    pub fn fourfolds_for(&self, signature: BsmSignature) -> Option<&[[u64; 4]; 4]> {
        signature.index().map(|i| &self.fourfolds[i])
    }

    pub fn total_fourfolds(&self, signature: BsmSignature) -> u64 {
        self.fourfolds_for(signature)
            .map(|per_setting| per_setting.iter().flatten().sum())
            .unwrap_or(0)
    }

    /// Correlation estimates per setting pair for one signature.
    pub fn estimates<T: Scalar>(
        &self,
        signature: BsmSignature,
    ) -> Result<[CorrelationEstimate<T>; 4]> {
        let table = self
            .fourfolds_for(signature)
            .ok_or(Error::NoConditionalState)?;
        let mut out = [CorrelationEstimate::exact(T::zero()); 4];
        for (k, counts) in table.iter().enumerate() {
            out[k] = CorrelationEstimate::from_counts(*counts)?;
        }
        Ok(out)
    }

    /// CHSH evaluation for the variant matching a BSM signature.
    pub fn chsh<T: Scalar>(&self, variant: ChshVariant) -> Result<ChshResult<T>> {
        let signature = match variant {
            ChshVariant::ForPsiMinus => BsmSignature::PsiMinus,
            ChshVariant::ForPsiPlus => BsmSignature::PsiPlus,
        };
        Ok(chsh_s(variant, self.estimates(signature)?))
    }
}

/// One entry of the per-setting joint outcome table for pulses where both
/// sources emitted.
#[derive(Debug, Clone, Copy)]
struct BothEntry {
    pattern: ClickPattern,
    o1: Outcome,
    o4: Outcome,
}

/// One entry for single-emission pulses: the surviving analyzer outcome
/// and which BSM detector the lone interferometer photon reaches.
#[derive(Debug, Clone, Copy)]
struct SingleEntry {
    outcome: Outcome,
    bsm_bit: u8,
}

struct Categorical<E> {
    cumulative: Vec<f64>,
    entries: Vec<E>,
}

impl<E: Copy> Categorical<E> {
    fn new(items: Vec<(f64, E)>) -> Self {
        let mut cumulative = Vec::with_capacity(items.len());
        let mut entries = Vec::with_capacity(items.len());
        let mut acc = 0.0;
        for (p, e) in items {
            acc += p.max(0.0);
            cumulative.push(acc);
            entries.push(e);
        }
        Self { cumulative, entries }
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    fn sample(&self, u: f64) -> E {
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.entries.len() - 1);
        self.entries[idx]
    }
}

fn projector_pair<T: Scalar>(angle: PolarizerSetting<T>) -> [nalgebra::DMatrix<num_complex::Complex<T>>; 2] {
    [angle.projector(Outcome::Plus), angle.projector(Outcome::Minus)]
}

fn basis_projector_2d<T: Scalar>(pol: usize) -> nalgebra::DMatrix<num_complex::Complex<T>> {
    let zero = num_complex::Complex::new(T::zero(), T::zero());
    let one = num_complex::Complex::new(T::one(), T::zero());
    let mut m = nalgebra::DMatrix::from_element(2, 2, zero);
    m[(pol, pol)] = one;
    m
}

/// Exact joint outcome distribution over (click pattern, arm outcomes) for
/// both-emission pulses at one setting pair.
fn both_emission_table<T: Scalar>(
    joint: &DensityMatrix<T>,
    povm: &[(ClickPattern, nalgebra::DMatrix<num_complex::Complex<T>>)],
    a: PolarizerSetting<T>,
    b: PolarizerSetting<T>,
) -> Categorical<BothEntry> {
    let proj1 = projector_pair(a);
    let proj4 = projector_pair(b);
    let mut items = Vec::with_capacity(povm.len() * 4);
    for (pattern, element) in povm {
        for o1 in Outcome::BOTH {
            for o4 in Outcome::BOTH {
                let op = proj1[o1.index()]
                    .kronecker(element)
                    .kronecker(&proj4[o4.index()]);
                let p = joint.expectation(&op).to_f64_lossy();
                items.push((
                    p,
                    BothEntry {
                        pattern: *pattern,
                        o1,
                        o4,
                    },
                ));
            }
        }
    }
    let table = Categorical::new(items);
    debug_assert!((table.total() - 1.0).abs() < 1e-9, "POVM incomplete: {}", table.total());
    table
}

/// Joint distribution over (analyzer outcome, BSM detector) for pulses
/// where only one source emitted; the lone BSM photon takes either
/// splitter port with probability 1/2.
fn single_emission_table<T: Scalar>(
    rho: &DensityMatrix<T>,
    analyzer: PolarizerSetting<T>,
    analyzer_on_first_qubit: bool,
) -> Categorical<SingleEntry> {
    let proj = projector_pair(analyzer);
    let mut items = Vec::with_capacity(8);
    for outcome in Outcome::BOTH {
        for pol in 0..2usize {
            let op = if analyzer_on_first_qubit {
                proj[outcome.index()].kronecker(&basis_projector_2d(pol))
            } else {
                basis_projector_2d(pol).kronecker(&proj[outcome.index()])
            };
            let p = rho.expectation(&op).to_f64_lossy();
            for port in 0..2u8 {
                items.push((
                    p * 0.5,
                    SingleEntry {
                        outcome,
                        bsm_bit: port * 2 + pol as u8,
                    },
                ));
            }
        }
    }
    let table = Categorical::new(items);
    debug_assert!((table.total() - 1.0).abs() < 1e-9);
    table
}

/// Detector thinning and dark counts: photons at each detector survive
/// independently with the configured efficiency, then every detector may
/// additionally fire from a dark count.
fn resolve_clicks<R: Rng + ?Sized>(
    arrivals: &[u8; N_DETECTORS],
    eta: f64,
    dark: f64,
    rng: &mut R,
) -> u8 {
    let mut clicks = 0u8;
    for det in 0..N_DETECTORS {
        let mut fired = false;
        for _ in 0..arrivals[det] {
            if rng.random::<f64>() < eta {
                fired = true;
                break;
            }
        }
        if !fired && dark > 0.0 && rng.random::<f64>() < dark {
            fired = true;
        }
        if fired {
            clicks |= 1 << det;
        }
    }
    clicks
}

fn place_pattern(pattern: &ClickPattern, arrivals: &mut [u8; N_DETECTORS]) {
    if pattern.bunched {
        let det = pattern.mask.trailing_zeros() as usize;
        arrivals[det] = 2;
    } else {
        let mut mask = pattern.mask;
        while mask != 0 {
            let det = mask.trailing_zeros() as usize;
            arrivals[det] += 1;
            mask &= mask - 1;
        }
    }
}

struct RunTables {
    both: [Categorical<BothEntry>; 4],
    only_a: [Categorical<SingleEntry>; 4],
    only_b: [Categorical<SingleEntry>; 4],
}

fn build_tables<T: Scalar>(config: &RunConfig<T>) -> Result<RunTables> {
    let rho12 = emit_state(&config.source_a)?;
    let rho34 = emit_state(&config.source_b)?;
    let joint = rho12.tensor(&rho34)?;
    let povm = pattern_povm(config.v_mode()?);
    let pairs = config.settings.pairs();
    let both = pairs.map(|(a, b)| both_emission_table(&joint, &povm, a, b));
    let only_a = pairs.map(|(a, _)| single_emission_table(&rho12, a, true));
    let only_b = pairs.map(|(_, b)| single_emission_table(&rho34, b, false));
    Ok(RunTables { both, only_a, only_b })
}

fn run_pulses<T: Scalar>(
    config: &RunConfig<T>,
    tables: &RunTables,
    rng: &mut ChaCha12Rng,
    n_pulses: u64,
    first_pulse: u64,
) -> CountsTable {
    let p_a = config.source_a.pair_probability.to_f64_lossy();
    let p_b = config.source_b.pair_probability.to_f64_lossy();
    let eta = config.detection_efficiency.to_f64_lossy();
    let dark = config.dark_count_prob.to_f64_lossy();

    let mut counts = CountsTable {
        n_pulses,
        ..Default::default()
    };

    for pulse in first_pulse..first_pulse + n_pulses {
        let setting = (pulse % 4) as usize;
        let emit_a = rng.random::<f64>() < p_a;
        let emit_b = rng.random::<f64>() < p_b;

        let mut arrivals = [0u8; N_DETECTORS];
        match (emit_a, emit_b) {
            (true, true) => {
                let entry = tables.both[setting].sample(rng.random::<f64>());
                place_pattern(&entry.pattern, &mut arrivals);
                arrivals[(BIT_D1_PLUS as usize) + entry.o1.index()] += 1;
                arrivals[(BIT_D4_PLUS as usize) + entry.o4.index()] += 1;
            }
            (true, false) => {
                let entry = tables.only_a[setting].sample(rng.random::<f64>());
                arrivals[entry.bsm_bit as usize] += 1;
                arrivals[(BIT_D1_PLUS as usize) + entry.outcome.index()] += 1;
            }
            (false, true) => {
                let entry = tables.only_b[setting].sample(rng.random::<f64>());
                arrivals[entry.bsm_bit as usize] += 1;
                arrivals[(BIT_D4_PLUS as usize) + entry.outcome.index()] += 1;
            }
            (false, false) => {}
        }

        if !emit_a && !emit_b && dark == 0.0 {
            continue;
        }
        let clicks = resolve_clicks(&arrivals, eta, dark, rng);
        if clicks == 0 {
            continue;
        }

        let bsm_mask = clicks & 0b1111;
        let d1p = clicks & (1 << BIT_D1_PLUS) != 0;
        let d1m = clicks & (1 << BIT_D1_MINUS) != 0;
        let d4p = clicks & (1 << BIT_D4_PLUS) != 0;
        let d4m = clicks & (1 << BIT_D4_MINUS) != 0;

        if bsm_mask != 0 {
            if d1p || d1m {
                counts.twofolds_arm1[setting] += 1;
            }
            if d4p || d4m {
                counts.twofolds_arm4[setting] += 1;
            }
        }

        if let Some(sig) = signature_from_mask(bsm_mask).index() {
            if (d1p ^ d1m) && (d4p ^ d4m) {
                let o1 = usize::from(d1m);
                let o4 = usize::from(d4m);
                counts.fourfolds[sig][setting][o1 * 2 + o4] += 1;
            }
        }
    }
    counts
}

/// Simulates the full pulse train of `config`; deterministic in the seed.
pub fn simulate_run<T: Scalar>(config: &RunConfig<T>) -> Result<CountsTable> {
    config.validate()?;
    let tables = build_tables(config)?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    Ok(run_pulses(config, &tables, &mut rng, config.n_pulses, 0))
}

/// Runs the pulse train in `n_parts` contiguous partitions, each on its own
/// deterministic sub-stream of the master seed, and merges the tables. The
/// partitioning scheme (not the single-stream order) defines the result.
pub fn simulate_run_partitioned<T: Scalar>(
    config: &RunConfig<T>,
    n_parts: u64,
) -> Result<CountsTable> {
    config.validate()?;
    if n_parts == 0 {
        return Err(Error::InvalidConfig("n_parts must be positive".into()));
    }
    let tables = build_tables(config)?;
    let mut merged = CountsTable::default();
    let chunk = config.n_pulses / n_parts;
    let remainder = config.n_pulses % n_parts;
    let mut start = 0u64;
    for part in 0..n_parts {
        let len = chunk + u64::from(part < remainder);
        if len == 0 {
            continue;
        }
        let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(part);
        let counts = run_pulses(config, &tables, &mut rng, len, start);
        merged.merge(&counts);
        start += len;
    }
    Ok(merged)
}

/// Result of a HOM delay scan: counts per delay and the fitted dip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomScanResult<T: Scalar> {
    pub delays_fs: Vec<T>,
    pub fourfolds: Vec<u64>,
    pub n_pulses_per_point: u64,
    pub fit: GaussianDipFit<T>,
    pub visibility: T,
    pub visibility_err: T,
}

/// HOM outcome classes behind the splitter: both photons to port 1, both
/// to port 2, or one to each (the coincidence class).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BsOutcome {
    BothPort1,
    BothPort2,
    Coincidence,
}

#[derive(Debug, Clone, Copy)]
struct HomBothEntry {
    pass1: bool,
    pass4: bool,
    bs: BsOutcome,
}

#[derive(Debug, Clone, Copy)]
struct HomSingleEntry {
    pass: bool,
    port1: bool,
}

/// The coincidence measurement of the HOM configuration: detectors sit
/// directly behind the fiber splitter and count without polarization
/// resolution, while the heralding arms carry parallel polarizers. The
/// three port classes partition the click-pattern POVM by output port.
fn hom_both_table<T: Scalar>(
    joint: &DensityMatrix<T>,
    v: ModeOverlap<T>,
    a: PolarizerSetting<T>,
    b: PolarizerSetting<T>,
) -> Categorical<HomBothEntry> {
    let povm = pattern_povm(v);
    let dim = 4;
    let zero = num_complex::Complex::new(T::zero(), T::zero());
    let mut class_ops = [
        nalgebra::DMatrix::from_element(dim, dim, zero),
        nalgebra::DMatrix::from_element(dim, dim, zero),
        nalgebra::DMatrix::from_element(dim, dim, zero),
    ];
    for (pattern, element) in &povm {
        let port1 = pattern.mask & 0b0011 != 0;
        let port2 = pattern.mask & 0b1100 != 0;
        let class = match (port1, port2) {
            (true, true) => 2,
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => unreachable!("empty click pattern"),
        };
        class_ops[class] += element;
    }
    let classes = [BsOutcome::BothPort1, BsOutcome::BothPort2, BsOutcome::Coincidence];

    let proj1 = projector_pair(a);
    let proj4 = projector_pair(b);
    let mut items = Vec::with_capacity(12);
    for o1 in Outcome::BOTH {
        for o4 in Outcome::BOTH {
            for (class, op23) in classes.iter().zip(&class_ops) {
                let op = proj1[o1.index()].kronecker(op23).kronecker(&proj4[o4.index()]);
                let p = joint.expectation(&op).to_f64_lossy();
                items.push((
                    p,
                    HomBothEntry {
                        pass1: o1 == Outcome::Plus,
                        pass4: o4 == Outcome::Plus,
                        bs: *class,
                    },
                ));
            }
        }
    }
    let table = Categorical::new(items);
    debug_assert!((table.total() - 1.0).abs() < 1e-9);
    table
}

fn hom_single_table<T: Scalar>(
    rho: &DensityMatrix<T>,
    analyzer: PolarizerSetting<T>,
    analyzer_on_first_qubit: bool,
) -> Categorical<HomSingleEntry> {
    let proj = projector_pair(analyzer);
    let eye = nalgebra::DMatrix::from_diagonal_element(
        2,
        2,
        num_complex::Complex::new(T::one(), T::zero()),
    );
    let mut items = Vec::with_capacity(4);
    for outcome in Outcome::BOTH {
        let op = if analyzer_on_first_qubit {
            proj[outcome.index()].kronecker(&eye)
        } else {
            eye.kronecker(&proj[outcome.index()])
        };
        let p = rho.expectation(&op).to_f64_lossy();
        for port1 in [true, false] {
            items.push((
                p * 0.5,
                HomSingleEntry {
                    pass: outcome == Outcome::Plus,
                    port1,
                },
            ));
        }
    }
    Categorical::new(items)
}

/// Four-fold counts at one scan delay. HOM detectors: bit 0 = splitter
/// port 1, bit 1 = splitter port 2, bit 2 = arm 1 (behind its polarizer),
/// bit 3 = arm 4.
fn hom_point<T: Scalar>(
    config: &RunConfig<T>,
    delay_fs: T,
    stream: u64,
) -> Result<u64> {
    let v = mode_overlap(
        delay_fs,
        config.timing.sync_jitter_fs,
        config.source_a.bsm_arm_coherence_fs(),
        config.source_b.bsm_arm_coherence_fs(),
    )?;
    let rho12 = emit_state(&config.source_a)?;
    let rho34 = emit_state(&config.source_b)?;
    let joint = rho12.tensor(&rho34)?;
    let analyzer = PolarizerSetting::new(T::from_f64_lossy(HOM_ANALYZER_DEG));
    let both = hom_both_table(&joint, v, analyzer, analyzer);
    let only_a = hom_single_table(&rho12, analyzer, true);
    let only_b = hom_single_table(&rho34, analyzer, false);

    let p_a = config.source_a.pair_probability.to_f64_lossy();
    let p_b = config.source_b.pair_probability.to_f64_lossy();
    let eta = config.detection_efficiency.to_f64_lossy();
    let dark = config.dark_count_prob.to_f64_lossy();

    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(stream);

    let mut fourfolds = 0u64;
    for _ in 0..config.n_pulses {
        let emit_a = rng.random::<f64>() < p_a;
        let emit_b = rng.random::<f64>() < p_b;
        let mut arrivals = [0u8; N_DETECTORS];
        match (emit_a, emit_b) {
            (true, true) => {
                let e = both.sample(rng.random::<f64>());
                match e.bs {
                    BsOutcome::BothPort1 => arrivals[0] = 2,
                    BsOutcome::BothPort2 => arrivals[1] = 2,
                    BsOutcome::Coincidence => {
                        arrivals[0] = 1;
                        arrivals[1] = 1;
                    }
                }
                if e.pass1 {
                    arrivals[2] += 1;
                }
                if e.pass4 {
                    arrivals[3] += 1;
                }
            }
            (true, false) => {
                let e = only_a.sample(rng.random::<f64>());
                arrivals[usize::from(!e.port1)] += 1;
                if e.pass {
                    arrivals[2] += 1;
                }
            }
            (false, true) => {
                let e = only_b.sample(rng.random::<f64>());
                arrivals[usize::from(!e.port1)] += 1;
                if e.pass {
                    arrivals[3] += 1;
                }
            }
            (false, false) => {
                if dark == 0.0 {
                    continue;
                }
            }
        }
        let clicks = resolve_clicks(&arrivals, eta, dark, &mut rng);
        if clicks & 0b1111 == 0b1111 {
            fourfolds += 1;
        }
    }
    Ok(fourfolds)
}

/// Scans the relative arrival delay, counting four-fold coincidences with
/// the BSM arms operated as a plain beam-splitter coincidence measurement,
/// and fits the Gaussian dip. `config.n_pulses` applies per delay point;
/// each point runs on its own deterministic RNG sub-stream.
pub fn hom_scan<T: Scalar>(config: &RunConfig<T>, delays_fs: &[T]) -> Result<HomScanResult<T>> {
    config.validate()?;
    if delays_fs.len() < 5 {
        return Err(Error::InvalidConfig(format!(
            "delay grid needs at least 5 points, got {}",
            delays_fs.len()
        )));
    }
    let span = delays_fs
        .iter()
        .fold(delays_fs[0], |a, &b| a.max(b))
        - delays_fs.iter().fold(delays_fs[0], |a, &b| a.min(b));
    let tau_max = self::max_scalar(
        config.source_a.bsm_arm_coherence_fs(),
        config.source_b.bsm_arm_coherence_fs(),
    );
    if span < tau_max * T::from_f64_lossy(2.0) {
        return Err(Error::InvalidConfig(format!(
            "delay grid spans {} fs, below two coherence times ({} fs)",
            span.to_f64_lossy(),
            (tau_max * T::from_f64_lossy(2.0)).to_f64_lossy()
        )));
    }

    let mut fourfolds = Vec::with_capacity(delays_fs.len());
    for (i, &delay) in delays_fs.iter().enumerate() {
        fourfolds.push(hom_point(config, delay, 1 + i as u64)?);
    }

    let x: Vec<T> = delays_fs.to_vec();
    let y: Vec<T> = fourfolds
        .iter()
        .map(|&c| T::from_u64(c).expect("count fits scalar"))
        .collect();
    let fit = fit_gaussian(&x, &y)?;
    Ok(HomScanResult {
        delays_fs: x,
        fourfolds,
        n_pulses_per_point: config.n_pulses,
        visibility: fit.visibility,
        visibility_err: fit.visibility_err,
        fit,
    })
}

fn max_scalar<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

/// Leading-order analytic rate of accidental four-fold coincidences per
/// window for the designated signature pattern (D1+, D4+, Q1H, Q2V) at the
/// first setting pair, treating all click sources as independent: each
/// detector clicks with probability 1 - (1 - dark)(1 - eta p_arrival).
/// Supports the unsubtracted-background comparison in simulated runs.
pub fn accidental_rate<T: Scalar>(config: &RunConfig<T>) -> Result<T> {
    config.validate()?;
    let rho12 = emit_state(&config.source_a)?;
    let rho34 = emit_state(&config.source_b)?;
    let (a, b) = (config.settings.pairs()[0].0, config.settings.pairs()[0].1);
    let p_a = config.source_a.pair_probability;
    let p_b = config.source_b.pair_probability;
    let eta = config.detection_efficiency;
    let dark = config.dark_count_prob;
    let half = T::from_f64_lossy(0.5);

    // Marginal photon arrival probabilities per window.
    let plus1 = rho12.expectation(&a.projector(Outcome::Plus).kronecker(
        &nalgebra::DMatrix::from_diagonal_element(
            2,
            2,
            num_complex::Complex::new(T::one(), T::zero()),
        ),
    ));
    let plus4 = rho34.expectation(
        &nalgebra::DMatrix::from_diagonal_element(
            2,
            2,
            num_complex::Complex::new(T::one(), T::zero()),
        )
        .kronecker(&b.projector(Outcome::Plus)),
    );
    let pol_h_2 = rho12.partial_trace(&[1])?.matrix()[(0, 0)].re;
    let pol_v_3 = rho34.partial_trace(&[0])?.matrix()[(1, 1)].re;

    let arrive_d1 = p_a * plus1;
    let arrive_d4 = p_b * plus4;
    let arrive_q1h = p_a * pol_h_2 * half; // photon 2, H, port 1
    let arrive_q2v = p_b * pol_v_3 * half; // photon 3, V, port 2

    let click = |arrive: T| T::one() - (T::one() - dark) * (T::one() - eta * arrive);
    Ok(click(arrive_d1) * click(arrive_d4) * click(arrive_q1h) * click(arrive_q2v))
}
