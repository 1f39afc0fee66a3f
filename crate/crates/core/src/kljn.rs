//! Monte Carlo model of the Kirchhoff-Law-Johnson-Noise bit exchange.
//!
//! In every bit period Alice and Bob each connect either their low or high
//! resistor to the shared wire, with a noise generator of variance
//! `4 k T_eff B R` in series. Both ends then estimate the mean-square channel
//! voltage and current over a window of samples. Matching selections (LL, HH)
//! give the extreme levels and are discarded; mixed selections give the
//! intermediate level, from which each side infers the other's choice and a
//! shared bit. An eavesdropper seeing only the level cannot tell LH from HL.
//!
//! Against active attacks both ends publish their quantized instantaneous
//! voltage and current samples over an authenticated channel and compare
//! them; any mismatch aborts the exchange.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

const ALICE_STREAM: u64 = 1;
const BOB_STREAM: u64 = 2;
const EVE_STREAM: u64 = 3;

/// Full-scale range of the expected sample words, in standard deviations
/// of the largest channel level.
const FULL_SCALE_SIGMAS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KljnSessionConfig {
    /// Low resistance, ohms.
    pub r_low: f64,
    /// High resistance, ohms.
    pub r_high: f64,
    /// Effective noise temperature, kelvin.
    pub t_eff: f64,
    /// Noise bandwidth, hertz.
    pub bandwidth: f64,
    pub samples_per_period: usize,
    /// Relative half-width of each level's acceptance band.
    pub level_tolerance: f64,
    /// Bits per expected voltage or current word.
    pub data_word_bits: u32,
    /// Largest word difference, in LSBs, still treated as agreement.
    pub comparison_tolerance: u64,
    pub seed: u64,
}

impl Default for KljnSessionConfig {
    fn default() -> Self {
        KljnSessionConfig {
            r_low: 1.0e3,
            r_high: 1.0e4,
            t_eff: 1.0e9,
            bandwidth: 1.0e4,
            samples_per_period: 2000,
            level_tolerance: 0.2,
            data_word_bits: 16,
            comparison_tolerance: 1,
            seed: 0,
        }
    }
}

impl KljnSessionConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(msg));
        if !(self.r_low > 0.0 && self.r_low < self.r_high && self.r_high.is_finite()) {
            return fail(format!(
                "resistances must satisfy 0 < r_low < r_high, got {} and {}",
                self.r_low, self.r_high
            ));
        }
        if !(self.t_eff > 0.0 && self.t_eff.is_finite()) {
            return fail(format!("t_eff must be positive, got {}", self.t_eff));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return fail(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            ));
        }
        if self.samples_per_period == 0 {
            return fail("samples_per_period must be positive".into());
        }
        if !(self.level_tolerance > 0.0 && self.level_tolerance < 0.5) {
            return fail(format!(
                "level_tolerance must lie in (0, 0.5), got {}",
                self.level_tolerance
            ));
        }
        if !(2..=32).contains(&self.data_word_bits) {
            return fail(format!(
                "data_word_bits must lie in 2..=32, got {}",
                self.data_word_bits
            ));
        }
        Ok(())
    }

    fn resistance(&self, choice: Resistor) -> f64 {
        match choice {
            Resistor::Low => self.r_low,
            Resistor::High => self.r_high,
        }
    }

    /// Noise voltage spectral scale `4 k T_eff B`, V^2 per ohm.
    fn noise_scale(&self) -> f64 {
        4.0 * BOLTZMANN * self.t_eff * self.bandwidth
    }

    fn noise_sigma(&self, r: f64) -> f64 {
        (self.noise_scale() * r).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resistor {
    Low,
    High,
}

impl Resistor {
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Resistor::High
        } else {
            Resistor::Low
        }
    }

    fn opposite(self) -> Self {
        match self {
            Resistor::Low => Resistor::High,
            Resistor::High => Resistor::Low,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelClass {
    LL,
    HH,
    Intermediate,
    Undecided,
}

/// Expected mean-square values for the three selection classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTriple {
    pub low_low: f64,
    pub mixed: f64,
    pub high_high: f64,
}

impl LevelTriple {
    fn is_strictly_monotone(&self) -> bool {
        let all_positive = [self.low_low, self.mixed, self.high_high]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        let up = self.low_low < self.mixed && self.mixed < self.high_high;
        let down = self.low_low > self.mixed && self.mixed > self.high_high;
        all_positive && (up || down)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelLevels {
    /// `4 k T B R_par`, increasing from LL to HH.
    pub voltage: LevelTriple,
    /// `4 k T B / R_loop`, decreasing from LL to HH.
    pub current: LevelTriple,
}

pub fn theoretical_levels(cfg: &KljnSessionConfig) -> ChannelLevels {
    let s = cfg.noise_scale();
    let (l, h) = (cfg.r_low, cfg.r_high);
    ChannelLevels {
        voltage: LevelTriple {
            low_low: s * l / 2.0,
            mixed: s * l * h / (l + h),
            high_high: s * h / 2.0,
        },
        current: LevelTriple {
            low_low: s / (2.0 * l),
            mixed: s / (l + h),
            high_high: s / (2.0 * h),
        },
    }
}

/// Assigns a measured mean-square value to the level whose relative
/// distance `|measured - level| / level` is within `tol`. Undecided when no
/// level or more than one level qualifies.
pub fn classify_level(measured: f64, levels: &LevelTriple, tol: f64) -> Result<LevelClass> {
    if !levels.is_strictly_monotone() {
        return Err(Error::Domain(format!(
            "levels must be positive and strictly ordered, got {levels:?}"
        )));
    }
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::Domain(format!(
            "level tolerance must lie in (0, 0.5), got {tol}"
        )));
    }
    let within = |level: f64| ((measured - level) / level).abs() <= tol;
    let hits: Vec<LevelClass> = [
        (levels.low_low, LevelClass::LL),
        (levels.mixed, LevelClass::Intermediate),
        (levels.high_high, LevelClass::HH),
    ]
    .into_iter()
    .filter(|(level, _)| within(*level))
    .map(|(_, class)| class)
    .collect();
    Ok(match hits.as_slice() {
        [one] => *one,
        _ => LevelClass::Undecided,
    })
}

/// Combined decision from both estimators; they must agree.
fn classify_channel(
    ms_voltage: f64,
    ms_current: f64,
    levels: &ChannelLevels,
    tol: f64,
) -> LevelClass {
    let v = classify_level(ms_voltage, &levels.voltage, tol).expect("levels validated");
    let i = classify_level(ms_current, &levels.current, tol).expect("levels validated");
    if v == i {
        v
    } else {
        LevelClass::Undecided
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Alice,
    Bob,
}

/// Bit one party derives from its own choice and the observed level. The
/// shared bit is 1 iff Alice, the party with the smaller sensor id, chose
/// the high resistor.
pub fn derive_bit(role: Role, own: Resistor, class: LevelClass) -> Option<bool> {
    if class != LevelClass::Intermediate {
        return None;
    }
    let alice = match role {
        Role::Alice => own,
        Role::Bob => own.opposite(),
    };
    Some(alice == Resistor::High)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackModel {
    /// Eve cuts the wire and terminates each side with her own randomly
    /// chosen resistor and independent noise generator.
    WireSubstitution,
    /// Eve injects a Gaussian current into the wire. `relative_amplitude`
    /// is its standard deviation as a fraction of the RMS channel current at
    /// the LL level.
    CurrentInjection { relative_amplitude: f64 },
}

/// An attack model active from `start_period` (zero-based) onward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attacker {
    pub model: AttackModel,
    pub start_period: u64,
}

/// Attack model bound to Eve's own randomness for one session.
#[derive(Clone, Debug)]
pub struct ActiveAttacker {
    pub model: AttackModel,
    rng: ChaCha8Rng,
}

impl ActiveAttacker {
    pub fn new(model: AttackModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(EVE_STREAM);
        ActiveAttacker { model, rng }
    }
}

/// One quantized instantaneous sample as expected on the public channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleWord {
    pub voltage: i64,
    pub current: i64,
}

/// Published samples, one inner vector per bit period.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementTrace {
    pub periods: Vec<Vec<SampleWord>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AttackVerdict {
    Clean,
    Mismatch { periods: Vec<usize> },
}

impl AttackVerdict {
    pub fn is_clean(&self) -> bool {
        matches!(self, AttackVerdict::Clean)
    }
}

/// Compares the two expected traces period by period. A period mismatches
/// when any voltage or current word differs by more than `tol` LSBs.
pub fn detect_active_attack(
    alice: &MeasurementTrace,
    bob: &MeasurementTrace,
    tol: u64,
) -> Result<AttackVerdict> {
    if alice.periods.len() != bob.periods.len() {
        return Err(Error::TraceLengthMismatch(format!(
            "{} periods vs {}",
            alice.periods.len(),
            bob.periods.len()
        )));
    }
    let mut mismatched = Vec::new();
    for (n, (a, b)) in alice.periods.iter().zip(&bob.periods).enumerate() {
        if a.len() != b.len() {
            return Err(Error::TraceLengthMismatch(format!(
                "period {n}: {} samples vs {}",
                a.len(),
                b.len()
            )));
        }
        let differs = a.iter().zip(b).any(|(x, y)| {
            x.voltage.abs_diff(y.voltage) > tol || x.current.abs_diff(y.current) > tol
        });
        if differs {
            mismatched.push(n);
        }
    }
    Ok(if mismatched.is_empty() {
        AttackVerdict::Clean
    } else {
        AttackVerdict::Mismatch {
            periods: mismatched,
        }
    })
}

/// Secure bits spent authenticating `m`-bit public data words.
pub fn auth_bit_cost(m: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "word length must be at least 2, got {m}"
        )));
    }
    Ok((m as f64).log2())
}

/// What each end measured in one period.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodMeasurement {
    pub alice_choice: Resistor,
    pub bob_choice: Resistor,
    /// `(ms_voltage, ms_current)` at Alice's end.
    pub alice_ms: (f64, f64),
    pub bob_ms: (f64, f64),
    pub alice_words: Vec<SampleWord>,
    pub bob_words: Vec<SampleWord>,
}

struct Quantizer {
    max_code: f64,
    v_scale: f64,
    i_scale: f64,
}

impl Quantizer {
    fn new(cfg: &KljnSessionConfig, levels: &ChannelLevels) -> Self {
        Quantizer {
            max_code: ((1u64 << (cfg.data_word_bits - 1)) - 1) as f64,
            v_scale: FULL_SCALE_SIGMAS * levels.voltage.high_high.sqrt(),
            i_scale: FULL_SCALE_SIGMAS * levels.current.low_low.sqrt(),
        }
    }

    fn code(&self, x: f64, full_scale: f64) -> i64 {
        (x / full_scale * self.max_code)
            .round()
            .clamp(-self.max_code, self.max_code) as i64
    }

    fn word(&self, voltage: f64, current: f64) -> SampleWord {
        SampleWord {
            voltage: self.code(voltage, self.v_scale),
            current: self.code(current, self.i_scale),
        }
    }
}

#[derive(Default)]
struct Accumulator {
    v2: f64,
    i2: f64,
    words: Vec<SampleWord>,
}

impl Accumulator {
    fn push(&mut self, q: &Quantizer, voltage: f64, current: f64) {
        self.v2 += voltage * voltage;
        self.i2 += current * current;
        self.words.push(q.word(voltage, current));
    }

    fn mean_squares(&self, n: usize) -> (f64, f64) {
        (self.v2 / n as f64, self.i2 / n as f64)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// Synthesizes one period's channel for fixed resistor choices.
///
/// Without an attacker both ends see the same node voltage
/// `U = (U_A R_B + U_B R_A)/(R_A + R_B)` and loop current
/// `I = (U_A - U_B)/(R_A + R_B)`; each party's noise is drawn from its own
/// generator.
pub fn measure_period<R: Rng + ?Sized>(
    cfg: &KljnSessionConfig,
    alice_choice: Resistor,
    bob_choice: Resistor,
    alice_rng: &mut R,
    bob_rng: &mut R,
    attacker: Option<&mut ActiveAttacker>,
) -> PeriodMeasurement {
    let levels = theoretical_levels(cfg);
    let q = Quantizer::new(cfg, &levels);
    let n = cfg.samples_per_period;
    let (ra, rb) = (cfg.resistance(alice_choice), cfg.resistance(bob_choice));
    let (sa, sb) = (cfg.noise_sigma(ra), cfg.noise_sigma(rb));
    let mut alice = Accumulator {
        words: Vec::with_capacity(n),
        ..Default::default()
    };
    let mut bob = Accumulator {
        words: Vec::with_capacity(n),
        ..Default::default()
    };

    match attacker {
        None => {
            for _ in 0..n {
                let ua = gaussian(alice_rng, sa);
                let ub = gaussian(bob_rng, sb);
                let u = (ua * rb + ub * ra) / (ra + rb);
                let i = (ua - ub) / (ra + rb);
                alice.push(&q, u, i);
                bob.push(&q, u, i);
            }
        }
        Some(eve) => match eve.model {
            AttackModel::WireSubstitution => {
                let e1 = cfg.resistance(Resistor::draw(&mut eve.rng));
                let e2 = cfg.resistance(Resistor::draw(&mut eve.rng));
                let (s1, s2) = (cfg.noise_sigma(e1), cfg.noise_sigma(e2));
                for _ in 0..n {
                    let ua = gaussian(alice_rng, sa);
                    let ub = gaussian(bob_rng, sb);
                    let ue1 = gaussian(&mut eve.rng, s1);
                    let ue2 = gaussian(&mut eve.rng, s2);
                    alice.push(&q, (ua * e1 + ue1 * ra) / (ra + e1), (ua - ue1) / (ra + e1));
                    bob.push(&q, (ue2 * rb + ub * e2) / (e2 + rb), (ue2 - ub) / (e2 + rb));
                }
            }
            AttackModel::CurrentInjection { relative_amplitude } => {
                let si = relative_amplitude * levels.current.low_low.sqrt();
                let g = 1.0 / ra + 1.0 / rb;
                for _ in 0..n {
                    let ua = gaussian(alice_rng, sa);
                    let ub = gaussian(bob_rng, sb);
                    let ie = gaussian(&mut eve.rng, si);
                    let u = (ua / ra + ub / rb + ie) / g;
                    alice.push(&q, u, (ua - u) / ra);
                    bob.push(&q, u, (u - ub) / rb);
                }
            }
        },
    }

    PeriodMeasurement {
        alice_choice,
        bob_choice,
        alice_ms: alice.mean_squares(n),
        bob_ms: bob.mean_squares(n),
        alice_words: alice.words,
        bob_words: bob.words,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub alice_choice: Resistor,
    pub bob_choice: Resistor,
    /// Mean-square voltage at Alice's end, V^2.
    pub ms_voltage: f64,
    /// Mean-square current at Alice's end, A^2.
    pub ms_current: f64,
    pub level_class: LevelClass,
    /// Shared bit as derived by Alice.
    pub bit: Option<bool>,
    /// Bob's independent derivation from his own measurement.
    pub bob_bit: Option<bool>,
    pub attack_flag: bool,
}

/// Classifies a measured period and applies the public comparison.
pub fn evaluate_period(cfg: &KljnSessionConfig, m: &PeriodMeasurement) -> PeriodOutcome {
    let levels = theoretical_levels(cfg);
    let tol = cfg.level_tolerance;
    let alice_class = classify_channel(m.alice_ms.0, m.alice_ms.1, &levels, tol);
    let bob_class = classify_channel(m.bob_ms.0, m.bob_ms.1, &levels, tol);
    let trace = |words: &Vec<SampleWord>| MeasurementTrace {
        periods: vec![words.clone()],
    };
    let attack_flag = !detect_active_attack(
        &trace(&m.alice_words),
        &trace(&m.bob_words),
        cfg.comparison_tolerance,
    )
    .expect("both ends publish the same number of samples")
    .is_clean();
    let (bit, bob_bit) = if attack_flag {
        (None, None)
    } else {
        (
            derive_bit(Role::Alice, m.alice_choice, alice_class),
            derive_bit(Role::Bob, m.bob_choice, bob_class),
        )
    };
    PeriodOutcome {
        alice_choice: m.alice_choice,
        bob_choice: m.bob_choice,
        ms_voltage: m.alice_ms.0,
        ms_current: m.alice_ms.1,
        level_class: alice_class,
        bit,
        bob_bit,
        attack_flag,
    }
}

/// One bit period: each party picks a resistor with probability 1/2 from
/// its own generator, then the channel is synthesized and classified.
pub fn simulate_bit_period<R: Rng + ?Sized>(
    cfg: &KljnSessionConfig,
    alice_rng: &mut R,
    bob_rng: &mut R,
    attacker: Option<&mut ActiveAttacker>,
) -> PeriodOutcome {
    let alice_choice = Resistor::draw(alice_rng);
    let bob_choice = Resistor::draw(bob_rng);
    let m = measure_period(cfg, alice_choice, bob_choice, alice_rng, bob_rng, attacker);
    evaluate_period(cfg, &m)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelHistogram {
    #[serde(rename = "LL")]
    pub ll: u64,
    #[serde(rename = "HH")]
    pub hh: u64,
    #[serde(rename = "Intermediate")]
    pub intermediate: u64,
    #[serde(rename = "Undecided")]
    pub undecided: u64,
}

impl LevelHistogram {
    pub fn record(&mut self, class: LevelClass) {
        match class {
            LevelClass::LL => self.ll += 1,
            LevelClass::HH => self.hh += 1,
            LevelClass::Intermediate => self.intermediate += 1,
            LevelClass::Undecided => self.undecided += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.ll + self.hh + self.intermediate + self.undecided
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyExchangeResult {
    pub key_bits: Vec<bool>,
    pub periods_used: u64,
    /// LL and HH periods.
    pub discard_count: u64,
    pub undecided_count: u64,
    pub attack_detected: bool,
    /// Zero-based period in which the comparison failed.
    pub detection_period: Option<u64>,
    pub level_statistics: LevelHistogram,
}

impl KeyExchangeResult {
    /// Key bits packed MSB-first, as lowercase hex. A trailing partial byte
    /// is zero-padded.
    pub fn key_hex(&self) -> String {
        self.key_bits
            .chunks(8)
            .map(|chunk| {
                let byte = chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (n, bit)| acc | (u8::from(*bit) << (7 - n)));
                format!("{byte:02x}")
            })
            .collect()
    }
}

/// Periods allowed per requested key bit before giving up.
pub const DEFAULT_BUDGET_FACTOR: u64 = 64;

/// Runs periods until `target_bits` bits are shared, an attack is detected
/// or the default budget of `64 * target_bits` periods is spent.
pub fn run_key_exchange(
    cfg: &KljnSessionConfig,
    target_bits: usize,
    attacker: Option<Attacker>,
) -> Result<KeyExchangeResult> {
    let budget = DEFAULT_BUDGET_FACTOR.saturating_mul(target_bits as u64);
    run_key_exchange_with_budget(cfg, target_bits, attacker, budget)
}

pub fn run_key_exchange_with_budget(
    cfg: &KljnSessionConfig,
    target_bits: usize,
    attacker: Option<Attacker>,
    budget: u64,
) -> Result<KeyExchangeResult> {
    cfg.validate()?;
    if target_bits == 0 {
        return Err(Error::Domain("target_bits must be at least 1".into()));
    }
    let mut alice_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    alice_rng.set_stream(ALICE_STREAM);
    let mut bob_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    bob_rng.set_stream(BOB_STREAM);
    let mut eve = attacker.map(|a| (a.start_period, ActiveAttacker::new(a.model, cfg.seed)));

    let mut result = KeyExchangeResult::default();
    for period in 0..budget {
        let active = eve
            .as_mut()
            .filter(|(start, _)| period >= *start)
            .map(|(_, eve)| eve);
        let outcome = simulate_bit_period(cfg, &mut alice_rng, &mut bob_rng, active);
        result.periods_used += 1;
        result.level_statistics.record(outcome.level_class);
        if outcome.attack_flag {
            result.attack_detected = true;
            result.detection_period = Some(period);
            result.key_bits.clear();
            return Ok(result);
        }
        match outcome.level_class {
            LevelClass::LL | LevelClass::HH => result.discard_count += 1,
            LevelClass::Undecided => result.undecided_count += 1,
            LevelClass::Intermediate => {}
        }
        if let Some(bit) = outcome.bit {
            result.key_bits.push(bit);
            if result.key_bits.len() == target_bits {
                return Ok(result);
            }
        }
    }
    Err(Error::BudgetExhausted {
        budget,
        bits: result.key_bits.len(),
        target: target_bits,
        partial: Box::new(result),
    })
}

/// Exportable summary of one session. Key material is included only on
/// explicit request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: KljnSessionConfig,
    pub target_bits: usize,
    pub attacker: Option<Attacker>,
    pub histogram: LevelHistogram,
    pub key_length: usize,
    pub periods_used: u64,
    pub discard_count: u64,
    pub undecided_count: u64,
    pub attack_detected: bool,
    pub detection_period: Option<u64>,
    pub budget_exhausted: bool,
    pub auth_bits_per_word: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_hex: Option<String>,
}

impl SessionReport {
    pub fn new(
        cfg: &KljnSessionConfig,
        target_bits: usize,
        attacker: Option<Attacker>,
        result: &KeyExchangeResult,
        budget_exhausted: bool,
        emit_key: bool,
    ) -> Self {
        SessionReport {
            config: cfg.clone(),
            target_bits,
            attacker,
            histogram: result.level_statistics,
            key_length: result.key_bits.len(),
            periods_used: result.periods_used,
            discard_count: result.discard_count,
            undecided_count: result.undecided_count,
            attack_detected: result.attack_detected,
            detection_period: result.detection_period,
            budget_exhausted,
            auth_bits_per_word: auth_bit_cost(u64::from(cfg.data_word_bits))
                .expect("validated word length"),
            key_hex: emit_key.then(|| result.key_hex()),
        }
    }
}
