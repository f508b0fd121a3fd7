//! The bit exchange protocol: coin flips, one noisy period per bit attempt,
//! classification, discard logic, and key accumulation.
//!
//! Per period each party privately flips a fair coin and connects the high
//! or low resistor. Equal picks (LL, HH) betray themselves on the wire and
//! are discarded; differing picks land on the shared middle level, where
//! each party deduces the other's resistor from its own. The LH arrangement
//! encodes 0, HL encodes 1, so roughly half the periods yield a key bit.
//!
//! Coin flips and per-party noise draw from disjoint substream domains of
//! the one seed, which keeps the choice sequence invariant under changes to
//! samples_per_bep and makes any run reproducible from (seed, config, L).

use crate::circuit::{
    classify_level, measure_mean_square, superpose_wire, theoretical_mean_square, Choice,
    CircuitError, LevelClass, ResistorPair,
};
use crate::keycodec::{binary_to_hex, BitString, KeycodecError};
use crate::noise::{scale_to_johnson, standard_normal_series, NoiseError};
use crate::stream;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExchangeError {
    #[error("invalid exchange configuration: {0}")]
    InvalidConfig(String),
    #[error("key length {0} must be a positive multiple of four")]
    InvalidKeyLength(usize),
    #[error("needed {needed} secure bits but the {cap}-period budget produced {got}")]
    BudgetExceeded { needed: usize, got: usize, cap: u64 },
    #[error("no bit exchange periods to report on")]
    EmptyInput,
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Codec(#[from] KeycodecError),
}

/// Parameters of one bit exchange period (BEP).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BepConfig {
    pub pair: ResistorPair,
    pub temperature_k: f64,
    pub bandwidth_hz: f64,
    /// Nyquist samples measured per period; 1000 is one second at 500 Hz.
    pub samples_per_bep: usize,
    pub seed: u64,
}

impl Default for BepConfig {
    fn default() -> Self {
        Self {
            pair: ResistorPair::default(),
            temperature_k: 1e18,
            bandwidth_hz: 500.0,
            samples_per_bep: 1000,
            seed: 0,
        }
    }
}

impl BepConfig {
    pub fn validate(&self) -> Result<(), ExchangeError> {
        if self.samples_per_bep < 16 {
            return Err(ExchangeError::InvalidConfig(format!(
                "samples_per_bep {} is below the classifiable minimum of 16",
                self.samples_per_bep
            )));
        }
        if !(self.temperature_k > 0.0 && self.temperature_k.is_finite()) {
            return Err(ExchangeError::InvalidConfig(
                "temperature_k must be positive".into(),
            ));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(ExchangeError::InvalidConfig(
                "bandwidth_hz must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything observable about one period, from both sides of the wire.
#[derive(Debug, Clone, Serialize)]
pub struct BepResult {
    pub alice_choice: Choice,
    pub bob_choice: Choice,
    pub measured_ms: f64,
    pub level: LevelClass,
    /// Present only when the picks differ and the level reads Secure;
    /// 0 for LH, 1 for HL.
    pub secure_bit: Option<u8>,
    pub alice_inferred_bob: Choice,
    pub bob_inferred_alice: Choice,
}

/// What a wire-tapping listener gets: the public level and nothing else.
/// On the secure level HL and LH are statistically identical, and the other
/// two levels carry no key bit, so `learned_bit` is always absent.
#[derive(Debug, Clone, Serialize)]
pub struct EveView {
    pub level: LevelClass,
    pub learned_bit: Option<u8>,
}

/// An accumulated key plus its bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct KeyMaterial {
    pub bits: BitString,
    pub hex: String,
    pub beps_consumed: u64,
    pub discarded: u64,
    pub error_count: u64,
}

impl KeyMaterial {
    pub fn new(
        bits: BitString,
        beps_consumed: u64,
        discarded: u64,
        error_count: u64,
    ) -> Result<Self, ExchangeError> {
        let hex = binary_to_hex(&bits)?;
        Ok(Self {
            bits,
            hex,
            beps_consumed,
            discarded,
            error_count,
        })
    }
}

/// Aggregate statistics over a run of periods.
#[derive(Debug, Clone, Serialize)]
pub struct ExchangeReport {
    /// Fraction of periods that produced no key bit.
    pub discard_rate: f64,
    /// Fraction of ones among the secure bits.
    pub bit_balance: f64,
    /// Inference contradictions per secure bit.
    pub ber: f64,
    /// |mean(ms | HL) - mean(ms | LH)| over the pooled standard deviation.
    pub hl_lh_ms_gap: f64,
}

/// One row of the level table: theory next to what the run produced.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub level: LevelClass,
    pub theoretical_ms: f64,
    pub empirical_mean_ms: Option<f64>,
    pub count: u64,
}

/// Report plus the three-level table, the shape the summary file takes.
#[derive(Debug, Clone, Serialize)]
pub struct ExchangeSummary {
    pub discard_rate: f64,
    pub bit_balance: f64,
    pub ber: f64,
    pub hl_lh_ms_gap: f64,
    pub levels: Vec<LevelRow>,
}

fn coin_choices(seed: u64, bep_index: u64) -> (Choice, Choice) {
    let mut rng = stream::substream(seed, stream::DOMAIN_COIN, bep_index);
    let pick = |up: bool| if up { Choice::High } else { Choice::Low };
    let alice = pick(rng.gen::<bool>());
    let bob = pick(rng.gen::<bool>());
    (alice, bob)
}

/// A party sees its own resistor and the public level; that pins the other
/// side: LL means the other is low, HH high, and Secure means opposite.
fn infer_other(own: Choice, level: LevelClass) -> Choice {
    match level {
        LevelClass::LL => Choice::Low,
        LevelClass::HH => Choice::High,
        LevelClass::Secure => own.opposite(),
    }
}

fn run_with_choices(
    config: &BepConfig,
    bep_index: u64,
    alice: Choice,
    bob: Choice,
) -> Result<BepResult, ExchangeError> {
    config.validate()?;
    let r_a = alice.resistance(&config.pair);
    let r_b = bob.resistance(&config.pair);

    let mut rng_a = stream::substream(config.seed, stream::DOMAIN_NOISE_ALICE, bep_index);
    let series_a = standard_normal_series(&mut rng_a, config.samples_per_bep, config.bandwidth_hz)?;
    let noise_a = scale_to_johnson(series_a, r_a, config.temperature_k)?;

    let mut rng_b = stream::substream(config.seed, stream::DOMAIN_NOISE_BOB, bep_index);
    let series_b = standard_normal_series(&mut rng_b, config.samples_per_bep, config.bandwidth_hz)?;
    let noise_b = scale_to_johnson(series_b, r_b, config.temperature_k)?;

    let wire = superpose_wire(&noise_a, r_a, &noise_b, r_b)?;
    let measured_ms = measure_mean_square(&wire)?;
    let level = classify_level(
        measured_ms,
        &config.pair,
        config.temperature_k,
        config.bandwidth_hz,
    )?;

    let secure_bit = match (level, alice, bob) {
        (LevelClass::Secure, Choice::Low, Choice::High) => Some(0),
        (LevelClass::Secure, Choice::High, Choice::Low) => Some(1),
        _ => None,
    };
    Ok(BepResult {
        alice_choice: alice,
        bob_choice: bob,
        measured_ms,
        level,
        secure_bit,
        alice_inferred_bob: infer_other(alice, level),
        bob_inferred_alice: infer_other(bob, level),
    })
}

/// Runs period `bep_index` with coin-flipped choices.
pub fn run_bep(config: &BepConfig, bep_index: u64) -> Result<BepResult, ExchangeError> {
    let (alice, bob) = coin_choices(config.seed, bep_index);
    run_with_choices(config, bep_index, alice, bob)
}

/// Runs period `bep_index` with the choices pinned; noise streams are the
/// same ones the coin-flipped run would use.
pub fn run_bep_forced(
    config: &BepConfig,
    bep_index: u64,
    alice: Choice,
    bob: Choice,
) -> Result<BepResult, ExchangeError> {
    run_with_choices(config, bep_index, alice, bob)
}

fn accumulate_with(
    config: &BepConfig,
    target_bits: usize,
    start_index: u64,
    max_beps: Option<u64>,
    mut choices_for: impl FnMut(u64) -> (Choice, Choice),
) -> Result<KeyMaterial, ExchangeError> {
    if target_bits == 0 || !target_bits.is_multiple_of(4) {
        return Err(ExchangeError::InvalidKeyLength(target_bits));
    }
    let mut bits = Vec::with_capacity(target_bits);
    let mut consumed = 0u64;
    let mut discarded = 0u64;
    let mut errors = 0u64;
    let mut index = start_index;
    while bits.len() < target_bits {
        if let Some(cap) = max_beps {
            if consumed == cap {
                return Err(ExchangeError::BudgetExceeded {
                    needed: target_bits,
                    got: bits.len(),
                    cap,
                });
            }
        }
        let (alice, bob) = choices_for(index);
        let r = run_with_choices(config, index, alice, bob)?;
        consumed += 1;
        if r.alice_inferred_bob != r.bob_choice || r.bob_inferred_alice != r.alice_choice {
            errors += 1;
        }
        match r.secure_bit {
            Some(bit) => bits.push(bit == 1),
            None => discarded += 1,
        }
        index += 1;
    }
    KeyMaterial::new(BitString::from_bools(bits), consumed, discarded, errors)
}

/// Runs periods from index 0 until `target_bits` secure bits accumulate.
pub fn accumulate_key(
    config: &BepConfig,
    target_bits: usize,
    max_beps: Option<u64>,
) -> Result<KeyMaterial, ExchangeError> {
    accumulate_key_from(config, target_bits, 0, max_beps)
}

/// Like [`accumulate_key`] but starting at `start_index`; lets a caller keep
/// consuming fresh periods after rejecting a finished key downstream.
pub fn accumulate_key_from(
    config: &BepConfig,
    target_bits: usize,
    start_index: u64,
    max_beps: Option<u64>,
) -> Result<KeyMaterial, ExchangeError> {
    accumulate_with(config, target_bits, start_index, max_beps, |index| {
        coin_choices(config.seed, index)
    })
}

/// Accumulates with choices cycling through `schedule` by period index
/// instead of coin flips.
pub fn accumulate_key_forced(
    config: &BepConfig,
    target_bits: usize,
    schedule: &[(Choice, Choice)],
    max_beps: Option<u64>,
) -> Result<KeyMaterial, ExchangeError> {
    if schedule.is_empty() {
        return Err(ExchangeError::InvalidConfig("empty choice schedule".into()));
    }
    accumulate_with(config, target_bits, 0, max_beps, |index| {
        schedule[(index % schedule.len() as u64) as usize]
    })
}

/// Projects a period onto what the eavesdropper can hold in hand.
pub fn eve_view(result: &BepResult) -> EveView {
    EveView {
        level: result.level,
        learned_bit: None,
    }
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var)
}

pub fn exchange_report(results: &[BepResult]) -> Result<ExchangeReport, ExchangeError> {
    if results.is_empty() {
        return Err(ExchangeError::EmptyInput);
    }
    let total = results.len() as f64;
    let secure: Vec<&BepResult> = results.iter().filter(|r| r.secure_bit.is_some()).collect();
    let discard_rate = (results.len() - secure.len()) as f64 / total;
    let ones = secure
        .iter()
        .filter(|r| r.secure_bit == Some(1))
        .count() as f64;
    let errors = results
        .iter()
        .filter(|r| r.alice_inferred_bob != r.bob_choice || r.bob_inferred_alice != r.alice_choice)
        .count() as f64;
    let (bit_balance, ber) = if secure.is_empty() {
        (0.0, 0.0)
    } else {
        (ones / secure.len() as f64, errors / secure.len() as f64)
    };

    let hl: Vec<f64> = results
        .iter()
        .filter(|r| r.alice_choice == Choice::High && r.bob_choice == Choice::Low)
        .map(|r| r.measured_ms)
        .collect();
    let lh: Vec<f64> = results
        .iter()
        .filter(|r| r.alice_choice == Choice::Low && r.bob_choice == Choice::High)
        .map(|r| r.measured_ms)
        .collect();
    let hl_lh_ms_gap = if hl.len() < 2 || lh.len() < 2 {
        0.0
    } else {
        let (m1, v1) = mean_and_var(&hl);
        let (m2, v2) = mean_and_var(&lh);
        let pooled = (((hl.len() - 1) as f64 * v1 + (lh.len() - 1) as f64 * v2)
            / (hl.len() + lh.len() - 2) as f64)
            .sqrt();
        (m1 - m2).abs() / pooled
    };

    Ok(ExchangeReport {
        discard_rate,
        bit_balance,
        ber,
        hl_lh_ms_gap,
    })
}

/// Report plus the theoretical-versus-empirical level table.
pub fn summarize(
    results: &[BepResult],
    config: &BepConfig,
) -> Result<ExchangeSummary, ExchangeError> {
    let report = exchange_report(results)?;
    let pair = &config.pair;
    let theory = [
        (
            LevelClass::LL,
            theoretical_mean_square(
                pair.r_low_ohm,
                pair.r_low_ohm,
                config.temperature_k,
                config.bandwidth_hz,
            )?,
        ),
        (
            LevelClass::Secure,
            theoretical_mean_square(
                pair.r_high_ohm,
                pair.r_low_ohm,
                config.temperature_k,
                config.bandwidth_hz,
            )?,
        ),
        (
            LevelClass::HH,
            theoretical_mean_square(
                pair.r_high_ohm,
                pair.r_high_ohm,
                config.temperature_k,
                config.bandwidth_hz,
            )?,
        ),
    ];
    let levels = theory
        .into_iter()
        .map(|(level, theoretical_ms)| {
            let ms: Vec<f64> = results
                .iter()
                .filter(|r| r.level == level)
                .map(|r| r.measured_ms)
                .collect();
            LevelRow {
                level,
                theoretical_ms,
                empirical_mean_ms: if ms.is_empty() {
                    None
                } else {
                    Some(ms.iter().sum::<f64>() / ms.len() as f64)
                },
                count: ms.len() as u64,
            }
        })
        .collect();
    Ok(ExchangeSummary {
        discard_rate: report.discard_rate,
        bit_balance: report.bit_balance,
        ber: report.ber,
        hl_lh_ms_gap: report.hl_lh_ms_gap,
        levels,
    })
}
