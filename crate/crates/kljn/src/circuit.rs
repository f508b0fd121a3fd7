//! The two-resistor loop: superposition on the shared wire, Johnson levels,
//! and the three-way mean-square classifier.
//!
//! With generators U_A behind resistance r_a and U_B behind r_b on one wire,
//! voltage division gives u_w = (U_A*r_b + U_B*r_a)/(r_a + r_b) and the loop
//! current i_w = (U_A - U_B)/(r_a + r_b). For independent Johnson sources
//! the wire mean square is 4*k*T*R_p*df with R_p = r_a*r_b/(r_a + r_b), so
//! HL and LH share one level: the parallel resistance is symmetric, which is
//! the entire security argument. Samples are treated as independent; at the
//! Nyquist period 1/(2*df) adjacent samples of the band-limited process are
//! uncorrelated.

use crate::noise::ScaledNoise;
use crate::BOLTZMANN_J_PER_K;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("resistance must be positive and finite, got {0}")]
    NonPositiveResistance(f64),
    #[error("{0} must be positive and finite")]
    NonPositiveParameter(&'static str),
    #[error("series lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("claimed resistance {claimed} does not match the noise's {scaled}")]
    ResistanceMismatch { claimed: f64, scaled: f64 },
    #[error("realization holds no samples")]
    EmptyRealization,
}

/// The two resistor values a party can connect.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResistorPair {
    pub r_high_ohm: f64,
    pub r_low_ohm: f64,
}

impl ResistorPair {
    pub fn new(r_high_ohm: f64, r_low_ohm: f64) -> Result<Self, CircuitError> {
        if !(r_low_ohm > 0.0 && r_low_ohm.is_finite()) {
            return Err(CircuitError::NonPositiveResistance(r_low_ohm));
        }
        if !(r_high_ohm > r_low_ohm && r_high_ohm.is_finite()) {
            return Err(CircuitError::NonPositiveResistance(r_high_ohm));
        }
        Ok(Self {
            r_high_ohm,
            r_low_ohm,
        })
    }
}

impl Default for ResistorPair {
    /// Stock values: 100 kOhm against 10 kOhm.
    fn default() -> Self {
        Self {
            r_high_ohm: 1e5,
            r_low_ohm: 1e4,
        }
    }
}

/// One party's resistor pick for a bit exchange period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Choice {
    Low,
    High,
}

impl Choice {
    pub fn opposite(self) -> Self {
        match self {
            Choice::Low => Choice::High,
            Choice::High => Choice::Low,
        }
    }

    pub fn resistance(self, pair: &ResistorPair) -> f64 {
        match self {
            Choice::Low => pair.r_low_ohm,
            Choice::High => pair.r_high_ohm,
        }
    }
}

/// Wire voltage and loop current over one period.
#[derive(Debug, Clone)]
pub struct WireRealization {
    pub u_w: Vec<f64>,
    pub i_w: Vec<f64>,
    pub sample_period_s: f64,
}

/// The three mean-square levels the wire can sit at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelClass {
    LL,
    Secure,
    HH,
}

pub fn parallel_resistance(r_a: f64, r_b: f64) -> Result<f64, CircuitError> {
    for r in [r_a, r_b] {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CircuitError::NonPositiveResistance(r));
        }
    }
    Ok(r_a * r_b / (r_a + r_b))
}

/// 4*k*T*R_p*df, the Johnson mean-square voltage on the wire.
pub fn theoretical_mean_square(
    r_a: f64,
    r_b: f64,
    temperature_k: f64,
    bandwidth_hz: f64,
) -> Result<f64, CircuitError> {
    if !(temperature_k > 0.0 && temperature_k.is_finite()) {
        return Err(CircuitError::NonPositiveParameter("temperature_k"));
    }
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(CircuitError::NonPositiveParameter("bandwidth_hz"));
    }
    Ok(4.0 * BOLTZMANN_J_PER_K * temperature_k * parallel_resistance(r_a, r_b)? * bandwidth_hz)
}

/// Superposes the two generators on the wire. The claimed resistances must
/// match what each noise was scaled for; that cross-check is the point of
/// passing them again.
pub fn superpose_wire(
    noise_a: &ScaledNoise,
    r_a: f64,
    noise_b: &ScaledNoise,
    r_b: f64,
) -> Result<WireRealization, CircuitError> {
    for (claimed, noise) in [(r_a, noise_a), (r_b, noise_b)] {
        if claimed != noise.resistance_ohm {
            return Err(CircuitError::ResistanceMismatch {
                claimed,
                scaled: noise.resistance_ohm,
            });
        }
    }
    let ua = &noise_a.series.samples;
    let ub = &noise_b.series.samples;
    if ua.len() != ub.len() {
        return Err(CircuitError::LengthMismatch {
            a: ua.len(),
            b: ub.len(),
        });
    }
    if ua.is_empty() {
        return Err(CircuitError::EmptyRealization);
    }
    let denom = r_a + r_b;
    let mut u_w = Vec::with_capacity(ua.len());
    let mut i_w = Vec::with_capacity(ua.len());
    for (&a, &b) in ua.iter().zip(ub) {
        u_w.push((a * r_b + b * r_a) / denom);
        i_w.push((a - b) / denom);
    }
    Ok(WireRealization {
        u_w,
        i_w,
        sample_period_s: noise_a.series.sample_period_s,
    })
}

pub fn measure_mean_square(wire: &WireRealization) -> Result<f64, CircuitError> {
    if wire.u_w.is_empty() {
        return Err(CircuitError::EmptyRealization);
    }
    Ok(crate::noise::mean_square(&wire.u_w))
}

/// Classifies a measured wire mean square against the three theoretical
/// levels of the pair; thresholds sit at the geometric means of adjacent
/// levels, and values landing exactly on a threshold count as Secure.
pub fn classify_level(
    mean_square: f64,
    pair: &ResistorPair,
    temperature_k: f64,
    bandwidth_hz: f64,
) -> Result<LevelClass, CircuitError> {
    if !(mean_square >= 0.0 && mean_square.is_finite()) {
        return Err(CircuitError::NonPositiveParameter("mean_square"));
    }
    let ll = theoretical_mean_square(pair.r_low_ohm, pair.r_low_ohm, temperature_k, bandwidth_hz)?;
    let mid =
        theoretical_mean_square(pair.r_high_ohm, pair.r_low_ohm, temperature_k, bandwidth_hz)?;
    let hh =
        theoretical_mean_square(pair.r_high_ohm, pair.r_high_ohm, temperature_k, bandwidth_hz)?;
    let lo = (ll * mid).sqrt();
    let hi = (mid * hh).sqrt();
    Ok(if mean_square < lo {
        LevelClass::LL
    } else if mean_square > hi {
        LevelClass::HH
    } else {
        LevelClass::Secure
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{scale_to_johnson, standard_normal_series};
    use crate::stream;

    fn scaled(seed_index: u64, len: usize, r: f64) -> ScaledNoise {
        let mut rng = stream::substream(90, stream::DOMAIN_TRACE, seed_index);
        let series = standard_normal_series(&mut rng, len, 500.0).unwrap();
        scale_to_johnson(series, r, 1e18).unwrap()
    }

    #[test]
    fn parallel_resistance_values() {
        // 100k || 10k = 100/11 k
        let rp = parallel_resistance(1e5, 1e4).unwrap();
        assert!((rp - 1e9 / 1.1e5).abs() < 1e-6);
        assert_eq!(parallel_resistance(1e4, 1e4).unwrap(), 5e3);
        assert!(parallel_resistance(0.0, 1e4).is_err());
        assert!(parallel_resistance(1e4, f64::INFINITY).is_err());
    }

    #[test]
    fn levels_at_stock_parameters() {
        let ll = theoretical_mean_square(1e4, 1e4, 1e18, 500.0).unwrap();
        let mid = theoretical_mean_square(1e5, 1e4, 1e18, 500.0).unwrap();
        let hh = theoretical_mean_square(1e5, 1e5, 1e18, 500.0).unwrap();
        assert!((ll - 138.0).abs() < 1e-9);
        assert!((mid - 250.909090909091).abs() < 1e-9);
        assert!((hh - 1380.0).abs() < 1e-9);
        // adjacent level ratios that make three-way thresholds workable
        assert!((mid / ll - 1.818181818182).abs() < 1e-9);
        assert!((hh / ll - 10.0).abs() < 1e-12);
    }

    #[test]
    fn hl_lh_symmetry_is_bit_exact() {
        let hl = theoretical_mean_square(1e5, 1e4, 1e18, 500.0).unwrap();
        let lh = theoretical_mean_square(1e4, 1e5, 1e18, 500.0).unwrap();
        assert_eq!(hl.to_bits(), lh.to_bits());
    }

    #[test]
    fn superposition_obeys_kirchhoff() {
        let a = scaled(0, 512, 1e5);
        let b = scaled(1, 512, 1e4);
        let wire = superpose_wire(&a, 1e5, &b, 1e4).unwrap();
        // r_a * i_w + u_w must reproduce U_A sample by sample
        for i in 0..512 {
            let back = 1e5 * wire.i_w[i] + wire.u_w[i];
            let want = a.series.samples[i];
            assert!(
                (back - want).abs() <= 1e-12 * want.abs().max(1.0),
                "sample {i}"
            );
        }
    }

    #[test]
    fn superposition_matches_johnson_level() {
        let n = 100_000;
        let a = scaled(2, n, 1e5);
        let b = scaled(3, n, 1e4);
        let wire = superpose_wire(&a, 1e5, &b, 1e4).unwrap();
        let ms = measure_mean_square(&wire).unwrap();
        let want = theoretical_mean_square(1e5, 1e4, 1e18, 500.0).unwrap();
        assert!((ms / want - 1.0).abs() < 0.05, "ms {ms} want {want}");
    }

    #[test]
    fn superposition_rejects_mismatches() {
        let a = scaled(4, 64, 1e5);
        let b = scaled(5, 32, 1e4);
        assert!(matches!(
            superpose_wire(&a, 1e5, &b, 1e4),
            Err(CircuitError::LengthMismatch { a: 64, b: 32 })
        ));
        let b = scaled(6, 64, 1e4);
        assert!(matches!(
            superpose_wire(&a, 1e4, &b, 1e4),
            Err(CircuitError::ResistanceMismatch { .. })
        ));
    }

    #[test]
    fn empty_realization_is_rejected() {
        let wire = WireRealization {
            u_w: vec![],
            i_w: vec![],
            sample_period_s: 1e-3,
        };
        assert_eq!(
            measure_mean_square(&wire),
            Err(CircuitError::EmptyRealization)
        );
    }

    #[test]
    fn classification_of_exact_levels() {
        let pair = ResistorPair::default();
        for (ms, want) in [
            (138.0, LevelClass::LL),
            (250.909090909091, LevelClass::Secure),
            (1380.0, LevelClass::HH),
        ] {
            assert_eq!(classify_level(ms, &pair, 1e18, 500.0).unwrap(), want);
        }
        // geometric-mean thresholds; landing exactly on one stays Secure
        let ll = theoretical_mean_square(1e4, 1e4, 1e18, 500.0).unwrap();
        let mid = theoretical_mean_square(1e5, 1e4, 1e18, 500.0).unwrap();
        let hh = theoretical_mean_square(1e5, 1e5, 1e18, 500.0).unwrap();
        let lo = (ll * mid).sqrt();
        let hi = (mid * hh).sqrt();
        assert_eq!(
            classify_level(lo, &pair, 1e18, 500.0).unwrap(),
            LevelClass::Secure
        );
        assert_eq!(
            classify_level(hi, &pair, 1e18, 500.0).unwrap(),
            LevelClass::Secure
        );
        assert_eq!(
            classify_level(lo * (1.0 - 1e-9), &pair, 1e18, 500.0).unwrap(),
            LevelClass::LL
        );
        assert_eq!(
            classify_level(hi * (1.0 + 1e-9), &pair, 1e18, 500.0).unwrap(),
            LevelClass::HH
        );
        assert!(classify_level(f64::NAN, &pair, 1e18, 500.0).is_err());
    }

    #[test]
    fn resistor_pair_ordering_enforced() {
        assert!(ResistorPair::new(1e4, 1e5).is_err());
        assert!(ResistorPair::new(1e5, 0.0).is_err());
        assert!(ResistorPair::new(1e5, 1e4).is_ok());
    }
}
