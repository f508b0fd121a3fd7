//! Band-limited Gaussian white noise synthesis and Johnson-level scaling.
//!
//! Synthesis runs in four steps. (1) Draw standard normal samples at the
//! Nyquist period tau = 1/(2*df) of the target band df. (2) Average an
//! ensemble of independent draws and rescale by sqrt(m); the average of m
//! unit normals has variance 1/m, so this restores unit variance while
//! suppressing any non-Gaussian residue of the sampler. (3) Double the
//! spectral grid by inserting zeros above the original Nyquist bin and
//! inverse transform; the result is the same band-limited process on a twice
//! finer time grid with exactly nothing above the band edge. (4) Divide by
//! the empirical RMS and multiply by sqrt(4*k*T*R*df), the Johnson noise
//! voltage of a resistor R at effective temperature T over bandwidth df.
//!
//! Steps 1 and 2 produce critically sampled noise whose samples are
//! independent; that form feeds the bit-exchange loop. Step 3 exists for
//! waveform reconstruction and for demonstrating the spectrum is clean.

use crate::stream;
use crate::BOLTZMANN_J_PER_K;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

/// Largest synthesizable series; full-scale runs use 2^24 samples.
pub const MAX_SAMPLES: usize = 1 << 24;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(String),
    #[error("length {0} is not a power of two in the supported range")]
    InvalidLength(usize),
    #[error("series is degenerate (zero variance)")]
    DegenerateSeries,
    #[error("{0} must be positive and finite")]
    NonPositiveParameter(&'static str),
}

/// Parameters of the raw Gaussian synthesis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseConfig {
    /// Samples per ensemble member; power of two, 8..=2^24.
    pub n_samples: usize,
    /// Independent members averaged together; 10 in full-scale runs.
    pub ensemble_count: usize,
    /// One-sided bandwidth df of the band-limited process, Hz.
    pub bandwidth_hz: f64,
    pub seed: u64,
}

impl NoiseConfig {
    fn validate(&self) -> Result<(), NoiseError> {
        if !self.n_samples.is_power_of_two() || self.n_samples < 8 || self.n_samples > MAX_SAMPLES
        {
            return Err(NoiseError::InvalidLength(self.n_samples));
        }
        if self.ensemble_count < 1 {
            return Err(NoiseError::InvalidConfig(
                "ensemble_count must be at least 1".into(),
            ));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(NoiseError::NonPositiveParameter("bandwidth_hz"));
        }
        Ok(())
    }
}

/// A real time series tied to the band it was synthesized for.
///
/// Raw synthesis emits samples at the Nyquist period 1/(2*bandwidth_hz);
/// [`antialias`] halves the period while leaving `bandwidth_hz` unchanged,
/// so its output is oversampled twofold relative to the band.
#[derive(Debug, Clone)]
pub struct GaussianSeries {
    pub samples: Vec<f64>,
    pub sample_period_s: f64,
    pub bandwidth_hz: f64,
}

/// Noise scaled to the Johnson level of one resistor.
#[derive(Debug, Clone)]
pub struct ScaledNoise {
    pub series: GaussianSeries,
    pub resistance_ohm: f64,
    pub temperature_k: f64,
    /// sqrt(4*k*T*R*df); the series' empirical RMS equals this exactly.
    pub target_rms_v: f64,
}

/// Normality statistics of one series.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-style distance: largest gap between the standardized
    /// empirical distribution and the normal CDF.
    pub max_probability_plot_deviation: f64,
}

/// Spectral summary of one series.
///
/// The two statistics use different estimators on purpose. Flatness needs
/// variance reduction, so it comes from the periodogram averaged over
/// `segment_count` segments of `segment_len` samples, with the DC bin and
/// the exact band-edge bin excluded (the edge line holds half power by
/// construction of the doubled grid). Out-of-band power is the fraction
/// above the band edge in ONE full-length periodogram, where the inserted
/// spectral zeros survive exactly; segmenting would smear ~1e-4 of the
/// power across the band edge through window leakage.
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub segment_len: usize,
    pub segment_count: usize,
    /// One-sided bin frequencies of the averaged periodogram, Hz.
    pub freq_hz: Vec<f64>,
    /// One-sided averaged power spectral density, unit^2 per Hz.
    pub power: Vec<f64>,
    /// max/min over averaged in-band bins (DC and band edge excluded).
    pub in_band_flatness: f64,
    /// Fraction of total power strictly above the band edge.
    pub out_of_band_power: f64,
}

/// Sum with Kahan compensation; mean-square residuals here sit nine decades
/// below the values themselves, so naive summation would eat the budget.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

pub(crate) fn mean_square(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().map(|&x| x * x)) / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    compensated_sum(xs.iter().map(|&x| (x - m) * (x - m))) / xs.len() as f64
}

/// White Gaussian samples at the Nyquist period of `bandwidth_hz`, drawn
/// from the supplied generator. This is the sample-independent form the
/// bit-exchange loop consumes.
pub fn standard_normal_series(
    rng: &mut impl Rng,
    len: usize,
    bandwidth_hz: f64,
) -> Result<GaussianSeries, NoiseError> {
    if len == 0 {
        return Err(NoiseError::InvalidLength(0));
    }
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(NoiseError::NonPositiveParameter("bandwidth_hz"));
    }
    let samples = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    Ok(GaussianSeries {
        samples,
        sample_period_s: 1.0 / (2.0 * bandwidth_hz),
        bandwidth_hz,
    })
}

/// Steps 1 and 2: ensemble-averaged unit-variance Gaussian noise at the
/// Nyquist period. Member i draws from substream (ENSEMBLE, i) of the seed.
pub fn generate_raw_gaussian(config: &NoiseConfig) -> Result<GaussianSeries, NoiseError> {
    config.validate()?;
    let mut acc = vec![0.0f64; config.n_samples];
    for member in 0..config.ensemble_count {
        let mut rng = stream::substream(config.seed, stream::DOMAIN_ENSEMBLE, member as u64);
        for slot in acc.iter_mut() {
            let draw: f64 = rng.sample(StandardNormal);
            *slot += draw;
        }
    }
    // dividing the member sum by sqrt(m) instead of m restores unit variance
    let scale = 1.0 / (config.ensemble_count as f64).sqrt();
    for v in &mut acc {
        *v *= scale;
    }
    Ok(GaussianSeries {
        samples: acc,
        sample_period_s: 1.0 / (2.0 * config.bandwidth_hz),
        bandwidth_hz: config.bandwidth_hz,
    })
}

/// Step 3: doubles the spectral grid with zeros above the original Nyquist
/// bin and inverse transforms. Output has 2N samples at half the period,
/// exactly zero content above `bandwidth_hz`, and the input's variance.
pub fn antialias(series: &GaussianSeries) -> Result<GaussianSeries, NoiseError> {
    let n = series.samples.len();
    if !n.is_power_of_two() || !(8..=MAX_SAMPLES).contains(&n) {
        return Err(NoiseError::InvalidLength(n));
    }
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex<f64>> = series
        .samples
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut spec);

    let m = 2 * n;
    let mut padded = vec![Complex::new(0.0, 0.0); m];
    // positive frequencies up to the old Nyquist bin, which splits in half
    // across the +/- band edges to keep the spectrum conjugate-symmetric
    padded[..n / 2].copy_from_slice(&spec[..n / 2]);
    let edge = spec[n / 2] * 0.5;
    padded[n / 2] = edge;
    padded[m - n / 2] = edge.conj();
    // negative frequencies move to the top of the doubled grid
    padded[n + n / 2 + 1..].copy_from_slice(&spec[n / 2 + 1..]);
    planner.plan_fft_inverse(m).process(&mut padded);

    // normalize by n, not m: the grid doubled but the content did not
    let mut out: Vec<f64> = padded.iter().map(|c| c.re / n as f64).collect();
    let var_in = variance(&series.samples);
    let var_out = variance(&out);
    if var_in > 0.0 && var_out > 0.0 {
        let r = (var_in / var_out).sqrt();
        for v in &mut out {
            *v *= r;
        }
    }
    Ok(GaussianSeries {
        samples: out,
        sample_period_s: series.sample_period_s / 2.0,
        bandwidth_hz: series.bandwidth_hz,
    })
}

/// Step 4: normalizes the series' RMS away and applies the Johnson target
/// sqrt(4*k*T*R*df). The output's empirical RMS equals the target exactly.
pub fn scale_to_johnson(
    series: GaussianSeries,
    resistance_ohm: f64,
    temperature_k: f64,
) -> Result<ScaledNoise, NoiseError> {
    if !(resistance_ohm > 0.0 && resistance_ohm.is_finite()) {
        return Err(NoiseError::NonPositiveParameter("resistance_ohm"));
    }
    if !(temperature_k > 0.0 && temperature_k.is_finite()) {
        return Err(NoiseError::NonPositiveParameter("temperature_k"));
    }
    let rms = mean_square(&series.samples).sqrt();
    if rms == 0.0 {
        return Err(NoiseError::DegenerateSeries);
    }
    let target_rms_v =
        (4.0 * BOLTZMANN_J_PER_K * temperature_k * resistance_ohm * series.bandwidth_hz).sqrt();
    let factor = target_rms_v / rms;
    let mut samples = series.samples;
    for v in &mut samples {
        *v *= factor;
    }
    Ok(ScaledNoise {
        series: GaussianSeries { samples, ..series },
        resistance_ohm,
        temperature_k,
        target_rms_v,
    })
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Third and fourth standardized moments plus the Kolmogorov-style distance
/// of the standardized samples from the normal CDF.
pub fn normality_report(series: &GaussianSeries) -> Result<NormalityReport, NoiseError> {
    let xs = &series.samples;
    if xs.len() < 8 {
        return Err(NoiseError::InvalidLength(xs.len()));
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = compensated_sum(xs.iter().map(|&x| (x - m).powi(2))) / n;
    if m2 == 0.0 {
        return Err(NoiseError::DegenerateSeries);
    }
    let m3 = compensated_sum(xs.iter().map(|&x| (x - m).powi(3))) / n;
    let m4 = compensated_sum(xs.iter().map(|&x| (x - m).powi(4))) / n;
    let sd = m2.sqrt();

    let mut z: Vec<f64> = xs.iter().map(|&x| (x - m) / sd).collect();
    z.sort_unstable_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (i, &zi) in z.iter().enumerate() {
        let phi = normal_cdf(zi);
        d = d.max(((i + 1) as f64 / n - phi).abs());
        d = d.max((phi - i as f64 / n).abs());
    }
    Ok(NormalityReport {
        skewness: m3 / (m2 * sd),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        max_probability_plot_deviation: d,
    })
}

fn one_sided_periodogram(
    planner: &mut FftPlanner<f64>,
    xs: &[f64],
    sample_period_s: f64,
) -> Vec<f64> {
    let m = xs.len();
    let mut buf: Vec<Complex<f64>> = xs.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let fs = 1.0 / sample_period_s;
    let density = 1.0 / (fs * m as f64);
    (0..=m / 2)
        .map(|k| {
            let two_sided = buf[k].norm_sqr() * density;
            if k == 0 || k == m / 2 {
                two_sided
            } else {
                2.0 * two_sided
            }
        })
        .collect()
}

/// Index of the band-edge bin for a length-`len` grid at the series' rate.
fn band_edge_bin(series: &GaussianSeries, len: usize) -> usize {
    (series.bandwidth_hz * len as f64 * series.sample_period_s).round() as usize
}

/// Averaged-periodogram spectral report; see [`PsdReport`] for what the two
/// statistics are measured on.
pub fn psd_report(series: &GaussianSeries, segment_len: usize) -> Result<PsdReport, NoiseError> {
    let n = series.samples.len();
    if !n.is_power_of_two() || n < 1 << 10 {
        return Err(NoiseError::InvalidLength(n));
    }
    if !segment_len.is_power_of_two() || segment_len < 16 || segment_len > n {
        return Err(NoiseError::InvalidConfig(format!(
            "segment_len {segment_len} must be a power of two in 16..={n}"
        )));
    }
    let segment_count = n / segment_len;
    let mut planner = FftPlanner::new();

    let mut power = vec![0.0f64; segment_len / 2 + 1];
    for s in 0..segment_count {
        let seg = &series.samples[s * segment_len..(s + 1) * segment_len];
        let p = one_sided_periodogram(&mut planner, seg, series.sample_period_s);
        for (acc, v) in power.iter_mut().zip(p) {
            *acc += v;
        }
    }
    for v in &mut power {
        *v /= segment_count as f64;
    }
    let fs = 1.0 / series.sample_period_s;
    let freq_hz: Vec<f64> = (0..=segment_len / 2)
        .map(|k| k as f64 * fs / segment_len as f64)
        .collect();

    let edge = band_edge_bin(series, segment_len);
    if edge < 3 || edge > segment_len / 2 {
        return Err(NoiseError::InvalidConfig(format!(
            "segment_len {segment_len} leaves no usable in-band bins"
        )));
    }
    let in_band = &power[1..edge];
    let max = in_band.iter().copied().fold(f64::MIN, f64::max);
    let min = in_band.iter().copied().fold(f64::MAX, f64::min);
    let in_band_flatness = if min > 0.0 { max / min } else { f64::INFINITY };

    let full = one_sided_periodogram(&mut planner, &series.samples, series.sample_period_s);
    let full_edge = band_edge_bin(series, n);
    let total = compensated_sum(full.iter().copied());
    let out = compensated_sum(full[full_edge + 1..].iter().copied());
    let out_of_band_power = if total > 0.0 { out / total } else { 0.0 };

    Ok(PsdReport {
        segment_len,
        segment_count,
        freq_hz,
        power,
        in_band_flatness,
        out_of_band_power,
    })
}
