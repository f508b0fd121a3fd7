//! Command implementations, the run manifest, and the self-check battery.

use crate::{Cli, Command, DidOpts, ExchangeOpts, KeygenOpts, NoiseOpts, RerunOpts, VerifyOpts};
use kljn::circuit::{
    superpose_wire, theoretical_mean_square, Choice, LevelClass, ResistorPair,
};
use kljn::exchange::{
    accumulate_key, accumulate_key_from, run_bep, run_bep_forced, summarize, BepConfig, BepResult,
};
use kljn::export;
use kljn::identity::{
    build_did_document, compress_public, derive_private_key, private_key_from_bits,
    public_from_private, uncompressed_hex, IdentityError, SIGNING_ALGORITHMS,
};
use kljn::keycodec::{binary_to_hex, hex_to_binary, BitString};
use kljn::noise::{
    antialias, generate_raw_gaussian, normality_report, psd_report, scale_to_johnson,
    standard_normal_series, NoiseConfig,
};
use kljn::stream::{substream, DOMAIN_TRACE};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

macro_rules! config_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Config(e.to_string())
            }
        }
    )*};
}

config_from!(
    kljn::noise::NoiseError,
    kljn::circuit::CircuitError,
    kljn::exchange::ExchangeError,
    kljn::keycodec::KeycodecError,
    kljn::identity::IdentityError,
    serde_json::Error
);

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Everything needed to replay a run; written next to the run's outputs.
#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub created_unix_s: u64,
    pub command: CommandSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum CommandSpec {
    Noise(NoiseOpts),
    Exchange(ExchangeOpts),
    Keygen(KeygenOpts),
    Did(DidOpts),
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Noise(o) => {
            cmd_noise(&o)?;
            let dir = o.out_dir.clone();
            write_manifest(&dir, CommandSpec::Noise(o))
        }
        Command::Exchange(o) => {
            cmd_exchange(&o)?;
            let dir = o.out_dir.clone();
            write_manifest(&dir, CommandSpec::Exchange(o))
        }
        Command::Keygen(o) => {
            cmd_keygen(&o)?;
            let dir = o.out_dir.clone();
            write_manifest(&dir, CommandSpec::Keygen(o))
        }
        Command::Did(o) => {
            cmd_did(&o)?;
            let dir = o.out_dir.clone();
            write_manifest(&dir, CommandSpec::Did(o))
        }
        Command::Verify(o) => cmd_verify(&o),
        Command::Rerun(o) => cmd_rerun(&o),
    }
}

fn write_manifest(dir: &Path, command: CommandSpec) -> Result<(), CliError> {
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_err(|e| CliError::Io(e.to_string()))?
            .as_secs(),
        command,
    };
    save(dir, "manifest.json", |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
    })
}

/// Creates `dir/name`, streams `body` into it, and reports the path.
fn save(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    body(&mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_noise(o: &NoiseOpts) -> Result<(), CliError> {
    let config = NoiseConfig {
        n_samples: o.samples,
        ensemble_count: o.ensemble,
        bandwidth_hz: o.circuit.bandwidth,
        seed: o.seed,
    };
    let raw = generate_raw_gaussian(&config)?;
    let padded = antialias(&raw)?;
    let spectrum = psd_report(&padded, o.segment_len)?;
    let normality = normality_report(&padded)?;

    fs::create_dir_all(&o.out_dir)?;
    save(&o.out_dir, "noise.csv", |w| export::write_series_csv(w, &padded))?;
    save(&o.out_dir, "psd.csv", |w| export::write_psd_csv(w, &spectrum))?;
    save(&o.out_dir, "normality.json", |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&normality).expect("report serializes"))
    })?;

    // 0.1 s of the wire at the secure setting, both source voltages beside
    // the superposed voltage and loop current
    let pair = ResistorPair::new(o.circuit.rh, o.circuit.rl)?;
    let trace_len = ((0.1 * 2.0 * o.circuit.bandwidth).round() as usize).max(2);
    let mut rng_a = substream(o.seed, DOMAIN_TRACE, 0);
    let mut rng_b = substream(o.seed, DOMAIN_TRACE, 1);
    let raw_a = standard_normal_series(&mut rng_a, trace_len, o.circuit.bandwidth)?;
    let raw_b = standard_normal_series(&mut rng_b, trace_len, o.circuit.bandwidth)?;
    let noise_a = scale_to_johnson(raw_a, pair.r_high_ohm, o.circuit.teff)?;
    let noise_b = scale_to_johnson(raw_b, pair.r_low_ohm, o.circuit.teff)?;
    let wire = superpose_wire(&noise_a, pair.r_high_ohm, &noise_b, pair.r_low_ohm)?;
    save(&o.out_dir, "realization.csv", |w| {
        export::write_traces_csv(
            w,
            wire.sample_period_s,
            &[
                ("u_a_v", &noise_a.series.samples),
                ("u_b_v", &noise_b.series.samples),
                ("u_w_v", &wire.u_w),
                ("i_w_a", &wire.i_w),
            ],
        )
    })?;

    println!(
        "samples {} ({} after interpolation), in-band flatness {:.3}, out-of-band power {:.2e}",
        o.samples,
        padded.samples.len(),
        spectrum.in_band_flatness,
        spectrum.out_of_band_power
    );
    Ok(())
}

fn bep_config(circuit: &crate::CircuitOpts, bep_samples: usize, seed: u64) -> Result<BepConfig, CliError> {
    let pair = ResistorPair::new(circuit.rh, circuit.rl)?;
    let config = BepConfig {
        pair,
        temperature_k: circuit.teff,
        bandwidth_hz: circuit.bandwidth,
        samples_per_bep: bep_samples,
        seed,
    };
    config.validate()?;
    Ok(config)
}

fn parse_schedule(text: &str) -> Result<Vec<(Choice, Choice)>, CliError> {
    text.split(',')
        .map(|token| match token.trim().to_ascii_uppercase().as_str() {
            "HL" => Ok((Choice::High, Choice::Low)),
            "LH" => Ok((Choice::Low, Choice::High)),
            "HH" => Ok((Choice::High, Choice::High)),
            "LL" => Ok((Choice::Low, Choice::Low)),
            other => Err(CliError::Config(format!(
                "choice token {other:?} is not one of HL, LH, HH, LL"
            ))),
        })
        .collect()
}

fn cmd_exchange(o: &ExchangeOpts) -> Result<(), CliError> {
    let config = bep_config(&o.circuit, o.bep_samples, o.seed)?;
    if o.beps == 0 {
        return Err(CliError::Config("beps must be at least 1".into()));
    }
    let schedule = o.force_choices.as_deref().map(parse_schedule).transpose()?;
    let one = |i: u64| match &schedule {
        Some(s) => {
            let (alice, bob) = s[(i % s.len() as u64) as usize];
            run_bep_forced(&config, i, alice, bob)
        }
        None => run_bep(&config, i),
    };
    let results: Vec<BepResult> = if o.parallel {
        (0..o.beps).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..o.beps).map(one).collect::<Result<_, _>>()?
    };
    let summary = summarize(&results, &config)?;

    fs::create_dir_all(&o.out_dir)?;
    save(&o.out_dir, "exchange.jsonl", |w| export::write_bep_jsonl(w, &results))?;
    save(&o.out_dir, "summary.json", |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"))
    })?;

    println!(
        "{} periods: discard rate {:.4}, bit balance {:.4}, bit error rate {:.2e}",
        results.len(),
        summary.discard_rate,
        summary.bit_balance,
        summary.ber
    );
    Ok(())
}

fn cmd_keygen(o: &KeygenOpts) -> Result<(), CliError> {
    let config = bep_config(&o.circuit, o.bep_samples, o.seed)?;
    let key = accumulate_key(&config, o.length, o.max_beps)?;
    fs::create_dir_all(&o.out_dir)?;
    save(&o.out_dir, "key.json", |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&key).expect("key serializes"))
    })?;
    println!(
        "{} bits over {} periods ({} discarded): {}",
        key.bits.len(),
        key.beps_consumed,
        key.discarded,
        key.hex
    );
    Ok(())
}

fn cmd_did(o: &DidOpts) -> Result<(), CliError> {
    let (key, private) = match &o.key_hex {
        Some(hex) => {
            let bits = hex_to_binary(hex)?;
            let private = private_key_from_bits(&bits)?;
            (kljn::exchange::KeyMaterial::new(bits, 0, 0, 0)?, private)
        }
        None => {
            let config = bep_config(&o.circuit, o.bep_samples, o.seed)?;
            let mut start = 0u64;
            let mut attempts = 0u32;
            loop {
                let key = accumulate_key_from(&config, 256, start, o.max_beps)?;
                attempts += 1;
                match derive_private_key(&key) {
                    Ok(private) => break (key, private),
                    Err(IdentityError::KeyOutOfRange) if attempts < 32 => {
                        // astronomically rare; spend fresh periods and retry
                        start += key.beps_consumed;
                        eprintln!("generated key fell outside the scalar range; retrying");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    };
    let public = public_from_private(&private);
    let document = build_did_document(&public, &o.alias, o.network.as_deref())?;

    fs::create_dir_all(&o.out_dir)?;
    save(&o.out_dir, "key.json", |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&key).expect("key serializes"))
    })?;
    save(&o.out_dir, "did.json", |w| writeln!(w, "{}", document.to_json_pretty()))?;
    println!("{}", document.did);
    Ok(())
}

fn cmd_rerun(o: &RerunOpts) -> Result<(), CliError> {
    let text = fs::read_to_string(&o.manifest)?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let current = env!("CARGO_PKG_VERSION");
    if manifest.artifact_version != current {
        eprintln!(
            "note: manifest comes from version {}, this binary is {current}",
            manifest.artifact_version
        );
    }
    let out_dir = o.out_dir.clone().unwrap_or_else(|| {
        match o.manifest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        }
    });
    match manifest.command {
        CommandSpec::Noise(mut spec) => {
            spec.out_dir = out_dir;
            cmd_noise(&spec)
        }
        CommandSpec::Exchange(mut spec) => {
            spec.out_dir = out_dir;
            cmd_exchange(&spec)
        }
        CommandSpec::Keygen(mut spec) => {
            spec.out_dir = out_dir;
            cmd_keygen(&spec)
        }
        CommandSpec::Did(mut spec) => {
            spec.out_dir = out_dir;
            cmd_did(&spec)
        }
    }
}

struct Scale {
    johnson_samples: usize,
    symmetry_beps: u64,
    gauss_samples: usize,
    gauss_ensemble: usize,
    accounting_beps: u64,
}

const FULL: Scale = Scale {
    johnson_samples: 100_000,
    symmetry_beps: 2000,
    gauss_samples: 1 << 18,
    gauss_ensemble: 4,
    accounting_beps: 400,
};

const QUICK: Scale = Scale {
    johnson_samples: 10_000,
    symmetry_beps: 200,
    gauss_samples: 1 << 14,
    gauss_ensemble: 2,
    accounting_beps: 100,
};

fn run_check(name: &str, failures: &mut u32, check: impl FnOnce() -> Result<(), String>) {
    match check() {
        Ok(()) => println!("ok   {name}"),
        Err(why) => {
            *failures += 1;
            println!("FAIL {name}: {why}");
        }
    }
}

fn cmd_verify(o: &VerifyOpts) -> Result<(), CliError> {
    let scale = if o.quick { QUICK } else { FULL };
    let started = Instant::now();
    let mut failures = 0u32;

    run_check("johnson_levels", &mut failures, || {
        let config = BepConfig {
            samples_per_bep: scale.johnson_samples,
            seed: 41,
            ..BepConfig::default()
        };
        let bound = 3.0 * (2.0 / scale.johnson_samples as f64).sqrt();
        for (alice, bob) in [
            (Choice::Low, Choice::Low),
            (Choice::High, Choice::Low),
            (Choice::High, Choice::High),
        ] {
            let r = run_bep_forced(&config, 0, alice, bob).map_err(|e| e.to_string())?;
            let want = theoretical_mean_square(
                alice.resistance(&config.pair),
                bob.resistance(&config.pair),
                config.temperature_k,
                config.bandwidth_hz,
            )
            .map_err(|e| e.to_string())?;
            let rel = (r.measured_ms - want).abs() / want;
            if rel >= bound {
                return Err(format!(
                    "{alice:?}/{bob:?} level off by {rel:.5} relative, bound {bound:.5}"
                ));
            }
        }
        Ok(())
    });

    run_check("level_symmetry", &mut failures, || {
        let a = theoretical_mean_square(1e5, 1e4, 1e18, 500.0).map_err(|e| e.to_string())?;
        let b = theoretical_mean_square(1e4, 1e5, 1e18, 500.0).map_err(|e| e.to_string())?;
        if a.to_bits() != b.to_bits() {
            return Err("swapped-pair levels differ in the last bit".into());
        }
        let config = BepConfig { seed: 4, ..BepConfig::default() };
        let results: Vec<BepResult> = (0..scale.symmetry_beps)
            .map(|i| {
                let (alice, bob) = if i % 2 == 0 {
                    (Choice::High, Choice::Low)
                } else {
                    (Choice::Low, Choice::High)
                };
                run_bep_forced(&config, i, alice, bob)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let summary = summarize(&results, &config).map_err(|e| e.to_string())?;
        let bound = 3.0 / ((scale.symmetry_beps / 2) as f64).sqrt();
        let gap = summary.hl_lh_ms_gap;
        if gap >= bound {
            return Err(format!("HL/LH gap {gap:.5} over bound {bound:.5}"));
        }
        Ok(())
    });

    run_check("gaussian_amplitude", &mut failures, || {
        let config = NoiseConfig {
            n_samples: scale.gauss_samples,
            ensemble_count: scale.gauss_ensemble,
            bandwidth_hz: 500.0,
            seed: 5,
        };
        let padded = antialias(&generate_raw_gaussian(&config).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let rep = normality_report(&padded).map_err(|e| e.to_string())?;
        let n = scale.gauss_samples as f64;
        let skew_bound = 4.2 * (6.0 / n).sqrt();
        let kurt_bound = 4.2 * (24.0 / n).sqrt();
        let ks_bound = 1.6276 / n.sqrt();
        if rep.skewness.abs() >= skew_bound {
            return Err(format!("skewness {} over {skew_bound:.4}", rep.skewness));
        }
        if rep.excess_kurtosis.abs() >= kurt_bound {
            return Err(format!("excess kurtosis {} over {kurt_bound:.4}", rep.excess_kurtosis));
        }
        if rep.max_probability_plot_deviation >= ks_bound {
            return Err(format!(
                "distribution distance {} over {ks_bound:.5}",
                rep.max_probability_plot_deviation
            ));
        }
        Ok(())
    });

    run_check("band_limits", &mut failures, || {
        let config = NoiseConfig {
            n_samples: 1 << 12,
            ensemble_count: 1,
            bandwidth_hz: 500.0,
            seed: 12,
        };
        let padded = antialias(&generate_raw_gaussian(&config).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let rep = psd_report(&padded, 128).map_err(|e| e.to_string())?;
        if rep.out_of_band_power > 1e-20 {
            return Err(format!("out-of-band power {}", rep.out_of_band_power));
        }
        if rep.in_band_flatness >= 2.0 {
            return Err(format!("in-band flatness {}", rep.in_band_flatness));
        }
        Ok(())
    });

    run_check("key_codec", &mut failures, || {
        let bits: BitString = "1111001110100100".parse().map_err(|_| "parse failed")?;
        let hex = binary_to_hex(&bits).map_err(|e| e.to_string())?;
        if hex != "f3a4" {
            return Err(format!("fixture encoded to {hex}"));
        }
        if hex_to_binary("f3a4").map_err(|e| e.to_string())? != bits {
            return Err("decode fixture mismatch".into());
        }
        let mut rng = substream(90, DOMAIN_TRACE, 2);
        use rand::Rng;
        for _ in 0..100 {
            let bits = BitString::from_bools((0..256).map(|_| rng.gen()).collect());
            let hex = binary_to_hex(&bits).map_err(|e| e.to_string())?;
            if hex_to_binary(&hex).map_err(|e| e.to_string())? != bits {
                return Err("random round-trip mismatch".into());
            }
        }
        Ok(())
    });

    run_check("curve_fixed_points", &mut failures, || {
        let key = |hex: &str| {
            private_key_from_bits(&hex_to_binary(hex).expect("hex")).map_err(|e| e.to_string())
        };
        let one = public_from_private(&key(
            "0000000000000000000000000000000000000000000000000000000000000001",
        )?);
        if compress_public(&one)
            != "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
        {
            return Err("scalar 1 misses the base point".into());
        }
        let two = public_from_private(&key(
            "0000000000000000000000000000000000000000000000000000000000000002",
        )?);
        if uncompressed_hex(&two)
            != "04c6047f9441ed7d6d3045406e95c07cd85c778e4b8cef3ca7abac09b95c709ee5\
                1ae168fea63dc339a3c58419466ceaeef7f632653266d0e1236431a950cfe52a"
        {
            return Err("scalar 2 reference point mismatch".into());
        }
        if key("0000000000000000000000000000000000000000000000000000000000000000").is_ok() {
            return Err("zero scalar accepted".into());
        }
        if key("fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141").is_ok() {
            return Err("group order accepted as scalar".into());
        }
        Ok(())
    });

    run_check("document_shape", &mut failures, || {
        let private = private_key_from_bits(
            &hex_to_binary("0000000000000000000000000000000000000000000000000000000000000001")
                .expect("hex"),
        )
        .map_err(|e| e.to_string())?;
        let public = public_from_private(&private);
        let doc = build_did_document(&public, "self check", Some("goerli"))
            .map_err(|e| e.to_string())?;
        if !doc.did.starts_with("did:ethr:goerli:0x") {
            return Err(format!("did prefix {}", doc.did));
        }
        if doc.did.len() != "did:ethr:goerli:0x".len() + 66 {
            return Err("compressed key is not 66 hex characters".into());
        }
        if doc.controller_key_id.len() != 130 {
            return Err("uncompressed key is not 130 hex characters".into());
        }
        let text = doc.to_json_pretty();
        let mut last = 0;
        for field in ["\"did\"", "\"controllerKeyId\"", "\"keys\"", "\"kms\"", "\"services\"", "\"provider\"", "\"alias\""] {
            match text[last..].find(field) {
                Some(at) => last += at,
                None => return Err(format!("field {field} missing or out of order")),
            }
        }
        let mut algo_at = 0;
        for algo in SIGNING_ALGORITHMS {
            match text[algo_at..].find(algo) {
                Some(at) => algo_at += at,
                None => return Err(format!("algorithm {algo} missing or out of order")),
            }
        }
        Ok(())
    });

    run_check("exchange_accounting", &mut failures, || {
        let config = BepConfig { seed: 9, ..BepConfig::default() };
        let results: Vec<BepResult> = (0..scale.accounting_beps)
            .map(|i| run_bep(&config, i))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let summary = summarize(&results, &config).map_err(|e| e.to_string())?;
        let discard = summary.discard_rate;
        if !(0.35..=0.65).contains(&discard) {
            return Err(format!("discard rate {discard}"));
        }
        if summary.ber >= 1e-3 {
            return Err(format!("bit error rate {}", summary.ber));
        }
        for r in &results {
            let want = match (r.level, r.alice_choice, r.bob_choice) {
                (LevelClass::Secure, Choice::High, Choice::Low) => Some(1),
                (LevelClass::Secure, Choice::Low, Choice::High) => Some(0),
                _ => None,
            };
            if r.secure_bit != want {
                return Err("secure bit disagrees with the choices".into());
            }
        }
        Ok(())
    });

    if o.inject_failure {
        run_check("injected_broken_threshold", &mut failures, || {
            // deliberately unreachable bound; proves failures reach the exit code
            let level = theoretical_mean_square(1e5, 1e4, 1e18, 500.0).map_err(|e| e.to_string())?;
            if level < 1.0 {
                Ok(())
            } else {
                Err(format!("level {level} over the broken bound 1.0"))
            }
        });
    }

    println!(
        "{} in {:.2} s",
        if failures == 0 { "all checks passed".to_string() } else { format!("{failures} check(s) failed") },
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        return Err(CliError::Verify(format!("{failures} check(s) failed")));
    }
    Ok(())
}
