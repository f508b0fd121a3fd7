//! Command-line front end: generates diagnostic noise series, runs bit
//! exchange periods, accumulates keys, and builds identity documents.
//!
//! Every command that writes files also writes a `manifest.json` next to
//! them; `kljn rerun --manifest <file>` replays the recorded command and
//! reproduces the data files byte for byte.

mod run;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

const AFTER_HELP: &str = "Every option can also be set through an environment variable with the \
KLJN_ prefix (KLJN_SEED, KLJN_OUT_DIR, ...); a flag on the command line wins over the variable.\n\
Exit codes: 0 success, 2 invalid configuration, 3 I/O failure, 4 verification failure.";

#[derive(Parser)]
#[command(
    name = "kljn",
    version,
    about = "Deterministic thermal-noise key exchange toolkit",
    after_help = AFTER_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a noise series plus spectral, normality, and wire reports
    Noise(NoiseOpts),
    /// Run bit exchange periods, logging every round and a summary
    Exchange(ExchangeOpts),
    /// Accumulate a key of fixed bit length from fresh periods
    Keygen(KeygenOpts),
    /// Build an identity document from a generated or supplied key
    Did(DidOpts),
    /// Run the built-in invariant checks and print a pass/fail table
    Verify(VerifyOpts),
    /// Reproduce a previous run from its manifest
    Rerun(RerunOpts),
}

/// Electrical parameters shared by every simulation command.
#[derive(Args, Clone, Serialize, Deserialize)]
pub struct CircuitOpts {
    /// High resistor, ohms
    #[arg(long, env = "KLJN_RH", default_value_t = 1e5)]
    pub rh: f64,
    /// Low resistor, ohms
    #[arg(long, env = "KLJN_RL", default_value_t = 1e4)]
    pub rl: f64,
    /// Effective noise temperature, kelvin
    #[arg(long, env = "KLJN_TEFF", default_value_t = 1e18)]
    pub teff: f64,
    /// Shared noise bandwidth, hertz
    #[arg(long, env = "KLJN_BANDWIDTH", default_value_t = 500.0)]
    pub bandwidth: f64,
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct NoiseOpts {
    #[command(flatten)]
    pub circuit: CircuitOpts,
    /// Source samples to draw; must be a power of two
    #[arg(long, env = "KLJN_SAMPLES", default_value_t = 4096)]
    pub samples: usize,
    /// Ensemble members averaged into the series
    #[arg(long, env = "KLJN_ENSEMBLE", default_value_t = 10)]
    pub ensemble: usize,
    /// Segment length for the averaged spectrum
    #[arg(long, env = "KLJN_SEGMENT_LEN", default_value_t = 128)]
    pub segment_len: usize,
    /// Seed behind every random stream of this run
    #[arg(long, env = "KLJN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Directory the output files land in
    #[arg(long, env = "KLJN_OUT_DIR", default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct ExchangeOpts {
    #[command(flatten)]
    pub circuit: CircuitOpts,
    /// Number of bit exchange periods to run
    #[arg(long, env = "KLJN_BEPS", default_value_t = 10_000)]
    pub beps: u64,
    /// Wire samples measured per period
    #[arg(long, env = "KLJN_BEP_SAMPLES", default_value_t = 1000)]
    pub bep_samples: usize,
    /// Seed behind every random stream of this run
    #[arg(long, env = "KLJN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fixed choice schedule such as HL or HL,LH,HH; cycled over the
    /// periods in place of the coin flips
    #[arg(long, env = "KLJN_FORCE_CHOICES")]
    pub force_choices: Option<String>,
    /// Fan periods across worker threads; outputs are merged by period
    /// index and stay identical to a single-threaded run
    #[arg(long, env = "KLJN_PARALLEL")]
    pub parallel: bool,
    /// Directory the output files land in
    #[arg(long, env = "KLJN_OUT_DIR", default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct KeygenOpts {
    #[command(flatten)]
    pub circuit: CircuitOpts,
    /// Key length in bits; must be a positive multiple of four
    #[arg(long, env = "KLJN_LENGTH", default_value_t = 256)]
    pub length: usize,
    /// Wire samples measured per period
    #[arg(long, env = "KLJN_BEP_SAMPLES", default_value_t = 1000)]
    pub bep_samples: usize,
    /// Seed behind every random stream of this run
    #[arg(long, env = "KLJN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Abort if the key needs more than this many periods
    #[arg(long, env = "KLJN_MAX_BEPS")]
    pub max_beps: Option<u64>,
    /// Directory the output files land in
    #[arg(long, env = "KLJN_OUT_DIR", default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct DidOpts {
    #[command(flatten)]
    pub circuit: CircuitOpts,
    /// Human-readable alias recorded in the document
    #[arg(long, env = "KLJN_ALIAS")]
    pub alias: String,
    /// Network qualifier, e.g. goerli; lowercase letters and digits
    #[arg(long, env = "KLJN_NETWORK")]
    pub network: Option<String>,
    /// Use this 64-character hex key instead of generating one
    #[arg(long, env = "KLJN_KEY_HEX")]
    pub key_hex: Option<String>,
    /// Wire samples measured per period when generating
    #[arg(long, env = "KLJN_BEP_SAMPLES", default_value_t = 1000)]
    pub bep_samples: usize,
    /// Seed behind every random stream of this run
    #[arg(long, env = "KLJN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Abort if key generation needs more than this many periods
    #[arg(long, env = "KLJN_MAX_BEPS")]
    pub max_beps: Option<u64>,
    /// Directory the output files land in
    #[arg(long, env = "KLJN_OUT_DIR", default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Args, Clone)]
pub struct VerifyOpts {
    /// Reduced sample counts; finishes in a few seconds
    #[arg(long, env = "KLJN_QUICK")]
    pub quick: bool,
    /// Run one deliberately broken check to exercise the failure path
    #[arg(long, hide = true)]
    pub inject_failure: bool,
}

#[derive(Args, Clone)]
pub struct RerunOpts {
    /// Manifest written by a previous run
    #[arg(long, env = "KLJN_MANIFEST")]
    pub manifest: PathBuf,
    /// Directory for the reproduced files; defaults to the manifest's
    #[arg(long, env = "KLJN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run::dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
