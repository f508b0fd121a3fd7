//! Seed-substream derivation shared by every randomized component.
//!
//! A single u64 seed keys a ChaCha12 generator; independent substreams are
//! selected through the ChaCha stream counter, laid out as
//! `(domain << 56) | index`. Domains keep consumers apart, so changing how
//! much one consumer draws (say, samples per bit exchange period) can never
//! shift what another sees (the coin flips).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Ensemble members of the raw Gaussian generator.
pub const DOMAIN_ENSEMBLE: u8 = 0;
/// Per-period resistor coin flips, Alice's then Bob's.
pub const DOMAIN_COIN: u8 = 1;
/// Alice's generator noise, one stream per bit exchange period.
pub const DOMAIN_NOISE_ALICE: u8 = 2;
/// Bob's generator noise, one stream per bit exchange period.
pub const DOMAIN_NOISE_BOB: u8 = 3;
/// Standalone voltage traces (realization export).
pub const DOMAIN_TRACE: u8 = 4;

const INDEX_BITS: u32 = 56;

/// Returns the deterministic substream `(domain, index)` of the generator
/// keyed by `seed`.
///
/// Panics if `index` needs more than 56 bits; period counts stay far below.
pub fn substream(seed: u64, domain: u8, index: u64) -> ChaCha12Rng {
    assert!(index < 1 << INDEX_BITS, "substream index overflow");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(domain) << INDEX_BITS | index);
    rng
}
