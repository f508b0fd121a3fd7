//! Kirchhoff-law Johnson-noise (KLJN) key exchange in simulation.
//!
//! Two parties each connect a high or a low resistor to a shared wire for one
//! bit exchange period. The wire carries the superposed Johnson noise of both
//! resistors, and its mean-square voltage falls into one of three levels.
//! The middle level (one high, one low) is the secure one: an eavesdropper
//! measuring the wire cannot tell which side holds which resistor, while each
//! party, knowing its own choice, can. Accumulated secure bits become a hex
//! key, which in turn seeds a secp256k1 keypair and a DID document.
//!
//! Every randomized path draws from documented substreams of a single u64
//! seed (see [`stream`]), so identical inputs reproduce identical outputs
//! bit for bit.

#![deny(unsafe_code)]

pub mod circuit;
pub mod exchange;
pub mod export;
pub mod identity;
pub mod keycodec;
pub mod noise;
pub mod stream;

/// Boltzmann constant used by every Johnson-level computation, J/K.
pub const BOLTZMANN_J_PER_K: f64 = 1.38e-23;
