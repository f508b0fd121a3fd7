//! From key bits to a decentralized identifier: a 256-bit exchange key is
//! read as a secp256k1 private scalar, the public point comes out of the
//! hand-built curve arithmetic in [`curve`], and the document rendering
//! carries the public key in compressed form inside the did and in
//! uncompressed form everywhere a key id appears.

mod curve;

use crate::exchange::KeyMaterial;
use crate::keycodec::BitString;
use curve::{Point, ORDER_N};
use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

/// Signing algorithm names advertised in every key entry, in this order.
pub const SIGNING_ALGORITHMS: [&str; 6] = [
    "ES256K",
    "ES256K-R",
    "eth_signTransaction",
    "eth_signTypedData",
    "eth_signMessage",
    "eth_rawSign",
];

#[derive(Debug, Error, PartialEq)]
pub enum IdentityError {
    #[error("key does not map into [1, n-1] on secp256k1")]
    KeyOutOfRange,
    #[error("private keys take exactly 256 bits, got {0}")]
    InvalidKeyLength(usize),
    #[error("network {0:?} must be lowercase alphanumeric")]
    InvalidNetwork(String),
}

/// A scalar in [1, n-1]. Out-of-range inputs are rejected, never reduced;
/// the caller is expected to run more exchange periods and retry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    scalar: BigUint,
}

impl PrivateKey {
    pub fn to_hex(&self) -> String {
        format!("{:064x}", self.scalar)
    }
}

/// An affine point on secp256k1, checked at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    x: BigUint,
    y: BigUint,
}

/// One key entry of the document.
#[derive(Debug, Clone, Serialize)]
pub struct KeyEntry {
    #[serde(rename = "type")]
    pub key_type: String,
    pub kid: String,
    #[serde(rename = "publicKeyHex")]
    pub public_key_hex: String,
    pub meta: KeyMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyMeta {
    pub algorithms: Vec<String>,
}

/// The identity document; serde renders fields in this declaration order,
/// which is the interface's field order.
#[derive(Debug, Clone, Serialize)]
pub struct DidDocument {
    pub did: String,
    #[serde(rename = "controllerKeyId")]
    pub controller_key_id: String,
    pub keys: Vec<KeyEntry>,
    pub kms: String,
    pub services: Vec<serde_json::Value>,
    pub provider: String,
    pub alias: String,
}

impl DidDocument {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Reads 256 bits, MSB first, as a private scalar.
pub fn private_key_from_bits(bits: &BitString) -> Result<PrivateKey, IdentityError> {
    if bits.len() != 256 {
        return Err(IdentityError::InvalidKeyLength(bits.len()));
    }
    let mut bytes = [0u8; 32];
    for (i, &bit) in bits.bits().iter().enumerate() {
        if bit {
            bytes[i / 8] |= 1 << (7 - i % 8);
        }
    }
    let scalar = BigUint::from_bytes_be(&bytes);
    if scalar.is_zero() || scalar >= *ORDER_N {
        return Err(IdentityError::KeyOutOfRange);
    }
    Ok(PrivateKey { scalar })
}

/// Reads an accumulated exchange key as a private scalar.
pub fn derive_private_key(key: &KeyMaterial) -> Result<PrivateKey, IdentityError> {
    private_key_from_bits(&key.bits)
}

/// scalar * G; the result is asserted onto the curve on every derivation.
pub fn public_from_private(private: &PrivateKey) -> PublicKey {
    let point = Point::scalar_mul(&private.scalar, &Point::generator());
    match point {
        Point::Affine { x, y } => {
            let key = PublicKey { x, y };
            assert!(
                Point::Affine {
                    x: key.x.clone(),
                    y: key.y.clone()
                }
                .is_on_curve(),
                "derived point left the curve"
            );
            key
        }
        // unreachable for scalars in [1, n-1]
        Point::Infinity => unreachable!("scalar in range cannot map to infinity"),
    }
}

/// 33-byte SEC form as hex: 02/03 parity prefix plus the x coordinate.
pub fn compress_public(public: &PublicKey) -> String {
    let prefix = if (&public.y % 2u32).is_zero() {
        "02"
    } else {
        "03"
    };
    format!("{prefix}{:064x}", public.x)
}

/// 65-byte SEC form as hex: 04 prefix plus both coordinates.
pub fn uncompressed_hex(public: &PublicKey) -> String {
    format!("04{:064x}{:064x}", public.x, public.y)
}

/// Assembles the document. The did embeds the compressed key; the key id
/// slots all carry the uncompressed form, and kms is always the local store.
pub fn build_did_document(
    public: &PublicKey,
    alias: &str,
    network: Option<&str>,
) -> Result<DidDocument, IdentityError> {
    if let Some(net) = network {
        if net.is_empty()
            || !net
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        {
            return Err(IdentityError::InvalidNetwork(net.to_string()));
        }
    }
    let compressed = compress_public(public);
    let uncompressed = uncompressed_hex(public);
    let provider = match network {
        Some(net) => format!("did:ethr:{net}"),
        None => "did:ethr".to_string(),
    };
    let did = format!("{provider}:0x{compressed}");
    Ok(DidDocument {
        did,
        controller_key_id: uncompressed.clone(),
        keys: vec![KeyEntry {
            key_type: "Secp256k1".to_string(),
            kid: uncompressed.clone(),
            public_key_hex: uncompressed,
            meta: KeyMeta {
                algorithms: SIGNING_ALGORITHMS.iter().map(|s| s.to_string()).collect(),
            },
        }],
        kms: "local".to_string(),
        services: Vec::new(),
        provider,
        alias: alias.to_string(),
    })
}
