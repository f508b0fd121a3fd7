//! Binary/hex key codec.
//!
//! Nibbles are read most significant bit first; hex output is lowercase and
//! carries no 0x prefix, parsing accepts either case. A 256-bit key is
//! always 64 hex characters.

use serde::{Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KeycodecError {
    #[error("bit string length {0} is not a multiple of four")]
    LengthNotMultipleOfFour(usize),
    #[error("invalid hex character {0:?}")]
    InvalidHexCharacter(char),
    #[error("invalid bit character {0:?}, expected '0' or '1'")]
    InvalidBitCharacter(char),
    #[error("empty input")]
    Empty,
}

/// An ordered sequence of bits, rendered as a '0'/'1' string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = KeycodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(KeycodecError::InvalidBitCharacter(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Packs bits into lowercase hex, four bits per character, MSB first.
pub fn binary_to_hex(bits: &BitString) -> Result<String, KeycodecError> {
    if bits.is_empty() {
        return Err(KeycodecError::Empty);
    }
    if !bits.len().is_multiple_of(4) {
        return Err(KeycodecError::LengthNotMultipleOfFour(bits.len()));
    }
    let mut out = String::with_capacity(bits.len() / 4);
    for nibble in bits.bits().chunks(4) {
        let v = nibble
            .iter()
            .fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        out.push(char::from_digit(v, 16).expect("nibble fits"));
    }
    Ok(out)
}

/// Expands hex (either case, no prefix) back into bits, four per character.
pub fn hex_to_binary(hex: &str) -> Result<BitString, KeycodecError> {
    if hex.is_empty() {
        return Err(KeycodecError::Empty);
    }
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let v = c
            .to_digit(16)
            .ok_or(KeycodecError::InvalidHexCharacter(c))?;
        for shift in (0..4).rev() {
            bits.push(v >> shift & 1 == 1);
        }
    }
    Ok(BitString(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_the_reference_prefix() {
        let bits: BitString = "1111001110100100".parse().unwrap();
        assert_eq!(binary_to_hex(&bits).unwrap(), "f3a4");
    }

    #[test]
    fn expands_either_case() {
        let bits = hex_to_binary("F3a4").unwrap();
        assert_eq!(bits.to_string(), "1111001110100100");
    }

    #[test]
    fn single_nibbles() {
        for (s, h) in [("0000", "0"), ("0101", "5"), ("1111", "f"), ("1000", "8")] {
            let bits: BitString = s.parse().unwrap();
            assert_eq!(binary_to_hex(&bits).unwrap(), h);
            assert_eq!(hex_to_binary(h).unwrap(), bits);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let bits: BitString = "10101".parse().unwrap();
        assert_eq!(
            binary_to_hex(&bits),
            Err(KeycodecError::LengthNotMultipleOfFour(5))
        );
        assert_eq!(
            hex_to_binary("0xff"),
            Err(KeycodecError::InvalidHexCharacter('x'))
        );
        assert_eq!(hex_to_binary(""), Err(KeycodecError::Empty));
        assert_eq!(
            "012".parse::<BitString>(),
            Err(KeycodecError::InvalidBitCharacter('2'))
        );
        assert_eq!(
            binary_to_hex(&BitString::from_bools(vec![])),
            Err(KeycodecError::Empty)
        );
    }

    #[test]
    fn serializes_as_a_plain_string() {
        let bits: BitString = "0101".parse().unwrap();
        assert_eq!(serde_json::to_string(&bits).unwrap(), "\"0101\"");
    }
}
