//! Fixed-length 0/1 decision vectors — the universal solution representation.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// A fixed-length vector of 0/1 decisions.
///
/// Bits are stored as bytes; problem dimensions here are at most a few
/// hundred, so density beats packing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    bits: Vec<u8>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector { bits: vec![0; len] }
    }

    /// Builds from any 0/1 byte slice.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bit values must be 0 or 1".into()));
        }
        Ok(BitVector { bits: bits.to_vec() })
    }

    /// Uniform random vector of the given length.
    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        BitVector {
            bits: (0..len).map(|_| u8::from(rng.gen::<bool>())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: u8) {
        debug_assert!(value <= 1);
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn hamming(&self, other: &BitVector) -> usize {
        debug_assert_eq!(self.len(), other.len());
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// The network-facing encoding: 0.0/1.0 floats.
    pub fn to_floats(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => {
                    return Err(Error::parse(
                        "bitstring",
                        format!("unexpected character {other:?}"),
                    ))
                }
            }
        }
        Ok(BitVector { bits })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitVector::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_and_display_round_trip() {
        let v = BitVector::parse("100110").unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v.to_string(), "100110");
        assert_eq!(v.ones(), 3);
    }

    #[test]
    fn parse_rejects_non_bits() {
        assert!(BitVector::parse("10201").is_err());
    }

    #[test]
    fn hamming_distance() {
        let a = BitVector::parse("1010").unwrap();
        let b = BitVector::parse("1001").unwrap();
        assert_eq!(a.hamming(&b), 2);
        assert_eq!(a.hamming(&a), 0);
    }

    #[test]
    fn random_is_seed_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(BitVector::random(32, &mut r1), BitVector::random(32, &mut r2));
    }
}
