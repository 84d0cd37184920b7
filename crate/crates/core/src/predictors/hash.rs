use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps a block address onto a `bits`-wide predictor-table index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bits")]
pub enum HashScheme {
    /// Lower `bits` of the block address.
    Bitmask(u32),
    /// Lower `bits` of splitmix32 over the block address folded to 32 bits.
    SplitMix32(u32),
}

impl HashScheme {
    pub fn bits(self) -> u32 {
        match self {
            HashScheme::Bitmask(b) | HashScheme::SplitMix32(b) => b,
        }
    }

    pub fn entries(self) -> usize {
        1usize << self.bits()
    }

    pub fn validate(self) -> Result<()> {
        let b = self.bits();
        if b == 0 || b > 32 {
            return Err(Error::Config(format!(
                "hash width must be in 1..=32 bits, got {b}"
            )));
        }
        Ok(())
    }

    pub fn index(self, block: u64) -> u64 {
        let mask = (1u64 << self.bits()) - 1;
        match self {
            HashScheme::Bitmask(_) => block & mask,
            HashScheme::SplitMix32(_) => {
                let folded = (block as u32) ^ ((block >> 32) as u32);
                splitmix32(folded) as u64 & mask
            }
        }
    }
}

impl fmt::Display for HashScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HashScheme::Bitmask(b) => write!(f, "bitmask{b}"),
            HashScheme::SplitMix32(b) => write!(f, "splitmix32-{b}"),
        }
    }
}

impl FromStr for HashScheme {
    type Err = Error;

    /// Accepts `bitmask17`, `bitmask:17`, `splitmix32-17`, `splitmix32:17`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let bad = || Error::Config(format!("bad hash scheme '{s}'"));
        let (kind, bits) = if let Some(rest) = s.strip_prefix("splitmix32") {
            ("splitmix32", rest.trim_start_matches([':', '-']))
        } else if let Some(rest) = s.strip_prefix("bitmask") {
            ("bitmask", rest.trim_start_matches([':', '-']))
        } else {
            return Err(bad());
        };
        let bits: u32 = bits.parse().map_err(|_| bad())?;
        let h = if kind == "bitmask" {
            HashScheme::Bitmask(bits)
        } else {
            HashScheme::SplitMix32(bits)
        };
        h.validate()?;
        Ok(h)
    }
}

pub fn splitmix32(x: u32) -> u32 {
    let mut z = x.wrapping_add(0x9e37_79b9);
    z = (z ^ (z >> 16)).wrapping_mul(0x85eb_ca6b);
    z = (z ^ (z >> 13)).wrapping_mul(0xc2b2_ae35);
    z ^ (z >> 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Undo each finalizer step: xorshift inverses and modular inverses of
    // the two odd multipliers.
    fn unshift(y: u32, s: u32) -> u32 {
        let mut x = y;
        for _ in 0..(32 / s + 1) {
            x = y ^ (x >> s);
        }
        x
    }

    fn mod_inverse(a: u32) -> u32 {
        // Newton iteration for the inverse modulo 2^32
        let mut x = a;
        for _ in 0..5 {
            x = x.wrapping_mul(2u32.wrapping_sub(a.wrapping_mul(x)));
        }
        x
    }

    fn inverse(h: u32) -> u32 {
        let mut z = unshift(h, 16);
        z = unshift(z.wrapping_mul(mod_inverse(0xc2b2_ae35)), 13);
        z = unshift(z.wrapping_mul(mod_inverse(0x85eb_ca6b)), 16);
        z.wrapping_sub(0x9e37_79b9)
    }

    #[test]
    fn splitmix_is_invertible() {
        let mut x = 1u32;
        for _ in 0..10_000 {
            assert_eq!(inverse(splitmix32(x)), x);
            x = x.wrapping_mul(747_796_405).wrapping_add(2_891_336_453);
        }
    }

    #[test]
    fn splitmix_zero_golden() {
        // computed by hand from the three steps above
        let mut z: u32 = 0x9e37_79b9;
        z = (z ^ (z >> 16)).wrapping_mul(0x85eb_ca6b);
        z = (z ^ (z >> 13)).wrapping_mul(0xc2b2_ae35);
        z ^= z >> 16;
        assert_eq!(splitmix32(0), z);
        assert_eq!(splitmix32(0), 0x92ca_2f0e);
    }

    #[test]
    fn avalanche_on_adjacent_inputs() {
        let total: u32 = (0..10_000u32)
            .map(|x| (splitmix32(x) ^ splitmix32(x + 1)).count_ones())
            .sum();
        assert!(total as f64 / 10_000.0 >= 8.0);
    }

    #[test]
    fn bitmask_and_splitmix_differ() {
        let a = HashScheme::Bitmask(19);
        let b = HashScheme::SplitMix32(19);
        let differ = (0..1000u64).filter(|&x| a.index(x) != b.index(x)).count();
        assert!(differ > 990);
        assert_eq!(b.index(12345), b.index(12345));
        assert!((0..1000u64).all(|x| b.index(x) < 1 << 19));
    }

    #[test]
    fn parse_names() {
        assert_eq!("bitmask17".parse::<HashScheme>().unwrap(), HashScheme::Bitmask(17));
        assert_eq!(
            "SplitMix32:18".parse::<HashScheme>().unwrap(),
            HashScheme::SplitMix32(18)
        );
        assert!("crc17".parse::<HashScheme>().is_err());
        assert!("bitmask0".parse::<HashScheme>().is_err());
        let h = HashScheme::SplitMix32(17);
        assert_eq!(h.to_string().parse::<HashScheme>().unwrap(), h);
    }
}
