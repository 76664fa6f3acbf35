use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One bit per non-class attribute, in schema order. Serialized as a string
/// of `0`/`1` characters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if !bits.iter().any(|&b| b) {
            return Err(Error::Mask("at least one feature must be selected".into()));
        }
        Ok(FeatureMask { bits })
    }

    pub fn all(n: usize) -> Self {
        assert!(n > 0, "mask over zero features");
        FeatureMask {
            bits: vec![true; n],
        }
    }

    /// Mask selecting only the listed features.
    pub fn only(n: usize, features: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n];
        for &f in features {
            if f >= n {
                return Err(Error::Mask(format!(
                    "feature {f} out of range for {n} features"
                )));
            }
            bits[f] = true;
        }
        Self::new(bits)
    }

    /// Builds a mask from raw bits, setting one uniformly random bit if
    /// none are set.
    pub fn repaired<R: Rng + ?Sized>(mut bits: Vec<bool>, rng: &mut R) -> Self {
        assert!(!bits.is_empty(), "mask over zero features");
        if !bits.iter().any(|&b| b) {
            let i = rng.random_range(0..bits.len());
            bits[i] = true;
        }
        FeatureMask { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of the selected features.
    pub fn selected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn union(&self, other: &FeatureMask) -> FeatureMask {
        assert_eq!(self.len(), other.len());
        FeatureMask {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::Mask(format!(
                "mask has {} bits but the schema has {n} features",
                self.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::Mask(format!("unexpected character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureMask::new(bits)
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
