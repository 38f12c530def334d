//! Integers in JSON: a plain number when it fits in i64, a decimal string
//! otherwise. Both forms are accepted on input.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Int(pub BigInt);

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(i) => s.serialize_i64(i),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Signed(i64),
            Unsigned(u64),
            Text(String),
        }
        Ok(Int(match Raw::deserialize(d)? {
            Raw::Signed(i) => i.into(),
            Raw::Unsigned(u) => u.into(),
            Raw::Text(t) => t.trim().parse().map_err(|_| D::Error::custom(format!("not an integer: {t:?}")))?,
        }))
    }
}

fn wrap(v: &[BigInt]) -> Vec<Int> {
    v.iter().cloned().map(Int).collect()
}

fn unwrap(v: Vec<Int>) -> Vec<BigInt> {
    v.into_iter().map(|i| i.0).collect()
}

/// `#[serde(with)]` for `Vec<BigInt>`.
pub mod seq {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        wrap(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<Int>::deserialize(d).map(unwrap)
    }
}

/// `#[serde(with)]` for `Vec<Vec<BigInt>>`.
pub mod rows {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|r| wrap(r)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        Ok(Vec::<Vec<Int>>::deserialize(d)?.into_iter().map(unwrap).collect())
    }
}

/// `#[serde(with)]` for `Option<Vec<Vec<BigInt>>>`.
pub mod opt_rows {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Vec<BigInt>>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|m| m.iter().map(|r| wrap(r)).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vec<BigInt>>>, D::Error> {
        Ok(Option::<Vec<Vec<Int>>>::deserialize(d)?.map(|m| m.into_iter().map(unwrap).collect()))
    }
}
