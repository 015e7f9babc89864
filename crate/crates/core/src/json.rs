//! Canonical JSON encoding for reports.
//!
//! Keys are sorted (serde_json's default map is ordered), exact integers are
//! written as decimal strings, rationals as `{"num", "den"}` and reals are
//! rounded to 12 significant digits.

use num_rational::BigRational;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Serializes an exact rational as `{"num": "..", "den": ".."}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frac<'a>(pub &'a BigRational);

impl Serialize for Frac<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("den", &self.0.denom().to_string())?;
        m.serialize_entry("num", &self.0.numer().to_string())?;
        m.end()
    }
}

pub mod big {
    use super::*;

    pub fn serialize<T: std::fmt::Display, S: Serializer>(
        v: &T,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }
}

pub mod big_vec {
    use super::*;

    pub fn serialize<T: std::fmt::Display, S: Serializer>(
        v: &[T],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }
}

pub mod opt_big {
    use super::*;

    pub fn serialize<T: std::fmt::Display, S: Serializer>(
        v: &Option<T>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }
}

pub mod frac {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        Frac(v).serialize(s)
    }
}

pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(round12(*v))
        } else {
            s.serialize_none()
        }
    }
}

pub mod opt_real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_f64(round12(*x)),
            _ => s.serialize_none(),
        }
    }
}

/// Converts a report into a key-sorted JSON value.
pub fn to_value<T: Serialize>(report: &T) -> Result<Value> {
    serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_canonical_string<T: Serialize>(report: &T) -> Result<String> {
    let value = to_value(report)?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
