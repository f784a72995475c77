//! JSON reports. Quantities that can be undefined (a singular matrix, a
//! nonpositive `G`) are written as the string `"undefined"`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const UNDEFINED: &str = "undefined";

/// Serde adapter for `Option<f64>`: `None` and non-finite values become
/// `"undefined"`.
pub mod maybe {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    use super::UNDEFINED;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            _ => s.serialize_str(UNDEFINED),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Option<f64>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or \"{UNDEFINED}\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(Some(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == UNDEFINED {
                    Ok(None)
                } else {
                    Err(E::custom(format!("expected a number or \"{UNDEFINED}\", got \"{v}\"")))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Where the `G` factor of the lower bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GSource {
    /// Maximum over every realizable pattern: a valid certificate.
    Enumerated,
    /// Maximum over a sample: overestimates `G`, so the lower bound is heuristic.
    SampledHeuristic,
}

/// Spectral summary and every bound for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: usize,
    pub c: f64,
    pub beta: f64,
    /// `lambda_max(X X^T)`.
    pub lambda_max_gram: f64,
    /// `lambda_min` of the expected activation Gram matrix.
    pub lambda_min_m: f64,
    #[serde(with = "maybe")]
    pub kappa: Option<f64>,
    #[serde(rename = "G", with = "maybe")]
    pub g: Option<f64>,
    pub g_source: GSource,
    /// Upper bound on the sampled gated optimum.
    #[serde(with = "maybe")]
    pub upper_gated: Option<f64>,
    /// Lower bound on the full optimum.
    #[serde(with = "maybe")]
    pub lower_full: Option<f64>,
    /// Relative factor between the sampled and the full optimum.
    #[serde(with = "maybe")]
    pub tighter_upper_factor: Option<f64>,
    /// Brute-force bound on `max_i sqrt(y^T M_i y)`, when `n` is small enough.
    #[serde(with = "maybe")]
    pub maxcut_value: Option<f64>,
    pub delta: f64,
    /// Pattern counts (and the network width) needed by each guarantee.
    pub sample_thresholds: BTreeMap<String, u64>,
}

pub fn save_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
