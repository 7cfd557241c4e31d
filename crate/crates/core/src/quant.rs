//! Scalar-weight quantization for inverted-index storage.
//!
//! Two methods are supported:
//!
//! * `range-nbits`: map a weight in (0, R] linearly onto [1, 2^b - 1],
//!   rounding half away from zero and clamping overshooting weights to the
//!   top of the range;
//! * `scale-100`: multiply by 100 and round, with a floor of 1.
//!
//! Both are monotone, and both quantize query vectors with the same
//! configuration as documents so that query-document scores stay pure
//! integer dot products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::{QuantizedWeights, TermWeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizationMethod {
    RangeNbits,
    Scale100,
}

impl std::fmt::Display for QuantizationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuantizationMethod::RangeNbits => write!(f, "range-nbits"),
            QuantizationMethod::Scale100 => write!(f, "scale-100"),
        }
    }
}

impl std::str::FromStr for QuantizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range-nbits" => Ok(QuantizationMethod::RangeNbits),
            "scale-100" => Ok(QuantizationMethod::Scale100),
            other => Err(Error::Config(format!(
                "unknown quantization method '{other}' (expected 'range-nbits' or 'scale-100')"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationConfig {
    pub method: QuantizationMethod,
    /// Expected score range (0, R]; only used by range-nbits.
    pub original_score_range: f64,
    /// Bits per stored impact, in [2, 16]; only used by range-nbits.
    pub nbits: u8,
}

impl Default for QuantizationConfig {
    fn default() -> Self {
        QuantizationConfig {
            method: QuantizationMethod::RangeNbits,
            original_score_range: 5.0,
            nbits: 8,
        }
    }
}

impl QuantizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.method == QuantizationMethod::RangeNbits {
            if !self.original_score_range.is_finite() || self.original_score_range <= 0.0 {
                return Err(Error::Config(format!(
                    "original_score_range must be a positive finite number, got {}",
                    self.original_score_range
                )));
            }
            if !(2..=16).contains(&self.nbits) {
                return Err(Error::Config(format!(
                    "quantization_nbits must be in [2, 16], got {}",
                    self.nbits
                )));
            }
        }
        Ok(())
    }

    fn max_value(&self) -> u32 {
        (1u32 << self.nbits) - 1
    }
}

fn check_positive(w: f64) -> Result<()> {
    if !w.is_finite() || w <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "weight must be finite and positive, got {w}"
        )));
    }
    Ok(())
}

/// Maps w onto [1, 2^b - 1] via round(w * (2^b - 1) / R) with clamping.
/// f64::round rounds half away from zero.
pub fn quantize_range_nbits(w: f64, cfg: &QuantizationConfig) -> Result<u32> {
    check_positive(w)?;
    cfg.validate()?;
    let top = cfg.max_value();
    let scaled = (w * top as f64 / cfg.original_score_range).round();
    Ok((scaled as i64).clamp(1, top as i64) as u32)
}

/// round(w * 100), with a floor of 1 so positive weights never vanish.
pub fn quantize_scale100(w: f64) -> Result<u32> {
    check_positive(w)?;
    let scaled = (w * 100.0).round() as i64;
    Ok(scaled.max(1) as u32)
}

/// Applies the configured scalar quantizer entry-wise; the entry count is
/// preserved. Returns the quantized vector together with the number of
/// weights that overshot the configured range and were clamped.
pub fn quantize_vector(
    rep: &TermWeightVector,
    cfg: &QuantizationConfig,
) -> Result<(QuantizedWeights, u64)> {
    cfg.validate()?;
    let mut out = QuantizedWeights::new();
    let mut clamped = 0u64;
    for (tok, w) in rep.iter() {
        let q = match cfg.method {
            QuantizationMethod::RangeNbits => {
                if w > cfg.original_score_range {
                    clamped += 1;
                }
                quantize_range_nbits(w, cfg)?
            }
            QuantizationMethod::Scale100 => quantize_scale100(w)?,
        };
        out.insert(tok, q);
    }
    Ok((out, clamped))
}
