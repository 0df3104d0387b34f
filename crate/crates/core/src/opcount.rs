//! Closed-form operation counting for vanilla softmax attention vs. linear
//! Taylor attention, aggregated over heads and layers.
//!
//! Per head per layer, the vanilla kernel costs
//! `mul = 2n²d`, `add = 2n²d + n²`, `div = exp = n²`,
//! and the Taylor kernel costs
//! `mul = 2nd² + nd`, `add = 2nd² + 7nd`, `div = nd + d`, `exp = 0`.
//! Counts are exact integers; the one-decimal "millions" rendering is a
//! report-layer concern (see [`format_millions`]).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpCountError {
    #[error("{field} must be at least 1, got {value}")]
    InvalidDims { field: &'static str, value: u64 },
    #[error("operation count overflow computing {what} (counts are held in 64-bit unsigned)")]
    Overflow { what: &'static str },
    #[error("model '{name}' has no stages")]
    EmptyModel { name: String },
}

#[derive(Debug, Error)]
pub enum ModelConfigError {
    #[error("failed to read model config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse model config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("model config {path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: OpCountError,
    },
}

/// Attention dimensions for one model stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionDims {
    /// token count
    pub n: u64,
    /// per-head feature dimension
    pub d: u64,
    /// head count
    pub h: u64,
    /// layer count
    pub layers: u64,
}

impl AttentionDims {
    pub fn new(n: u64, d: u64, h: u64, layers: u64) -> Result<Self, OpCountError> {
        let dims = Self { n, d, h, layers };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<(), OpCountError> {
        for (field, value) in [
            ("n", self.n),
            ("d", self.d),
            ("h", self.h),
            ("layers", self.layers),
        ] {
            if value == 0 {
                return Err(OpCountError::InvalidDims { field, value });
            }
        }
        Ok(())
    }
}

impl fmt::Display for AttentionDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} d={} h={} layers={}",
            self.n, self.d, self.h, self.layers
        )
    }
}

/// Multiplication/addition/division/exponentiation tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub mul: u64,
    pub add: u64,
    pub div: u64,
    pub exp: u64,
}

impl OpCounts {
    pub fn checked_add(self, other: OpCounts) -> Result<OpCounts, OpCountError> {
        let add = |a: u64, b: u64, what| {
            a.checked_add(b).ok_or(OpCountError::Overflow { what })
        };
        Ok(OpCounts {
            mul: add(self.mul, other.mul, "mul total")?,
            add: add(self.add, other.add, "add total")?,
            div: add(self.div, other.div, "div total")?,
            exp: add(self.exp, other.exp, "exp total")?,
        })
    }
}

/// One stage of a model config file; `vanilla_n` optionally overrides the
/// token count used for the vanilla-softmax side only (some published counts
/// include the class token in the baseline but not in the linear kernel).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub n: u64,
    pub d: u64,
    pub h: u64,
    pub layers: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanilla_n: Option<u64>,
}

impl StageConfig {
    pub fn dims(&self) -> AttentionDims {
        AttentionDims {
            n: self.n,
            d: self.d,
            h: self.h,
            layers: self.layers,
        }
    }

    pub fn vanilla_dims(&self) -> AttentionDims {
        AttentionDims {
            n: self.vanilla_n.unwrap_or(self.n),
            ..self.dims()
        }
    }
}

/// A named model as a list of attention stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagedModel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub stages: Vec<StageConfig>,
}

impl StagedModel {
    pub fn validate(&self) -> Result<(), OpCountError> {
        if self.stages.is_empty() {
            return Err(OpCountError::EmptyModel {
                name: self.name.clone(),
            });
        }
        for stage in &self.stages {
            stage.dims().validate()?;
            stage.vanilla_dims().validate()?;
        }
        Ok(())
    }

    pub fn stage_dims(&self) -> Vec<AttentionDims> {
        self.stages.iter().map(StageConfig::dims).collect()
    }
}

/// Load and validate a model config file (JSON).
pub fn load_staged_model(path: &Path) -> Result<StagedModel, ModelConfigError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ModelConfigError::Io {
        path: display.clone(),
        source,
    })?;
    let model: StagedModel =
        serde_json::from_str(&text).map_err(|source| ModelConfigError::Parse {
            path: display.clone(),
            source,
        })?;
    model.validate().map_err(|source| ModelConfigError::Invalid {
        path: display,
        source,
    })?;
    Ok(model)
}

fn checked_u64(value: u128, what: &'static str) -> Result<u64, OpCountError> {
    u64::try_from(value).map_err(|_| OpCountError::Overflow { what })
}

/// Operation counts for vanilla softmax attention over `h·layers` heads.
pub fn count_vanilla(dims: &AttentionDims) -> Result<OpCounts, OpCountError> {
    dims.validate()?;
    let n = dims.n as u128;
    let d = dims.d as u128;
    let hl = dims.h as u128 * dims.layers as u128;
    Ok(OpCounts {
        mul: checked_u64(2 * n * n * d * hl, "vanilla mul")?,
        add: checked_u64((2 * n * n * d + n * n) * hl, "vanilla add")?,
        div: checked_u64(n * n * hl, "vanilla div")?,
        exp: checked_u64(n * n * hl, "vanilla exp")?,
    })
}

/// Operation counts for linear Taylor attention over `h·layers` heads.
/// The Taylor path has no exponentiations.
pub fn count_taylor(dims: &AttentionDims) -> Result<OpCounts, OpCountError> {
    dims.validate()?;
    let n = dims.n as u128;
    let d = dims.d as u128;
    let hl = dims.h as u128 * dims.layers as u128;
    Ok(OpCounts {
        mul: checked_u64((2 * n * d * d + n * d) * hl, "taylor mul")?,
        add: checked_u64((2 * n * d * d + 7 * n * d) * hl, "taylor add")?,
        div: checked_u64((n * d + d) * hl, "taylor div")?,
        exp: 0,
    })
}

/// The closed-form operation-number ratios:
/// `r_mul = 2n/(2d+1)`, `r_add = (2d+1)n/((2d+7)d)`, `r_div = n²/((n+1)d)`.
pub fn ratio_formulas(n: u64, d: u64) -> (f64, f64, f64) {
    let (nf, df) = (n as f64, d as f64);
    let r_mul = 2.0 * nf / (2.0 * df + 1.0);
    let r_add = (2.0 * df + 1.0) * nf / ((2.0 * df + 7.0) * df);
    let r_div = nf * nf / ((nf + 1.0) * df);
    (r_mul, r_add, r_div)
}

/// One model's row of the comparison table: summed counts for both kernels
/// plus the vanilla/Taylor ratio per operation class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelTableRow {
    pub name: String,
    pub taylor: OpCounts,
    pub vanilla: OpCounts,
    pub mul_ratio: f64,
    pub add_ratio: f64,
    pub div_ratio: f64,
}

/// Build the comparison table. An empty model list yields an empty table.
pub fn model_table(models: &[StagedModel]) -> Result<Vec<ModelTableRow>, OpCountError> {
    models
        .iter()
        .map(|model| {
            model.validate()?;
            let mut taylor = OpCounts::default();
            let mut vanilla = OpCounts::default();
            for stage in &model.stages {
                taylor = taylor.checked_add(count_taylor(&stage.dims())?)?;
                vanilla = vanilla.checked_add(count_vanilla(&stage.vanilla_dims())?)?;
            }
            Ok(ModelTableRow {
                name: model.name.clone(),
                mul_ratio: vanilla.mul as f64 / taylor.mul as f64,
                add_ratio: vanilla.add as f64 / taylor.add as f64,
                div_ratio: vanilla.div as f64 / taylor.div as f64,
                taylor,
                vanilla,
            })
        })
        .collect()
}

/// Render an exact count as millions with one decimal, e.g. `58254336` → `"58.3"`.
pub fn format_millions(count: u64) -> String {
    format!("{:.1}", count as f64 / 1e6)
}

/// Render a ratio the way the comparison table prints it, e.g. `"(3.1×)"`.
pub fn format_ratio(ratio: f64) -> String {
    format!("({ratio:.1}×)")
}
