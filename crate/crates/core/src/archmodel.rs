//! Declarative accelerator model: PE-array shapes, processor lane widths,
//! SRAM sizing, clock, and the per-op energy table used by the simulator.
//!
//! The reference configuration is a 64×64 general systolic sub-array plus a
//! 64×1 diagonal sub-array, 64-lane accumulator/adder/divider arrays, four
//! 50 KB SRAM buffers (Q, K, V, O) of 16-bit words, at 500 MHz.
//!
//! Per-op energies are model parameters, not measurements; the one calibrated
//! value is `gs_pe_overhead` (default 1.125), the multiplier the G-stationary
//! schedule pays on every systolic MAC for its reconfigurable PEs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four SRAM operand buffers.
pub const SRAM_BUFFER_NAMES: [&str; 4] = ["Q", "K", "V", "O"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayDims {
    pub rows: u64,
    pub cols: u64,
}

fn default_sa_general() -> ArrayDims {
    ArrayDims { rows: 64, cols: 64 }
}
fn default_sa_diag() -> ArrayDims {
    ArrayDims { rows: 64, cols: 1 }
}
fn default_lanes() -> u64 {
    64
}
fn default_sram_kb() -> u64 {
    50
}
fn default_word_bits() -> u64 {
    16
}
fn default_clock_mhz() -> u64 {
    500
}

/// Accelerator shape parameters, immutable once validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorConfig {
    #[serde(default = "default_sa_general")]
    pub sa_general: ArrayDims,
    #[serde(default = "default_sa_diag")]
    pub sa_diag: ArrayDims,
    #[serde(default = "default_lanes")]
    pub accumulator_lanes: u64,
    #[serde(default = "default_lanes")]
    pub adder_lanes: u64,
    #[serde(default = "default_lanes")]
    pub divider_lanes: u64,
    /// Capacity of each of the Q/K/V/O buffers, in kilobytes.
    #[serde(default = "default_sram_kb")]
    pub sram_kb_per_buffer: u64,
    #[serde(default = "default_word_bits")]
    pub word_bits: u64,
    #[serde(default = "default_clock_mhz")]
    pub clock_mhz: u64,
}

impl Default for AcceleratorConfig {
    fn default() -> Self {
        Self {
            sa_general: default_sa_general(),
            sa_diag: default_sa_diag(),
            accumulator_lanes: default_lanes(),
            adder_lanes: default_lanes(),
            divider_lanes: default_lanes(),
            sram_kb_per_buffer: default_sram_kb(),
            word_bits: default_word_bits(),
            clock_mhz: default_clock_mhz(),
        }
    }
}

impl AcceleratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("sa_general.rows", self.sa_general.rows),
            ("sa_general.cols", self.sa_general.cols),
            ("sa_diag.rows", self.sa_diag.rows),
            ("accumulator_lanes", self.accumulator_lanes),
            ("adder_lanes", self.adder_lanes),
            ("divider_lanes", self.divider_lanes),
            ("sram_kb_per_buffer", self.sram_kb_per_buffer),
            ("word_bits", self.word_bits),
            ("clock_mhz", self.clock_mhz),
        ];
        for (field, value) in positive {
            if value == 0 {
                return Err(ConfigError::Invalid {
                    field,
                    reason: format!("must be at least 1, got {value}"),
                });
            }
        }
        // The diagonal sub-array is a single PE column by construction.
        if self.sa_diag.cols != 1 {
            return Err(ConfigError::Invalid {
                field: "sa_diag.cols",
                reason: format!("must be exactly 1, got {}", self.sa_diag.cols),
            });
        }
        if self.word_bits % 8 != 0 {
            return Err(ConfigError::Invalid {
                field: "word_bits",
                reason: format!("must be a multiple of 8, got {}", self.word_bits),
            });
        }
        Ok(())
    }

    /// Words each SRAM operand buffer holds.
    pub fn sram_words_per_buffer(&self) -> u64 {
        self.sram_kb_per_buffer * 1024 / (self.word_bits / 8)
    }

    /// Seconds per cycle at the configured clock.
    pub fn seconds_per_cycle(&self) -> f64 {
        1.0 / (self.clock_mhz as f64 * 1e6)
    }
}

/// Per-operation energies (arbitrary units, consistent within one table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTable {
    /// One systolic multiply-accumulate.
    pub e_mac: f64,
    /// One adder-array element operation.
    pub e_add: f64,
    /// One divider-array element operation.
    pub e_div: f64,
    /// One accumulator-array element operation.
    pub e_acc: f64,
    /// One SRAM word access (read or write).
    pub e_sram_access: f64,
    /// One DRAM word access; unused unless a config models spills.
    pub e_dram_access: f64,
    /// Multiplier on systolic MAC energy under the G-stationary schedule,
    /// paying for PEs that support both accumulation patterns.
    pub gs_pe_overhead: f64,
}

/// Shipped default energy table.
///
/// The relative magnitudes are ordinary for a 16-bit datapath (a MAC costs a
/// few adds, a divide sits between, SRAM near MAC cost, DRAM two orders
/// higher). `gs_pe_overhead = 1.125` is calibrated so the G-stationary vs.
/// down-forward systolic-energy ratio lands at about 215:191.
pub fn reference_energy_table() -> EnergyTable {
    EnergyTable {
        e_mac: 4.6,
        e_add: 0.9,
        e_div: 3.6,
        e_acc: 1.1,
        e_sram_access: 1.2,
        e_dram_access: 120.0,
        gs_pe_overhead: 1.125,
    }
}

impl Default for EnergyTable {
    fn default() -> Self {
        reference_energy_table()
    }
}

impl EnergyTable {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let nonneg = [
            ("e_mac", self.e_mac),
            ("e_add", self.e_add),
            ("e_div", self.e_div),
            ("e_acc", self.e_acc),
            ("e_sram_access", self.e_sram_access),
            ("e_dram_access", self.e_dram_access),
        ];
        for (field, value) in nonneg {
            if !value.is_finite() || value < 0.0 {
                return Err(ConfigError::Invalid {
                    field,
                    reason: format!("must be finite and nonnegative, got {value}"),
                });
            }
        }
        if !self.gs_pe_overhead.is_finite() || self.gs_pe_overhead < 1.0 {
            return Err(ConfigError::Invalid {
                field: "gs_pe_overhead",
                reason: format!("must be at least 1, got {}", self.gs_pe_overhead),
            });
        }
        Ok(())
    }
}

/// Dataflow selector. `InputStationary`/`OutputStationary` schedule a single
/// matmul; `GStationary`/`DownForward` are the composite attention-level
/// schedules built from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataflowKind {
    InputStationary,
    OutputStationary,
    GStationary,
    DownForward,
}

impl DataflowKind {
    pub const COMPOSITE_NAMES: [&'static str; 2] = ["g-stationary", "down-forward"];

    pub fn parse_composite(name: &str) -> Option<DataflowKind> {
        match name {
            "g-stationary" | "gs" => Some(DataflowKind::GStationary),
            "down-forward" | "df" => Some(DataflowKind::DownForward),
            _ => None,
        }
    }
}

impl std::fmt::Display for DataflowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DataflowKind::InputStationary => "input-stationary",
            DataflowKind::OutputStationary => "output-stationary",
            DataflowKind::GStationary => "g-stationary",
            DataflowKind::DownForward => "down-forward",
        };
        f.write_str(name)
    }
}

fn read_config_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de> + Default>(
    path: &Path,
    text: &str,
) -> Result<T, ConfigError> {
    // An empty or whitespace-only file means "all defaults".
    if text.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Load an accelerator config, filling unspecified fields with defaults.
pub fn load_config(path: &Path) -> Result<AcceleratorConfig, ConfigError> {
    let cfg: AcceleratorConfig = parse_json(path, &read_config_text(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_config(cfg: &AcceleratorConfig, path: &Path) -> Result<(), ConfigError> {
    let text = serde_json::to_string_pretty(cfg).expect("config serializes");
    std::fs::write(path, text).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load an energy table, filling unspecified fields from the reference table.
pub fn load_energy_table(path: &Path) -> Result<EnergyTable, ConfigError> {
    let text = read_config_text(path)?;
    let table: EnergyTable = if text.trim().is_empty() {
        reference_energy_table()
    } else {
        // Partial tables are allowed: parse into a patch over the defaults.
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Patch {
            e_mac: Option<f64>,
            e_add: Option<f64>,
            e_div: Option<f64>,
            e_acc: Option<f64>,
            e_sram_access: Option<f64>,
            e_dram_access: Option<f64>,
            gs_pe_overhead: Option<f64>,
        }
        let patch: Patch =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        let mut t = reference_energy_table();
        if let Some(v) = patch.e_mac {
            t.e_mac = v;
        }
        if let Some(v) = patch.e_add {
            t.e_add = v;
        }
        if let Some(v) = patch.e_div {
            t.e_div = v;
        }
        if let Some(v) = patch.e_acc {
            t.e_acc = v;
        }
        if let Some(v) = patch.e_sram_access {
            t.e_sram_access = v;
        }
        if let Some(v) = patch.e_dram_access {
            t.e_dram_access = v;
        }
        if let Some(v) = patch.gs_pe_overhead {
            t.gs_pe_overhead = v;
        }
        t
    };
    table.validate()?;
    Ok(table)
}

pub fn save_energy_table(table: &EnergyTable, path: &Path) -> Result<(), ConfigError> {
    let text = serde_json::to_string_pretty(table).expect("table serializes");
    std::fs::write(path, text).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_configuration() {
        let cfg = AcceleratorConfig::default();
        assert_eq!(cfg.sa_general, ArrayDims { rows: 64, cols: 64 });
        assert_eq!(cfg.sa_diag, ArrayDims { rows: 64, cols: 1 });
        assert_eq!(cfg.accumulator_lanes, 64);
        assert_eq!(cfg.sram_kb_per_buffer, 50);
        assert_eq!(cfg.word_bits, 16);
        assert_eq!(cfg.clock_mhz, 500);
        assert_eq!(cfg.sram_words_per_buffer(), 25_600);
        cfg.validate().unwrap();
    }

    #[test]
    fn empty_config_file_yields_full_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        std::fs::write(&path, "").unwrap();
        assert_eq!(load_config(&path).unwrap(), AcceleratorConfig::default());
        std::fs::write(&path, "{}").unwrap();
        assert_eq!(load_config(&path).unwrap(), AcceleratorConfig::default());
    }

    #[test]
    fn partial_config_overrides_one_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clock.json");
        std::fs::write(&path, r#"{"clock_mhz": 1000}"#).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.clock_mhz, 1000);
        assert_eq!(cfg.sa_general, ArrayDims { rows: 64, cols: 64 });
    }

    #[test]
    fn wide_diag_array_is_rejected_with_field_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"sa_diag": {"rows": 64, "cols": 2}}"#).unwrap();
        let err = load_config(&path).unwrap_err();
        assert!(err.to_string().contains("sa_diag.cols"), "{err}");
    }

    #[test]
    fn config_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.json");
        let mut cfg = AcceleratorConfig::default();
        cfg.clock_mhz = 750;
        cfg.adder_lanes = 32;
        save_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }

    #[test]
    fn reference_energy_values() {
        let t = reference_energy_table();
        assert_eq!(t.gs_pe_overhead, 1.125);
        for v in [
            t.e_mac,
            t.e_add,
            t.e_div,
            t.e_acc,
            t.e_sram_access,
            t.e_dram_access,
        ] {
            assert!(v >= 0.0);
        }
        t.validate().unwrap();
    }

    #[test]
    fn energy_table_round_trips_and_rejects_bad_overhead() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy.json");
        let mut t = reference_energy_table();
        t.e_sram_access = 2.5;
        save_energy_table(&t, &path).unwrap();
        assert_eq!(load_energy_table(&path).unwrap(), t);

        std::fs::write(&path, r#"{"gs_pe_overhead": 0.5}"#).unwrap();
        assert!(load_energy_table(&path).is_err());
        std::fs::write(&path, r#"{"e_mac": "fast"}"#).unwrap();
        assert!(load_energy_table(&path).is_err());
    }

    #[test]
    fn partial_energy_table_patches_reference() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patch.json");
        std::fs::write(&path, r#"{"gs_pe_overhead": 1.0}"#).unwrap();
        let t = load_energy_table(&path).unwrap();
        assert_eq!(t.gs_pe_overhead, 1.0);
        assert_eq!(t.e_mac, reference_energy_table().e_mac);
    }

    #[test]
    fn composite_dataflow_names_parse() {
        assert_eq!(
            DataflowKind::parse_composite("g-stationary"),
            Some(DataflowKind::GStationary)
        );
        assert_eq!(
            DataflowKind::parse_composite("down-forward"),
            Some(DataflowKind::DownForward)
        );
        assert_eq!(DataflowKind::parse_composite("weight-stationary"), None);
    }
}
