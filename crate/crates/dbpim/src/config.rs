//! JSON run configuration.

use std::path::Path;

use dbpim_core::sim::AffineHook;
use dbpim_core::{EnergyModel, FtaMode, MacroConfig, Signedness};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::formats::{self, Dtype, FORMAT_VERSION};

/// Largest tensor accepted unless the configuration raises it.
pub const DEFAULT_MAX_ELEMENTS: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub macro_bit_cycle: f64,
    pub cell_op: f64,
    pub row_load: f64,
    pub buffer_access: f64,
    pub post_process: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyModel::default().into()
    }
}

impl From<EnergyModel> for EnergyConfig {
    fn from(m: EnergyModel) -> Self {
        EnergyConfig {
            macro_bit_cycle: m.macro_bit_cycle,
            cell_op: m.cell_op,
            row_load: m.row_load,
            buffer_access: m.buffer_access,
            post_process: m.post_process,
        }
    }
}

impl From<EnergyConfig> for EnergyModel {
    fn from(c: EnergyConfig) -> Self {
        EnergyModel {
            macro_bit_cycle: c.macro_bit_cycle,
            cell_op: c.cell_op,
            row_load: c.row_load,
            buffer_access: c.buffer_access,
            post_process: c.post_process,
        }
    }
}

/// Post-layer rescale used by `simulate --chain`: `(x * multiplier) >> shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HookConfig {
    pub multiplier: i64,
    pub shift: u32,
}

impl Default for HookConfig {
    fn default() -> Self {
        HookConfig {
            multiplier: 1,
            shift: 0,
        }
    }
}

/// Every field is optional; missing ones take the default macro geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub format_version: u32,
    pub num_macros: usize,
    pub compartments_per_macro: usize,
    pub dbmus_per_compartment: usize,
    pub rows_per_dbmu: usize,
    pub input_group_size: usize,
    pub dense_filters_per_pass: usize,
    pub fta_mode: FtaMode,
    pub input_dtype: Dtype,
    pub ipu_skipping: bool,
    pub include_weight_load_cycles: bool,
    pub feature_buffer_bytes: usize,
    pub instruction_buffer_bytes: usize,
    pub energy: EnergyConfig,
    pub seed: u64,
    pub hook: HookConfig,
    pub max_elements: usize,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let m = MacroConfig::default();
        ConfigFile {
            format_version: FORMAT_VERSION,
            num_macros: m.num_macros,
            compartments_per_macro: m.compartments_per_macro,
            dbmus_per_compartment: m.dbmus_per_compartment,
            rows_per_dbmu: m.rows_per_dbmu,
            input_group_size: m.input_group_size,
            dense_filters_per_pass: m.dense_filters_per_pass,
            fta_mode: m.fta_mode,
            input_dtype: Dtype::from(m.signedness),
            ipu_skipping: m.ipu_skipping,
            include_weight_load_cycles: m.include_weight_load_cycles,
            feature_buffer_bytes: m.feature_buffer_bytes,
            instruction_buffer_bytes: m.instruction_buffer_bytes,
            energy: m.energy.into(),
            seed: 0,
            hook: HookConfig::default(),
            max_elements: DEFAULT_MAX_ELEMENTS,
        }
    }
}

impl ConfigFile {
    pub fn macro_config(&self) -> MacroConfig {
        MacroConfig {
            num_macros: self.num_macros,
            compartments_per_macro: self.compartments_per_macro,
            dbmus_per_compartment: self.dbmus_per_compartment,
            rows_per_dbmu: self.rows_per_dbmu,
            input_group_size: self.input_group_size,
            dense_filters_per_pass: self.dense_filters_per_pass,
            fta_mode: self.fta_mode,
            signedness: self.signedness(),
            ipu_skipping: self.ipu_skipping,
            include_weight_load_cycles: self.include_weight_load_cycles,
            feature_buffer_bytes: self.feature_buffer_bytes,
            instruction_buffer_bytes: self.instruction_buffer_bytes,
            energy: self.energy.into(),
        }
    }

    pub fn signedness(&self) -> Signedness {
        self.input_dtype.into()
    }

    pub fn hook(&self) -> AffineHook {
        AffineHook {
            multiplier: self.hook.multiplier,
            shift: self.hook.shift,
        }
    }

    fn validate(&self, path: &Path) -> Result<()> {
        formats::check_version(path, self.format_version)?;
        if self.max_elements == 0 {
            return Err(CliError::invalid(path, "max_elements must be at least 1"));
        }
        if self.hook.shift > 62 {
            return Err(CliError::invalid(path, "hook.shift must be at most 62"));
        }
        self.macro_config()
            .validate()
            .map_err(|e| CliError::core(path, e))
    }

    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = formats::read_text(path, 1 << 20)?;
        let cfg: ConfigFile =
            serde_json::from_str(&text).map_err(|e| CliError::json(path, &text, &e))?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    /// Defaults when no file is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ConfigFile::default();
        assert_eq!(c.macro_config(), MacroConfig::default());
        let text = serde_json::to_string(&c).unwrap();
        let back: ConfigFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_and_unknown_fields() {
        let c: ConfigFile = serde_json::from_str(r#"{"rows_per_dbmu": 8, "fta_mode": "atmost"}"#).unwrap();
        assert_eq!(c.rows_per_dbmu, 8);
        assert_eq!(c.fta_mode, FtaMode::AtMost);
        assert_eq!(c.num_macros, 4);
        assert!(serde_json::from_str::<ConfigFile>(r#"{"rows": 8}"#).is_err());
        assert!(serde_json::from_str::<ConfigFile>(r#"{"energy": {"cell": 1.0}}"#).is_err());
    }
}
