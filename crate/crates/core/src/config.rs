//! Macro geometry and cost-model constants.

use crate::error::Error;
use crate::fta::FtaMode;
use crate::ipu::Signedness;

/// Cells per weight in the dense two's-complement baseline.
pub const DENSE_CELLS_PER_WEIGHT: usize = 8;
/// Bytes per encoded instruction, used for the instruction buffer check.
pub const INSTRUCTION_BYTES: usize = 4;

/// Per-event energy constants, in arbitrary units.
///
/// The defaults are calibration placeholders chosen only to make relative
/// comparisons meaningful; they are not measured values.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyModel {
    /// One bit-serial compute cycle of the array, excluding per-cell work.
    pub macro_bit_cycle: f64,
    /// One participating cell in one compute cycle.
    pub cell_op: f64,
    /// Writing one row of weights into the array.
    pub row_load: f64,
    /// One feature or output buffer access.
    pub buffer_access: f64,
    /// One shift-accumulate or partial-sum merge in post-processing.
    pub post_process: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            macro_bit_cycle: 1.0,
            cell_op: 0.01,
            row_load: 0.1,
            buffer_access: 0.05,
            post_process: 0.02,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), Error> {
        let all = [
            self.macro_bit_cycle,
            self.cell_op,
            self.row_load,
            self.buffer_access,
            self.post_process,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::Config("energy constants must be finite and non-negative"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroConfig {
    pub num_macros: usize,
    pub compartments_per_macro: usize,
    pub dbmus_per_compartment: usize,
    pub rows_per_dbmu: usize,
    pub input_group_size: usize,
    pub dense_filters_per_pass: usize,
    pub fta_mode: FtaMode,
    pub signedness: Signedness,
    /// Skip all-zero input bit columns in DB-PIM mode.
    pub ipu_skipping: bool,
    /// Count weight row loads as cycles in speedup figures.
    pub include_weight_load_cycles: bool,
    pub feature_buffer_bytes: usize,
    pub instruction_buffer_bytes: usize,
    pub energy: EnergyModel,
}

impl Default for MacroConfig {
    fn default() -> Self {
        MacroConfig {
            num_macros: 4,
            compartments_per_macro: 16,
            dbmus_per_compartment: 16,
            rows_per_dbmu: 64,
            input_group_size: 16,
            dense_filters_per_pass: 2,
            fta_mode: FtaMode::Exact,
            signedness: Signedness::Unsigned8,
            ipu_skipping: true,
            include_weight_load_cycles: false,
            feature_buffer_bytes: 128 * 1024,
            instruction_buffer_bytes: 16 * 1024,
            energy: EnergyModel::default(),
        }
    }
}

impl MacroConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let counts = [
            self.num_macros,
            self.compartments_per_macro,
            self.dbmus_per_compartment,
            self.rows_per_dbmu,
            self.input_group_size,
            self.dense_filters_per_pass,
            self.feature_buffer_bytes,
            self.instruction_buffer_bytes,
        ];
        if counts.contains(&0) {
            return Err(Error::Config("all counts must be at least 1"));
        }
        if !self.dbmus_per_compartment.is_multiple_of(2) {
            return Err(Error::Config("dbmus_per_compartment must be even"));
        }
        if self.dense_filters_per_pass * DENSE_CELLS_PER_WEIGHT > self.dbmus_per_compartment {
            return Err(Error::Config(
                "dense_filters_per_pass x 8 cells must fit in one compartment row",
            ));
        }
        if !self.compartments_per_macro.is_multiple_of(self.input_group_size) {
            return Err(Error::Config(
                "input_group_size must divide compartments_per_macro",
            ));
        }
        self.energy.validate()
    }

    /// Longest reduction a single macro can hold.
    pub fn reduction_capacity(&self) -> usize {
        self.rows_per_dbmu * self.compartments_per_macro
    }

    /// Filter slots per DB-PIM pass at threshold `phi_th`.
    pub fn filter_slots_per_pass(&self, phi_th: u8) -> usize {
        if phi_th == 0 {
            0
        } else {
            self.dbmus_per_compartment / usize::from(phi_th)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = MacroConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.filter_slots_per_pass(1), 16);
        assert_eq!(cfg.filter_slots_per_pass(2), 8);
        assert_eq!(cfg.reduction_capacity(), 1024);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut cfg = MacroConfig {
            dbmus_per_compartment: 15,
            ..MacroConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.dbmus_per_compartment = 16;
        cfg.rows_per_dbmu = 0;
        assert!(cfg.validate().is_err());
        cfg.rows_per_dbmu = 64;
        cfg.input_group_size = 6;
        assert!(cfg.validate().is_err());
        cfg.input_group_size = 8;
        cfg.validate().unwrap();
        cfg.dense_filters_per_pass = 3;
        assert!(cfg.validate().is_err());
        cfg.dense_filters_per_pass = 2;
        cfg.energy.row_load = -1.0;
        assert!(cfg.validate().is_err());
    }
}
