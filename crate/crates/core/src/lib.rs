//! Bit-level sparsity for digital SRAM processing-in-memory.
//!
//! INT8 weights are recoded in canonical signed digit form, approximated so
//! that every weight of a filter has the same number of non-zero digits, and
//! packed as dyadic blocks into a modeled PIM macro. The simulator executes the
//! packed image bit-serially, skipping all-zero input bit columns, and reports
//! cycles, actual utilization and energy against a dense two's-complement
//! baseline on the same geometry.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod compiler;
pub mod config;
pub mod csd;
pub mod error;
pub mod fta;
pub mod ipu;
pub mod metrics;
pub mod oracle;
pub mod sim;

pub use compiler::{
    emit_instructions, emit_metadata, map_dense_layer, map_layer, CompiledLayer, DbmuSlot,
    Instruction, MetadataRecord, Pass, WeightEncoding,
};
pub use config::{EnergyModel, MacroConfig};
pub use csd::{CsdDigit, CsdWord, DyadicBlock, DyadicBlockSet, Sign};
pub use error::{CsdError, Error};
pub use fta::{fta_quantize, Filter, FtaMode, QueryTable, ThresholdedFilter};
pub use ipu::{BitColumnMask, InputGroup, Signedness};
pub use metrics::{speedup_and_energy, LayerRun, SimReport, UtilizationRecord};
pub use sim::{run_layer, SimMode, SimOutput, Tallies, TraceEvent, TraceSink};

/// Compiles and simulates one layer in the requested mode.
pub fn simulate_layer(
    filters: &[ThresholdedFilter],
    inputs: &[i32],
    cfg: &MacroConfig,
    mode: SimMode,
) -> Result<SimOutput, Error> {
    let layer = match mode {
        SimMode::DbPim => map_layer(filters, cfg)?,
        SimMode::DenseBaseline => map_dense_layer(filters, cfg)?,
    };
    run_layer(&layer, inputs, cfg, mode, None)
}
