//! Functional and cycle-level model of the macro.
//!
//! A compute cycle broadcasts one input bit column to all compartments. Every
//! enabled slot ANDs the bit with its stored block and yields a signed
//! power-of-two term; the adder tree sums the terms of one filter slot across
//! compartments, and post-processing shift-accumulates the sum by the column's
//! significance. Sub-cycle timing and pipelining are not modeled: cycles are
//! sequential sums.

use alloc::vec;
use alloc::vec::Vec;

use crate::compiler::{emit_instructions, CompiledLayer, DbmuSlot, Instruction, WeightEncoding};
use crate::config::MacroConfig;
use crate::error::Error;
use crate::ipu::{self, BitColumnMask, ScheduledColumn, Signedness};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SimMode {
    #[default]
    DbPim,
    DenseBaseline,
}

impl SimMode {
    pub fn encoding(self) -> WeightEncoding {
        match self {
            SimMode::DbPim => WeightEncoding::Dyadic,
            SimMode::DenseBaseline => WeightEncoding::TwosComplement,
        }
    }
}

/// Event counts accumulated over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tallies {
    pub compute_cycles: u64,
    pub skipped_cycles: u64,
    pub row_loads: u64,
    pub accumulates: u64,
    pub writebacks: u64,
    /// Σ over executed cycles of enabled slots in the active row.
    pub effective_cell_cycles: u64,
    /// Σ over executed cycles of allocated slots in the active row.
    pub total_cell_cycles: u64,
    /// Shift-accumulate operations, one per filter slot per executed cycle.
    pub post_process_ops: u64,
    pub input_reads: u64,
    pub output_writes: u64,
    pub ipu_groups: u64,
    /// Σ over analyzed groups of skippable columns.
    pub ipu_masked_columns: u64,
}

impl Tallies {
    pub fn merge(&mut self, o: &Tallies) {
        self.compute_cycles += o.compute_cycles;
        self.skipped_cycles += o.skipped_cycles;
        self.row_loads += o.row_loads;
        self.accumulates += o.accumulates;
        self.writebacks += o.writebacks;
        self.effective_cell_cycles += o.effective_cell_cycles;
        self.total_cell_cycles += o.total_cell_cycles;
        self.post_process_ops += o.post_process_ops;
        self.input_reads += o.input_reads;
        self.output_writes += o.output_writes;
        self.ipu_groups += o.ipu_groups;
        self.ipu_masked_columns += o.ipu_masked_columns;
    }
}

/// Per-pass counters, enough to recompute utilization for each pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PassTallies {
    pub pass: usize,
    pub macro_index: usize,
    pub phi_th: Option<u8>,
    pub compute_cycles: u64,
    pub skipped_cycles: u64,
    pub effective_cell_cycles: u64,
    pub total_cell_cycles: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOutput {
    /// One value per layer filter position.
    pub outputs: Vec<i64>,
    pub tallies: Tallies,
    pub passes: Vec<PassTallies>,
}

impl SimOutput {
    /// Folds another run of the same layer (e.g. the next input vector) into this one.
    pub fn merge_tallies(&mut self, o: &SimOutput) {
        self.tallies.merge(&o.tallies);
        for (a, b) in self.passes.iter_mut().zip(&o.passes) {
            a.compute_cycles += b.compute_cycles;
            a.skipped_cycles += b.skipped_cycles;
            a.effective_cell_cycles += b.effective_cell_cycles;
            a.total_cell_cycles += b.total_cell_cycles;
        }
    }
}

/// Observer for per-cycle simulator events.
pub trait TraceSink {
    fn event(&mut self, event: &TraceEvent<'_>);
}

#[derive(Debug)]
pub enum TraceEvent<'a> {
    Skip { filter: usize },
    Load { pass: usize, macro_index: usize, rows: usize },
    Mask { pass: usize, row: usize, group_masks: &'a [BitColumnMask], mask: u8 },
    Cycle {
        cycle: u64,
        pass: usize,
        row: usize,
        column: ScheduledColumn,
        /// Adder tree output per filter slot.
        terms: &'a [i64],
        psums: &'a [i64],
    },
    SkippedCycle { pass: usize, row: usize, bit: u8 },
    Accumulate { pass: usize, row: usize, accumulators: &'a [i64] },
    WriteBack { pass: usize, filters: &'a [usize], values: &'a [i64] },
}

/// AND of one input bit with one stored block.
#[inline]
pub fn dbmu_compute(slot: &DbmuSlot, input_bit: bool) -> i64 {
    if input_bit {
        i64::from(slot.value())
    } else {
        0
    }
}

/// Signed sum of per-compartment power-of-two terms.
///
/// Terms keep their own sign and bit position, so complementary-pair outputs
/// from different compartments are never concatenated as raw bit fields.
#[inline]
pub fn csd_adder_tree(terms: &[i64]) -> i64 {
    terms.iter().sum()
}

/// Largest magnitude any accumulator may reach for a reduction of `len` terms.
pub fn accumulator_bound(len: usize) -> i64 {
    255 * 128 * len as i64
}

/// Registers of one macro executing one pass.
#[derive(Clone, Debug)]
pub struct MacroState<'a> {
    layer: &'a CompiledLayer,
    pass: usize,
    row: usize,
    /// Shift-accumulated sums for the active row, per filter slot.
    pub psums: Vec<i64>,
    /// Cross-row accumulators, per filter slot.
    pub accumulators: Vec<i64>,
    pub cycle: u64,
    pub tallies: Tallies,
    bound: i64,
    row_enabled: u64,
    row_allocated: u64,
    terms: Vec<i64>,
    tree_inputs: Vec<i64>,
}

impl<'a> MacroState<'a> {
    pub fn new(layer: &'a CompiledLayer) -> Self {
        MacroState {
            layer,
            pass: 0,
            row: 0,
            psums: Vec::new(),
            accumulators: Vec::new(),
            cycle: 0,
            tallies: Tallies::default(),
            bound: accumulator_bound(layer.reduction_len.max(1)),
            row_enabled: 0,
            row_allocated: 0,
            terms: Vec::new(),
            tree_inputs: Vec::new(),
        }
    }

    /// Makes `pass` resident and clears its registers.
    pub fn load_pass(&mut self, pass: usize) {
        let slots = self.layer.passes[pass].filters.len();
        self.pass = pass;
        self.psums = vec![0; slots];
        self.accumulators = vec![0; slots];
        self.terms = vec![0; slots];
        self.tallies.row_loads += self.layer.tiles as u64;
        self.select_row(0);
    }

    /// Activates `row` of the resident pass.
    pub fn select_row(&mut self, row: usize) {
        self.row = row;
        let pass = &self.layer.passes[self.pass];
        let (mut en, mut al) = (0u64, 0u64);
        for c in 0..self.layer.compartments {
            for slot in pass.row(c, row) {
                en += u64::from(slot.enabled);
                al += u64::from(slot.is_allocated());
            }
        }
        self.row_enabled = en;
        self.row_allocated = al;
    }

    /// One bit-serial cycle: `bits[c]` is the input bit sent to compartment `c`.
    pub fn run_bit_cycle(&mut self, column: ScheduledColumn, bits: &[bool]) {
        let pass = &self.layer.passes[self.pass];
        let mut tree_inputs = core::mem::take(&mut self.tree_inputs);
        for s in 0..pass.filters.len() {
            tree_inputs.clear();
            for (c, &bit) in bits.iter().enumerate().take(self.layer.compartments) {
                tree_inputs.extend(
                    pass.filter_group(c, self.row, s)
                        .iter()
                        .map(|slot| dbmu_compute(slot, bit)),
                );
            }
            let sum = csd_adder_tree(&tree_inputs);
            self.terms[s] = sum;
            self.psums[s] += i64::from(column.weight) * sum;
            assert!(
                self.psums[s].abs() <= self.bound,
                "partial sum {} exceeds accumulator bound {}",
                self.psums[s],
                self.bound
            );
        }
        self.tree_inputs = tree_inputs;
        self.cycle += 1;
        self.tallies.compute_cycles += 1;
        self.tallies.post_process_ops += pass.filters.len() as u64;
        self.tallies.effective_cell_cycles += self.row_enabled;
        self.tallies.total_cell_cycles += self.row_allocated;
    }

    /// Adder tree outputs of the last cycle, per filter slot.
    pub fn last_terms(&self) -> &[i64] {
        &self.terms
    }

    pub fn accumulate(&mut self) {
        for (acc, p) in self.accumulators.iter_mut().zip(self.psums.iter_mut()) {
            *acc += core::mem::take(p);
            assert!(
                acc.abs() <= self.bound,
                "accumulator {} exceeds bound {}",
                acc,
                self.bound
            );
        }
        self.tallies.accumulates += 1;
        self.tallies.post_process_ops += self.accumulators.len() as u64;
    }
}

/// Runs a compiled layer on one input vector by executing its instruction stream.
pub fn run_layer(
    layer: &CompiledLayer,
    inputs: &[i32],
    cfg: &MacroConfig,
    mode: SimMode,
    mut trace: Option<&mut dyn TraceSink>,
) -> Result<SimOutput, Error> {
    cfg.validate()?;
    layer.validate()?;
    if layer.encoding != mode.encoding() {
        return Err(Error::InvalidLayer("compiled image encoding does not match the simulation mode"));
    }
    if inputs.len() != layer.reduction_len {
        return Err(Error::Shape {
            what: "input length",
            expected: layer.reduction_len,
            got: inputs.len(),
        });
    }
    if layer.compartments != cfg.compartments_per_macro
        || layer.columns != cfg.dbmus_per_compartment
    {
        return Err(Error::InvalidLayer("compiled geometry differs from the configuration"));
    }
    let feature_bytes = inputs.len() + 4 * layer.filter_count();
    if feature_bytes > cfg.feature_buffer_bytes {
        return Err(Error::Capacity {
            what: "feature buffer bytes",
            required: feature_bytes,
            limit: cfg.feature_buffer_bytes,
        });
    }
    let signedness = cfg.signedness;
    ipu::check_inputs(inputs, signedness)?;

    let skipping = mode == SimMode::DbPim && cfg.ipu_skipping;
    let c_count = layer.compartments;
    let mut outputs = vec![0i64; layer.filter_count()];
    let mut pass_tallies: Vec<PassTallies> = layer
        .passes
        .iter()
        .enumerate()
        .map(|(p, pass)| PassTallies {
            pass: p,
            macro_index: pass.macro_index,
            phi_th: pass.phi_th,
            ..PassTallies::default()
        })
        .collect();

    let mut state = MacroState::new(layer);
    let mut tile_inputs = vec![0i32; c_count];
    let mut tile_mask = BitColumnMask::none(signedness);
    let mut bits = vec![false; c_count];
    let mut active_row: Option<(usize, usize)> = None;

    for ins in emit_instructions(layer) {
        match ins {
            Instruction::SkipFilter { filter } => {
                outputs[filter] = 0;
                if let Some(t) = trace.as_deref_mut() {
                    t.event(&TraceEvent::Skip { filter });
                }
            }
            Instruction::LoadWeights { pass, macro_index, rows, .. } => {
                state.load_pass(pass);
                active_row = None;
                if let Some(t) = trace.as_deref_mut() {
                    t.event(&TraceEvent::Load { pass, macro_index, rows });
                }
            }
            Instruction::Compute { pass, row, bit } => {
                if active_row != Some((pass, row)) {
                    active_row = Some((pass, row));
                    state.select_row(row);
                    let base = row * c_count;
                    for (c, slot) in tile_inputs.iter_mut().enumerate() {
                        *slot = inputs.get(base + c).copied().unwrap_or(0);
                    }
                    state.tallies.input_reads += (layer.reduction_len - base).min(c_count) as u64;
                    tile_mask = BitColumnMask::none(signedness);
                    if skipping {
                        let group_masks = ipu::analyze_tensor(&tile_inputs, cfg.input_group_size, signedness)?;
                        tile_mask.mask = group_masks.iter().fold(0xff, |m, g| m & g.mask);
                        state.tallies.ipu_groups += group_masks.len() as u64;
                        state.tallies.ipu_masked_columns +=
                            group_masks.iter().map(|g| u64::from(g.skipped())).sum::<u64>();
                        if let Some(t) = trace.as_deref_mut() {
                            t.event(&TraceEvent::Mask {
                                pass,
                                row,
                                group_masks: &group_masks,
                                mask: tile_mask.mask,
                            });
                        }
                    }
                }
                if tile_mask.is_skipped(bit) {
                    state.tallies.skipped_cycles += 1;
                    pass_tallies[pass].skipped_cycles += 1;
                    if let Some(t) = trace.as_deref_mut() {
                        t.event(&TraceEvent::SkippedCycle { pass, row, bit });
                    }
                    continue;
                }
                for (b, &v) in bits.iter_mut().zip(&tile_inputs) {
                    *b = signedness.bits(v) >> bit & 1 == 1;
                }
                let column = ScheduledColumn {
                    bit,
                    weight: signedness.column_weight(bit),
                };
                let before = state.tallies;
                state.run_bit_cycle(column, &bits);
                let pt = &mut pass_tallies[pass];
                pt.compute_cycles += 1;
                pt.effective_cell_cycles +=
                    state.tallies.effective_cell_cycles - before.effective_cell_cycles;
                pt.total_cell_cycles += state.tallies.total_cell_cycles - before.total_cell_cycles;
                if let Some(t) = trace.as_deref_mut() {
                    t.event(&TraceEvent::Cycle {
                        cycle: state.cycle,
                        pass,
                        row,
                        column,
                        terms: state.last_terms(),
                        psums: &state.psums,
                    });
                }
            }
            Instruction::Accumulate { pass, row } => {
                state.accumulate();
                if let Some(t) = trace.as_deref_mut() {
                    t.event(&TraceEvent::Accumulate {
                        pass,
                        row,
                        accumulators: &state.accumulators,
                    });
                }
            }
            Instruction::WriteBack { pass } => {
                let filters = &layer.passes[pass].filters;
                for (&f, &acc) in filters.iter().zip(&state.accumulators) {
                    outputs[f] = acc;
                }
                state.tallies.writebacks += 1;
                state.tallies.output_writes += filters.len() as u64;
                if let Some(t) = trace.as_deref_mut() {
                    t.event(&TraceEvent::WriteBack {
                        pass,
                        filters,
                        values: &state.accumulators,
                    });
                }
            }
        }
    }

    Ok(SimOutput {
        outputs,
        tallies: state.tallies,
        passes: pass_tallies,
    })
}

/// Element-wise affine pass-through applied between chained layers:
/// `(x * multiplier) >> shift`, clamped to the input range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineHook {
    pub multiplier: i64,
    pub shift: u32,
}

impl Default for AffineHook {
    fn default() -> Self {
        AffineHook {
            multiplier: 1,
            shift: 0,
        }
    }
}

impl AffineHook {
    pub fn apply(&self, outputs: &[i64], signedness: Signedness) -> Vec<i32> {
        let (lo, hi) = signedness.range();
        outputs
            .iter()
            .map(|&x| {
                let y = x.saturating_mul(self.multiplier) >> self.shift.min(63);
                y.clamp(i64::from(lo), i64::from(hi)) as i32
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{map_dense_layer, map_layer};
    use crate::csd::Sign;
    use crate::fta::ThresholdedFilter;

    fn slot(sign: Sign, index: u8, position: u8) -> DbmuSlot {
        DbmuSlot {
            enabled: true,
            sign,
            index,
            position,
            owner: Some(0),
        }
    }

    #[test]
    fn dbmu_terms() {
        assert_eq!(dbmu_compute(&slot(Sign::Pos, 2, 0), true), 16);
        assert_eq!(dbmu_compute(&slot(Sign::Neg, 3, 1), true), -128);
        assert_eq!(dbmu_compute(&slot(Sign::Neg, 3, 1), false), 0);
        assert_eq!(dbmu_compute(&DbmuSlot::padding(0), true), 0);
    }

    #[test]
    fn adder_tree_worked_sum() {
        let s = csd_adder_tree(&[16, -128]);
        assert_eq!(s, -112);
        // 1_1001_0000 as a 9-bit two's-complement pattern
        assert_eq!((s as u16) & 0x1ff, 0b1_1001_0000);
        assert_eq!(csd_adder_tree(&[0; 16]), 0);
    }

    fn worked_layer() -> (CompiledLayer, MacroConfig) {
        let cfg = MacroConfig::default();
        let tf = vec![ThresholdedFilter::from_weights(0, 1, vec![16, -128]).unwrap()];
        (map_layer(&tf, &cfg).unwrap(), cfg)
    }

    #[test]
    fn single_cycle_scales_by_shift_weight() {
        let (layer, _) = worked_layer();
        let mut state = MacroState::new(&layer);
        state.load_pass(0);
        let mut bits = vec![false; 16];
        bits[0] = true;
        bits[1] = true;
        state.run_bit_cycle(ScheduledColumn { bit: 3, weight: 8 }, &bits);
        assert_eq!(state.last_terms(), &[-112]);
        assert_eq!(state.psums, vec![8 * -112]);
        assert_eq!(state.cycle, 1);
    }

    #[test]
    fn worked_example_end_to_end() {
        let (layer, cfg) = worked_layer();
        let out = run_layer(&layer, &[1, 1], &cfg, SimMode::DbPim, None).unwrap();
        assert_eq!(out.outputs, vec![-112]);
        // only column 0 survives
        assert_eq!(out.tallies.compute_cycles, 1);
        assert_eq!(out.tallies.skipped_cycles, 7);
        let out = run_layer(&layer, &[3, 3], &cfg, SimMode::DbPim, None).unwrap();
        assert_eq!(out.outputs, vec![-336]);
    }

    #[test]
    fn zero_inputs_execute_no_cycles() {
        let (layer, cfg) = worked_layer();
        let out = run_layer(&layer, &[0, 0], &cfg, SimMode::DbPim, None).unwrap();
        assert_eq!(out.outputs, vec![0]);
        assert_eq!(out.tallies.compute_cycles, 0);
        assert_eq!(out.tallies.skipped_cycles, 8);
    }

    #[test]
    fn shape_and_mode_errors() {
        let (layer, cfg) = worked_layer();
        assert!(matches!(
            run_layer(&layer, &[1], &cfg, SimMode::DbPim, None),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            run_layer(&layer, &[1, 1], &cfg, SimMode::DenseBaseline, None),
            Err(Error::InvalidLayer(_))
        ));
        assert!(matches!(
            run_layer(&layer, &[1, 300], &cfg, SimMode::DbPim, None),
            Err(Error::InputOutOfRange { position: 1, .. })
        ));
    }

    #[test]
    fn dense_matches_and_runs_all_columns() {
        let cfg = MacroConfig::default();
        let tf = vec![ThresholdedFilter::from_weights(0, 1, vec![16, -128]).unwrap()];
        let dense = map_dense_layer(&tf, &cfg).unwrap();
        let out = run_layer(&dense, &[1, 1], &cfg, SimMode::DenseBaseline, None).unwrap();
        assert_eq!(out.outputs, vec![-112]);
        assert_eq!(out.tallies.compute_cycles, 8);
    }

    #[test]
    fn signed_inputs() {
        let cfg = MacroConfig {
            signedness: Signedness::Signed8,
            ..MacroConfig::default()
        };
        let tf = vec![ThresholdedFilter::from_weights(0, 2, vec![-3, 5, 0]).unwrap()];
        let layer = map_layer(&tf, &cfg).unwrap();
        let out = run_layer(&layer, &[-128, 127, -1], &cfg, SimMode::DbPim, None).unwrap();
        assert_eq!(out.outputs, vec![-3 * -128 + 5 * 127]);
    }

    #[test]
    fn affine_hook_clamps() {
        let hook = AffineHook {
            multiplier: 3,
            shift: 2,
        };
        assert_eq!(hook.apply(&[-10, 4, 1000], Signedness::Unsigned8), vec![0, 3, 255]);
        assert_eq!(
            AffineHook::default().apply(&[-200, 5], Signedness::Signed8),
            vec![-128, 5]
        );
    }

    struct Count(usize);
    impl TraceSink for Count {
        fn event(&mut self, e: &TraceEvent<'_>) {
            if matches!(e, TraceEvent::Cycle { .. }) {
                self.0 += 1;
            }
        }
    }

    #[test]
    fn trace_sees_every_cycle() {
        let (layer, cfg) = worked_layer();
        let mut sink = Count(0);
        let out = run_layer(&layer, &[255, 17], &cfg, SimMode::DbPim, Some(&mut sink)).unwrap();
        assert_eq!(sink.0 as u64, out.tallies.compute_cycles);
    }
}
