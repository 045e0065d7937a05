//! Maps approximated filters onto macro images.
//!
//! Each compartment is bound to one element of the dot product. Within one
//! compartment row the DBMU columns are split into groups of `phi_th` slots,
//! one group per filter slot, so a row holds 16 filters at `phi_th = 1` and 8
//! at `phi_th = 2` with the default 16-DBMU compartment. Reductions longer than
//! the compartment count are tiled over rows; filters beyond one row's worth
//! of filter slots, or with a different threshold, go to further passes.
//!
//! The dense baseline image uses the same geometry with eight cells per weight
//! holding its two's-complement bits.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::{MacroConfig, DENSE_CELLS_PER_WEIGHT, INSTRUCTION_BYTES};
use crate::csd::{BlockPattern, Sign};
use crate::error::Error;
use crate::fta::{ThresholdedFilter, MAX_THRESHOLD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightEncoding {
    /// Complementary-pattern blocks, one per DBMU slot.
    Dyadic,
    /// Eight cells per weight, one per two's-complement bit.
    TwosComplement,
}

/// One storage slot.
///
/// In a dyadic image an enabled slot holds one complementary block: the
/// stored pair is `01` when `position` is 0 and `10` when it is 1, and the
/// block contributes `sign * 2^(2*index + position)`. In a two's-complement
/// image a slot is one weight bit, `enabled` is the stored bit and
/// `(sign, index, position)` give the bit's significance.
///
/// `owner` is the filter slot within the pass; `None` marks a slot no filter
/// occupies, which does not take part in computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DbmuSlot {
    pub enabled: bool,
    pub sign: Sign,
    pub index: u8,
    pub position: u8,
    pub owner: Option<u16>,
}

impl DbmuSlot {
    pub const EMPTY: DbmuSlot = DbmuSlot {
        enabled: false,
        sign: Sign::Pos,
        index: 0,
        position: 0,
        owner: None,
    };

    /// Allocated to `owner` but holding nothing.
    pub const fn padding(owner: u16) -> Self {
        DbmuSlot {
            enabled: false,
            sign: Sign::Pos,
            index: 0,
            position: 0,
            owner: Some(owner),
        }
    }

    #[inline]
    pub fn is_allocated(&self) -> bool {
        self.owner.is_some()
    }

    #[inline]
    pub fn bit_position(&self) -> u8 {
        2 * self.index + self.position
    }

    /// Signed weight contribution; zero when disabled.
    #[inline]
    pub fn value(&self) -> i32 {
        if self.enabled {
            self.sign.factor() << self.bit_position()
        } else {
            0
        }
    }
}

/// One weight-stationary pass: a set of filter slots with weights resident in
/// one macro for the whole reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pass {
    pub macro_index: usize,
    /// Filter threshold shared by the pass; `None` for the dense image.
    pub phi_th: Option<u8>,
    pub slots_per_filter: usize,
    /// Layer filter position owning each filter slot.
    pub filters: Vec<usize>,
    /// Cell image indexed `[compartment][row][column]`.
    pub image: Vec<Vec<Vec<DbmuSlot>>>,
}

impl Pass {
    #[inline]
    pub fn row(&self, compartment: usize, row: usize) -> &[DbmuSlot] {
        &self.image[compartment][row]
    }

    /// Slots of filter slot `s` in one compartment row.
    pub fn filter_group(&self, compartment: usize, row: usize, s: usize) -> &[DbmuSlot] {
        let k = self.slots_per_filter;
        &self.image[compartment][row][s * k..(s + 1) * k]
    }

    pub fn slots(&self) -> impl Iterator<Item = &DbmuSlot> + '_ {
        self.image.iter().flatten().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompiledLayer {
    pub encoding: WeightEncoding,
    pub reduction_len: usize,
    pub compartments: usize,
    pub columns: usize,
    pub rows_per_dbmu: usize,
    /// Rows used per pass, one per tile of the reduction.
    pub tiles: usize,
    /// Source filter id per layer filter position.
    pub filter_ids: Vec<usize>,
    /// Threshold per layer filter position.
    pub phi_th: Vec<u8>,
    /// Layer filter positions with no pass because their threshold is 0.
    pub skipped_filters: Vec<usize>,
    pub passes: Vec<Pass>,
}

impl CompiledLayer {
    pub fn filter_count(&self) -> usize {
        self.filter_ids.len()
    }

    /// `(row, input base offset)` in activation order for every pass.
    pub fn row_schedule(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.tiles).map(move |t| (t, t * self.compartments))
    }

    /// Filter slots per pass at this layer's geometry, for threshold `phi_th`.
    pub fn filter_slots_per_pass(&self, phi_th: u8) -> usize {
        if phi_th == 0 {
            0
        } else {
            self.columns / usize::from(phi_th)
        }
    }

    /// Sums every slot back into per-filter weights.
    pub fn decode_weights(&self) -> Vec<Vec<i32>> {
        let mut out = vec![vec![0i32; self.reduction_len]; self.filter_count()];
        for pass in &self.passes {
            for (s, &f) in pass.filters.iter().enumerate() {
                for (j, w) in out[f].iter_mut().enumerate() {
                    let (t, c) = (j / self.compartments, j % self.compartments);
                    *w += pass
                        .filter_group(c, t, s)
                        .iter()
                        .map(DbmuSlot::value)
                        .sum::<i32>();
                }
            }
        }
        out
    }

    /// Structural checks for images that did not come from the mapper.
    pub fn validate(&self) -> Result<(), Error> {
        let n = self.filter_count();
        if self.phi_th.len() != n {
            return Err(Error::InvalidLayer("phi_th length differs from filter count"));
        }
        if self.compartments == 0 || self.columns == 0 || self.tiles == 0 {
            return Err(Error::InvalidLayer("empty geometry"));
        }
        if self.tiles != self.reduction_len.div_ceil(self.compartments) {
            return Err(Error::InvalidLayer("tile count does not cover the reduction"));
        }
        if self.tiles > self.rows_per_dbmu {
            return Err(Error::Capacity {
                what: "rows per pass",
                required: self.tiles,
                limit: self.rows_per_dbmu,
            });
        }
        let mut seen = vec![false; n];
        for &f in &self.skipped_filters {
            if f >= n || core::mem::replace(&mut seen[f], true) {
                return Err(Error::InvalidLayer("skipped filter out of range or repeated"));
            }
        }
        for pass in &self.passes {
            match (self.encoding, pass.phi_th) {
                (WeightEncoding::Dyadic, Some(p)) if (1..=MAX_THRESHOLD).contains(&p) => {
                    if pass.slots_per_filter != usize::from(p) {
                        return Err(Error::InvalidLayer("slots per filter differs from phi_th"));
                    }
                }
                (WeightEncoding::TwosComplement, None) => {
                    if pass.slots_per_filter != DENSE_CELLS_PER_WEIGHT {
                        return Err(Error::InvalidLayer("dense pass must use 8 cells per weight"));
                    }
                }
                _ => return Err(Error::InvalidLayer("pass threshold does not match encoding")),
            }
            if pass.filters.len() * pass.slots_per_filter > self.columns {
                return Err(Error::InvalidLayer("pass has more filter slots than columns"));
            }
            for &f in &pass.filters {
                if f >= n || core::mem::replace(&mut seen[f], true) {
                    return Err(Error::InvalidLayer("filter out of range or mapped twice"));
                }
            }
            if pass.image.len() != self.compartments
                || pass.image.iter().any(|c| {
                    c.len() != self.tiles || c.iter().any(|r| r.len() != self.columns)
                })
            {
                return Err(Error::InvalidLayer("pass image has the wrong shape"));
            }
            for slot in pass.slots() {
                if slot.index > 3 || slot.position > 1 {
                    return Err(Error::InvalidLayer("slot index or position out of range"));
                }
                match slot.owner {
                    Some(o) if usize::from(o) >= pass.filters.len() => {
                        return Err(Error::InvalidLayer("slot owner has no filter"))
                    }
                    None if slot.enabled => {
                        return Err(Error::InvalidLayer("enabled slot without an owner"))
                    }
                    _ => {}
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidLayer("filter neither mapped nor skipped"));
        }
        Ok(())
    }
}

fn check_layer(filters: &[ThresholdedFilter], cfg: &MacroConfig) -> Result<usize, Error> {
    cfg.validate()?;
    let first = filters
        .first()
        .ok_or(Error::Argument("layer has no filters"))?;
    let n = first.weights.len();
    if n == 0 {
        return Err(Error::EmptyFilter {
            filter_id: first.filter_id,
        });
    }
    for f in filters {
        if f.weights.len() != n {
            return Err(Error::Shape {
                what: "filter length",
                expected: n,
                got: f.weights.len(),
            });
        }
    }
    if n > cfg.reduction_capacity() {
        return Err(Error::Capacity {
            what: "reduction length per macro (rows_per_dbmu x compartments_per_macro)",
            required: n,
            limit: cfg.reduction_capacity(),
        });
    }
    let tiles = n.div_ceil(cfg.compartments_per_macro);
    // LoadWeights, WriteBack, and per row 8 computes plus an accumulate.
    let per_pass = (2 + tiles * 9) * INSTRUCTION_BYTES;
    if per_pass > cfg.instruction_buffer_bytes {
        return Err(Error::Capacity {
            what: "instruction bytes per pass",
            required: per_pass,
            limit: cfg.instruction_buffer_bytes,
        });
    }
    Ok(n)
}

fn empty_image(cfg: &MacroConfig, tiles: usize) -> Vec<Vec<Vec<DbmuSlot>>> {
    vec![vec![vec![DbmuSlot::EMPTY; cfg.dbmus_per_compartment]; tiles]; cfg.compartments_per_macro]
}

/// Packs the complementary blocks of every weight into DB-PIM passes.
pub fn map_layer(filters: &[ThresholdedFilter], cfg: &MacroConfig) -> Result<CompiledLayer, Error> {
    let n = check_layer(filters, cfg)?;
    let c_count = cfg.compartments_per_macro;
    let tiles = n.div_ceil(c_count);

    for f in filters {
        if f.phi_th > MAX_THRESHOLD {
            return Err(Error::ThresholdOutOfRange(f.phi_th));
        }
        if f.per_weight_blocks.len() != n {
            return Err(Error::Shape {
                what: "block sets per filter",
                expected: n,
                got: f.per_weight_blocks.len(),
            });
        }
        for (position, (set, &w)) in f.per_weight_blocks.iter().zip(&f.weights).enumerate() {
            if set.phi > f.phi_th {
                return Err(Error::ThresholdViolation {
                    filter_id: f.filter_id,
                    position,
                    phi: set.phi,
                    phi_th: f.phi_th,
                });
            }
            if set.value() != i32::from(w) {
                return Err(Error::InvalidLayer("block set does not decode to its weight"));
            }
        }
    }

    let skipped_filters: Vec<usize> = (0..filters.len())
        .filter(|&i| filters[i].phi_th == 0)
        .collect();

    let mut passes = Vec::new();
    for phi_th in 1..=MAX_THRESHOLD {
        let k = usize::from(phi_th);
        let members: Vec<usize> = (0..filters.len())
            .filter(|&i| filters[i].phi_th == phi_th)
            .collect();
        for group in members.chunks(cfg.filter_slots_per_pass(phi_th)) {
            let mut image = empty_image(cfg, tiles);
            for (s, &fi) in group.iter().enumerate() {
                let owner = s as u16;
                for (j, set) in filters[fi].per_weight_blocks.iter().enumerate() {
                    let (t, c) = (j / c_count, j % c_count);
                    let cells = &mut image[c][t][s * k..(s + 1) * k];
                    let mut blocks = set.comp_blocks();
                    for cell in cells.iter_mut() {
                        *cell = match blocks.next() {
                            Some(b) => match b.pattern {
                                BlockPattern::Comp { position, sign } => DbmuSlot {
                                    enabled: true,
                                    sign,
                                    index: b.index,
                                    position,
                                    owner: Some(owner),
                                },
                                BlockPattern::Zero => unreachable!(),
                            },
                            None => DbmuSlot::padding(owner),
                        };
                    }
                }
            }
            passes.push(Pass {
                macro_index: passes.len() % cfg.num_macros,
                phi_th: Some(phi_th),
                slots_per_filter: k,
                filters: group.to_vec(),
                image,
            });
        }
    }

    Ok(CompiledLayer {
        encoding: WeightEncoding::Dyadic,
        reduction_len: n,
        compartments: c_count,
        columns: cfg.dbmus_per_compartment,
        rows_per_dbmu: cfg.rows_per_dbmu,
        tiles,
        filter_ids: filters.iter().map(|f| f.filter_id).collect(),
        phi_th: filters.iter().map(|f| f.phi_th).collect(),
        skipped_filters,
        passes,
    })
}

/// Lays the same weights out as the dense baseline: eight two's-complement
/// cells per weight, `dense_filters_per_pass` filters per pass, every filter
/// scheduled.
pub fn map_dense_layer(
    filters: &[ThresholdedFilter],
    cfg: &MacroConfig,
) -> Result<CompiledLayer, Error> {
    let n = check_layer(filters, cfg)?;
    let c_count = cfg.compartments_per_macro;
    let tiles = n.div_ceil(c_count);
    let k = DENSE_CELLS_PER_WEIGHT;

    let mut passes = Vec::new();
    let order: Vec<usize> = (0..filters.len()).collect();
    for group in order.chunks(cfg.dense_filters_per_pass) {
        let mut image = empty_image(cfg, tiles);
        for (s, &fi) in group.iter().enumerate() {
            let owner = s as u16;
            for (j, &w) in filters[fi].weights.iter().enumerate() {
                let (t, c) = (j / c_count, j % c_count);
                let bits = w as u8;
                for (b, cell) in image[c][t][s * k..(s + 1) * k].iter_mut().enumerate() {
                    let b = b as u8;
                    *cell = DbmuSlot {
                        enabled: bits >> b & 1 == 1,
                        sign: Sign::from_bit(b == 7),
                        index: b / 2,
                        position: b % 2,
                        owner: Some(owner),
                    };
                }
            }
        }
        passes.push(Pass {
            macro_index: passes.len() % cfg.num_macros,
            phi_th: None,
            slots_per_filter: k,
            filters: group.to_vec(),
            image,
        });
    }

    Ok(CompiledLayer {
        encoding: WeightEncoding::TwosComplement,
        reduction_len: n,
        compartments: c_count,
        columns: cfg.dbmus_per_compartment,
        rows_per_dbmu: cfg.rows_per_dbmu,
        tiles,
        filter_ids: filters.iter().map(|f| f.filter_id).collect(),
        phi_th: filters.iter().map(|f| f.phi_th).collect(),
        skipped_filters: Vec::new(),
        passes,
    })
}

/// Sign/index metadata for one enabled slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetadataRecord {
    pub pass: usize,
    pub compartment: usize,
    pub row: usize,
    pub column: usize,
    pub filter: usize,
    pub sign: u8,
    pub index: u8,
}

/// Metadata for every enabled slot, in pass, compartment, row, column order.
pub fn emit_metadata(layer: &CompiledLayer) -> Vec<MetadataRecord> {
    let mut out = Vec::new();
    for (p, pass) in layer.passes.iter().enumerate() {
        for (c, rows) in pass.image.iter().enumerate() {
            for (r, row) in rows.iter().enumerate() {
                for (col, slot) in row.iter().enumerate() {
                    if !slot.enabled {
                        continue;
                    }
                    let owner = usize::from(slot.owner.expect("enabled slot has an owner"));
                    out.push(MetadataRecord {
                        pass: p,
                        compartment: c,
                        row: r,
                        column: col,
                        filter: pass.filters[owner],
                        sign: slot.sign.bit(),
                        index: slot.index,
                    });
                }
            }
        }
    }
    out
}

/// Writes metadata back into a layer's slots, the inverse of [`emit_metadata`].
pub fn apply_metadata(layer: &mut CompiledLayer, records: &[MetadataRecord]) -> Result<(), Error> {
    for rec in records {
        let slot = layer
            .passes
            .get_mut(rec.pass)
            .and_then(|p| p.image.get_mut(rec.compartment))
            .and_then(|c| c.get_mut(rec.row))
            .and_then(|r| r.get_mut(rec.column))
            .ok_or(Error::InvalidLayer("metadata record points outside the image"))?;
        if !slot.enabled || rec.index > 3 {
            return Err(Error::InvalidLayer("metadata record for a disabled slot"));
        }
        slot.sign = Sign::try_from(rec.sign)?;
        slot.index = rec.index;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "op", rename_all = "snake_case"))]
pub enum Instruction {
    /// Zero-threshold filter: no pass, output pinned to zero.
    SkipFilter { filter: usize },
    /// Write rows `first_row..first_row + rows` of a pass into its macro.
    LoadWeights {
        pass: usize,
        macro_index: usize,
        first_row: usize,
        rows: usize,
    },
    /// One bit-serial cycle on input bit column `bit` against `row`.
    Compute { pass: usize, row: usize, bit: u8 },
    /// Fold the row's shift-accumulated partial sums into the output accumulators.
    Accumulate { pass: usize, row: usize },
    /// Emit the pass's accumulators to the output register file.
    WriteBack { pass: usize },
}

/// Deterministic program for one compiled layer. Compute descriptors list all
/// eight bit columns; the simulator drops the ones the input unit masks out.
pub fn emit_instructions(layer: &CompiledLayer) -> Vec<Instruction> {
    let mut out: Vec<Instruction> = layer
        .skipped_filters
        .iter()
        .map(|&filter| Instruction::SkipFilter { filter })
        .collect();
    for (p, pass) in layer.passes.iter().enumerate() {
        out.push(Instruction::LoadWeights {
            pass: p,
            macro_index: pass.macro_index,
            first_row: 0,
            rows: layer.tiles,
        });
        for (row, _) in layer.row_schedule() {
            out.extend((0..8u8).rev().map(|bit| Instruction::Compute { pass: p, row, bit }));
            out.push(Instruction::Accumulate { pass: p, row });
        }
        out.push(Instruction::WriteBack { pass: p });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fta::{fta_quantize, Filter, FtaMode};

    fn thresholded(weights: &[Vec<i8>]) -> Vec<ThresholdedFilter> {
        let filters: Vec<Filter> = weights
            .iter()
            .enumerate()
            .map(|(i, w)| Filter::new(i, w.clone()).unwrap())
            .collect();
        fta_quantize(&filters, FtaMode::Exact).unwrap()
    }

    #[test]
    fn sixteen_phi1_filters_fill_one_pass() {
        let w: Vec<Vec<i8>> = (0..16).map(|i| vec![1 << (i % 7); 16]).collect();
        let tf = thresholded(&w);
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        assert_eq!(layer.passes.len(), 1);
        assert_eq!(layer.passes[0].filters.len(), 16);
        assert_eq!(layer.filter_slots_per_pass(1), 16);
        assert!(layer.passes[0].slots().all(|s| s.enabled));
        layer.validate().unwrap();
    }

    #[test]
    fn eight_phi2_filters_fill_one_pass() {
        let w: Vec<Vec<i8>> = (0..8).map(|_| vec![5; 16]).collect();
        let tf = thresholded(&w);
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        assert_eq!(layer.passes.len(), 1);
        assert_eq!(layer.passes[0].filters.len(), 8);
        assert_eq!(layer.passes[0].slots_per_filter, 2);
        assert_eq!(layer.passes[0].slots().filter(|s| s.enabled).count(), 16 * 16);
    }

    #[test]
    fn zero_filter_gets_no_slots() {
        let tf = thresholded(&[vec![0; 16]]);
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        assert!(layer.passes.is_empty());
        assert_eq!(layer.skipped_filters, vec![0]);
        assert_eq!(layer.decode_weights(), vec![vec![0; 16]]);
        assert_eq!(
            emit_instructions(&layer),
            vec![Instruction::SkipFilter { filter: 0 }]
        );
    }

    #[test]
    fn capacity_error_names_limit() {
        let tf = thresholded(&[vec![1; 1025]]);
        assert_eq!(
            map_layer(&tf, &MacroConfig::default()),
            Err(Error::Capacity {
                what: "reduction length per macro (rows_per_dbmu x compartments_per_macro)",
                required: 1025,
                limit: 1024
            })
        );
        assert!(map_layer(&thresholded(&[vec![1; 1024]]), &MacroConfig::default()).is_ok());
    }

    #[test]
    fn ragged_layer_is_a_shape_error() {
        let tf = thresholded(&[vec![1; 4], vec![1; 5]]);
        assert!(matches!(
            map_layer(&tf, &MacroConfig::default()),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn metadata_of_worked_example() {
        let tf = vec![ThresholdedFilter::from_weights(0, 1, vec![16, -128]).unwrap()];
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        let meta = emit_metadata(&layer);
        assert_eq!(meta.len(), 2);
        assert_eq!((meta[0].compartment, meta[0].sign, meta[0].index), (0, 0, 2));
        assert_eq!((meta[1].compartment, meta[1].sign, meta[1].index), (1, 1, 3));
        assert_eq!(layer.passes[0].row(0, 0)[0].position, 0);
        assert_eq!(layer.passes[0].row(1, 0)[0].position, 1);

        let mut copy = layer.clone();
        for slot in copy.passes[0].image.iter_mut().flatten().flatten() {
            slot.sign = Sign::Pos;
            slot.index = 0;
        }
        apply_metadata(&mut copy, &meta).unwrap();
        assert_eq!(copy, layer);
    }

    #[test]
    fn disabled_slots_have_no_metadata() {
        let tf = vec![ThresholdedFilter::from_weights(0, 2, vec![0, 5, 4, 0]).unwrap()];
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        assert_eq!(emit_metadata(&layer).len(), 3);
        let allocated = layer.passes[0].slots().filter(|s| s.is_allocated()).count();
        assert_eq!(allocated, 8);
    }

    #[test]
    fn minimal_and_tiled_instruction_streams() {
        let tf = thresholded(&[vec![1; 16]]);
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        let ins = emit_instructions(&layer);
        assert_eq!(ins.len(), 1 + 8 + 1 + 1);
        assert!(matches!(ins[0], Instruction::LoadWeights { rows: 1, .. }));
        assert!(matches!(ins[9], Instruction::Accumulate { row: 0, .. }));
        assert!(matches!(ins[10], Instruction::WriteBack { pass: 0 }));

        let tf = thresholded(&[vec![1; 32]]);
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        let ins = emit_instructions(&layer);
        let acc = ins
            .iter()
            .filter(|i| matches!(i, Instruction::Accumulate { .. }))
            .count();
        assert_eq!(layer.tiles, 2);
        assert_eq!(acc, 2);
        assert_eq!(layer.row_schedule().collect::<Vec<_>>(), vec![(0, 0), (1, 16)]);
    }

    #[test]
    fn mixed_thresholds_split_into_homogeneous_passes() {
        let mut w: Vec<Vec<i8>> = (0..20).map(|_| vec![4; 16]).collect();
        w.extend((0..10).map(|_| vec![6; 16]));
        let tf = thresholded(&w);
        let layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        let phis: Vec<_> = layer.passes.iter().map(|p| p.phi_th).collect();
        assert_eq!(phis, vec![Some(1), Some(1), Some(2), Some(2)]);
        let macros: Vec<_> = layer.passes.iter().map(|p| p.macro_index).collect();
        assert_eq!(macros, vec![0, 1, 2, 3]);
        let computes = emit_instructions(&layer)
            .iter()
            .filter(|i| matches!(i, Instruction::Compute { .. }))
            .count();
        assert_eq!(computes, 4 * 8);
    }

    #[test]
    fn dense_image_holds_twos_complement_bits() {
        let tf = vec![ThresholdedFilter::from_weights(0, 1, vec![2, -128, -1]).unwrap()];
        let dense = map_dense_layer(&tf, &MacroConfig::default()).unwrap();
        dense.validate().unwrap();
        assert_eq!(dense.decode_weights(), vec![vec![2, -128, -1]]);
        let row = dense.passes[0].filter_group(0, 0, 0);
        assert_eq!(row.iter().filter(|s| s.enabled).count(), 1);
        assert_eq!(dense.passes[0].filter_group(2, 0, 0).iter().filter(|s| s.enabled).count(), 8);
    }

    #[test]
    fn validate_catches_orphan_slots() {
        let tf = thresholded(&[vec![1; 16]]);
        let mut layer = map_layer(&tf, &MacroConfig::default()).unwrap();
        layer.passes[0].image[0][0][5] = DbmuSlot {
            enabled: true,
            ..DbmuSlot::EMPTY
        };
        assert!(layer.validate().is_err());
    }
}
