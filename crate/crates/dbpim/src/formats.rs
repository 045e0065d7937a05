//! Versioned JSON file formats and the CSV report.
//!
//! Every document carries `format_version`. Documents other than plain
//! tensors also carry a `kind` tag (`quantized`, `compiled`, `run`, `report`)
//! so a weights argument can be a raw tensor or the output of an earlier step.

use std::fs;
use std::io::Write;
use std::path::Path;

use dbpim_core::compiler::{apply_metadata, emit_instructions, emit_metadata};
use dbpim_core::csd::{BlockPattern, CsdWord, Sign};
use dbpim_core::metrics::{EnergyBreakdown, SimReport, UtilizationRecord};
use dbpim_core::sim::{PassTallies, Tallies};
use dbpim_core::{
    CompiledLayer, EnergyModel, FtaMode, Instruction, MetadataRecord, Signedness, SimMode, ThresholdedFilter,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

fn format_version() -> u32 {
    FORMAT_VERSION
}

pub fn check_version(path: &Path, v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(CliError::parse(
            path,
            format!("format_version {v} is not supported (expected {FORMAT_VERSION})"),
        ))
    }
}

/// Reads a whole file, refusing anything above `max_bytes`.
pub fn read_text(path: &Path, max_bytes: u64) -> Result<String> {
    let len = fs::metadata(path).map_err(|e| CliError::io(path, e))?.len();
    if len > max_bytes {
        return Err(CliError::invalid(
            path,
            format!("file is {len} bytes, above the {max_bytes}-byte size guard"),
        ));
    }
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::json(path, text, &e))
}

/// Pretty JSON with a trailing newline. Output is byte-stable for equal values.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types always serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Byte budget for a tensor of at most `max_elements` entries.
fn tensor_byte_guard(max_elements: usize) -> u64 {
    (max_elements as u64).saturating_mul(16).saturating_add(64 * 1024)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    I8,
    U8,
}

impl Dtype {
    pub fn range(self) -> (i64, i64) {
        match self {
            Dtype::I8 => (-128, 127),
            Dtype::U8 => (0, 255),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::I8 => "i8",
            Dtype::U8 => "u8",
        }
    }
}

impl Default for Dtype {
    fn default() -> Self {
        Signedness::default().into()
    }
}

impl From<Signedness> for Dtype {
    fn from(s: Signedness) -> Self {
        match s {
            Signedness::Unsigned8 => Dtype::U8,
            Signedness::Signed8 => Dtype::I8,
        }
    }
}

impl From<Dtype> for Signedness {
    fn from(d: Dtype) -> Self {
        match d {
            Dtype::U8 => Signedness::Unsigned8,
            Dtype::I8 => Signedness::Signed8,
        }
    }
}

/// Dense integer tensor, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub dims: Vec<usize>,
    pub dtype: Dtype,
    pub data: Vec<i64>,
}

impl TensorFile {
    pub fn new(dims: Vec<usize>, dtype: Dtype, data: Vec<i64>) -> Self {
        TensorFile {
            format_version: FORMAT_VERSION,
            dims,
            dtype,
            data,
        }
    }

    pub fn from_rows<T: Copy + Into<i64>>(rows: &[Vec<T>], dtype: Dtype) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flatten().map(|&v| v.into()).collect();
        Self::new(vec![rows.len(), cols], dtype, data)
    }

    pub fn load(path: &Path, max_elements: usize) -> Result<Self> {
        let text = read_text(path, tensor_byte_guard(max_elements))?;
        let t: TensorFile = parse_json(path, &text)?;
        t.validate(path, max_elements)?;
        Ok(t)
    }

    pub fn validate(&self, path: &Path, max_elements: usize) -> Result<()> {
        check_version(path, self.format_version)?;
        if self.dims.is_empty() {
            return Err(CliError::shape(path, "dims must have at least one entry"));
        }
        let count = self
            .dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n <= max_elements)
            .ok_or_else(|| {
                CliError::invalid(
                    path,
                    format!(
                        "dims {:?} exceed the size guard of {max_elements} elements",
                        self.dims
                    ),
                )
            })?;
        if count != self.data.len() {
            return Err(CliError::shape(
                path,
                format!(
                    "dims {:?} hold {count} elements but data has {}",
                    self.dims,
                    self.data.len()
                ),
            ));
        }
        let (lo, hi) = self.dtype.range();
        if let Some((i, v)) = self
            .data
            .iter()
            .enumerate()
            .find(|(_, &v)| !(lo..=hi).contains(&v))
        {
            return Err(CliError::parse(
                path,
                format!("data[{i}] = {v} is outside the {} range", self.dtype.name()),
            ));
        }
        Ok(())
    }

    /// Rows of a 2-D tensor, or the single row of a 1-D one.
    pub fn rows(&self) -> Vec<&[i64]> {
        let width = *self.dims.last().unwrap_or(&0);
        if width == 0 {
            return Vec::new();
        }
        self.data.chunks(width).collect()
    }
}

/// The `kind` tag, read without committing to a schema.
#[derive(Deserialize)]
struct Probe {
    #[serde(default)]
    kind: Option<String>,
}

pub fn probe_kind(path: &Path, text: &str) -> Result<Option<String>> {
    let p: Probe = parse_json(path, text)?;
    Ok(p.kind)
}

fn expect_kind(path: &Path, kind: &str, want: &str) -> Result<()> {
    if kind == want {
        Ok(())
    } else {
        Err(CliError::parse(
            path,
            format!("kind is \"{kind}\", expected \"{want}\""),
        ))
    }
}

/// One complementary block: digit `2 * index + position` with the given sign
/// bit (0 positive, 1 negative).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub index: u8,
    pub position: u8,
    pub sign: Sign,
}

impl BlockEntry {
    pub fn value(&self) -> i32 {
        self.sign.factor() << (2 * self.index + self.position)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizedFilter {
    pub filter_id: usize,
    pub phi_th: u8,
    pub weights: Vec<i8>,
    /// CSD text of each weight, most significant digit first.
    pub csd: Vec<String>,
    pub blocks: Vec<Vec<BlockEntry>>,
    pub mean_abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizeSummary {
    pub filters: usize,
    pub reduction_len: usize,
    /// Filters per threshold 0, 1, 2.
    pub phi_th_histogram: [usize; 3],
    pub mean_abs_error: f64,
    pub max_abs_error: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizedFile {
    pub format_version: u32,
    pub kind: String,
    pub mode: FtaMode,
    pub filters: Vec<QuantizedFilter>,
    pub summary: QuantizeSummary,
}

impl QuantizedFile {
    pub const KIND: &'static str = "quantized";

    pub fn build(original: &[Vec<i8>], filters: &[ThresholdedFilter], mode: FtaMode) -> Self {
        let mut histogram = [0usize; 3];
        let mut total_err = 0u64;
        let mut max_err = 0u32;
        let mut count = 0u64;
        let out = filters
            .iter()
            .zip(original)
            .map(|(f, orig)| {
                histogram[usize::from(f.phi_th)] += 1;
                let errs: Vec<u32> = f
                    .weights
                    .iter()
                    .zip(orig)
                    .map(|(&a, &b)| (i32::from(a) - i32::from(b)).unsigned_abs())
                    .collect();
                let sum: u64 = errs.iter().map(|&e| u64::from(e)).sum();
                total_err += sum;
                count += errs.len() as u64;
                max_err = errs.iter().copied().fold(max_err, u32::max);
                QuantizedFilter {
                    filter_id: f.filter_id,
                    phi_th: f.phi_th,
                    weights: f.weights.clone(),
                    csd: f.weights.iter().map(|&w| CsdWord::from(w).to_string()).collect(),
                    blocks: f
                        .per_weight_blocks
                        .iter()
                        .map(|set| {
                            set.blocks
                                .iter()
                                .filter_map(|b| match b.pattern {
                                    BlockPattern::Zero => None,
                                    BlockPattern::Comp { position, sign } => Some(BlockEntry {
                                        index: b.index,
                                        position,
                                        sign,
                                    }),
                                })
                                .collect()
                        })
                        .collect(),
                    mean_abs_error: sum as f64 / errs.len().max(1) as f64,
                }
            })
            .collect();
        QuantizedFile {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.to_string(),
            mode,
            filters: out,
            summary: QuantizeSummary {
                filters: filters.len(),
                reduction_len: filters.first().map_or(0, |f| f.weights.len()),
                phi_th_histogram: histogram,
                mean_abs_error: total_err as f64 / count.max(1) as f64,
                max_abs_error: max_err,
            },
        }
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let q: QuantizedFile = parse_json(path, text)?;
        check_version(path, q.format_version)?;
        expect_kind(path, &q.kind, Self::KIND)?;
        Ok(q)
    }

    /// Thresholded filters, after checking thresholds, lengths and blocks.
    pub fn to_filters(&self, path: &Path) -> Result<Vec<ThresholdedFilter>> {
        let len = self.filters.first().map_or(0, |f| f.weights.len());
        let mut out = Vec::with_capacity(self.filters.len());
        for (i, f) in self.filters.iter().enumerate() {
            if f.weights.len() != len {
                return Err(CliError::shape(
                    path,
                    format!(
                        "filter {i} has {} weights, filter 0 has {len}",
                        f.weights.len()
                    ),
                ));
            }
            if f.blocks.len() != f.weights.len() {
                return Err(CliError::shape(
                    path,
                    format!(
                        "filter {i} lists blocks for {} weights, expected {}",
                        f.blocks.len(),
                        f.weights.len()
                    ),
                ));
            }
            for (j, (&w, blocks)) in f.weights.iter().zip(&f.blocks).enumerate() {
                let sum: i32 = blocks.iter().map(BlockEntry::value).sum();
                if sum != i32::from(w) || blocks.iter().any(|b| b.index > 3 || b.position > 1) {
                    return Err(CliError::invalid(
                        path,
                        format!("filter {i} weight {j}: blocks encode {sum}, weight is {w}"),
                    ));
                }
            }
            out.push(
                ThresholdedFilter::from_weights(f.filter_id, f.phi_th, f.weights.clone())
                    .map_err(|e| CliError::core(path, e))?,
            );
        }
        Ok(out)
    }
}

/// Approximated weights as stored alongside a compiled image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterWeights {
    pub filter_id: usize,
    pub phi_th: u8,
    pub weights: Vec<i8>,
}

impl From<&ThresholdedFilter> for FilterWeights {
    fn from(f: &ThresholdedFilter) -> Self {
        FilterWeights {
            filter_id: f.filter_id,
            phi_th: f.phi_th,
            weights: f.weights.clone(),
        }
    }
}

/// A mapped layer: the image, its sign/index metadata stream and the
/// instruction program. On load the metadata is written back over the image,
/// so edits to `metadata` take effect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompiledFile {
    pub format_version: u32,
    pub kind: String,
    pub mode: SimMode,
    pub filters: Vec<FilterWeights>,
    pub layer: CompiledLayer,
    pub metadata: Vec<MetadataRecord>,
    pub instructions: Vec<Instruction>,
}

impl CompiledFile {
    pub const KIND: &'static str = "compiled";

    pub fn build(filters: Vec<FilterWeights>, layer: CompiledLayer, mode: SimMode) -> Self {
        CompiledFile {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.to_string(),
            mode,
            filters,
            metadata: emit_metadata(&layer),
            instructions: emit_instructions(&layer),
            layer,
        }
    }

    /// Parses the file and applies its metadata to the image.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut c: CompiledFile = parse_json(path, text)?;
        check_version(path, c.format_version)?;
        expect_kind(path, &c.kind, Self::KIND)?;
        if c.layer.encoding != c.mode.encoding() {
            return Err(CliError::invalid(
                path,
                "layer encoding does not match the file's mode",
            ));
        }
        if c.filters.len() != c.layer.filter_count() {
            return Err(CliError::shape(
                path,
                format!(
                    "{} filters listed but the layer holds {}",
                    c.filters.len(),
                    c.layer.filter_count()
                ),
            ));
        }
        apply_metadata(&mut c.layer, &c.metadata).map_err(|e| CliError::core(path, e))?;
        c.layer.validate().map_err(|e| CliError::core(path, e))?;
        Ok(c)
    }
}

/// One layer of a single-mode simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLayer {
    pub name: String,
    pub weights_file: String,
    pub inputs_file: Option<String>,
    pub filter_ids: Vec<usize>,
    /// One row of outputs per input vector.
    pub outputs: Vec<Vec<i64>>,
    pub cycles: u64,
    pub utilization: Option<UtilizationRecord>,
    pub energy: EnergyBreakdown,
    pub tallies: Tallies,
    pub passes: Vec<PassTallies>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub format_version: u32,
    pub kind: String,
    pub mode: SimMode,
    pub chained: bool,
    pub include_weight_load_cycles: bool,
    pub energy_model: EnergyModel,
    pub layers: Vec<RunLayer>,
}

impl RunReport {
    pub const KIND: &'static str = "run";

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path, 1 << 30)?;
        let r: RunReport = parse_json(path, &text)?;
        check_version(path, r.format_version)?;
        expect_kind(path, &r.kind, Self::KIND)?;
        Ok(r)
    }
}

/// DB-PIM and dense runs of the same layers, side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub kind: String,
    /// Per layer: whether both modes produced the same outputs.
    pub outputs_match: Vec<bool>,
    #[serde(flatten)]
    pub report: SimReport,
}

impl ReportFile {
    pub const KIND: &'static str = "report";
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per layer plus an `aggregate` row.
pub fn write_csv(path: &Path, report: &SimReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::invalid(path, e);
    w.write_record([
        "layer",
        "dbpim_cycles",
        "dense_cycles",
        "speedup",
        "dbpim_energy",
        "dense_energy",
        "energy_savings",
        "dbpim_u_act",
        "dense_u_act",
    ])
    .map_err(io)?;
    for l in &report.layers {
        w.write_record([
            l.name.clone(),
            l.dbpim.cycles.to_string(),
            l.dense.cycles.to_string(),
            opt(l.speedup),
            l.dbpim.energy.total.to_string(),
            l.dense.energy.total.to_string(),
            opt(l.energy_savings),
            opt(l.dbpim.utilization.map(|u| u.u_act)),
            opt(l.dense.utilization.map(|u| u.u_act)),
        ])
        .map_err(io)?;
    }
    let a = &report.aggregate;
    w.write_record([
        "aggregate".to_string(),
        a.dbpim_cycles.to_string(),
        a.dense_cycles.to_string(),
        opt(a.speedup),
        a.dbpim_energy.to_string(),
        a.dense_energy.to_string(),
        opt(a.energy_savings),
        opt(a.dbpim_utilization.map(|u| u.u_act)),
        opt(a.dense_utilization.map(|u| u.u_act)),
    ])
    .map_err(io)?;
    let bytes = w.into_inner().map_err(|e| CliError::invalid(path, e))?;
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| CliError::io(path, e))
}
