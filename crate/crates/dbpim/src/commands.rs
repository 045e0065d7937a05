//! The `dbpim` subcommands.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use dbpim_core::metrics::{self, LayerRun};
use dbpim_core::oracle;
use dbpim_core::sim::{run_layer, SimOutput};
use dbpim_core::{
    fta_quantize, map_dense_layer, map_layer, speedup_and_energy, CompiledLayer, Filter, FtaMode,
    MacroConfig, SimMode, ThresholdedFilter, TraceSink,
};
use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::formats::{
    self, write_csv, write_json, CompiledFile, Dtype, FilterWeights, QuantizedFile, ReportFile,
    RunLayer, RunReport, TensorFile, FORMAT_VERSION,
};
use crate::trace::TextTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Dbpim,
    Dense,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dbpim => SimMode::DbPim,
            ModeArg::Dense => SimMode::DenseBaseline,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FtaArg {
    Exact,
    Atmost,
}

impl From<FtaArg> for FtaMode {
    fn from(m: FtaArg) -> Self {
        match m {
            FtaArg::Exact => FtaMode::Exact,
            FtaArg::Atmost => FtaMode::AtMost,
        }
    }
}

fn mode_name(m: SimMode) -> &'static str {
    match m {
        SimMode::DbPim => "dbpim",
        SimMode::DenseBaseline => "dense",
    }
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// 2-D i8 tensor, filters x reduction.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the configuration's fta_mode.
    #[arg(long, value_enum)]
    pub mode: Option<FtaArg>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Raw tensor or quantized file.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dbpim")]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One per layer: raw tensor, quantized file or compiled file.
    #[arg(long, required = true)]
    pub weights: Vec<PathBuf>,
    /// 1-D vector or 2-D batch. One per layer, a single one shared by all
    /// layers, or with --chain only the first layer's.
    #[arg(long, required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dbpim")]
    pub mode: ModeArg,
    #[arg(long)]
    pub report: PathBuf,
    /// Per-cycle text trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Feed each layer's outputs, through the configured hook, to the next layer.
    #[arg(long)]
    pub chain: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run report from `simulate --mode dbpim`.
    #[arg(long)]
    pub dbpim: PathBuf,
    /// Run report from `simulate --mode dense` on the same layers.
    #[arg(long)]
    pub dense: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, requires = "inputs", conflicts_with = "cases")]
    pub weights: Option<PathBuf>,
    #[arg(long, requires = "weights")]
    pub inputs: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random cases drawn from the configuration seed.
    #[arg(long, required_unless_present = "weights")]
    pub cases: Option<usize>,
    /// Worker threads for --cases; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Weights as given on the command line.
enum Source {
    Filters(Vec<ThresholdedFilter>),
    Compiled(Box<CompiledFile>),
}

struct LoadedLayer {
    path: PathBuf,
    source: Source,
}

impl LoadedLayer {
    fn weights(&self) -> Vec<FilterWeights> {
        match &self.source {
            Source::Filters(f) => f.iter().map(FilterWeights::from).collect(),
            Source::Compiled(c) => c.filters.clone(),
        }
    }

    fn compile(&self, cfg: &MacroConfig, mode: SimMode) -> Result<CompiledLayer> {
        match &self.source {
            Source::Filters(f) => match mode {
                SimMode::DbPim => map_layer(f, cfg),
                SimMode::DenseBaseline => map_dense_layer(f, cfg),
            }
            .map_err(|e| CliError::core(&self.path, e)),
            Source::Compiled(c) => {
                if c.mode != mode {
                    return Err(CliError::invalid(
                        &self.path,
                        format!(
                            "compiled for {} mode, cannot simulate in {} mode",
                            mode_name(c.mode),
                            mode_name(mode)
                        ),
                    ));
                }
                if c.layer.rows_per_dbmu != cfg.rows_per_dbmu {
                    return Err(CliError::invalid(
                        &self.path,
                        format!(
                            "compiled for rows_per_dbmu {}, configuration has {}",
                            c.layer.rows_per_dbmu, cfg.rows_per_dbmu
                        ),
                    ));
                }
                Ok(c.layer.clone())
            }
        }
    }

    fn name(&self) -> String {
        self.path
            .file_stem()
            .map_or_else(|| self.path.display().to_string(), |s| s.to_string_lossy().into_owned())
    }
}

/// Filters x reduction weight matrix from a raw tensor.
fn load_weight_rows(path: &Path, text: &str, max_elements: usize) -> Result<Vec<Vec<i8>>> {
    let t: TensorFile = formats::parse_json(path, text)?;
    t.validate(path, max_elements)?;
    if t.dims.len() != 2 {
        return Err(CliError::shape(
            path,
            format!("weights must be 2-D (filters x reduction), got dims {:?}", t.dims),
        ));
    }
    if t.dims.contains(&0) {
        return Err(CliError::shape(path, format!("weights dims {:?} contain a zero", t.dims)));
    }
    if t.dtype != Dtype::I8 {
        return Err(CliError::invalid(path, "weights must have dtype i8"));
    }
    Ok(t.rows()
        .into_iter()
        .map(|r| r.iter().map(|&v| v as i8).collect())
        .collect())
}

fn quantize_rows(path: &Path, rows: &[Vec<i8>], mode: FtaMode) -> Result<Vec<ThresholdedFilter>> {
    let filters = rows
        .iter()
        .enumerate()
        .map(|(i, r)| Filter::new(i, r.clone()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::core(path, e))?;
    fta_quantize(&filters, mode).map_err(|e| CliError::core(path, e))
}

fn load_layer(path: &Path, cfg: &ConfigFile) -> Result<LoadedLayer> {
    let text = formats::read_text(path, (cfg.max_elements as u64).saturating_mul(64).max(1 << 20))?;
    let source = match formats::probe_kind(path, &text)?.as_deref() {
        None => {
            let rows = load_weight_rows(path, &text, cfg.max_elements)?;
            Source::Filters(quantize_rows(path, &rows, cfg.fta_mode)?)
        }
        Some(QuantizedFile::KIND) => {
            Source::Filters(QuantizedFile::parse(path, &text)?.to_filters(path)?)
        }
        Some(CompiledFile::KIND) => Source::Compiled(Box::new(CompiledFile::parse(path, &text)?)),
        Some(other) => {
            return Err(CliError::parse(
                path,
                format!("a \"{other}\" file cannot be used as weights"),
            ))
        }
    };
    debug!("loaded {}", path.display());
    Ok(LoadedLayer {
        path: path.to_path_buf(),
        source,
    })
}

/// Input vectors from a 1-D or 2-D tensor whose dtype matches the configuration.
fn load_inputs(path: &Path, cfg: &ConfigFile) -> Result<Vec<Vec<i32>>> {
    let t = TensorFile::load(path, cfg.max_elements)?;
    if t.dims.len() > 2 {
        return Err(CliError::shape(
            path,
            format!("inputs must be 1-D or 2-D (batch x reduction), got dims {:?}", t.dims),
        ));
    }
    if t.dtype != cfg.input_dtype {
        return Err(CliError::invalid(
            path,
            format!(
                "dtype {} does not match the configured input_dtype {}",
                t.dtype.name(),
                cfg.input_dtype.name()
            ),
        ));
    }
    let rows: Vec<Vec<i32>> = t
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|&v| v as i32).collect())
        .collect();
    if rows.is_empty() {
        return Err(CliError::shape(path, "inputs hold no vectors"));
    }
    Ok(rows)
}

/// Runs every input vector through one compiled layer, merging the tallies.
fn run_batches(
    layer: &CompiledLayer,
    batches: &[Vec<i32>],
    cfg: &MacroConfig,
    mode: SimMode,
    weights: &Path,
    inputs: &Path,
    mut trace: Option<&mut TextTrace<BufWriter<File>>>,
) -> Result<(Vec<Vec<i64>>, SimOutput)> {
    let mut outputs = Vec::with_capacity(batches.len());
    let mut total: Option<SimOutput> = None;
    for (b, x) in batches.iter().enumerate() {
        if x.len() != layer.reduction_len {
            return Err(CliError::shape(
                inputs,
                format!(
                    "input vector {b} has {} values, layer {} expects {}",
                    x.len(),
                    weights.display(),
                    layer.reduction_len
                ),
            ));
        }
        if let Some(t) = trace.as_deref_mut() {
            t.note(&format!("layer {} input {b}", weights.display()));
        }
        let out = run_layer(layer, x, cfg, mode, trace.as_deref_mut().map(|t| t as &mut dyn TraceSink))
            .map_err(|e| match e {
                dbpim_core::Error::InputOutOfRange { .. } => CliError::core(inputs, e),
                _ => CliError::core(weights, e),
            })?;
        outputs.push(out.outputs.clone());
        match &mut total {
            None => total = Some(out),
            Some(t) => t.merge_tallies(&out),
        }
    }
    let mut total = total.expect("at least one input vector");
    total.outputs = outputs.iter().flatten().copied().collect();
    Ok((outputs, total))
}

pub fn quantize(args: &QuantizeArgs) -> Result<()> {
    let cfg = ConfigFile::load_or_default(args.config.as_deref())?;
    let mode = args.mode.map_or(cfg.fta_mode, FtaMode::from);
    let text = formats::read_text(&args.weights, (cfg.max_elements as u64).saturating_mul(16).max(1 << 20))?;
    let rows = load_weight_rows(&args.weights, &text, cfg.max_elements)?;
    let filters = quantize_rows(&args.weights, &rows, mode)?;
    let q = QuantizedFile::build(&rows, &filters, mode);
    write_json(&args.out, &q)?;
    let s = &q.summary;
    println!(
        "{} filters x {}: phi_th histogram {:?}, mean abs error {:.4}, max abs error {}",
        s.filters, s.reduction_len, s.phi_th_histogram, s.mean_abs_error, s.max_abs_error
    );
    Ok(())
}

pub fn compile(args: &CompileArgs) -> Result<()> {
    let cfg = ConfigFile::load_or_default(args.config.as_deref())?;
    let mode = SimMode::from(args.mode);
    let layer = load_layer(&args.weights, &cfg)?;
    let compiled = layer.compile(&cfg.macro_config(), mode)?;
    let file = CompiledFile::build(layer.weights(), compiled, mode);
    info!(
        "{}: {} passes, {} metadata records, {} instructions",
        args.weights.display(),
        file.layer.passes.len(),
        file.metadata.len(),
        file.instructions.len()
    );
    write_json(&args.out, &file)?;
    println!(
        "{} filters -> {} passes, {} instructions",
        file.filters.len(),
        file.layer.passes.len(),
        file.instructions.len()
    );
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg_file = ConfigFile::load_or_default(args.config.as_deref())?;
    let cfg = cfg_file.macro_config();
    let mode = SimMode::from(args.mode);
    let n = args.weights.len();
    let input_files = args.inputs.len();
    if args.chain && input_files != 1 {
        return Err(CliError::invalid(
            &args.inputs[0],
            format!("--chain takes one --inputs file, got {input_files}"),
        ));
    }
    if !args.chain && input_files != 1 && input_files != n {
        return Err(CliError::invalid(
            &args.inputs[0],
            format!("{input_files} --inputs files for {n} --weights files"),
        ));
    }

    let mut trace = match &args.trace {
        Some(p) => Some(TextTrace::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        ))),
        None => None,
    };

    let mut layers = Vec::with_capacity(n);
    let mut chained: Option<Vec<Vec<i32>>> = None;
    for (i, wpath) in args.weights.iter().enumerate() {
        let layer = load_layer(wpath, &cfg_file)?;
        let compiled = layer.compile(&cfg, mode)?;
        let ipath = args.inputs.get(i).unwrap_or(&args.inputs[0]);
        let (batches, inputs_file) = match chained.take() {
            Some(b) => (b, None),
            None => (load_inputs(ipath, &cfg_file)?, Some(ipath.display().to_string())),
        };
        let (outputs, out) = run_batches(&compiled, &batches, &cfg, mode, wpath, ipath, trace.as_mut())?;
        if args.chain {
            let hook = cfg_file.hook();
            chained = Some(outputs.iter().map(|o| hook.apply(o, cfg.signedness)).collect());
        }
        let mut name = layer.name();
        if layers.iter().any(|l: &RunLayer| l.name == name) {
            name = format!("{name}#{i}");
        }
        info!(
            "{name}: {} compute cycles, {} skipped",
            out.tallies.compute_cycles, out.tallies.skipped_cycles
        );
        layers.push(RunLayer {
            name,
            weights_file: wpath.display().to_string(),
            inputs_file,
            filter_ids: compiled.filter_ids.clone(),
            outputs,
            cycles: metrics::cycles(&out.tallies, cfg.include_weight_load_cycles),
            utilization: metrics::run_utilization(&out.tallies),
            energy: metrics::energy(&out.tallies, &cfg.energy),
            tallies: out.tallies,
            passes: out.passes,
        });
    }

    if let (Some(t), Some(p)) = (trace, &args.trace) {
        t.finish().map_err(|e| CliError::io(p, e))?;
    }
    let report = RunReport {
        format_version: FORMAT_VERSION,
        kind: RunReport::KIND.to_string(),
        mode,
        chained: args.chain,
        include_weight_load_cycles: cfg.include_weight_load_cycles,
        energy_model: cfg.energy,
        layers,
    };
    write_json(&args.report, &report)?;
    let cycles: u64 = report.layers.iter().map(|l| l.cycles).sum();
    println!("{} layers, {} mode, {cycles} cycles", report.layers.len(), mode_name(mode));
    Ok(())
}

fn layer_runs(r: &RunReport) -> Vec<LayerRun> {
    r.layers
        .iter()
        .map(|l| LayerRun {
            name: l.name.clone(),
            output: SimOutput {
                outputs: l.outputs.iter().flatten().copied().collect(),
                tallies: l.tallies,
                passes: l.passes.clone(),
            },
        })
        .collect()
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let db = RunReport::load(&args.dbpim)?;
    let dense = RunReport::load(&args.dense)?;
    if db.mode != SimMode::DbPim {
        return Err(CliError::invalid(&args.dbpim, "not a dbpim-mode run report"));
    }
    if dense.mode != SimMode::DenseBaseline {
        return Err(CliError::invalid(&args.dense, "not a dense-mode run report"));
    }
    if db.include_weight_load_cycles != dense.include_weight_load_cycles
        || db.energy_model != dense.energy_model
    {
        return Err(CliError::invalid(
            &args.dense,
            format!(
                "cost settings differ from {} (include_weight_load_cycles, energy)",
                args.dbpim.display()
            ),
        ));
    }
    let sim = speedup_and_energy(
        &layer_runs(&db),
        &layer_runs(&dense),
        &db.energy_model,
        db.include_weight_load_cycles,
    )
    .map_err(|e| CliError::core(&args.dense, e))?;
    let outputs_match: Vec<bool> = db
        .layers
        .iter()
        .zip(&dense.layers)
        .map(|(a, b)| a.outputs == b.outputs)
        .collect();
    for (l, ok) in db.layers.iter().zip(&outputs_match) {
        if !ok {
            log::warn!("{}: dbpim and dense outputs differ", l.name);
        }
    }
    if let Some(csv) = &args.csv {
        write_csv(csv, &sim)?;
    }
    let a = &sim.aggregate;
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "speedup {} over {} layers, energy savings {}",
        show(a.speedup),
        sim.layers.len(),
        show(a.energy_savings)
    );
    write_json(
        &args.out,
        &ReportFile {
            format_version: FORMAT_VERSION,
            kind: ReportFile::KIND.to_string(),
            outputs_match,
            report: sim,
        },
    )
}

/// First filter position where two output rows differ.
fn first_difference(expected: &[i64], got: &[i64]) -> Option<usize> {
    if expected.len() != got.len() {
        return Some(expected.len().min(got.len()));
    }
    expected.iter().zip(got).position(|(a, b)| a != b)
}

fn weight_rows(w: &[FilterWeights]) -> Vec<Vec<i8>> {
    w.iter().map(|f| f.weights.clone()).collect()
}

/// Simulator vs oracle on one layer and one input vector, in one mode.
fn check_case(
    layer: &CompiledLayer,
    weights: &[FilterWeights],
    inputs: &[i32],
    cfg: &MacroConfig,
    mode: SimMode,
) -> std::result::Result<Vec<i64>, String> {
    let expected = oracle::dot_reference(&weight_rows(weights), inputs, cfg.signedness)
        .map_err(|e| format!("oracle rejected the case: {e}"))?
        .outputs;
    let got = run_layer(layer, inputs, cfg, mode, None)
        .map_err(|e| format!("simulator error: {e}"))?
        .outputs;
    match first_difference(&expected, &got) {
        None => Ok(got),
        Some(f) => Err(format!(
            "{} mode: first differing filter {f} (id {}): expected {}, got {}",
            mode_name(mode),
            weights.get(f).map_or(f, |w| w.filter_id),
            expected.get(f).map_or("none".into(), i64::to_string),
            got.get(f).map_or("none".into(), i64::to_string)
        )),
    }
}

/// Weights read back from the image must equal the stored weights.
fn check_decode(layer: &CompiledLayer, weights: &[FilterWeights]) -> std::result::Result<(), String> {
    for (f, (row, w)) in layer.decode_weights().iter().zip(weights).enumerate() {
        if let Some(j) = row.iter().zip(&w.weights).position(|(&a, &b)| a != i32::from(b)) {
            return Err(format!(
                "image decodes filter {f} (id {}) weight {j} to {}, expected {}",
                w.filter_id, row[j], w.weights[j]
            ));
        }
    }
    Ok(())
}

/// One random layer checked in both modes. Each case has its own stream so
/// results do not depend on how cases are spread over workers.
fn random_case(cfg: &MacroConfig, seed: u64, index: usize) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let len = rng.random_range(1..=cfg.reduction_capacity().min(128));
    let count = rng.random_range(1..=24);
    let style = rng.random_range(0..4u8);
    let filters: Vec<Filter> = (0..count)
        .map(|i| {
            let w = (0..len)
                .map(|_| match style {
                    0 => rng.random::<i8>(),
                    1 => rng.random_range(-12..=12),
                    2 if rng.random_bool(0.8) => 0,
                    _ => rng.random::<i8>(),
                })
                .collect();
            Filter::new(i, w).expect("non-empty filter")
        })
        .collect();
    let tf = fta_quantize(&filters, cfg.fta_mode).map_err(|e| e.to_string())?;
    let (lo, hi) = cfg.signedness.range();
    let width = rng.random_range(1..=8u32);
    let inputs: Vec<i32> = (0..len)
        .map(|_| (rng.random_range(lo..=hi) >> (8 - width)).clamp(lo, hi))
        .collect();
    let weights: Vec<FilterWeights> = tf.iter().map(FilterWeights::from).collect();
    for mode in [SimMode::DbPim, SimMode::DenseBaseline] {
        let layer = match mode {
            SimMode::DbPim => map_layer(&tf, cfg),
            SimMode::DenseBaseline => map_dense_layer(&tf, cfg),
        }
        .map_err(|e| e.to_string())?;
        check_decode(&layer, &weights)?;
        check_case(&layer, &weights, &inputs, cfg, mode)?;
    }
    Ok(())
}

fn verify_random(cfg_file: &ConfigFile, cases: usize, jobs: Option<usize>) -> Vec<(String, std::result::Result<(), String>)> {
    let cfg = cfg_file.macro_config();
    let jobs = jobs
        .or_else(|| std::thread::available_parallelism().ok().map(usize::from))
        .unwrap_or(1)
        .clamp(1, cases.max(1));
    let mut results: Vec<Option<std::result::Result<(), String>>> = vec![None; cases];
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let cfg = &cfg;
                s.spawn(move || {
                    (w..cases)
                        .step_by(jobs)
                        .map(|i| (i, random_case(cfg, cfg_file.seed, i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("verify worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| (format!("case {i}"), r.expect("every case ran")))
        .collect()
}

fn verify_files(
    cfg_file: &ConfigFile,
    weights: &Path,
    inputs: &Path,
) -> Result<Vec<(String, std::result::Result<(), String>)>> {
    let cfg = cfg_file.macro_config();
    let layer = load_layer(weights, cfg_file)?;
    let batches = load_inputs(inputs, cfg_file)?;
    let modes = match &layer.source {
        Source::Compiled(c) => vec![c.mode],
        Source::Filters(_) => vec![SimMode::DbPim, SimMode::DenseBaseline],
    };
    let stored = layer.weights();
    let mut results = Vec::new();
    for mode in modes {
        let compiled = layer.compile(&cfg, mode)?;
        let name = mode_name(mode);
        results.push((format!("{name} image"), check_decode(&compiled, &stored)));
        for (b, x) in batches.iter().enumerate() {
            if x.len() != compiled.reduction_len {
                return Err(CliError::shape(
                    inputs,
                    format!(
                        "input vector {b} has {} values, layer expects {}",
                        x.len(),
                        compiled.reduction_len
                    ),
                ));
            }
            let r = check_case(&compiled, &stored, x, &cfg, mode).map(|out| {
                debug!("{name} input {b}: {out:?}");
                if out.len() <= 8 {
                    println!("{name} input {b}: outputs {out:?}");
                }
            });
            results.push((format!("{name} input {b}"), r));
        }
    }
    Ok(results)
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let cfg_file = ConfigFile::load_or_default(args.config.as_deref())?;
    let results = match (&args.weights, &args.inputs, args.cases) {
        (Some(w), Some(i), _) => verify_files(&cfg_file, w, i)?,
        (_, _, Some(n)) => verify_random(&cfg_file, n, args.jobs),
        _ => {
            return Err(CliError::invalid(
                args.config.as_deref().unwrap_or(Path::new("<command line>")),
                "verify needs --cases N or both --weights and --inputs",
            ))
        }
    };
    let mut first_failure = None;
    for (name, r) in &results {
        match r {
            Ok(()) => println!("{name}: pass"),
            Err(why) => {
                println!("{name}: FAIL {why}");
                first_failure.get_or_insert_with(|| format!("{name}: {why}"));
            }
        }
    }
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("verify: {}/{} passed", results.len() - failed, results.len());
    match first_failure {
        None => Ok(()),
        Some(first) => Err(CliError::Mismatch(format!(
            "{failed} of {} checks failed; first: {first}",
            results.len()
        ))),
    }
}
