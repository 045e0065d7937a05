//! Actual utilization, speedup and energy estimates from simulator tallies.

use alloc::string::String;
use alloc::vec::Vec;

use crate::config::EnergyModel;
use crate::error::Error;
use crate::sim::{PassTallies, SimOutput, Tallies};

/// Fraction of participating cells that process a non-zero stored bit.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UtilizationRecord {
    pub effective_cells: u64,
    pub total_cells: u64,
    pub u_act: f64,
}

/// `None` when no cell took part in any executed cycle.
pub fn utilization(effective_cells: u64, total_cells: u64) -> Option<UtilizationRecord> {
    (total_cells > 0).then(|| UtilizationRecord {
        effective_cells,
        total_cells,
        u_act: effective_cells as f64 / total_cells as f64,
    })
}

pub fn run_utilization(t: &Tallies) -> Option<UtilizationRecord> {
    utilization(t.effective_cell_cycles, t.total_cell_cycles)
}

pub fn pass_utilization(p: &PassTallies) -> Option<UtilizationRecord> {
    utilization(p.effective_cell_cycles, p.total_cell_cycles)
}

/// Cycles counted for speedup: compute cycles, plus row loads when requested.
pub fn cycles(t: &Tallies, include_weight_load: bool) -> u64 {
    t.compute_cycles + if include_weight_load { t.row_loads } else { 0 }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyBreakdown {
    pub macro_compute: f64,
    pub cell_ops: f64,
    pub row_loads: f64,
    pub buffers: f64,
    pub post_process: f64,
    pub total: f64,
}

pub fn energy(t: &Tallies, model: &EnergyModel) -> EnergyBreakdown {
    let macro_compute = model.macro_bit_cycle * t.compute_cycles as f64;
    let cell_ops = model.cell_op * t.total_cell_cycles as f64;
    let row_loads = model.row_load * t.row_loads as f64;
    let buffers = model.buffer_access * (t.input_reads + t.output_writes) as f64;
    let post_process = model.post_process * t.post_process_ops as f64;
    EnergyBreakdown {
        macro_compute,
        cell_ops,
        row_loads,
        buffers,
        post_process,
        total: macro_compute + cell_ops + row_loads + buffers + post_process,
    }
}

/// One layer's run in one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerRun {
    pub name: String,
    pub output: SimOutput,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeSummary {
    pub cycles: u64,
    pub compute_cycles: u64,
    pub skipped_cycles: u64,
    pub weight_load_rows: u64,
    pub utilization: Option<UtilizationRecord>,
    pub pass_utilization: Vec<Option<UtilizationRecord>>,
    pub energy: EnergyBreakdown,
}

fn summarize(out: &SimOutput, model: &EnergyModel, include_weight_load: bool) -> ModeSummary {
    ModeSummary {
        cycles: cycles(&out.tallies, include_weight_load),
        compute_cycles: out.tallies.compute_cycles,
        skipped_cycles: out.tallies.skipped_cycles,
        weight_load_rows: out.tallies.row_loads,
        utilization: run_utilization(&out.tallies),
        pass_utilization: out.passes.iter().map(pass_utilization).collect(),
        energy: energy(&out.tallies, model),
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerReport {
    pub name: String,
    pub dbpim: ModeSummary,
    pub dense: ModeSummary,
    /// Dense cycles over DB-PIM cycles; `None` when DB-PIM executed no cycles.
    pub speedup: Option<f64>,
    /// `1 - dbpim energy / dense energy`; `None` when dense energy is zero.
    pub energy_savings: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregateReport {
    pub dbpim_cycles: u64,
    pub dense_cycles: u64,
    /// Ratio of total cycles.
    pub speedup: Option<f64>,
    /// Unweighted mean of the defined per-layer speedups, for reference only.
    pub mean_layer_speedup: Option<f64>,
    pub dbpim_energy: f64,
    pub dense_energy: f64,
    pub energy_savings: Option<f64>,
    pub dbpim_utilization: Option<UtilizationRecord>,
    pub dense_utilization: Option<UtilizationRecord>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub include_weight_load_cycles: bool,
    pub layers: Vec<LayerReport>,
    pub aggregate: AggregateReport,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Combines DB-PIM and dense runs of the same layers.
pub fn speedup_and_energy(
    db: &[LayerRun],
    dense: &[LayerRun],
    model: &EnergyModel,
    include_weight_load: bool,
) -> Result<SimReport, Error> {
    model.validate()?;
    if db.len() != dense.len() {
        return Err(Error::MismatchedLayers("different number of layers"));
    }
    if db.iter().zip(dense).any(|(a, b)| a.name != b.name) {
        return Err(Error::MismatchedLayers("layer names differ"));
    }

    let mut layers = Vec::with_capacity(db.len());
    let (mut db_total, mut dense_total) = (Tallies::default(), Tallies::default());
    for (a, b) in db.iter().zip(dense) {
        db_total.merge(&a.output.tallies);
        dense_total.merge(&b.output.tallies);
        let dbpim = summarize(&a.output, model, include_weight_load);
        let dense = summarize(&b.output, model, include_weight_load);
        layers.push(LayerReport {
            name: a.name.clone(),
            speedup: ratio(dense.cycles as f64, dbpim.cycles as f64),
            energy_savings: ratio(dbpim.energy.total, dense.energy.total).map(|r| 1.0 - r),
            dbpim,
            dense,
        });
    }

    let dbpim_cycles = cycles(&db_total, include_weight_load);
    let dense_cycles = cycles(&dense_total, include_weight_load);
    let defined: Vec<f64> = layers.iter().filter_map(|l| l.speedup).collect();
    let dbpim_energy = energy(&db_total, model).total;
    let dense_energy = energy(&dense_total, model).total;
    let aggregate = AggregateReport {
        dbpim_cycles,
        dense_cycles,
        speedup: ratio(dense_cycles as f64, dbpim_cycles as f64),
        mean_layer_speedup: ratio(defined.iter().sum(), defined.len() as f64),
        dbpim_energy,
        dense_energy,
        energy_savings: ratio(dbpim_energy, dense_energy).map(|r| 1.0 - r),
        dbpim_utilization: run_utilization(&db_total),
        dense_utilization: run_utilization(&dense_total),
    };
    Ok(SimReport {
        include_weight_load_cycles: include_weight_load,
        layers,
        aggregate,
    })
}
