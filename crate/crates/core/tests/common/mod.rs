#![allow(dead_code)]

use dbpim_core::fta::{fta_quantize, Filter, FtaMode, ThresholdedFilter};
use dbpim_core::{MacroConfig, Signedness};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weight draws with different phi profiles: uniform INT8, small magnitudes,
/// mostly zero, and pure powers of two.
pub fn random_weight(rng: &mut impl Rng, style: u8) -> i8 {
    match style % 4 {
        0 => rng.random::<i8>(),
        1 => rng.random_range(-12i8..=12),
        2 => {
            if rng.random_bool(0.8) {
                0
            } else {
                rng.random::<i8>()
            }
        }
        _ => {
            let p = rng.random_range(0..7u32);
            let v = 1i8 << p;
            if rng.random_bool(0.5) {
                -v
            } else {
                v
            }
        }
    }
}

pub fn random_filter(rng: &mut impl Rng, id: usize, len: usize) -> Filter {
    let style = rng.random::<u8>();
    let weights = (0..len).map(|_| random_weight(rng, style)).collect();
    Filter::new(id, weights).unwrap()
}

pub fn random_filters(rng: &mut impl Rng, count: usize, len: usize) -> Vec<Filter> {
    (0..count).map(|i| random_filter(rng, i, len)).collect()
}

pub fn random_config(rng: &mut impl Rng) -> MacroConfig {
    let compartments = *[4usize, 8, 16].choose(rng).unwrap();
    let group = if rng.random_bool(0.5) { compartments } else { compartments / 2 };
    let dbmus = *[8usize, 16].choose(rng).unwrap();
    MacroConfig {
        num_macros: rng.random_range(1..=4),
        compartments_per_macro: compartments,
        dbmus_per_compartment: dbmus,
        rows_per_dbmu: rng.random_range(2..=16),
        input_group_size: group,
        dense_filters_per_pass: rng.random_range(1..=dbmus / 8),
        fta_mode: if rng.random_bool(0.5) { FtaMode::Exact } else { FtaMode::AtMost },
        signedness: if rng.random_bool(0.5) {
            Signedness::Unsigned8
        } else {
            Signedness::Signed8
        },
        ipu_skipping: rng.random_bool(0.7),
        ..MacroConfig::default()
    }
}

/// Inputs with a random bit-width cap so that some columns are skippable.
pub fn random_inputs(rng: &mut impl Rng, len: usize, signedness: Signedness) -> Vec<i32> {
    let width = rng.random_range(0..=8u32);
    let zero_rate = rng.random_range(0.0..0.9);
    (0..len)
        .map(|_| {
            if rng.random_bool(zero_rate) {
                return 0;
            }
            match signedness {
                Signedness::Unsigned8 => rng.random_range(0..(1i32 << width)),
                Signedness::Signed8 => {
                    let half = 1i32 << width.saturating_sub(1);
                    rng.random_range(-half..half.max(1)).clamp(-128, 127)
                }
            }
        })
        .collect()
}

pub struct RandomLayer {
    pub cfg: MacroConfig,
    pub filters: Vec<ThresholdedFilter>,
    pub inputs: Vec<i32>,
}

pub fn random_layer(rng: &mut impl Rng, max_filters: usize, max_len: usize) -> RandomLayer {
    let cfg = random_config(rng);
    let cap = cfg.reduction_capacity().min(max_len);
    let len = rng.random_range(1..=cap);
    let count = rng.random_range(1..=max_filters);
    let filters = fta_quantize(&random_filters(rng, count, len), cfg.fta_mode).unwrap();
    let inputs = random_inputs(rng, len, cfg.signedness);
    RandomLayer { cfg, filters, inputs }
}

pub fn weight_rows(filters: &[ThresholdedFilter]) -> Vec<Vec<i8>> {
    filters.iter().map(|f| f.weights.clone()).collect()
}
