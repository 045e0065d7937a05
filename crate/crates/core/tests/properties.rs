mod common;

use std::collections::HashMap;

use dbpim_core::compiler::{emit_instructions, map_dense_layer, map_layer, Instruction};
use dbpim_core::csd::{self, CsdWord};
use dbpim_core::fta::{
    approximate_weight, build_query_table, fta_quantize, select_threshold, Filter, FtaMode,
};
use dbpim_core::ipu::{self, analyze_group, bit_serial_schedule, InputGroup, Signedness};
use dbpim_core::metrics::{energy, pass_utilization, run_utilization};
use dbpim_core::oracle::{self, Oracle};
use dbpim_core::sim::{run_layer, SimMode};
use dbpim_core::{EnergyModel, MacroConfig};
use proptest::prelude::*;

fn weights_strategy(max_len: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(any::<i8>(), 1..=max_len)
}

fn mode_strategy() -> impl Strategy<Value = FtaMode> {
    prop_oneof![Just(FtaMode::Exact), Just(FtaMode::AtMost)]
}

fn signedness_strategy() -> impl Strategy<Value = Signedness> {
    prop_oneof![Just(Signedness::Unsigned8), Just(Signedness::Signed8)]
}

/// Mean reduction in non-zero bits from two's complement to CSD over all INT8
/// values, as an exact fraction over 256 (computed by exhaustive enumeration).
const SPARSITY_GAIN_NUMERATOR: i32 = 313;

#[test]
fn csd_sparsity_gain_is_pinned() {
    let oracle = Oracle::new();
    let via_oracle: i32 = (i8::MIN..=i8::MAX)
        .map(|v| (v as u8).count_ones() as i32 - i32::from(oracle.phi(v)))
        .sum();
    let via_encoder: i32 = (i8::MIN..=i8::MAX)
        .map(|v| (v as u8).count_ones() as i32 - i32::from(csd::phi(v)))
        .sum();
    assert_eq!(via_oracle, SPARSITY_GAIN_NUMERATOR);
    assert_eq!(via_encoder, SPARSITY_GAIN_NUMERATOR);
    assert!(f64::from(via_encoder) / 256.0 > 0.0);
}

#[test]
fn csd_form_is_the_unique_non_adjacent_form() {
    for v in i8::MIN..=i8::MAX {
        let forms = oracle::non_adjacent_forms(i32::from(v));
        assert_eq!(forms.len(), 1, "{v}");
        let w = CsdWord::from(v);
        let digits: [i8; 8] = std::array::from_fn(|i| w.digit(i).value());
        assert_eq!(forms[0], digits, "{v}");
    }
}

#[test]
fn exhaustive_profile_matches_oracle() {
    let oracle = Oracle::new();
    let f = Filter::new(0, (i8::MIN..=i8::MAX).collect()).unwrap();
    let profile = dbpim_core::fta::phi_profile(&f);
    let expected: Vec<u8> = (i8::MIN..=i8::MAX).map(|v| oracle.phi(v)).collect();
    assert_eq!(profile, expected);
}

#[test]
fn random_exact_filters_hit_threshold() {
    let oracle = Oracle::new();
    let mut rng = common::rng(11);
    for i in 0..500 {
        let f = common::random_filter(&mut rng, i, 1 + i % 40);
        let out = fta_quantize(&[f], FtaMode::Exact).unwrap();
        for &w in &out[0].weights {
            if out[0].phi_th >= 1 {
                assert_eq!(oracle.phi(w), out[0].phi_th);
            } else {
                assert_eq!(w, 0);
            }
        }
    }
}

#[test]
fn group_size_sensitivity() {
    let mut rng = common::rng(5);
    for _ in 0..500 {
        let s = if rand::Rng::random_bool(&mut rng, 0.5) {
            Signedness::Signed8
        } else {
            Signedness::Unsigned8
        };
        let values = common::random_inputs(&mut rng, 64, s);
        let fine: u32 = ipu::analyze_tensor(&values, 8, s)
            .unwrap()
            .iter()
            .map(|m| m.skipped())
            .sum();
        let coarse: u32 = ipu::analyze_tensor(&values, 16, s)
            .unwrap()
            .iter()
            .map(|m| m.skipped())
            .sum();
        // each 16-group spans two 8-groups; a column zero in the union is zero in both halves
        assert!(fine >= 2 * coarse, "{fine} < 2 * {coarse}");
    }
}

#[test]
fn schedule_touches_every_product_once() {
    let mut rng = common::rng(21);
    for _ in 0..200 {
        let layer = common::random_layer(&mut rng, 30, 80);
        let compiled = map_layer(&layer.filters, &layer.cfg).unwrap();
        let mut touched: HashMap<(usize, usize), usize> = HashMap::new();
        for ins in emit_instructions(&compiled) {
            if let Instruction::Accumulate { pass, row } = ins {
                let base = row * compiled.compartments;
                let end = (base + compiled.compartments).min(compiled.reduction_len);
                for &f in &compiled.passes[pass].filters {
                    for j in base..end {
                        *touched.entry((f, j)).or_default() += 1;
                    }
                }
            }
        }
        for (fi, f) in layer.filters.iter().enumerate() {
            for j in 0..compiled.reduction_len {
                let count = touched.get(&(fi, j)).copied().unwrap_or(0);
                let expected = usize::from(f.phi_th > 0);
                assert_eq!(count, expected, "filter {fi} weight {j}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fta_is_idempotent(weights in prop::collection::vec(weights_strategy(24), 1..6), mode in mode_strategy()) {
        let filters: Vec<Filter> = weights.into_iter().enumerate().map(|(i, w)| Filter::new(i, w).unwrap()).collect();
        let once = fta_quantize(&filters, mode).unwrap();
        let again_in: Vec<Filter> = once.iter().map(|f| Filter::new(f.filter_id, f.weights.clone()).unwrap()).collect();
        let twice = fta_quantize(&again_in, mode).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn approximation_is_error_optimal(w in any::<i8>(), phi_th in 0u8..=2, mode in mode_strategy()) {
        let table = build_query_table(phi_th, mode).unwrap();
        let a = approximate_weight(w, &table).unwrap();
        let err = (i16::from(a) - i16::from(w)).abs();
        for &t in table.entries() {
            prop_assert!(err <= (i16::from(t) - i16::from(w)).abs());
        }
        prop_assert!(table.contains(a));
    }

    #[test]
    fn threshold_matches_reference(profile in prop::collection::vec(0u8..=4, 1..40)) {
        prop_assert_eq!(Some(select_threshold(&profile).unwrap()), oracle::threshold_reference(&profile));
    }

    #[test]
    fn at_most_never_worse_than_exact(w in any::<i8>(), phi_th in 0u8..=2) {
        let exact = approximate_weight(w, &build_query_table(phi_th, FtaMode::Exact).unwrap()).unwrap();
        let relaxed = approximate_weight(w, &build_query_table(phi_th, FtaMode::AtMost).unwrap()).unwrap();
        prop_assert!((i16::from(relaxed) - i16::from(w)).abs() <= (i16::from(exact) - i16::from(w)).abs());
    }

    #[test]
    fn mapping_is_lossless(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let layer = common::random_layer(&mut rng, 40, 120);
        let compiled = map_layer(&layer.filters, &layer.cfg).unwrap();
        let decoded = compiled.decode_weights();
        for (f, row) in layer.filters.iter().zip(&decoded) {
            let expected: Vec<i32> = f.weights.iter().map(|&w| i32::from(w)).collect();
            prop_assert_eq!(&expected, row);
        }
        let enabled = compiled.passes.iter().flat_map(|p| p.slots()).filter(|s| s.enabled).count();
        let phi_sum: usize = layer.filters.iter().flat_map(|f| &f.per_weight_blocks).map(|b| usize::from(b.phi)).sum();
        prop_assert_eq!(enabled, phi_sum);
        if layer.cfg.fta_mode == FtaMode::Exact {
            let allocated = compiled.passes.iter().flat_map(|p| p.slots()).filter(|s| s.is_allocated()).count();
            prop_assert_eq!(allocated, enabled);
        }
        let dense = map_dense_layer(&layer.filters, &layer.cfg).unwrap();
        prop_assert_eq!(dense.decode_weights(), decoded);
    }

    #[test]
    fn group_reconstructs_from_surviving_columns(values in prop::collection::vec(0i32..=255, 1..=16), signed in any::<bool>()) {
        let (s, values) = if signed {
            (Signedness::Signed8, values.into_iter().map(|v| v - 128).collect::<Vec<_>>())
        } else {
            (Signedness::Unsigned8, values)
        };
        let g = InputGroup::new(values.clone(), s).unwrap();
        let m = analyze_group(&g);
        for b in 0..8u8 {
            prop_assert_eq!(m.is_skipped(b), g.column(b).all(|bit| !bit));
        }
        prop_assert_eq!(ipu::reconstruct(&g, &bit_serial_schedule(&m)), values);
    }

    #[test]
    fn simulator_matches_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let layer = common::random_layer(&mut rng, 20, 64);
        let rows = common::weight_rows(&layer.filters);
        let expected = oracle::dot_reference(&rows, &layer.inputs, layer.cfg.signedness).unwrap();
        let db = run_layer(&map_layer(&layer.filters, &layer.cfg).unwrap(), &layer.inputs, &layer.cfg, SimMode::DbPim, None).unwrap();
        let dense = run_layer(&map_dense_layer(&layer.filters, &layer.cfg).unwrap(), &layer.inputs, &layer.cfg, SimMode::DenseBaseline, None).unwrap();
        prop_assert_eq!(&db.outputs, &expected.outputs);
        prop_assert_eq!(&dense.outputs, &expected.outputs);
    }

    #[test]
    fn skipping_never_adds_cycles(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let layer = common::random_layer(&mut rng, 20, 64);
        let compiled = map_layer(&layer.filters, &layer.cfg).unwrap();
        let on = MacroConfig { ipu_skipping: true, ..layer.cfg };
        let off = MacroConfig { ipu_skipping: false, ..layer.cfg };
        let a = run_layer(&compiled, &layer.inputs, &on, SimMode::DbPim, None).unwrap();
        let b = run_layer(&compiled, &layer.inputs, &off, SimMode::DbPim, None).unwrap();
        prop_assert!(a.tallies.compute_cycles <= b.tallies.compute_cycles);
        prop_assert_eq!(a.tallies.compute_cycles + a.tallies.skipped_cycles, b.tallies.compute_cycles);
        if a.tallies.skipped_cycles == 0 {
            prop_assert_eq!(a.tallies.compute_cycles, b.tallies.compute_cycles);
        }
        prop_assert_eq!(&a.outputs, &b.outputs);
        // fewer cycles, never more energy
        let m = EnergyModel::default();
        prop_assert!(energy(&a.tallies, &m).total <= energy(&b.tallies, &m).total);
    }

    #[test]
    fn utilization_recomputes_from_slots(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let layer = common::random_layer(&mut rng, 20, 64);
        let compiled = map_layer(&layer.filters, &layer.cfg).unwrap();
        let out = run_layer(&compiled, &layer.inputs, &layer.cfg, SimMode::DbPim, None).unwrap();
        // every executed cycle of a row sees the same slot counts
        let (mut eff, mut tot) = (0u64, 0u64);
        for (p, pass) in compiled.passes.iter().enumerate() {
            let mut pe = 0u64;
            let mut pt = 0u64;
            for row in 0..compiled.tiles {
                let en = (0..compiled.compartments).flat_map(|c| pass.row(c, row)).filter(|s| s.enabled).count() as u64;
                let al = (0..compiled.compartments).flat_map(|c| pass.row(c, row)).filter(|s| s.is_allocated()).count() as u64;
                pe += en;
                pt += al;
            }
            if compiled.tiles == 1 {
                let cycles = out.passes[p].compute_cycles;
                prop_assert_eq!(out.passes[p].effective_cell_cycles, pe * cycles);
                prop_assert_eq!(out.passes[p].total_cell_cycles, pt * cycles);
            }
            eff += out.passes[p].effective_cell_cycles;
            tot += out.passes[p].total_cell_cycles;
            let rec = pass_utilization(&out.passes[p]);
            if let Some(rec) = rec {
                prop_assert_eq!(rec.u_act, rec.effective_cells as f64 / rec.total_cells as f64);
                if layer.cfg.fta_mode == FtaMode::Exact {
                    prop_assert_eq!(rec.u_act, 1.0);
                }
            }
        }
        prop_assert_eq!(eff, out.tallies.effective_cell_cycles);
        prop_assert_eq!(tot, out.tallies.total_cell_cycles);
        if let Some(rec) = run_utilization(&out.tallies) {
            prop_assert!(rec.u_act <= 1.0);
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), s in signedness_strategy()) {
        let mut rng = common::rng(seed);
        let mut layer = common::random_layer(&mut rng, 10, 48);
        layer.cfg.signedness = s;
        let inputs = common::random_inputs(&mut rng, layer.filters[0].weights.len(), s);
        let compiled = map_layer(&layer.filters, &layer.cfg).unwrap();
        let a = run_layer(&compiled, &inputs, &layer.cfg, SimMode::DbPim, None).unwrap();
        let b = run_layer(&compiled, &inputs, &layer.cfg, SimMode::DbPim, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn two_summation_orders_agree(rows in prop::collection::vec(prop::collection::vec(any::<i8>(), 12), 1..5), xs in prop::collection::vec(-128i32..=127, 12)) {
        let a = oracle::dot_reference(&rows, &xs, Signedness::Signed8).unwrap();
        let b = oracle::dot_reference_bitwise(&rows, &xs, Signedness::Signed8).unwrap();
        prop_assert_eq!(a, b);
    }
}
