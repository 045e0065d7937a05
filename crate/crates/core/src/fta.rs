//! Fixed threshold approximation.
//!
//! Every filter gets one threshold `phi_th` in [0, 2] picked from the mode of
//! its weights' CSD non-zero counts. Each weight is then replaced by the closest
//! INT8 value whose CSD form has exactly (or, in [`FtaMode::AtMost`], at most)
//! `phi_th` non-zero digits, so all weights in a filter occupy the same number
//! of dyadic blocks.

use alloc::vec::Vec;

use crate::csd::{self, DyadicBlockSet};
use crate::error::Error;

/// Largest threshold the macro can schedule.
pub const MAX_THRESHOLD: u8 = 2;

/// Query table membership rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FtaMode {
    /// Members have exactly `phi_th` non-zero digits.
    #[default]
    Exact,
    /// Members have at most `phi_th` non-zero digits.
    AtMost,
}

impl FtaMode {
    #[inline]
    pub fn admits(self, phi: u8, phi_th: u8) -> bool {
        match self {
            FtaMode::Exact => phi == phi_th,
            FtaMode::AtMost => phi <= phi_th,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filter {
    pub filter_id: usize,
    pub weights: Vec<i8>,
}

impl Filter {
    pub fn new(filter_id: usize, weights: Vec<i8>) -> Result<Self, Error> {
        if weights.is_empty() {
            return Err(Error::EmptyFilter { filter_id });
        }
        Ok(Filter { filter_id, weights })
    }
}

/// Sorted set of admissible approximation targets for one threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryTable {
    phi_th: u8,
    mode: FtaMode,
    entries: Vec<i8>,
}

impl QueryTable {
    pub fn phi_th(&self) -> u8 {
        self.phi_th
    }

    pub fn mode(&self) -> FtaMode {
        self.mode
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn contains(&self, v: i8) -> bool {
        self.entries.binary_search(&v).is_ok()
    }
}

/// A filter after approximation, with the block decomposition of every weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdedFilter {
    pub filter_id: usize,
    pub phi_th: u8,
    pub weights: Vec<i8>,
    pub per_weight_blocks: Vec<DyadicBlockSet>,
}

impl ThresholdedFilter {
    /// Wraps already-approximated weights, checking them against `phi_th`
    /// under the relaxed (at-most) rule.
    pub fn from_weights(filter_id: usize, phi_th: u8, weights: Vec<i8>) -> Result<Self, Error> {
        if phi_th > MAX_THRESHOLD {
            return Err(Error::ThresholdOutOfRange(phi_th));
        }
        if weights.is_empty() {
            return Err(Error::EmptyFilter { filter_id });
        }
        let per_weight_blocks: Vec<DyadicBlockSet> = weights
            .iter()
            .map(|&w| csd::to_dyadic_blocks(&csd::CsdWord::from(w)))
            .collect();
        if let Some((position, set)) = per_weight_blocks
            .iter()
            .enumerate()
            .find(|(_, s)| s.phi > phi_th)
        {
            return Err(Error::ThresholdViolation {
                filter_id,
                position,
                phi: set.phi,
                phi_th,
            });
        }
        Ok(ThresholdedFilter {
            filter_id,
            phi_th,
            weights,
            per_weight_blocks,
        })
    }
}

/// Per-weight CSD non-zero counts.
pub fn phi_profile(f: &Filter) -> Vec<u8> {
    f.weights.iter().map(|&w| csd::phi(w)).collect()
}

/// Picks a filter threshold from its phi profile.
///
/// All-zero profiles give 0. Otherwise the mode (smallest value on ties) is
/// lifted to 1 if it is 0 and clamped to 2 from above.
pub fn select_threshold(profile: &[u8]) -> Result<u8, Error> {
    if profile.is_empty() {
        return Err(Error::Argument("empty phi profile"));
    }
    let mut histogram = [0usize; 5];
    for &p in profile {
        *histogram
            .get_mut(usize::from(p))
            .ok_or(Error::PhiOutOfRange(p))? += 1;
    }
    if histogram[0] == profile.len() {
        return Ok(0);
    }
    let mut mode = 0u8;
    for (phi, &count) in histogram.iter().enumerate() {
        if count > histogram[usize::from(mode)] {
            mode = phi as u8;
        }
    }
    Ok(mode.clamp(1, MAX_THRESHOLD))
}

/// All INT8 values admitted by `mode` at `phi_th`, ascending.
pub fn build_query_table(phi_th: u8, mode: FtaMode) -> Result<QueryTable, Error> {
    if phi_th > MAX_THRESHOLD {
        return Err(Error::ThresholdOutOfRange(phi_th));
    }
    let entries: Vec<i8> = (i8::MIN..=i8::MAX)
        .filter(|&v| mode.admits(csd::phi(v), phi_th))
        .collect();
    Ok(QueryTable {
        phi_th,
        mode,
        entries,
    })
}

/// Closest table entry to `w`. Ties go to the smaller magnitude, then to the
/// positive candidate.
pub fn approximate_weight(w: i8, table: &QueryTable) -> Result<i8, Error> {
    let entries = &table.entries;
    // The table is sorted, so the best candidate is adjacent to the insertion point.
    let at = entries.partition_point(|&t| t < w);
    let lo = at.checked_sub(1).map(|i| entries[i]);
    let hi = entries.get(at).copied();
    let key = |t: i8| {
        let d = (i16::from(t) - i16::from(w)).unsigned_abs();
        (d, i16::from(t).unsigned_abs(), t < 0)
    };
    match (lo, hi) {
        (None, None) => Err(Error::EmptyTable),
        (Some(t), None) | (None, Some(t)) => Ok(t),
        (Some(a), Some(b)) => Ok(if key(b) <= key(a) { b } else { a }),
    }
}

/// Runs the approximation over a set of filters.
pub fn fta_quantize(filters: &[Filter], mode: FtaMode) -> Result<Vec<ThresholdedFilter>, Error> {
    let tables = [
        build_query_table(0, mode)?,
        build_query_table(1, mode)?,
        build_query_table(2, mode)?,
    ];
    filters
        .iter()
        .map(|f| {
            if f.weights.is_empty() {
                return Err(Error::EmptyFilter {
                    filter_id: f.filter_id,
                });
            }
            let phi_th = select_threshold(&phi_profile(f))?;
            let table = &tables[usize::from(phi_th)];
            let weights = f
                .weights
                .iter()
                .map(|&w| approximate_weight(w, table))
                .collect::<Result<Vec<_>, _>>()?;
            let per_weight_blocks = weights
                .iter()
                .map(|&w| csd::to_dyadic_blocks(&csd::CsdWord::from(w)))
                .collect();
            Ok(ThresholdedFilter {
                filter_id: f.filter_id,
                phi_th,
                weights,
                per_weight_blocks,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn profile_examples() {
        let f = Filter::new(0, vec![0, 0, 0]).unwrap();
        assert_eq!(phi_profile(&f), vec![0, 0, 0]);
        let f = Filter::new(1, vec![125, -62]).unwrap();
        assert_eq!(phi_profile(&f), vec![3, 2]);
        assert!(Filter::new(2, vec![]).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(select_threshold(&[0, 0, 0, 0]), Ok(0));
        assert_eq!(select_threshold(&[0, 0, 0, 2]), Ok(1));
        assert_eq!(select_threshold(&[3, 3, 4, 1]), Ok(2));
        assert_eq!(select_threshold(&[1, 2, 2]), Ok(2));
        // mode tie resolves to the smaller phi
        assert_eq!(select_threshold(&[3, 2]), Ok(2));
        assert_eq!(select_threshold(&[0, 0, 1, 1]), Ok(1));
        assert_eq!(
            select_threshold(&[]),
            Err(Error::Argument("empty phi profile"))
        );
        assert_eq!(select_threshold(&[5]), Err(Error::PhiOutOfRange(5)));
    }

    #[test]
    fn table_examples() {
        assert_eq!(
            build_query_table(0, FtaMode::Exact).unwrap().entries(),
            &[0]
        );
        assert_eq!(
            build_query_table(1, FtaMode::Exact).unwrap().entries(),
            &[-128, -64, -32, -16, -8, -4, -2, -1, 1, 2, 4, 8, 16, 32, 64]
        );
        let at_most = build_query_table(2, FtaMode::AtMost).unwrap();
        assert!(at_most.contains(0));
        for &t in build_query_table(1, FtaMode::Exact).unwrap().entries() {
            assert!(at_most.contains(t));
        }
        assert_eq!(
            build_query_table(3, FtaMode::Exact),
            Err(Error::ThresholdOutOfRange(3))
        );
    }

    #[test]
    fn approximation_examples() {
        let t2 = build_query_table(2, FtaMode::Exact).unwrap();
        let t1 = build_query_table(1, FtaMode::Exact).unwrap();
        assert_eq!(approximate_weight(5, &t2), Ok(5));
        assert_eq!(approximate_weight(0, &t1), Ok(1));
        assert_eq!(approximate_weight(85, &t2), Ok(80));
        // 125 sits between 124 and 126; the smaller magnitude wins
        assert_eq!(approximate_weight(125, &t2), Ok(124));
        assert_eq!(approximate_weight(127, &t1), Ok(64));
        assert_eq!(approximate_weight(-128, &t1), Ok(-128));
    }

    #[test]
    fn quantize_examples() {
        let out = fta_quantize(&[Filter::new(7, vec![0; 9]).unwrap()], FtaMode::Exact).unwrap();
        assert_eq!(out[0].phi_th, 0);
        assert_eq!(out[0].weights, vec![0; 9]);
        assert_eq!(out[0].filter_id, 7);

        let ones = vec![1, -2, 64, -128, 16];
        let out = fta_quantize(&[Filter::new(0, ones.clone()).unwrap()], FtaMode::Exact).unwrap();
        assert_eq!(out[0].phi_th, 1);
        assert_eq!(out[0].weights, ones);
        assert!(out[0].per_weight_blocks.iter().all(|b| b.phi == 1));
    }

    #[test]
    fn exact_mode_lifts_zeros_at_most_keeps_them() {
        let f = Filter::new(0, vec![0, 0, 3, 5, 6]).unwrap();
        let exact = fta_quantize(core::slice::from_ref(&f), FtaMode::Exact).unwrap();
        assert_eq!(exact[0].phi_th, 2);
        assert!(exact[0].weights.iter().all(|&w| csd::phi(w) == 2));
        let relaxed = fta_quantize(&[f], FtaMode::AtMost).unwrap();
        assert_eq!(relaxed[0].weights, vec![0, 0, 3, 5, 6]);
    }

    #[test]
    fn from_weights_checks_threshold() {
        assert!(ThresholdedFilter::from_weights(0, 1, vec![1, 0, 4]).is_ok());
        assert_eq!(
            ThresholdedFilter::from_weights(3, 1, vec![1, 3]),
            Err(Error::ThresholdViolation {
                filter_id: 3,
                position: 1,
                phi: 2,
                phi_th: 1
            })
        );
    }
}
