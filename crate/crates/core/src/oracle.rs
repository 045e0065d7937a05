//! Brute-force references used by the test suites and the `verify` command.
//!
//! Nothing here calls into the encoder, the approximation or the simulator:
//! signed-digit forms come from exhaustive enumeration of all 3^8 digit
//! vectors, and dot products are evaluated twice, once at value level and once
//! as a sum of single-bit products.

use alloc::vec::Vec;

use crate::error::Error;
use crate::ipu::Signedness;

/// Raw signed-digit vector, index 0 least significant.
pub type DigitVector = [i8; 8];

const CANDIDATES: usize = 6561;

fn digits_of(code: usize) -> DigitVector {
    let mut d = [0i8; 8];
    let mut c = code;
    for slot in d.iter_mut() {
        *slot = (c % 3) as i8 - 1;
        c /= 3;
    }
    d
}

fn value_of(d: &DigitVector) -> i32 {
    d.iter().enumerate().map(|(i, &x)| i32::from(x) * (1 << i)).sum()
}

fn nonzeros(d: &DigitVector) -> u8 {
    d.iter().filter(|&&x| x != 0).count() as u8
}

pub fn is_non_adjacent(d: &DigitVector) -> bool {
    d.windows(2).all(|w| w[0] == 0 || w[1] == 0)
}

/// Every eight-digit signed-digit vector decoding to `v`.
pub fn csd_enumerate(v: i32) -> Vec<DigitVector> {
    (0..CANDIDATES)
        .map(digits_of)
        .filter(|d| value_of(d) == v)
        .collect()
}

/// The non-adjacent members of [`csd_enumerate`].
pub fn non_adjacent_forms(v: i32) -> Vec<DigitVector> {
    csd_enumerate(v)
        .into_iter()
        .filter(is_non_adjacent)
        .collect()
}

/// Exhaustive tables over INT8.
#[derive(Clone, Debug)]
pub struct Oracle {
    min_nonzeros: [u8; 256],
}

impl Default for Oracle {
    fn default() -> Self {
        Self::new()
    }
}

impl Oracle {
    pub fn new() -> Self {
        let mut min_nonzeros = [u8::MAX; 256];
        for code in 0..CANDIDATES {
            let d = digits_of(code);
            let v = value_of(&d);
            if (-128..=127).contains(&v) {
                let slot = &mut min_nonzeros[(v + 128) as usize];
                *slot = (*slot).min(nonzeros(&d));
            }
        }
        Oracle { min_nonzeros }
    }

    /// Minimum non-zero digit count over all signed-digit forms of `v`.
    pub fn phi(&self, v: i8) -> u8 {
        self.min_nonzeros[(i16::from(v) + 128) as usize]
    }

    /// Closest INT8 value whose phi satisfies `pred`, scanning all 256 values.
    /// Ties go to the smaller magnitude, then to the positive value.
    pub fn nearest_reference(&self, w: i8, pred: impl Fn(u8) -> bool) -> Result<i8, Error> {
        let mut best: Option<i8> = None;
        for t in i8::MIN..=i8::MAX {
            if !pred(self.phi(t)) {
                continue;
            }
            best = Some(match best {
                None => t,
                Some(b) => {
                    let dt = (i32::from(t) - i32::from(w)).abs();
                    let db = (i32::from(b) - i32::from(w)).abs();
                    let (mt, mb) = (i32::from(t).abs(), i32::from(b).abs());
                    if dt < db || (dt == db && (mt < mb || (mt == mb && t > b))) {
                        t
                    } else {
                        b
                    }
                }
            });
        }
        best.ok_or(Error::Argument("no INT8 value satisfies the phi predicate"))
    }
}

/// Straight reimplementation of the threshold rule, kept separate from the
/// production code: mode by explicit counting (smallest on ties), then the
/// all-zero / zero-mode / clamp cases.
pub fn threshold_reference(profile: &[u8]) -> Option<u8> {
    if profile.is_empty() {
        return None;
    }
    if profile.iter().all(|&p| p == 0) {
        return Some(0);
    }
    let mut best = (0usize, 0u8);
    for candidate in 0..=4u8 {
        let count = profile.iter().filter(|&&p| p == candidate).count();
        if count > best.0 {
            best = (count, candidate);
        }
    }
    Some(match best.1 {
        0 => 1,
        m if m <= 2 => m,
        _ => 2,
    })
}

/// Per-filter reference outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceResult {
    pub outputs: Vec<i64>,
}

fn check_len(weights: &[Vec<i8>], inputs: &[i32]) -> Result<(), Error> {
    match weights.iter().find(|w| w.len() != inputs.len()) {
        Some(w) => Err(Error::Shape {
            what: "weight row length",
            expected: inputs.len(),
            got: w.len(),
        }),
        None => Ok(()),
    }
}

/// Σ_c I_c · W_{f,c} at value level.
pub fn dot_reference(
    weights: &[Vec<i8>],
    inputs: &[i32],
    signedness: Signedness,
) -> Result<ReferenceResult, Error> {
    check_len(weights, inputs)?;
    if let Some((position, &value)) = inputs
        .iter()
        .enumerate()
        .find(|(_, &v)| !signedness.contains(v))
    {
        return Err(Error::InputOutOfRange {
            position,
            value,
            range: signedness.name(),
        });
    }
    Ok(ReferenceResult {
        outputs: weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(inputs)
                    .map(|(&w, &x)| i64::from(w) * i64::from(x))
                    .sum()
            })
            .collect(),
    })
}

/// The same products expanded into 64 single-bit ANDs per element, summed in
/// reverse element order.
pub fn dot_reference_bitwise(
    weights: &[Vec<i8>],
    inputs: &[i32],
    signedness: Signedness,
) -> Result<ReferenceResult, Error> {
    check_len(weights, inputs)?;
    let bit_weight = |bit: u32, signed: bool| -> i64 {
        if signed && bit == 7 {
            -128
        } else {
            1 << bit
        }
    };
    let input_signed = signedness == Signedness::Signed8;
    Ok(ReferenceResult {
        outputs: weights
            .iter()
            .map(|row| {
                let mut acc = 0i64;
                for (&w, &x) in row.iter().zip(inputs).rev() {
                    let (wb, xb) = (w as u8, (x & 0xff) as u8);
                    for i in 0..8 {
                        for j in 0..8 {
                            let and = (xb >> i & 1) & (wb >> j & 1);
                            acc += i64::from(and)
                                * bit_weight(i, input_signed)
                                * bit_weight(j, true);
                        }
                    }
                }
                acc
            })
            .collect(),
    })
}
