//! Input pre-processing: block-wise zero bit-column detection for bit-serial
//! input streaming.

use alloc::vec::Vec;

use crate::error::Error;

/// Interpretation of 8-bit input features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Signedness {
    #[default]
    Unsigned8,
    Signed8,
}

impl Signedness {
    pub const fn range(self) -> (i32, i32) {
        match self {
            Signedness::Unsigned8 => (0, 255),
            Signedness::Signed8 => (-128, 127),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Signedness::Unsigned8 => "u8",
            Signedness::Signed8 => "i8",
        }
    }

    pub fn contains(self, v: i32) -> bool {
        let (lo, hi) = self.range();
        (lo..=hi).contains(&v)
    }

    /// The 8-bit pattern the IPU sees for `v`.
    #[inline]
    pub fn bits(self, v: i32) -> u8 {
        (v & 0xff) as u8
    }

    /// Significance of bit column `bit` in the shift-accumulate stage.
    #[inline]
    pub const fn column_weight(self, bit: u8) -> i32 {
        match (self, bit) {
            (Signedness::Signed8, 7) => -128,
            _ => 1 << bit,
        }
    }
}

/// Checks every value against the range of `signedness`.
pub fn check_inputs(values: &[i32], signedness: Signedness) -> Result<(), Error> {
    match values
        .iter()
        .enumerate()
        .find(|(_, &v)| !signedness.contains(v))
    {
        Some((position, &value)) => Err(Error::InputOutOfRange {
            position,
            value,
            range: signedness.name(),
        }),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputGroup {
    values: Vec<i32>,
    signedness: Signedness,
}

impl InputGroup {
    pub fn new(values: Vec<i32>, signedness: Signedness) -> Result<Self, Error> {
        check_inputs(&values, signedness)?;
        Ok(InputGroup { values, signedness })
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    /// Bit `bit` of every member, in member order.
    pub fn column(&self, bit: u8) -> impl Iterator<Item = bool> + '_ {
        self.values
            .iter()
            .map(move |&v| self.signedness.bits(v) >> bit & 1 == 1)
    }
}

/// Bit `b` of `mask` is set when column `b` is zero in every group member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitColumnMask {
    pub mask: u8,
    pub signedness: Signedness,
}

/// One surviving bit column and its shift-accumulate weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScheduledColumn {
    pub bit: u8,
    pub weight: i32,
}

impl BitColumnMask {
    /// Mask that skips nothing.
    pub const fn none(signedness: Signedness) -> Self {
        BitColumnMask {
            mask: 0,
            signedness,
        }
    }

    #[inline]
    pub fn is_skipped(&self, bit: u8) -> bool {
        self.mask >> bit & 1 == 1
    }

    /// Number of skippable columns.
    #[inline]
    pub fn skipped(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Surviving columns, most significant first.
    pub fn surviving_columns(&self) -> impl Iterator<Item = u8> + '_ {
        (0..8u8).rev().filter(move |&b| !self.is_skipped(b))
    }

    /// Combines the masks of groups that share bit cycles: a column is only
    /// skippable if every group can skip it.
    pub fn intersect(self, other: BitColumnMask) -> BitColumnMask {
        BitColumnMask {
            mask: self.mask & other.mask,
            signedness: self.signedness,
        }
    }
}

pub fn analyze_group(g: &InputGroup) -> BitColumnMask {
    let any_set = g
        .values
        .iter()
        .fold(0u8, |acc, &v| acc | g.signedness.bits(v));
    BitColumnMask {
        mask: !any_set,
        signedness: g.signedness,
    }
}

pub fn bit_serial_schedule(m: &BitColumnMask) -> Vec<ScheduledColumn> {
    m.surviving_columns()
        .map(|bit| ScheduledColumn {
            bit,
            weight: m.signedness.column_weight(bit),
        })
        .collect()
}

/// Rebuilds every member of the group from its surviving columns only.
pub fn reconstruct(g: &InputGroup, schedule: &[ScheduledColumn]) -> Vec<i32> {
    let mut out = alloc::vec![0i32; g.values.len()];
    for col in schedule {
        for (o, bit) in out.iter_mut().zip(g.column(col.bit)) {
            if bit {
                *o += col.weight;
            }
        }
    }
    out
}

/// Masks for consecutive groups of `group_size` values; the last group may be short.
pub fn analyze_tensor(
    values: &[i32],
    group_size: usize,
    signedness: Signedness,
) -> Result<Vec<BitColumnMask>, Error> {
    if group_size == 0 {
        return Err(Error::Argument("group size must be at least 1"));
    }
    check_inputs(values, signedness)?;
    Ok(values
        .chunks(group_size)
        .map(|chunk| {
            let any_set = chunk.iter().fold(0u8, |acc, &v| acc | signedness.bits(v));
            BitColumnMask {
                mask: !any_set,
                signedness,
            }
        })
        .collect())
}
