//! Canonical signed digit (CSD) encoding of INT8 weights and the dyadic-block
//! view used by the macro.
//!
//! A [`CsdWord`] holds eight digits from {-1, 0, +1}, least significant first,
//! with no two adjacent non-zero digits. Every INT8 value has exactly one such
//! form and it carries the minimum number of non-zero digits of any signed-digit
//! representation of the same value.

use core::fmt;
use core::str::FromStr;

use crate::error::CsdError;

/// Number of digits in a word.
pub const WORD_DIGITS: usize = 8;
/// Number of two-digit blocks in a word.
pub const BLOCKS_PER_WORD: usize = WORD_DIGITS / 2;

/// One signed digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[repr(i8)]
pub enum CsdDigit {
    NegOne = -1,
    #[default]
    Zero = 0,
    One = 1,
}

impl CsdDigit {
    #[inline]
    pub const fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub const fn is_nonzero(self) -> bool {
        !matches!(self, CsdDigit::Zero)
    }
}

impl TryFrom<i8> for CsdDigit {
    type Error = CsdError;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(CsdDigit::NegOne),
            0 => Ok(CsdDigit::Zero),
            1 => Ok(CsdDigit::One),
            other => Err(CsdError::InvalidDigit(other)),
        }
    }
}

/// Sign of a non-zero digit. The metadata bit is 0 for positive, 1 for negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "u8", try_from = "u8"))]
pub enum Sign {
    Pos,
    Neg,
}

impl From<Sign> for u8 {
    fn from(s: Sign) -> u8 {
        s.bit()
    }
}

impl TryFrom<u8> for Sign {
    type Error = CsdError;

    fn try_from(bit: u8) -> Result<Self, Self::Error> {
        match bit {
            0 => Ok(Sign::Pos),
            1 => Ok(Sign::Neg),
            other => Err(CsdError::InvalidSignBit(other)),
        }
    }
}

impl Sign {
    #[inline]
    pub const fn factor(self) -> i32 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    #[inline]
    pub const fn bit(self) -> u8 {
        match self {
            Sign::Pos => 0,
            Sign::Neg => 1,
        }
    }

    #[inline]
    pub const fn from_bit(bit: bool) -> Self {
        if bit {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }
}

/// An eight-digit canonical signed-digit word. `digits[0]` has weight 2^0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct CsdWord {
    digits: [CsdDigit; WORD_DIGITS],
}

impl CsdWord {
    pub const ZERO: CsdWord = CsdWord {
        digits: [CsdDigit::Zero; WORD_DIGITS],
    };

    /// Builds a word from raw digits, rejecting adjacent non-zero pairs.
    pub fn from_digits(digits: [CsdDigit; WORD_DIGITS]) -> Result<Self, CsdError> {
        for i in 0..WORD_DIGITS - 1 {
            if digits[i].is_nonzero() && digits[i + 1].is_nonzero() {
                return Err(CsdError::AdjacentNonZero { position: i });
            }
        }
        Ok(CsdWord { digits })
    }

    #[inline]
    pub fn digits(&self) -> &[CsdDigit; WORD_DIGITS] {
        &self.digits
    }

    #[inline]
    pub fn digit(&self, position: usize) -> CsdDigit {
        self.digits[position]
    }
}

impl From<i8> for CsdWord {
    fn from(v: i8) -> Self {
        encode(v)
    }
}

/// Encodes an INT8 value. Values outside [-128, 127] are rejected.
pub fn to_csd(v: i32) -> Result<CsdWord, CsdError> {
    let v = i8::try_from(v).map_err(|_| CsdError::OutOfRange(v))?;
    Ok(encode(v))
}

// Non-adjacent form, LSB first: an odd remainder picks the digit that leaves a
// multiple of four, which forces the next digit to zero.
fn encode(v: i8) -> CsdWord {
    let mut n = i32::from(v);
    let mut digits = [CsdDigit::Zero; WORD_DIGITS];
    for digit in digits.iter_mut() {
        if n & 1 != 0 {
            let d = 2 - n.rem_euclid(4);
            *digit = if d > 0 { CsdDigit::One } else { CsdDigit::NegOne };
            n -= d;
        }
        n >>= 1;
    }
    // |v| <= 128 always fits in eight non-adjacent digits.
    debug_assert_eq!(n, 0, "INT8 value {v} overflowed eight CSD digits");
    CsdWord { digits }
}

/// Decodes a word to its integer value.
pub fn from_csd(w: &CsdWord) -> i32 {
    w.digits
        .iter()
        .enumerate()
        .map(|(i, d)| i32::from(d.value()) << i)
        .sum()
}

/// Number of non-zero digits, the word's `phi`.
pub fn count_nonzeros(w: &CsdWord) -> u8 {
    w.digits.iter().filter(|d| d.is_nonzero()).count() as u8
}

/// `phi` of an INT8 value.
#[inline]
pub fn phi(v: i8) -> u8 {
    count_nonzeros(&encode(v))
}

/// Content of one dyadic block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockPattern {
    /// Both digits zero.
    Zero,
    /// Exactly one non-zero digit; `position` is 0 for the low digit, 1 for the high one.
    Comp { position: u8, sign: Sign },
}

/// A pair of digits `2*index` and `2*index + 1` of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicBlock {
    pub index: u8,
    pub pattern: BlockPattern,
}

impl DyadicBlock {
    #[inline]
    pub fn is_comp(&self) -> bool {
        matches!(self.pattern, BlockPattern::Comp { .. })
    }

    /// Bit position of the non-zero digit, for complementary blocks.
    pub fn bit_position(&self) -> Option<u8> {
        match self.pattern {
            BlockPattern::Zero => None,
            BlockPattern::Comp { position, .. } => Some(2 * self.index + position),
        }
    }

    /// Signed value the block contributes to its word.
    pub fn value(&self) -> i32 {
        match self.pattern {
            BlockPattern::Zero => 0,
            BlockPattern::Comp { position, sign } => sign.factor() << (2 * self.index + position),
        }
    }
}

/// The four blocks of a word, `blocks[k]` covering digits 2k and 2k+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicBlockSet {
    pub blocks: [DyadicBlock; BLOCKS_PER_WORD],
    pub phi: u8,
}

impl DyadicBlockSet {
    /// Complementary blocks in ascending index order.
    pub fn comp_blocks(&self) -> impl Iterator<Item = &DyadicBlock> + '_ {
        self.blocks.iter().filter(|b| b.is_comp())
    }

    /// Rebuilds the source word.
    pub fn to_word(&self) -> CsdWord {
        let mut digits = [CsdDigit::Zero; WORD_DIGITS];
        for block in &self.blocks {
            if let BlockPattern::Comp { position, sign } = block.pattern {
                digits[usize::from(2 * block.index + position)] = match sign {
                    Sign::Pos => CsdDigit::One,
                    Sign::Neg => CsdDigit::NegOne,
                };
            }
        }
        // A block holds at most one digit, but neighbouring blocks may still
        // collide at their boundary, so the usual check applies.
        CsdWord::from_digits(digits).expect("block set built from a valid word")
    }

    pub fn value(&self) -> i32 {
        self.blocks.iter().map(DyadicBlock::value).sum()
    }
}

/// Splits a word into its four dyadic blocks.
pub fn to_dyadic_blocks(w: &CsdWord) -> DyadicBlockSet {
    let mut phi = 0;
    let blocks = core::array::from_fn(|k| {
        let lo = w.digits[2 * k];
        let hi = w.digits[2 * k + 1];
        let pattern = match (lo, hi) {
            (CsdDigit::Zero, CsdDigit::Zero) => BlockPattern::Zero,
            (d, CsdDigit::Zero) => BlockPattern::Comp {
                position: 0,
                sign: Sign::from_bit(d == CsdDigit::NegOne),
            },
            (CsdDigit::Zero, d) => BlockPattern::Comp {
                position: 1,
                sign: Sign::from_bit(d == CsdDigit::NegOne),
            },
            _ => unreachable!("CSD word with adjacent non-zero digits"),
        };
        if !matches!(pattern, BlockPattern::Zero) {
            phi += 1;
        }
        DyadicBlock {
            index: k as u8,
            pattern,
        }
    });
    DyadicBlockSet { blocks, phi }
}

/// Renders MSB first with an underscore between nibbles; a negative digit is
/// written as `-1`, e.g. `1000_0-101` for 125.
impl fmt::Display for CsdWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..WORD_DIGITS).rev() {
            match self.digits[i] {
                CsdDigit::NegOne => f.write_str("-1")?,
                CsdDigit::Zero => f.write_str("0")?,
                CsdDigit::One => f.write_str("1")?,
            }
            if i == 4 {
                f.write_str("_")?;
            }
        }
        Ok(())
    }
}

impl FromStr for CsdWord {
    type Err = CsdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parsed = [CsdDigit::Zero; WORD_DIGITS];
        let mut count = 0usize;
        let mut chars = s.chars().filter(|c| *c != '_');
        while let Some(c) = chars.next() {
            let digit = match c {
                '0' => CsdDigit::Zero,
                '1' => CsdDigit::One,
                '-' if chars.next() == Some('1') => CsdDigit::NegOne,
                _ => return Err(CsdError::Parse),
            };
            if count == WORD_DIGITS {
                return Err(CsdError::Parse);
            }
            parsed[count] = digit;
            count += 1;
        }
        if count != WORD_DIGITS {
            return Err(CsdError::Parse);
        }
        parsed.reverse();
        CsdWord::from_digits(parsed)
    }
}
