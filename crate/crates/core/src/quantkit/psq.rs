use serde::{Deserialize, Serialize};

use super::scheme::{PsqMode, QuantScheme};
use crate::{Error, Result};

/// Comparator output as carried on the 2-bit `p` bus: `00` for 0, `01` for +1
/// and `11` for -1. Pattern `10` has no meaning and is rejected on decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TernaryCode {
    Zero,
    Plus,
    Minus,
}

impl TernaryCode {
    pub fn value(self) -> i64 {
        match self {
            TernaryCode::Zero => 0,
            TernaryCode::Plus => 1,
            TernaryCode::Minus => -1,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            TernaryCode::Zero => 0b00,
            TernaryCode::Plus => 0b01,
            TernaryCode::Minus => 0b11,
        }
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        match bits {
            0b00 => Ok(TernaryCode::Zero),
            0b01 => Ok(TernaryCode::Plus),
            0b11 => Ok(TernaryCode::Minus),
            other => Err(Error::InvalidCode(other)),
        }
    }

    pub fn from_value(value: i64) -> Option<Self> {
        match value {
            0 => Some(TernaryCode::Zero),
            1 => Some(TernaryCode::Plus),
            -1 => Some(TernaryCode::Minus),
            _ => None,
        }
    }

    pub fn is_zero(self) -> bool {
        self == TernaryCode::Zero
    }
}

/// Column comparator transfer function.
///
/// Binary: `+1` when `ps >= 0`, else `-1`. Ternary: `+1` when `ps >= alpha`,
/// `-1` when `ps <= -alpha`, otherwise `0`. Both ends are inclusive.
pub fn quantize_partial_sum(ps: i64, scheme: &QuantScheme) -> TernaryCode {
    match scheme.mode {
        PsqMode::Binary => {
            if ps >= 0 {
                TernaryCode::Plus
            } else {
                TernaryCode::Minus
            }
        }
        PsqMode::Ternary => {
            let alpha = scheme.alpha;
            if ps >= alpha {
                TernaryCode::Plus
            } else if ps <= -alpha {
                TernaryCode::Minus
            } else {
                TernaryCode::Zero
            }
        }
    }
}
