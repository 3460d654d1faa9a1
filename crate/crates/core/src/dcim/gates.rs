//! Bit-line reads and the 1-bit adder/subtractor of the column peripheral.
//!
//! Enabling one scale-factor row and one partial-sum row on the same read bit
//! lines yields their OR and NAND. XOR and AND are derived from those two
//! signals; the subtractor's borrow additionally needs the raw subtrahend bit,
//! which is read through the otherwise idle write bit line.

/// Signals latched from one bit position during the Read stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitLines {
    pub or: bool,
    pub nand: bool,
    pub xor: bool,
    pub and: bool,
}

pub fn bitwise_read(a: bool, b: bool) -> BitLines {
    let or = a | b;
    let nand = !(a & b);
    BitLines {
        or,
        nand,
        xor: or & nand,
        and: !nand,
    }
}

/// Full adder on derived bit-line signals: `(sum, carry_out)`.
pub fn full_add_bit(xor: bool, and: bool, c_in: bool) -> (bool, bool) {
    (xor ^ c_in, and | (xor & c_in))
}

/// Full subtractor computing `A - B - b_in`: `(difference, borrow_out)`.
///
/// `xor` is `A ^ B` from the bit lines and `b_raw` is `B` itself.
pub fn full_sub_bit(xor: bool, b_raw: bool, b_in: bool) -> (bool, bool) {
    (xor ^ b_in, (b_raw & xor) | (b_in & !xor) | (b_in & b_raw))
}

/// Textbook borrow, `!A&B | B&Bin | Bin&!A`, on the raw operands.
pub fn borrow_reference(a: bool, b: bool, b_in: bool) -> bool {
    (!a & b) | (b & b_in) | (b_in & !a)
}

pub type AddFn = fn(bool, bool, bool) -> (bool, bool);
pub type SubFn = fn(bool, bool, bool) -> (bool, bool);

/// Single-gate faults for exercising the self-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateFault {
    /// Carry drops the `xor & c_in` term.
    AddCarryTerm,
    /// Borrow uses `b_in & xor` in place of `b_in & !xor`.
    SubBorrowTerm,
}

impl std::str::FromStr for GateFault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add-carry" => Ok(GateFault::AddCarryTerm),
            "sub-borrow" => Ok(GateFault::SubBorrowTerm),
            other => Err(format!("unknown fault `{other}` (expected add-carry or sub-borrow)")),
        }
    }
}

fn faulty_add(xor: bool, and: bool, c_in: bool) -> (bool, bool) {
    (xor ^ c_in, and)
}

fn faulty_sub(xor: bool, b_raw: bool, b_in: bool) -> (bool, bool) {
    (xor ^ b_in, (b_raw & xor) | (b_in & xor) | (b_in & b_raw))
}

/// The adder/subtractor implementation a column peripheral uses.
#[derive(Clone, Copy)]
pub struct Gates {
    pub add: AddFn,
    pub sub: SubFn,
    pub fault: Option<GateFault>,
}

impl Gates {
    pub const REFERENCE: Gates = Gates {
        add: full_add_bit,
        sub: full_sub_bit,
        fault: None,
    };

    pub fn with_fault(fault: GateFault) -> Gates {
        match fault {
            GateFault::AddCarryTerm => Gates {
                add: faulty_add,
                sub: full_sub_bit,
                fault: Some(fault),
            },
            GateFault::SubBorrowTerm => Gates {
                add: full_add_bit,
                sub: faulty_sub,
                fault: Some(fault),
            },
        }
    }
}

impl Default for Gates {
    fn default() -> Self {
        Gates::REFERENCE
    }
}

impl std::fmt::Debug for Gates {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gates").field("fault", &self.fault).finish()
    }
}
