use crate::quantkit::{quantize_partial_sum, PsqMode, QuantScheme, TernaryCode};

/// Column comparators: one per column for binary PSQ, two (thresholds `+alpha`
/// and `-alpha`) for ternary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparatorBank {
    pub mode: PsqMode,
    pub alpha: i64,
}

impl ComparatorBank {
    pub fn new(mode: PsqMode, alpha: i64) -> Self {
        Self { mode, alpha }
    }

    pub fn from_scheme(scheme: &QuantScheme) -> Self {
        Self::new(scheme.mode, scheme.alpha)
    }

    pub fn comparators_per_column(&self) -> u32 {
        self.mode.comparators_per_column()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub codes: Vec<TernaryCode>,
    pub zero_count: usize,
}

pub fn compare(ps: &[i64], bank: &ComparatorBank) -> Comparison {
    // only mode and alpha matter to the quantizer
    let scheme = QuantScheme {
        mode: bank.mode,
        alpha: bank.alpha,
        ..QuantScheme::cifar()
    };
    let codes: Vec<TernaryCode> = ps.iter().map(|&v| quantize_partial_sum(v, &scheme)).collect();
    let zero_count = codes.iter().filter(|c| c.is_zero()).count();
    Comparison { codes, zero_count }
}
