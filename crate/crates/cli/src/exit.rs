//! Process exit codes.

use psqsim::Error;

pub const OK: u8 = 0;
pub const OTHER: u8 = 1;
pub const CONFIG: u8 = 2;
pub const MISMATCH: u8 = 3;
pub const INVARIANT: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Config(String),
    /// Hardware path disagreed with a reference.
    Mismatch(String),
    /// A property every result must satisfy did not hold.
    Invariant(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Mismatch(m) => write!(f, "verification mismatch: {m}"),
            Failure::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

/// Exit code for an error returned by a command.
pub fn code_for(err: &anyhow::Error) -> u8 {
    if let Some(f) = err.downcast_ref::<Failure>() {
        return match f {
            Failure::Config(_) => CONFIG,
            Failure::Mismatch(_) => MISMATCH,
            Failure::Invariant(_) => INVARIANT,
        };
    }
    match err.downcast_ref::<Error>() {
        Some(Error::OracleMismatch { .. } | Error::ReductionMismatch { .. }) => MISMATCH,
        Some(
            Error::Config(_)
            | Error::Parse { .. }
            | Error::InvalidScheme(_)
            | Error::InvalidLayer { .. }
            | Error::UnknownCostEntry(_)
            | Error::InvalidCostTable(_),
        ) => CONFIG,
        Some(_) => INVARIANT,
        None => OTHER,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(code_for(&Failure::Config("x".into()).into()), CONFIG);
        assert_eq!(code_for(&Failure::Invariant("x".into()).into()), INVARIANT);
        let mismatch = Error::OracleMismatch {
            layer: 0,
            row_tile: 0,
            col_tile: 0,
            column: 1,
            step: 2,
            input: 0,
            hardware: 1,
            golden: 2,
        };
        assert_eq!(code_for(&mismatch.into()), MISMATCH);
        assert_eq!(code_for(&Error::UnknownCostEntry("adc5".into()).into()), CONFIG);
        assert_eq!(code_for(&anyhow::anyhow!("disk full")), OTHER);
    }
}
