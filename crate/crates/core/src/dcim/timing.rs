use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingParams {
    /// 500 MHz clock.
    pub cycle_ns: f64,
    pub pipeline_depth: u32,
    /// Cycles each row operation occupies the array; 2 models odd/even column
    /// phasing.
    pub phases_per_op: u32,
    /// Count the `pipeline_depth - 1` fill cycles.
    pub count_fill: bool,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            cycle_ns: 2.0,
            pipeline_depth: 3,
            phases_per_op: 1,
            count_fill: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub cycles: u64,
    pub latency_ns: f64,
    /// Latency averaged over the columns processed in parallel.
    pub per_column_latency_ns: f64,
}

pub fn timing_model(ops: u64, columns: usize, params: &TimingParams) -> Timing {
    let fill = if params.count_fill && ops > 0 {
        params.pipeline_depth.saturating_sub(1) as u64
    } else {
        0
    };
    let cycles = ops * params.phases_per_op as u64 + fill;
    let latency_ns = cycles as f64 * params.cycle_ns;
    Timing {
        cycles,
        latency_ns,
        per_column_latency_ns: if columns == 0 { 0.0 } else { latency_ns / columns as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_configs() {
        let p = TimingParams::default();
        let a = timing_model(4, 128, &p);
        assert_eq!(a.cycles, 4);
        assert!((a.latency_ns - 8.0).abs() < 1e-12);
        assert!((a.per_column_latency_ns - 0.0625).abs() < 1e-12);
        assert!((a.per_column_latency_ns - 0.06).abs() / 0.06 <= 0.10);

        let b = timing_model(4, 64, &p);
        assert!((b.per_column_latency_ns - 0.125).abs() < 1e-12);
        assert!((b.per_column_latency_ns - 0.1).abs() / 0.1 <= 0.25);
    }

    #[test]
    fn zero_ops_zero_cycles() {
        let p = TimingParams {
            count_fill: true,
            ..Default::default()
        };
        assert_eq!(timing_model(0, 128, &p).cycles, 0);
        assert_eq!(timing_model(4, 128, &p).cycles, 6);
    }

    #[test]
    fn phased_ops_double_cycles() {
        let p = TimingParams {
            phases_per_op: 2,
            ..Default::default()
        };
        assert_eq!(timing_model(4, 128, &p).cycles, 8);
    }
}
