use psqsim::costmodel::{dcim_energy, DcimEnergyParams};
use psqsim::dcim::{timing_model, DcimArray, DcimGeometry, TimingParams};
use psqsim::quantkit::{QuantScheme, ScaleFactorSet, TernaryCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn array(cols: usize, rng: &mut ChaCha8Rng) -> DcimArray {
    let scheme = QuantScheme::cifar();
    let g = DcimGeometry::for_scheme(&scheme, cols);
    let sf: Vec<i64> = (0..g.steps * cols).map(|_| rng.gen_range(-15..=15)).collect();
    let set = ScaleFactorSet::from_signed(g.steps, cols, g.sf_bits, 0, &sf).unwrap();
    DcimArray::load_scale_factors(g, &set).unwrap()
}

/// Runs `ops` pipelined row operations with the given zero probability.
fn run(ops: usize, zero_p: f64, seed: u64) -> DcimArray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = 128;
    let mut a = array(cols, &mut rng);
    for i in 0..ops {
        let codes: Vec<TernaryCode> = (0..cols)
            .map(|_| {
                if rng.gen_bool(zero_p) {
                    TernaryCode::Zero
                } else if rng.gen() {
                    TernaryCode::Plus
                } else {
                    TernaryCode::Minus
                }
            })
            .collect();
        a.issue_step(&codes, i % 4).unwrap();
    }
    a.flush();
    a
}

#[test]
fn simulated_cycles_match_timing_model() {
    let params = TimingParams {
        count_fill: true,
        ..Default::default()
    };
    for ops in [1, 2, 4, 17, 64] {
        let a = run(ops, 0.3, ops as u64);
        assert_eq!(a.counters().cycles, timing_model(ops as u64, 128, &params).cycles, "{ops} ops");
    }
}

#[test]
fn sparsity_changes_energy_not_cycles() {
    let p = DcimEnergyParams::default();
    let mut last_energy = f64::INFINITY;
    let mut cycles = None;
    for zero_p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let a = run(32, zero_p, 9);
        let e = dcim_energy(a.counters(), &p);
        assert!(e < last_energy, "energy at {zero_p}: {e}");
        last_energy = e;
        assert_eq!(*cycles.get_or_insert(a.counters().cycles), a.counters().cycles);
        let c = a.counters();
        assert_eq!(c.precharge_reads + c.gated_columns, 32 * 128);
    }
}
