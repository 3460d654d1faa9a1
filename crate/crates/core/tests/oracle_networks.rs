use psqsim::dcim::{GateFault, Gates};
use psqsim::mapper::{random_inputs, random_weights, run_functional, FunctionalConfig, LayerSpec, Network, NetworkLayer};
use psqsim::quantkit::{PsqMode, QuantScheme};
use psqsim::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mlp(seed: u64, scheme: &QuantScheme) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths: Vec<usize> = (0..4).map(|_| rng.gen_range(8..300)).collect();
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let spec = LayerSpec::fc(&format!("fc{i}"), w[0], w[1]);
            let weights = random_weights(&mut rng, w[0], w[1], scheme);
            NetworkLayer { spec, weights }
        })
        .collect();
    let inputs = (0..3).map(|_| random_inputs(&mut rng, widths[0], scheme)).collect();
    Network {
        name: format!("mlp{seed}"),
        layers,
        inputs,
    }
}

#[test]
fn hardware_matches_reference_on_random_networks() {
    for seed in 0..6 {
        for base in [QuantScheme::cifar(), QuantScheme::imagenet()] {
            for mode in [PsqMode::Binary, PsqMode::Ternary] {
                for size in [64, 128] {
                    let scheme = base.with_mode(mode);
                    let net = random_mlp(seed, &scheme);
                    let r = run_functional(&net, &FunctionalConfig::new(scheme, size, size))
                        .unwrap_or_else(|e| panic!("seed {seed} {mode:?} {size}: {e}"));
                    assert_eq!(r.layers.len(), 3);
                    assert_eq!(r.outputs.len(), 3);
                    if mode == PsqMode::Binary {
                        assert_eq!(r.overall_sparsity(), 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn faults_are_localized() {
    let scheme = QuantScheme::cifar();
    let net = random_mlp(1, &scheme);
    for fault in [GateFault::AddCarryTerm, GateFault::SubBorrowTerm] {
        let mut cfg = FunctionalConfig::new(scheme, 128, 128);
        cfg.gates = Gates::with_fault(fault);
        match run_functional(&net, &cfg) {
            Err(Error::OracleMismatch { hardware, golden, .. }) => assert_ne!(hardware, golden),
            other => panic!("{fault:?}: expected a mismatch, got {other:?}"),
        }
    }
}
