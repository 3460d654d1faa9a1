//! End-to-end functional simulation: crossbar, comparators and digital CiM
//! array per tile, checked against the golden reference at every tile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::im2col::{im2col, pool};
use super::layer::{LayerKind, LayerSpec};
use crate::dcim::{DcimArray, DcimGeometry, EventCounters, Gates};
use crate::quantkit::{
    calibrate_alpha, combine_slices, golden_psq_layer, golden_psq_tile, golden_psq_trace, layer_exponent,
    quantize_grid, quantize_partial_sum, quantize_scale_factor, requantize_activation, FixedPoint, PsqMode,
    QuantScheme, ScaleFactorSet, ScaleFit, TernaryCode,
};
use crate::xbar::{column_sums, compare, slice_weights, stream_input, BitSlicedWeights, ComparatorBank};
use crate::{Error, Result};

/// Fixed-point width of the inter-layer requantization scale.
const REQUANT_SCALE_BITS: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayer {
    pub spec: LayerSpec,
    /// `mvm_rows x mvm_cols`; empty for pooling layers.
    pub weights: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub layers: Vec<NetworkLayer>,
    /// One flattened `C x H x W` activation per image.
    pub inputs: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    /// Per-layer quantile of the layer's own column sums.
    Calibrated { target_zero_fraction: f64 },
    Fixed(i64),
}

#[derive(Debug, Clone)]
pub struct FunctionalConfig {
    pub scheme: QuantScheme,
    pub xbar_rows: usize,
    pub xbar_cols: usize,
    pub alpha: AlphaPolicy,
    pub gates: Gates,
    pub phases_per_op: u32,
}

impl FunctionalConfig {
    pub fn new(scheme: QuantScheme, xbar_rows: usize, xbar_cols: usize) -> Self {
        Self {
            scheme,
            xbar_rows,
            xbar_cols,
            alpha: AlphaPolicy::Calibrated {
                target_zero_fraction: crate::quantkit::DEFAULT_ZERO_FRACTION,
            },
            gates: Gates::REFERENCE,
            phases_per_op: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerFidelity {
    pub name: String,
    pub alpha: i64,
    pub sf_exponent: i32,
    pub out_scale: f64,
    pub crossbars: usize,
    /// Comparator outputs on columns that hold weights.
    pub codes: u64,
    pub zero_codes: u64,
    pub sparsity: f64,
    pub overflows: u64,
    pub degenerate_scale_factors: usize,
    pub saturated_scale_factors: usize,
    pub tiles_verified: usize,
    pub counters: EventCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalResult {
    /// Mapped layers only, in order.
    pub layers: Vec<LayerFidelity>,
    /// Final activations per image.
    pub outputs: Vec<Vec<u64>>,
    /// Widened accumulators of the last mapped layer, one row per MVM.
    pub last_accumulators: Vec<Vec<i64>>,
}

impl FunctionalResult {
    pub fn overall_sparsity(&self) -> f64 {
        let (z, n) = self
            .layers
            .iter()
            .fold((0u64, 0u64), |(z, n), l| (z + l.zero_codes, n + l.codes));
        if n == 0 {
            0.0
        } else {
            z as f64 / n as f64
        }
    }
}

pub fn run_functional(net: &Network, cfg: &FunctionalConfig) -> Result<FunctionalResult> {
    cfg.scheme.validate()?;
    let mut acts = net.inputs.clone();
    for a in &acts {
        if let Some((index, &value)) = a.iter().enumerate().find(|(_, &v)| v >> cfg.scheme.input_bits != 0) {
            return Err(Error::InputOutOfRange {
                index,
                value,
                bits: cfg.scheme.input_bits,
            });
        }
    }
    let mut layers = Vec::new();
    let mut last_accumulators = Vec::new();
    for (index, layer) in net.layers.iter().enumerate() {
        let spec = &layer.spec;
        spec.validate()?;
        if let Some(a) = acts.iter().find(|a| a.len() != spec.input_len()) {
            return Err(Error::InvalidLayer {
                layer: spec.name.clone(),
                reason: format!("expects {} input values, got {}", spec.input_len(), a.len()),
            });
        }
        if !spec.is_mapped() {
            acts = acts.iter().map(|a| pool(a, spec)).collect();
            continue;
        }
        let (acc, mut fidelity) = run_layer(index, layer, &acts, cfg)?;

        let top = (1i64 << cfg.scheme.input_bits) - 1;
        let max_acc = acc.iter().flatten().copied().max().unwrap_or(0);
        let scale = if max_acc > 0 {
            let s = top as f64 / max_acc as f64;
            quantize_scale_factor(s, REQUANT_SCALE_BITS, layer_exponent(s, REQUANT_SCALE_BITS)).value
        } else {
            FixedPoint {
                negative: false,
                magnitude: 1,
                exponent: 0,
            }
        };
        fidelity.out_scale = scale.to_f64();
        let m = spec.mvm_count();
        acts = acc
            .chunks(m)
            .map(|image| {
                let mut out = vec![0u64; spec.output_len()];
                for (pixel, row) in image.iter().enumerate() {
                    for (oc, &v) in row.iter().enumerate() {
                        out[oc * m + pixel] = requantize_activation(v, cfg.scheme.input_bits, scale);
                    }
                }
                out
            })
            .collect();
        layers.push(fidelity);
        last_accumulators = acc;
    }
    Ok(FunctionalResult {
        layers,
        outputs: acts,
        last_accumulators,
    })
}

struct TileRun<'a> {
    row_tile: usize,
    col_tile: usize,
    tile: &'a BitSlicedWeights,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    /// `[input][step][column]`
    sums: Vec<Vec<Vec<i64>>>,
}

fn run_layer(
    index: usize,
    layer: &NetworkLayer,
    acts: &[Vec<u64>],
    cfg: &FunctionalConfig,
) -> Result<(Vec<Vec<i64>>, LayerFidelity)> {
    let spec = &layer.spec;
    let scheme = cfg.scheme;
    let (rows, cols) = (spec.mvm_rows(), spec.mvm_cols());
    if layer.weights.len() != rows || layer.weights.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidLayer {
            layer: spec.name.clone(),
            reason: format!("weights must be {rows}x{cols}"),
        });
    }
    let steps = scheme.steps();
    let slices = scheme.slices_per_weight();
    let x: Vec<Vec<u64>> = acts.iter().flat_map(|a| im2col(a, spec)).collect();
    let streams = x.iter().map(|v| stream_input(v, &scheme)).collect::<Result<Vec<_>>>()?;
    let grid = slice_weights(&layer.weights, &scheme, cfg.xbar_rows, cfg.xbar_cols)?;

    let tiles = grid
        .tiles()
        .map(|((rt, ct), tile)| {
            let r = grid.row_range(rt, rows);
            let sums = streams
                .iter()
                .map(|s| (0..steps).map(|j| column_sums(tile, &s.digits[j][r.clone()])).collect())
                .collect::<Result<Vec<Vec<Vec<i64>>>>>()?;
            Ok(TileRun {
                row_tile: rt,
                col_tile: ct,
                tile,
                rows: r,
                cols: grid.col_range(ct, cols),
                sums,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let alpha = match (scheme.mode, cfg.alpha) {
        (PsqMode::Binary, _) => 0,
        (_, AlphaPolicy::Fixed(a)) => a,
        (_, AlphaPolicy::Calibrated { target_zero_fraction }) => {
            let samples: Vec<i64> = tiles
                .iter()
                .flat_map(|t| {
                    let used = t.tile.physical_columns();
                    t.sums.iter().flatten().flat_map(move |v| v[..used].iter().copied())
                })
                .collect();
            calibrate_alpha(&samples, target_zero_fraction)?
        }
    };
    let ls = scheme.with_alpha(alpha);
    ls.validate()?;

    // Scale factors fit the positionally weighted column sum to p.
    let fits: Vec<(Vec<f64>, usize)> = tiles
        .iter()
        .map(|t| {
            let used = t.tile.physical_columns();
            let mut fit = ScaleFit::new(steps, used);
            for per_input in &t.sums {
                for (j, v) in per_input.iter().enumerate() {
                    for (c, &ps) in v[..used].iter().enumerate() {
                        let p = quantize_partial_sum(ps, &ls);
                        let target = ps * ls.step_weight(j) * ls.slice_significance(c % slices);
                        fit.push(j, c, target, p);
                    }
                }
            }
            fit.solve()
        })
        .collect();
    let max_abs = fits.iter().flat_map(|f| &f.0).fold(0f64, |m, v| m.max(v.abs()));
    let exponent = layer_exponent(max_abs, ls.sf_bits);
    let mut sf_grid: Vec<Vec<ScaleFactorSet>> = vec![Vec::new(); grid.row_tiles];
    let (mut degenerate, mut saturated) = (0, 0);
    for (t, (real, deg)) in tiles.iter().zip(&fits) {
        let used = t.tile.physical_columns();
        let (set, sat) = quantize_grid(real, steps, used, ls.sf_bits, exponent);
        degenerate += deg;
        saturated += sat;
        let capacity = t.tile.capacity();
        let mut padded = vec![0i64; steps * capacity];
        for j in 0..steps {
            for c in 0..used {
                padded[j * capacity + c] = set.signed(j, c);
            }
        }
        sf_grid[t.row_tile].push(ScaleFactorSet::from_signed(steps, capacity, ls.sf_bits, exponent, &padded)?);
    }

    let bank = ComparatorBank::from_scheme(&ls);
    let mut acc = vec![vec![0i64; cols]; x.len()];
    let mut counters = EventCounters::default();
    let (mut codes, mut zero_codes) = (0u64, 0u64);
    for t in &tiles {
        let sf = &sf_grid[t.row_tile][t.col_tile];
        let used = t.tile.physical_columns();
        let tile_inputs: Vec<Vec<u64>> = x.iter().map(|v| v[t.rows.clone()].to_vec()).collect();
        let tile_weights: Vec<Vec<i64>> = layer.weights[t.rows.clone()]
            .iter()
            .map(|r| r[t.cols.clone()].to_vec())
            .collect();
        let golden = golden_psq_tile(&tile_inputs, &tile_weights, &ls, sf)?;
        let geometry = DcimGeometry::for_scheme(&ls, t.tile.capacity());
        let mut array = DcimArray::load_scale_factors(geometry, sf)?
            .with_gates(cfg.gates)
            .with_phases_per_op(cfg.phases_per_op);
        for (i, per_input) in t.sums.iter().enumerate() {
            let mut issued = Vec::with_capacity(steps);
            for (j, v) in per_input.iter().enumerate() {
                let mut cmp = compare(v, &bank);
                // columns without weights stay gated
                cmp.codes[used..].fill(TernaryCode::Zero);
                codes += used as u64;
                zero_codes += cmp.codes[..used].iter().filter(|c| c.is_zero()).count() as u64;
                array.issue_step(&cmp.codes, j)?;
                issued.push(cmp.codes);
            }
            let hw = array.read_partial_sums();
            if hw[..used] != golden.partial_sums[i][..] {
                return Err(localize(index, t, i, &issued, &tile_inputs[i], &tile_weights, &ls, sf, geometry, cfg));
            }
            for (l, v) in combine_slices(&hw[..used], slices).into_iter().enumerate() {
                acc[i][t.cols.start + l] += v;
            }
            array.reset_partial_sums();
        }
        counters.merge(array.counters());
    }

    let reference = golden_psq_layer(&x, &layer.weights, &ls, &sf_grid, cfg.xbar_rows, cfg.xbar_cols)?;
    for (i, (hw, gold)) in acc.iter().zip(&reference).enumerate() {
        if let Some(c) = (0..cols).find(|&c| hw[c] != gold[c]) {
            return Err(Error::ReductionMismatch {
                layer: index,
                input: i,
                column: c,
                hardware: hw[c],
                golden: gold[c],
            });
        }
    }

    let fidelity = LayerFidelity {
        name: spec.name.clone(),
        alpha,
        sf_exponent: exponent,
        out_scale: 0.0,
        crossbars: tiles.len(),
        codes,
        zero_codes,
        sparsity: if codes == 0 { 0.0 } else { zero_codes as f64 / codes as f64 },
        overflows: counters.overflow_saturations,
        degenerate_scale_factors: degenerate,
        saturated_scale_factors: saturated,
        tiles_verified: tiles.len(),
        counters,
    };
    Ok((acc, fidelity))
}

/// Replay one input step by step to find where hardware and reference part.
#[allow(clippy::too_many_arguments)]
fn localize(
    layer: usize,
    t: &TileRun<'_>,
    input: usize,
    issued: &[Vec<TernaryCode>],
    x: &[u64],
    weights: &[Vec<i64>],
    scheme: &QuantScheme,
    sf: &ScaleFactorSet,
    geometry: DcimGeometry,
    cfg: &FunctionalConfig,
) -> Error {
    let used = t.tile.physical_columns();
    let mismatch = |step: usize, column: usize, hardware: i64, golden: i64| Error::OracleMismatch {
        layer,
        row_tile: t.row_tile,
        col_tile: t.col_tile,
        column,
        step,
        input,
        hardware,
        golden,
    };
    let trace = match golden_psq_trace(x, weights, scheme, sf) {
        Ok(trace) => trace,
        Err(e) => return e,
    };
    let mut array = match DcimArray::load_scale_factors(geometry, sf) {
        Ok(a) => a.with_gates(cfg.gates),
        Err(e) => return e,
    };
    for (j, codes) in issued.iter().enumerate() {
        if let Err(e) = array.apply_step(codes, j) {
            return e;
        }
        let hw = array.read_partial_sums();
        if let Some(c) = (0..used).find(|&c| hw[c] != trace[j][c]) {
            return mismatch(j, c, hw[c], trace[j][c]);
        }
    }
    // Only reachable if the pipelined run differs from the step-wise replay.
    let last = issued.len().saturating_sub(1);
    mismatch(last, 0, 0, trace.get(last).map_or(0, |t| t[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyKind {
    /// Three fully connected layers.
    Mlp,
    /// Convolution, max pooling, then two fully connected layers.
    Cnn,
}

impl std::str::FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(ToyKind::Mlp),
            "cnn" => Ok(ToyKind::Cnn),
            other => Err(Error::Config(format!("unknown toy network `{other}` (expected mlp or cnn)"))),
        }
    }
}

/// Uniform weights over the scheme's range (non-negative when slices are
/// wider than one bit).
pub fn random_weights(rng: &mut impl Rng, rows: usize, cols: usize, scheme: &QuantScheme) -> Vec<Vec<i64>> {
    let hi = (1i64 << (scheme.weight_bits - 1)) - 1;
    let lo = if scheme.bit_slice == 1 { -hi - 1 } else { 0 };
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(lo..=hi)).collect()).collect()
}

pub fn random_inputs(rng: &mut impl Rng, len: usize, scheme: &QuantScheme) -> Vec<u64> {
    (0..len).map(|_| rng.gen_range(0..1u64 << scheme.input_bits)).collect()
}

/// Seeded random network with random weights and `batch` random inputs.
pub fn toy_network(kind: ToyKind, seed: u64, scheme: &QuantScheme, batch: usize) -> Network {
    let specs = match kind {
        ToyKind::Mlp => vec![
            LayerSpec::fc("fc1", 160, 48),
            LayerSpec::fc("fc2", 48, 24),
            LayerSpec::fc("fc3", 24, 10),
        ],
        ToyKind::Cnn => vec![
            LayerSpec::conv("conv1", 3, 8, 3, 8, 1, 1),
            LayerSpec::pool("pool1", LayerKind::MaxPool, 8, 2, 8, 2),
            LayerSpec::fc("fc1", 128, 40),
            LayerSpec::fc("fc2", 40, 10),
        ],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = (0..batch).map(|_| random_inputs(&mut rng, specs[0].input_len(), scheme)).collect();
    let layers = specs
        .into_iter()
        .map(|spec| {
            let weights = random_weights(&mut rng, spec.mvm_rows(), spec.mvm_cols(), scheme);
            NetworkLayer { spec, weights }
        })
        .collect();
    let name = match kind {
        ToyKind::Mlp => "toy_mlp",
        ToyKind::Cnn => "toy_cnn",
    };
    Network {
        name: name.into(),
        layers,
        inputs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcim::GateFault;

    fn cfg(mode: PsqMode, size: usize) -> FunctionalConfig {
        FunctionalConfig::new(QuantScheme::cifar().with_mode(mode), size, size)
    }

    #[test]
    fn single_layer_toy() {
        let scheme = QuantScheme::cifar();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network {
            name: "one".into(),
            layers: vec![NetworkLayer {
                spec: LayerSpec::fc("fc", 4, 4),
                weights: random_weights(&mut rng, 4, 4, &scheme),
            }],
            inputs: (0..2).map(|_| random_inputs(&mut rng, 4, &scheme)).collect(),
        };
        for mode in [PsqMode::Binary, PsqMode::Ternary] {
            let r = run_functional(&net, &cfg(mode, 128)).unwrap();
            assert_eq!(r.layers.len(), 1);
            assert_eq!(r.layers[0].tiles_verified, 1);
            assert_eq!(r.last_accumulators.len(), 2);
        }
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let scheme = QuantScheme::cifar();
        let mut net = toy_network(ToyKind::Mlp, 1, &scheme, 2);
        net.inputs.iter_mut().for_each(|x| x.fill(0));
        let mut c = cfg(PsqMode::Ternary, 128);
        c.alpha = AlphaPolicy::Fixed(1);
        let r = run_functional(&net, &c).unwrap();
        assert!(r.outputs.iter().flatten().all(|&v| v == 0));
        assert!(r.last_accumulators.iter().flatten().all(|&v| v == 0));
        assert_eq!(r.overall_sparsity(), 1.0);
        assert_eq!(r.layers[0].counters.precharge_reads, 0);
    }

    #[test]
    fn toy_networks_match_reference() {
        let scheme = QuantScheme::cifar();
        for kind in [ToyKind::Mlp, ToyKind::Cnn] {
            let net = toy_network(kind, 11, &scheme, 3);
            for size in [128, 64] {
                let t = run_functional(&net, &cfg(PsqMode::Ternary, size)).unwrap();
                assert!(t.layers.iter().all(|l| l.sparsity >= 0.5), "{kind:?} {size}");
                let b = run_functional(&net, &cfg(PsqMode::Binary, size)).unwrap();
                assert!(b.layers.iter().all(|l| l.sparsity == 0.0));
            }
        }
    }

    #[test]
    fn row_tiles_at_64() {
        let scheme = QuantScheme::cifar();
        let net = toy_network(ToyKind::Mlp, 2, &scheme, 2);
        let r = run_functional(&net, &cfg(PsqMode::Ternary, 64)).unwrap();
        // fc1: 3 row tiles x 3 col tiles (48 outputs, 16 per tile)
        assert_eq!(r.layers[0].crossbars, 9);
    }

    #[test]
    fn injected_fault_is_localized() {
        let scheme = QuantScheme::cifar();
        let net = toy_network(ToyKind::Mlp, 3, &scheme, 2);
        let mut c = cfg(PsqMode::Ternary, 128);
        c.gates = Gates::with_fault(GateFault::SubBorrowTerm);
        match run_functional(&net, &c) {
            Err(Error::OracleMismatch { layer, hardware, golden, .. }) => {
                assert_eq!(layer, 0);
                assert_ne!(hardware, golden);
            }
            other => panic!("expected a mismatch, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_toy() {
        let s = QuantScheme::cifar();
        assert_eq!(toy_network(ToyKind::Cnn, 5, &s, 2), toy_network(ToyKind::Cnn, 5, &s, 2));
        assert_ne!(toy_network(ToyKind::Cnn, 5, &s, 2), toy_network(ToyKind::Cnn, 6, &s, 2));
    }
}
