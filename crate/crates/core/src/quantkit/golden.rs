//! Pure-software reference for the partial-sum-quantized MVM.
//!
//! This path works directly on integers (shifts and masks) and shares no code
//! with the crossbar or digital-array models it is used to check. Physical
//! columns are laid out logical-column major: column `l * slices + k` holds
//! slice `k` (LSB first) of logical column `l`.

use super::calibrate::ScaleFactorSet;
use super::psq::quantize_partial_sum;
use super::scheme::QuantScheme;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldenTile {
    /// One row per input vector, one entry per physical column.
    pub partial_sums: Vec<Vec<i64>>,
    pub overflows: usize,
    pub zero_codes: usize,
    pub codes: usize,
}

fn check_inputs(inputs: &[Vec<u64>], rows: usize, scheme: &QuantScheme) -> Result<()> {
    for (n, x) in inputs.iter().enumerate() {
        if x.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "input {n} has {} elements, weights have {rows} rows",
                x.len()
            )));
        }
        if let Some((i, &v)) = x.iter().enumerate().find(|(_, &v)| v >> scheme.input_bits != 0) {
            return Err(Error::InputOutOfRange {
                index: i,
                value: v,
                bits: scheme.input_bits,
            });
        }
    }
    Ok(())
}

fn check_weights(weights: &[Vec<i64>], scheme: &QuantScheme) -> Result<usize> {
    let cols = weights.first().map_or(0, |r| r.len());
    let lo = -(1i64 << (scheme.weight_bits - 1));
    let hi = (1i64 << (scheme.weight_bits - 1)) - 1;
    for (r, row) in weights.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "weight row {r} has {} columns, expected {cols}",
                row.len()
            )));
        }
        for (c, &w) in row.iter().enumerate() {
            if w < lo || w > hi {
                return Err(Error::WeightOutOfRange {
                    row: r,
                    col: c,
                    value: w,
                    bits: scheme.weight_bits,
                });
            }
            if w < 0 && scheme.bit_slice != 1 {
                return Err(Error::SignedMultiBitSlice {
                    row: r,
                    col: c,
                    value: w,
                    bit_slice: scheme.bit_slice,
                });
            }
        }
    }
    Ok(cols)
}

/// Unsigned digit of slice `k` of `w` in `weight_bits` two's complement.
fn slice_digit(w: i64, k: usize, scheme: &QuantScheme) -> i64 {
    let pattern = (w as u64) & ((1u64 << scheme.weight_bits) - 1);
    ((pattern >> (k as u32 * scheme.bit_slice)) & ((1u64 << scheme.bit_slice) - 1)) as i64
}

fn input_digit(x: u64, j: usize, scheme: &QuantScheme) -> i64 {
    ((x >> (j as u32 * scheme.bit_stream)) & ((1u64 << scheme.bit_stream) - 1)) as i64
}

/// Raw column sum for step `j`, physical column (`l`, `k`).
fn column_sum(x: &[u64], weights: &[Vec<i64>], j: usize, l: usize, k: usize, scheme: &QuantScheme) -> i64 {
    x.iter()
        .zip(weights)
        .map(|(&xi, row)| input_digit(xi, j, scheme) * slice_digit(row[l], k, scheme))
        .sum()
}

/// Per-step accumulator snapshots for a single input, `trace[j][c]` after
/// step `j` has been applied.
pub fn golden_psq_trace(
    input: &[u64],
    weights: &[Vec<i64>],
    scheme: &QuantScheme,
    sf: &ScaleFactorSet,
) -> Result<Vec<Vec<i64>>> {
    scheme.validate()?;
    let logical = check_weights(weights, scheme)?;
    check_inputs(std::slice::from_ref(&input.to_vec()), weights.len(), scheme)?;
    let slices = scheme.slices_per_weight();
    let physical = logical * slices;
    check_sf(sf, scheme, physical)?;
    let mut acc = vec![0i64; physical];
    let mut trace = Vec::with_capacity(scheme.steps());
    for j in 0..scheme.steps() {
        for l in 0..logical {
            for k in 0..slices {
                let c = l * slices + k;
                let p = quantize_partial_sum(column_sum(input, weights, j, l, k, scheme), scheme);
                acc[c] = scheme.saturate(acc[c] + p.value() * sf.signed(j, c)).0;
            }
        }
        trace.push(acc.clone());
    }
    Ok(trace)
}

fn check_sf(sf: &ScaleFactorSet, scheme: &QuantScheme, physical: usize) -> Result<()> {
    if sf.steps() != scheme.steps() || sf.columns() < physical {
        return Err(Error::DimensionMismatch(format!(
            "scale factors are {}x{}, tile needs {}x{physical}",
            sf.steps(),
            sf.columns(),
            scheme.steps()
        )));
    }
    Ok(())
}

/// Final per-physical-column partial sums of one tile for each input,
/// accumulated in step order with saturation at `ps_bits`.
pub fn golden_psq_tile(
    inputs: &[Vec<u64>],
    weights: &[Vec<i64>],
    scheme: &QuantScheme,
    sf: &ScaleFactorSet,
) -> Result<GoldenTile> {
    scheme.validate()?;
    let logical = check_weights(weights, scheme)?;
    check_inputs(inputs, weights.len(), scheme)?;
    let slices = scheme.slices_per_weight();
    let physical = logical * slices;
    check_sf(sf, scheme, physical)?;

    let mut out = GoldenTile::default();
    for x in inputs {
        let mut acc = vec![0i64; physical];
        for j in 0..scheme.steps() {
            for l in 0..logical {
                for k in 0..slices {
                    let c = l * slices + k;
                    let p = quantize_partial_sum(column_sum(x, weights, j, l, k, scheme), scheme);
                    out.codes += 1;
                    out.zero_codes += p.is_zero() as usize;
                    let (v, sat) = scheme.saturate(acc[c] + p.value() * sf.signed(j, c));
                    out.overflows += sat as usize;
                    acc[c] = v;
                }
            }
        }
        out.partial_sums.push(acc);
    }
    Ok(out)
}

/// Quantizer bypass: `p` is the raw column sum and the scale is the exact
/// positional weight `2^(j * bit_stream) * slice significance`, with no
/// saturation. Summing the slice columns gives the exact product `W^T x`.
pub fn golden_ideal_tile(
    inputs: &[Vec<u64>],
    weights: &[Vec<i64>],
    scheme: &QuantScheme,
) -> Result<Vec<Vec<i64>>> {
    scheme.validate()?;
    let logical = check_weights(weights, scheme)?;
    check_inputs(inputs, weights.len(), scheme)?;
    let slices = scheme.slices_per_weight();
    Ok(inputs
        .iter()
        .map(|x| {
            let mut acc = vec![0i64; logical * slices];
            for j in 0..scheme.steps() {
                for l in 0..logical {
                    for k in 0..slices {
                        let scale = scheme.step_weight(j) * scheme.slice_significance(k);
                        acc[l * slices + k] += column_sum(x, weights, j, l, k, scheme) * scale;
                    }
                }
            }
            acc
        })
        .collect())
}

/// Sum each logical column's slice partial sums.
pub fn combine_slices(physical: &[i64], slices: usize) -> Vec<i64> {
    physical.chunks(slices).map(|c| c.iter().sum()).collect()
}

/// Full layer reference: tiles the weight matrix onto `xbar_rows x xbar_cols`
/// crossbars, runs each tile through [`golden_psq_tile`], then reduces slice
/// columns and row tiles in a widened accumulator.
///
/// `sf[row_tile][col_tile]` holds each tile's scale factors.
pub fn golden_psq_layer(
    inputs: &[Vec<u64>],
    weights: &[Vec<i64>],
    scheme: &QuantScheme,
    sf: &[Vec<ScaleFactorSet>],
    xbar_rows: usize,
    xbar_cols: usize,
) -> Result<Vec<Vec<i64>>> {
    let rows = weights.len();
    let cols = check_weights(weights, scheme)?;
    check_inputs(inputs, rows, scheme)?;
    let slices = scheme.slices_per_weight();
    let per_tile = xbar_cols / slices;
    if per_tile == 0 || xbar_rows == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{xbar_rows}x{xbar_cols} crossbar cannot hold a {slices}-slice weight"
        )));
    }
    let row_tiles = rows.div_ceil(xbar_rows);
    let col_tiles = cols.div_ceil(per_tile);
    if sf.len() != row_tiles || sf.iter().any(|r| r.len() != col_tiles) {
        return Err(Error::DimensionMismatch(format!(
            "scale-factor grid does not match {row_tiles}x{col_tiles} tiles"
        )));
    }
    let mut out = vec![vec![0i64; cols]; inputs.len()];
    for rt in 0..row_tiles {
        let r0 = rt * xbar_rows;
        let r1 = (r0 + xbar_rows).min(rows);
        let tile_inputs: Vec<Vec<u64>> = inputs.iter().map(|x| x[r0..r1].to_vec()).collect();
        for ct in 0..col_tiles {
            let c0 = ct * per_tile;
            let c1 = (c0 + per_tile).min(cols);
            let tile_weights: Vec<Vec<i64>> = weights[r0..r1].iter().map(|r| r[c0..c1].to_vec()).collect();
            let tile = golden_psq_tile(&tile_inputs, &tile_weights, scheme, &sf[rt][ct])?;
            for (o, ps) in out.iter_mut().zip(&tile.partial_sums) {
                for (l, v) in combine_slices(ps, slices).into_iter().enumerate() {
                    o[c0 + l] += v;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantkit::PsqMode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_sf(steps: usize, cols: usize, sf_bits: u32, value: i64) -> ScaleFactorSet {
        ScaleFactorSet::from_signed(steps, cols, sf_bits, 0, &vec![value; steps * cols]).unwrap()
    }

    #[test]
    fn identity_example() {
        // Binary mode maps the zero column sums of the unused steps/slices to
        // +1, so only the (step 0, LSB slice) entry carries a scale.
        let scheme = QuantScheme::cifar().with_mode(PsqMode::Binary);
        let mut vals = vec![0i64; 16];
        vals[0] = 1;
        let sf = ScaleFactorSet::from_signed(4, 4, 4, 0, &vals).unwrap();
        let out = golden_psq_tile(&[vec![1]], &[vec![1]], &scheme, &sf).unwrap();
        assert_eq!(combine_slices(&out.partial_sums[0], 4), vec![1]);
    }

    #[test]
    fn zero_inputs_ternary_give_zero() {
        let scheme = QuantScheme::cifar().with_alpha(2);
        let sf = unit_sf(4, 8, 4, 7);
        let weights = vec![vec![3, -2]; 5];
        let out = golden_psq_tile(&[vec![0; 5]], &weights, &scheme, &sf).unwrap();
        assert!(out.partial_sums[0].iter().all(|&v| v == 0));
        assert_eq!(out.zero_codes, out.codes);
    }

    #[test]
    fn saturates_at_ps_bits() {
        let scheme = QuantScheme::cifar().with_mode(PsqMode::Binary);
        // every column sum is >= 0 so every p is +1: 4 steps * 15 = 60, fits
        let sf = unit_sf(4, 4, 4, 15);
        let out = golden_psq_tile(&[vec![0]], &[vec![0]], &scheme, &sf).unwrap();
        assert_eq!(out.partial_sums[0], vec![60; 4]);
        assert_eq!(out.overflows, 0);

        let narrow = QuantScheme { ps_bits: 6, ..scheme };
        let out = golden_psq_tile(&[vec![0]], &[vec![0]], &narrow, &sf).unwrap();
        assert_eq!(out.partial_sums[0], vec![31; 4]);
        assert!(out.overflows > 0);
    }

    #[test]
    fn trace_ends_at_tile_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scheme = QuantScheme::cifar().with_alpha(2);
        let weights: Vec<Vec<i64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-8..8)).collect()).collect();
        let x: Vec<u64> = (0..6).map(|_| rng.gen_range(0..16)).collect();
        let vals: Vec<i64> = (0..48).map(|_| rng.gen_range(-15..16)).collect();
        let sf = ScaleFactorSet::from_signed(4, 12, 4, 0, &vals).unwrap();
        let trace = golden_psq_trace(&x, &weights, &scheme, &sf).unwrap();
        let tile = golden_psq_tile(&[x], &weights, &scheme, &sf).unwrap();
        assert_eq!(trace.last().unwrap(), &tile.partial_sums[0]);
    }

    #[test]
    fn dimension_errors() {
        let scheme = QuantScheme::cifar();
        let sf = unit_sf(4, 4, 4, 1);
        assert!(golden_psq_tile(&[vec![1, 2]], &[vec![1]], &scheme, &sf).is_err());
        assert!(golden_psq_tile(&[vec![16]], &[vec![1]], &scheme, &sf).is_err());
        assert!(matches!(
            golden_psq_tile(&[vec![1]], &[vec![9]], &scheme, &sf),
            Err(Error::WeightOutOfRange { .. })
        ));
        let small = unit_sf(4, 2, 4, 1);
        assert!(golden_psq_tile(&[vec![1]], &[vec![1]], &scheme, &small).is_err());
    }

    /// Reference with a different loop nest: columns outermost, rows before
    /// steps, then a separate quantize-and-accumulate pass in step order.
    fn reference_swapped(x: &[u64], w: &[Vec<i64>], scheme: &QuantScheme, sf: &ScaleFactorSet) -> Vec<i64> {
        let slices = scheme.slices_per_weight();
        let cols = w[0].len() * slices;
        let mut out = vec![0i64; cols];
        for (c, o) in out.iter_mut().enumerate() {
            let (l, k) = (c / slices, c % slices);
            let mut sums = vec![0i64; scheme.steps()];
            for (r, row) in w.iter().enumerate() {
                let bits = ((row[l] as u64) & ((1 << scheme.weight_bits) - 1)) >> (k as u32 * scheme.bit_slice);
                let cell = (bits & ((1 << scheme.bit_slice) - 1)) as i64;
                let mut xv = x[r];
                for s in sums.iter_mut() {
                    *s += (xv & ((1 << scheme.bit_stream) - 1)) as i64 * cell;
                    xv >>= scheme.bit_stream;
                }
            }
            for (j, &s) in sums.iter().enumerate() {
                let p = quantize_partial_sum(s, scheme).value();
                *o = (*o + p * sf.signed(j, c)).clamp(scheme.ps_min(), scheme.ps_max());
            }
        }
        out
    }

    #[test]
    fn random_4x4_matches_swapped_loop_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mode in [PsqMode::Binary, PsqMode::Ternary] {
            for _ in 0..50 {
                let scheme = QuantScheme::cifar().with_mode(mode).with_alpha(rng.gen_range(0..5));
                let w: Vec<Vec<i64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-8..8)).collect()).collect();
                let x: Vec<u64> = (0..4).map(|_| rng.gen_range(0..16)).collect();
                let vals: Vec<i64> = (0..64).map(|_| rng.gen_range(-15..16)).collect();
                let sf = ScaleFactorSet::from_signed(4, 16, 4, 0, &vals).unwrap();
                let tile = golden_psq_tile(&[x.clone()], &w, &scheme, &sf).unwrap();
                assert_eq!(tile.partial_sums[0], reference_swapped(&x, &w, &scheme, &sf));
            }
        }
    }

    proptest! {
        #[test]
        fn ideal_mode_is_exact_matmul(
            rows in 1usize..10,
            cols in 1usize..5,
            seed in any::<u64>(),
            bit_stream in prop::sample::select(vec![1u32, 2, 4]),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scheme = QuantScheme { bit_stream, ..QuantScheme::cifar() };
            let w: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-8..8)).collect()).collect();
            let x: Vec<u64> = (0..rows).map(|_| rng.gen_range(0..16)).collect();
            let ideal = golden_ideal_tile(&[x.clone()], &w, &scheme).unwrap();
            let got = combine_slices(&ideal[0], scheme.slices_per_weight());
            let want: Vec<i64> = (0..cols).map(|c| (0..rows).map(|r| x[r] as i64 * w[r][c]).sum()).collect();
            prop_assert_eq!(got, want);
        }
    }
}
