use super::slicing::BitSlicedWeights;
use crate::quantkit::QuantScheme;
use crate::{Error, Result};

/// Radix-`2^bit_stream` decomposition of an input vector, LSB step first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStreamPlan {
    pub bit_stream: u32,
    /// `digits[j][i]` is the digit of element `i` applied at step `j`.
    pub digits: Vec<Vec<u32>>,
}

impl BitStreamPlan {
    pub fn steps(&self) -> usize {
        self.digits.len()
    }

    /// `sum_j digits[j] * 2^(j * bit_stream)` per element.
    pub fn reconstruct(&self) -> Vec<u64> {
        let len = self.digits.first().map_or(0, |d| d.len());
        (0..len)
            .map(|i| {
                self.digits
                    .iter()
                    .enumerate()
                    .map(|(j, d)| (d[i] as u64) << (j as u32 * self.bit_stream))
                    .sum()
            })
            .collect()
    }
}

pub fn stream_input(x: &[u64], scheme: &QuantScheme) -> Result<BitStreamPlan> {
    scheme.validate()?;
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| v >> scheme.input_bits != 0) {
        return Err(Error::InputOutOfRange {
            index,
            value,
            bits: scheme.input_bits,
        });
    }
    let mask = (1u64 << scheme.bit_stream) - 1;
    let digits = (0..scheme.steps())
        .map(|j| {
            let shift = j as u32 * scheme.bit_stream;
            x.iter().map(|&v| ((v >> shift) & mask) as u32).collect()
        })
        .collect();
    Ok(BitStreamPlan {
        bit_stream: scheme.bit_stream,
        digits,
    })
}

/// Noise-free analog dot product of one step's digits against every physical
/// column. Slice significance and sign are not applied here. Rows beyond the
/// digit vector's length read as zero input.
pub fn column_sums(tile: &BitSlicedWeights, digits: &[u32]) -> Result<Vec<i64>> {
    if digits.len() > tile.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} digits for a {}-row crossbar",
            digits.len(),
            tile.rows()
        )));
    }
    let mut sums = vec![0i64; tile.capacity()];
    for (row, &d) in digits.iter().enumerate() {
        if d == 0 {
            continue;
        }
        for (c, s) in sums.iter_mut().enumerate() {
            *s += d as i64 * tile.cell(row, c) as i64;
        }
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xbar::slice_weights;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stream_examples() {
        let s = QuantScheme::cifar();
        let plan = stream_input(&[5], &s).unwrap();
        assert_eq!(plan.digits, vec![vec![1], vec![0], vec![1], vec![0]]);
        let plan = stream_input(&[0], &s).unwrap();
        assert!(plan.digits.iter().all(|d| d == &vec![0]));
        let s2 = QuantScheme { bit_stream: 2, ..s };
        let plan = stream_input(&[11], &s2).unwrap();
        assert_eq!(plan.digits, vec![vec![3], vec![2]]);
        assert!(matches!(
            stream_input(&[1, 16], &s),
            Err(Error::InputOutOfRange { index: 1, value: 16, .. })
        ));
    }

    #[test]
    fn max_column_sum() {
        // weight -1 stores all-ones slices
        let s = QuantScheme::cifar();
        let w = vec![vec![-1i64]; 128];
        let grid = slice_weights(&w, &s, 128, 128).unwrap();
        let sums = column_sums(grid.tile(0, 0), &[1; 128]).unwrap();
        assert_eq!(&sums[..4], &[128, 128, 128, 128]);
        let zeros = column_sums(grid.tile(0, 0), &[0; 128]).unwrap();
        assert!(zeros.iter().all(|&v| v == 0));
    }

    #[test]
    fn random_tile_matches_dot_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = QuantScheme::cifar();
        let w: Vec<Vec<i64>> = (0..8).map(|_| (0..1).map(|_| rng.gen_range(-8..8)).collect()).collect();
        let grid = slice_weights(&w, &s, 8, 4).unwrap();
        let tile = grid.tile(0, 0);
        let digits: Vec<u32> = (0..8).map(|_| rng.gen_range(0..2)).collect();
        let sums = column_sums(tile, &digits).unwrap();
        for k in 0..4 {
            let bit = |v: i64| (((v as u64) & 0xf) >> k) & 1;
            let want: i64 = (0..8).map(|r| digits[r] as i64 * bit(w[r][0]) as i64).sum();
            assert_eq!(sums[k], want);
        }
    }

    proptest! {
        #[test]
        fn stream_reconstructs(x in prop::collection::vec(0u64..16, 0..20), bs in prop::sample::select(vec![1u32, 2, 4])) {
            let s = QuantScheme { bit_stream: bs, ..QuantScheme::cifar() };
            prop_assert_eq!(stream_input(&x, &s).unwrap().reconstruct(), x);
        }

        #[test]
        fn column_sums_linear(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = QuantScheme::cifar();
            let w: Vec<Vec<i64>> = (0..6).map(|_| (0..2).map(|_| rng.gen_range(-8..8)).collect()).collect();
            let grid = slice_weights(&w, &s, 6, 8).unwrap();
            let a: Vec<u32> = (0..6).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<u32> = (0..6).map(|_| rng.gen_range(0..4)).collect();
            let ab: Vec<u32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let sa = column_sums(grid.tile(0, 0), &a).unwrap();
            let sb = column_sums(grid.tile(0, 0), &b).unwrap();
            let sab = column_sums(grid.tile(0, 0), &ab).unwrap();
            for c in 0..8 {
                prop_assert_eq!(sab[c], sa[c] + sb[c]);
            }
        }
    }
}
