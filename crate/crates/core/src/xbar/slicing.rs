use crate::quantkit::QuantScheme;
use crate::{Error, Result};

/// One crossbar's worth of bit-sliced weights.
///
/// Storage always spans the full `rows x physical_capacity` array; cells that
/// hold no weight are zero. Physical column `l * slices + k` stores slice `k`
/// (LSB first) of logical column `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSlicedWeights {
    rows: usize,
    used_rows: usize,
    logical_cols: usize,
    slices_per_weight: usize,
    capacity: usize,
    bit_slice: u32,
    cells: Vec<u16>,
}

impl BitSlicedWeights {
    /// Crossbar rows (word lines), including zero-filled ones.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn used_rows(&self) -> usize {
        self.used_rows
    }

    pub fn logical_cols(&self) -> usize {
        self.logical_cols
    }

    pub fn slices_per_weight(&self) -> usize {
        self.slices_per_weight
    }

    /// Physical columns carrying weight slices.
    pub fn physical_columns(&self) -> usize {
        self.logical_cols * self.slices_per_weight
    }

    /// Physical column capacity of the crossbar.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn cell(&self, row: usize, column: usize) -> u16 {
        self.cells[row * self.capacity + column]
    }

    /// Rebuild the signed weights from the stored slices.
    pub fn reassemble(&self, scheme: &QuantScheme) -> Vec<Vec<i64>> {
        (0..self.used_rows)
            .map(|r| {
                (0..self.logical_cols)
                    .map(|l| {
                        (0..self.slices_per_weight)
                            .map(|k| {
                                let digit = self.cell(r, l * self.slices_per_weight + k) as i64;
                                if k == self.slices_per_weight - 1 && self.bit_slice == 1 {
                                    digit * scheme.slice_significance(k)
                                } else {
                                    digit << (k as u32 * self.bit_slice)
                                }
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Weight matrix partitioned onto a grid of crossbars.
#[derive(Debug, Clone)]
pub struct TileGrid {
    pub row_tiles: usize,
    pub col_tiles: usize,
    /// Logical columns that fit in one crossbar.
    pub logical_cols_per_tile: usize,
    pub xbar_rows: usize,
    tiles: Vec<BitSlicedWeights>,
}

impl TileGrid {
    pub fn tile(&self, row_tile: usize, col_tile: usize) -> &BitSlicedWeights {
        &self.tiles[row_tile * self.col_tiles + col_tile]
    }

    pub fn tiles(&self) -> impl Iterator<Item = ((usize, usize), &BitSlicedWeights)> {
        self.tiles
            .iter()
            .enumerate()
            .map(|(i, t)| ((i / self.col_tiles, i % self.col_tiles), t))
    }

    pub fn row_range(&self, row_tile: usize, total_rows: usize) -> std::ops::Range<usize> {
        let start = row_tile * self.xbar_rows;
        start..(start + self.xbar_rows).min(total_rows)
    }

    pub fn col_range(&self, col_tile: usize, total_cols: usize) -> std::ops::Range<usize> {
        let start = col_tile * self.logical_cols_per_tile;
        start..(start + self.logical_cols_per_tile).min(total_cols)
    }
}

/// Bit-slice a signed weight matrix (`rows x logical columns`) onto
/// `crossbar_rows x crossbar_cols` arrays. Signed weights are stored in two's
/// complement; with single-bit slices the MSB slice is sign-weighted.
pub fn slice_weights(
    weights: &[Vec<i64>],
    scheme: &QuantScheme,
    crossbar_rows: usize,
    crossbar_cols: usize,
) -> Result<TileGrid> {
    scheme.validate()?;
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch("empty weight matrix".into()));
    }
    let spw = scheme.slices_per_weight();
    let per_tile = crossbar_cols / spw;
    if crossbar_rows == 0 || per_tile == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{crossbar_rows}x{crossbar_cols} crossbar cannot hold a {spw}-slice weight"
        )));
    }
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

    let row_tiles = rows.div_ceil(crossbar_rows);
    let col_tiles = cols.div_ceil(per_tile);
    let mask = (1u64 << scheme.weight_bits) - 1;
    let slice_mask = (1u64 << scheme.bit_slice) - 1;
    let mut tiles = Vec::with_capacity(row_tiles * col_tiles);
    for rt in 0..row_tiles {
        let r0 = rt * crossbar_rows;
        let r1 = (r0 + crossbar_rows).min(rows);
        for ct in 0..col_tiles {
            let c0 = ct * per_tile;
            let c1 = (c0 + per_tile).min(cols);
            let mut cells = vec![0u16; crossbar_rows * crossbar_cols];
            for (r, row) in weights[r0..r1].iter().enumerate() {
                for (l, &w) in row[c0..c1].iter().enumerate() {
                    let pattern = (w as u64) & mask;
                    for k in 0..spw {
                        cells[r * crossbar_cols + l * spw + k] =
                            ((pattern >> (k as u32 * scheme.bit_slice)) & slice_mask) as u16;
                    }
                }
            }
            tiles.push(BitSlicedWeights {
                rows: crossbar_rows,
                used_rows: r1 - r0,
                logical_cols: c1 - c0,
                slices_per_weight: spw,
                capacity: crossbar_cols,
                bit_slice: scheme.bit_slice,
                cells,
            });
        }
    }
    Ok(TileGrid {
        row_tiles,
        col_tiles,
        logical_cols_per_tile: per_tile,
        xbar_rows: crossbar_rows,
        tiles,
    })
}
