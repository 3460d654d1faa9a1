use super::layer::LayerSpec;
use crate::quantkit::QuantScheme;
use crate::{Error, Result};

/// Scale factors one crossbar needs: one per bit-stream step per physical
/// column.
pub fn scale_factor_count(input_bits: u32, bit_stream: u32, physical_columns: usize) -> usize {
    (input_bits / bit_stream) as usize * physical_columns
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileAssignment {
    pub row_tile: usize,
    pub col_tile: usize,
    pub rows: usize,
    pub logical_cols: usize,
    pub physical_columns: usize,
    pub sf_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub layer: String,
    pub xbar_rows: usize,
    pub xbar_cols: usize,
    pub row_tiles: usize,
    pub col_tiles: usize,
    pub logical_cols_per_tile: usize,
    pub mvm_cols: usize,
    pub mvm_count: usize,
    /// Row-major over `(row_tile, col_tile)`.
    pub tiles: Vec<TileAssignment>,
}

impl TilePlan {
    pub fn crossbars(&self) -> usize {
        self.tiles.len()
    }

    /// Row-tile partial sums reduced per output.
    pub fn accumulation_depth(&self) -> usize {
        self.row_tiles
    }

    pub fn total_physical_columns(&self) -> usize {
        self.tiles.iter().map(|t| t.physical_columns).sum()
    }

    pub fn max_physical_columns(&self) -> usize {
        self.tiles.iter().map(|t| t.physical_columns).max().unwrap_or(0)
    }

    pub fn total_scale_factors(&self) -> usize {
        self.tiles.iter().map(|t| t.sf_count).sum()
    }

    /// Partial sums sent from non-root row tiles to the adder tree, per image.
    pub fn movement_events(&self) -> u64 {
        (self.row_tiles.saturating_sub(1) * self.mvm_cols * self.mvm_count) as u64
    }

    /// Levels of a binary adder tree over the row tiles.
    pub fn adder_tree_depth(&self) -> u32 {
        if self.row_tiles <= 1 {
            0
        } else {
            usize::BITS - (self.row_tiles - 1).leading_zeros()
        }
    }
}

/// Tile a layer's lowered weight matrix onto `xbar_rows x xbar_cols`
/// crossbars, keeping every slice of a logical column in the same tile.
pub fn plan(layer: &LayerSpec, scheme: &QuantScheme, xbar_rows: usize, xbar_cols: usize) -> Result<TilePlan> {
    layer.validate()?;
    scheme.validate()?;
    let slices = scheme.slices_per_weight();
    let per_tile = xbar_cols / slices;
    if xbar_rows == 0 || per_tile == 0 {
        return Err(Error::InvalidLayer {
            layer: layer.name.clone(),
            reason: format!("{xbar_rows}x{xbar_cols} crossbar cannot hold one {slices}-slice weight column"),
        });
    }
    let (rows, cols) = (layer.mvm_rows(), layer.mvm_cols());
    let row_tiles = rows.div_ceil(xbar_rows);
    let col_tiles = cols.div_ceil(per_tile);
    let mut tiles = Vec::with_capacity(row_tiles * col_tiles);
    for rt in 0..row_tiles {
        for ct in 0..col_tiles {
            let used_rows = (rows - rt * xbar_rows).min(xbar_rows);
            let logical = (cols - ct * per_tile).min(per_tile);
            let physical = logical * slices;
            tiles.push(TileAssignment {
                row_tile: rt,
                col_tile: ct,
                rows: used_rows,
                logical_cols: logical,
                physical_columns: physical,
                sf_count: scale_factor_count(scheme.input_bits, scheme.bit_stream, physical),
            });
        }
    }
    Ok(TilePlan {
        layer: layer.name.clone(),
        xbar_rows,
        xbar_cols,
        row_tiles,
        col_tiles,
        logical_cols_per_tile: per_tile,
        mvm_cols: cols,
        mvm_count: layer.mvm_count(),
        tiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::LayerKind;
    use proptest::prelude::*;

    #[test]
    fn table_presets() {
        assert_eq!(scale_factor_count(4, 1, 128), 512);
        assert_eq!(scale_factor_count(4, 1, 64), 256);
        // full-width fc fills a crossbar exactly
        let s = QuantScheme::cifar();
        let p = plan(&LayerSpec::fc("f", 128, 32), &s, 128, 128).unwrap();
        assert_eq!(p.tiles[0].physical_columns, 128);
        assert_eq!(p.tiles[0].sf_count, 512);
        let p = plan(&LayerSpec::fc("f", 64, 16), &s, 64, 64).unwrap();
        assert_eq!(p.tiles[0].sf_count, 256);
    }

    #[test]
    fn resnet_block_layer() {
        let l = LayerSpec::conv("c", 16, 16, 3, 32, 1, 1);
        let p = plan(&l, &QuantScheme::cifar(), 128, 128).unwrap();
        assert_eq!((p.row_tiles, p.col_tiles), (2, 1));
        assert!(p.tiles.iter().all(|t| t.physical_columns == 64));
        assert_eq!(p.tiles[1].rows, 16);
        assert_eq!(p.movement_events(), 16 * 1024);
        assert_eq!(p.adder_tree_depth(), 1);
    }

    #[test]
    fn pool_has_no_tiles() {
        let l = LayerSpec::pool("p", LayerKind::MaxPool, 16, 2, 32, 2);
        let p = plan(&l, &QuantScheme::cifar(), 128, 128).unwrap();
        assert_eq!(p.crossbars(), 0);
        assert_eq!(p.movement_events(), 0);
    }

    #[test]
    fn too_narrow_crossbar() {
        assert!(plan(&LayerSpec::fc("f", 4, 4), &QuantScheme::cifar(), 4, 3).is_err());
    }

    #[test]
    fn tree_depth() {
        let s = QuantScheme::cifar();
        for (rows, depth) in [(64, 0), (128, 1), (192, 2), (256, 2), (320, 3)] {
            assert_eq!(plan(&LayerSpec::fc("f", rows, 4), &s, 64, 64).unwrap().adder_tree_depth(), depth);
        }
    }

    proptest! {
        #[test]
        fn sf_count_matches_steps_times_columns(
            bit_stream in 1u32..=4, mult in 1u32..=4, columns in 1usize..1024,
        ) {
            let input_bits = bit_stream * mult;
            prop_assert_eq!(scale_factor_count(input_bits, bit_stream, columns), mult as usize * columns);
        }

        #[test]
        fn every_tile_obeys_sf_count(
            in_c in 1usize..64, out_c in 1usize..64, k in 1usize..4, small in proptest::bool::ANY,
        ) {
            let s = QuantScheme::cifar();
            let size = if small { 64 } else { 128 };
            let l = LayerSpec::conv("c", in_c, out_c, k, 8, 1, k / 2);
            let p = plan(&l, &s, size, size).unwrap();
            prop_assert_eq!(p.tiles.iter().map(|t| t.logical_cols).sum::<usize>() , out_c * p.row_tiles);
            for t in &p.tiles {
                prop_assert!(t.physical_columns <= size);
                prop_assert_eq!(t.sf_count, s.steps() * t.physical_columns);
            }
        }

        #[test]
        fn smaller_crossbars_move_more(in_c in 1usize..300, out_c in 1usize..300) {
            let s = QuantScheme::cifar();
            let l = LayerSpec::fc("f", in_c, out_c);
            let big = plan(&l, &s, 128, 128).unwrap();
            let small = plan(&l, &s, 64, 64).unwrap();
            prop_assert!(small.movement_events() >= big.movement_events());
        }
    }
}
