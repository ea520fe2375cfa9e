//! Generators that turn 2-D tiling schemes into access-pattern sequences,
//! replacing hand-computed sizes and strides.
//!
//! [`simple_tiler`] emits one pattern per tile, row-major over the tile
//! grid. [`group_tiler`] adds groupings of tiles per pattern, row- or
//! column-wise traversal inside tiles and groups, group repeats, and
//! strided (interleaved) group members. Generated patterns are
//! canonicalized to the default rank by dropping unit dimensions, merging
//! contiguous adjacent dimensions, and padding with leading `[1]/[0]`
//! entries, the shape DMA buffer descriptors expect.

use crate::tap::{TapError, TensorAccessPattern, TensorAccessSequence, DEFAULT_MAX_RANK};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TilerError {
    #[error("{what} {a}x{b} does not divide evenly into {into_a}x{into_b}")]
    NonDivisible {
        what: &'static str,
        a: usize,
        b: usize,
        into_a: usize,
        into_b: usize,
    },
    #[error("pattern needs {rank} dimensions and cannot be merged below the maximum of {max}")]
    RankOverflow { rank: usize, max: usize },
    #[error("invalid tiler spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Tap(#[from] TapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraversalOrder {
    #[default]
    RowMajor,
    ColMajor,
}

/// A 2-D tiling scheme. Tiles must divide the tensor exactly and groups
/// (including their steps) must tile the tile grid exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilerSpec {
    /// Tensor shape as (rows, cols).
    pub tensor_dims: (usize, usize),
    /// Tile shape as (rows, cols).
    pub tile_dims: (usize, usize),
    /// Element traversal inside each tile.
    #[serde(default)]
    pub within_tile_order: TraversalOrder,
    /// Tiles per group as (rows, cols).
    #[serde(default = "one_pair")]
    pub group_dims: (usize, usize),
    /// Tile traversal inside each group; also the enumeration order of
    /// groups over the grid.
    #[serde(default)]
    pub within_group_order: TraversalOrder,
    /// How many times each group's traversal repeats within its pattern.
    #[serde(default = "one")]
    pub group_repeat: usize,
    /// Distance in tiles between successive group members, per axis.
    /// Steps greater than one interleave the members of different groups.
    #[serde(default = "one_pair")]
    pub group_step: (usize, usize),
}

fn one() -> usize {
    1
}

fn one_pair() -> (usize, usize) {
    (1, 1)
}

impl TilerSpec {
    /// A plain tiling: one tile per pattern, everything row-major.
    pub fn simple(tensor_dims: (usize, usize), tile_dims: (usize, usize)) -> Self {
        Self {
            tensor_dims,
            tile_dims,
            within_tile_order: TraversalOrder::RowMajor,
            group_dims: (1, 1),
            within_group_order: TraversalOrder::RowMajor,
            group_repeat: 1,
            group_step: (1, 1),
        }
    }
}

/// One pattern per tile, tiles enumerated row-major over the tile grid,
/// each pattern sweeping its tile row-major.
pub fn simple_tiler(
    tensor_dims: (usize, usize),
    tile_dims: (usize, usize),
) -> Result<TensorAccessSequence, TilerError> {
    group_tiler(&TilerSpec::simple(tensor_dims, tile_dims))
}

/// One pattern per group of tiles, per the spec's traversal orders,
/// repeats, and steps.
pub fn group_tiler(spec: &TilerSpec) -> Result<TensorAccessSequence, TilerError> {
    let (rows, cols) = spec.tensor_dims;
    let (tile_rows, tile_cols) = spec.tile_dims;
    let (group_rows, group_cols) = spec.group_dims;
    if rows == 0 || cols == 0 || tile_rows == 0 || tile_cols == 0 {
        return Err(TilerError::InvalidSpec(
            "tensor and tile dims must be positive".into(),
        ));
    }
    if group_rows == 0 || group_cols == 0 || spec.group_step.0 == 0 || spec.group_step.1 == 0 {
        return Err(TilerError::InvalidSpec(
            "group dims and steps must be positive".into(),
        ));
    }
    if spec.group_repeat == 0 {
        return Err(TilerError::InvalidSpec(
            "group_repeat must be positive".into(),
        ));
    }
    if rows % tile_rows != 0 || cols % tile_cols != 0 {
        return Err(TilerError::NonDivisible {
            what: "tile",
            a: tile_rows,
            b: tile_cols,
            into_a: rows,
            into_b: cols,
        });
    }
    let grid_rows = rows / tile_rows;
    let grid_cols = cols / tile_cols;

    // A step is meaningful only when the group has more than one member
    // along that axis.
    let step_rows = if group_rows == 1 {
        1
    } else {
        spec.group_step.0
    };
    let step_cols = if group_cols == 1 {
        1
    } else {
        spec.group_step.1
    };

    // Groups of `group` members at `step` spacing cover a super-block of
    // group*step tiles; interleaved origins inside each super-block keep
    // the coverage exhaustive and in-bounds.
    let super_rows = group_rows * step_rows;
    let super_cols = group_cols * step_cols;
    if grid_rows % super_rows != 0 || grid_cols % super_cols != 0 {
        return Err(TilerError::NonDivisible {
            what: "group",
            a: super_rows,
            b: super_cols,
            into_a: grid_rows,
            into_b: grid_cols,
        });
    }

    let mut row_origins = Vec::new();
    for block in 0..grid_rows / super_rows {
        for lane in 0..step_rows {
            row_origins.push(block * super_rows + lane);
        }
    }
    let mut col_origins = Vec::new();
    for block in 0..grid_cols / super_cols {
        for lane in 0..step_cols {
            col_origins.push(block * super_cols + lane);
        }
    }

    let mut taps = Vec::new();
    let mut emit = |origin_row: usize, origin_col: usize| -> Result<(), TilerError> {
        let offset = origin_row * tile_rows * cols + origin_col * tile_cols;
        let group_row_dim = (group_rows, step_rows * tile_rows * cols);
        let group_col_dim = (group_cols, step_cols * tile_cols);
        let tile_row_dim = (tile_rows, cols);
        let tile_col_dim = (tile_cols, 1);
        let mut dims = vec![(spec.group_repeat, 0)];
        match spec.within_group_order {
            TraversalOrder::RowMajor => dims.extend([group_row_dim, group_col_dim]),
            TraversalOrder::ColMajor => dims.extend([group_col_dim, group_row_dim]),
        }
        match spec.within_tile_order {
            TraversalOrder::RowMajor => dims.extend([tile_row_dim, tile_col_dim]),
            TraversalOrder::ColMajor => dims.extend([tile_col_dim, tile_row_dim]),
        }
        let (sizes, strides) = canonicalize(&dims, DEFAULT_MAX_RANK)?;
        taps.push(TensorAccessPattern::new(
            &[rows, cols],
            offset,
            &sizes,
            &strides,
        )?);
        Ok(())
    };

    match spec.within_group_order {
        TraversalOrder::RowMajor => {
            for &r in &row_origins {
                for &c in &col_origins {
                    emit(r, c)?;
                }
            }
        }
        TraversalOrder::ColMajor => {
            for &c in &col_origins {
                for &r in &row_origins {
                    emit(r, c)?;
                }
            }
        }
    }

    Ok(TensorAccessSequence::from_taps(taps).expect("tiler emits at least one tap"))
}

/// Re-encodes a pattern to fit a rank budget using the tiler's merge rule.
/// The result is access-equivalent to the input; fails with
/// [`TilerError::RankOverflow`] when no merge brings the rank down enough.
pub fn compress_to_rank(
    tap: &TensorAccessPattern,
    max_rank: usize,
) -> Result<TensorAccessPattern, TilerError> {
    let dims: Vec<(usize, usize)> = tap
        .sizes()
        .iter()
        .copied()
        .zip(tap.strides().iter().copied())
        .collect();
    let (sizes, strides) = canonicalize(&dims, max_rank)?;
    Ok(TensorAccessPattern::with_max_rank(
        tap.tensor_dims(),
        tap.offset(),
        &sizes,
        &strides,
        max_rank,
    )?)
}

/// Drops unit dimensions, merges adjacent contiguous dimensions greedily
/// innermost-first, and pads with leading `(1, 0)` entries up to
/// `max_rank`. Two adjacent dimensions (outer `(s1, d1)`, inner
/// `(s2, d2)`) merge to `(s1*s2, d2)` exactly when `d1 == s2 * d2`.
fn canonicalize(
    dims: &[(usize, usize)],
    max_rank: usize,
) -> Result<(Vec<usize>, Vec<usize>), TilerError> {
    let mut merged: Vec<(usize, usize)> = dims.iter().copied().filter(|&(s, _)| s != 1).collect();
    if merged.is_empty() {
        merged.push((1, 0));
    }
    let mut i = merged.len().saturating_sub(1);
    while i > 0 {
        let (outer_size, outer_stride) = merged[i - 1];
        let (inner_size, inner_stride) = merged[i];
        if outer_stride == inner_size * inner_stride {
            merged[i - 1] = (outer_size * inner_size, inner_stride);
            merged.remove(i);
        }
        i -= 1;
    }
    if merged.len() > max_rank {
        return Err(TilerError::RankOverflow {
            rank: merged.len(),
            max: max_rank,
        });
    }
    let mut sizes = vec![1; max_rank - merged.len()];
    let mut strides = vec![0; max_rank - merged.len()];
    sizes.extend(merged.iter().map(|&(s, _)| s));
    strides.extend(merged.iter().map(|&(_, d)| d));
    Ok((sizes, strides))
}
