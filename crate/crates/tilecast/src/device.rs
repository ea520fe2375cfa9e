//! Configurable model of the tile array: grid geometry, tile kinds,
//! scratchpad capacities, DMA channel budgets, and per-kind DMA
//! access-pattern constraints.
//!
//! The default profile family has one shim row (row 0, external memory
//! interface), one mem row (row 1, L2 scratchpad), and four compute rows.
//! Capacities and channel counts are illustrative defaults; every value is
//! a profile field and presets `npu1col1`..`npu1col4` differ only in
//! column count.

use crate::tap::TensorAccessPattern;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeviceError {
    #[error("invalid device profile: {0}")]
    InvalidProfile(String),
    #[error("tile ({col},{row}) is outside the {cols}x{rows} grid")]
    OutOfGrid {
        col: usize,
        row: usize,
        cols: usize,
        rows: usize,
    },
    #[error("unknown device preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileKind {
    Shim,
    Mem,
    Compute,
}

impl fmt::Display for TileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            TileKind::Shim => "shim",
            TileKind::Mem => "mem",
            TileKind::Compute => "compute",
        })
    }
}

/// A grid position plus its kind. Tiles are only minted by a [`Device`],
/// so the kind always matches the profile row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tile {
    pub col: usize,
    pub row: usize,
    pub kind: TileKind,
}

impl fmt::Display for Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

/// Per-DMA limits on the access patterns a tile can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmaConstraint {
    pub max_dims: usize,
    pub max_size_per_dim: usize,
    pub max_stride: usize,
}

/// Directional DMA channel budget of a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelBudget {
    #[serde(rename = "in")]
    pub input: usize,
    #[serde(rename = "out")]
    pub output: usize,
}

/// One value per tile kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerKind<T> {
    pub shim: T,
    pub mem: T,
    pub compute: T,
}

impl<T> PerKind<T> {
    pub fn get(&self, kind: TileKind) -> &T {
        match kind {
            TileKind::Shim => &self.shim,
            TileKind::Mem => &self.mem,
            TileKind::Compute => &self.compute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub n_cols: usize,
    /// Tile kinds from row 0 upward; identical for every column.
    pub rows: Vec<TileKind>,
    /// L1 scratchpad bytes per compute tile.
    pub l1_bytes: usize,
    /// L2 scratchpad bytes per mem tile.
    pub l2_bytes: usize,
    pub channels: PerKind<ChannelBudget>,
    pub dma: PerKind<DmaConstraint>,
}

impl DeviceProfile {
    /// The default family: shim row, mem row, four compute rows.
    pub fn npu1(n_cols: usize) -> Self {
        Self {
            name: format!("npu1col{n_cols}"),
            n_cols,
            rows: vec![
                TileKind::Shim,
                TileKind::Mem,
                TileKind::Compute,
                TileKind::Compute,
                TileKind::Compute,
                TileKind::Compute,
            ],
            l1_bytes: 65_536,
            l2_bytes: 524_288,
            channels: PerKind {
                shim: ChannelBudget {
                    input: 2,
                    output: 2,
                },
                mem: ChannelBudget {
                    input: 2,
                    output: 2,
                },
                compute: ChannelBudget {
                    input: 2,
                    output: 2,
                },
            },
            dma: PerKind {
                shim: DmaConstraint {
                    max_dims: 4,
                    max_size_per_dim: 65_535,
                    max_stride: 1 << 20,
                },
                mem: DmaConstraint {
                    max_dims: 4,
                    max_size_per_dim: 65_535,
                    max_stride: 1 << 20,
                },
                compute: DmaConstraint {
                    max_dims: 3,
                    max_size_per_dim: 65_535,
                    max_stride: 1 << 20,
                },
            },
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let fail = |msg: &str| Err(DeviceError::InvalidProfile(msg.to_string()));
        if self.n_cols == 0 {
            return fail("n_cols must be positive");
        }
        if self.rows.first() != Some(&TileKind::Shim) {
            return fail("row 0 must be a shim row");
        }
        if self.rows.get(1) != Some(&TileKind::Mem) {
            return fail("row 1 must be a mem row");
        }
        if self.rows.iter().filter(|&&k| k == TileKind::Shim).count() != 1
            || self.rows.iter().filter(|&&k| k == TileKind::Mem).count() != 1
        {
            return fail("exactly one shim row and one mem row are supported");
        }
        if !self.rows[2..].iter().all(|&k| k == TileKind::Compute) {
            return fail("rows above the mem row must be compute rows");
        }
        if self.rows.len() < 3 {
            return fail("at least one compute row is required");
        }
        if self.l1_bytes == 0 || self.l2_bytes == 0 {
            return fail("capacities must be positive");
        }
        for kind in [TileKind::Shim, TileKind::Mem, TileKind::Compute] {
            let c = self.dma.get(kind);
            if c.max_dims == 0 || c.max_size_per_dim == 0 || c.max_stride == 0 {
                return fail("dma constraints must be positive");
            }
        }
        Ok(())
    }
}

/// An instantiated, immutable tile array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    profile: DeviceProfile,
}

impl Device {
    pub fn new(profile: DeviceProfile) -> Result<Self, DeviceError> {
        profile.validate()?;
        Ok(Self { profile })
    }

    /// Presets `npu1col1` through `npu1col4`.
    pub fn preset(name: &str) -> Result<Self, DeviceError> {
        match name {
            "npu1col1" => Self::new(DeviceProfile::npu1(1)),
            "npu1col2" => Self::new(DeviceProfile::npu1(2)),
            "npu1col3" => Self::new(DeviceProfile::npu1(3)),
            "npu1col4" => Self::new(DeviceProfile::npu1(4)),
            other => Err(DeviceError::UnknownPreset(other.to_string())),
        }
    }

    pub fn npu1_col1() -> Self {
        Self::preset("npu1col1").unwrap()
    }

    pub fn npu1_col4() -> Self {
        Self::preset("npu1col4").unwrap()
    }

    pub fn profile(&self) -> &DeviceProfile {
        &self.profile
    }

    pub fn n_cols(&self) -> usize {
        self.profile.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.profile.rows.len()
    }

    pub fn tile_at(&self, col: usize, row: usize) -> Result<Tile, DeviceError> {
        if col >= self.n_cols() || row >= self.n_rows() {
            return Err(DeviceError::OutOfGrid {
                col,
                row,
                cols: self.n_cols(),
                rows: self.n_rows(),
            });
        }
        Ok(Tile {
            col,
            row,
            kind: self.profile.rows[row],
        })
    }

    /// All tiles, column-major (matches the placement fill order).
    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        (0..self.n_cols())
            .flat_map(move |col| (0..self.n_rows()).map(move |row| self.tile_at(col, row).unwrap()))
    }

    /// Compute tiles column-major: column 0 bottom-to-top, then column 1.
    pub fn compute_tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        self.tiles().filter(|t| t.kind == TileKind::Compute)
    }

    pub fn shim_tile(&self, col: usize) -> Result<Tile, DeviceError> {
        let row = self
            .profile
            .rows
            .iter()
            .position(|&k| k == TileKind::Shim)
            .expect("validated profile has a shim row");
        self.tile_at(col, row)
    }

    pub fn mem_tile(&self, col: usize) -> Result<Tile, DeviceError> {
        let row = self
            .profile
            .rows
            .iter()
            .position(|&k| k == TileKind::Mem)
            .expect("validated profile has a mem row");
        self.tile_at(col, row)
    }

    pub fn constraint(&self, kind: TileKind) -> &DmaConstraint {
        self.profile.dma.get(kind)
    }

    pub fn channels(&self, kind: TileKind) -> &ChannelBudget {
        self.profile.channels.get(kind)
    }

    /// Checks that `tile` was minted from this grid.
    pub fn owns(&self, tile: Tile) -> bool {
        self.tile_at(tile.col, tile.row)
            .map(|t| t == tile)
            .unwrap_or(false)
    }
}

/// One violated DMA bound. Violations are data, not errors: callers decide
/// whether to reject or re-encode the pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DmaViolation {
    Rank {
        rank: usize,
        max: usize,
    },
    Size {
        dim: usize,
        size: usize,
        max: usize,
    },
    Stride {
        dim: usize,
        stride: usize,
        max: usize,
    },
}

impl fmt::Display for DmaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DmaViolation::Rank { rank, max } => {
                write!(f, "rank {rank} exceeds the DMA maximum of {max}")
            }
            DmaViolation::Size { dim, size, max } => {
                write!(
                    f,
                    "size {size} in dim {dim} exceeds the DMA maximum of {max}"
                )
            }
            DmaViolation::Stride { dim, stride, max } => {
                write!(
                    f,
                    "stride {stride} in dim {dim} exceeds the DMA maximum of {max}"
                )
            }
        }
    }
}

/// Reports every bound of `constraint` that `tap` violates.
pub fn check_dma_pattern(
    tap: &TensorAccessPattern,
    constraint: &DmaConstraint,
) -> Vec<DmaViolation> {
    let mut violations = Vec::new();
    if tap.rank() > constraint.max_dims {
        violations.push(DmaViolation::Rank {
            rank: tap.rank(),
            max: constraint.max_dims,
        });
    }
    for (dim, &size) in tap.sizes().iter().enumerate() {
        if size > constraint.max_size_per_dim {
            violations.push(DmaViolation::Size {
                dim,
                size,
                max: constraint.max_size_per_dim,
            });
        }
    }
    for (dim, &stride) in tap.strides().iter().enumerate() {
        if stride > constraint.max_stride {
            violations.push(DmaViolation::Stride {
                dim,
                stride,
                max: constraint.max_stride,
            });
        }
    }
    violations
}
