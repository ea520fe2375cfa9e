//! Placement of design components onto tiles: hints, the pluggable
//! [`Placer`] interface, the [`SequentialPlacer`], and the resource
//! validator.
//!
//! Placers only fill in components that are unset or hinted; fixed
//! placements are always respected, which is what makes partially placed
//! designs work. The validator is separate because a placer is allowed to
//! produce resource-infeasible layouts; feasibility is checked once, at
//! resolution.

use crate::device::{Device, Tile, TileKind};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlaceError {
    #[error("{component} requires a {required} tile but got {got} tile {tile}")]
    KindMismatch {
        component: String,
        required: TileKind,
        got: TileKind,
        tile: Tile,
    },
    #[error("{component} is already placed at {existing}; cannot re-place at {requested}")]
    AlreadyPlaced {
        component: String,
        existing: Tile,
        requested: Tile,
    },
    #[error("{workers} workers exceed the {tiles} compute tiles of the grid")]
    GridExhausted { workers: usize, tiles: usize },
    #[error("tile {tile} does not belong to the target device grid")]
    ForeignTile { tile: Tile },
}

/// Where a component may end up: nowhere decided yet, any tile of a given
/// kind, or a fixed tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    #[default]
    Unset,
    AnyShim,
    AnyMemTile,
    AnyComputeTile,
    Fixed(Tile),
}

impl Placement {
    pub fn fixed(&self) -> Option<Tile> {
        match self {
            Placement::Fixed(t) => Some(*t),
            _ => None,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Placement::Fixed(_))
    }

    /// Whether this placement can ever land on a tile of `kind`.
    pub fn admits(&self, kind: TileKind) -> bool {
        match self {
            Placement::Unset => true,
            Placement::AnyShim => kind == TileKind::Shim,
            Placement::AnyMemTile => kind == TileKind::Mem,
            Placement::AnyComputeTile => kind == TileKind::Compute,
            Placement::Fixed(t) => t.kind == kind,
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Unset => f.write_str("unset"),
            Placement::AnyShim => f.write_str("any-shim"),
            Placement::AnyMemTile => f.write_str("any-mem"),
            Placement::AnyComputeTile => f.write_str("any-compute"),
            Placement::Fixed(t) => write!(f, "{t}"),
        }
    }
}

/// Fixes a placement slot to `tile`, enforcing kind admissibility and
/// rejecting conflicting re-placement. Placing the same tile twice is a
/// no-op.
pub fn place_slot(
    slot: &mut Placement,
    tile: Tile,
    required: TileKind,
    component: &str,
) -> Result<(), PlaceError> {
    if tile.kind != required {
        return Err(PlaceError::KindMismatch {
            component: component.to_string(),
            required,
            got: tile.kind,
            tile,
        });
    }
    if let Placement::Fixed(existing) = *slot {
        if existing != tile {
            return Err(PlaceError::AlreadyPlaced {
                component: component.to_string(),
                existing,
                requested: tile,
            });
        }
        return Ok(());
    }
    *slot = Placement::Fixed(tile);
    Ok(())
}

/// One placeable component as seen by a placer.
#[derive(Debug, Clone)]
pub struct PlaceItem {
    pub label: String,
    /// Tile kind this component must land on.
    pub required: TileKind,
    pub placement: Placement,
    /// Indices into the problem's fifo list this component is an endpoint of.
    pub fifos: Vec<usize>,
}

/// The placement view handed to a [`Placer`]: the device, the placeable
/// components, and which components share a fifo. Assignments through
/// [`PlacementProblem::assign`] cannot disturb fixed placements.
pub struct PlacementProblem<'d> {
    device: &'d Device,
    items: Vec<PlaceItem>,
    /// fifo index → indices of endpoint items.
    fifo_endpoints: Vec<Vec<usize>>,
}

impl<'d> PlacementProblem<'d> {
    pub fn new(device: &'d Device, items: Vec<PlaceItem>, fifo_endpoints: Vec<Vec<usize>>) -> Self {
        Self {
            device,
            items,
            fifo_endpoints,
        }
    }

    pub fn device(&self) -> &'d Device {
        self.device
    }

    pub fn items(&self) -> &[PlaceItem] {
        &self.items
    }

    pub fn fifo_endpoints(&self) -> &[Vec<usize>] {
        &self.fifo_endpoints
    }

    /// Columns of already-placed peer endpoints of `item`, compute peers
    /// and all peers reported separately.
    pub fn peer_columns(&self, item: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let mut compute = BTreeSet::new();
        let mut any = BTreeSet::new();
        for &fifo in &self.items[item].fifos {
            for &peer in &self.fifo_endpoints[fifo] {
                if peer == item {
                    continue;
                }
                if let Placement::Fixed(tile) = self.items[peer].placement {
                    any.insert(tile.col);
                    if self.items[peer].required == TileKind::Compute {
                        compute.insert(tile.col);
                    }
                }
            }
        }
        (compute, any)
    }

    pub fn assign(&mut self, item: usize, tile: Tile) -> Result<(), PlaceError> {
        if !self.device.owns(tile) {
            return Err(PlaceError::ForeignTile { tile });
        }
        let label = self.items[item].label.clone();
        let required = self.items[item].required;
        place_slot(&mut self.items[item].placement, tile, required, &label)
    }
}

/// A placement generator. Implementations may only assign components that
/// are not already fixed; [`PlacementProblem::assign`] enforces this.
pub trait Placer {
    fn make_placement(&self, problem: &mut PlacementProblem<'_>) -> Result<(), PlaceError>;
}

/// Grid-filling placer: workers go to compute tiles in column-major order,
/// then mem and shim endpoints land in the same column as their fifo's
/// already-placed compute endpoint, balancing contended columns
/// round-robin. Resource budgets are not checked here; the validator does
/// that.
#[derive(Debug, Default, Clone, Copy)]
pub struct SequentialPlacer;

impl SequentialPlacer {
    pub fn new() -> Self {
        Self
    }
}

impl Placer for SequentialPlacer {
    fn make_placement(&self, problem: &mut PlacementProblem<'_>) -> Result<(), PlaceError> {
        let device = problem.device();

        // Workers first: column-major sweep over free compute tiles.
        let occupied: BTreeSet<Tile> = problem
            .items()
            .iter()
            .filter(|it| it.required == TileKind::Compute)
            .filter_map(|it| it.placement.fixed())
            .collect();
        let mut free_tiles = device
            .compute_tiles()
            .filter(|t| !occupied.contains(t))
            .collect::<Vec<_>>()
            .into_iter();
        let unplaced_workers: Vec<usize> = (0..problem.items().len())
            .filter(|&i| {
                problem.items()[i].required == TileKind::Compute
                    && !problem.items()[i].placement.is_fixed()
            })
            .collect();
        for item in unplaced_workers {
            let tile = free_tiles.next().ok_or_else(|| {
                let workers = problem
                    .items()
                    .iter()
                    .filter(|it| it.required == TileKind::Compute)
                    .count();
                PlaceError::GridExhausted {
                    workers,
                    tiles: device.compute_tiles().count(),
                }
            })?;
            problem.assign(item, tile)?;
        }

        // Mem endpoints, then shim endpoints, each into the column of the
        // fifo's compute peers where possible.
        for required in [TileKind::Mem, TileKind::Shim] {
            let mut column_load: BTreeMap<usize, usize> =
                (0..device.n_cols()).map(|c| (c, 0)).collect();
            for it in problem.items() {
                if it.required == required {
                    if let Some(tile) = it.placement.fixed() {
                        *column_load.entry(tile.col).or_default() += 1;
                    }
                }
            }
            for item in 0..problem.items().len() {
                let entry = &problem.items()[item];
                let skip = entry.required != required || entry.placement.is_fixed();
                if skip {
                    continue;
                }
                let (compute_cols, any_cols) = problem.peer_columns(item);
                let candidates: Vec<usize> = if !compute_cols.is_empty() {
                    compute_cols.into_iter().collect()
                } else if !any_cols.is_empty() {
                    any_cols.into_iter().collect()
                } else {
                    (0..device.n_cols()).collect()
                };
                let col = candidates
                    .iter()
                    .copied()
                    .min_by_key(|c| (column_load[c], *c))
                    .expect("candidate list is never empty");
                *column_load.get_mut(&col).unwrap() += 1;
                let tile = match required {
                    TileKind::Mem => device.mem_tile(col),
                    TileKind::Shim => device.shim_tile(col),
                    TileKind::Compute => unreachable!(),
                }
                .expect("column index comes from the grid");
                problem.assign(item, tile)?;
            }
        }
        Ok(())
    }
}

/// Directional channel use of a fifo endpoint: producers send out of their
/// tile, consumers receive into theirs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// A fifo endpoint's footprint on its tile: one directional DMA channel
/// plus `object bytes x depth` of buffer memory.
#[derive(Debug, Clone)]
pub struct EndpointLoad {
    pub fifo: String,
    pub tile: Tile,
    pub direction: Direction,
    pub bytes: usize,
}

/// Everything the validator needs about a fully placed design.
#[derive(Debug, Clone, Default)]
pub struct LoadModel {
    pub workers: Vec<(String, Tile)>,
    pub endpoints: Vec<EndpointLoad>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Channel {
        tile: Tile,
        direction: Direction,
        used: usize,
        budget: usize,
        fifos: Vec<String>,
    },
    Memory {
        tile: Tile,
        used_bytes: usize,
        capacity: usize,
    },
    CoreConflict {
        tile: Tile,
        workers: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Channel {
                tile,
                direction,
                used,
                budget,
                fifos,
            } => write!(
                f,
                "tile {tile} needs {used} {direction} channels but has {budget} (fifos: {})",
                fifos.join(", ")
            ),
            Violation::Memory {
                tile,
                used_bytes,
                capacity,
            } => write!(
                f,
                "tile {tile} needs {used_bytes} buffer bytes but has {capacity}"
            ),
            Violation::CoreConflict { tile, workers } => write!(
                f,
                "tile {tile} hosts more than one worker ({})",
                workers.join(", ")
            ),
        }
    }
}

/// Checks channel budgets, per-tile buffer capacity, and core occupancy
/// over a fully placed design. Violations are data; resolution turns a
/// non-empty list into an error.
pub fn validate_placement(device: &Device, load: &LoadModel) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut per_core: BTreeMap<Tile, Vec<String>> = BTreeMap::new();
    for (name, tile) in &load.workers {
        per_core.entry(*tile).or_default().push(name.clone());
    }
    for (tile, workers) in &per_core {
        if workers.len() > 1 {
            violations.push(Violation::CoreConflict {
                tile: *tile,
                workers: workers.clone(),
            });
        }
    }

    let mut channels: BTreeMap<(Tile, Direction), Vec<String>> = BTreeMap::new();
    let mut memory: BTreeMap<Tile, usize> = BTreeMap::new();
    for ep in &load.endpoints {
        channels
            .entry((ep.tile, ep.direction))
            .or_default()
            .push(ep.fifo.clone());
        // Shim endpoints stage through external memory and carry no
        // scratchpad footprint.
        if ep.tile.kind != TileKind::Shim {
            *memory.entry(ep.tile).or_default() += ep.bytes;
        }
    }
    for ((tile, direction), fifos) in &channels {
        let budget = device.channels(tile.kind);
        let budget = match direction {
            Direction::In => budget.input,
            Direction::Out => budget.output,
        };
        if fifos.len() > budget {
            violations.push(Violation::Channel {
                tile: *tile,
                direction: *direction,
                used: fifos.len(),
                budget,
                fifos: fifos.clone(),
            });
        }
    }
    for (tile, used_bytes) in &memory {
        let capacity = match tile.kind {
            TileKind::Compute => device.profile().l1_bytes,
            TileKind::Mem => device.profile().l2_bytes,
            TileKind::Shim => continue,
        };
        if *used_bytes > capacity {
            violations.push(Violation::Memory {
                tile: *tile,
                used_bytes: *used_bytes,
                capacity,
            });
        }
    }
    violations
}
