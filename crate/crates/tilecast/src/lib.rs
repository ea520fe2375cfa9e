//! tilecast: tensor access patterns with analyzable access maps, a
//! deferred-resolution dataflow design layer, pluggable placement,
//! deterministic textual-IR emission, and a functional simulator for a
//! modeled tile array.
//!
//! The crate is organized around the lifecycle of a design:
//!
//! 1. [`tap`] / [`tiler`]: describe on-the-fly data transformations as
//!    access patterns and generate them from tiling schemes;
//! 2. [`device`]: pick or configure a tile-array model;
//! 3. [`dataflow`]: build the design (fifos, workers, the runtime
//!    sequence, and the program);
//! 4. [`placement`]: place it, by hand or with a placer;
//! 5. [`emitter`]: resolve to records and emit deterministic `.tir` text
//!    ([`diff`] compares two designs at three strictness levels);
//! 6. [`sim`]: execute the resolved design on host buffers.
//!
//! Each capability has a runnable demo under `examples/`; the `tilecast`
//! binary wraps the same functionality as a CLI.

pub mod cli;
pub mod dataflow;
pub mod device;
pub mod diff;
pub mod emitter;
pub mod hostbuf;
pub mod kernel;
pub mod manifest;
pub mod placement;
pub mod render;
mod resolve;
pub mod sim;
pub mod tap;
pub mod tiler;

pub use dataflow::{
    BufferId, ObjectFifo, ObjectFifoHandle, ObjectType, Program, Runtime, Scalar, Worker, WorkerArg,
};
pub use device::{Device, DeviceProfile, Tile, TileKind};
pub use emitter::ResolvedDesign;
pub use kernel::KernelRegistry;
pub use placement::{Placement, Placer, SequentialPlacer};
pub use resolve::ResolveError;
pub use sim::{run, RunReport, RunStatus};
pub use tap::{
    access_count, access_equivalent, access_order, AccessMap, TensorAccessPattern,
    TensorAccessSequence,
};
pub use tiler::{group_tiler, simple_tiler, TilerSpec};
