//! The deferred-resolution design layer: typed circular buffers
//! ([`ObjectFifo`]) with producer/consumer handles, forward/split/join
//! staging, compute [`Worker`]s, the host-side [`Runtime`] sequence, and
//! the [`Program`] container.
//!
//! Nothing here allocates device resources, finalizes names, or emits IR.
//! Construction records intent; `Program::resolve` (with an optional
//! placer) turns the recorded design into a `ResolvedDesign` or fails
//! atomically with a diagnostic.

use crate::device::Tile;
use crate::placement::{place_slot, PlaceError, Placement};
use crate::tap::TensorAccessPattern;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::fmt;
use std::rc::{Rc, Weak};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

static NEXT_UID: AtomicU64 = AtomicU64::new(0);

fn fresh_uid() -> u64 {
    NEXT_UID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DataflowError {
    #[error("object fifo depth must be at least 1")]
    InvalidDepth,
    #[error("expected a {expected} handle but got a {got} handle")]
    RoleMismatch { expected: Role, got: Role },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pattern selects {selected} elements, not a positive multiple of the {object} object elements")]
    NonMultiple { selected: usize, object: usize },
    #[error("cannot split/join {elems} elements into {parts} equal parts")]
    NonDivisible { elems: usize, parts: usize },
    #[error("link stages require a mem-capable placement, got {0}")]
    NotMemCapable(String),
    #[error(
        "windowed bindings need 1 <= release <= acquire, got acquire={acquire} release={release}"
    )]
    InvalidWindow { acquire: usize, release: usize },
    #[error(transparent)]
    Place(#[from] PlaceError),
}

/// Element type of objects and host buffers. Values are simulated in
/// 64-bit integers; the scalar type fixes the binary encoding and the
/// per-element byte cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scalar {
    I8,
    I16,
    #[default]
    I32,
    I64,
}

impl Scalar {
    pub fn bytes(self) -> usize {
        match self {
            Scalar::I8 => 1,
            Scalar::I16 => 2,
            Scalar::I32 => 4,
            Scalar::I64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scalar::I8 => "i8",
            Scalar::I16 => "i16",
            Scalar::I32 => "i32",
            Scalar::I64 => "i64",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "i8" => Some(Scalar::I8),
            "i16" => Some(Scalar::I16),
            "i32" => Some(Scalar::I32),
            "i64" => Some(Scalar::I64),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scalar type plus shape; used both for fifo objects and host buffers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectType {
    pub elem: Scalar,
    pub shape: Vec<usize>,
}

impl ObjectType {
    pub fn new(elem: Scalar, shape: &[usize]) -> Self {
        Self {
            elem,
            shape: shape.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self) -> usize {
        self.len() * self.elem.bytes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Producer,
    Consumer,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Producer => "producer",
            Role::Consumer => "consumer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Forward,
    Split,
    Join,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Forward => "forward",
            LinkKind::Split => "split",
            LinkKind::Join => "join",
        })
    }
}

/// A link stage declaration: a mem-tile hop that forwards, splits, or
/// joins a stream. `parent` is always the whole-object side; the children
/// carry the parts (a forward has exactly one child of equal size).
pub(crate) struct LinkDecl {
    pub(crate) uid: u64,
    pub(crate) kind: LinkKind,
    /// Consumer handle on the parent fifo for forward/split; producer
    /// handle for join.
    pub(crate) parent: ObjectFifoHandle,
    pub(crate) placement: RefCell<Placement>,
    /// Child fifos in slot order; weak so dropped (never-consumed)
    /// children are detectable at resolution.
    pub(crate) children: RefCell<Vec<Weak<RefCell<FifoInner>>>>,
}

pub(crate) struct FifoInner {
    pub(crate) uid: u64,
    pub(crate) obj_type: ObjectType,
    pub(crate) depth: usize,
    pub(crate) name: Option<String>,
    pub(crate) consumers_minted: usize,
    /// Set when this fifo is the child of a link stage.
    pub(crate) origin: Option<(Rc<LinkDecl>, usize)>,
}

/// A typed circular buffer connecting one producer endpoint to one or more
/// consumer endpoints. Cheap to clone; clones refer to the same fifo.
#[derive(Clone)]
pub struct ObjectFifo {
    pub(crate) inner: Rc<RefCell<FifoInner>>,
}

impl fmt::Debug for ObjectFifo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("ObjectFifo")
            .field("uid", &inner.uid)
            .field("obj_type", &inner.obj_type)
            .field("depth", &inner.depth)
            .field("name", &inner.name)
            .finish()
    }
}

impl ObjectFifo {
    /// A fifo with the default depth of 2 (ping-pong buffering) and an
    /// auto-generated name assigned at resolution.
    pub fn new(obj_type: ObjectType) -> Self {
        Self::with_depth(obj_type, 2).expect("default depth is valid")
    }

    pub fn with_depth(obj_type: ObjectType, depth: usize) -> Result<Self, DataflowError> {
        if depth == 0 {
            return Err(DataflowError::InvalidDepth);
        }
        Ok(Self {
            inner: Rc::new(RefCell::new(FifoInner {
                uid: fresh_uid(),
                obj_type,
                depth,
                name: None,
                consumers_minted: 0,
                origin: None,
            })),
        })
    }

    /// Sets an explicit name instead of the auto-generated `of<k>`.
    /// Uniqueness is enforced at resolution.
    pub fn with_name(self, name: impl Into<String>) -> Self {
        self.inner.borrow_mut().name = Some(name.into());
        self
    }

    pub fn obj_type(&self) -> ObjectType {
        self.inner.borrow().obj_type.clone()
    }

    pub fn depth(&self) -> usize {
        self.inner.borrow().depth
    }

    pub fn name(&self) -> Option<String> {
        self.inner.borrow().name.clone()
    }

    pub(crate) fn uid(&self) -> u64 {
        self.inner.borrow().uid
    }

    /// The producer handle. Every call returns the same handle: a fifo has
    /// exactly one producer.
    pub fn prod(&self) -> ObjectFifoHandle {
        ObjectFifoHandle {
            fifo: self.clone(),
            role: Role::Producer,
            index: 0,
        }
    }

    /// Mints a fresh consumer handle. Each call adds a consumer; more than
    /// one consumer expresses a broadcast.
    pub fn cons(&self) -> ObjectFifoHandle {
        let mut inner = self.inner.borrow_mut();
        let index = inner.consumers_minted;
        inner.consumers_minted += 1;
        drop(inner);
        ObjectFifoHandle {
            fifo: self.clone(),
            role: Role::Consumer,
            index,
        }
    }

    pub(crate) fn consumers_minted(&self) -> usize {
        self.inner.borrow().consumers_minted
    }
}

/// A role-carrying reference to a fifo. Producer handles compare equal to
/// each other; each consumer handle is distinct.
#[derive(Clone)]
pub struct ObjectFifoHandle {
    fifo: ObjectFifo,
    role: Role,
    index: usize,
}

impl PartialEq for ObjectFifoHandle {
    fn eq(&self, other: &Self) -> bool {
        self.fifo.uid() == other.fifo.uid() && self.role == other.role && self.index == other.index
    }
}

impl Eq for ObjectFifoHandle {}

impl fmt::Debug for ObjectFifoHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ObjectFifoHandle(fifo={}, {}:{})",
            self.fifo.uid(),
            self.role,
            self.index
        )
    }
}

impl ObjectFifoHandle {
    pub fn fifo(&self) -> &ObjectFifo {
        &self.fifo
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Consumer slot index; 0 for producer handles.
    pub fn index(&self) -> usize {
        self.index
    }

    fn expect_role(&self, expected: Role) -> Result<(), DataflowError> {
        if self.role != expected {
            return Err(DataflowError::RoleMismatch {
                expected,
                got: self.role,
            });
        }
        Ok(())
    }

    /// Stages this consumer's stream through a mem tile unchanged and
    /// returns the downstream fifo (L2 buffering).
    pub fn forward(&self) -> Result<ObjectFifo, DataflowError> {
        self.forward_on(Placement::AnyMemTile)
    }

    pub fn forward_on(&self, placement: Placement) -> Result<ObjectFifo, DataflowError> {
        self.expect_role(Role::Consumer)?;
        let children = link_children(self, LinkKind::Forward, 1, placement, |ty, _| ty.clone())?;
        Ok(children.into_iter().next().expect("forward has one child"))
    }

    /// Splits each object into `n` equal contiguous slices across a mem
    /// tile; child `i` carries slice `i`.
    pub fn split(&self, n: usize) -> Result<Vec<ObjectFifo>, DataflowError> {
        self.split_on(n, Placement::AnyMemTile)
    }

    pub fn split_on(
        &self,
        n: usize,
        placement: Placement,
    ) -> Result<Vec<ObjectFifo>, DataflowError> {
        self.expect_role(Role::Consumer)?;
        let ty = self.fifo.obj_type();
        check_divisible(&ty, n)?;
        link_children(self, LinkKind::Split, n, placement, part_type)
    }

    /// The inverse of split: returns `n` upstream fifos whose objects,
    /// concatenated in index order, form each object this producer handle
    /// publishes.
    pub fn join(&self, n: usize) -> Result<Vec<ObjectFifo>, DataflowError> {
        self.join_on(n, Placement::AnyMemTile)
    }

    pub fn join_on(
        &self,
        n: usize,
        placement: Placement,
    ) -> Result<Vec<ObjectFifo>, DataflowError> {
        self.expect_role(Role::Producer)?;
        let ty = self.fifo.obj_type();
        check_divisible(&ty, n)?;
        link_children(self, LinkKind::Join, n, placement, part_type)
    }
}

fn check_divisible(ty: &ObjectType, n: usize) -> Result<(), DataflowError> {
    if n == 0 || !ty.len().is_multiple_of(n) {
        return Err(DataflowError::NonDivisible {
            elems: ty.len(),
            parts: n,
        });
    }
    Ok(())
}

/// Child object type of a split/join part: sliced along the leading
/// dimension when it divides evenly, flattened otherwise.
fn part_type(ty: &ObjectType, n: usize) -> ObjectType {
    if ty.shape[0].is_multiple_of(n) {
        let mut shape = ty.shape.clone();
        shape[0] /= n;
        ObjectType::new(ty.elem, &shape)
    } else {
        ObjectType::new(ty.elem, &[ty.len() / n])
    }
}

fn link_children(
    parent: &ObjectFifoHandle,
    kind: LinkKind,
    n: usize,
    placement: Placement,
    child_type: impl Fn(&ObjectType, usize) -> ObjectType,
) -> Result<Vec<ObjectFifo>, DataflowError> {
    if !placement.admits(crate::device::TileKind::Mem) {
        return Err(DataflowError::NotMemCapable(placement.to_string()));
    }
    let parent_ty = parent.fifo.obj_type();
    let depth = parent.fifo.depth();
    let link = Rc::new(LinkDecl {
        uid: fresh_uid(),
        kind,
        parent: parent.clone(),
        placement: RefCell::new(placement),
        children: RefCell::new(Vec::new()),
    });
    let mut children = Vec::with_capacity(n);
    for slot in 0..n {
        let child = ObjectFifo {
            inner: Rc::new(RefCell::new(FifoInner {
                uid: fresh_uid(),
                obj_type: child_type(&parent_ty, n),
                depth,
                name: None,
                consumers_minted: 0,
                origin: Some((Rc::clone(&link), slot)),
            })),
        };
        link.children.borrow_mut().push(Rc::downgrade(&child.inner));
        children.push(child);
    }
    Ok(children)
}

/// One argument binding of a worker: a fifo handle with per-iteration
/// acquire/release counts, or a scalar parameter.
#[derive(Clone, Debug)]
pub enum WorkerArg {
    Fifo {
        handle: ObjectFifoHandle,
        acquire: usize,
        release: usize,
    },
    Scalar(i64),
}

impl WorkerArg {
    /// Binds a handle with the default window of one object per iteration.
    pub fn fifo(handle: ObjectFifoHandle) -> Self {
        WorkerArg::Fifo {
            handle,
            acquire: 1,
            release: 1,
        }
    }

    /// Binds a handle with a sliding window: each iteration tops the held
    /// set up to `acquire` objects and releases the `release` oldest.
    pub fn windowed(
        handle: ObjectFifoHandle,
        acquire: usize,
        release: usize,
    ) -> Result<Self, DataflowError> {
        if release == 0 || release > acquire {
            return Err(DataflowError::InvalidWindow { acquire, release });
        }
        Ok(WorkerArg::Fifo {
            handle,
            acquire,
            release,
        })
    }

    pub fn scalar(value: i64) -> Self {
        WorkerArg::Scalar(value)
    }
}

impl From<ObjectFifoHandle> for WorkerArg {
    fn from(handle: ObjectFifoHandle) -> Self {
        WorkerArg::fifo(handle)
    }
}

impl From<i64> for WorkerArg {
    fn from(value: i64) -> Self {
        WorkerArg::Scalar(value)
    }
}

pub(crate) struct WorkerInner {
    pub(crate) uid: u64,
    pub(crate) kernel: String,
    pub(crate) args: Vec<WorkerArg>,
    pub(crate) placement: Placement,
}

/// A compute task: a kernel routine plus its argument bindings, placed on
/// a compute tile at resolution. Mirrors a thread: the routine runs in an
/// implicit loop, synchronized purely by its fifo windows.
#[derive(Clone)]
pub struct Worker {
    pub(crate) inner: Rc<RefCell<WorkerInner>>,
}

impl fmt::Debug for Worker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("Worker")
            .field("uid", &inner.uid)
            .field("kernel", &inner.kernel)
            .field("placement", &inner.placement)
            .finish()
    }
}

impl Worker {
    pub fn new(kernel: impl Into<String>, args: impl IntoIterator<Item = WorkerArg>) -> Self {
        Self {
            inner: Rc::new(RefCell::new(WorkerInner {
                uid: fresh_uid(),
                kernel: kernel.into(),
                args: args.into_iter().collect(),
                placement: Placement::Unset,
            })),
        }
    }

    pub fn kernel(&self) -> String {
        self.inner.borrow().kernel.clone()
    }

    pub fn placement(&self) -> Placement {
        self.inner.borrow().placement
    }

    /// Fixes this worker to a compute tile.
    pub fn place(&self, tile: Tile) -> Result<(), PlaceError> {
        let mut inner = self.inner.borrow_mut();
        let label = format!("worker(kernel={})", inner.kernel);
        place_slot(
            &mut inner.placement,
            tile,
            crate::device::TileKind::Compute,
            &label,
        )
    }

    pub(crate) fn uid(&self) -> u64 {
        self.inner.borrow().uid
    }
}

/// Index of a declared host buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BufferId(pub usize);

impl fmt::Display for BufferId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "buf{}", self.0)
    }
}

/// Index of a runtime operation, in sequence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpId(pub usize);

pub enum RuntimeOp {
    Start {
        worker: Worker,
    },
    Fill {
        handle: ObjectFifoHandle,
        buffer: BufferId,
        tap: TensorAccessPattern,
        wait: bool,
        placement: Placement,
    },
    Drain {
        handle: ObjectFifoHandle,
        buffer: BufferId,
        tap: TensorAccessPattern,
        wait: bool,
        placement: Placement,
    },
    Inline {
        text: String,
    },
}

/// The ordered host-side sequence: buffer declarations plus start, fill,
/// drain, and inline operations. Fills stream a buffer into a fifo through
/// a shim tile in tap enumeration order; drains do the reverse.
#[derive(Default)]
pub struct Runtime {
    pub(crate) buffers: Vec<ObjectType>,
    pub(crate) ops: Vec<RuntimeOp>,
}

impl Runtime {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_buffer(&mut self, elem: Scalar, shape: &[usize]) -> BufferId {
        self.buffers.push(ObjectType::new(elem, shape));
        BufferId(self.buffers.len() - 1)
    }

    pub fn buffer_type(&self, id: BufferId) -> Option<&ObjectType> {
        self.buffers.get(id.0)
    }

    /// Marks a worker for execution.
    pub fn start(&mut self, worker: &Worker) -> OpId {
        self.ops.push(RuntimeOp::Start {
            worker: worker.clone(),
        });
        OpId(self.ops.len() - 1)
    }

    /// Streams `buffer` into the fifo behind the producer handle, in the
    /// tap's enumeration order.
    pub fn fill(
        &mut self,
        handle: &ObjectFifoHandle,
        buffer: BufferId,
        tap: TensorAccessPattern,
        wait: bool,
    ) -> Result<OpId, DataflowError> {
        self.transfer_op(handle, Role::Producer, buffer, tap, wait)
    }

    /// Collects the fifo's stream behind the consumer handle into
    /// `buffer`, scattering elements in the tap's enumeration order.
    pub fn drain(
        &mut self,
        handle: &ObjectFifoHandle,
        buffer: BufferId,
        tap: TensorAccessPattern,
        wait: bool,
    ) -> Result<OpId, DataflowError> {
        self.transfer_op(handle, Role::Consumer, buffer, tap, wait)
    }

    fn transfer_op(
        &mut self,
        handle: &ObjectFifoHandle,
        role: Role,
        buffer: BufferId,
        tap: TensorAccessPattern,
        wait: bool,
    ) -> Result<OpId, DataflowError> {
        if handle.role() != role {
            return Err(DataflowError::RoleMismatch {
                expected: role,
                got: handle.role(),
            });
        }
        let buf_ty = self.buffers.get(buffer.0).ok_or_else(|| {
            DataflowError::ShapeMismatch(format!("buffer {buffer} is not declared"))
        })?;
        if tap.tensor_dims() != buf_ty.shape.as_slice() {
            return Err(DataflowError::ShapeMismatch(format!(
                "tap dims {:?} do not match buffer shape {:?}",
                tap.tensor_dims(),
                buf_ty.shape
            )));
        }
        let obj_ty = handle.fifo().obj_type();
        if obj_ty.elem != buf_ty.elem {
            return Err(DataflowError::ShapeMismatch(format!(
                "buffer element type {} does not match fifo element type {}",
                buf_ty.elem, obj_ty.elem
            )));
        }
        let selected = tap.total_iterations();
        if selected == 0 || !selected.is_multiple_of(obj_ty.len()) {
            return Err(DataflowError::NonMultiple {
                selected,
                object: obj_ty.len(),
            });
        }
        let op = match role {
            Role::Producer => RuntimeOp::Fill {
                handle: handle.clone(),
                buffer,
                tap,
                wait,
                placement: Placement::AnyShim,
            },
            Role::Consumer => RuntimeOp::Drain {
                handle: handle.clone(),
                buffer,
                tap,
                wait,
                placement: Placement::AnyShim,
            },
        };
        self.ops.push(op);
        Ok(OpId(self.ops.len() - 1))
    }

    /// Inserts opaque IR text into the sequence. The text is carried
    /// verbatim into emission; the simulator refuses designs containing
    /// inline ops.
    pub fn inline_ops(&mut self, text: impl Into<String>) -> OpId {
        self.ops.push(RuntimeOp::Inline { text: text.into() });
        OpId(self.ops.len() - 1)
    }

    /// Fixes a fill/drain shim endpoint to a tile.
    pub fn place_op(&mut self, op: OpId, tile: Tile) -> Result<(), PlaceError> {
        let label = format!("runtime op #{}", op.0);
        match self.ops.get_mut(op.0) {
            Some(RuntimeOp::Fill { placement, .. }) | Some(RuntimeOp::Drain { placement, .. }) => {
                place_slot(placement, tile, crate::device::TileKind::Shim, &label)
            }
            _ => Err(PlaceError::KindMismatch {
                component: label,
                required: crate::device::TileKind::Shim,
                got: tile.kind,
                tile,
            }),
        }
    }

    pub fn ops(&self) -> &[RuntimeOp] {
        &self.ops
    }
}

/// A design: a runtime applied to a device. Workers and fifos are
/// collected transitively from the runtime operations at resolve time.
pub struct Program {
    pub(crate) device: crate::device::Device,
    pub(crate) runtime: Runtime,
}

impl Program {
    pub fn new(device: crate::device::Device, runtime: Runtime) -> Self {
        Self { device, runtime }
    }

    pub fn device(&self) -> &crate::device::Device {
        &self.device
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Device;

    fn ty8() -> ObjectType {
        ObjectType::new(Scalar::I32, &[8])
    }

    #[test]
    fn depth_rules() {
        assert!(ObjectFifo::with_depth(ty8(), 1).is_ok());
        assert_eq!(
            ObjectFifo::with_depth(ty8(), 0).unwrap_err(),
            DataflowError::InvalidDepth
        );
        assert_eq!(ObjectFifo::new(ty8()).depth(), 2);
    }

    #[test]
    fn prod_is_idempotent_cons_mints() {
        let fifo = ObjectFifo::new(ty8());
        assert_eq!(fifo.prod(), fifo.prod());
        let c0 = fifo.cons();
        let c1 = fifo.cons();
        let c2 = fifo.cons();
        assert_ne!(c0, c1);
        assert_eq!(c0.index(), 0);
        assert_eq!(c1.index(), 1);
        assert_eq!(c2.index(), 2);
        assert_eq!(fifo.consumers_minted(), 3);
    }

    #[test]
    fn link_role_checks() {
        let fifo = ObjectFifo::new(ty8());
        assert!(matches!(
            fifo.prod().forward(),
            Err(DataflowError::RoleMismatch { .. })
        ));
        assert!(matches!(
            fifo.prod().split(2),
            Err(DataflowError::RoleMismatch { .. })
        ));
        assert!(matches!(
            fifo.cons().join(2),
            Err(DataflowError::RoleMismatch { .. })
        ));
    }

    #[test]
    fn split_div_rules_and_part_shapes() {
        let fifo = ObjectFifo::new(ObjectType::new(Scalar::I32, &[16]));
        let parts = fifo.cons().split(2).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].obj_type().shape, vec![8]);
        assert!(matches!(
            fifo.cons().split(3),
            Err(DataflowError::NonDivisible {
                elems: 16,
                parts: 3
            })
        ));

        let grid = ObjectFifo::new(ObjectType::new(Scalar::I32, &[4, 6]));
        let parts = grid.cons().split(2).unwrap();
        assert_eq!(parts[0].obj_type().shape, vec![2, 6]);
        let thirds = grid.cons().split(3).unwrap();
        assert_eq!(thirds[0].obj_type().shape, vec![8]);
    }

    #[test]
    fn link_placement_must_be_mem_capable() {
        let dev = Device::npu1_col1();
        let fifo = ObjectFifo::new(ty8());
        let compute = dev.tile_at(0, 2).unwrap();
        assert!(matches!(
            fifo.cons().forward_on(Placement::Fixed(compute)),
            Err(DataflowError::NotMemCapable(_))
        ));
        assert!(fifo
            .cons()
            .forward_on(Placement::Fixed(dev.tile_at(0, 1).unwrap()))
            .is_ok());
    }

    #[test]
    fn runtime_op_validation() {
        let mut rt = Runtime::new();
        let buf = rt.declare_buffer(Scalar::I32, &[4, 8]);
        let fifo = ObjectFifo::new(ty8());
        let tap = TensorAccessPattern::new(&[4, 8], 0, &[4, 8], &[8, 1]).unwrap();

        // fill wants a producer handle
        assert!(matches!(
            rt.fill(&fifo.cons(), buf, tap.clone(), false),
            Err(DataflowError::RoleMismatch { .. })
        ));
        // drain wants a consumer handle
        assert!(matches!(
            rt.drain(&fifo.prod(), buf, tap.clone(), true),
            Err(DataflowError::RoleMismatch { .. })
        ));
        // dims must match the buffer shape
        let odd = TensorAccessPattern::new(&[8, 4], 0, &[8, 4], &[4, 1]).unwrap();
        assert!(matches!(
            rt.fill(&fifo.prod(), buf, odd, false),
            Err(DataflowError::ShapeMismatch(_))
        ));
        // element budget must be a multiple of the object size
        let partial = TensorAccessPattern::new(&[4, 8], 0, &[12], &[1]).unwrap();
        assert!(matches!(
            rt.fill(&fifo.prod(), buf, partial, false),
            Err(DataflowError::NonMultiple {
                selected: 12,
                object: 8
            })
        ));
        // and a valid op lands in the sequence
        rt.fill(&fifo.prod(), buf, tap, false).unwrap();
        assert_eq!(rt.ops().len(), 1);
    }

    #[test]
    fn windowed_binding_validation() {
        let fifo = ObjectFifo::new(ty8());
        assert!(WorkerArg::windowed(fifo.cons(), 2, 1).is_ok());
        assert!(matches!(
            WorkerArg::windowed(fifo.cons(), 2, 3),
            Err(DataflowError::InvalidWindow { .. })
        ));
        assert!(matches!(
            WorkerArg::windowed(fifo.cons(), 2, 0),
            Err(DataflowError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn worker_placement_is_compute_only() {
        let dev = Device::npu1_col1();
        let fifo = ObjectFifo::new(ty8());
        let worker = Worker::new("passthrough", [fifo.cons().into(), fifo.prod().into()]);
        assert!(worker.place(dev.tile_at(0, 0).unwrap()).is_err());
        worker.place(dev.tile_at(0, 2).unwrap()).unwrap();
        // conflicting re-place
        assert!(worker.place(dev.tile_at(0, 3).unwrap()).is_err());
        // idempotent re-place
        worker.place(dev.tile_at(0, 2).unwrap()).unwrap();
    }
}
