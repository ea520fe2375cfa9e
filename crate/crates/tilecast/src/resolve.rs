//! Resolution: turns a [`Program`] into a [`ResolvedDesign`].
//!
//! Resolution is where deferred decisions land, in order: workers, link
//! stages, and fifos are collected transitively from the runtime sequence
//! and given deterministic names; endpoint ownership is closed (every
//! minted consumer handle must be bound exactly once); kernels are checked
//! against the registry; the optional placer fills in placements; budgets
//! and DMA constraints are validated. Any failure aborts the whole
//! resolution.

use crate::dataflow::{
    LinkDecl, LinkKind, ObjectFifo, Program, Role, RuntimeOp, Worker, WorkerArg,
};
use crate::device::{check_dma_pattern, DmaViolation, Tile, TileKind};
use crate::emitter::{
    Binding, BufferRecord, Endpoint, FifoRecord, LinkRecord, OpRecord, Party, ResolvedDesign,
    WorkerRecord,
};
use crate::kernel::{ArgKind, KernelRegistry};
use crate::placement::{
    validate_placement, Direction, EndpointLoad, LoadModel, PlaceError, PlaceItem,
    PlacementProblem, Placer, Violation,
};
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("{component} is not placed; place it or pass a placer")]
    Unplaced { component: String },
    #[error("resource budgets exceeded: {}", format_violations(.violations))]
    ResourceExhausted { violations: Vec<Violation> },
    #[error("{op} at tile {tile} violates DMA constraints: {}", format_dma(.violations))]
    DmaViolation {
        op: String,
        tile: Tile,
        violations: Vec<DmaViolation>,
    },
    #[error("dangling endpoint: {0}")]
    DanglingEndpoint(String),
    #[error("endpoint conflict: {0}")]
    EndpointConflict(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("no drain in the runtime sequence has wait=true; the run would have no completion condition")]
    NoWaitDrain,
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),
    #[error("worker {worker}: {detail}")]
    BadBinding { worker: String, detail: String },
    #[error("{component} acquires {acquire} objects but fifo @{fifo} has depth {depth}")]
    ExceedsDepth {
        component: String,
        fifo: String,
        acquire: usize,
        depth: usize,
    },
    #[error(transparent)]
    Place(#[from] PlaceError),
}

impl ResolveError {
    /// Stable machine-readable code for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            ResolveError::Unplaced { .. } => "unplaced",
            ResolveError::ResourceExhausted { .. } => "resource_exhausted",
            ResolveError::DmaViolation { .. } => "dma_violation",
            ResolveError::DanglingEndpoint(_) => "dangling_endpoint",
            ResolveError::EndpointConflict(_) => "endpoint_conflict",
            ResolveError::DuplicateName(_) => "duplicate_name",
            ResolveError::InvalidName(_) => "invalid_name",
            ResolveError::NoWaitDrain => "no_wait_drain",
            ResolveError::UnknownKernel(_) => "unknown_kernel",
            ResolveError::BadBinding { .. } => "bad_binding",
            ResolveError::ExceedsDepth { .. } => "exceeds_depth",
            ResolveError::Place(_) => "placement",
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn format_dma(violations: &[DmaViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn ident_ok(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Components collected from the runtime walk, in discovery order.
#[derive(Default)]
struct Discovery {
    fifos: Vec<ObjectFifo>,
    fifo_names: Vec<String>,
    fifo_index: HashMap<u64, usize>,
    links: Vec<Rc<LinkDecl>>,
    link_names: Vec<String>,
    link_index: HashMap<u64, usize>,
    workers: Vec<Worker>,
    worker_names: Vec<String>,
    worker_index: HashMap<u64, usize>,
}

impl Discovery {
    fn visit_fifo(&mut self, fifo: &ObjectFifo) -> Result<usize, ResolveError> {
        if let Some(&idx) = self.fifo_index.get(&fifo.uid()) {
            return Ok(idx);
        }
        let origin = fifo.inner.borrow().origin.clone();
        if let Some((link, _slot)) = origin {
            self.visit_link(&link)?;
            return self.fifo_index.get(&fifo.uid()).copied().ok_or_else(|| {
                ResolveError::DanglingEndpoint(
                    "link child was not registered during link discovery".into(),
                )
            });
        }
        Ok(self.register_fifo(fifo))
    }

    fn register_fifo(&mut self, fifo: &ObjectFifo) -> usize {
        let idx = self.fifos.len();
        let name = fifo.name().unwrap_or_else(|| format!("of{idx}"));
        self.fifos.push(fifo.clone());
        self.fifo_names.push(name);
        self.fifo_index.insert(fifo.uid(), idx);
        idx
    }

    fn visit_link(&mut self, link: &Rc<LinkDecl>) -> Result<usize, ResolveError> {
        if let Some(&idx) = self.link_index.get(&link.uid) {
            return Ok(idx);
        }
        // Upstream side first so names read in dataflow order.
        self.visit_fifo(link.parent.fifo())?;
        let idx = self.links.len();
        self.links.push(Rc::clone(link));
        self.link_names.push(format!("link{idx}"));
        self.link_index.insert(link.uid, idx);
        for (slot, weak) in link.children.borrow().iter().enumerate() {
            let Some(child) = weak.upgrade() else {
                return Err(ResolveError::DanglingEndpoint(format!(
                    "child {slot} of {} stage link{idx} was dropped without being consumed",
                    link.kind
                )));
            };
            let child = ObjectFifo { inner: child };
            self.register_fifo(&child);
        }
        Ok(idx)
    }

    fn visit_worker(&mut self, worker: &Worker) -> Result<usize, ResolveError> {
        if let Some(&idx) = self.worker_index.get(&worker.uid()) {
            return Ok(idx);
        }
        let idx = self.workers.len();
        self.workers.push(worker.clone());
        self.worker_names.push(format!("worker{idx}"));
        self.worker_index.insert(worker.uid(), idx);
        let args = worker.inner.borrow().args.clone();
        for arg in &args {
            if let WorkerArg::Fifo { handle, .. } = arg {
                self.visit_fifo(handle.fifo())?;
            }
        }
        Ok(idx)
    }
}

/// A party claiming a fifo endpoint, by item identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Claimant {
    Worker(usize),
    /// Runtime op index. Several ops may share one endpoint; they
    /// serialize in sequence order.
    Op(usize),
    Link(usize),
}

#[derive(Default)]
struct FifoClaims {
    producers: Vec<Claimant>,
    consumers: BTreeMap<usize, Vec<Claimant>>,
    /// Extra consumer slot claimed structurally by a join stage.
    join_consumer: Option<usize>,
}

impl Program {
    /// Resolves with the built-in kernel registry.
    pub fn resolve(self, placer: Option<&dyn Placer>) -> Result<ResolvedDesign, ResolveError> {
        self.resolve_with(placer, &KernelRegistry::with_builtins())
    }

    /// Full resolution: discovery, endpoint closure, kernel checks,
    /// placement, budget validation, DMA checks, record construction.
    pub fn resolve_with(
        self,
        placer: Option<&dyn Placer>,
        registry: &KernelRegistry,
    ) -> Result<ResolvedDesign, ResolveError> {
        let Program { device, runtime } = self;

        // --- discovery -------------------------------------------------
        let mut disc = Discovery::default();
        for op in runtime.ops() {
            match op {
                RuntimeOp::Start { worker } => {
                    disc.visit_worker(worker)?;
                }
                RuntimeOp::Fill { handle, .. } | RuntimeOp::Drain { handle, .. } => {
                    disc.visit_fifo(handle.fifo())?;
                }
                RuntimeOp::Inline { .. } => {}
            }
        }

        for name in disc.fifo_names.iter().chain(&disc.worker_names) {
            if !ident_ok(name) {
                return Err(ResolveError::InvalidName(name.clone()));
            }
        }
        {
            let mut seen = BTreeMap::new();
            for name in disc
                .fifo_names
                .iter()
                .chain(&disc.link_names)
                .chain(&disc.worker_names)
            {
                if seen.insert(name.clone(), ()).is_some() {
                    return Err(ResolveError::DuplicateName(name.clone()));
                }
            }
        }

        // --- kernel signature checks ----------------------------------
        for (widx, worker) in disc.workers.iter().enumerate() {
            let wname = &disc.worker_names[widx];
            let inner = worker.inner.borrow();
            let def = registry
                .get(&inner.kernel)
                .ok_or_else(|| ResolveError::UnknownKernel(inner.kernel.clone()))?;
            if def.signature.len() != inner.args.len() {
                return Err(ResolveError::BadBinding {
                    worker: wname.clone(),
                    detail: format!(
                        "kernel `{}` takes {} arguments, got {}",
                        inner.kernel,
                        def.signature.len(),
                        inner.args.len()
                    ),
                });
            }
            for (pos, (arg, kind)) in inner.args.iter().zip(&def.signature).enumerate() {
                let ok = match (arg, kind) {
                    (WorkerArg::Fifo { handle, .. }, ArgKind::Cons) => {
                        handle.role() == Role::Consumer
                    }
                    (WorkerArg::Fifo { handle, .. }, ArgKind::Prod) => {
                        handle.role() == Role::Producer
                    }
                    (WorkerArg::Scalar(_), ArgKind::Scalar) => true,
                    _ => false,
                };
                if !ok {
                    return Err(ResolveError::BadBinding {
                        worker: wname.clone(),
                        detail: format!(
                            "argument {pos} must be a {kind} binding for kernel `{}`",
                            inner.kernel
                        ),
                    });
                }
                if let WorkerArg::Fifo {
                    handle, acquire, ..
                } = arg
                {
                    let depth = handle.fifo().depth();
                    if *acquire > depth {
                        let fidx = disc.fifo_index[&handle.fifo().uid()];
                        return Err(ResolveError::ExceedsDepth {
                            component: wname.clone(),
                            fifo: disc.fifo_names[fidx].clone(),
                            acquire: *acquire,
                            depth,
                        });
                    }
                }
            }
        }

        // --- endpoint closure ------------------------------------------
        let mut claims: Vec<FifoClaims> = (0..disc.fifos.len())
            .map(|_| FifoClaims::default())
            .collect();

        for (widx, worker) in disc.workers.iter().enumerate() {
            let args = worker.inner.borrow().args.clone();
            for arg in &args {
                if let WorkerArg::Fifo { handle, .. } = arg {
                    let fidx = disc.fifo_index[&handle.fifo().uid()];
                    match handle.role() {
                        Role::Producer => claims[fidx].producers.push(Claimant::Worker(widx)),
                        Role::Consumer => claims[fidx]
                            .consumers
                            .entry(handle.index())
                            .or_default()
                            .push(Claimant::Worker(widx)),
                    }
                }
            }
        }
        for (lidx, link) in disc.links.iter().enumerate() {
            let parent_idx = disc.fifo_index[&link.parent.fifo().uid()];
            match link.kind {
                LinkKind::Forward | LinkKind::Split => {
                    claims[parent_idx]
                        .consumers
                        .entry(link.parent.index())
                        .or_default()
                        .push(Claimant::Link(lidx));
                    for weak in link.children.borrow().iter() {
                        let child = ObjectFifo {
                            inner: weak.upgrade().expect("checked during discovery"),
                        };
                        let cidx = disc.fifo_index[&child.uid()];
                        claims[cidx].producers.push(Claimant::Link(lidx));
                    }
                }
                LinkKind::Join => {
                    claims[parent_idx].producers.push(Claimant::Link(lidx));
                    for weak in link.children.borrow().iter() {
                        let child = ObjectFifo {
                            inner: weak.upgrade().expect("checked during discovery"),
                        };
                        let cidx = disc.fifo_index[&child.uid()];
                        let slot = child.consumers_minted();
                        claims[cidx].join_consumer = Some(slot);
                        claims[cidx]
                            .consumers
                            .entry(slot)
                            .or_default()
                            .push(Claimant::Link(lidx));
                    }
                }
            }
        }
        let mut any_wait_drain = false;
        for (op_idx, op) in runtime.ops().iter().enumerate() {
            match op {
                RuntimeOp::Fill { handle, .. } => {
                    let fidx = disc.fifo_index[&handle.fifo().uid()];
                    claims[fidx].producers.push(Claimant::Op(op_idx));
                }
                RuntimeOp::Drain { handle, wait, .. } => {
                    let fidx = disc.fifo_index[&handle.fifo().uid()];
                    claims[fidx]
                        .consumers
                        .entry(handle.index())
                        .or_default()
                        .push(Claimant::Op(op_idx));
                    any_wait_drain |= *wait;
                }
                _ => {}
            }
        }
        if !any_wait_drain {
            return Err(ResolveError::NoWaitDrain);
        }

        // Exactly one party per endpoint, where a run of runtime ops on
        // the same endpoint counts as one party (they serialize).
        let merge = |claimants: &[Claimant]| -> Result<Claimant, String> {
            let mut non_ops = claimants
                .iter()
                .filter(|c| !matches!(c, Claimant::Op(_)))
                .collect::<Vec<_>>();
            non_ops.dedup();
            let first_op = claimants.iter().find(|c| matches!(c, Claimant::Op(_)));
            match (non_ops.len(), first_op) {
                (0, Some(op)) => Ok(*op),
                (1, None) => Ok(*non_ops[0]),
                (0, None) => Err("unclaimed".into()),
                _ => Err(format!("{} claimants", claimants.len())),
            }
        };

        struct ResolvedFifo {
            producer: Claimant,
            consumers: Vec<Claimant>, // by index
        }
        let mut resolved_fifos: Vec<ResolvedFifo> = Vec::new();
        for (fidx, claim) in claims.iter().enumerate() {
            let name = &disc.fifo_names[fidx];
            let producer = merge(&claim.producers).map_err(|why| match why.as_str() {
                "unclaimed" => ResolveError::DanglingEndpoint(format!(
                    "fifo @{name} has no producer (nothing fills it)"
                )),
                detail => ResolveError::EndpointConflict(format!(
                    "producer side of fifo @{name} has {detail}"
                )),
            })?;
            let expected =
                disc.fifos[fidx].consumers_minted() + usize::from(claim.join_consumer.is_some());
            if expected == 0 {
                return Err(ResolveError::DanglingEndpoint(format!(
                    "fifo @{name} has no consumers"
                )));
            }
            let mut consumers = Vec::with_capacity(expected);
            for index in 0..expected {
                let claimants = claim.consumers.get(&index).cloned().unwrap_or_default();
                let party = merge(&claimants).map_err(|why| match why.as_str() {
                    "unclaimed" => ResolveError::DanglingEndpoint(format!(
                        "consumer handle {index} of fifo @{name} was minted but never bound \
                         to a started worker, drain, or link"
                    )),
                    detail => ResolveError::EndpointConflict(format!(
                        "consumer handle {index} of fifo @{name} has {detail}"
                    )),
                })?;
                consumers.push(party);
            }
            resolved_fifos.push(ResolvedFifo {
                producer,
                consumers,
            });
        }

        // --- placement --------------------------------------------------
        // Item order: workers, links, then transfer ops in sequence order.
        let n_workers = disc.workers.len();
        let mut op_item: BTreeMap<usize, usize> = BTreeMap::new();
        let mut items: Vec<PlaceItem> = Vec::new();
        for (widx, worker) in disc.workers.iter().enumerate() {
            items.push(PlaceItem {
                label: disc.worker_names[widx].clone(),
                required: TileKind::Compute,
                placement: worker.inner.borrow().placement,
                fifos: Vec::new(),
            });
        }
        for (lidx, link) in disc.links.iter().enumerate() {
            items.push(PlaceItem {
                label: disc.link_names[lidx].clone(),
                required: TileKind::Mem,
                placement: *link.placement.borrow(),
                fifos: Vec::new(),
            });
        }
        for (op_idx, op) in runtime.ops().iter().enumerate() {
            let (label, placement) = match op {
                RuntimeOp::Fill {
                    handle, placement, ..
                } => (
                    format!(
                        "fill#{op_idx}@{}",
                        disc.fifo_names[disc.fifo_index[&handle.fifo().uid()]]
                    ),
                    *placement,
                ),
                RuntimeOp::Drain {
                    handle, placement, ..
                } => (
                    format!(
                        "drain#{op_idx}@{}",
                        disc.fifo_names[disc.fifo_index[&handle.fifo().uid()]]
                    ),
                    *placement,
                ),
                _ => continue,
            };
            op_item.insert(op_idx, items.len());
            items.push(PlaceItem {
                label,
                required: TileKind::Shim,
                placement,
                fifos: Vec::new(),
            });
        }

        let item_of = |c: Claimant| -> usize {
            match c {
                Claimant::Worker(w) => w,
                Claimant::Link(l) => n_workers + l,
                Claimant::Op(o) => op_item[&o],
            }
        };

        let mut fifo_endpoints: Vec<Vec<usize>> = Vec::with_capacity(resolved_fifos.len());
        for (fidx, rf) in resolved_fifos.iter().enumerate() {
            let mut endpoints = vec![item_of(rf.producer)];
            endpoints.extend(rf.consumers.iter().map(|&c| item_of(c)));
            // Runs of ops sharing an endpoint map to distinct items; keep
            // them all so peers see each other.
            for claim in claims[fidx]
                .producers
                .iter()
                .chain(claims[fidx].consumers.values().flatten())
            {
                let item = item_of(*claim);
                if !endpoints.contains(&item) {
                    endpoints.push(item);
                }
            }
            for &item in &endpoints {
                items[item].fifos.push(fidx);
            }
            fifo_endpoints.push(endpoints);
        }

        // Fixed placements must come from this grid.
        for item in &items {
            if let Some(tile) = item.placement.fixed() {
                if !device.owns(tile) {
                    return Err(PlaceError::ForeignTile { tile }.into());
                }
            }
        }

        let mut problem = PlacementProblem::new(&device, items, fifo_endpoints);
        if let Some(placer) = placer {
            placer.make_placement(&mut problem)?;
        }
        let items = problem.items();
        for item in items {
            if !item.placement.is_fixed() {
                return Err(ResolveError::Unplaced {
                    component: item.label.clone(),
                });
            }
        }
        let tile_of_item: Vec<Tile> = items
            .iter()
            .map(|it| it.placement.fixed().expect("checked above"))
            .collect();

        // Ops sharing an endpoint must agree on its tile.
        for (fidx, claim) in claims.iter().enumerate() {
            let check_group = |claimants: &[Claimant], side: &str| {
                let tiles: Vec<Tile> = claimants
                    .iter()
                    .filter(|c| matches!(c, Claimant::Op(_)))
                    .map(|&c| tile_of_item[item_of(c)])
                    .collect();
                if tiles.windows(2).any(|w| w[0] != w[1]) {
                    return Err(ResolveError::EndpointConflict(format!(
                        "runtime ops on the {side} side of fifo @{} are placed on different tiles",
                        disc.fifo_names[fidx]
                    )));
                }
                Ok(())
            };
            check_group(&claim.producers, "producer")?;
            for group in claim.consumers.values() {
                check_group(group, "consumer")?;
            }
        }

        // --- budget validation ------------------------------------------
        let mut load = LoadModel::default();
        for (widx, _) in disc.workers.iter().enumerate() {
            load.workers
                .push((disc.worker_names[widx].clone(), tile_of_item[widx]));
        }
        for (fidx, rf) in resolved_fifos.iter().enumerate() {
            let fifo = &disc.fifos[fidx];
            let bytes = fifo.obj_type().bytes() * fifo.depth();
            load.endpoints.push(EndpointLoad {
                fifo: disc.fifo_names[fidx].clone(),
                tile: tile_of_item[item_of(rf.producer)],
                direction: Direction::Out,
                bytes,
            });
            for &c in &rf.consumers {
                load.endpoints.push(EndpointLoad {
                    fifo: disc.fifo_names[fidx].clone(),
                    tile: tile_of_item[item_of(c)],
                    direction: Direction::In,
                    bytes,
                });
            }
        }
        let violations = validate_placement(&device, &load);
        if !violations.is_empty() {
            return Err(ResolveError::ResourceExhausted { violations });
        }

        // --- DMA constraint checks ---------------------------------------
        for (op_idx, op) in runtime.ops().iter().enumerate() {
            let tap = match op {
                RuntimeOp::Fill { tap, .. } | RuntimeOp::Drain { tap, .. } => tap,
                _ => continue,
            };
            let item = op_item[&op_idx];
            let tile = tile_of_item[item];
            let found = check_dma_pattern(tap, device.constraint(tile.kind));
            if !found.is_empty() {
                return Err(ResolveError::DmaViolation {
                    op: items[item].label.clone(),
                    tile,
                    violations: found,
                });
            }
        }

        // --- records -----------------------------------------------------
        let party_of = |c: Claimant| -> Party {
            match c {
                Claimant::Worker(w) => Party::Worker(disc.worker_names[w].clone()),
                Claimant::Link(l) => Party::Link(disc.link_names[l].clone()),
                Claimant::Op(o) => Party::RuntimeOp(o),
            }
        };
        let endpoint_of = |c: Claimant| -> Endpoint {
            Endpoint {
                tile: tile_of_item[item_of(c)],
                party: party_of(c),
            }
        };

        let mut fifo_records = Vec::new();
        for (fidx, rf) in resolved_fifos.iter().enumerate() {
            let fifo = &disc.fifos[fidx];
            let ty = fifo.obj_type();
            fifo_records.push(FifoRecord {
                name: disc.fifo_names[fidx].clone(),
                elem: ty.elem,
                shape: ty.shape.clone(),
                depth: fifo.depth(),
                producer: endpoint_of(rf.producer),
                consumers: rf.consumers.iter().map(|&c| endpoint_of(c)).collect(),
            });
        }
        fifo_records.sort_by(|a, b| a.name.cmp(&b.name));

        let mut link_records = Vec::new();
        for (lidx, link) in disc.links.iter().enumerate() {
            let parent_idx = disc.fifo_index[&link.parent.fifo().uid()];
            let children = link
                .children
                .borrow()
                .iter()
                .map(|weak| {
                    let child = ObjectFifo {
                        inner: weak.upgrade().expect("checked during discovery"),
                    };
                    let cidx = disc.fifo_index[&child.uid()];
                    let cons = match link.kind {
                        LinkKind::Join => claims[cidx].join_consumer,
                        _ => None,
                    };
                    (disc.fifo_names[cidx].clone(), cons)
                })
                .collect();
            link_records.push(LinkRecord {
                name: disc.link_names[lidx].clone(),
                kind: link.kind,
                tile: tile_of_item[n_workers + lidx],
                parent: disc.fifo_names[parent_idx].clone(),
                parent_cons: match link.kind {
                    LinkKind::Join => None,
                    _ => Some(link.parent.index()),
                },
                children,
            });
        }
        link_records.sort_by(|a, b| a.name.cmp(&b.name));

        let mut worker_records = Vec::new();
        for (widx, worker) in disc.workers.iter().enumerate() {
            let inner = worker.inner.borrow();
            let bindings = inner
                .args
                .iter()
                .map(|arg| match arg {
                    WorkerArg::Scalar(v) => Binding::Scalar(*v),
                    WorkerArg::Fifo {
                        handle,
                        acquire,
                        release,
                    } => {
                        let fifo = disc.fifo_names[disc.fifo_index[&handle.fifo().uid()]].clone();
                        match handle.role() {
                            Role::Producer => Binding::Prod {
                                fifo,
                                acquire: *acquire,
                                release: *release,
                            },
                            Role::Consumer => Binding::Cons {
                                fifo,
                                index: handle.index(),
                                acquire: *acquire,
                                release: *release,
                            },
                        }
                    }
                })
                .collect();
            worker_records.push(WorkerRecord {
                name: disc.worker_names[widx].clone(),
                tile: tile_of_item[widx],
                kernel: inner.kernel.clone(),
                bindings,
            });
        }
        worker_records.sort_by(|a, b| a.name.cmp(&b.name));

        let buffer_records = runtime
            .buffers
            .iter()
            .map(|ty| BufferRecord {
                elem: ty.elem,
                shape: ty.shape.clone(),
            })
            .collect();

        let op_records = runtime
            .ops()
            .iter()
            .map(|op| match op {
                RuntimeOp::Start { worker } => OpRecord::Start {
                    worker: disc.worker_names[disc.worker_index[&worker.uid()]].clone(),
                },
                RuntimeOp::Fill {
                    handle,
                    buffer,
                    tap,
                    wait,
                    ..
                } => OpRecord::Fill {
                    fifo: disc.fifo_names[disc.fifo_index[&handle.fifo().uid()]].clone(),
                    buffer: buffer.0,
                    tap: tap.clone(),
                    wait: *wait,
                },
                RuntimeOp::Drain {
                    handle,
                    buffer,
                    tap,
                    wait,
                    ..
                } => OpRecord::Drain {
                    fifo: disc.fifo_names[disc.fifo_index[&handle.fifo().uid()]].clone(),
                    cons_index: handle.index(),
                    buffer: buffer.0,
                    tap: tap.clone(),
                    wait: *wait,
                },
                RuntimeOp::Inline { text } => OpRecord::Inline { text: text.clone() },
            })
            .collect();

        Ok(ResolvedDesign {
            device: device.profile().clone(),
            buffers: buffer_records,
            fifos: fifo_records,
            links: link_records,
            workers: worker_records,
            ops: op_records,
        })
    }
}
