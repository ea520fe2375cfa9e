//! Deterministic functional simulator for resolved designs.
//!
//! Execution is modeled as a set of actors stepped by a cooperative
//! scheduler: one actor per worker, one per fill/drain operation, and one
//! per link stage. A step moves at most one object (or runs one worker
//! iteration) and blocks on fifo synchronization exactly where the
//! hardware would: producers block on a full fifo, consumers block until
//! enough objects are published, broadcast objects retire only once every
//! consumer released them.
//!
//! Functional outputs never depend on the schedule; the scheduler can run
//! fixed round-robin or a seeded random permutation per round, and both
//! must produce identical buffers. Runs complete when every fill and
//! drain has moved its full element budget; if no actor can make progress
//! before that, the run reports a deadlock with the blocked actor set.
//!
//! Fill actors stream buffer elements in tap enumeration order, packing
//! them into objects; drain actors scatter object elements back into the
//! buffer the same way. Multiple fills (or drains) on one fifo endpoint
//! share a DMA channel and therefore execute serialized, in sequence
//! order. Drain-target buffers are zero-initialized before the run.

use crate::dataflow::LinkKind;
use crate::emitter::{Binding, OpRecord, ResolvedDesign};
use crate::kernel::{KernelError, KernelFn, KernelIo, KernelRegistry};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("buffer shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(
        "runtime op #{op} is an inline-ops escape hatch; the simulator cannot execute opaque IR"
    )]
    InlineOps { op: usize },
    #[error("kernel failure in {actor}: {source}")]
    Kernel { actor: String, source: KernelError },
    #[error("design references kernel `{0}` which is not in the registry")]
    MissingKernel(String),
    #[error("no completion after {rounds} scheduler rounds; raise SimOptions::max_rounds if the design is genuinely long-running")]
    RoundLimit { rounds: u64 },
    #[error("inconsistent design: {0}")]
    BadDesign(String),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::ShapeMismatch(_) => "shape_mismatch",
            SimError::InlineOps { .. } => "inline_ops",
            SimError::Kernel { .. } => "kernel_error",
            SimError::MissingKernel(_) => "missing_kernel",
            SimError::RoundLimit { .. } => "round_limit",
            SimError::BadDesign(_) => "bad_design",
        }
    }
}

/// Actor polling order per scheduler round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    RoundRobin,
    /// Seeded random permutation per round. Outputs are unaffected;
    /// only step/round counts may differ.
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub schedule: Schedule,
    pub max_rounds: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            schedule: Schedule::RoundRobin,
            max_rounds: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Deadlock { blocked: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct FifoTransfer {
    pub fifo: String,
    pub objects: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub status: RunStatus,
    /// Final contents of every declared buffer, by buffer index.
    pub buffers: Vec<Vec<i64>>,
    /// Objects published per fifo, in fifo record order.
    pub fifo_transfers: Vec<FifoTransfer>,
    /// Actor steps that made progress.
    pub steps: u64,
    /// Scheduler rounds executed.
    pub rounds: u64,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

// ---------------------------------------------------------------------
// Fifo runtime state
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
struct ConsCursor {
    released: u64,
    acquired: u64,
}

/// Circular-buffer state shared by one producer and N consumers.
///
/// Objects carry absolute indices. `queue` holds published objects not yet
/// released by every consumer, starting at index `base`. Producer-staged
/// (acquired but unpublished) objects count against the depth.
#[derive(Debug)]
struct FifoState {
    name: String,
    obj_len: usize,
    depth: usize,
    queue: VecDeque<Vec<i64>>,
    base: u64,
    staged: VecDeque<Vec<i64>>,
    published: u64,
    cons: Vec<ConsCursor>,
    produced_total: u64,
}

impl FifoState {
    fn new(name: String, obj_len: usize, depth: usize, consumers: usize) -> Self {
        Self {
            name,
            obj_len,
            depth,
            queue: VecDeque::new(),
            base: 0,
            staged: VecDeque::new(),
            published: 0,
            cons: vec![ConsCursor::default(); consumers],
            produced_total: 0,
        }
    }

    /// Tops the producer's staged set up to `k` objects. Acquire is
    /// absolute: holding `n` and asking for `n+1` stages exactly one more.
    fn prod_try_acquire(&mut self, k: usize) -> Result<bool, SimError> {
        if k > self.depth {
            return Err(SimError::BadDesign(format!(
                "producer acquire {k} exceeds depth {} of @{}",
                self.depth, self.name
            )));
        }
        while self.staged.len() < k {
            if self.staged.len() + self.queue.len() >= self.depth {
                return Ok(false);
            }
            self.staged.push_back(vec![0; self.obj_len]);
        }
        Ok(true)
    }

    /// Publishes the `m` oldest staged objects.
    fn prod_release(&mut self, m: usize) -> Result<(), SimError> {
        if m > self.staged.len() {
            return Err(SimError::BadDesign(format!(
                "producer release {m} exceeds {} held objects on @{}",
                self.staged.len(),
                self.name
            )));
        }
        for _ in 0..m {
            let obj = self.staged.pop_front().expect("checked length");
            self.queue.push_back(obj);
            self.published += 1;
            self.produced_total += 1;
        }
        Ok(())
    }

    #[cfg(test)]
    fn prod_held(&self) -> usize {
        self.staged.len()
    }

    /// Tops consumer `c` up to `k` held objects (sliding window: the
    /// previously held objects stay, only the difference is acquired).
    fn cons_try_acquire(&mut self, c: usize, k: usize) -> Result<bool, SimError> {
        if k > self.depth {
            return Err(SimError::BadDesign(format!(
                "consumer acquire {k} exceeds depth {} of @{}",
                self.depth, self.name
            )));
        }
        let cur = &mut self.cons[c];
        let want = cur.released + k as u64;
        if cur.acquired >= want {
            return Ok(true);
        }
        if self.published >= want {
            cur.acquired = want;
            return Ok(true);
        }
        Ok(false)
    }

    #[cfg(test)]
    fn cons_held(&self, c: usize) -> usize {
        (self.cons[c].acquired - self.cons[c].released) as usize
    }

    /// The `i`-th oldest object held by consumer `c`.
    fn cons_view(&self, c: usize, i: usize) -> &[i64] {
        let pos = self.cons[c].released + i as u64;
        &self.queue[(pos - self.base) as usize]
    }

    /// Releases the `m` oldest objects held by consumer `c` and retires
    /// fully released objects.
    fn cons_release(&mut self, c: usize, m: usize) -> Result<(), SimError> {
        let cur = &mut self.cons[c];
        if cur.released + m as u64 > cur.acquired {
            return Err(SimError::BadDesign(format!(
                "consumer release {m} exceeds held objects on @{}",
                self.name
            )));
        }
        cur.released += m as u64;
        while !self.queue.is_empty() && self.cons.iter().all(|c| c.released > self.base) {
            self.queue.pop_front();
            self.base += 1;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Actors
// ---------------------------------------------------------------------

#[derive(Clone)]
enum SimArg {
    Cons {
        fifo: usize,
        index: usize,
        acquire: usize,
        release: usize,
    },
    Prod {
        fifo: usize,
        acquire: usize,
        release: usize,
    },
    Scalar(i64),
}

enum ActorKind {
    Fill {
        fifo: usize,
        buffer: usize,
        offsets: Vec<usize>,
        pos: usize,
        pred: Option<usize>,
    },
    Drain {
        fifo: usize,
        cons: usize,
        buffer: usize,
        offsets: Vec<usize>,
        pos: usize,
        pred: Option<usize>,
    },
    Forward {
        parent: usize,
        parent_cons: usize,
        child: usize,
    },
    Split {
        parent: usize,
        parent_cons: usize,
        children: Vec<usize>,
    },
    Join {
        parent: usize,
        children: Vec<(usize, usize)>,
    },
    Worker {
        args: Vec<SimArg>,
        body: KernelFn,
        shapes: Vec<Option<Vec<usize>>>,
        /// Next argument position to satisfy in the current iteration.
        phase: usize,
    },
}

struct Actor {
    label: String,
    kind: ActorKind,
}

enum Step {
    Progress,
    Blocked(String),
    Done,
}

struct Sim {
    fifos: Vec<FifoState>,
    buffers: Vec<Vec<i64>>,
    actors: Vec<Actor>,
    /// Completion flags for transfer actors (index-aligned with actors).
    done: Vec<bool>,
}

fn fifo_index(design: &ResolvedDesign, name: &str) -> Result<usize, SimError> {
    design
        .fifos
        .iter()
        .position(|f| f.name == name)
        .ok_or_else(|| SimError::BadDesign(format!("unknown fifo @{name} in design")))
}

impl Sim {
    fn build(
        design: &ResolvedDesign,
        registry: &KernelRegistry,
        inputs: &[Vec<i64>],
    ) -> Result<Self, SimError> {
        if inputs.len() != design.buffers.len() {
            return Err(SimError::ShapeMismatch(format!(
                "design declares {} buffers, got {} inputs",
                design.buffers.len(),
                inputs.len()
            )));
        }
        let mut buffers = Vec::with_capacity(inputs.len());
        for (i, (input, decl)) in inputs.iter().zip(&design.buffers).enumerate() {
            if input.len() != decl.len() {
                return Err(SimError::ShapeMismatch(format!(
                    "buffer {i} has {} elements, expected {} for shape {:?}",
                    input.len(),
                    decl.len(),
                    decl.shape
                )));
            }
            buffers.push(input.clone());
        }

        for (op_idx, op) in design.ops.iter().enumerate() {
            match op {
                OpRecord::Inline { .. } => return Err(SimError::InlineOps { op: op_idx }),
                OpRecord::Drain { buffer, .. } => buffers[*buffer].fill(0),
                _ => {}
            }
        }

        let fifos: Vec<FifoState> = design
            .fifos
            .iter()
            .map(|f| FifoState::new(f.name.clone(), f.obj_len(), f.depth, f.consumers.len()))
            .collect();

        // Transfer actors first (in op order), then links, then workers;
        // any fixed order works since outputs are schedule independent.
        let mut actors: Vec<Actor> = Vec::new();
        let mut last_fill: std::collections::BTreeMap<usize, usize> = Default::default();
        let mut last_drain: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
        let check_budget = |op_idx: usize, fidx: usize, elems: usize| -> Result<(), SimError> {
            let obj_len = design.fifos[fidx].obj_len();
            if elems == 0 || !elems.is_multiple_of(obj_len) {
                return Err(SimError::BadDesign(format!(
                    "runtime op #{op_idx} moves {elems} elements, not a positive multiple of \
                     the {obj_len}-element objects of @{}",
                    design.fifos[fidx].name
                )));
            }
            Ok(())
        };
        for (op_idx, op) in design.ops.iter().enumerate() {
            match op {
                OpRecord::Fill {
                    fifo, buffer, tap, ..
                } => {
                    let fidx = fifo_index(design, fifo)?;
                    check_budget(op_idx, fidx, tap.total_iterations())?;
                    let pred = last_fill.insert(fidx, actors.len());
                    actors.push(Actor {
                        label: format!("fill#{op_idx}@{fifo}"),
                        kind: ActorKind::Fill {
                            fifo: fidx,
                            buffer: *buffer,
                            offsets: tap.offsets().collect(),
                            pos: 0,
                            pred,
                        },
                    });
                }
                OpRecord::Drain {
                    fifo,
                    cons_index,
                    buffer,
                    tap,
                    ..
                } => {
                    let fidx = fifo_index(design, fifo)?;
                    check_budget(op_idx, fidx, tap.total_iterations())?;
                    if *cons_index >= design.fifos[fidx].consumers.len() {
                        return Err(SimError::BadDesign(format!(
                            "runtime op #{op_idx} drains consumer {cons_index} of @{fifo}, \
                             which has {}",
                            design.fifos[fidx].consumers.len()
                        )));
                    }
                    let pred = last_drain.insert((fidx, *cons_index), actors.len());
                    actors.push(Actor {
                        label: format!("drain#{op_idx}@{fifo}"),
                        kind: ActorKind::Drain {
                            fifo: fidx,
                            cons: *cons_index,
                            buffer: *buffer,
                            offsets: tap.offsets().collect(),
                            pos: 0,
                            pred,
                        },
                    });
                }
                _ => {}
            }
        }

        for link in &design.links {
            let parent = fifo_index(design, &link.parent)?;
            let kind = match link.kind {
                LinkKind::Forward => ActorKind::Forward {
                    parent,
                    parent_cons: link.parent_cons.unwrap_or(0),
                    child: fifo_index(design, &link.children[0].0)?,
                },
                LinkKind::Split => ActorKind::Split {
                    parent,
                    parent_cons: link.parent_cons.unwrap_or(0),
                    children: link
                        .children
                        .iter()
                        .map(|(name, _)| fifo_index(design, name))
                        .collect::<Result<_, _>>()?,
                },
                LinkKind::Join => ActorKind::Join {
                    parent,
                    children: link
                        .children
                        .iter()
                        .map(|(name, cons)| {
                            Ok((
                                fifo_index(design, name)?,
                                cons.ok_or_else(|| {
                                    SimError::BadDesign(format!(
                                        "join {} lacks a consumer slot on @{name}",
                                        link.name
                                    ))
                                })?,
                            ))
                        })
                        .collect::<Result<Vec<_>, SimError>>()?,
                },
            };
            actors.push(Actor {
                label: link.name.clone(),
                kind,
            });
        }

        for worker in &design.workers {
            let def = registry
                .get(&worker.kernel)
                .ok_or_else(|| SimError::MissingKernel(worker.kernel.clone()))?;
            let mut args = Vec::new();
            let mut shapes = Vec::new();
            for binding in &worker.bindings {
                match binding {
                    Binding::Cons {
                        fifo,
                        index,
                        acquire,
                        release,
                    } => {
                        let fidx = fifo_index(design, fifo)?;
                        shapes.push(Some(design.fifos[fidx].shape.clone()));
                        args.push(SimArg::Cons {
                            fifo: fidx,
                            index: *index,
                            acquire: *acquire,
                            release: *release,
                        });
                    }
                    Binding::Prod {
                        fifo,
                        acquire,
                        release,
                    } => {
                        let fidx = fifo_index(design, fifo)?;
                        shapes.push(Some(design.fifos[fidx].shape.clone()));
                        args.push(SimArg::Prod {
                            fifo: fidx,
                            acquire: *acquire,
                            release: *release,
                        });
                    }
                    Binding::Scalar(v) => {
                        shapes.push(None);
                        args.push(SimArg::Scalar(*v));
                    }
                }
            }
            actors.push(Actor {
                label: worker.name.clone(),
                kind: ActorKind::Worker {
                    args,
                    body: def.body.clone(),
                    shapes,
                    phase: 0,
                },
            });
        }

        let done = vec![false; actors.len()];
        Ok(Self {
            fifos,
            buffers,
            actors,
            done,
        })
    }

    fn step(&mut self, idx: usize) -> Result<Step, SimError> {
        // Take the actor out to sidestep aliasing with fifo/buffer state.
        let label = self.actors[idx].label.clone();
        let placeholder = ActorKind::Fill {
            fifo: 0,
            buffer: 0,
            offsets: Vec::new(),
            pos: 0,
            pred: None,
        };
        let mut kind = std::mem::replace(&mut self.actors[idx].kind, placeholder);
        let result = self.step_kind(&label, &mut kind);
        self.actors[idx].kind = kind;
        if matches!(result, Ok(Step::Done)) {
            self.done[idx] = true;
        }
        result
    }

    fn step_kind(&mut self, label: &str, kind: &mut ActorKind) -> Result<Step, SimError> {
        match kind {
            ActorKind::Fill {
                fifo,
                buffer,
                offsets,
                pos,
                pred,
            } => {
                if *pos >= offsets.len() {
                    return Ok(Step::Done);
                }
                if let Some(p) = pred {
                    if !self.done[*p] {
                        return Ok(Step::Blocked(format!(
                            "waiting for {} to finish (shared channel)",
                            self.actors[*p].label
                        )));
                    }
                }
                let state = &mut self.fifos[*fifo];
                if !state.prod_try_acquire(1)? {
                    return Ok(Step::Blocked(format!("fifo @{} is full", state.name)));
                }
                let obj_len = state.obj_len;
                let src = &self.buffers[*buffer];
                let staged = state.staged.back_mut().expect("just acquired");
                for j in 0..obj_len {
                    staged[j] = src[offsets[*pos + j]];
                }
                state.prod_release(1)?;
                *pos += obj_len;
                Ok(Step::Progress)
            }
            ActorKind::Drain {
                fifo,
                cons,
                buffer,
                offsets,
                pos,
                pred,
            } => {
                if *pos >= offsets.len() {
                    return Ok(Step::Done);
                }
                if let Some(p) = pred {
                    if !self.done[*p] {
                        return Ok(Step::Blocked(format!(
                            "waiting for {} to finish (shared channel)",
                            self.actors[*p].label
                        )));
                    }
                }
                let state = &mut self.fifos[*fifo];
                if !state.cons_try_acquire(*cons, 1)? {
                    return Ok(Step::Blocked(format!("fifo @{} is empty", state.name)));
                }
                let obj_len = state.obj_len;
                let obj = state.cons_view(*cons, 0).to_vec();
                state.cons_release(*cons, 1)?;
                let dst = &mut self.buffers[*buffer];
                for (j, v) in obj.iter().enumerate() {
                    dst[offsets[*pos + j]] = *v;
                }
                *pos += obj_len;
                Ok(Step::Progress)
            }
            ActorKind::Forward {
                parent,
                parent_cons,
                child,
            } => {
                if !self.fifos[*parent].cons_try_acquire(*parent_cons, 1)? {
                    return Ok(Step::Blocked(format!(
                        "fifo @{} is empty",
                        self.fifos[*parent].name
                    )));
                }
                if !self.fifos[*child].prod_try_acquire(1)? {
                    return Ok(Step::Blocked(format!(
                        "fifo @{} is full",
                        self.fifos[*child].name
                    )));
                }
                let obj = self.fifos[*parent].cons_view(*parent_cons, 0).to_vec();
                self.fifos[*child]
                    .staged
                    .back_mut()
                    .expect("just acquired")
                    .copy_from_slice(&obj);
                self.fifos[*parent].cons_release(*parent_cons, 1)?;
                self.fifos[*child].prod_release(1)?;
                Ok(Step::Progress)
            }
            ActorKind::Split {
                parent,
                parent_cons,
                children,
            } => {
                if !self.fifos[*parent].cons_try_acquire(*parent_cons, 1)? {
                    return Ok(Step::Blocked(format!(
                        "fifo @{} is empty",
                        self.fifos[*parent].name
                    )));
                }
                for &child in children.iter() {
                    if !self.fifos[child].prod_try_acquire(1)? {
                        return Ok(Step::Blocked(format!(
                            "fifo @{} is full",
                            self.fifos[child].name
                        )));
                    }
                }
                let obj = self.fifos[*parent].cons_view(*parent_cons, 0).to_vec();
                let part = obj.len() / children.len();
                for (i, &child) in children.iter().enumerate() {
                    self.fifos[child]
                        .staged
                        .back_mut()
                        .expect("just acquired")
                        .copy_from_slice(&obj[i * part..(i + 1) * part]);
                    self.fifos[child].prod_release(1)?;
                }
                self.fifos[*parent].cons_release(*parent_cons, 1)?;
                Ok(Step::Progress)
            }
            ActorKind::Join { parent, children } => {
                for &(child, cons) in children.iter() {
                    if !self.fifos[child].cons_try_acquire(cons, 1)? {
                        return Ok(Step::Blocked(format!(
                            "fifo @{} is empty",
                            self.fifos[child].name
                        )));
                    }
                }
                if !self.fifos[*parent].prod_try_acquire(1)? {
                    return Ok(Step::Blocked(format!(
                        "fifo @{} is full",
                        self.fifos[*parent].name
                    )));
                }
                let mut joined = Vec::with_capacity(self.fifos[*parent].obj_len);
                for &(child, cons) in children.iter() {
                    joined.extend_from_slice(self.fifos[child].cons_view(cons, 0));
                }
                if joined.len() != self.fifos[*parent].obj_len {
                    return Err(SimError::BadDesign(format!(
                        "joined parts ({} elements) do not form a @{} object",
                        joined.len(),
                        self.fifos[*parent].name
                    )));
                }
                self.fifos[*parent]
                    .staged
                    .back_mut()
                    .expect("just acquired")
                    .copy_from_slice(&joined);
                for &(child, cons) in children.iter() {
                    self.fifos[child].cons_release(cons, 1)?;
                }
                self.fifos[*parent].prod_release(1)?;
                Ok(Step::Progress)
            }
            ActorKind::Worker {
                args,
                body,
                shapes,
                phase,
            } => {
                while *phase < args.len() {
                    match &args[*phase] {
                        SimArg::Cons {
                            fifo,
                            index,
                            acquire,
                            ..
                        } => {
                            if !self.fifos[*fifo].cons_try_acquire(*index, *acquire)? {
                                return Ok(Step::Blocked(format!(
                                    "fifo @{} has too few objects",
                                    self.fifos[*fifo].name
                                )));
                            }
                        }
                        SimArg::Prod { fifo, acquire, .. } => {
                            if !self.fifos[*fifo].prod_try_acquire(*acquire)? {
                                return Ok(Step::Blocked(format!(
                                    "fifo @{} is full",
                                    self.fifos[*fifo].name
                                )));
                            }
                        }
                        SimArg::Scalar(_) => {}
                    }
                    *phase += 1;
                }

                // All windows satisfied: run one iteration.
                let mut io = KernelIo::new();
                for (arg, shape) in args.iter().zip(shapes.iter()) {
                    match arg {
                        SimArg::Cons {
                            fifo,
                            index,
                            acquire,
                            ..
                        } => {
                            let state = &self.fifos[*fifo];
                            let objs = (0..*acquire)
                                .map(|i| state.cons_view(*index, i).to_vec())
                                .collect();
                            io.push_cons(objs, shape.clone().expect("fifo arg has shape"));
                        }
                        SimArg::Prod { fifo, acquire, .. } => {
                            let state = &self.fifos[*fifo];
                            let objs = (0..*acquire).map(|i| state.staged[i].clone()).collect();
                            io.push_prod(objs, shape.clone().expect("fifo arg has shape"));
                        }
                        SimArg::Scalar(v) => io.push_scalar(*v),
                    }
                }
                body(&mut io).map_err(|source| SimError::Kernel {
                    actor: label.to_string(),
                    source,
                })?;

                // Write back producer objects, then perform the releases.
                for (pos, arg) in args.iter().enumerate() {
                    if let SimArg::Prod { fifo, acquire, .. } = arg {
                        let written = io.take_prod(pos);
                        if written.len() != *acquire {
                            return Err(SimError::BadDesign(format!(
                                "kernel in {label} changed its held object count"
                            )));
                        }
                        let state = &mut self.fifos[*fifo];
                        for (i, obj) in written.into_iter().enumerate() {
                            if obj.len() != state.obj_len {
                                return Err(SimError::Kernel {
                                    actor: label.to_string(),
                                    source: KernelError::BadArg(format!(
                                        "kernel resized an object of @{} to {} elements",
                                        state.name,
                                        obj.len()
                                    )),
                                });
                            }
                            state.staged[i] = obj;
                        }
                    }
                }
                for arg in args.iter() {
                    match arg {
                        SimArg::Cons {
                            fifo,
                            index,
                            release,
                            ..
                        } => self.fifos[*fifo].cons_release(*index, *release)?,
                        SimArg::Prod { fifo, release, .. } => {
                            self.fifos[*fifo].prod_release(*release)?
                        }
                        SimArg::Scalar(_) => {}
                    }
                }
                *phase = 0;
                Ok(Step::Progress)
            }
        }
    }

    fn transfers_done(&self) -> bool {
        self.actors.iter().enumerate().all(|(i, a)| match a.kind {
            ActorKind::Fill { .. } | ActorKind::Drain { .. } => {
                self.done[i] || self.transfer_finished(i)
            }
            _ => true,
        })
    }

    fn transfer_finished(&self, idx: usize) -> bool {
        match &self.actors[idx].kind {
            ActorKind::Fill { offsets, pos, .. } | ActorKind::Drain { offsets, pos, .. } => {
                *pos >= offsets.len()
            }
            _ => true,
        }
    }
}

/// Runs a resolved design to completion with the default round-robin
/// schedule.
pub fn run(
    design: &ResolvedDesign,
    registry: &KernelRegistry,
    inputs: &[Vec<i64>],
) -> Result<RunReport, SimError> {
    run_with(design, registry, inputs, &SimOptions::default())
}

pub fn run_with(
    design: &ResolvedDesign,
    registry: &KernelRegistry,
    inputs: &[Vec<i64>],
    options: &SimOptions,
) -> Result<RunReport, SimError> {
    let mut sim = Sim::build(design, registry, inputs)?;
    let mut rng = match options.schedule {
        Schedule::RoundRobin => None,
        Schedule::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let base_order: Vec<usize> = (0..sim.actors.len()).collect();
    let mut steps: u64 = 0;
    let mut rounds: u64 = 0;
    let mut blocked_reasons: Vec<Option<String>> = vec![None; sim.actors.len()];

    let status = loop {
        rounds += 1;
        if rounds > options.max_rounds {
            return Err(SimError::RoundLimit {
                rounds: options.max_rounds,
            });
        }
        let mut order = base_order.clone();
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut progressed = false;
        for &idx in &order {
            match sim.step(idx)? {
                Step::Progress => {
                    progressed = true;
                    steps += 1;
                    blocked_reasons[idx] = None;
                }
                Step::Blocked(reason) => blocked_reasons[idx] = Some(reason),
                Step::Done => blocked_reasons[idx] = None,
            }
        }
        if sim.transfers_done() {
            break RunStatus::Completed;
        }
        if !progressed {
            let blocked = sim
                .actors
                .iter()
                .enumerate()
                .filter_map(|(i, a)| {
                    blocked_reasons[i]
                        .as_ref()
                        .map(|why| format!("{}: {why}", a.label))
                })
                .collect();
            break RunStatus::Deadlock { blocked };
        }
    };

    Ok(RunReport {
        status,
        buffers: sim.buffers,
        fifo_transfers: sim
            .fifos
            .iter()
            .map(|f| FifoTransfer {
                fifo: f.name.clone(),
                objects: f.produced_total,
            })
            .collect(),
        steps,
        rounds,
    })
}
