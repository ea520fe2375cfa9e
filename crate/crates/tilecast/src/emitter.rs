//! The resolved design record model and its deterministic textual form
//! (`.tir`).
//!
//! A `.tir` file is line-oriented: one record per line as
//! `keyword [@name] key=value ...`, with access patterns spelled
//! `tap off=O sizes=[..] strides=[..]` (tensor dims come from the
//! referenced buffer). Emission is canonical: records are sorted by
//! (kind, name), with runtime operations keeping their sequence order and
//! buffers their declaration order, so equal designs emit byte-identical text
//! regardless of construction order. [`parse`] inverts [`emit`] exactly.

use crate::dataflow::{LinkKind, Scalar};
use crate::device::{DeviceProfile, Tile, TileKind};
use crate::tap::TensorAccessPattern;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Who owns a fifo endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Party {
    Worker(String),
    /// Index into the runtime op list (a fill or drain).
    RuntimeOp(usize),
    Link(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub tile: Tile,
    pub party: Party,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FifoRecord {
    pub name: String,
    pub elem: Scalar,
    pub shape: Vec<usize>,
    pub depth: usize,
    pub producer: Endpoint,
    /// Consumer endpoints ordered by consumer index.
    pub consumers: Vec<Endpoint>,
}

impl FifoRecord {
    pub fn obj_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn obj_bytes(&self) -> usize {
        self.obj_len() * self.elem.bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRecord {
    pub name: String,
    pub kind: LinkKind,
    pub tile: Tile,
    /// Whole-object side fifo.
    pub parent: String,
    /// Consumer index the stage claims on the parent (forward/split only).
    pub parent_cons: Option<usize>,
    /// Part-side fifos in slot order; join stages record the consumer
    /// index they claim on each child.
    pub children: Vec<(String, Option<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Cons {
        fifo: String,
        index: usize,
        acquire: usize,
        release: usize,
    },
    Prod {
        fifo: String,
        acquire: usize,
        release: usize,
    },
    Scalar(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerRecord {
    pub name: String,
    pub tile: Tile,
    pub kernel: String,
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferRecord {
    pub elem: Scalar,
    pub shape: Vec<usize>,
}

impl BufferRecord {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpRecord {
    Start {
        worker: String,
    },
    Fill {
        fifo: String,
        buffer: usize,
        tap: TensorAccessPattern,
        wait: bool,
    },
    Drain {
        fifo: String,
        cons_index: usize,
        buffer: usize,
        tap: TensorAccessPattern,
        wait: bool,
    },
    Inline {
        text: String,
    },
}

/// A fully placed, validated design: the input to emission and to the
/// simulator. Immutable and self-contained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedDesign {
    pub device: DeviceProfile,
    pub buffers: Vec<BufferRecord>,
    /// Sorted by name.
    pub fifos: Vec<FifoRecord>,
    /// Sorted by name.
    pub links: Vec<LinkRecord>,
    /// Sorted by name.
    pub workers: Vec<WorkerRecord>,
    /// Runtime sequence order.
    pub ops: Vec<OpRecord>,
}

impl ResolvedDesign {
    pub fn fifo(&self, name: &str) -> Option<&FifoRecord> {
        self.fifos.iter().find(|f| f.name == name)
    }

    pub fn worker(&self, name: &str) -> Option<&WorkerRecord> {
        self.workers.iter().find(|w| w.name == name)
    }

    /// Every tile hosting a worker, link stage, or fifo endpoint.
    pub fn tiles_in_use(&self) -> BTreeSet<Tile> {
        let mut tiles = BTreeSet::new();
        for w in &self.workers {
            tiles.insert(w.tile);
        }
        for l in &self.links {
            tiles.insert(l.tile);
        }
        for f in &self.fifos {
            tiles.insert(f.producer.tile);
            for c in &f.consumers {
                tiles.insert(c.tile);
            }
        }
        tiles
    }
}

fn fmt_list<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::from("[");
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{item}");
    }
    out.push(']');
    out
}

fn fmt_tile(tile: Tile) -> String {
    format!("({},{})", tile.col, tile.row)
}

fn fmt_tap(tap: &TensorAccessPattern) -> String {
    format!(
        "tap off={} sizes={} strides={}",
        tap.offset(),
        fmt_list(tap.sizes().iter()),
        fmt_list(tap.strides().iter())
    )
}

fn fmt_binding(b: &Binding) -> String {
    let window = |acquire: usize, release: usize| {
        if acquire == 1 && release == 1 {
            String::new()
        } else {
            format!(":a{acquire}r{release}")
        }
    };
    match b {
        Binding::Cons {
            fifo,
            index,
            acquire,
            release,
        } => format!("cons:@{fifo}.{index}{}", window(*acquire, *release)),
        Binding::Prod {
            fifo,
            acquire,
            release,
        } => format!("prod:@{fifo}{}", window(*acquire, *release)),
        Binding::Scalar(v) => format!("lit:{v}"),
    }
}

/// Emits the canonical `.tir` text. Pure: equal designs yield identical
/// bytes.
pub fn emit(design: &ResolvedDesign) -> String {
    let mut out = String::from("tir v1\n");
    let p = &design.device;
    let _ = writeln!(
        out,
        "device @{} cols={} l1={} l2={} rows={}",
        p.name,
        p.n_cols,
        p.l1_bytes,
        p.l2_bytes,
        fmt_list(p.rows.iter())
    );
    for kind in [TileKind::Compute, TileKind::Mem, TileKind::Shim] {
        let c = p.channels.get(kind);
        let _ = writeln!(out, "channels kind={kind} in={} out={}", c.input, c.output);
    }
    for kind in [TileKind::Compute, TileKind::Mem, TileKind::Shim] {
        let d = p.dma.get(kind);
        let _ = writeln!(
            out,
            "dma kind={kind} dims={} size={} stride={}",
            d.max_dims, d.max_size_per_dim, d.max_stride
        );
    }
    for tile in design.tiles_in_use() {
        let _ = writeln!(
            out,
            "tile @t{}_{} col={} row={} kind={}",
            tile.col, tile.row, tile.col, tile.row, tile.kind
        );
    }
    for (i, buf) in design.buffers.iter().enumerate() {
        let _ = writeln!(
            out,
            "buffer @buf{i} elem={} shape={}",
            buf.elem,
            fmt_list(buf.shape.iter())
        );
    }

    let mut fifos: Vec<&FifoRecord> = design.fifos.iter().collect();
    fifos.sort_by(|a, b| a.name.cmp(&b.name));
    for f in fifos {
        let _ = writeln!(
            out,
            "fifo @{} elem={} shape={} depth={} prod={} cons={}",
            f.name,
            f.elem,
            fmt_list(f.shape.iter()),
            f.depth,
            fmt_tile(f.producer.tile),
            fmt_list(f.consumers.iter().map(|c| fmt_tile(c.tile)))
        );
    }

    let mut links: Vec<&LinkRecord> = design.links.iter().collect();
    links.sort_by(|a, b| a.name.cmp(&b.name));
    for l in links {
        let parent = match l.parent_cons {
            Some(idx) => format!("@{}.{idx}", l.parent),
            None => format!("@{}", l.parent),
        };
        let children = fmt_list(l.children.iter().map(|(name, cons)| match cons {
            Some(idx) => format!("@{name}.{idx}"),
            None => format!("@{name}"),
        }));
        let _ = writeln!(
            out,
            "link @{} kind={} tile={} parent={} children={}",
            l.name,
            l.kind,
            fmt_tile(l.tile),
            parent,
            children
        );
    }

    let mut workers: Vec<&WorkerRecord> = design.workers.iter().collect();
    workers.sort_by(|a, b| a.name.cmp(&b.name));
    for w in workers {
        let _ = writeln!(
            out,
            "worker @{} tile={} kernel={} args={}",
            w.name,
            fmt_tile(w.tile),
            w.kernel,
            fmt_list(w.bindings.iter().map(fmt_binding))
        );
    }

    for op in &design.ops {
        match op {
            OpRecord::Start { worker } => {
                let _ = writeln!(out, "runtime start @{worker}");
            }
            OpRecord::Fill {
                fifo,
                buffer,
                tap,
                wait,
            } => {
                let _ = writeln!(
                    out,
                    "runtime fill @{fifo} buf=@buf{buffer} wait={wait} {}",
                    fmt_tap(tap)
                );
            }
            OpRecord::Drain {
                fifo,
                cons_index,
                buffer,
                tap,
                wait,
            } => {
                let _ = writeln!(
                    out,
                    "runtime drain @{fifo}.{cons_index} buf=@buf{buffer} wait={wait} {}",
                    fmt_tap(tap)
                );
            }
            OpRecord::Inline { text } => {
                let _ = writeln!(
                    out,
                    "runtime inline text={}",
                    serde_json::to_string(text).expect("strings serialize")
                );
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------

struct Fields<'a> {
    line: usize,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<&'a str, ParseError> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| perr(self.line, format!("missing field `{key}`")))
    }

    fn usize(&self, key: &str) -> Result<usize, ParseError> {
        self.get(key)?
            .parse()
            .map_err(|_| perr(self.line, format!("field `{key}` is not an integer")))
    }

    fn bool(&self, key: &str) -> Result<bool, ParseError> {
        self.get(key)?
            .parse()
            .map_err(|_| perr(self.line, format!("field `{key}` is not a bool")))
    }
}

fn split_fields<'a>(line_no: usize, tokens: &[&'a str]) -> Fields<'a> {
    let pairs = tokens
        .iter()
        .filter_map(|t| t.split_once('='))
        .collect::<Vec<_>>();
    Fields {
        line: line_no,
        pairs,
    }
}

fn parse_usize_list(line: usize, text: &str) -> Result<Vec<usize>, ParseError> {
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| perr(line, format!("expected a [..] list, got `{text}`")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|t| {
            t.parse()
                .map_err(|_| perr(line, format!("`{t}` is not an integer")))
        })
        .collect()
}

/// Splits a `[..]` list on top-level commas only, so `(col,row)` tuples
/// survive intact.
fn parse_str_list(line: usize, text: &str) -> Result<Vec<String>, ParseError> {
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| perr(line, format!("expected a [..] list, got `{text}`")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in inner.chars() {
        match c {
            '(' | '[' => {
                depth += 1;
                current.push(c);
            }
            ')' | ']' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => items.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    items.push(current);
    Ok(items)
}

fn parse_coord(line: usize, text: &str) -> Result<(usize, usize), ParseError> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| perr(line, format!("expected a (col,row) pair, got `{text}`")))?;
    let (c, r) = inner
        .split_once(',')
        .ok_or_else(|| perr(line, format!("expected a (col,row) pair, got `{text}`")))?;
    Ok((
        c.parse()
            .map_err(|_| perr(line, format!("bad column `{c}`")))?,
        r.parse()
            .map_err(|_| perr(line, format!("bad row `{r}`")))?,
    ))
}

fn parse_name(line: usize, token: &str) -> Result<String, ParseError> {
    token
        .strip_prefix('@')
        .map(str::to_string)
        .ok_or_else(|| perr(line, format!("expected @name, got `{token}`")))
}

/// `@name` or `@name.K`.
fn parse_ref(line: usize, token: &str) -> Result<(String, Option<usize>), ParseError> {
    let name = parse_name(line, token)?;
    match name.split_once('.') {
        Some((base, idx)) => Ok((
            base.to_string(),
            Some(
                idx.parse()
                    .map_err(|_| perr(line, format!("bad consumer index in `{token}`")))?,
            ),
        )),
        None => Ok((name, None)),
    }
}

fn parse_kind(line: usize, text: &str) -> Result<TileKind, ParseError> {
    match text {
        "shim" => Ok(TileKind::Shim),
        "mem" => Ok(TileKind::Mem),
        "compute" => Ok(TileKind::Compute),
        other => Err(perr(line, format!("unknown tile kind `{other}`"))),
    }
}

fn parse_scalar(line: usize, text: &str) -> Result<Scalar, ParseError> {
    Scalar::parse(text).ok_or_else(|| perr(line, format!("unknown element type `{text}`")))
}

fn parse_tap(
    line: usize,
    fields: &Fields<'_>,
    dims: &[usize],
) -> Result<TensorAccessPattern, ParseError> {
    let off = fields.usize("off")?;
    let sizes = parse_usize_list(line, fields.get("sizes")?)?;
    let strides = parse_usize_list(line, fields.get("strides")?)?;
    TensorAccessPattern::with_max_rank(dims, off, &sizes, &strides, sizes.len().max(1))
        .map_err(|e| perr(line, format!("invalid tap: {e}")))
}

struct RawFifo {
    name: String,
    elem: Scalar,
    shape: Vec<usize>,
    depth: usize,
    prod_tile: (usize, usize),
    cons_tiles: Vec<(usize, usize)>,
}

/// Parses `.tir` text back into a [`ResolvedDesign`]. Endpoint ownership
/// is reconstructed from worker bindings, runtime ops, and link records;
/// ambiguous or dangling references are parse errors.
pub fn parse(text: &str) -> Result<ResolvedDesign, ParseError> {
    let mut device: Option<DeviceProfile> = None;
    let mut raw_fifos: Vec<RawFifo> = Vec::new();
    let mut buffers: Vec<(usize, BufferRecord)> = Vec::new();
    let mut links: Vec<LinkRecord> = Vec::new();
    let mut workers: Vec<WorkerRecord> = Vec::new();
    let mut ops: Vec<OpRecord> = Vec::new();
    let mut saw_header = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let fields = split_fields(line_no, &tokens);
        match tokens[0] {
            "tir" => {
                if tokens.get(1) != Some(&"v1") {
                    return Err(perr(line_no, "unsupported tir version"));
                }
                saw_header = true;
            }
            "device" => {
                let name = parse_name(line_no, tokens.get(1).copied().unwrap_or(""))?;
                let rows = parse_str_list(line_no, fields.get("rows")?)?
                    .iter()
                    .map(|k| parse_kind(line_no, k))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut profile = DeviceProfile::npu1(1);
                profile.name = name;
                profile.n_cols = fields.usize("cols")?;
                profile.l1_bytes = fields.usize("l1")?;
                profile.l2_bytes = fields.usize("l2")?;
                profile.rows = rows;
                device = Some(profile);
            }
            "channels" => {
                let profile = device
                    .as_mut()
                    .ok_or_else(|| perr(line_no, "channels before device"))?;
                let kind = parse_kind(line_no, fields.get("kind")?)?;
                let budget = crate::device::ChannelBudget {
                    input: fields.usize("in")?,
                    output: fields.usize("out")?,
                };
                match kind {
                    TileKind::Shim => profile.channels.shim = budget,
                    TileKind::Mem => profile.channels.mem = budget,
                    TileKind::Compute => profile.channels.compute = budget,
                }
            }
            "dma" => {
                let profile = device
                    .as_mut()
                    .ok_or_else(|| perr(line_no, "dma before device"))?;
                let kind = parse_kind(line_no, fields.get("kind")?)?;
                let c = crate::device::DmaConstraint {
                    max_dims: fields.usize("dims")?,
                    max_size_per_dim: fields.usize("size")?,
                    max_stride: fields.usize("stride")?,
                };
                match kind {
                    TileKind::Shim => profile.dma.shim = c,
                    TileKind::Mem => profile.dma.mem = c,
                    TileKind::Compute => profile.dma.compute = c,
                }
            }
            "tile" => {
                // Tiles are derived from endpoints; the records are
                // informational.
            }
            "buffer" => {
                let name = parse_name(line_no, tokens.get(1).copied().unwrap_or(""))?;
                let index: usize = name
                    .strip_prefix("buf")
                    .and_then(|i| i.parse().ok())
                    .ok_or_else(|| perr(line_no, "buffer names must be @buf<k>"))?;
                buffers.push((
                    index,
                    BufferRecord {
                        elem: parse_scalar(line_no, fields.get("elem")?)?,
                        shape: parse_usize_list(line_no, fields.get("shape")?)?,
                    },
                ));
            }
            "fifo" => {
                let name = parse_name(line_no, tokens.get(1).copied().unwrap_or(""))?;
                let cons_tiles = parse_str_list(line_no, fields.get("cons")?)?
                    .iter()
                    .map(|t| parse_coord(line_no, t))
                    .collect::<Result<Vec<_>, _>>()?;
                raw_fifos.push(RawFifo {
                    name,
                    elem: parse_scalar(line_no, fields.get("elem")?)?,
                    shape: parse_usize_list(line_no, fields.get("shape")?)?,
                    depth: fields.usize("depth")?,
                    prod_tile: parse_coord(line_no, fields.get("prod")?)?,
                    cons_tiles,
                });
            }
            "link" => {
                let name = parse_name(line_no, tokens.get(1).copied().unwrap_or(""))?;
                let kind = match fields.get("kind")? {
                    "forward" => LinkKind::Forward,
                    "split" => LinkKind::Split,
                    "join" => LinkKind::Join,
                    other => return Err(perr(line_no, format!("unknown link kind `{other}`"))),
                };
                let (col, row) = parse_coord(line_no, fields.get("tile")?)?;
                let (parent, parent_cons) = parse_ref(line_no, fields.get("parent")?)?;
                let children = parse_str_list(line_no, fields.get("children")?)?
                    .iter()
                    .map(|t| parse_ref(line_no, t))
                    .collect::<Result<Vec<_>, _>>()?;
                links.push(LinkRecord {
                    name,
                    kind,
                    tile: Tile {
                        col,
                        row,
                        kind: TileKind::Mem,
                    },
                    parent,
                    parent_cons,
                    children,
                });
            }
            "worker" => {
                let name = parse_name(line_no, tokens.get(1).copied().unwrap_or(""))?;
                let (col, row) = parse_coord(line_no, fields.get("tile")?)?;
                let bindings = parse_str_list(line_no, fields.get("args")?)?
                    .iter()
                    .map(|t| parse_binding(line_no, t))
                    .collect::<Result<Vec<_>, _>>()?;
                workers.push(WorkerRecord {
                    name,
                    tile: Tile {
                        col,
                        row,
                        kind: TileKind::Compute,
                    },
                    kernel: fields.get("kernel")?.to_string(),
                    bindings,
                });
            }
            "runtime" => {
                let op = match tokens.get(1).copied() {
                    Some("start") => OpRecord::Start {
                        worker: parse_name(line_no, tokens.get(2).copied().unwrap_or(""))?,
                    },
                    Some("fill") => {
                        let (fifo, idx) = parse_ref(line_no, tokens.get(2).copied().unwrap_or(""))?;
                        if idx.is_some() {
                            return Err(perr(line_no, "fill targets the producer side"));
                        }
                        let (buffer, tap, wait) = parse_transfer(line_no, &fields, &buffers)?;
                        OpRecord::Fill {
                            fifo,
                            buffer,
                            tap,
                            wait,
                        }
                    }
                    Some("drain") => {
                        let (fifo, idx) = parse_ref(line_no, tokens.get(2).copied().unwrap_or(""))?;
                        let cons_index =
                            idx.ok_or_else(|| perr(line_no, "drain needs a consumer index"))?;
                        let (buffer, tap, wait) = parse_transfer(line_no, &fields, &buffers)?;
                        OpRecord::Drain {
                            fifo,
                            cons_index,
                            buffer,
                            tap,
                            wait,
                        }
                    }
                    Some("inline") => {
                        let rest = line
                            .split_once("text=")
                            .map(|(_, r)| r)
                            .ok_or_else(|| perr(line_no, "inline op needs text="))?;
                        let text: String = serde_json::from_str(rest)
                            .map_err(|e| perr(line_no, format!("bad inline text: {e}")))?;
                        OpRecord::Inline { text }
                    }
                    other => {
                        return Err(perr(
                            line_no,
                            format!("unknown runtime op `{}`", other.unwrap_or("")),
                        ))
                    }
                };
                ops.push(op);
            }
            other => return Err(perr(line_no, format!("unknown record `{other}`"))),
        }
    }

    if !saw_header {
        return Err(perr(1, "missing `tir v1` header"));
    }
    let device = device.ok_or_else(|| perr(1, "missing device record"))?;
    device
        .validate()
        .map_err(|e| perr(1, format!("invalid device record: {e}")))?;

    buffers.sort_by_key(|(i, _)| *i);
    for (expect, (got, _)) in buffers.iter().enumerate() {
        if expect != *got {
            return Err(perr(
                1,
                format!("buffer indices not contiguous at buf{got}"),
            ));
        }
    }
    let buffers: Vec<BufferRecord> = buffers.into_iter().map(|(_, b)| b).collect();

    // Referential integrity: unique names, and every fifo/worker/consumer
    // reference must point at a declared record.
    {
        let mut names = std::collections::BTreeSet::new();
        for name in raw_fifos
            .iter()
            .map(|f| &f.name)
            .chain(links.iter().map(|l| &l.name))
            .chain(workers.iter().map(|w| &w.name))
        {
            if !names.insert(name.clone()) {
                return Err(perr(1, format!("duplicate record name @{name}")));
            }
        }
        let cons_count = |name: &str| -> Option<usize> {
            raw_fifos
                .iter()
                .find(|f| f.name == name)
                .map(|f| f.cons_tiles.len())
        };
        let check_ref = |fifo: &str, index: Option<usize>, what: &str| -> Result<(), ParseError> {
            match (cons_count(fifo), index) {
                (None, _) => Err(perr(1, format!("{what} references unknown fifo @{fifo}"))),
                (Some(n), Some(k)) if k >= n => Err(perr(
                    1,
                    format!("{what} references consumer {k} of @{fifo}, which has {n}"),
                )),
                _ => Ok(()),
            }
        };
        for w in &workers {
            for b in &w.bindings {
                match b {
                    Binding::Cons { fifo, index, .. } => {
                        check_ref(fifo, Some(*index), &format!("worker @{}", w.name))?
                    }
                    Binding::Prod { fifo, .. } => {
                        check_ref(fifo, None, &format!("worker @{}", w.name))?
                    }
                    Binding::Scalar(_) => {}
                }
            }
        }
        for l in &links {
            check_ref(&l.parent, l.parent_cons, &format!("link @{}", l.name))?;
            for (child, cons) in &l.children {
                check_ref(child, *cons, &format!("link @{}", l.name))?;
            }
        }
        for (i, op) in ops.iter().enumerate() {
            match op {
                OpRecord::Fill { fifo, .. } => check_ref(fifo, None, &format!("runtime op #{i}"))?,
                OpRecord::Drain {
                    fifo, cons_index, ..
                } => check_ref(fifo, Some(*cons_index), &format!("runtime op #{i}"))?,
                OpRecord::Start { worker } => {
                    if !workers.iter().any(|w| &w.name == worker) {
                        return Err(perr(
                            1,
                            format!("runtime op #{i} starts unknown worker @{worker}"),
                        ));
                    }
                }
                OpRecord::Inline { .. } => {}
            }
        }
    }

    let tile_of = |line: usize, (col, row): (usize, usize)| -> Result<Tile, ParseError> {
        let kind = device
            .rows
            .get(row)
            .copied()
            .filter(|_| col < device.n_cols)
            .ok_or_else(|| perr(line, format!("tile ({col},{row}) outside the grid")))?;
        Ok(Tile { col, row, kind })
    };

    // Reconstruct endpoint ownership from the referencing records.
    let mut fifos = Vec::new();
    for raw in &raw_fifos {
        let producer_party =
            find_producer(&raw.name, &workers, &links, &ops).map_err(|m| perr(1, m))?;
        let mut consumers = Vec::new();
        for (k, tile) in raw.cons_tiles.iter().enumerate() {
            let party =
                find_consumer(&raw.name, k, &workers, &links, &ops).map_err(|m| perr(1, m))?;
            consumers.push(Endpoint {
                tile: tile_of(1, *tile)?,
                party,
            });
        }
        fifos.push(FifoRecord {
            name: raw.name.clone(),
            elem: raw.elem,
            shape: raw.shape.clone(),
            depth: raw.depth,
            producer: Endpoint {
                tile: tile_of(1, raw.prod_tile)?,
                party: producer_party,
            },
            consumers,
        });
    }

    // Fix link/worker tile kinds against the device rows.
    for link in &mut links {
        link.tile = tile_of(1, (link.tile.col, link.tile.row))?;
    }
    for worker in &mut workers {
        worker.tile = tile_of(1, (worker.tile.col, worker.tile.row))?;
    }

    fifos.sort_by(|a: &FifoRecord, b| a.name.cmp(&b.name));
    links.sort_by(|a, b| a.name.cmp(&b.name));
    workers.sort_by(|a, b| a.name.cmp(&b.name));

    Ok(ResolvedDesign {
        device,
        buffers,
        fifos,
        links,
        workers,
        ops,
    })
}

fn parse_transfer(
    line: usize,
    fields: &Fields<'_>,
    buffers: &[(usize, BufferRecord)],
) -> Result<(usize, TensorAccessPattern, bool), ParseError> {
    let buf_name = parse_name(line, fields.get("buf")?)?;
    let buffer: usize = buf_name
        .strip_prefix("buf")
        .and_then(|i| i.parse().ok())
        .ok_or_else(|| perr(line, "buf must reference @buf<k>"))?;
    let dims = buffers
        .iter()
        .find(|(i, _)| *i == buffer)
        .map(|(_, b)| b.shape.clone())
        .ok_or_else(|| perr(line, format!("unknown buffer buf{buffer}")))?;
    let tap = parse_tap(line, fields, &dims)?;
    Ok((buffer, tap, fields.bool("wait")?))
}

fn parse_binding(line: usize, token: &str) -> Result<Binding, ParseError> {
    let (kind, rest) = token
        .split_once(':')
        .ok_or_else(|| perr(line, format!("bad binding `{token}`")))?;
    if kind == "lit" {
        return Ok(Binding::Scalar(rest.parse().map_err(|_| {
            perr(line, format!("bad literal binding `{token}`"))
        })?));
    }
    let (target, window) = match rest.rsplit_once(':') {
        Some((t, w)) if w.starts_with('a') => (t, Some(w)),
        _ => (rest, None),
    };
    let (acquire, release) = match window {
        None => (1, 1),
        Some(w) => {
            let body = &w[1..];
            let (a, r) = body
                .split_once('r')
                .ok_or_else(|| perr(line, format!("bad window `{token}`")))?;
            (
                a.parse()
                    .map_err(|_| perr(line, format!("bad window `{token}`")))?,
                r.parse()
                    .map_err(|_| perr(line, format!("bad window `{token}`")))?,
            )
        }
    };
    let (fifo, index) = parse_ref(line, target)?;
    match kind {
        "cons" => Ok(Binding::Cons {
            fifo,
            index: index.ok_or_else(|| perr(line, "cons bindings need an index"))?,
            acquire,
            release,
        }),
        "prod" => {
            if index.is_some() {
                return Err(perr(line, "prod bindings carry no index"));
            }
            Ok(Binding::Prod {
                fifo,
                acquire,
                release,
            })
        }
        other => Err(perr(line, format!("unknown binding kind `{other}`"))),
    }
}

/// Folds a claimant list into the endpoint's single owning party. Runs of
/// runtime ops on one endpoint share its channel and count as one party
/// (the earliest op); anything else must be a unique claimant.
fn merge_claimants(found: Vec<Party>, what: &str) -> Result<Party, String> {
    let mut non_ops: Vec<&Party> = found
        .iter()
        .filter(|p| !matches!(p, Party::RuntimeOp(_)))
        .collect();
    non_ops.dedup();
    let first_op = found
        .iter()
        .filter(|p| matches!(p, Party::RuntimeOp(_)))
        .min_by_key(|p| match p {
            Party::RuntimeOp(i) => *i,
            _ => usize::MAX,
        });
    match (non_ops.len(), first_op) {
        (0, Some(op)) => Ok(op.clone()),
        (1, None) => Ok(non_ops[0].clone()),
        (0, None) => Err(format!("{what} is unclaimed")),
        _ => Err(format!("{what} has {} claimants", found.len())),
    }
}

fn find_producer(
    fifo: &str,
    workers: &[WorkerRecord],
    links: &[LinkRecord],
    ops: &[OpRecord],
) -> Result<Party, String> {
    let mut found = Vec::new();
    for w in workers {
        for b in &w.bindings {
            if matches!(b, Binding::Prod { fifo: f, .. } if f == fifo) {
                found.push(Party::Worker(w.name.clone()));
            }
        }
    }
    for (i, op) in ops.iter().enumerate() {
        if matches!(op, OpRecord::Fill { fifo: f, .. } if f == fifo) {
            found.push(Party::RuntimeOp(i));
        }
    }
    for l in links {
        if l.kind == LinkKind::Join && l.parent == fifo {
            found.push(Party::Link(l.name.clone()));
        }
        if l.kind != LinkKind::Join {
            for (child, _) in &l.children {
                if child == fifo {
                    found.push(Party::Link(l.name.clone()));
                }
            }
        }
    }
    merge_claimants(found, &format!("producer side of fifo @{fifo}"))
}

fn find_consumer(
    fifo: &str,
    index: usize,
    workers: &[WorkerRecord],
    links: &[LinkRecord],
    ops: &[OpRecord],
) -> Result<Party, String> {
    let mut found = Vec::new();
    for w in workers {
        for b in &w.bindings {
            if matches!(b, Binding::Cons { fifo: f, index: i, .. } if f == fifo && *i == index) {
                found.push(Party::Worker(w.name.clone()));
            }
        }
    }
    for (i, op) in ops.iter().enumerate() {
        if matches!(op, OpRecord::Drain { fifo: f, cons_index, .. } if f == fifo && *cons_index == index)
        {
            found.push(Party::RuntimeOp(i));
        }
    }
    for l in links {
        if l.kind != LinkKind::Join && l.parent == fifo && l.parent_cons == Some(index) {
            found.push(Party::Link(l.name.clone()));
        }
        if l.kind == LinkKind::Join {
            for (child, cons) in &l.children {
                if child == fifo && *cons == Some(index) {
                    found.push(Party::Link(l.name.clone()));
                }
            }
        }
    }
    merge_claimants(found, &format!("consumer {index} of @{fifo}"))
}
