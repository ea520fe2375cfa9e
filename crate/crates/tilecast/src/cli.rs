//! Command implementations behind the `tilecast` binary.
//!
//! Every command is deterministic given its inputs and flags. Diagnostics
//! go to stderr as `error[<code>]: <message>`; exit codes are 0 (ok),
//! 2 (user error), 3 (resolution or validation failure), 4 (simulation
//! deadlock).

use crate::dataflow::Scalar;
use crate::device::Device;
use crate::diff::{design_diff, DiffMode};
use crate::emitter::{emit, OpRecord, ResolvedDesign};
use crate::hostbuf;
use crate::kernel::KernelRegistry;
use crate::manifest::{builtin, DesignManifest, BUILTINS};
use crate::placement::{Placer, SequentialPlacer};
use crate::render::{render_access_map, RenderFormat};
use crate::sim::{run_with, RunStatus, Schedule, SimError, SimOptions};
use crate::tap::{access_equivalent, AccessMap, TapSpec, TaseSpec};
use crate::tiler::{group_tiler, TilerSpec};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_RESOLVE: i32 = 3;
pub const EXIT_DEADLOCK: i32 = 4;

/// A failed command: exit class plus a stable diagnostic code.
#[derive(Debug)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn user(code: &str, message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_USER,
            code: code.into(),
            message: message.into(),
        }
    }

    fn resolve(err: crate::ResolveError) -> Self {
        Self {
            exit: EXIT_RESOLVE,
            code: err.code().into(),
            message: err.to_string(),
        }
    }

    fn sim(err: SimError) -> Self {
        let exit = match &err {
            SimError::ShapeMismatch(_) => EXIT_USER,
            _ => EXIT_RESOLVE,
        };
        Self {
            exit,
            code: err.code().into(),
            message: err.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::user("io", format!("cannot read {}: {e}", path.display())))
}

/// Loads a manifest from a path, or by built-in name when no such file
/// exists.
pub fn load_design(spec: &str) -> Result<DesignManifest, CliError> {
    let path = Path::new(spec);
    let text = if path.exists() {
        read_file(path)?
    } else if let Some(design) = builtin(spec) {
        design.json.to_string()
    } else {
        return Err(CliError::user(
            "no_such_design",
            format!("`{spec}` is neither a file nor a built-in design name"),
        ));
    };
    DesignManifest::from_json(&text)
        .map_err(|e| CliError::user(e.code(), format!("invalid design manifest: {e}")))
}

/// Device precedence: `--device` flag, then the manifest's device, then
/// `TILECAST_DEVICE`, then `npu1col1`. The flag accepts a preset name or
/// `@profile.json`.
pub fn pick_device(
    flag: Option<&str>,
    manifest: Option<&DesignManifest>,
) -> Result<Device, CliError> {
    let from_spec = |spec: &str| -> Result<Device, CliError> {
        if let Some(path) = spec.strip_prefix('@') {
            let text = read_file(Path::new(path))?;
            let profile = serde_json::from_str(&text)
                .map_err(|e| CliError::user("device", format!("invalid device profile: {e}")))?;
            Device::new(profile).map_err(|e| CliError::user("device", e.to_string()))
        } else {
            Device::preset(spec).map_err(|e| CliError::user("device", e.to_string()))
        }
    };
    if let Some(spec) = flag {
        return from_spec(spec);
    }
    if let Some(dev_ref) = manifest.and_then(|m| m.device.as_ref()) {
        return dev_ref
            .instantiate()
            .map_err(|e| CliError::user("device", e.to_string()));
    }
    if let Ok(spec) = std::env::var("TILECAST_DEVICE") {
        return from_spec(&spec);
    }
    Ok(Device::npu1_col1())
}

fn placer_from(name: &str) -> Result<Option<Box<dyn Placer>>, CliError> {
    match name {
        "sequential" => Ok(Some(Box::new(SequentialPlacer::new()))),
        "none" => Ok(None),
        other => Err(CliError::user(
            "placer",
            format!("unknown placer `{other}` (expected `sequential` or `none`)"),
        )),
    }
}

fn resolve_design(
    design: &str,
    placer: &str,
    device_flag: Option<&str>,
) -> Result<ResolvedDesign, CliError> {
    let manifest = load_design(design)?;
    let device = pick_device(device_flag, Some(&manifest))?;
    let program = manifest
        .build_program(device)
        .map_err(|e| CliError::user(e.code(), e.to_string()))?;
    let placer = placer_from(placer)?;
    program
        .resolve(placer.as_deref())
        .map_err(CliError::resolve)
}

pub fn cmd_emit(
    out: &mut dyn Write,
    design: &str,
    placer: &str,
    device_flag: Option<&str>,
) -> CliResult {
    let resolved = resolve_design(design, placer, device_flag)?;
    write!(out, "{}", emit(&resolved)).map_err(|e| CliError::user("io", e.to_string()))
}

#[derive(Serialize)]
struct CliRunReport<'a> {
    #[serde(flatten)]
    status: &'a RunStatus,
    steps: u64,
    rounds: u64,
    fifo_transfers: &'a [crate::sim::FifoTransfer],
    outputs: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_run(
    out: &mut dyn Write,
    design: &str,
    placer: &str,
    device_flag: Option<&str>,
    inputs: &[PathBuf],
    out_dir: &Path,
    seed: Option<u64>,
) -> CliResult {
    let manifest = load_design(design)?;
    let device = pick_device(device_flag, Some(&manifest))?;
    let program = manifest
        .build_program(device)
        .map_err(|e| CliError::user(e.code(), e.to_string()))?;
    let placer = placer_from(placer)?;
    let resolved = program
        .resolve(placer.as_deref())
        .map_err(CliError::resolve)?;

    let fill_buffers = manifest.input_buffers();
    if inputs.len() != fill_buffers.len() {
        return Err(CliError::user(
            "inputs",
            format!(
                "design reads from {} buffer(s) {:?}; pass exactly that many --in files in that order",
                fill_buffers.len(),
                fill_buffers
            ),
        ));
    }
    let mut host: Vec<Vec<i64>> = resolved
        .buffers
        .iter()
        .map(|b| vec![0i64; b.len()])
        .collect();
    for (path, &buf) in inputs.iter().zip(&fill_buffers) {
        let decl = &resolved.buffers[buf];
        host[buf] = hostbuf::read_buffer(path, decl.elem, decl.len())
            .map_err(|e| CliError::user("buffer", e.to_string()))?;
    }

    let options = SimOptions {
        schedule: seed.map_or(Schedule::RoundRobin, Schedule::Random),
        ..Default::default()
    };
    let registry = KernelRegistry::with_builtins();
    let report = run_with(&resolved, &registry, &host, &options).map_err(CliError::sim)?;

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::user("io", format!("cannot create {}: {e}", out_dir.display())))?;
    let mut outputs = Vec::new();
    for buf in manifest.output_buffers() {
        let path = out_dir.join(format!("buf{buf}.bin"));
        let elem = resolved.buffers[buf].elem;
        hostbuf::write_buffer(&path, elem, &report.buffers[buf])
            .map_err(|e| CliError::user("buffer", e.to_string()))?;
        outputs.push(path.display().to_string());
    }

    let cli_report = CliRunReport {
        status: &report.status,
        steps: report.steps,
        rounds: report.rounds,
        fifo_transfers: &report.fifo_transfers,
        outputs,
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&cli_report).expect("report serializes")
    )
    .map_err(|e| CliError::user("io", e.to_string()))?;

    match report.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Deadlock { ref blocked } => Err(CliError {
            exit: EXIT_DEADLOCK,
            code: "deadlock".into(),
            message: format!("simulation deadlocked; blocked: {}", blocked.join("; ")),
        }),
    }
}

fn load_map(
    tap_path: Option<&Path>,
    tiler_path: Option<&Path>,
    kind: &str,
) -> Result<AccessMap, CliError> {
    let order = match kind {
        "order" => true,
        "count" => false,
        other => {
            return Err(CliError::user(
                "kind",
                format!("unknown map kind `{other}` (expected `order` or `count`)"),
            ))
        }
    };
    if let Some(path) = tiler_path {
        let spec: TilerSpec = serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::user("tiler_spec", format!("invalid tiler spec: {e}")))?;
        let tase = group_tiler(&spec).map_err(|e| CliError::user("tiler", e.to_string()))?;
        return Ok(if order {
            tase.access_order()
        } else {
            tase.access_count()
        });
    }
    let path = tap_path
        .ok_or_else(|| CliError::user("args", "pass a tap/tase spec file or --tiler spec.json"))?;
    let text = read_file(path)?;
    let pattern = parse_pattern(&text)?;
    Ok(match (pattern, order) {
        (PatternSpec::Tap(tap), true) => tap.access_order(),
        (PatternSpec::Tap(tap), false) => tap.access_count(),
        (PatternSpec::Tase(tase), true) => tase.access_order(),
        (PatternSpec::Tase(tase), false) => tase.access_count(),
    })
}

enum PatternSpec {
    Tap(crate::tap::TensorAccessPattern),
    Tase(crate::tap::TensorAccessSequence),
}

fn parse_pattern(text: &str) -> Result<PatternSpec, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::user("tap_spec", format!("invalid JSON: {e}")))?;
    if value.get("taps").is_some() {
        let spec: TaseSpec = serde_json::from_value(value)
            .map_err(|e| CliError::user("tap_spec", format!("invalid tase spec: {e}")))?;
        Ok(PatternSpec::Tase(
            spec.build()
                .map_err(|e| CliError::user("tap", e.to_string()))?,
        ))
    } else {
        let spec: TapSpec = serde_json::from_value(value)
            .map_err(|e| CliError::user("tap_spec", format!("invalid tap spec: {e}")))?;
        Ok(PatternSpec::Tap(
            spec.build()
                .map_err(|e| CliError::user("tap", e.to_string()))?,
        ))
    }
}

pub fn cmd_viz(
    out: &mut dyn Write,
    tap_path: Option<&Path>,
    tiler_path: Option<&Path>,
    kind: &str,
    format: &str,
    output: Option<&Path>,
) -> CliResult {
    let map = load_map(tap_path, tiler_path, kind)?;
    let format: RenderFormat = format
        .parse()
        .map_err(|e: String| CliError::user("format", e))?;
    let bytes = render_access_map(&map, format)
        .map_err(|e| CliError::user("unsupported_rank", e.to_string()))?;
    match output {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::user("io", format!("cannot write {}: {e}", path.display()))),
        None => {
            out.write_all(&bytes)
                .map_err(|e| CliError::user("io", e.to_string()))?;
            if !bytes.ends_with(b"\n") {
                out.write_all(b"\n")
                    .map_err(|e| CliError::user("io", e.to_string()))?;
            }
            Ok(())
        }
    }
}

pub fn cmd_equiv(out: &mut dyn Write, a: &Path, b: &Path) -> CliResult {
    let is_tir = |p: &Path| p.extension().and_then(|e| e.to_str()) == Some("tir");
    let verdict = if is_tir(a) && is_tir(b) {
        let ta = read_file(a)?;
        let tb = read_file(b)?;
        let tier = |mode| {
            design_diff(&ta, &tb, mode)
                .map_err(|e| CliError::user("parse", e.to_string()))
                .map(|r| r.equal)
        };
        if tier(DiffMode::Strict)? {
            "strict"
        } else if tier(DiffMode::ModuloOrder)? {
            "modulo_order"
        } else if tier(DiffMode::AccessEquiv)? {
            "access_equivalent"
        } else {
            "different"
        }
    } else {
        let pa = parse_pattern(&read_file(a)?)?;
        let pb = parse_pattern(&read_file(b)?)?;
        match (&pa, &pb) {
            (PatternSpec::Tap(x), PatternSpec::Tap(y)) if x.strictly_equal(y) => "strict",
            _ => {
                let equivalent = match (&pa, &pb) {
                    (PatternSpec::Tap(x), PatternSpec::Tap(y)) => access_equivalent(x, y),
                    (PatternSpec::Tap(x), PatternSpec::Tase(y)) => access_equivalent(x, y),
                    (PatternSpec::Tase(x), PatternSpec::Tap(y)) => access_equivalent(x, y),
                    (PatternSpec::Tase(x), PatternSpec::Tase(y)) => access_equivalent(x, y),
                };
                if equivalent {
                    "access_equivalent"
                } else {
                    "different"
                }
            }
        }
    };
    writeln!(out, "{verdict}").map_err(|e| CliError::user("io", e.to_string()))
}

pub fn cmd_place(
    out: &mut dyn Write,
    design: &str,
    placer: &str,
    device_flag: Option<&str>,
) -> CliResult {
    let resolved = resolve_design(design, placer, device_flag)?;
    let mut w = |s: String| writeln!(out, "{s}").map_err(|e| CliError::user("io", e.to_string()));

    // Grid diagram, row 0 at the bottom like the physical array.
    let cols = resolved.device.n_cols;
    let rows = resolved.device.rows.len();
    let mut cells: Vec<Vec<Vec<String>>> = vec![vec![Vec::new(); cols]; rows];
    for worker in &resolved.workers {
        cells[worker.tile.row][worker.tile.col].push(worker.name.clone());
    }
    for link in &resolved.links {
        cells[link.tile.row][link.tile.col].push(link.name.clone());
    }
    for (idx, op) in resolved.ops.iter().enumerate() {
        let (label, tile) = match op {
            OpRecord::Fill { fifo, .. } => (
                format!("fill#{idx}"),
                resolved.fifo(fifo).expect("resolved").producer.tile,
            ),
            OpRecord::Drain {
                fifo, cons_index, ..
            } => (
                format!("drain#{idx}"),
                resolved.fifo(fifo).expect("resolved").consumers[*cons_index].tile,
            ),
            _ => continue,
        };
        cells[tile.row][tile.col].push(label);
    }

    w(format!("device {} ({cols}x{rows})", resolved.device.name))?;
    for row in (0..rows).rev() {
        let kind = resolved.device.rows[row];
        let mut line = format!("row {row} [{kind:>7}]");
        for cell in &cells[row] {
            let content = if cell.is_empty() {
                ".".to_string()
            } else {
                cell.join("+")
            };
            line.push_str(&format!(" {content:<24}"));
        }
        w(line.trim_end().to_string())?;
    }

    w(String::new())?;
    w("component            tile    kind".into())?;
    for worker in &resolved.workers {
        w(format!(
            "{:<20} {:<7} compute",
            worker.name,
            worker.tile.to_string()
        ))?;
    }
    for link in &resolved.links {
        w(format!(
            "{:<20} {:<7} mem",
            link.name,
            link.tile.to_string()
        ))?;
    }
    for (idx, op) in resolved.ops.iter().enumerate() {
        let (label, tile) = match op {
            OpRecord::Fill { fifo, .. } => (
                format!("fill#{idx}@{fifo}"),
                resolved.fifo(fifo).expect("resolved").producer.tile,
            ),
            OpRecord::Drain {
                fifo, cons_index, ..
            } => (
                format!("drain#{idx}@{fifo}"),
                resolved.fifo(fifo).expect("resolved").consumers[*cons_index].tile,
            ),
            _ => continue,
        };
        w(format!("{label:<20} {:<7} shim", tile.to_string()))?;
    }
    Ok(())
}

pub fn cmd_designs_list(out: &mut dyn Write) -> CliResult {
    for design in BUILTINS {
        writeln!(out, "{:<12} {}", design.name, design.description)
            .map_err(|e| CliError::user("io", e.to_string()))?;
    }
    Ok(())
}

pub fn cmd_designs_show(out: &mut dyn Write, name: &str) -> CliResult {
    let design = builtin(name).ok_or_else(|| {
        CliError::user(
            "no_such_design",
            format!("unknown built-in design `{name}`; try `tilecast designs list`"),
        )
    })?;
    write!(out, "{}", design.json).map_err(|e| CliError::user("io", e.to_string()))
}

/// Convenience used by tests: generate an iota input file for a design's
/// buffer.
pub fn write_iota(path: &Path, elem: Scalar, len: usize) -> Result<(), CliError> {
    let values: Vec<i64> = (0..len as i64).collect();
    hostbuf::write_buffer(path, elem, &values).map_err(|e| CliError::user("buffer", e.to_string()))
}
