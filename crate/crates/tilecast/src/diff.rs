//! Structural comparison of two `.tir` designs at three strictness
//! levels:
//!
//! - `strict`: byte equality of the text;
//! - `modulo_order`: equality after canonical normalization, meaning records
//!   sorted, broadcast consumer lists ordered by tile with all index
//!   references remapped accordingly;
//! - `access_equiv`: `modulo_order`, with runtime transfer patterns
//!   compared by their access order/count maps instead of their
//!   sizes/strides encoding.

use crate::emitter::{emit, parse, Binding, LinkRecord, OpRecord, ParseError, ResolvedDesign};
use crate::tap::{access_equivalent, TensorAccessPattern};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMode {
    Strict,
    ModuloOrder,
    AccessEquiv,
}

impl std::str::FromStr for DiffMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strict" => Ok(Self::Strict),
            "modulo_order" => Ok(Self::ModuloOrder),
            "access_equiv" => Ok(Self::AccessEquiv),
            other => Err(format!("unknown diff mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub equal: bool,
    pub differences: Vec<String>,
}

impl DiffReport {
    fn equal_report() -> Self {
        Self {
            equal: true,
            differences: Vec::new(),
        }
    }
}

/// Compares two `.tir` texts under the given mode.
pub fn design_diff(a: &str, b: &str, mode: DiffMode) -> Result<DiffReport, ParseError> {
    match mode {
        DiffMode::Strict => Ok(strict_diff(a, b)),
        DiffMode::ModuloOrder => {
            let ca = canonicalize(&parse(a)?);
            let cb = canonicalize(&parse(b)?);
            Ok(text_diff(&emit(&ca), &emit(&cb)))
        }
        DiffMode::AccessEquiv => {
            let ca = canonicalize(&parse(a)?);
            let cb = canonicalize(&parse(b)?);
            let mut report = text_diff(&emit(&neutral_taps(&ca)), &emit(&neutral_taps(&cb)));
            for (idx, (op_a, op_b)) in ca.ops.iter().zip(&cb.ops).enumerate() {
                let taps = match (op_a, op_b) {
                    (OpRecord::Fill { tap: ta, .. }, OpRecord::Fill { tap: tb, .. })
                    | (OpRecord::Drain { tap: ta, .. }, OpRecord::Drain { tap: tb, .. }) => {
                        Some((ta, tb))
                    }
                    _ => None,
                };
                if let Some((ta, tb)) = taps {
                    if !access_equivalent(ta, tb) {
                        report.equal = false;
                        report.differences.push(format!(
                            "runtime op #{idx}: transfer patterns are not access equivalent"
                        ));
                    }
                }
            }
            Ok(report)
        }
    }
}

fn strict_diff(a: &str, b: &str) -> DiffReport {
    if a == b {
        return DiffReport::equal_report();
    }
    let mut differences = Vec::new();
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    for (i, (x, y)) in la.iter().zip(&lb).enumerate() {
        if x != y {
            differences.push(format!("line {}: `{x}` vs `{y}`", i + 1));
            if differences.len() >= 8 {
                differences.push("...".into());
                break;
            }
        }
    }
    if la.len() != lb.len() {
        differences.push(format!("line counts differ: {} vs {}", la.len(), lb.len()));
    }
    DiffReport {
        equal: false,
        differences,
    }
}

fn text_diff(a: &str, b: &str) -> DiffReport {
    if a == b {
        return DiffReport::equal_report();
    }
    // Runtime lines are order-sensitive: tag them with their position so a
    // reordering shows up even after the set comparison.
    let keyed = |text: &str| -> BTreeSet<String> {
        let mut op = 0usize;
        text.lines()
            .map(|line| {
                if line.starts_with("runtime ") {
                    op += 1;
                    format!("op{op:04} {line}")
                } else {
                    line.to_string()
                }
            })
            .collect()
    };
    let sa = keyed(a);
    let sb = keyed(b);
    let mut differences: Vec<String> = sa
        .difference(&sb)
        .map(|l| format!("only in first: {l}"))
        .chain(sb.difference(&sa).map(|l| format!("only in second: {l}")))
        .collect();
    differences.truncate(16);
    DiffReport {
        equal: false,
        differences,
    }
}

/// Reorders each fifo's consumer list by tile (stably) and remaps every
/// consumer-index reference in workers, drains, and links to match.
pub fn canonicalize(design: &ResolvedDesign) -> ResolvedDesign {
    let mut out = design.clone();
    for fifo in &mut out.fifos {
        let mut order: Vec<usize> = (0..fifo.consumers.len()).collect();
        order.sort_by_key(|&i| {
            let t = fifo.consumers[i].tile;
            (t.col, t.row, i)
        });
        // remap[old] = new
        let mut remap = vec![0usize; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        fifo.consumers = order.iter().map(|&i| fifo.consumers[i].clone()).collect();

        let name = fifo.name.clone();
        for worker in &mut out.workers {
            for binding in &mut worker.bindings {
                if let Binding::Cons { fifo: f, index, .. } = binding {
                    if *f == name {
                        *index = remap[*index];
                    }
                }
            }
        }
        for op in &mut out.ops {
            if let OpRecord::Drain {
                fifo: f,
                cons_index,
                ..
            } = op
            {
                if *f == name {
                    *cons_index = remap[*cons_index];
                }
            }
        }
        for link in &mut out.links {
            let LinkRecord {
                parent,
                parent_cons,
                children,
                ..
            } = link;
            if parent == &name {
                if let Some(idx) = parent_cons {
                    *idx = remap[*idx];
                }
            }
            for (child, cons) in children {
                if child == &name {
                    if let Some(idx) = cons {
                        *idx = remap[*idx];
                    }
                }
            }
        }
    }
    out
}

/// Replaces every transfer pattern with a full row-major sweep of its
/// buffer, so text comparison ignores the tap encoding.
fn neutral_taps(design: &ResolvedDesign) -> ResolvedDesign {
    let mut out = design.clone();
    for op in &mut out.ops {
        let (tap, buffer) = match op {
            OpRecord::Fill { tap, buffer, .. } => (tap, *buffer),
            OpRecord::Drain { tap, buffer, .. } => (tap, *buffer),
            _ => continue,
        };
        let dims = out.buffers[buffer].shape.clone();
        let len: usize = dims.iter().product();
        *tap = TensorAccessPattern::new(&dims, 0, &[len], &[1]).expect("buffers are non-empty");
    }
    out
}
