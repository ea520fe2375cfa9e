//! The JSON design manifest: the CLI's ingestion format.
//!
//! A manifest declares host buffers, fifos, link stages, workers, and the
//! runtime op list, with optional manual placements. Consumer handles are
//! minted in a fixed order (links first in list order, then worker
//! arguments (workers in list order, arguments left to right), then
//! arguments left to right per worker, then runtime drains in sequence
//! order), so broadcast consumer indices are
//! reproducible from the file alone.

use crate::dataflow::{
    DataflowError, ObjectFifo, ObjectType, Program, Runtime, Scalar, Worker, WorkerArg,
};
use crate::device::{Device, DeviceError, DeviceProfile};
use crate::placement::{PlaceError, Placement};
use crate::tap::{TapError, TensorAccessPattern};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown {kind} id `{id}`")]
    UnknownRef { kind: &'static str, id: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("link children must be fresh ids, but `{0}` is already declared")]
    ChildCollision(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Dataflow(#[from] DataflowError),
    #[error(transparent)]
    Place(#[from] PlaceError),
    #[error(transparent)]
    Tap(#[from] TapError),
    #[error("buffer index {0} is not declared")]
    BadBuffer(usize),
}

impl ManifestError {
    pub fn code(&self) -> &'static str {
        "manifest"
    }
}

/// Device selection: a preset name or an inline profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceRef {
    Preset(String),
    Profile(DeviceProfile),
}

impl DeviceRef {
    pub fn instantiate(&self) -> Result<Device, DeviceError> {
        match self {
            DeviceRef::Preset(name) => Device::preset(name),
            DeviceRef::Profile(profile) => Device::new(profile.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BufferDecl {
    #[serde(default)]
    pub elem: Scalar,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FifoDecl {
    pub id: String,
    #[serde(default)]
    pub elem: Scalar,
    pub shape: Vec<usize>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Explicit resolved name; auto-generated when absent.
    #[serde(default)]
    pub name: Option<String>,
}

fn default_depth() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkDeclManifest {
    pub kind: LinkKindDecl,
    /// Whole-object side: the source for forward/split, the destination
    /// for join.
    pub parent: String,
    /// Fresh ids for the part-side fifos the link creates.
    pub children: Vec<String>,
    #[serde(default)]
    pub place: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKindDecl {
    Forward,
    Split,
    Join,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgDecl {
    Cons {
        cons: String,
        #[serde(default = "one")]
        acquire: usize,
        #[serde(default = "one")]
        release: usize,
    },
    Prod {
        prod: String,
        #[serde(default = "one")]
        acquire: usize,
        #[serde(default = "one")]
        release: usize,
    },
    Lit {
        lit: i64,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerDecl {
    pub id: String,
    pub kernel: String,
    pub args: Vec<ArgDecl>,
    #[serde(default)]
    pub place: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapDecl {
    #[serde(default)]
    pub offset: usize,
    pub sizes: Vec<usize>,
    pub strides: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpDecl {
    Start {
        worker: String,
    },
    Fill {
        fifo: String,
        buf: usize,
        tap: TapDecl,
        #[serde(default)]
        wait: bool,
        #[serde(default)]
        place: Option<(usize, usize)>,
    },
    Drain {
        fifo: String,
        buf: usize,
        tap: TapDecl,
        #[serde(default)]
        wait: bool,
        #[serde(default)]
        place: Option<(usize, usize)>,
    },
    Inline {
        text: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignManifest {
    #[serde(default)]
    pub device: Option<DeviceRef>,
    pub buffers: Vec<BufferDecl>,
    #[serde(default)]
    pub fifos: Vec<FifoDecl>,
    #[serde(default)]
    pub links: Vec<LinkDeclManifest>,
    #[serde(default)]
    pub workers: Vec<WorkerDecl>,
    pub runtime: Vec<OpDecl>,
}

impl DesignManifest {
    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifests serialize")
    }

    /// Builds the deferred program against `device`. Nothing is placed or
    /// validated beyond construction rules; resolution does the rest.
    pub fn build_program(&self, device: Device) -> Result<Program, ManifestError> {
        let mut fifos: BTreeMap<String, ObjectFifo> = BTreeMap::new();
        for decl in &self.fifos {
            let ty = ObjectType::new(decl.elem, &decl.shape);
            let mut fifo = ObjectFifo::with_depth(ty, decl.depth)?;
            if let Some(name) = &decl.name {
                fifo = fifo.with_name(name.clone());
            }
            if fifos.insert(decl.id.clone(), fifo).is_some() {
                return Err(ManifestError::DuplicateId(decl.id.clone()));
            }
        }

        for link in &self.links {
            let parent = fifos
                .get(&link.parent)
                .ok_or_else(|| ManifestError::UnknownRef {
                    kind: "fifo",
                    id: link.parent.clone(),
                })?;
            let placement = match link.place {
                Some((col, row)) => Placement::Fixed(device.tile_at(col, row)?),
                None => Placement::AnyMemTile,
            };
            let children = match link.kind {
                LinkKindDecl::Forward => {
                    vec![parent.cons().forward_on(placement)?]
                }
                LinkKindDecl::Split => parent.cons().split_on(link.children.len(), placement)?,
                LinkKindDecl::Join => parent.prod().join_on(link.children.len(), placement)?,
            };
            for (id, child) in link.children.iter().zip(children) {
                if fifos.contains_key(id) {
                    return Err(ManifestError::ChildCollision(id.clone()));
                }
                fifos.insert(id.clone(), child);
            }
        }

        let mut workers: BTreeMap<String, Worker> = BTreeMap::new();
        for decl in &self.workers {
            let mut args = Vec::with_capacity(decl.args.len());
            for arg in &decl.args {
                let built = match arg {
                    ArgDecl::Cons {
                        cons,
                        acquire,
                        release,
                    } => {
                        let fifo = fifos.get(cons).ok_or_else(|| ManifestError::UnknownRef {
                            kind: "fifo",
                            id: cons.clone(),
                        })?;
                        WorkerArg::windowed(fifo.cons(), *acquire, *release)?
                    }
                    ArgDecl::Prod {
                        prod,
                        acquire,
                        release,
                    } => {
                        let fifo = fifos.get(prod).ok_or_else(|| ManifestError::UnknownRef {
                            kind: "fifo",
                            id: prod.clone(),
                        })?;
                        WorkerArg::windowed(fifo.prod(), *acquire, *release)?
                    }
                    ArgDecl::Lit { lit } => WorkerArg::scalar(*lit),
                };
                args.push(built);
            }
            let worker = Worker::new(decl.kernel.clone(), args);
            if let Some((col, row)) = decl.place {
                worker.place(device.tile_at(col, row)?)?;
            }
            if workers.insert(decl.id.clone(), worker).is_some() {
                return Err(ManifestError::DuplicateId(decl.id.clone()));
            }
        }

        let mut rt = Runtime::new();
        let buffer_ids: Vec<_> = self
            .buffers
            .iter()
            .map(|b| rt.declare_buffer(b.elem, &b.shape))
            .collect();

        for op in &self.runtime {
            match op {
                OpDecl::Start { worker } => {
                    let w = workers
                        .get(worker)
                        .ok_or_else(|| ManifestError::UnknownRef {
                            kind: "worker",
                            id: worker.clone(),
                        })?;
                    rt.start(w);
                }
                OpDecl::Fill {
                    fifo,
                    buf,
                    tap,
                    wait,
                    place,
                } => {
                    let f = fifos.get(fifo).ok_or_else(|| ManifestError::UnknownRef {
                        kind: "fifo",
                        id: fifo.clone(),
                    })?;
                    let buffer = *buffer_ids.get(*buf).ok_or(ManifestError::BadBuffer(*buf))?;
                    let dims = &self.buffers[*buf].shape;
                    let pattern =
                        TensorAccessPattern::new(dims, tap.offset, &tap.sizes, &tap.strides)?;
                    let op_id = rt.fill(&f.prod(), buffer, pattern, *wait)?;
                    if let Some((col, row)) = place {
                        rt.place_op(op_id, device.tile_at(*col, *row)?)?;
                    }
                }
                OpDecl::Drain {
                    fifo,
                    buf,
                    tap,
                    wait,
                    place,
                } => {
                    let f = fifos.get(fifo).ok_or_else(|| ManifestError::UnknownRef {
                        kind: "fifo",
                        id: fifo.clone(),
                    })?;
                    let buffer = *buffer_ids.get(*buf).ok_or(ManifestError::BadBuffer(*buf))?;
                    let dims = &self.buffers[*buf].shape;
                    let pattern =
                        TensorAccessPattern::new(dims, tap.offset, &tap.sizes, &tap.strides)?;
                    let op_id = rt.drain(&f.cons(), buffer, pattern, *wait)?;
                    if let Some((col, row)) = place {
                        rt.place_op(op_id, device.tile_at(*col, *row)?)?;
                    }
                }
                OpDecl::Inline { text } => {
                    rt.inline_ops(text.clone());
                }
            }
        }

        Ok(Program::new(device, rt))
    }

    /// Buffer indices that fills read from, deduplicated, ascending.
    pub fn input_buffers(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .runtime
            .iter()
            .filter_map(|op| match op {
                OpDecl::Fill { buf, .. } => Some(*buf),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Buffer indices that drains write to, deduplicated, ascending.
    pub fn output_buffers(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .runtime
            .iter()
            .filter_map(|op| match op {
                OpDecl::Drain { buf, .. } => Some(*buf),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

pub struct BuiltinDesign {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

/// The shipped design corpus.
pub const BUILTINS: &[BuiltinDesign] = &[
    BuiltinDesign {
        name: "passthrough",
        description: "pass data unchanged through one compute tile",
        json: include_str!("../designs/passthrough.json"),
    },
    BuiltinDesign {
        name: "vsadd",
        description: "vector-scalar addition",
        json: include_str!("../designs/vsadd.json"),
    },
    BuiltinDesign {
        name: "vsmul",
        description: "vector-scalar multiplication",
        json: include_str!("../designs/vsmul.json"),
    },
    BuiltinDesign {
        name: "vvadd",
        description: "element-wise vector-vector addition",
        json: include_str!("../designs/vvadd.json"),
    },
    BuiltinDesign {
        name: "msadd",
        description: "scalar addition to one tile of a matrix",
        json: include_str!("../designs/msadd.json"),
    },
    BuiltinDesign {
        name: "transpose",
        description: "matrix transpose using DMA patterns only",
        json: include_str!("../designs/transpose.json"),
    },
    BuiltinDesign {
        name: "broadcast",
        description: "one stream broadcast to two workers",
        json: include_str!("../designs/broadcast.json"),
    },
    BuiltinDesign {
        name: "splitjoin",
        description: "split a stream across L2, process halves, join",
        json: include_str!("../designs/splitjoin.json"),
    },
    BuiltinDesign {
        name: "gemm",
        description: "tiled 32x32 matrix multiply in 8x8 blocks",
        json: include_str!("../designs/gemm.json"),
    },
    BuiltinDesign {
        name: "overalloc",
        description: "negative example: buffers exceed tile memory",
        json: include_str!("../designs/overalloc.json"),
    },
];

pub fn builtin(name: &str) -> Option<&'static BuiltinDesign> {
    BUILTINS.iter().find(|d| d.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::SequentialPlacer;

    #[test]
    fn builtins_parse_and_build() {
        for design in BUILTINS {
            let manifest = DesignManifest::from_json(design.json)
                .unwrap_or_else(|e| panic!("{}: {e}", design.name));
            let device = manifest
                .device
                .as_ref()
                .expect("builtins pin a device")
                .instantiate()
                .unwrap();
            manifest
                .build_program(device)
                .unwrap_or_else(|e| panic!("{}: {e}", design.name));
        }
    }

    #[test]
    fn builtins_resolve_except_overalloc() {
        for design in BUILTINS {
            let manifest = DesignManifest::from_json(design.json).unwrap();
            let device = manifest.device.as_ref().unwrap().instantiate().unwrap();
            let program = manifest.build_program(device).unwrap();
            let result = program.resolve(Some(&SequentialPlacer::new()));
            if design.name == "overalloc" {
                assert!(
                    matches!(result, Err(crate::ResolveError::ResourceExhausted { .. })),
                    "overalloc should exhaust resources"
                );
            } else {
                result.unwrap_or_else(|e| panic!("{}: {e}", design.name));
            }
        }
    }

    #[test]
    fn unknown_refs_are_rejected() {
        let json = r#"{
            "device": "npu1col1",
            "buffers": [{"shape": [8]}],
            "runtime": [
                {"op": "fill", "fifo": "nope", "buf": 0,
                 "tap": {"sizes": [8], "strides": [1]}}
            ]
        }"#;
        let manifest = DesignManifest::from_json(json).unwrap();
        let device = Device::npu1_col1();
        assert!(matches!(
            manifest.build_program(device),
            Err(ManifestError::UnknownRef { kind: "fifo", .. })
        ));
    }

    #[test]
    fn bad_json_is_a_manifest_error() {
        assert!(matches!(
            DesignManifest::from_json("{not json"),
            Err(ManifestError::Json(_))
        ));
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let manifest = DesignManifest::from_json(builtin("msadd").unwrap().json).unwrap();
        let again = DesignManifest::from_json(&manifest.to_json()).unwrap();
        assert_eq!(manifest.to_json(), again.to_json());
        assert_eq!(manifest.input_buffers(), vec![0]);
        assert_eq!(manifest.output_buffers(), vec![1]);
    }
}
