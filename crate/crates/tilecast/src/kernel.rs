//! Kernel routines workers execute, plus the registry that names them.
//!
//! A kernel body runs once per worker iteration over the objects currently
//! held by the worker's fifo windows: consumer objects are read-only,
//! producer objects are writable, and scalars come from the binding.
//! Bodies are plain host routines; the registry ships the built-ins and
//! accepts host-registered ones.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("kernel `{0}` is already registered")]
    DuplicateKernel(String),
    #[error("kernel argument error: {0}")]
    BadArg(String),
    #[error("kernel arithmetic error: {0}")]
    Arith(String),
    #[error("kernel name `{0}` is not a valid identifier")]
    BadName(String),
}

/// Role of one kernel argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    Cons,
    Prod,
    Scalar,
}

impl fmt::Display for ArgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArgKind::Cons => "cons",
            ArgKind::Prod => "prod",
            ArgKind::Scalar => "scalar",
        })
    }
}

enum IoArg {
    Cons {
        objs: Vec<Vec<i64>>,
        shape: Vec<usize>,
    },
    Prod {
        objs: Vec<Vec<i64>>,
        shape: Vec<usize>,
    },
    Scalar(i64),
}

/// The per-iteration view a kernel body works on. Consumer objects are
/// ordered oldest-first; the same is true for held producer objects.
pub struct KernelIo {
    args: Vec<IoArg>,
}

impl KernelIo {
    pub(crate) fn new() -> Self {
        Self { args: Vec::new() }
    }

    pub(crate) fn push_cons(&mut self, objs: Vec<Vec<i64>>, shape: Vec<usize>) {
        self.args.push(IoArg::Cons { objs, shape });
    }

    pub(crate) fn push_prod(&mut self, objs: Vec<Vec<i64>>, shape: Vec<usize>) {
        self.args.push(IoArg::Prod { objs, shape });
    }

    pub(crate) fn push_scalar(&mut self, value: i64) {
        self.args.push(IoArg::Scalar(value));
    }

    pub(crate) fn take_prod(&mut self, arg: usize) -> Vec<Vec<i64>> {
        match &mut self.args[arg] {
            IoArg::Prod { objs, .. } => std::mem::take(objs),
            _ => Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Held consumer objects of argument `arg`, oldest first.
    pub fn cons(&self, arg: usize) -> Result<&[Vec<i64>], KernelError> {
        match self.args.get(arg) {
            Some(IoArg::Cons { objs, .. }) => Ok(objs),
            _ => Err(KernelError::BadArg(format!(
                "argument {arg} is not a consumer binding"
            ))),
        }
    }

    /// Single-object consumer shorthand.
    pub fn cons_obj(&self, arg: usize) -> Result<&[i64], KernelError> {
        let objs = self.cons(arg)?;
        if objs.len() != 1 {
            return Err(KernelError::BadArg(format!(
                "argument {arg} holds {} objects, expected exactly 1",
                objs.len()
            )));
        }
        Ok(&objs[0])
    }

    /// Held producer objects of argument `arg`, writable, oldest first.
    pub fn prod(&mut self, arg: usize) -> Result<&mut [Vec<i64>], KernelError> {
        match self.args.get_mut(arg) {
            Some(IoArg::Prod { objs, .. }) => Ok(objs),
            _ => Err(KernelError::BadArg(format!(
                "argument {arg} is not a producer binding"
            ))),
        }
    }

    /// Single-object producer shorthand.
    pub fn prod_obj(&mut self, arg: usize) -> Result<&mut [i64], KernelError> {
        let objs = self.prod(arg)?;
        if objs.len() != 1 {
            return Err(KernelError::BadArg(format!(
                "argument {arg} holds {} objects, expected exactly 1",
                objs.len()
            )));
        }
        Ok(&mut objs[0])
    }

    pub fn scalar(&self, arg: usize) -> Result<i64, KernelError> {
        match self.args.get(arg) {
            Some(IoArg::Scalar(v)) => Ok(*v),
            _ => Err(KernelError::BadArg(format!(
                "argument {arg} is not a scalar binding"
            ))),
        }
    }

    /// Object shape of a fifo argument.
    pub fn shape(&self, arg: usize) -> Result<&[usize], KernelError> {
        match self.args.get(arg) {
            Some(IoArg::Cons { shape, .. }) | Some(IoArg::Prod { shape, .. }) => Ok(shape),
            _ => Err(KernelError::BadArg(format!(
                "argument {arg} has no object shape"
            ))),
        }
    }
}

pub type KernelFn = Arc<dyn Fn(&mut KernelIo) -> Result<(), KernelError> + Send + Sync>;

#[derive(Clone)]
pub struct KernelDef {
    pub signature: Vec<ArgKind>,
    pub body: KernelFn,
}

/// Named kernels available to workers. `with_builtins` ships the standard
/// set; `register` adds host routines.
#[derive(Clone)]
pub struct KernelRegistry {
    kernels: BTreeMap<String, KernelDef>,
}

impl Default for KernelRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

fn ident_ok(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit())
}

impl KernelRegistry {
    pub fn empty() -> Self {
        Self {
            kernels: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        let mut add = |name: &str, sig: Vec<ArgKind>, f: KernelFn| {
            reg.kernels.insert(
                name.to_string(),
                KernelDef {
                    signature: sig,
                    body: f,
                },
            );
        };
        use ArgKind::{Cons, Prod, Scalar};

        add(
            "passthrough",
            vec![Cons, Prod],
            Arc::new(|io| unary(io, |v, _| v, 0)),
        );
        add(
            "add_scalar",
            vec![Cons, Prod, Scalar],
            Arc::new(|io| {
                let s = io.scalar(2)?;
                unary(io, |v, s| v + s, s)
            }),
        );
        add(
            "mul_scalar",
            vec![Cons, Prod, Scalar],
            Arc::new(|io| {
                let s = io.scalar(2)?;
                unary(io, |v, s| v * s, s)
            }),
        );
        add(
            "relu",
            vec![Cons, Prod],
            Arc::new(|io| unary(io, |v, _| v.max(0), 0)),
        );
        add(
            "eltwise_add",
            vec![Cons, Cons, Prod],
            Arc::new(|io| binary(io, |a, b| Ok(a + b))),
        );
        add(
            "eltwise_mul",
            vec![Cons, Cons, Prod],
            Arc::new(|io| binary(io, |a, b| Ok(a * b))),
        );
        add(
            "eltwise_max",
            vec![Cons, Cons, Prod],
            Arc::new(|io| binary(io, |a, b| Ok(a.max(b)))),
        );
        add(
            "eltwise_min",
            vec![Cons, Cons, Prod],
            Arc::new(|io| binary(io, |a, b| Ok(a.min(b)))),
        );
        add(
            "eltwise_mod",
            vec![Cons, Cons, Prod],
            Arc::new(|io| {
                binary(io, |a, b| {
                    if b == 0 {
                        Err(KernelError::Arith("modulo by zero".into()))
                    } else {
                        Ok(a % b)
                    }
                })
            }),
        );
        add(
            "matmul_block",
            vec![Cons, Cons, Prod],
            Arc::new(matmul_block),
        );
        reg
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        signature: Vec<ArgKind>,
        body: KernelFn,
    ) -> Result<(), KernelError> {
        let name = name.into();
        if !ident_ok(&name) {
            return Err(KernelError::BadName(name));
        }
        if self.kernels.contains_key(&name) {
            return Err(KernelError::DuplicateKernel(name));
        }
        self.kernels.insert(name, KernelDef { signature, body });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&KernelDef> {
        self.kernels.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.kernels.keys().map(String::as_str)
    }
}

/// Elementwise map from the single held input object to the single held
/// output object.
fn unary(io: &mut KernelIo, f: impl Fn(i64, i64) -> i64, s: i64) -> Result<(), KernelError> {
    let input = io.cons_obj(0)?.to_vec();
    let out = io.prod_obj(1)?;
    if input.len() != out.len() {
        return Err(KernelError::BadArg(format!(
            "object sizes differ: {} vs {}",
            input.len(),
            out.len()
        )));
    }
    for (o, v) in out.iter_mut().zip(input) {
        *o = f(v, s);
    }
    Ok(())
}

fn binary(
    io: &mut KernelIo,
    f: impl Fn(i64, i64) -> Result<i64, KernelError>,
) -> Result<(), KernelError> {
    let a = io.cons_obj(0)?.to_vec();
    let b = io.cons_obj(1)?.to_vec();
    let out = io.prod_obj(2)?;
    if a.len() != b.len() || a.len() != out.len() {
        return Err(KernelError::BadArg(format!(
            "object sizes differ: {} vs {} vs {}",
            a.len(),
            b.len(),
            out.len()
        )));
    }
    for i in 0..out.len() {
        out[i] = f(a[i], b[i])?;
    }
    Ok(())
}

/// Block matrix product with accumulation over the held window: with k
/// pairs of held (m x p) and (p x n) blocks, writes `sum_k A_k * B_k` into
/// the single held (m x n) output block.
fn matmul_block(io: &mut KernelIo) -> Result<(), KernelError> {
    let a_shape = io.shape(0)?.to_vec();
    let b_shape = io.shape(1)?.to_vec();
    let c_shape = io.shape(2)?.to_vec();
    let (m, p) = block_dims(&a_shape)?;
    let (p2, n) = block_dims(&b_shape)?;
    let (m2, n2) = block_dims(&c_shape)?;
    if p != p2 || m != m2 || n != n2 {
        return Err(KernelError::BadArg(format!(
            "incompatible block shapes {a_shape:?} x {b_shape:?} -> {c_shape:?}"
        )));
    }
    let a_blocks = io.cons(0)?.to_vec();
    let b_blocks = io.cons(1)?.to_vec();
    if a_blocks.len() != b_blocks.len() {
        return Err(KernelError::BadArg(format!(
            "held block counts differ: {} vs {}",
            a_blocks.len(),
            b_blocks.len()
        )));
    }
    let out = io.prod_obj(2)?;
    out.fill(0);
    for (a, b) in a_blocks.iter().zip(&b_blocks) {
        for i in 0..m {
            for k in 0..p {
                let aik = a[i * p + k];
                if aik == 0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    Ok(())
}

fn block_dims(shape: &[usize]) -> Result<(usize, usize), KernelError> {
    match shape {
        [m, n] => Ok((*m, *n)),
        other => Err(KernelError::BadArg(format!(
            "matmul blocks must be 2-D, got {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn io_with(cons: Vec<Vec<i64>>, out_len: usize) -> KernelIo {
        let mut io = KernelIo::new();
        let shape = vec![cons[0].len()];
        io.push_cons(cons, shape);
        io.push_prod(vec![vec![0; out_len]], vec![out_len]);
        io
    }

    #[test]
    fn builtin_set_is_complete() {
        let reg = KernelRegistry::with_builtins();
        for name in [
            "passthrough",
            "add_scalar",
            "mul_scalar",
            "eltwise_add",
            "eltwise_mul",
            "eltwise_max",
            "eltwise_min",
            "eltwise_mod",
            "relu",
            "matmul_block",
        ] {
            assert!(reg.get(name).is_some(), "missing builtin {name}");
        }
    }

    #[test]
    fn register_rejects_duplicates() {
        let mut reg = KernelRegistry::with_builtins();
        let body: KernelFn = Arc::new(|_| Ok(()));
        reg.register("square", vec![ArgKind::Cons, ArgKind::Prod], body.clone())
            .unwrap();
        assert_eq!(
            reg.register("square", vec![], body.clone()).unwrap_err(),
            KernelError::DuplicateKernel("square".into())
        );
        assert_eq!(
            reg.register("passthrough", vec![], body.clone())
                .unwrap_err(),
            KernelError::DuplicateKernel("passthrough".into())
        );
        assert!(matches!(
            reg.register("bad name", vec![], body).unwrap_err(),
            KernelError::BadName(_)
        ));
    }

    #[test]
    fn unary_kernels_compute() {
        let reg = KernelRegistry::with_builtins();
        let mut io = io_with(vec![vec![-2, 0, 3]], 3);
        (reg.get("relu").unwrap().body)(&mut io).unwrap();
        assert_eq!(io.prod(1).unwrap()[0], vec![0, 0, 3]);

        let mut io = KernelIo::new();
        io.push_cons(vec![vec![1, 2, 3]], vec![3]);
        io.push_prod(vec![vec![0; 3]], vec![3]);
        io.push_scalar(10);
        (reg.get("add_scalar").unwrap().body)(&mut io).unwrap();
        assert_eq!(io.prod(1).unwrap()[0], vec![11, 12, 13]);
    }

    #[test]
    fn mod_by_zero_is_reported() {
        let reg = KernelRegistry::with_builtins();
        let mut io = KernelIo::new();
        io.push_cons(vec![vec![1]], vec![1]);
        io.push_cons(vec![vec![0]], vec![1]);
        io.push_prod(vec![vec![0]], vec![1]);
        assert!(matches!(
            (reg.get("eltwise_mod").unwrap().body)(&mut io),
            Err(KernelError::Arith(_))
        ));
    }

    #[test]
    fn matmul_accumulates_over_window() {
        let reg = KernelRegistry::with_builtins();
        let mut io = KernelIo::new();
        // Two (2x2) x (2x2) products: I*B0 + 2I*B1.
        io.push_cons(vec![vec![1, 0, 0, 1], vec![2, 0, 0, 2]], vec![2, 2]);
        io.push_cons(vec![vec![1, 2, 3, 4], vec![10, 20, 30, 40]], vec![2, 2]);
        io.push_prod(vec![vec![0; 4]], vec![2, 2]);
        (reg.get("matmul_block").unwrap().body)(&mut io).unwrap();
        assert_eq!(io.prod(2).unwrap()[0], vec![21, 42, 63, 84]);
    }
}
