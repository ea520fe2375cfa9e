//! Tiled matrix multiplication where every transfer pattern comes from
//! the tiler instead of hand-written strides: 32x32 matrices in 8x8
//! blocks, with the worker accumulating over a window of four block pairs
//! per output block.
//!
//! Run with: cargo run --example tiled_gemm

use tilecast::kernel::KernelRegistry;
use tilecast::sim::run;
use tilecast::tiler::{group_tiler, TilerSpec, TraversalOrder};
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer, Worker, WorkerArg,
};

const N: usize = 32; // matrix edge
const B: usize = 8; // block edge
const K: usize = N / B; // blocks per edge

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A: for each output block row, the whole block-row of A, repeated
    // once per output block column. One tap per block row.
    let a_taps = group_tiler(&TilerSpec {
        group_dims: (1, K),
        group_repeat: K,
        ..TilerSpec::simple((N, N), (B, B))
    })?;
    assert_eq!(a_taps.len(), K);

    // B: the full matrix in column-of-blocks order, repeated for every
    // output block row; the tiler's merge rule fits this into four
    // dimensions, which hand-written strides rarely get right first try.
    let b_taps = group_tiler(&TilerSpec {
        group_dims: (K, K),
        within_group_order: TraversalOrder::ColMajor,
        group_repeat: K,
        ..TilerSpec::simple((N, N), (B, B))
    })?;
    assert_eq!(b_taps.len(), 1);

    // C: output blocks row-major, one block per worker iteration.
    let c_taps = group_tiler(&TilerSpec {
        group_dims: (K, K),
        ..TilerSpec::simple((N, N), (B, B))
    })?;
    assert_eq!(c_taps.len(), 1);

    let block_ty = ObjectType::new(Scalar::I32, &[B, B]);
    let fa = ObjectFifo::with_depth(block_ty.clone(), K)?;
    let fb = ObjectFifo::with_depth(block_ty.clone(), K)?;
    let fc = ObjectFifo::new(block_ty);

    // matmul_block sums A_k * B_k over the held window: K block pairs in,
    // one C block out.
    let worker = Worker::new(
        "matmul_block",
        [
            WorkerArg::windowed(fa.cons(), K, K)?,
            WorkerArg::windowed(fb.cons(), K, K)?,
            fc.prod().into(),
        ],
    );

    let mut rt = Runtime::new();
    let buf_a = rt.declare_buffer(Scalar::I32, &[N, N]);
    let buf_b = rt.declare_buffer(Scalar::I32, &[N, N]);
    let buf_c = rt.declare_buffer(Scalar::I32, &[N, N]);
    rt.start(&worker);
    for tap in &a_taps {
        rt.fill(&fa.prod(), buf_a, tap.clone(), false)?;
    }
    rt.fill(&fb.prod(), buf_b, b_taps[0].clone(), false)?;
    rt.drain(&fc.cons(), buf_c, c_taps[0].clone(), true)?;

    let design = Program::new(Device::npu1_col1(), rt).resolve(Some(&SequentialPlacer::new()))?;

    let a: Vec<i64> = (0..(N * N) as i64).map(|v| v % 7 - 3).collect();
    let b: Vec<i64> = (0..(N * N) as i64).map(|v| (v * 5) % 11 - 5).collect();
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[a.clone(), b.clone(), vec![0; N * N]],
    )?;
    assert!(report.completed());

    let mut reference = vec![0i64; N * N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i * N + k];
            for j in 0..N {
                reference[i * N + j] += aik * b[k * N + j];
            }
        }
    }
    assert_eq!(report.buffers[2], reference);
    println!("tiler-generated data movement reproduced the reference product exactly");
    println!(
        "A fills: {} taps of sizes {:?}; B fill merged to sizes {:?}",
        a_taps.len(),
        a_taps[0].sizes(),
        b_taps[0].sizes()
    );
    Ok(())
}
