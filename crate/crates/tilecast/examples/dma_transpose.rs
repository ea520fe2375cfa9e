//! Transposing a matrix with access patterns alone: no compute kernel,
//! just a fill, an L2 forward stage, and a drain whose pattern scatters
//! columns.
//!
//! Run with: cargo run --example dma_transpose

use tilecast::kernel::KernelRegistry;
use tilecast::sim::run;
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer, TensorAccessPattern,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    const H: usize = 8;
    const W: usize = 16;

    let row_ty = ObjectType::new(Scalar::I32, &[W]);
    let fi = ObjectFifo::new(row_ty);
    // Stage the stream through a mem tile; the drain side pulls from it.
    let ft = fi.cons().forward()?;

    let mut rt = Runtime::new();
    let src = rt.declare_buffer(Scalar::I32, &[H, W]);
    let dst = rt.declare_buffer(Scalar::I32, &[W, H]);
    // Row-major in...
    rt.fill(
        &fi.prod(),
        src,
        TensorAccessPattern::new(&[H, W], 0, &[H, W], &[W, 1])?,
        false,
    )?;
    // ...transposed out: element t of the stream lands at column-major
    // position t of the destination.
    rt.drain(
        &ft.cons(),
        dst,
        TensorAccessPattern::new(&[W, H], 0, &[H, W], &[1, H])?,
        true,
    )?;

    let design = Program::new(Device::npu1_col1(), rt).resolve(Some(&SequentialPlacer::new()))?;
    let input: Vec<i64> = (0..(H * W) as i64).collect();
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[input.clone(), vec![0; H * W]],
    )?;
    assert!(report.completed());
    for r in 0..H {
        for c in 0..W {
            assert_eq!(report.buffers[1][c * H + r], input[r * W + c]);
        }
    }
    println!("transposed a {H}x{W} matrix using DMA patterns only");
    Ok(())
}
