//! Splitting a stream into halves across a mem tile, processing each half
//! on its own compute tile, and joining the results back: the
//! channel-conserving L2 pattern.
//!
//! Run with: cargo run --example split_join

use tilecast::kernel::KernelRegistry;
use tilecast::sim::run;
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer,
    TensorAccessPattern, Worker, WorkerArg,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let device = Device::npu1_col4();
    let ty = ObjectType::new(Scalar::I32, &[16]);
    let fs = ObjectFifo::new(ty.clone());
    let fj = ObjectFifo::new(ty);

    // Upstream: one 16-element stream splits into two 8-element streams.
    let halves_in = fs.cons().split(2)?;
    // Downstream: two 8-element streams join into 16-element objects.
    let halves_out = fj.prod().join(2)?;

    let w0 = Worker::new(
        "add_scalar",
        [
            halves_in[0].cons().into(),
            halves_out[0].prod().into(),
            WorkerArg::scalar(100),
        ],
    );
    let w1 = Worker::new(
        "add_scalar",
        [
            halves_in[1].cons().into(),
            halves_out[1].prod().into(),
            WorkerArg::scalar(200),
        ],
    );
    // Spread the workers over two columns so each mem tile stays within
    // its channel budget.
    w0.place(device.tile_at(0, 2)?)?;
    w1.place(device.tile_at(1, 2)?)?;

    let mut rt = Runtime::new();
    let b_in = rt.declare_buffer(Scalar::I32, &[64]);
    let b_out = rt.declare_buffer(Scalar::I32, &[64]);
    let sweep = TensorAccessPattern::new(&[64], 0, &[64], &[1])?;
    rt.start(&w0);
    rt.start(&w1);
    rt.fill(&fs.prod(), b_in, sweep.clone(), false)?;
    rt.drain(&fj.cons(), b_out, sweep, true)?;

    let design = Program::new(device, rt).resolve(Some(&SequentialPlacer::new()))?;
    let input: Vec<i64> = (0..64).collect();
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[input.clone(), vec![0; 64]],
    )?;
    assert!(report.completed());

    // First half of every 16-element object went through w0 (+100), the
    // second half through w1 (+200); the join re-assembles them in order.
    for (i, &v) in input.iter().enumerate() {
        let expected = if i % 16 < 8 { v + 100 } else { v + 200 };
        assert_eq!(report.buffers[1][i], expected);
    }
    println!("split halves processed independently and re-joined in order");
    Ok(())
}
