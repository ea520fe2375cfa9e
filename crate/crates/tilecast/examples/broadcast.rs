//! Broadcast: every `cons()` call on a fifo mints another consumer, and
//! each published object is delivered to all of them.
//!
//! Run with: cargo run --example broadcast

use tilecast::kernel::KernelRegistry;
use tilecast::sim::run;
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer,
    TensorAccessPattern, Worker, WorkerArg,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ty = ObjectType::new(Scalar::I32, &[16]);
    let fi = ObjectFifo::new(ty.clone());
    let fo1 = ObjectFifo::new(ty.clone());
    let fo2 = ObjectFifo::new(ty);

    // Two consumer handles on fi: a two-way broadcast.
    let w1 = Worker::new(
        "add_scalar",
        [fi.cons().into(), fo1.prod().into(), WorkerArg::scalar(1)],
    );
    let w2 = Worker::new(
        "mul_scalar",
        [fi.cons().into(), fo2.prod().into(), WorkerArg::scalar(2)],
    );

    let mut rt = Runtime::new();
    let b_in = rt.declare_buffer(Scalar::I32, &[64]);
    let b1 = rt.declare_buffer(Scalar::I32, &[64]);
    let b2 = rt.declare_buffer(Scalar::I32, &[64]);
    let sweep = TensorAccessPattern::new(&[64], 0, &[64], &[1])?;
    rt.start(&w1);
    rt.start(&w2);
    rt.fill(&fi.prod(), b_in, sweep.clone(), false)?;
    rt.drain(&fo1.cons(), b1, sweep.clone(), true)?;
    rt.drain(&fo2.cons(), b2, sweep, true)?;

    let design = Program::new(Device::npu1_col1(), rt).resolve(Some(&SequentialPlacer::new()))?;
    let input: Vec<i64> = (0..64).collect();
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[input.clone(), vec![0; 64], vec![0; 64]],
    )?;
    assert!(report.completed());
    for (i, &v) in input.iter().enumerate() {
        assert_eq!(report.buffers[1][i], v + 1);
        assert_eq!(report.buffers[2][i], v * 2);
    }
    println!("both consumers observed every object of the broadcast stream");
    Ok(())
}
