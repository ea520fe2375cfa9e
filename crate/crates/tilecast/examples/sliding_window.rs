//! Sliding windows over a stream: a worker binding with acquire=2,
//! release=1 tops the held set up to two objects each iteration and
//! retires only the oldest, so consecutive iterations see overlapping
//! pairs.
//!
//! Also demonstrates registering a host kernel.
//!
//! Run with: cargo run --example sliding_window

use std::sync::Arc;
use tilecast::kernel::{ArgKind, KernelError, KernelRegistry};
use tilecast::sim::run;
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer,
    TensorAccessPattern, Worker, WorkerArg,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = KernelRegistry::with_builtins();
    // Average each element with its successor object.
    registry.register(
        "pairwise_mean",
        vec![ArgKind::Cons, ArgKind::Prod],
        Arc::new(|io| {
            let window = io.cons(0)?;
            if window.len() != 2 {
                return Err(KernelError::BadArg("needs a window of 2".into()));
            }
            let (older, newer) = (window[0].clone(), window[1].clone());
            let out = io.prod_obj(1)?;
            for i in 0..out.len() {
                out[i] = (older[i] + newer[i]) / 2;
            }
            Ok(())
        }),
    )?;

    let ty = ObjectType::new(Scalar::I32, &[8]);
    let fi = ObjectFifo::new(ty.clone());
    let fo = ObjectFifo::new(ty);
    let worker = Worker::new(
        "pairwise_mean",
        [WorkerArg::windowed(fi.cons(), 2, 1)?, fo.prod().into()],
    );

    let mut rt = Runtime::new();
    let b_in = rt.declare_buffer(Scalar::I32, &[48]);
    let b_out = rt.declare_buffer(Scalar::I32, &[40]);
    rt.start(&worker);
    // 6 input objects in, 5 overlapping pairs out.
    rt.fill(
        &fi.prod(),
        b_in,
        TensorAccessPattern::new(&[48], 0, &[48], &[1])?,
        false,
    )?;
    rt.drain(
        &fo.cons(),
        b_out,
        TensorAccessPattern::new(&[40], 0, &[40], &[1])?,
        true,
    )?;

    let design = Program::new(Device::npu1_col1(), rt)
        .resolve_with(Some(&SequentialPlacer::new()), &registry)?;
    let input: Vec<i64> = (0..48).map(|v| v * 10).collect();
    let report = run(&design, &registry, &[input.clone(), vec![0; 40]])?;
    assert!(report.completed());

    for pair in 0..5 {
        for i in 0..8 {
            let older = input[pair * 8 + i];
            let newer = input[(pair + 1) * 8 + i];
            assert_eq!(report.buffers[1][pair * 8 + i], (older + newer) / 2);
        }
    }
    println!("five overlapping windows from six objects, oldest retired first");
    Ok(())
}
