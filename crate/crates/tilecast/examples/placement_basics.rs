//! Placement: hints, manual pins, the sequential placer, and what the
//! validator rejects.
//!
//! Run with: cargo run --example placement_basics

use tilecast::{
    Device, ObjectFifo, ObjectType, Program, ResolveError, Runtime, Scalar, SequentialPlacer,
    TensorAccessPattern, Worker, WorkerArg,
};

fn build(device: Device, pin_worker: bool) -> Result<Program, Box<dyn std::error::Error>> {
    let ty = ObjectType::new(Scalar::I32, &[16]);
    let fi = ObjectFifo::new(ty.clone());
    let fo = ObjectFifo::new(ty);
    let worker = Worker::new(
        "add_scalar",
        [fi.cons().into(), fo.prod().into(), WorkerArg::scalar(7)],
    );
    if pin_worker {
        // Partial placement: the placer must respect this and fill in the
        // rest around it.
        worker.place(device.tile_at(2, 4)?)?;
    }
    let mut rt = Runtime::new();
    let b_in = rt.declare_buffer(Scalar::I32, &[64]);
    let b_out = rt.declare_buffer(Scalar::I32, &[64]);
    let sweep = TensorAccessPattern::new(&[64], 0, &[64], &[1])?;
    rt.start(&worker);
    rt.fill(&fi.prod(), b_in, sweep.clone(), false)?;
    rt.drain(&fo.cons(), b_out, sweep, true)?;
    Ok(Program::new(device, rt))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Without a placer, an unplaced design fails to resolve.
    let err = build(Device::npu1_col4(), false)?
        .resolve(None)
        .unwrap_err();
    assert!(matches!(err, ResolveError::Unplaced { .. }));
    println!("no placer, no placement: {err}");

    // The sequential placer fills compute tiles column-major and keeps
    // shim/mem endpoints in the same column as their compute peer.
    let design = build(Device::npu1_col4(), false)?.resolve(Some(&SequentialPlacer::new()))?;
    let worker_tile = design.workers[0].tile;
    println!(
        "sequential placement: worker at {worker_tile}, fill at {}, drain at {}",
        design.fifos[0].producer.tile, design.fifos[1].consumers[0].tile
    );
    assert_eq!(design.fifos[0].producer.tile.col, worker_tile.col);

    // A pinned worker stays put; shim endpoints follow its column.
    let pinned = build(Device::npu1_col4(), true)?.resolve(Some(&SequentialPlacer::new()))?;
    assert_eq!(
        (pinned.workers[0].tile.col, pinned.workers[0].tile.row),
        (2, 4)
    );
    assert_eq!(pinned.fifos[0].producer.tile.col, 2);
    println!(
        "partial placement respected: worker pinned to {}, shims follow",
        pinned.workers[0].tile
    );

    // Budgets are validated at resolution: objects too large for a
    // compute tile's scratchpad are rejected, not silently placed.
    let ty = ObjectType::new(Scalar::I32, &[128, 64]);
    let fi = ObjectFifo::new(ty.clone());
    let fo = ObjectFifo::new(ty);
    let worker = Worker::new("passthrough", [fi.cons().into(), fo.prod().into()]);
    let mut rt = Runtime::new();
    let b_in = rt.declare_buffer(Scalar::I32, &[128, 64]);
    let b_out = rt.declare_buffer(Scalar::I32, &[128, 64]);
    let sweep = TensorAccessPattern::new(&[128, 64], 0, &[128, 64], &[64, 1])?;
    rt.start(&worker);
    rt.fill(&fi.prod(), b_in, sweep.clone(), false)?;
    rt.drain(&fo.cons(), b_out, sweep, true)?;
    let err = Program::new(Device::npu1_col1(), rt)
        .resolve(Some(&SequentialPlacer::new()))
        .unwrap_err();
    assert!(matches!(err, ResolveError::ResourceExhausted { .. }));
    println!("over-allocation rejected: {err}");
    Ok(())
}
