//! The canonical small design: stream one 8x8 tile of a 16x16 matrix
//! through a worker that adds a scalar, and collect it back.
//!
//! Shows the whole lifecycle: fifos with inferred endpoints, a worker
//! bound to handles, the runtime sequence, placement via the sequential
//! placer, IR emission, and simulation.
//!
//! Run with: cargo run --example matrix_scalar_add

use tilecast::emitter::emit;
use tilecast::kernel::KernelRegistry;
use tilecast::sim::run;
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer,
    TensorAccessPattern, Worker, WorkerArg,
};

const MH: usize = 16;
const MW: usize = 16;
const TH: usize = 8;
const TW: usize = 8;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tile_ty = ObjectType::new(Scalar::I32, &[TH, TW]);
    let fi = ObjectFifo::new(tile_ty.clone());
    let fo = ObjectFifo::new(tile_ty);

    let worker = Worker::new(
        "add_scalar",
        [fi.cons().into(), fo.prod().into(), WorkerArg::scalar(1)],
    );

    let mut rt = Runtime::new();
    let dati = rt.declare_buffer(Scalar::I32, &[MH, MW]);
    let dato = rt.declare_buffer(Scalar::I32, &[MH, MW]);
    let tile_tap = TensorAccessPattern::new(&[MH, MW], 0, &[1, 1, TH, TW], &[0, 0, MW, 1])?;
    rt.start(&worker);
    rt.fill(&fi.prod(), dati, tile_tap.clone(), false)?;
    rt.drain(&fo.cons(), dato, tile_tap, true)?;

    let design = Program::new(Device::npu1_col1(), rt).resolve(Some(&SequentialPlacer::new()))?;
    println!("{}", emit(&design));

    let input: Vec<i64> = (0..(MH * MW) as i64).collect();
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[input.clone(), vec![0; MH * MW]],
    )?;
    assert!(report.completed());

    // The streamed tile came back incremented; the rest of the output
    // buffer keeps its zero initialization.
    for r in 0..MH {
        for c in 0..MW {
            let expected = if r < TH && c < TW {
                input[r * MW + c] + 1
            } else {
                0
            };
            assert_eq!(report.buffers[1][r * MW + c], expected);
        }
    }
    println!(
        "tile incremented correctly; {} objects moved per fifo",
        report.fifo_transfers[0].objects
    );
    Ok(())
}
