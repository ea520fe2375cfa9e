//! Comparing designs at three strictness tiers: byte-equal, equal modulo
//! declaration order, and equal up to access-equivalent transfer
//! patterns.
//!
//! Run with: cargo run --example design_diff

use tilecast::diff::{design_diff, DiffMode};
use tilecast::emitter::emit;
use tilecast::{
    Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, SequentialPlacer,
    TensorAccessPattern, Worker,
};

fn build(sizes: &[usize], strides: &[usize]) -> Result<String, Box<dyn std::error::Error>> {
    let ty = ObjectType::new(Scalar::I32, &[6]);
    let fi = ObjectFifo::new(ty.clone());
    let fo = ObjectFifo::new(ty);
    let worker = Worker::new("passthrough", [fi.cons().into(), fo.prod().into()]);
    let mut rt = Runtime::new();
    let b_in = rt.declare_buffer(Scalar::I32, &[6, 4]);
    let b_out = rt.declare_buffer(Scalar::I32, &[6, 4]);
    rt.start(&worker);
    rt.fill(
        &fi.prod(),
        b_in,
        TensorAccessPattern::new(&[6, 4], 0, sizes, strides)?,
        false,
    )?;
    rt.drain(
        &fo.cons(),
        b_out,
        TensorAccessPattern::new(&[6, 4], 0, &[6], &[1])?,
        true,
    )?;
    let design = Program::new(Device::npu1_col1(), rt).resolve(Some(&SequentialPlacer::new()))?;
    Ok(emit(&design))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let original = build(&[1, 1, 3, 2], &[0, 0, 4, 1])?;

    // Emission is canonical, so re-resolving the same design is
    // byte-identical.
    let again = build(&[1, 1, 3, 2], &[0, 0, 4, 1])?;
    assert!(design_diff(&original, &again, DiffMode::Strict)?.equal);
    println!("same design twice: strict-equal");

    // Hand-shuffling record lines breaks byte equality but not canonical
    // equality.
    let mut lines: Vec<&str> = original.lines().collect();
    let fifo_rows: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.starts_with("fifo "))
        .map(|(i, _)| i)
        .collect();
    lines.swap(fifo_rows[0], fifo_rows[1]);
    let shuffled: String = lines.iter().map(|l| format!("{l}\n")).collect();
    assert!(!design_diff(&original, &shuffled, DiffMode::Strict)?.equal);
    assert!(design_diff(&original, &shuffled, DiffMode::ModuloOrder)?.equal);
    println!("shuffled declarations: equal modulo order");

    // A re-encoded transfer pattern is a real textual difference, but the
    // traversal it describes is identical.
    let reencoded = build(&[3, 1, 1, 2], &[4, 0, 0, 1])?;
    let modulo = design_diff(&original, &reencoded, DiffMode::ModuloOrder)?;
    assert!(!modulo.equal);
    println!("re-encoded tap differs modulo order:");
    for d in &modulo.differences {
        println!("  {d}");
    }
    assert!(design_diff(&original, &reencoded, DiffMode::AccessEquiv)?.equal);
    println!("...but the designs are access-equivalent");
    Ok(())
}
