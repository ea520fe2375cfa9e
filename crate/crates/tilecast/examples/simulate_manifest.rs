//! Loading a design from its JSON manifest (the same format the CLI
//! consumes), resolving it, and running it, including the deadlock
//! report a starved design produces.
//!
//! Run with: cargo run --example simulate_manifest

use tilecast::kernel::KernelRegistry;
use tilecast::manifest::{builtin, DesignManifest};
use tilecast::sim::{run, RunStatus};
use tilecast::SequentialPlacer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Built-in manifests double as documentation of the JSON schema.
    let manifest = DesignManifest::from_json(builtin("vvadd").unwrap().json)?;
    let device = manifest.device.as_ref().unwrap().instantiate()?;
    let design = manifest
        .build_program(device)?
        .resolve(Some(&SequentialPlacer::new()))?;

    let a: Vec<i64> = (0..64).collect();
    let b: Vec<i64> = (0..64).map(|v| v * 100).collect();
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[a.clone(), b.clone(), vec![0; 64]],
    )?;
    assert!(report.completed());
    assert!(report.buffers[2]
        .iter()
        .enumerate()
        .all(|(i, &v)| v == a[i] + b[i]));
    println!("vvadd from manifest: ok in {} steps", report.steps);

    // Starve one input of the same design: the run reports the blocked
    // actors instead of hanging.
    let mut short = manifest.clone();
    if let tilecast::manifest::OpDecl::Fill { tap, .. } = &mut short.runtime[2] {
        tap.sizes = vec![32]; // only half of fb's data
    }
    let device = short.device.as_ref().unwrap().instantiate()?;
    let design = short
        .build_program(device)?
        .resolve(Some(&SequentialPlacer::new()))?;
    let report = run(
        &design,
        &KernelRegistry::with_builtins(),
        &[a, b, vec![0; 64]],
    )?;
    match report.status {
        RunStatus::Deadlock { blocked } => {
            println!("starved design deadlocked as expected:");
            for b in blocked {
                println!("  {b}");
            }
        }
        RunStatus::Completed => unreachable!("starved design cannot complete"),
    }
    Ok(())
}
