//! Generating access-pattern sequences from tiling schemes instead of
//! hand-computing sizes and strides.
//!
//! Run with: cargo run --example tiling

use tilecast::render::{render_access_map, RenderFormat};
use tilecast::tiler::{group_tiler, simple_tiler, TilerSpec, TraversalOrder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One pattern per 3x2 tile of a 6x4 tensor, row-major over the grid.
    let tiles = simple_tiler((6, 4), (3, 2))?;
    println!("simple tiler produced {} taps:", tiles.len());
    for tap in &tiles {
        println!(
            "  offset={:<3} sizes={:?} strides={:?}",
            tap.offset(),
            tap.sizes(),
            tap.strides()
        );
    }

    // Groups traverse several tiles per pattern; repeats re-run the
    // traversal inside the same pattern (a stride-0 leading dimension).
    let banded = TilerSpec {
        group_dims: (1, 2),
        group_repeat: 2,
        ..TilerSpec::simple((6, 4), (3, 2))
    };
    let seq = group_tiler(&banded)?;
    println!(
        "\ngrouped tiler: {} taps, every element visited {} times",
        seq.len(),
        seq.access_count().max()
    );
    println!("access order heatmap:");
    let ansi = render_access_map(&seq.access_order(), RenderFormat::Ansi)?;
    print!("{}", String::from_utf8_lossy(&ansi));

    // Column-major element access inside each tile changes the order map
    // but never the footprint.
    let col_major = TilerSpec {
        within_tile_order: TraversalOrder::ColMajor,
        ..TilerSpec::simple((6, 4), (3, 2))
    };
    let col_seq = group_tiler(&col_major)?;
    assert_eq!(
        col_seq.access_count(),
        simple_tiler((6, 4), (3, 2))?.access_count()
    );
    assert_ne!(
        col_seq.access_order(),
        simple_tiler((6, 4), (3, 2))?.access_order()
    );
    println!("\ncolumn-major tiles keep the count map, change the order map");
    Ok(())
}
