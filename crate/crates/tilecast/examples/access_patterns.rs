//! Tensor access patterns: construction, offset enumeration, access
//! order/count maps, strict vs access equivalence, and heatmap rendering.
//!
//! Run with: cargo run --example access_patterns

use tilecast::render::{render_access_map, RenderFormat};
use tilecast::tap::{access_equivalent, TensorAccessPattern, TensorAccessSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Tile a 6x4 tensor into 3x2 tiles and pick the upper-left and
    // lower-right tile. Dimension 0 is outermost; strides are in elements.
    let tap00 = TensorAccessPattern::new(&[6, 4], 0, &[1, 1, 3, 2], &[0, 0, 4, 1])?;
    let tap11 = TensorAccessPattern::new(&[6, 4], 14, &[1, 1, 3, 2], &[0, 0, 4, 1])?;

    println!("tap00 offsets: {:?}", tap00.offsets().collect::<Vec<_>>());
    println!("tap11 offsets: {:?}", tap11.offsets().collect::<Vec<_>>());

    // Access maps formalize what a pattern touches, and when.
    assert_eq!(tap00.access_order().max(), 3 * 2 - 1);
    assert_eq!(tap00.access_count().sum(), 3 * 2);

    let taps0 = TensorAccessSequence::from_taps(vec![tap00.clone(), tap11])?;
    assert_eq!(taps0.access_order().max(), 2 * (3 * 2) - 1);
    assert_eq!(taps0.access_count().max(), 1);
    println!(
        "sequence order max = {}, count max = {}",
        taps0.access_order().max(),
        taps0.access_count().max()
    );

    // Same traversal, different encoding: strictly unequal yet access
    // equivalent. DMA rank/size limits make such re-encodings useful.
    let reencoded = TensorAccessPattern::new(&[6, 4], 0, &[3, 1, 1, 2], &[4, 0, 0, 1])?;
    assert!(!tap00.strictly_equal(&reencoded));
    assert!(access_equivalent(&tap00, &reencoded));
    println!("re-encoded tap is access-equivalent to tap00");

    // Heatmaps for terminals and files.
    println!("\naccess order of the two-tile sequence:");
    let ansi = render_access_map(&taps0.access_order(), RenderFormat::Ansi)?;
    print!("{}", String::from_utf8_lossy(&ansi));

    let csv = render_access_map(&taps0.access_count(), RenderFormat::Csv)?;
    println!("access count as csv:\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
