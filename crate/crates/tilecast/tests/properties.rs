//! Property tests over randomly generated access patterns and tiling
//! specs.

use proptest::prelude::*;
use tilecast::tap::{access_equivalent, TensorAccessPattern};
use tilecast::tiler::{group_tiler, TilerSpec, TraversalOrder};

/// Generates valid patterns: strides are drawn as a fraction of the
/// remaining headroom so the extreme corner always stays in bounds.
fn tap_strategy() -> impl Strategy<Value = TensorAccessPattern> {
    (1usize..=2)
        .prop_flat_map(|ndims| proptest::collection::vec(1usize..=32, ndims))
        .prop_flat_map(|dims| {
            let len: usize = dims.iter().product();
            (
                Just(dims),
                0..len,
                proptest::collection::vec((1usize..=4, 0usize..=100), 1..=4),
            )
        })
        .prop_map(|(dims, offset, raw)| {
            let len: usize = dims.iter().product();
            let mut extreme = offset;
            let mut sizes = Vec::new();
            let mut strides = Vec::new();
            for (size, pct) in raw {
                let stride = if size == 1 {
                    pct % len
                } else {
                    (len - 1 - extreme) / (size - 1) * pct / 100
                };
                extreme += (size - 1) * stride;
                sizes.push(size);
                strides.push(stride);
            }
            TensorAccessPattern::new(&dims, offset, &sizes, &strides)
                .expect("construction stays in bounds")
        })
}

proptest! {
    #[test]
    fn map_invariants_hold(tap in tap_strategy()) {
        let order = tap.access_order();
        let count = tap.access_count();
        prop_assert_eq!(count.sum() as usize, tap.total_iterations());
        prop_assert_eq!(order.max() as usize, tap.total_iterations() - 1);
        for (o, c) in order.values().iter().zip(count.values()) {
            prop_assert_eq!(*o == -1, *c == 0);
        }
    }

    #[test]
    fn strict_equality_implies_access_equivalence(tap in tap_strategy()) {
        let copy = tap.clone();
        prop_assert!(tap.strictly_equal(&copy));
        prop_assert!(access_equivalent(&tap, &copy));
    }

    #[test]
    fn unit_dim_insertion_preserves_equivalence(
        tap in tap_strategy(),
        at_seed in 0usize..=4,
    ) {
        let mut sizes = tap.sizes().to_vec();
        let mut strides = tap.strides().to_vec();
        let at = at_seed % (sizes.len() + 1);
        sizes.insert(at, 1);
        strides.insert(at, 0);
        let padded = TensorAccessPattern::with_max_rank(
            tap.tensor_dims(),
            tap.offset(),
            &sizes,
            &strides,
            5,
        )
        .unwrap();
        prop_assert!(!tap.strictly_equal(&padded) || sizes == tap.sizes());
        prop_assert!(access_equivalent(&tap, &padded));
    }

    #[test]
    fn enumeration_stays_in_bounds(tap in tap_strategy()) {
        let len = tap.tensor_len();
        prop_assert!(tap.offsets().all(|off| off < len));
        prop_assert_eq!(tap.offsets().count(), tap.total_iterations());
    }
}

/// Exhaustive tiler specs built from factor pairs so divisibility holds by
/// construction.
fn tiler_strategy() -> impl Strategy<Value = TilerSpec> {
    (
        1usize..=4,
        1usize..=4,
        1usize..=4,
        1usize..=4,
        any::<bool>(),
        any::<bool>(),
        0usize..=2,
    )
        .prop_map(
            |(tile_r, tile_c, grid_r, grid_c, row_major_tiles, group_cols, group_pick)| {
                let group_dims = match group_pick {
                    0 => (1, 1),
                    1 if group_cols => (1, grid_c),
                    _ => (grid_r, 1),
                };
                TilerSpec {
                    tensor_dims: (tile_r * grid_r, tile_c * grid_c),
                    tile_dims: (tile_r, tile_c),
                    within_tile_order: if row_major_tiles {
                        TraversalOrder::RowMajor
                    } else {
                        TraversalOrder::ColMajor
                    },
                    group_dims,
                    within_group_order: TraversalOrder::RowMajor,
                    group_repeat: 1,
                    group_step: (1, 1),
                }
            },
        )
}

proptest! {
    #[test]
    fn exhaustive_tilings_cover_once_in_some_order(spec in tiler_strategy()) {
        let seq = match group_tiler(&spec) {
            Ok(seq) => seq,
            Err(tilecast::tiler::TilerError::RankOverflow { .. }) => return Ok(()),
            Err(other) => return Err(TestCaseError::fail(format!("{spec:?}: {other}"))),
        };
        let count = seq.access_count();
        prop_assert!(count.values().iter().all(|&c| c == 1));
        let mut order: Vec<i64> = seq.access_order().values().to_vec();
        order.sort_unstable();
        let total = (spec.tensor_dims.0 * spec.tensor_dims.1) as i64;
        prop_assert_eq!(order, (0..total).collect::<Vec<i64>>());
    }

    #[test]
    fn tile_traversal_order_never_changes_counts(spec in tiler_strategy()) {
        let flipped = TilerSpec {
            within_tile_order: match spec.within_tile_order {
                TraversalOrder::RowMajor => TraversalOrder::ColMajor,
                TraversalOrder::ColMajor => TraversalOrder::RowMajor,
            },
            ..spec.clone()
        };
        let (a, b) = match (group_tiler(&spec), group_tiler(&flipped)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(()),
        };
        prop_assert_eq!(a.access_count(), b.access_count());
    }
}
