//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Expected values are exact throughout. Where a criterion calls for an
//! independent oracle, the oracle lives here and shares no code with the
//! library paths it checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use tilecast::diff::{design_diff, DiffMode};
use tilecast::emitter::emit;
use tilecast::kernel::KernelRegistry;
use tilecast::manifest::{builtin, DesignManifest};
use tilecast::placement::SequentialPlacer;
use tilecast::sim::{run, run_with, Schedule, SimOptions};
use tilecast::tap::{access_equivalent, AccessMap, TensorAccessPattern, TensorAccessSequence};
use tilecast::tiler::{group_tiler, simple_tiler, TilerSpec, TraversalOrder};
use tilecast::{Device, ObjectFifo, ObjectType, Program, Runtime, Scalar, TileKind, Worker};

fn criterion(number: u32, name: &str, body: impl FnOnce() + UnwindSafe) {
    let result = catch_unwind(body);
    match &result {
        Ok(()) => println!("criterion {number} ({name}): PASS"),
        Err(_) => println!("criterion {number} ({name}): FAIL"),
    }
    if let Err(panic) = result {
        resume_unwind(panic);
    }
}

// ---------------------------------------------------------------------
// Independent enumeration oracle: plain nested loops, no iterator reuse.
// ---------------------------------------------------------------------

fn oracle_maps(
    dims: &[usize],
    offset: usize,
    sizes: &[usize],
    strides: &[usize],
    order: &mut [i64],
    count: &mut [i64],
    t: &mut i64,
) {
    fn nest(
        depth: usize,
        base: usize,
        sizes: &[usize],
        strides: &[usize],
        order: &mut [i64],
        count: &mut [i64],
        t: &mut i64,
    ) {
        if depth == sizes.len() {
            order[base] = *t;
            count[base] += 1;
            *t += 1;
            return;
        }
        for i in 0..sizes[depth] {
            nest(
                depth + 1,
                base + i * strides[depth],
                sizes,
                strides,
                order,
                count,
                t,
            );
        }
    }
    let len: usize = dims.iter().product();
    assert_eq!(order.len(), len);
    nest(0, offset, sizes, strides, order, count, t);
}

fn oracle_for_tap(tap: &TensorAccessPattern) -> (Vec<i64>, Vec<i64>) {
    let len = tap.tensor_len();
    let mut order = vec![-1i64; len];
    let mut count = vec![0i64; len];
    let mut t = 0i64;
    oracle_maps(
        tap.tensor_dims(),
        tap.offset(),
        tap.sizes(),
        tap.strides(),
        &mut order,
        &mut count,
        &mut t,
    );
    (order, count)
}

fn oracle_for_tase(tase: &TensorAccessSequence) -> (Vec<i64>, Vec<i64>) {
    let len: usize = tase.taps()[0].tensor_dims().iter().product();
    let mut order = vec![-1i64; len];
    let mut count = vec![0i64; len];
    let mut t = 0i64;
    for tap in tase {
        oracle_maps(
            tap.tensor_dims(),
            tap.offset(),
            tap.sizes(),
            tap.strides(),
            &mut order,
            &mut count,
            &mut t,
        );
    }
    (order, count)
}

fn random_tap(rng: &mut ChaCha8Rng) -> TensorAccessPattern {
    let dims: Vec<usize> = if rng.gen_bool(0.3) {
        vec![rng.gen_range(1..=64)]
    } else {
        vec![rng.gen_range(1..=64), rng.gen_range(1..=64)]
    };
    let len: usize = dims.iter().product();
    let rank = rng.gen_range(1..=4);
    let offset = rng.gen_range(0..len);
    let mut sizes = Vec::with_capacity(rank);
    let mut strides = Vec::with_capacity(rank);
    let mut extreme = offset;
    for _ in 0..rank {
        let size = rng.gen_range(1..=4usize);
        let stride = if size == 1 {
            rng.gen_range(0..len)
        } else {
            let headroom = (len - 1 - extreme) / (size - 1);
            if headroom == 0 || rng.gen_bool(0.2) {
                0
            } else {
                rng.gen_range(0..=headroom)
            }
        };
        extreme += (size - 1) * stride;
        sizes.push(size);
        strides.push(stride);
    }
    TensorAccessPattern::new(&dims, offset, &sizes, &strides).expect("generated in bounds")
}

fn assert_matches_oracle(tap: &TensorAccessPattern) {
    let (order, count) = oracle_for_tap(tap);
    assert_eq!(tap.access_order().values(), order.as_slice(), "{tap:?}");
    assert_eq!(tap.access_count().values(), count.as_slice(), "{tap:?}");
}

#[test]
fn criterion_1_access_map_identities() {
    criterion(1, "two-tile access map identities", || {
        let tap00 = TensorAccessPattern::new(&[6, 4], 0, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap();
        let tap11 = TensorAccessPattern::new(&[6, 4], 14, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap();
        assert_eq!(tap00.access_order().max(), 3 * 2 - 1);
        assert_eq!(tap00.access_count().sum(), 3 * 2);
        let taps0 = TensorAccessSequence::from_taps(vec![tap00, tap11]).unwrap();
        assert_eq!(taps0.access_order().max(), 2 * (3 * 2) - 1);
        assert_eq!(taps0.access_count().max(), 1);
    });
}

#[test]
fn criterion_2_oracle_equivalence_1000_taps() {
    criterion(2, "oracle equivalence on 1000 random taps", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
        for _ in 0..1000 {
            assert_matches_oracle(&random_tap(&mut rng));
        }
        // Sequences hit the cross-tap iteration numbering too.
        for _ in 0..50 {
            let dims = [rng.gen_range(2..=32usize), rng.gen_range(2..=32usize)];
            let taps: Vec<TensorAccessPattern> = (0..rng.gen_range(1..=4))
                .map(|_| {
                    let len = dims[0] * dims[1];
                    let offset = rng.gen_range(0..len);
                    let size = rng.gen_range(1..=(len - offset).min(5));
                    TensorAccessPattern::new(&dims, offset, &[size], &[1]).unwrap()
                })
                .collect();
            let tase = TensorAccessSequence::from_taps(taps).unwrap();
            let (order, count) = oracle_for_tase(&tase);
            assert_eq!(tase.access_order().values(), order.as_slice());
            assert_eq!(tase.access_count().values(), count.as_slice());
        }
    });
}

#[test]
fn criterion_3_access_equivalence_exhibit_and_relation() {
    criterion(
        3,
        "access-equivalence exhibit and relation properties",
        || {
            let a = TensorAccessPattern::new(&[6, 4], 0, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap();
            let b = TensorAccessPattern::new(&[6, 4], 0, &[3, 1, 1, 2], &[4, 0, 0, 1]).unwrap();
            assert!(!a.strictly_equal(&b));
            // Established through the independent oracle, not the library path.
            let (ord_a, cnt_a) = oracle_for_tap(&a);
            let (ord_b, cnt_b) = oracle_for_tap(&b);
            assert_eq!(ord_a, ord_b);
            assert_eq!(cnt_a, cnt_b);
            assert!(access_equivalent(&a, &b));

            // Reflexivity, symmetry, transitivity over 200 random triples:
            // b inserts a unit dimension into a, c inserts one into b, so
            // a ~ b and b ~ c hold by construction and a ~ c must follow.
            let mut rng = ChaCha8Rng::seed_from_u64(0x771);
            let insert_unit = |tap: &TensorAccessPattern, rng: &mut ChaCha8Rng| {
                let mut sizes = tap.sizes().to_vec();
                let mut strides = tap.strides().to_vec();
                let at = rng.gen_range(0..=sizes.len());
                sizes.insert(at, 1);
                strides.insert(at, 0);
                TensorAccessPattern::with_max_rank(
                    tap.tensor_dims(),
                    tap.offset(),
                    &sizes,
                    &strides,
                    6,
                )
                .unwrap()
            };
            for _ in 0..200 {
                let a = random_tap(&mut rng);
                let b = insert_unit(&a, &mut rng);
                let c = insert_unit(&b, &mut rng);
                assert!(access_equivalent(&a, &a), "reflexive");
                assert!(
                    access_equivalent(&a, &b) && access_equivalent(&b, &a),
                    "symmetric"
                );
                assert!(access_equivalent(&b, &c), "constructed equivalent");
                assert!(access_equivalent(&a, &c), "transitive");
                // Symmetry also holds for unrelated pairs.
                let d = random_tap(&mut rng);
                assert_eq!(access_equivalent(&a, &d), access_equivalent(&d, &a));
            }
        },
    );
}

#[test]
fn criterion_4_tiler_fields_and_exhaustive_sweep() {
    criterion(4, "tiler exact fields and exhaustive sweep", || {
        let seq = simple_tiler((6, 4), (3, 2)).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq[0].offset(), 0);
        assert_eq!(seq[0].sizes(), &[1, 1, 3, 2]);
        assert_eq!(seq[0].strides(), &[0, 0, 4, 1]);
        assert_eq!(seq[3].offset(), 14);
        assert_eq!(seq[3].sizes(), &[1, 1, 3, 2]);
        assert_eq!(seq[3].strides(), &[0, 0, 4, 1]);

        let mut checked = 0;
        for (rows, cols) in [(6usize, 4usize), (8, 8), (12, 8), (16, 4), (4, 16), (8, 12)] {
            for (tr, tc) in [(1usize, 1usize), (2, 2), (2, 4), (3, 2), (4, 4)] {
                if rows % tr != 0 || cols % tc != 0 {
                    continue;
                }
                let grid = (rows / tr, cols / tc);
                for group in [(1usize, 1usize), (1, 2), (2, 1), (2, 2)] {
                    for step in [(1usize, 1usize), (2, 2)] {
                        let sr = if group.0 == 1 { 1 } else { step.0 };
                        let sc = if group.1 == 1 { 1 } else { step.1 };
                        if grid.0 % (group.0 * sr) != 0 || grid.1 % (group.1 * sc) != 0 {
                            continue;
                        }
                        for tile_order in [TraversalOrder::RowMajor, TraversalOrder::ColMajor] {
                            let spec = TilerSpec {
                                tensor_dims: (rows, cols),
                                tile_dims: (tr, tc),
                                within_tile_order: tile_order,
                                group_dims: group,
                                within_group_order: TraversalOrder::RowMajor,
                                group_repeat: 1,
                                group_step: step,
                            };
                            let seq = match group_tiler(&spec) {
                                Ok(seq) => seq,
                                // Rank-overflow encodings are legitimate
                                // rejections, not sweep failures.
                                Err(tilecast::tiler::TilerError::RankOverflow { .. }) => continue,
                                Err(other) => panic!("{spec:?}: {other}"),
                            };
                            let count = seq.access_count();
                            assert!(
                                count.values().iter().all(|&c| c == 1),
                                "count map not all ones for {spec:?}"
                            );
                            let mut order: Vec<i64> = seq.access_order().values().to_vec();
                            order.sort_unstable();
                            let expected: Vec<i64> = (0..(rows * cols) as i64).collect();
                            assert_eq!(order, expected, "order not a permutation for {spec:?}");
                            checked += 1;
                        }
                    }
                }
            }
        }
        assert!(checked >= 50, "only {checked} exhaustive specs checked");
    });
}

// ---------------------------------------------------------------------
// Shared plumbing for the simulation criteria.
// ---------------------------------------------------------------------

fn resolve_builtin(name: &str) -> tilecast::ResolvedDesign {
    let manifest = DesignManifest::from_json(builtin(name).unwrap().json).unwrap();
    let device = manifest.device.as_ref().unwrap().instantiate().unwrap();
    manifest
        .build_program(device)
        .unwrap()
        .resolve(Some(&SequentialPlacer::new()))
        .unwrap()
}

fn iota(len: usize) -> Vec<i64> {
    (0..len as i64).collect()
}

fn msadd_inputs() -> Vec<Vec<i64>> {
    vec![iota(256), vec![0; 256]]
}

fn msadd_reference(input: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; 256];
    for r in 0..8 {
        for c in 0..8 {
            out[r * 16 + c] = input[r * 16 + c] + 1;
        }
    }
    out
}

fn transpose_reference(input: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; 256];
    for r in 0..16 {
        for c in 0..16 {
            out[c * 16 + r] = input[r * 16 + c];
        }
    }
    out
}

fn gemm_inputs() -> (Vec<i64>, Vec<i64>) {
    let a: Vec<i64> = (0..1024).map(|v| (v * 7 % 23) - 11).collect();
    let b: Vec<i64> = (0..1024).map(|v| (v * 13 % 19) - 9).collect();
    (a, b)
}

fn gemm_reference(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut c = vec![0i64; 1024];
    for i in 0..32 {
        for k in 0..32 {
            let aik = a[i * 32 + k];
            if aik == 0 {
                continue;
            }
            for j in 0..32 {
                c[i * 32 + j] += aik * b[k * 32 + j];
            }
        }
    }
    c
}

struct SimCase {
    name: &'static str,
    inputs: Vec<Vec<i64>>,
    expected: Vec<(usize, Vec<i64>)>,
}

fn simulation_cases() -> Vec<SimCase> {
    let (a, b) = gemm_inputs();
    let msadd_in = msadd_inputs();
    vec![
        SimCase {
            name: "passthrough",
            inputs: vec![iota(64), vec![0; 64]],
            expected: vec![(1, iota(64))],
        },
        SimCase {
            name: "msadd",
            inputs: msadd_in.clone(),
            expected: vec![(1, msadd_reference(&msadd_in[0]))],
        },
        SimCase {
            name: "transpose",
            inputs: vec![iota(256), vec![0; 256]],
            expected: vec![(1, transpose_reference(&iota(256)))],
        },
        SimCase {
            name: "gemm",
            inputs: vec![a.clone(), b.clone(), vec![0; 1024]],
            expected: vec![(2, gemm_reference(&a, &b))],
        },
    ]
}

#[test]
fn criterion_5_end_to_end_simulation() {
    criterion(5, "end-to-end simulation vs host references", || {
        let registry = KernelRegistry::with_builtins();
        for case in simulation_cases() {
            let design = resolve_builtin(case.name);
            let report = run(&design, &registry, &case.inputs).unwrap();
            assert!(report.completed(), "{} did not complete", case.name);
            for (buf, expected) in &case.expected {
                assert_eq!(
                    &report.buffers[*buf], expected,
                    "{} buffer {buf}",
                    case.name
                );
            }
        }
    });
}

#[test]
fn criterion_6_objectfifo_semantics() {
    criterion(
        6,
        "objectfifo acquire/release, split/join, broadcast",
        || {
            let registry = KernelRegistry::with_builtins();

            // Acquire top-up and oldest-first release, observed through
            // sentinel values in a sliding window: iteration k must see
            // exactly objects (k, k+1), oldest first.
            {
                use std::sync::Arc;
                use tilecast::kernel::{ArgKind, KernelError};
                use tilecast::WorkerArg;
                let mut reg = KernelRegistry::with_builtins();
                reg.register(
                    "window_probe",
                    vec![ArgKind::Cons, ArgKind::Prod],
                    Arc::new(|io| {
                        let w = io.cons(0)?;
                        if w.len() != 2 {
                            return Err(KernelError::BadArg("window must hold 2".into()));
                        }
                        io.prod_obj(1)?[0] = w[0][0] * 1000 + w[1][0];
                        Ok(())
                    }),
                )
                .unwrap();
                let ty = ObjectType::new(Scalar::I32, &[1]);
                let fi = ObjectFifo::new(ty.clone());
                let fo = ObjectFifo::new(ty);
                let worker = Worker::new(
                    "window_probe",
                    [
                        WorkerArg::windowed(fi.cons(), 2, 1).unwrap(),
                        fo.prod().into(),
                    ],
                );
                let mut rt = Runtime::new();
                let b_in = rt.declare_buffer(Scalar::I32, &[6]);
                let b_out = rt.declare_buffer(Scalar::I32, &[5]);
                rt.start(&worker);
                rt.fill(
                    &fi.prod(),
                    b_in,
                    TensorAccessPattern::new(&[6], 0, &[6], &[1]).unwrap(),
                    false,
                )
                .unwrap();
                rt.drain(
                    &fo.cons(),
                    b_out,
                    TensorAccessPattern::new(&[5], 0, &[5], &[1]).unwrap(),
                    true,
                )
                .unwrap();
                let design = Program::new(Device::npu1_col1(), rt)
                    .resolve_with(Some(&SequentialPlacer::new()), &reg)
                    .unwrap();
                let sentinels = vec![11, 22, 33, 44, 55, 66];
                let report = run(&design, &reg, &[sentinels, vec![0; 5]]).unwrap();
                assert!(report.completed());
                assert_eq!(
                    report.buffers[1],
                    vec![11022, 22033, 33044, 44055, 55066],
                    "each iteration must gain exactly one object and drop the oldest"
                );
            }

            // split then join round-trips bit-exactly.
            {
                let design = resolve_builtin("splitjoin");
                let input: Vec<i64> = (0..64).map(|v| v * 3 - 17).collect();
                let report = run(&design, &registry, &[input.clone(), vec![0; 64]]).unwrap();
                assert!(report.completed());
                assert_eq!(
                    report.buffers[1], input,
                    "split/join must round-trip exactly"
                );
            }

            // Broadcast delivers every object to every consumer.
            {
                let design = resolve_builtin("broadcast");
                let input = iota(64);
                let report = run(
                    &design,
                    &registry,
                    &[input.clone(), vec![0; 64], vec![0; 64]],
                )
                .unwrap();
                assert!(report.completed());
                let plus_one: Vec<i64> = input.iter().map(|v| v + 1).collect();
                let plus_two: Vec<i64> = input.iter().map(|v| v + 2).collect();
                assert_eq!(report.buffers[1], plus_one);
                assert_eq!(report.buffers[2], plus_two);
                // The broadcast fifo published each object once, not per
                // consumer.
                let fi = report
                    .fifo_transfers
                    .iter()
                    .find(|t| t.fifo == "of0")
                    .unwrap();
                assert_eq!(fi.objects, 4);
            }
        },
    );
}

#[test]
fn criterion_7_sequential_placement_and_overallocation() {
    criterion(
        7,
        "sequential placement + over-allocation rejection",
        || {
            for design in tilecast::manifest::BUILTINS {
                let manifest = DesignManifest::from_json(design.json).unwrap();
                let device = manifest.device.as_ref().unwrap().instantiate().unwrap();
                let result = manifest
                    .build_program(device)
                    .unwrap()
                    .resolve(Some(&SequentialPlacer::new()));
                if design.name == "overalloc" {
                    match result {
                        Err(tilecast::ResolveError::ResourceExhausted { .. }) => {}
                        other => panic!("overalloc must exhaust resources, got {other:?}"),
                    }
                    continue;
                }
                let resolved = result.unwrap_or_else(|e| panic!("{}: {e}", design.name));

                // Every shim/mem endpoint of a fifo that has a compute
                // endpoint shares a column with one.
                for fifo in &resolved.fifos {
                    let endpoints: Vec<_> = std::iter::once(&fifo.producer)
                        .chain(&fifo.consumers)
                        .collect();
                    let compute_cols: Vec<usize> = endpoints
                        .iter()
                        .filter(|e| e.tile.kind == TileKind::Compute)
                        .map(|e| e.tile.col)
                        .collect();
                    if compute_cols.is_empty() {
                        continue;
                    }
                    for ep in &endpoints {
                        if ep.tile.kind != TileKind::Compute {
                            assert!(
                            compute_cols.contains(&ep.tile.col),
                            "{}: fifo @{} endpoint at {} strays from compute columns {compute_cols:?}",
                            design.name,
                            fifo.name,
                            ep.tile
                        );
                        }
                    }
                }

                // Determinism: resolving again yields identical records and
                // identical bytes.
                let manifest2 = DesignManifest::from_json(design.json).unwrap();
                let device2 = manifest2.device.as_ref().unwrap().instantiate().unwrap();
                let again = manifest2
                    .build_program(device2)
                    .unwrap()
                    .resolve(Some(&SequentialPlacer::new()))
                    .unwrap();
                assert_eq!(
                    resolved, again,
                    "{} placement not deterministic",
                    design.name
                );
                assert_eq!(emit(&resolved), emit(&again));
            }
        },
    );
}

#[test]
fn criterion_8_emitter_determinism_and_diff_tiers() {
    criterion(8, "emitter determinism and diff tiers", || {
        // Byte-identical across repeated runs and across permuted
        // declaration order of independent constructs.
        fn build_msadd(permute: bool) -> String {
            let ty = ObjectType::new(Scalar::I32, &[8, 8]);
            let (fi, fo, worker);
            if permute {
                fo = ObjectFifo::new(ty.clone());
                fi = ObjectFifo::new(ty);
                worker = Worker::new(
                    "add_scalar",
                    [
                        fi.cons().into(),
                        fo.prod().into(),
                        tilecast::WorkerArg::scalar(1),
                    ],
                );
            } else {
                fi = ObjectFifo::new(ty.clone());
                fo = ObjectFifo::new(ty);
                worker = Worker::new(
                    "add_scalar",
                    [
                        fi.cons().into(),
                        fo.prod().into(),
                        tilecast::WorkerArg::scalar(1),
                    ],
                );
            }
            let mut rt = Runtime::new();
            let b_in = rt.declare_buffer(Scalar::I32, &[16, 16]);
            let b_out = rt.declare_buffer(Scalar::I32, &[16, 16]);
            let tap =
                TensorAccessPattern::new(&[16, 16], 0, &[1, 1, 8, 8], &[0, 0, 16, 1]).unwrap();
            rt.start(&worker);
            rt.fill(&fi.prod(), b_in, tap.clone(), false).unwrap();
            rt.drain(&fo.cons(), b_out, tap, true).unwrap();
            let design = Program::new(Device::npu1_col1(), rt)
                .resolve(Some(&SequentialPlacer::new()))
                .unwrap();
            emit(&design)
        }
        let text = build_msadd(false);
        assert_eq!(text, build_msadd(false), "repeated emission differs");
        assert_eq!(text, build_msadd(true), "declaration order leaked into IR");

        // Tier 1: strict equality.
        assert!(design_diff(&text, &text, DiffMode::Strict).unwrap().equal);

        // Tier 2: reordered records and broadcast recipients are
        // modulo-order equal but not strict.
        let mut lines: Vec<&str> = text.lines().collect();
        let fifo_rows: Vec<usize> = lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.starts_with("fifo "))
            .map(|(i, _)| i)
            .collect();
        lines.swap(fifo_rows[0], fifo_rows[1]);
        let swapped: String = lines.iter().map(|l| format!("{l}\n")).collect();
        assert!(
            !design_diff(&text, &swapped, DiffMode::Strict)
                .unwrap()
                .equal
        );
        assert!(
            design_diff(&text, &swapped, DiffMode::ModuloOrder)
                .unwrap()
                .equal
        );

        // Broadcast recipient order: swap consumer handles of the
        // broadcast design and compare.
        fn build_broadcast(swap_cons: bool) -> String {
            let ty = ObjectType::new(Scalar::I32, &[16]);
            let fi = ObjectFifo::new(ty.clone());
            let fo1 = ObjectFifo::new(ty.clone());
            let fo2 = ObjectFifo::new(ty);
            let (c1, c2) = {
                let a = fi.cons();
                let b = fi.cons();
                if swap_cons {
                    (b, a)
                } else {
                    (a, b)
                }
            };
            let w1 = Worker::new(
                "add_scalar",
                [c1.into(), fo1.prod().into(), tilecast::WorkerArg::scalar(1)],
            );
            let w2 = Worker::new(
                "mul_scalar",
                [c2.into(), fo2.prod().into(), tilecast::WorkerArg::scalar(2)],
            );
            let mut rt = Runtime::new();
            let b_in = rt.declare_buffer(Scalar::I32, &[64]);
            let b1 = rt.declare_buffer(Scalar::I32, &[64]);
            let b2 = rt.declare_buffer(Scalar::I32, &[64]);
            let sweep = TensorAccessPattern::new(&[64], 0, &[64], &[1]).unwrap();
            rt.start(&w1);
            rt.start(&w2);
            rt.fill(&fi.prod(), b_in, sweep.clone(), false).unwrap();
            rt.drain(&fo1.cons(), b1, sweep.clone(), true).unwrap();
            rt.drain(&fo2.cons(), b2, sweep, true).unwrap();
            let design = Program::new(Device::npu1_col4(), rt)
                .resolve(Some(&SequentialPlacer::new()))
                .unwrap();
            emit(&design)
        }
        let b_fwd = build_broadcast(false);
        let b_swp = build_broadcast(true);
        assert!(!design_diff(&b_fwd, &b_swp, DiffMode::Strict).unwrap().equal);
        assert!(
            design_diff(&b_fwd, &b_swp, DiffMode::ModuloOrder)
                .unwrap()
                .equal
        );

        // Tier 3: access-equivalent tap encodings.
        fn build_sweep(sizes: &[usize], strides: &[usize]) -> String {
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
                TensorAccessPattern::new(&[6, 4], 0, sizes, strides).unwrap(),
                false,
            )
            .unwrap();
            rt.drain(
                &fo.cons(),
                b_out,
                TensorAccessPattern::new(&[6, 4], 0, &[6], &[1]).unwrap(),
                true,
            )
            .unwrap();
            let design = Program::new(Device::npu1_col1(), rt)
                .resolve(Some(&SequentialPlacer::new()))
                .unwrap();
            emit(&design)
        }
        let t1 = build_sweep(&[1, 1, 3, 2], &[0, 0, 4, 1]);
        let t2 = build_sweep(&[3, 1, 1, 2], &[4, 0, 0, 1]);
        assert!(!design_diff(&t1, &t2, DiffMode::ModuloOrder).unwrap().equal);
        assert!(design_diff(&t1, &t2, DiffMode::AccessEquiv).unwrap().equal);
    });
}

#[test]
fn criterion_9_schedule_independence() {
    criterion(9, "schedule independence over 20 random schedules", || {
        let registry = KernelRegistry::with_builtins();
        for case in simulation_cases() {
            let design = resolve_builtin(case.name);
            let baseline = run(&design, &registry, &case.inputs).unwrap();
            assert!(baseline.completed());
            for seed in 0..20u64 {
                let options = SimOptions {
                    schedule: Schedule::Random(seed),
                    ..Default::default()
                };
                let report = run_with(&design, &registry, &case.inputs, &options).unwrap();
                assert!(report.completed(), "{} seed {seed}", case.name);
                assert_eq!(
                    report.buffers, baseline.buffers,
                    "{} diverged under seed {seed}",
                    case.name
                );
            }
        }
    });
}

// Order/count map invariants double-checked on the oracle data used above.
#[test]
fn map_invariants_follow_from_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let tap = random_tap(&mut rng);
        let order: AccessMap = tap.access_order();
        let count: AccessMap = tap.access_count();
        assert_eq!(count.sum() as usize, tap.total_iterations());
        assert_eq!(order.max() as usize, tap.total_iterations() - 1);
        for (o, c) in order.values().iter().zip(count.values()) {
            assert_eq!(*o == -1, *c == 0);
        }
    }
}
