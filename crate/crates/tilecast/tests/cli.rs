//! End-to-end tests of the `tilecast` binary: exit codes, diagnostics,
//! golden IR, and file round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GOLDEN_MSADD: &str = include_str!("golden/msadd.tir");

fn tilecast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilecast"))
        .args(args)
        .env_remove("TILECAST_DEVICE")
        .output()
        .expect("binary runs")
}

fn tilecast_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilecast"))
        .args(args)
        .env_remove("TILECAST_DEVICE")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_iota_bin(path: &Path, len: usize) {
    let bytes: Vec<u8> = (0..len as i32).flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).unwrap();
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn emit_msadd_matches_golden() {
    let output = tilecast(&["emit", "msadd"]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(stdout(&output), GOLDEN_MSADD);
    // Determinism across invocations.
    let again = tilecast(&["emit", "msadd"]);
    assert_eq!(output.stdout, again.stdout);
}

#[test]
fn emit_without_placer_fails_with_unplaced() {
    let output = tilecast(&["emit", "msadd", "--placer", "none"]);
    assert_eq!(output.status.code(), Some(3));
    assert!(
        stderr(&output).contains("error[unplaced]"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn emit_overallocated_design_fails_with_resources() {
    let output = tilecast(&["emit", "overalloc"]);
    assert_eq!(output.status.code(), Some(3));
    assert!(
        stderr(&output).contains("error[resource_exhausted]"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn emit_bad_json_is_a_user_error() {
    let dir = tmp();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ this is not json").unwrap();
    let output = tilecast(&["emit", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr(&output).contains("error[manifest]"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn emit_unknown_design_is_a_user_error() {
    let output = tilecast(&["emit", "no_such_design_anywhere"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("no_such_design"));
}

#[test]
fn run_passthrough_round_trips_bytes() {
    let dir = tmp();
    let input = dir.path().join("in.bin");
    write_iota_bin(&input, 64);
    let out_dir = dir.path().join("out");
    let output = tilecast(&[
        "run",
        "passthrough",
        "--in",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["status"], "completed");
    let produced = fs::read(out_dir.join("buf1.bin")).unwrap();
    assert_eq!(produced, fs::read(&input).unwrap());
}

#[test]
fn run_rejects_wrong_input_count() {
    let dir = tmp();
    let output = tilecast(&["run", "vvadd", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("error[inputs]"));
}

#[test]
fn run_reports_deadlock_with_exit_4() {
    // vvadd with only half of the second operand: the worker starves.
    let dir = tmp();
    let manifest = serde_json::json!({
        "device": "npu1col1",
        "buffers": [{"shape": [64]}, {"shape": [32]}, {"shape": [64]}],
        "fifos": [
            {"id": "fa", "shape": [16]},
            {"id": "fb", "shape": [16]},
            {"id": "fo", "shape": [16]}
        ],
        "workers": [
            {"id": "w0", "kernel": "eltwise_add",
             "args": [{"cons": "fa"}, {"cons": "fb"}, {"prod": "fo"}]}
        ],
        "runtime": [
            {"op": "start", "worker": "w0"},
            {"op": "fill", "fifo": "fa", "buf": 0, "tap": {"sizes": [64], "strides": [1]}},
            {"op": "fill", "fifo": "fb", "buf": 1, "tap": {"sizes": [32], "strides": [1]}},
            {"op": "drain", "fifo": "fo", "buf": 2, "tap": {"sizes": [64], "strides": [1]}, "wait": true}
        ]
    });
    let design = dir.path().join("starved.json");
    fs::write(&design, manifest.to_string()).unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    write_iota_bin(&a, 64);
    write_iota_bin(&b, 32);
    let output = tilecast(&[
        "run",
        design.to_str().unwrap(),
        "--in",
        a.to_str().unwrap(),
        "--in",
        b.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4));
    assert!(stderr(&output).contains("error[deadlock]"));
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["status"], "deadlock");
    assert!(report["blocked"]
        .as_array()
        .unwrap()
        .iter()
        .any(|b| b.as_str().unwrap().starts_with("worker0")));
}

#[test]
fn run_with_seed_matches_round_robin() {
    let dir = tmp();
    let input = dir.path().join("in.bin");
    write_iota_bin(&input, 64);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let base = tilecast(&[
        "run",
        "vsadd",
        "--in",
        input.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert!(base.status.success());
    let seeded = tilecast(&[
        "run",
        "vsadd",
        "--in",
        input.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
        "--seed",
        "17",
    ]);
    assert!(seeded.status.success());
    assert_eq!(
        fs::read(out_a.join("buf1.bin")).unwrap(),
        fs::read(out_b.join("buf1.bin")).unwrap()
    );
}

fn write_tap_json(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

#[test]
fn viz_csv_matches_count_grid() {
    let dir = tmp();
    let tap = write_tap_json(
        dir.path(),
        "tap00.json",
        r#"{"dims":[6,4],"offset":0,"sizes":[1,1,3,2],"strides":[0,0,4,1]}"#,
    );
    let output = tilecast(&[
        "viz",
        tap.to_str().unwrap(),
        "--kind",
        "count",
        "--format",
        "csv",
    ]);
    assert!(output.status.success());
    assert_eq!(
        stdout(&output),
        "1,1,0,0\n1,1,0,0\n1,1,0,0\n0,0,0,0\n0,0,0,0\n0,0,0,0\n"
    );
}

#[test]
fn viz_pgm_has_valid_header() {
    let dir = tmp();
    let tap = write_tap_json(
        dir.path(),
        "tap.json",
        r#"{"dims":[6,4],"offset":0,"sizes":[6,4],"strides":[4,1]}"#,
    );
    let out_file = dir.path().join("map.pgm");
    let output = tilecast(&[
        "viz",
        tap.to_str().unwrap(),
        "--kind",
        "order",
        "--format",
        "pgm",
        "--output",
        out_file.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let bytes = fs::read(out_file).unwrap();
    assert!(bytes.starts_with(b"P5\n4 6\n255\n"));
    assert_eq!(bytes.len(), 11 + 24);
}

#[test]
fn viz_rank_three_tensor_is_rejected() {
    let dir = tmp();
    let tap = write_tap_json(
        dir.path(),
        "cube.json",
        r#"{"dims":[2,2,2],"offset":0,"sizes":[8],"strides":[1]}"#,
    );
    let output = tilecast(&["viz", tap.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("error[unsupported_rank]"));
}

#[test]
fn viz_from_tiler_spec() {
    let dir = tmp();
    let spec = write_tap_json(
        dir.path(),
        "tiler.json",
        r#"{"tensor_dims":[6,4],"tile_dims":[3,2]}"#,
    );
    let output = tilecast(&[
        "viz",
        "--tiler",
        spec.to_str().unwrap(),
        "--kind",
        "count",
        "--format",
        "csv",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(
        stdout(&output),
        "1,1,1,1\n1,1,1,1\n1,1,1,1\n1,1,1,1\n1,1,1,1\n1,1,1,1\n"
    );
}

#[test]
fn equiv_verdicts_for_taps() {
    let dir = tmp();
    let a = write_tap_json(
        dir.path(),
        "a.json",
        r#"{"dims":[6,4],"offset":0,"sizes":[1,1,3,2],"strides":[0,0,4,1]}"#,
    );
    let b = write_tap_json(
        dir.path(),
        "b.json",
        r#"{"dims":[6,4],"offset":0,"sizes":[3,1,1,2],"strides":[4,0,0,1]}"#,
    );
    let c = write_tap_json(
        dir.path(),
        "c.json",
        r#"{"dims":[6,4],"offset":14,"sizes":[1,1,3,2],"strides":[0,0,4,1]}"#,
    );
    assert_eq!(
        stdout(&tilecast(&[
            "equiv",
            a.to_str().unwrap(),
            a.to_str().unwrap()
        ])),
        "strict\n"
    );
    assert_eq!(
        stdout(&tilecast(&[
            "equiv",
            a.to_str().unwrap(),
            b.to_str().unwrap()
        ])),
        "access_equivalent\n"
    );
    assert_eq!(
        stdout(&tilecast(&[
            "equiv",
            a.to_str().unwrap(),
            c.to_str().unwrap()
        ])),
        "different\n"
    );
}

#[test]
fn equiv_verdicts_for_designs() {
    let dir = tmp();
    let a = dir.path().join("a.tir");
    fs::write(&a, GOLDEN_MSADD).unwrap();
    assert_eq!(
        stdout(&tilecast(&[
            "equiv",
            a.to_str().unwrap(),
            a.to_str().unwrap()
        ])),
        "strict\n"
    );

    // Swap the two fifo lines: no longer byte-equal, still the same design.
    let mut lines: Vec<&str> = GOLDEN_MSADD.lines().collect();
    let fifo_rows: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.starts_with("fifo "))
        .map(|(i, _)| i)
        .collect();
    lines.swap(fifo_rows[0], fifo_rows[1]);
    let b = dir.path().join("b.tir");
    fs::write(
        &b,
        lines.iter().map(|l| format!("{l}\n")).collect::<String>(),
    )
    .unwrap();
    assert_eq!(
        stdout(&tilecast(&[
            "equiv",
            a.to_str().unwrap(),
            b.to_str().unwrap()
        ])),
        "modulo_order\n"
    );
}

#[test]
fn designs_list_and_show() {
    let output = tilecast(&["designs", "list"]);
    assert!(output.status.success());
    let listing = stdout(&output);
    assert!(listing.lines().count() >= 8);
    for name in ["passthrough", "msadd", "transpose", "gemm", "overalloc"] {
        assert!(listing.contains(name), "missing {name}");
    }

    let shown = tilecast(&["designs", "show", "msadd"]);
    assert!(shown.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&shown)).unwrap();
    assert_eq!(parsed["device"], "npu1col1");

    let missing = tilecast(&["designs", "show", "nope"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn place_prints_grid_and_assignments() {
    let output = tilecast(&["place", "msadd"]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("device npu1col1"));
    assert!(text.contains("worker0"));
    assert!(text.contains("(0,2)"));
    assert!(text.contains("shim"));
}

#[test]
fn device_env_var_overrides_default() {
    let dir = tmp();
    // A manifest with no device field falls back to the environment.
    let manifest = serde_json::json!({
        "buffers": [{"shape": [64]}, {"shape": [64]}],
        "fifos": [{"id": "fi", "shape": [16]}, {"id": "fo", "shape": [16]}],
        "workers": [{"id": "w0", "kernel": "passthrough",
                     "args": [{"cons": "fi"}, {"prod": "fo"}]}],
        "runtime": [
            {"op": "start", "worker": "w0"},
            {"op": "fill", "fifo": "fi", "buf": 0, "tap": {"sizes": [64], "strides": [1]}},
            {"op": "drain", "fifo": "fo", "buf": 1, "tap": {"sizes": [64], "strides": [1]}, "wait": true}
        ]
    });
    let path = dir.path().join("envdev.json");
    fs::write(&path, manifest.to_string()).unwrap();

    let defaulted = tilecast(&["emit", path.to_str().unwrap()]);
    assert!(stdout(&defaulted).contains("device @npu1col1 cols=1"));

    let overridden = tilecast_env(
        &["emit", path.to_str().unwrap()],
        "TILECAST_DEVICE",
        "npu1col4",
    );
    assert!(stdout(&overridden).contains("device @npu1col4 cols=4"));

    // The explicit flag wins over everything.
    let flagged = tilecast_env(
        &["emit", path.to_str().unwrap(), "--device", "npu1col2"],
        "TILECAST_DEVICE",
        "npu1col4",
    );
    assert!(stdout(&flagged).contains("device @npu1col2 cols=2"));
}

#[test]
fn run_transpose_without_workers() {
    let dir = tmp();
    let input = dir.path().join("m.bin");
    write_iota_bin(&input, 256);
    let out_dir = dir.path().join("out");
    let output = tilecast(&[
        "run",
        "transpose",
        "--in",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let bytes = fs::read(out_dir.join("buf1.bin")).unwrap();
    let read_i32 = |buf: &[u8], i: usize| {
        i32::from_le_bytes([buf[i * 4], buf[i * 4 + 1], buf[i * 4 + 2], buf[i * 4 + 3]])
    };
    for r in 0..16 {
        for c in 0..16 {
            assert_eq!(read_i32(&bytes, c * 16 + r), (r * 16 + c) as i32);
        }
    }
}

#[test]
fn run_accepts_csv_inputs_and_narrow_scalars() {
    let dir = tmp();
    // An i16 passthrough design: CSV in, 2-byte-wide binary out.
    let manifest = serde_json::json!({
        "device": "npu1col1",
        "buffers": [{"elem": "i16", "shape": [16]}, {"elem": "i16", "shape": [16]}],
        "fifos": [
            {"id": "fi", "elem": "i16", "shape": [4]},
            {"id": "fo", "elem": "i16", "shape": [4]}
        ],
        "workers": [{"id": "w0", "kernel": "passthrough",
                     "args": [{"cons": "fi"}, {"prod": "fo"}]}],
        "runtime": [
            {"op": "start", "worker": "w0"},
            {"op": "fill", "fifo": "fi", "buf": 0, "tap": {"sizes": [16], "strides": [1]}},
            {"op": "drain", "fifo": "fo", "buf": 1, "tap": {"sizes": [16], "strides": [1]}, "wait": true}
        ]
    });
    let design = dir.path().join("narrow.json");
    fs::write(&design, manifest.to_string()).unwrap();
    let input = dir.path().join("in.csv");
    let values: Vec<i64> = (0..16).map(|v| v * 100 - 800).collect();
    fs::write(
        &input,
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = tilecast(&[
        "run",
        design.to_str().unwrap(),
        "--in",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let bytes = fs::read(out_dir.join("buf1.bin")).unwrap();
    assert_eq!(bytes.len(), 32);
    for (i, v) in values.iter().enumerate() {
        let got = i16::from_le_bytes([bytes[i * 2], bytes[i * 2 + 1]]);
        assert_eq!(got as i64, *v);
    }
}

#[test]
fn device_flag_accepts_profile_files() {
    let dir = tmp();
    let profile = serde_json::json!({
        "name": "two_col_slim",
        "n_cols": 2,
        "rows": ["shim", "mem", "compute", "compute", "compute", "compute"],
        "l1_bytes": 65536,
        "l2_bytes": 524288,
        "channels": {
            "shim": {"in": 2, "out": 2},
            "mem": {"in": 2, "out": 2},
            "compute": {"in": 2, "out": 2}
        },
        "dma": {
            "shim": {"max_dims": 4, "max_size_per_dim": 65535, "max_stride": 1048576},
            "mem": {"max_dims": 4, "max_size_per_dim": 65535, "max_stride": 1048576},
            "compute": {"max_dims": 3, "max_size_per_dim": 65535, "max_stride": 1048576}
        }
    });
    let path = dir.path().join("profile.json");
    fs::write(&path, profile.to_string()).unwrap();
    let output = tilecast(&["emit", "msadd", "--device", &format!("@{}", path.display())]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("device @two_col_slim cols=2"));
}

#[test]
fn emitted_ir_parses_back() {
    let output = tilecast(&["emit", "gemm"]);
    assert!(output.status.success());
    let design = tilecast::emitter::parse(&stdout(&output)).unwrap();
    assert_eq!(design.fifos.len(), 3);
    assert_eq!(tilecast::emitter::emit(&design), stdout(&output));
}
