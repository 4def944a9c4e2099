//! End-to-end tests of the `patchdct` binary: exit codes, file outputs, and
//! golden-file determinism of the sweep command.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use patchdct::mask::BinaryMask;
use patchdct::pbm::{self, PbmFormat};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_patchdct"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn write_disc(path: &Path, k: usize) {
    let mut mask = BinaryMask::zeros(k);
    let center = k as f64 / 2.0;
    for r in 0..k {
        for c in 0..k {
            let dr = r as f64 + 0.5 - center;
            let dc = c as f64 + 0.5 - center;
            if (dr * dr + dc * dc).sqrt() <= k as f64 * 0.3 {
                mask.set(r, c, true);
            }
        }
    }
    pbm::write_mask(path, &mask, PbmFormat::Binary).unwrap();
}

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../patchdct/tests/data")
        .join(name)
}

#[test]
fn encode_then_decode_full_length_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mask_path = dir.path().join("mask.pbm");
    write_disc(&mask_path, 32);
    let original = std::fs::read(&mask_path).unwrap();

    let vec_path = dir.path().join("vec.json");
    let out_path = dir.path().join("decoded.pbm");
    assert_success(&run(&[
        "encode",
        mask_path.to_str().unwrap(),
        "--dim",
        "1024",
        "--out",
        vec_path.to_str().unwrap(),
    ]));
    assert_success(&run(&[
        "decode",
        vec_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read(&out_path).unwrap(), original);
}

#[test]
fn encode_of_all_ones_128_leads_with_128() {
    let dir = tempfile::tempdir().unwrap();
    let mask_path = dir.path().join("ones.pbm");
    pbm::write_mask(
        &mask_path,
        &BinaryMask::filled(128, true),
        PbmFormat::Binary,
    )
    .unwrap();
    let vec_path = dir.path().join("vec.json");
    assert_success(&run(&[
        "encode",
        mask_path.to_str().unwrap(),
        "--dim",
        "300",
        "--out",
        vec_path.to_str().unwrap(),
    ]));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&vec_path).unwrap()).unwrap();
    let dc = json["coeffs"][0].as_f64().unwrap();
    assert!((dc - 128.0).abs() < 1e-9, "DC {dc}");
    assert_eq!(json["resolution"], 128);
    assert_eq!(json["dim"], 300);
}

#[test]
fn malformed_inputs_exit_one_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{this is not json").unwrap();
    let out = run(&[
        "decode",
        bad_json.to_str().unwrap(),
        "--out",
        dir.path().join("x.pbm").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(
        stderr.lines().count(),
        1,
        "single-line diagnostic: {stderr}"
    );

    let out = run(&["decode", "/nonexistent/vec.json", "--out", "/tmp/x.pbm"]);
    assert_eq!(exit_code(&out), 1);

    // Usage errors are input errors too.
    let out = run(&["encode", "--not-a-flag"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn sweep_matches_the_golden_csv_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let golden = std::fs::read_to_string(data_path("reference_sweep.golden.csv")).unwrap();
    let spec = data_path("reference_sweep.json");

    for threads in ["1", "4"] {
        let out_path = dir.path().join(format!("report_{threads}.csv"));
        let output = bin()
            .env("PATCHDCT_THREADS", threads)
            .args([
                "sweep",
                "--spec",
                spec.to_str().unwrap(),
                "--out",
                out_path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_success(&output);
        assert_eq!(
            std::fs::read_to_string(&out_path).unwrap(),
            golden,
            "threads={threads}"
        );
    }
}

#[test]
fn sweep_failure_leaves_no_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("bad_spec.json");
    // Patch size 9 does not divide 64; the run aborts.
    std::fs::write(
        &spec_path,
        r#"{"source": {"synthetic": {"seed": 1, "count": 2}},
            "resolution": 64, "patch_configs": [[9, 6]]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("report.csv");
    let output = run(&[
        "sweep",
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1);
    assert!(!out_path.exists(), "partial CSV written");
}

#[test]
fn eval_of_identical_lists_scores_one_and_validates_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pbm");
    let b = dir.path().join("b.pbm");
    write_disc(&a, 16);
    write_disc(&b, 16);

    let stem = dir.path().join("report");
    assert_success(&run(&[
        "eval",
        "--pred",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--truth",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        stem.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",1,1"), "row {line}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mean_iou"], 1.0);
    assert_eq!(report["count"], 2);

    // Unpaired lists are an input error.
    let out = run(&[
        "eval",
        "--pred",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--truth",
        a.to_str().unwrap(),
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);

    // So is an empty list.
    let out = run(&["eval", "--out", stem.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn synth_is_deterministic_and_manifested() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("one");
    let second = dir.path().join("two");
    for out in [&first, &second] {
        assert_success(&run(&[
            "synth",
            "--seed",
            "9",
            "--count",
            "4",
            "--resolution",
            "32",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    for name in ["mask_0000.pbm", "mask_0003.pbm", "manifest.json"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(first.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["count"], 4);
    assert_eq!(manifest["resolution"], 32);
    assert_eq!(manifest["digests"].as_array().unwrap().len(), 4);
}

#[test]
fn refine_writes_a_mask_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.pbm");
    write_disc(&truth, 32);
    let out = dir.path().join("refined.pbm");
    let trace = dir.path().join("trace.json");
    assert_success(&run(&[
        "refine",
        "--coarse",
        truth.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--patch-dim",
        "64",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]));
    // Full-length oracle refinement reproduces the truth exactly.
    assert_eq!(
        pbm::read_mask(&out).unwrap(),
        pbm::read_mask(&truth).unwrap()
    );
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(trace["stages"].as_array().unwrap().len(), 1);
    assert_eq!(trace["stages"][0]["iou_vs_truth"], 1.0);
}

#[test]
fn overlay_paints_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("m.pbm");
    write_disc(&mask, 16);
    let out = dir.path().join("overlay.ppm");
    assert_success(&run(&[
        "overlay",
        "--mask",
        mask.to_str().unwrap(),
        "--truth",
        mask.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let ppm = std::fs::read(&out).unwrap();
    assert!(ppm.starts_with(b"P6\n16 16\n255\n"));
    // Identical masks: only green (TP) and black (TN) pixels.
    let header_end = ppm
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .map(|(i, _)| i)
        .nth(2)
        .unwrap()
        + 1;
    let body = &ppm[header_end..];
    assert_eq!(body.len(), 16 * 16 * 3);
    for px in body.chunks(3) {
        assert!(
            px == [0, 255, 0] || px == [0, 0, 0],
            "unexpected color {px:?}"
        );
    }

    // Size mismatch is an input error.
    let small = dir.path().join("small.pbm");
    write_disc(&small, 8);
    let output = run(&[
        "overlay",
        "--mask",
        small.to_str().unwrap(),
        "--truth",
        mask.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn stats_reports_the_three_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats.json");
    assert_success(&run(&[
        "stats",
        "--seed",
        "3",
        "--count",
        "5",
        "--resolution",
        "32",
        "--out",
        out.to_str().unwrap(),
    ]));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for class in ["foreground", "background", "mixed"] {
        assert!(stats[class]["patches"].is_u64(), "missing {class}");
        assert_eq!(stats[class]["positions"].as_array().unwrap().len(), 6);
    }
}
