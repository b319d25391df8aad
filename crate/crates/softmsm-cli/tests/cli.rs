//! End-to-end checks of the command-line interface: output conventions,
//! exit codes, matrix dumps and golden values on the bundled data.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softmsm"))
}

fn data_file(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn stdout_value(output: &Output) -> f64 {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout)
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn dist_zero_for_identical_series_under_msm() {
    let out = bin()
        .args(["dist", "--kind", "msm", "1,2,3", "1,2,3"])
        .output()
        .unwrap();
    assert_eq!(stdout_value(&out), 0.0);
}

#[test]
fn dist_zero_pair_matches_the_closed_form() {
    let out = bin()
        .args([
            "dist", "--kind", "soft-msm", "--gamma", "1", "--cost-c", "1", "0,0", "0,0",
        ])
        .output()
        .unwrap();
    let t = 1.0 - 0.5 * 2.0f64.ln();
    let expected = -(1.0 + 2.0 * (-2.0 * t).exp()).ln();
    assert!((stdout_value(&out) - expected).abs() < 1e-9);
}

#[test]
fn dist_golden_value() {
    let out = bin()
        .args([
            "dist",
            "--kind",
            "soft-msm",
            "--gamma",
            "0.01",
            "--cost-c",
            "1",
            "0.0,0.5,1.0,0.5",
            "0.0,1.0,0.5,0.25",
        ])
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "5.6250000000000000e-1"
    );
}

#[test]
fn dist_reads_series_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    std::fs::write(&a, "0.0 1.0 2.0\n").unwrap();
    std::fs::write(&b, "0.0,2.0,2.0").unwrap();
    let out = bin()
        .args(["dist", "--kind", "dtw"])
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(stdout_value(&out), 1.0);
}

#[test]
fn dist_resolves_relative_paths_via_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("series.txt"), "1.0 2.0\n").unwrap();
    let out = bin()
        .env("SOFTMSM_DATA_DIR", dir.path())
        .args(["dist", "--kind", "dtw", "series.txt", "1,2"])
        .output()
        .unwrap();
    assert_eq!(stdout_value(&out), 0.0);
}

#[test]
fn usage_errors_exit_2_and_io_errors_exit_1() {
    // Mismatched lengths -> usage error.
    let out = bin()
        .args(["dist", "--kind", "msm", "1,2", "1,2,3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // Unknown kind -> clap usage error.
    let out = bin()
        .args(["dist", "--kind", "nope", "1", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unreadable dataset -> I/O error.
    let out = bin()
        .args([
            "average",
            "--data",
            "/nonexistent/file.tsv",
            "--method",
            "eba",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dump_matrices_have_expected_shape_and_corners() {
    let dir = tempfile::tempdir().unwrap();
    let cost_path = dir.path().join("cost.csv");
    let align_path = dir.path().join("align.csv");
    let out = bin()
        .args(["dist", "--kind", "soft-msm", "--gamma", "0.1"])
        .arg("--dump-cost")
        .arg(&cost_path)
        .arg("--dump-align")
        .arg(&align_path)
        .args(["0,1,2,3", "0,2,2,3"])
        .output()
        .unwrap();
    assert!(out.status.success());

    let cost = std::fs::read_to_string(&cost_path).unwrap();
    let rows: Vec<&str> = cost.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].split(',').count(), 4);
    let c11: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert_eq!(c11, 0.0); // (x1-y1)^2 with equal first points

    let align = std::fs::read_to_string(&align_path).unwrap();
    let rows: Vec<&str> = align.lines().collect();
    let last_cell: f64 = rows[3].split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(last_cell, 1.0);
    let first_cell: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert!((first_cell - 1.0).abs() < 1e-8);
}

#[test]
fn hard_alignment_dump_is_binary_diagonal_for_identical_series() {
    let dir = tempfile::tempdir().unwrap();
    let align_path = dir.path().join("align.csv");
    let out = bin()
        .args(["dist", "--kind", "msm"])
        .arg("--dump-align")
        .arg(&align_path)
        .args(["1,2,3", "1,2,3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&align_path).unwrap();
    let grid: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    for (i, row) in grid.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(v, if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn average_with_sample_one_reports_zero_loss_for_eba() {
    let out = bin()
        .args([
            "average",
            "--data",
            &data_file("warped_shapes_TRAIN.tsv"),
            "--method",
            "eba",
            "--geometry",
            "msm",
            "--sample",
            "1",
            "--repeats",
            "2",
            "--seed",
            "0",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,method,gamma,c,seed,metric,value"
    );
    for line in lines {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "row: {line}");
        assert!(line.starts_with("warped_shapes,eba-msm,"));
    }
}

#[test]
fn cluster_golden_row_on_bundled_data() {
    let out = bin()
        .args([
            "cluster",
            "--data",
            &data_file("warped_shapes_TRAIN.tsv"),
            "--data",
            &data_file("warped_shapes_TEST.tsv"),
            "--averaging",
            "eba",
            "--geometry",
            "msm",
            "--seed",
            "0",
            "--normalize",
            "--lloyd-iters",
            "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(
        lines[1].contains("inertia,2.4329170850018072e4"),
        "got {}",
        lines[1]
    );
    assert!(
        lines[2].contains("cl_accuracy,8.7500000000000000e-1"),
        "got {}",
        lines[2]
    );
    assert!(
        lines[3].contains("ari,5.5125254783351962e-1"),
        "got {}",
        lines[3]
    );
}

#[test]
fn classify_golden_row_on_bundled_data() {
    let out = bin()
        .args([
            "classify",
            "--train",
            &data_file("warped_shapes_TRAIN.tsv"),
            "--test",
            &data_file("warped_shapes_TEST.tsv"),
            "--averaging",
            "soft",
            "--variant",
            "hard-inference",
            "--geometry",
            "msm",
            "--seed",
            "0",
            "--normalize",
            "--max-iters",
            "40",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("accuracy,9.0000000000000002e-1"),
        "unexpected classification output: {text}"
    );
}

#[test]
fn average_dumps_traces_and_barycentres() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("trace.csv");
    let bary_path = dir.path().join("bary.csv");
    let out = bin()
        .args([
            "average",
            "--data",
            &data_file("warped_shapes_TRAIN.tsv"),
            "--method",
            "eba",
            "--geometry",
            "msm",
            "--sample",
            "6",
            "--repeats",
            "3",
            "--seed",
            "0",
            "--normalize",
        ])
        .arg("--dump-trace")
        .arg(&trace_path)
        .arg("--dump-barycentre")
        .arg(&bary_path)
        .output()
        .unwrap();
    assert!(out.status.success());

    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "repeat,iteration,loss");
    let mut per_repeat: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let repeat: usize = fields[0].parse().unwrap();
        per_repeat[repeat].push(fields[2].parse().unwrap());
    }
    for (repeat, losses) in per_repeat.iter().enumerate() {
        assert!(!losses.is_empty(), "repeat {repeat} has no trace rows");
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "trace increased in repeat {repeat}");
        }
    }

    let bary = std::fs::read_to_string(&bary_path).unwrap();
    let rows: Vec<&str> = bary.lines().collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].split(',').count(), 60); // bundled series length
}

#[test]
fn average_soft_beats_eba_on_most_bundled_repeats() {
    let run = |method: &str| -> Vec<f64> {
        let out = bin()
            .args([
                "average",
                "--data",
                &data_file("warped_shapes_TRAIN.tsv"),
                "--data",
                &data_file("warped_shapes_TEST.tsv"),
                "--method",
                method,
                "--geometry",
                "msm",
                "--gamma",
                "0.01",
                "--sample",
                "10",
                "--repeats",
                "10",
                "--seed",
                "0",
                "--normalize",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let soft = run("soft");
    let eba = run("eba");
    assert_eq!(soft.len(), 10);
    let wins = soft.iter().zip(&eba).filter(|(s, e)| s < e).count();
    assert!(wins >= 8, "soft won only {wins}/10 repeats");
}

#[test]
fn cluster_with_singleton_classes_reaches_zero_inertia() {
    // One series per class: k = n, every series its own centroid.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singletons.tsv");
    std::fs::write(
        &path,
        "0\t0.0\t0.0\t0.0\n1\t5.0\t5.0\t5.0\n2\t9.0\t9.0\t9.0\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "cluster",
            "--averaging",
            "eba",
            "--geometry",
            "msm",
            "--seed",
            "0",
            "--data",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let inertia_row = text.lines().find(|l| l.contains("inertia")).unwrap();
    let inertia: f64 = inertia_row.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(inertia, 0.0);
    let acc_row = text.lines().find(|l| l.contains("cl_accuracy")).unwrap();
    let acc: f64 = acc_row.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(acc, 1.0);
}

#[test]
fn selftest_passes_and_detects_injected_fault() {
    let out = bin().args(["selftest", "--skip-timing"]).output().unwrap();
    assert!(
        out.status.success(),
        "selftest failed: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS]"));
    assert!(!text.contains("[FAIL]"));

    let out = bin()
        .args(["selftest", "--skip-timing", "--inject-gradient-fault"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}
