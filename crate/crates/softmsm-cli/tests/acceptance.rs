//! Acceptance criterion 11: the experiment commands are deterministic — the
//! CSV output is byte-identical across repeated runs with the same seed and
//! across different worker-thread caps.

use std::path::PathBuf;
use std::process::Command;

fn data_file(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

/// Runs the binary with `--threads` prepended and returns the produced CSV.
fn run_csv(threads: &str, args: &[&str]) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_softmsm"))
        .args(["--threads", threads])
        .args(args)
        .arg("--out")
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success(), "command failed: {args:?}");
    std::fs::read(&out_path).unwrap()
}

#[test]
fn criterion_11_csv_determinism_across_runs_and_threads() {
    let train = data_file("warped_shapes_TRAIN.tsv");
    let test = data_file("warped_shapes_TEST.tsv");

    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "average-soft",
            vec![
                "average",
                "--data",
                &train,
                "--method",
                "soft",
                "--geometry",
                "msm",
                "--gamma",
                "0.01",
                "--sample",
                "5",
                "--repeats",
                "2",
                "--seed",
                "7",
                "--normalize",
                "--max-iters",
                "30",
            ],
        ),
        (
            "average-ssg",
            vec![
                "average",
                "--data",
                &train,
                "--method",
                "ssg",
                "--geometry",
                "dtw",
                "--sample",
                "6",
                "--repeats",
                "2",
                "--seed",
                "3",
                "--normalize",
                "--max-iters",
                "20",
            ],
        ),
        (
            "cluster-soft",
            vec![
                "cluster",
                "--data",
                &train,
                "--averaging",
                "soft",
                "--geometry",
                "msm",
                "--gamma",
                "0.01",
                "--seed",
                "5",
                "--normalize",
                "--max-iters",
                "20",
                "--lloyd-iters",
                "2",
            ],
        ),
        (
            "classify-eba",
            vec![
                "classify",
                "--train",
                &train,
                "--test",
                &test,
                "--averaging",
                "eba",
                "--variant",
                "soft-inference",
                "--geometry",
                "msm",
                "--seed",
                "1",
                "--normalize",
            ],
        ),
    ];

    for (label, args) in commands {
        let first = run_csv("1", &args);
        let second = run_csv("1", &args);
        assert_eq!(
            first, second,
            "criterion 11: {label} differs across identical runs"
        );
        let four = run_csv("4", &args);
        assert_eq!(
            first, four,
            "criterion 11: {label} differs between --threads 1 and --threads 4"
        );
        let default_pool = run_csv("0", &args);
        assert_eq!(
            first, default_pool,
            "criterion 11: {label} differs under the default pool"
        );
        assert!(!first.is_empty());
    }
    println!(
        "ACCEPTANCE 11 PASS: average/cluster/classify CSV byte-identical across reruns and --threads 1/4/default"
    );
}
