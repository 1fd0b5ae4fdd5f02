use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sparseflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparseflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sparseflow(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen", "--count", "5", "--density", "0.01", "--seed", "7", "--out", "d/"],
    );
    ok(
        dir.path(),
        &["gen", "--count", "5", "--density", "0.01", "--seed", "7", "--out", "e/"],
    );
    let names: Vec<_> = fs::read_dir(dir.path().join("d"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 5);
    for n in names {
        let a = fs::read(dir.path().join("d").join(&n)).unwrap();
        let b = fs::read(dir.path().join("e").join(&n)).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"%%MatrixMarket"));
    }
}

#[test]
fn full_pipeline_on_synthetic_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("sim.cfg"), "mem_block_rows = 4\nresident_blocks = 2\n").unwrap();
    ok(
        d,
        &[
            "--seed",
            "5",
            "gen",
            "--corpus",
            "20",
            "--min-dim",
            "32",
            "--max-dim",
            "96",
            "--out",
            "corpus",
        ],
    );
    let manifest = fs::read_to_string(d.join("corpus/manifest.txt")).unwrap();
    assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 20);

    let build = [
        "--seed",
        "5",
        "--config",
        "sim.cfg",
        "build-dataset",
        "--manifest",
        "corpus/manifest.txt",
        "--block-rows",
        "32",
        "--jobs",
        "2",
        "--out",
        "data/dataset.csv",
    ];
    ok(d, &build);
    let first = fs::read(d.join("data/dataset.csv")).unwrap();
    ok(d, &build);
    assert_eq!(first, fs::read(d.join("data/dataset.csv")).unwrap());
    for f in ["dataset", "dataset_train", "dataset_eval"] {
        assert!(d.join(format!("data/{f}.csv")).exists());
        assert!(d.join(format!("data/{f}.scaler")).exists());
    }

    ok(
        d,
        &[
            "--out-dir",
            "out",
            "train-dt",
            "--dataset",
            "data/dataset_train.csv",
            "--max-depth",
            "9",
            "--out",
            "model.dt",
        ],
    );
    ok(
        d,
        &[
            "--out-dir",
            "out",
            "--seed",
            "3",
            "train-rl",
            "--dataset",
            "data/dataset_train.csv",
            "--episodes",
            "400",
            "--out",
            "model.rl",
        ],
    );
    let rl_a = fs::read(d.join("out/model.rl")).unwrap();
    ok(
        d,
        &[
            "--out-dir",
            "out",
            "--seed",
            "3",
            "train-rl",
            "--dataset",
            "data/dataset_train.csv",
            "--episodes",
            "400",
            "--out",
            "model.rl",
        ],
    );
    assert_eq!(rl_a, fs::read(d.join("out/model.rl")).unwrap());

    ok(
        d,
        &[
            "--out-dir",
            "out",
            "export-rules",
            "--model",
            "out/model.dt",
            "--depth",
            "2",
            "--out",
            "rules.txt",
        ],
    );
    let rules = fs::read_to_string(d.join("out/rules.txt")).unwrap();
    assert!(rules.starts_with("def heuristic(input):\n"));
    assert!(rules.contains("predicted.append('"));

    for (model, file) in [
        ("dt", Some("out/model.dt")),
        ("rl", Some("out/model.rl")),
        ("heuristic", None),
        ("oracle", None),
        ("op", None),
    ] {
        let out = format!("report_{model}.csv");
        let mut args = vec![
            "--out-dir",
            "out",
            "evaluate",
            "--model",
            model,
            "--dataset",
            "data/dataset_eval.csv",
            "--out",
            &out,
        ];
        if let Some(f) = file {
            args.extend(["--model-file", f]);
        }
        ok(d, &args);
        let report = fs::read_to_string(d.join("out").join(&out)).unwrap();
        assert!(report.starts_with("pair_id,speedup_ip,speedup_op,speedup_rw,speedup_h,accuracy\n"));
        assert!(report.contains("#total,"));
    }
    let oracle = fs::read_to_string(d.join("out/report_oracle.csv")).unwrap();
    let total: Vec<f64> = oracle
        .lines()
        .find(|l| l.starts_with("#total"))
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(total[..4].iter().all(|&s| s >= 1.0));
    assert_eq!(total[4], 1.0);

    let storage = ok(d, &["storage-report", "out/model.dt", "out/rules.txt", "out/model.rl"]);
    assert!(storage.starts_with("file,bytes\n"));
    assert_eq!(storage.lines().count(), 4);

    ok(
        d,
        &[
            "--out-dir",
            "out",
            "sweep",
            "--dataset",
            "data/dataset.csv",
            "--out",
            "sweep.csv",
        ],
    );
    let rows = fs::read_to_string(d.join("data/dataset.csv")).unwrap().lines().count();
    assert_eq!(
        fs::read_to_string(d.join("out/sweep.csv")).unwrap().lines().count(),
        rows
    );

    let cv = ok(d, &["cv", "--dataset", "data/dataset.csv", "--k", "5"]);
    assert!(cv.contains("mean accuracy"));
}

#[test]
fn simulate_and_features_on_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("dense.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 1\n1 2 1\n2 1 1\n2 2 1\n",
    )
    .unwrap();
    let sim = ok(d, &["simulate", "--a", "dense.mtx", "--b", "dense.mtx"]);
    let lines: Vec<&str> = sim.lines().collect();
    assert_eq!(
        lines[0],
        "dataflow,latency_cycles,pe_utilization,result_nnz,total_work_cycles,misses"
    );
    assert_eq!(lines[1], "ip,4,1.0,4,16,0");
    assert_eq!(lines[2], "op,8,0.5,4,16,0");
    assert!(lines[3].starts_with("rw,8,"));
    let only_op = ok(
        d,
        &["simulate", "--a", "dense.mtx", "--b", "dense.mtx", "--dataflow", "op"],
    );
    assert_eq!(only_op.lines().count(), 2);
    assert_eq!(only_op.lines().nth(1), Some("op,8,0.5,4,16,0"));
    let feats = ok(d, &["features", "--a", "dense.mtx", "--b", "dense.mtx"]);
    assert!(feats.starts_with("sparsityA,sparsityB,"));
    assert!(feats.lines().nth(1).unwrap().starts_with("1.0,1.0,2.0,"));
}

#[test]
fn heuristic_labels_scaled_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let header = "id,sparsityA,sparsityB,avg_row_lengthA,avg_row_lengthB,avg_col_lengthA,avg_col_lengthB,avg_row_lengthA_var,avg_row_lengthB_var,avg_col_lengthA_var,avg_col_lengthB_var,blocks_accessed,size";
    let rows = [
        "r,0,0,0,0,0,0,0.005,0,0,0,0.03,0",
        "o,0,0,0,0,0,0,0.02,0,0,0,0.03,0",
        "i,0,0,0,0,0,0,0.5,0,0,0,0.05,0",
    ];
    fs::write(d.join("f.csv"), format!("{header}\n{}\n", rows.join("\n"))).unwrap();
    let out = ok(d, &["heuristic", "--features", "f.csv", "--rules-out", "h.py"]);
    let labels: Vec<&str> = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels, ["2", "1", "0"]);
    assert!(fs::metadata(d.join("h.py")).unwrap().len() < 1024);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = sparseflow(d, &["gen", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(sparseflow(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(sparseflow(d, &["--help"]).status.code(), Some(0));
    assert_eq!(sparseflow(d, &["--version"]).status.code(), Some(0));

    let missing = sparseflow(d, &["train-dt", "--dataset", "nope.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));

    fs::write(
        d.join("bad.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
    )
    .unwrap();
    assert_eq!(
        sparseflow(d, &["simulate", "--a", "bad.mtx", "--b", "bad.mtx"])
            .status
            .code(),
        Some(2)
    );

    fs::write(d.join("bad.cfg"), "warp_factor = 9\n").unwrap();
    let cfg = sparseflow(d, &["--config", "bad.cfg", "gen", "--out", "x"]);
    assert_eq!(cfg.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&cfg.stderr).contains("unknown key"));

    assert_eq!(
        sparseflow(d, &["evaluate", "--model", "dt", "--dataset", "x.csv"])
            .status
            .code(),
        Some(2)
    );
}
