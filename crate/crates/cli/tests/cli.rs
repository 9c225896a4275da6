mod common;

use std::path::Path;

use common::{f, ok, read_rows, run, s, snapshot, write_config};
use gpcal_cli::{EXIT_CONFIG, EXIT_INPUT, EXIT_SCHEMA};

const SMALL: &str =
    "samples_per_step = 2\nspeed_steps = 15\nrun_temps = [19.0, 22.0, 25.0, 28.0, 30.0]\n";

fn small_dataset(dir: &Path, seed: u64) -> std::path::PathBuf {
    let cfg = write_config(dir, "small.toml", SMALL);
    let out = dir.join(format!("data{seed}"));
    ok(&[
        "synth",
        "--synth-config",
        s(&cfg),
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    out.join("dataset.csv")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

#[test]
fn train_on_default_dataset_fits_well() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", s(d)]);
    ok(&[
        "train",
        "--data",
        s(&d.join("dataset.csv")),
        "--kernel",
        "se",
        "--restarts",
        "1",
        "--out",
        s(d),
    ]);
    assert!(d.join("model.gpcal").is_file());
    let rows = read_rows(&d.join("train_report.csv"));
    assert_eq!(rows[0]["dataset"], "train");
    assert!(f(&rows[0], "r2") > 0.99, "{rows:?}");
}

#[test]
fn exit_codes_follow_the_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("missing.csv");
    assert_eq!(
        code(&["train", "--data", s(&missing), "--out", s(d)]),
        EXIT_SCHEMA as i32
    );

    let cold = write_config(d, "cold.toml", "wire_temp = 10.0\n");
    assert_eq!(
        code(&["synth", "--synth-config", s(&cold), "--out", s(d)]),
        EXIT_CONFIG as i32
    );
    assert_eq!(
        code(&["crossval", "--data", s(&missing), "--split", "kfold:1"]),
        EXIT_CONFIG as i32
    );
    assert_eq!(
        gpcal_cli_code_with_env(&["synth", "--out", s(d)], "GPCAL_THREADS", "zero"),
        EXIT_CONFIG as i32
    );

    let data = small_dataset(d, 1);
    let model_dir = d.join("m");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--kernel",
        "se",
        "--restarts",
        "1",
        "--out",
        s(&model_dir),
    ]);
    let model = model_dir.join("model.gpcal");
    let header_only = write_config(d, "empty.csv", "voltage,air_temp,wind_speed,run_id\n");
    assert_eq!(
        code(&[
            "evaluate",
            "--model",
            s(&model),
            "--data",
            s(&header_only),
            "--out",
            s(d)
        ]),
        EXIT_INPUT as i32
    );

    let text =
        std::fs::read_to_string(&model)
            .unwrap()
            .replacen("gpcal-model v1", "gpcal-model v9", 1);
    let future = write_config(d, "future.gpcal", &text);
    let out = run(&[
        "evaluate",
        "--model",
        s(&future),
        "--data",
        s(&data),
        "--out",
        s(d),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_SCHEMA as i32));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
}

fn gpcal_cli_code_with_env(args: &[&str], key: &str, val: &str) -> i32 {
    common::gpcal()
        .args(args)
        .env(key, val)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn same_seed_gives_identical_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = small_dataset(d, 3);
    let args = |out: &Path| {
        vec![
            "train".to_string(),
            "--data".into(),
            s(&data).into(),
            "--split".into(),
            "random:0.7".into(),
            "--restarts".into(),
            "2".into(),
            "--seed".into(),
            "9".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    for out in ["a", "b"] {
        let a = args(&d.join(out));
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    }
    assert_eq!(
        std::fs::read(d.join("a/model.gpcal")).unwrap(),
        std::fs::read(d.join("b/model.gpcal")).unwrap()
    );
}

#[test]
fn training_error_below_held_out_error_and_coverage_plausible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let train = small_dataset(d, 11);
    let held_out = small_dataset(d, 12);
    ok(&[
        "train",
        "--data",
        s(&train),
        "--kernel",
        "matern52",
        "--restarts",
        "2",
        "--out",
        s(&d.join("m")),
    ]);
    let model = d.join("m/model.gpcal");
    ok(&[
        "evaluate",
        "--model",
        s(&model),
        "--data",
        s(&train),
        "--out",
        s(&d.join("e_train")),
    ]);
    ok(&[
        "evaluate",
        "--model",
        s(&model),
        "--data",
        s(&held_out),
        "--out",
        s(&d.join("e_test")),
    ]);
    let tr = &read_rows(&d.join("e_train/eval_report.csv"))[0];
    let te = &read_rows(&d.join("e_test/eval_report.csv"))[0];
    assert!(
        f(tr, "mae") < f(te, "mae"),
        "train {} vs held-out {}",
        tr["mae"],
        te["mae"]
    );
    let cov = f(te, "coverage");
    assert!((0.90..=0.98).contains(&cov), "coverage {cov}");

    // prediction file columns and 17-digit re-ingestion
    let preds = read_rows(&d.join("e_test/predictions.csv"));
    let cols: Vec<&String> = preds[0].keys().collect();
    for c in [
        "index",
        "voltage",
        "air_temp",
        "truth",
        "mean",
        "predictive_std",
        "interval_low",
        "interval_high",
    ] {
        assert!(cols.iter().any(|k| k.as_str() == c), "missing {c}");
    }
    let truth: Vec<f64> = preds.iter().map(|r| f(r, "truth")).collect();
    let mean: Vec<f64> = preds.iter().map(|r| f(r, "mean")).collect();
    let mae = gpcal_core::select::mae(&truth, &mean).unwrap();
    assert!(
        (mae - f(te, "mae")).abs() <= 1e-12,
        "{mae} vs {}",
        te["mae"]
    );
}

#[test]
fn single_random_repeat_matches_train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = small_dataset(d, 4);
    let common_args = ["--kernel", "rq", "--restarts", "2", "--seed", "17"];
    let mut cv = vec![
        "crossval",
        "--data",
        s(&data),
        "--split",
        "random:0.7",
        "--repeats",
        "1",
    ];
    cv.extend(common_args);
    let cv_dir = d.join("cv");
    cv.extend(["--out", s(&cv_dir)]);
    ok(&cv);

    let mut tr = vec!["train", "--data", s(&data), "--split", "random:0.7"];
    tr.extend(common_args);
    let tr_dir = d.join("tr");
    tr.extend(["--out", s(&tr_dir)]);
    ok(&tr);
    ok(&[
        "evaluate",
        "--model",
        s(&tr_dir.join("model.gpcal")),
        "--data",
        s(&tr_dir.join("test.csv")),
        "--out",
        s(&d.join("ev")),
    ]);

    let fold = &read_rows(&cv_dir.join("crossval_folds.csv"))[0];
    let ev = &read_rows(&d.join("ev/eval_report.csv"))[0];
    let report = read_rows(&tr_dir.join("train_report.csv"));
    for m in ["mae", "rmse", "r2", "coverage"] {
        assert_eq!(fold[&format!("test_{m}")], ev[m], "{m}");
        assert_eq!(fold[&format!("train_{m}")], report[0][m], "{m}");
    }
}

#[test]
fn leave_one_run_out_orders_train_interpolation_extrapolation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = small_dataset(d, 5);
    ok(&[
        "crossval",
        "--data",
        s(&data),
        "--split",
        "byrun:all",
        "--kernel",
        "se",
        "--restarts",
        "2",
        "--out",
        s(d),
    ]);
    let folds = read_rows(&d.join("byrun_folds.csv"));
    assert_eq!(folds.len(), 5);
    for r in &folds {
        assert!(f(r, "train_rmse") < f(r, "test_rmse"), "{r:?}");
        let extreme = r["run_id"] == "T19" || r["run_id"] == "T30";
        assert_eq!(
            r["regime"],
            if extreme {
                "extrapolation"
            } else {
                "interpolation"
            }
        );
    }
    let summary = read_rows(&d.join("byrun_summary.csv"));
    let by = |g: &str| summary.iter().find(|r| r["group"] == g).unwrap().clone();
    assert!(f(&by("extrapolation"), "test_rmse") > f(&by("interpolation"), "test_rmse"));
}

#[test]
fn sensitivity_zero_levels_equal_clean_evaluation_and_degrade_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = small_dataset(d, 6);
    ok(&[
        "train",
        "--data",
        s(&data),
        "--split",
        "random:0.7",
        "--kernel",
        "se",
        "--restarts",
        "2",
        "--out",
        s(&d.join("m")),
    ]);
    let test = d.join("m/test.csv");
    ok(&[
        "evaluate",
        "--model",
        s(&d.join("m/model.gpcal")),
        "--data",
        s(&test),
        "--out",
        s(&d.join("ev")),
    ]);
    ok(&[
        "sensitivity",
        "--model",
        s(&d.join("m/model.gpcal")),
        "--data",
        s(&test),
        "--systematic-levels",
        "0,0.5,1.0,2.0",
        "--out",
        s(&d.join("sens")),
    ]);
    let clean = &read_rows(&d.join("ev/eval_report.csv"))[0];
    let rows = read_rows(&d.join("sens/sensitivity.csv"));
    for r in rows.iter().filter(|r| f(r, "level") == 0.0) {
        for m in ["mae", "rmse", "r2", "coverage"] {
            assert_eq!(r[m], clean[m], "{} {m}", r["error_type"]);
        }
    }
    for kind in ["random", "systematic"] {
        let mae: Vec<f64> = rows
            .iter()
            .filter(|r| r["error_type"] == kind)
            .map(|r| f(r, "mae"))
            .collect();
        assert!(mae.windows(2).all(|w| w[1] >= w[0]), "{kind}: {mae:?}");
    }
}

#[test]
fn compare_reports_sorted_bic_and_beats_linear() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = small_dataset(d, 7);
    ok(&[
        "compare",
        "--data",
        s(&data),
        "--split",
        "random:0.7",
        "--restarts",
        "2",
        "--bic-base",
        "10",
        "--out",
        s(d),
    ]);
    let bic = read_rows(&d.join("bic.csv"));
    assert_eq!(bic.len(), 4);
    let values: Vec<f64> = bic.iter().map(|r| f(r, "bic")).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]), "{values:?}");
    for r in &bic {
        let expected = if r["kernel"] == "rq" { "3" } else { "2" };
        assert_eq!(r["m"], expected);
        let n: f64 = f(r, "n");
        let recomputed = -2.0 * f(r, "log_marginal") + f(r, "m") * n.log10();
        assert!((recomputed - f(r, "bic")).abs() <= 1e-9 * recomputed.abs());
    }
    let metrics = read_rows(&d.join("metrics.csv"));
    let test_rmse = |model: &str| {
        f(
            metrics
                .iter()
                .find(|r| r["model"] == model && r["dataset"] == "test")
                .unwrap(),
            "rmse",
        )
    };
    let lr = test_rmse("linear");
    for k in ["se", "exp", "matern52", "rq"] {
        assert!(test_rmse(k) < lr, "{k}");
    }
}

#[test]
fn kfold_covers_every_record_once() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = small_dataset(d, 8);
    ok(&[
        "crossval",
        "--data",
        s(&data),
        "--split",
        "kfold:6",
        "--kernel",
        "exp",
        "--restarts",
        "1",
        "--out",
        s(d),
    ]);
    let folds = read_rows(&d.join("crossval_folds.csv"));
    assert_eq!(folds.len(), 6);
    let tested: f64 = folds.iter().map(|r| f(r, "test_n")).sum();
    assert_eq!(tested, 150.0);
    let summary = read_rows(&d.join("crossval_summary.csv"));
    for r in &summary {
        assert!(f(r, "min") <= f(r, "q1") && f(r, "q1") <= f(r, "median"));
        assert!(f(r, "median") <= f(r, "q3") && f(r, "q3") <= f(r, "max"));
    }
    let _ = snapshot(d);
}
