use std::path::{Path, PathBuf};

use lsqbench_core::features::build_design_matrix;
use lsqbench_core::matrix::RealVector;
use lsqbench_core::pipeline::read_groups_file;
use lsqbench_core::solvers::{qr_least_squares_fit_with, RankPolicy};
use serde_json::Value;

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn lsqbench(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lsqbench").chain(args.iter().copied());
    let code = lsqbench::run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["synth", "--out", p(&out)];
    args.extend_from_slice(extra);
    let r = lsqbench(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn preprocess_fixture_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("groups.csv");
    let sales = core_fixture("sales.csv");
    let rates = core_fixture("rates.csv");
    let r = lsqbench(&[
        "preprocess",
        "--sales",
        p(&sales),
        "--rates",
        p(&rates),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("groups: 12"));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(core_fixture("golden_groups.csv")).unwrap()
    );
}

#[test]
fn preprocess_without_sales_is_usage_error() {
    let r = lsqbench(&["preprocess", "--rates", "r.csv", "--out", "o.csv"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("--sales"));
}

#[test]
fn preprocess_unreadable_path_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let rates = core_fixture("rates.csv");
    let out = dir.path().join("o.csv");
    let r = lsqbench(&[
        "preprocess",
        "--sales",
        p(&missing),
        "--rates",
        p(&rates),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains(p(&missing)));
    assert!(!out.exists());
}

#[test]
fn preprocess_schema_error_is_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("sales.csv");
    std::fs::write(&bad, "Town,Year\nAvon,2019\n").unwrap();
    let rates = core_fixture("rates.csv");
    let out = dir.path().join("o.csv");
    let r = lsqbench(&[
        "preprocess",
        "--sales",
        p(&bad),
        "--rates",
        p(&rates),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 1, "{}", r.stderr);
}

#[test]
fn run_isolates_lu_failure_on_duplicate_column() {
    // With one town the town indicator duplicates the intercept column.
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "one.csv",
        &[
            "--rows",
            "80",
            "--towns",
            "1",
            "--years",
            "2001..2010",
            "--seed",
            "3",
        ],
    );
    let report = dir.path().join("r.json");
    let r = lsqbench(&["run", "--data", p(&data), "--report", p(&report)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = read_json(&report);
    let solvers = v["solvers"].as_array().unwrap();
    assert_eq!(solvers.len(), 3);
    let lu = solvers.iter().find(|s| s["solver"] == "lu").unwrap();
    assert_eq!(lu["status"], "error");
    assert!(
        lu["error"].as_str().unwrap().contains("singular pivot"),
        "{}",
        lu["error"]
    );
    let qr = solvers.iter().find(|s| s["solver"] == "qr").unwrap();
    assert_eq!(qr["status"], "ok");
    assert_eq!(qr["dependent_columns"][0], "town=Town01");
    assert_eq!(v["condition_number"], "inf");
}

#[test]
fn run_exits_three_when_every_solver_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "one.csv",
        &[
            "--rows",
            "40",
            "--towns",
            "1",
            "--years",
            "2001..2004",
            "--seed",
            "3",
        ],
    );
    let report = dir.path().join("r.json");
    let r = lsqbench(&[
        "run",
        "--data",
        p(&data),
        "--report",
        p(&report),
        "--solver",
        "lu",
    ]);
    assert_eq!(r.code, 3);
    assert_eq!(read_json(&report)["solvers"][0]["status"], "error");
}

#[test]
fn run_rejects_bad_options() {
    let data = core_fixture("golden_groups.csv");
    for extra in [
        ["--test-size", "1.5"],
        ["--solver", "svd"],
        ["--reg-factor", "0"],
        ["--repeat", "0"],
    ] {
        let mut args = vec![
            "run",
            "--data",
            p(&data),
            "--report",
            "/tmp/never-written.json",
        ];
        args.extend_from_slice(&extra);
        assert_eq!(lsqbench(&args).code, 1, "{extra:?}");
    }
}

#[test]
fn run_report_embeds_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = core_fixture("golden_groups.csv");
    let report = dir.path().join("r.json");
    let r = lsqbench(&[
        "run",
        "--data",
        p(&data),
        "--report",
        p(&report),
        "--solver",
        "lu,qr",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = read_json(&report);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["solvers"], serde_json::json!(["qr", "lu"]));
    assert_eq!(v["config"]["test_size"], 0.25);
    assert_eq!(v["config"]["seed"], 42);
    assert_eq!(v["config"]["reg_factor"], 1e-10);
    assert_eq!(v["dataset"]["rows"], 12);
    assert_eq!(v["dataset"]["towns"], 5);
    assert_eq!(v["dataset"]["test_rows"], 3);
}

#[test]
fn compare_writes_all_outputs_and_clamps_k() {
    let dir = tempfile::tempdir().unwrap();
    let data = core_fixture("golden_groups.csv");
    let out = dir.path().join("cmp");
    let r = lsqbench(&["compare", "--data", p(&data), "--out-dir", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for f in [
        "metrics.csv",
        "coefficients_topk.csv",
        "report.json",
        "residuals_qr.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3);

    // 5 towns + 3 numeric columns + intercept = 9 coefficients.
    let topk = std::fs::read_to_string(out.join("coefficients_topk.csv")).unwrap();
    assert_eq!(topk.lines().count(), 1 + 9);
    let v = read_json(&out.join("report.json"));
    assert_eq!(v["config"]["k"], 10);
    assert!(v["notes"]
        .as_array()
        .unwrap()
        .iter()
        .any(|n| n.as_str().unwrap().contains("k clamped")));

    let residuals = std::fs::read_to_string(out.join("residuals_qr.csv")).unwrap();
    let hist_total: u64 = residuals
        .lines()
        .filter(|l| l.starts_with("histogram,"))
        .map(|l| l.split(',').nth(4).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(hist_total, 3);
}

#[test]
fn compare_reports_ill_conditioning_of_full_one_hot() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "s.csv",
        &[
            "--rows",
            "300",
            "--towns",
            "6",
            "--years",
            "2001..2012",
            "--seed",
            "9",
        ],
    );
    let out = dir.path().join("cmp");
    assert_eq!(
        lsqbench(&["compare", "--data", p(&data), "--out-dir", p(&out)]).code,
        0
    );
    let v = read_json(&out.join("report.json"));
    let kappa = &v["condition_number"];
    assert!(kappa == "inf" || kappa.as_f64().unwrap() >= 1e12, "{kappa}");
}

#[test]
fn compare_cleans_up_after_write_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = core_fixture("golden_groups.csv");
    let out = dir.path().join("cmp");
    std::fs::create_dir_all(out.join("report.json")).unwrap();
    let r = lsqbench(&["compare", "--data", p(&data), "--out-dir", p(&out)]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(!out.join("metrics.csv").exists());
    assert!(!out.join("residuals_qr.csv").exists());
    assert!(!out.join("coefficients_topk.csv").exists());
}

#[test]
fn compare_removes_directory_it_created_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "one.csv",
        &[
            "--rows",
            "40",
            "--towns",
            "1",
            "--years",
            "2001..2004",
            "--seed",
            "3",
        ],
    );
    let out = dir.path().join("fresh");
    // Bins must be positive; rejected before anything is written.
    assert_eq!(
        lsqbench(&[
            "compare",
            "--data",
            p(&data),
            "--out-dir",
            p(&out),
            "--bins",
            "0"
        ])
        .code,
        1
    );
    assert!(!out.exists());
}

#[test]
fn synth_rejects_invalid_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    for args in [
        vec!["--rows", "0", "--towns", "1", "--years", "2001..2002"],
        vec!["--rows", "10", "--towns", "11", "--years", "2001..2002"],
        vec!["--rows", "10", "--towns", "2", "--years", "2005..2002"],
    ] {
        let mut full = vec!["synth", "--seed", "1", "--out", p(&out)];
        full.extend(args);
        assert_eq!(lsqbench(&full).code, 1);
    }
    assert!(!out.exists());
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let planted_a = dir.path().join("pa.csv");
    let planted_b = dir.path().join("pb.csv");
    let common = [
        "--rows",
        "200",
        "--towns",
        "5",
        "--years",
        "2001..2010",
        "--seed",
        "11",
    ];
    let a = synth(
        dir.path(),
        "a.csv",
        &[&common[..], &["--planted-coefs", p(&planted_a)]].concat(),
    );
    let b = synth(
        dir.path(),
        "b.csv",
        &[&common[..], &["--planted-coefs", p(&planted_b)]].concat(),
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(&planted_a).unwrap(),
        std::fs::read(&planted_b).unwrap()
    );
    let c = synth(
        dir.path(),
        "c.csv",
        &[
            "--rows",
            "200",
            "--towns",
            "5",
            "--years",
            "2001..2010",
            "--seed",
            "12",
        ],
    );
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn noiseless_continuous_target_recovers_planted_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let planted = dir.path().join("planted.csv");
    let data = synth(
        dir.path(),
        "s.csv",
        &[
            "--rows",
            "400",
            "--towns",
            "8",
            "--years",
            "2001..2015",
            "--seed",
            "21",
            "--noise",
            "0",
            "--target",
            "continuous",
            "--planted-coefs",
            p(&planted),
        ],
    );

    let mut rdr = csv::Reader::from_path(&data).unwrap();
    let target_col = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "Target")
        .unwrap();
    let target: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[target_col].parse().unwrap())
        .collect();
    let design = build_design_matrix(&read_groups_file(&data).unwrap()).unwrap();
    let fit = qr_least_squares_fit_with(
        &design.x,
        &RealVector::new(target).unwrap(),
        RankPolicy::DropDependent,
    )
    .unwrap();

    let mut prdr = csv::Reader::from_path(&planted).unwrap();
    let expected: Vec<(String, f64)> = prdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap())
        })
        .collect();
    let coefs = fit
        .coefficients
        .with_feature_names(&design.column_names)
        .unwrap();
    let layout = coefs.layout();
    assert_eq!(layout.len(), expected.len());
    for ((name, want), (got_name, got)) in expected.iter().zip(layout.iter().zip(coefs.values())) {
        assert_eq!(name, got_name);
        assert!((want - got).abs() <= 1e-6, "{name}: {want} vs {got}");
    }
}

#[test]
fn help_exits_zero() {
    let r = lsqbench(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("compare"));
}
