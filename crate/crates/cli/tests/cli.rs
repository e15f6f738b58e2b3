use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn subibp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subibp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn moments_prints_closed_form_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = subibp(&["moments", "--alpha", "1", "--p", "0.5", "--paths", "20000", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("1.128379"), "{text}");
    assert!(text.contains("PASS Monte Carlo"), "{text}");
}

#[test]
fn verify_ibp_gaussian_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("gaussian.toml");
    let o = subibp(&[
        "--config",
        cfg.to_str().unwrap(),
        "--paths",
        "50000",
        "--out",
        dir.path().to_str().unwrap(),
        "verify-ibp",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let mut r = csv::Reader::from_path(dir.path().join("identity.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    for row in &rows[..2] {
        let mean: f64 = row[1].parse().unwrap();
        assert!((mean - 0.606531).abs() < 0.02, "{row:?}");
    }
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("PASS identity"));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let run = |workers: &str| {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "--seed",
            "42",
            "--paths",
            "2000",
            "--steps",
            "20",
            "--alpha",
            "1.5",
            "--workers",
            workers,
            "--out",
            dir.path().to_str().unwrap(),
            "harnack",
            "--f",
            "2+sin",
            "--v",
            "0.5",
            "--v",
            "-1",
        ];
        let o = subibp(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        read_dir_sorted(dir.path())
    };
    let a = run("1");
    let b = run("1");
    let c = run("3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.iter().any(|(name, _)| name == "harnack.csv"));
}

#[test]
fn every_row_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config_path("damped_sine.toml");
    let o = subibp(&["--config", cfg.to_str().unwrap(), "--paths", "1000", "--steps", "20", "--out", out, "--json", "bounds"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stdout(&o));
    let o = subibp(&["--config", cfg.to_str().unwrap(), "--paths", "1000", "--steps", "20", "--out", out, "density"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["bounds.csv", "density.csv"] {
        let mut r = csv::Reader::from_path(dir.path().join(name)).unwrap();
        let headers = r.headers().unwrap().clone();
        for col in ["seed", "n", "config_hash"] {
            assert!(headers.iter().any(|h| h == col), "{name} lacks {col}");
        }
        let hash_col = headers.iter().position(|h| h == "config_hash").unwrap();
        for row in r.records() {
            assert_eq!(row.unwrap()[hash_col].len(), 64);
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "bounds");
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[run]\nn_path = 10\n").unwrap();
    let o = subibp(&["--config", bad.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_path"));

    let out = dir.path().join("o");
    let o = subibp(&["--out", out.to_str().unwrap(), "verify-ibp", "--v", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = subibp(&["--out", out.to_str().unwrap(), "--alpha", "2.5", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exploding_drift_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blowup.toml");
    fs::write(
        &cfg,
        "[model]\ndrift = { name = \"linear\", matrix = [[100000.0]] }\n\
         subordinator = { kind = \"deterministic_time\" }\nx0 = [1.0]\nhorizon = 1.0\n",
    )
    .unwrap();
    let o = subibp(&[
        "--config",
        cfg.to_str().unwrap(),
        "--paths",
        "300",
        "--steps",
        "200",
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "simulate",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unstable_lp_constant_exits_1() {
    // β(T) grows like e^{3 T K1} for the damped-sine drift, so the fitted
    // constant drifts across horizons and the stability check fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("damped_sine.toml");
    let o = subibp(&[
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "1.5",
        "--paths",
        "4000",
        "--steps",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
        "bounds",
        "--lp-horizons",
        "0.25",
        "--lp-horizons",
        "0.5",
        "--lp-horizons",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL lp_constant_spread"));
}

#[test]
fn simulate_dumps_paths_and_truncation_study_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config_path("damped_sine.toml");
    let o = subibp(&["--config", cfg.to_str().unwrap(), "--paths", "512", "--steps", "50", "--out", out, "simulate", "--dump-paths", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let path = fs::read_to_string(dir.path().join("paths/path_1.csv")).unwrap();
    assert!(path.starts_with("t,S,X_1,J_11\n"));
    assert_eq!(path.lines().count(), 52);

    let o = subibp(&["--config", cfg.to_str().unwrap(), "--steps", "100", "--out", out, "truncation-study", "--streams", "400"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(fs::read_to_string(dir.path().join("truncation.csv")).unwrap().contains("rms_weight_gap[eps=0.001]"));
}
