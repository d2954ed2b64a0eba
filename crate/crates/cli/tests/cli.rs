use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ising-conc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value_of(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn check_reports_chain_margin() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "check",
        "--model",
        data("chain6.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((value_of(&text, "rho") - 1.0 / 3.0).abs() < 1e-12);
    assert!(value_of(&text, "at_constant").is_finite());
    assert!(dir.path().join("check.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "check");
    assert_eq!(manifest["inputs"]["model"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn malformed_triplet_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "check",
        "--model",
        data("bad_triplet.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn malformed_polynomial_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "bound",
        "--model",
        data("chain6.toml").to_str().unwrap(),
        "--poly",
        data("bad.poly").to_str().unwrap(),
        "--tgrid",
        "0:4:5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["check", "--model", "/nonexistent/model.toml", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let model = data("chain6.toml");
    let poly = data("mixed.poly");
    let base = [
        "bound",
        "--model",
        model.to_str().unwrap(),
        "--poly",
        poly.to_str().unwrap(),
        "--out",
        out,
    ];
    let o = run(&[&base[..], &["--tgrid", "4:1:5"]].concat());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[&base[..], &["--tgrid", "0:1:5", "--constants", "c=-1"]].concat());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bound_csv_has_branches() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "bound",
        "--model",
        data("chain6.toml").to_str().unwrap(),
        "--poly",
        data("mixed.poly").to_str().unwrap(),
        "--tgrid",
        "0.5:8:16",
        "--constants",
        "c=0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("bound.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,bound,k,partition"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 16);
    let bounds: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
    assert!(rows.iter().all(|r| ["1", "2", "3"].contains(&r[2].as_str())));
}

#[test]
fn norms_of_a_cubic_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "norms",
        "--tensor",
        data("cubic3.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let o = run(&[
        "norms",
        "--tensor",
        data("cubic3.toml").to_str().unwrap(),
        "--partition",
        "{1,2}{4}",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_exit_status_tracks_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let model = data("chain6.toml");
    let poly = data("mixed.poly");
    let base = [
        "validate",
        "--model",
        model.to_str().unwrap(),
        "--poly",
        poly.to_str().unwrap(),
        "--samples",
        "20000",
        "--out",
        out,
    ];
    let o = run(&base);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(value_of(&stdout(&o), "violations"), 0.0);
    let o = run(&[&base[..], &["--constants", "c=100"]].concat());
    assert_eq!(o.status.code(), Some(1));
    assert!(value_of(&stdout(&o), "violations") >= 1.0);
    let csv = std::fs::read_to_string(dir.path().join("envelope.csv")).unwrap();
    assert!(csv.starts_with("t,survival,stderr,bound,branch,violated\n"));
    assert!(csv.contains(",true\n"));
}

#[test]
fn validate_quadratic_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "validate",
        "--model",
        data("chain6.toml").to_str().unwrap(),
        "--tensor",
        data("psd6.json").to_str().unwrap(),
        "--samples",
        "20000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("quad_two_sided"));
}

#[test]
fn verify_at_writes_trials() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify-at",
        "--model",
        data("chain6.toml").to_str().unwrap(),
        "--trials",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("verify_at.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("trial,ent,bound,ratio"));
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn sample_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&[
            "sample",
            "--model",
            data("chain6.toml").to_str().unwrap(),
            "--poly",
            data("mixed.poly").to_str().unwrap(),
            "--samples",
            "500",
            "--seed",
            "9",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("samples.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn example_ex25_prints_table_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["example", "ex2.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("slope"));
    let slopes = std::fs::read_to_string(dir.path().join("ex2_5_slopes.csv")).unwrap();
    assert_eq!(slopes.lines().count(), 6);
    let table = std::fs::read_to_string(dir.path().join("ex2_5.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn thread_count_does_not_change_output() {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, threads) in dirs.iter().zip(["1", "4"]) {
        let o = Command::new(env!("CARGO_BIN_EXE_ising-conc"))
            .env("ISING_CONC_THREADS", threads)
            .args([
                "sample",
                "--model",
                data("chain6.toml").to_str().unwrap(),
                "--poly",
                data("mixed.poly").to_str().unwrap(),
                "--samples",
                "400",
                "--out",
                d.path().to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("samples.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}
