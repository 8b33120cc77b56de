use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dwdt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwdt"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
}

fn random_points(path: &Path, n: usize) {
    // fixed LCG so the file does not depend on any RNG crate
    let mut x: u64 = 12345;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64
    };
    let rows: Vec<String> = (0..n)
        .map(|_| format!("{} {} {}", next(), next(), 0.2 * next()))
        .collect();
    fs::write(path, rows.join("\n")).unwrap();
}

#[test]
fn help_lists_commands_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwdt(&["--help"], dir.path());
    assert!(o.status.success());
    for cmd in ["triangulate", "optimize", "oracle", "gradcheck", "metrics", "export", "demo"] {
        assert!(stdout(&o).contains(cmd), "{cmd}");
    }
    let o = dwdt(&["optimize", "--help"], dir.path());
    let text = stdout(&o);
    for d in ["[default: 1000]", "[default: 80]", "[default: 0.01]", "[default: 1e-4]", "[default: 500]"] {
        assert!(text.contains(d), "{d} missing from\n{text}");
    }
    let o = dwdt(&["triangulate", "--help"], dir.path());
    assert!(stdout(&o).contains("[default: 1000]"));
}

#[test]
fn three_points_make_one_triangle() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.txt"), "0 0\n1 0\n0 1\n").unwrap();
    let o = dwdt(&["triangulate", "p.txt", "--output", "t"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let report = stdout(&o);
    assert_eq!(value(&report, "faces"), "1");
    assert_eq!(value(&report, "alpha").parse::<f64>().unwrap(), 1000.0);
    assert_eq!(value(&report, "k"), "80");
    let obj = fs::read_to_string(dir.path().join("t/mesh.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 1);
    assert!(dir.path().join("t/soft.svg").exists());
    assert_eq!(fs::read_to_string(dir.path().join("t/report.txt")).unwrap(), report);
}

#[test]
fn oracle_comparison_matches() {
    let dir = tempfile::tempdir().unwrap();
    random_points(&dir.path().join("p.txt"), 40);
    let o = dwdt(&["triangulate", "p.txt", "--compare-oracle"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).lines().any(|l| l == "MATCH"));

    // a threshold of 0.99 drops the faces whose scores are not saturated
    let o = dwdt(&["triangulate", "p.txt", "--compare-oracle", "--threshold", "0.99999999"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l == "MISMATCH"));

    let o = dwdt(&["oracle", "p.txt", "--obj", "o.obj"], dir.path());
    assert!(o.status.success());
    let faces = value(&stdout(&o), "faces").to_string();
    let o = dwdt(&["triangulate", "p.txt"], dir.path());
    assert_eq!(value(&stdout(&o), "faces"), faces);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(dwdt(&["triangulate", "--bogus"], p).status.code(), Some(1));
    assert_eq!(dwdt(&["optimize", "--alpha", "-1"], p).status.code(), Some(1));
    assert_eq!(dwdt(&["optimize", "--task", "nonsense"], p).status.code(), Some(1));
    assert_eq!(dwdt(&["triangulate", "missing.txt"], p).status.code(), Some(1));
    assert_eq!(dwdt(&["demo", "no-such-demo"], p).status.code(), Some(1));
    // four cocircular points have no unique triangulation
    fs::write(p.join("sq.txt"), "0 0\n1 0\n1 1\n0 1\n").unwrap();
    assert_eq!(dwdt(&["oracle", "sq.txt"], p).status.code(), Some(2));
}

#[test]
fn zero_iterations_keep_the_initial_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwdt(&["optimize", "--task", "size", "--iters", "0", "--vertices", "40", "--output", "o"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let m = fs::read_to_string(dir.path().join("o/metrics.txt")).unwrap();
    for key in ["relative_size_rmse", "size_rmse", "angle_std", "area_cv", "faces"] {
        assert_eq!(value(&m, &format!("initial.{key}")), value(&m, &format!("final.{key}")), "{key}");
    }
    for f in ["initial.obj", "final.obj", "final.svg", "log.csv", "config.txt", "snapshots/iter_00000.obj"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
}

#[test]
fn blend_logs_both_terms() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwdt(
        &["optimize", "--task", "blend", "--t", "0.5", "--iters", "2", "--vertices", "30", "--output", "b"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let csv = fs::read_to_string(dir.path().join("b/log.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let (si, ai) = (
        header.iter().position(|&h| h == "size").unwrap(),
        header.iter().position(|&h| h == "angle").unwrap(),
    );
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| !r[si].is_empty() && !r[ai].is_empty()));
}

#[test]
fn annealing_baseline_is_reported_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwdt(
        &["optimize", "--task", "align", "--baseline", "sa", "--iters", "5", "--vertices", "30", "--output", "a"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("metric") && l.contains("adam") && l.contains("sa")));
    assert!(out.lines().any(|l| l.starts_with("alignment_mean")));
    let m = fs::read_to_string(dir.path().join("a/metrics.txt")).unwrap();
    value(&m, "sa.final.alignment_mean").parse::<f64>().unwrap();
    assert!(dir.path().join("a/sa_final.obj").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "# small run\nseed = 3\nvertices = 30\niterations = 1\n").unwrap();
    let o = dwdt(&["optimize", "--config", "run.cfg", "--vertices", "25", "--output", "c"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let c = fs::read_to_string(dir.path().join("c/config.txt")).unwrap();
    assert_eq!(value(&c, "vertices"), "25");
    assert_eq!(value(&c, "seed"), "3");
    assert_eq!(value(&c, "iterations"), "1");
    let pts = fs::read_to_string(dir.path().join("c/initial_points.txt")).unwrap();
    assert_eq!(pts.lines().filter(|l| !l.starts_with('#')).count(), 25);

    fs::write(dir.path().join("bad.cfg"), "seed = 3\nalpha 2\n").unwrap();
    let o = dwdt(&["optimize", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.cfg:2"));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["r1", "r2"] {
        let o = dwdt(
            &["--threads", "1", "optimize", "--iters", "3", "--vertices", "30", "--seed", "5", "--output", out],
            dir.path(),
        );
        assert!(o.status.success(), "{o:?}");
    }
    for f in ["final.obj", "log.csv", "metrics.txt", "final_points.txt"] {
        assert_eq!(
            fs::read(dir.path().join("r1").join(f)).unwrap(),
            fs::read(dir.path().join("r2").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn gradcheck_reports_per_loss() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gradcheck", "--seed", "7", "--n", "12", "--configs", "2"];
    let a = dwdt(&args, dir.path());
    assert!(a.status.success(), "{a:?}");
    let text = stdout(&a);
    for loss in ["size", "boundary", "angle", "curvature"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{loss}: 2/2")) && l.ends_with("PASS")), "{text}");
    }
    assert_eq!(stdout(&dwdt(&args, dir.path())), text);

    let o = dwdt(&["gradcheck", "--loss", "boundary", "--configs", "2"], dir.path());
    let text = stdout(&o);
    assert!(o.status.success());
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("boundary:"));

    // an impossible tolerance fails with exit code 3
    let o = dwdt(&["gradcheck", "--loss", "angle", "--configs", "1", "--tolerance", "1e-300"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn demo_metrics_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = dwdt(&["demo", "square-size", "--vertices", "30", "--iters", "20", "--output", "d"], p);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(value(&stdout(&o), "demo"), "square-size");

    let o = dwdt(&["metrics", "d/final.obj", "--output", "m.txt"], p);
    assert!(o.status.success(), "{o:?}");
    let angle: f64 = value(&stdout(&o), "angle_mean").parse().unwrap();
    assert!((angle - 60.0).abs() < 1e-9);
    assert_eq!(fs::read_to_string(p.join("m.txt")).unwrap(), stdout(&o));

    let o = dwdt(&["export", "--mesh", "d/final.obj", "--svg", "final.svg"], p);
    assert!(o.status.success(), "{o:?}");
    assert!(fs::read_to_string(p.join("final.svg")).unwrap().contains("<svg"));

    random_points(&p.join("pts.txt"), 10);
    let o = dwdt(&["export", "--points", "pts.txt", "--svg", "soft.svg", "--obj", "soft.obj"], p);
    assert!(o.status.success(), "{o:?}");
    assert!(p.join("soft.obj").exists());
    assert_eq!(dwdt(&["export", "--svg", "x.svg"], p).status.code(), Some(1));
}

#[test]
fn catenoid_demo_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwdt(&["demo", "catenoid-equal", "--vertices", "40", "--iters", "10", "--output", "c"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let m = fs::read_to_string(dir.path().join("c/metrics.txt")).unwrap();
    let cv: f64 = value(&m, "final.area_cv").parse().unwrap();
    assert!(cv > 0.0);
    let obj = fs::read_to_string(dir.path().join("c/final.obj")).unwrap();
    // lifted onto the catenoid: some vertex leaves the z = 0 plane
    assert!(obj.lines().filter(|l| l.starts_with("v ")).any(|l| {
        let z: f64 = l.split_whitespace().nth(3).unwrap().parse().unwrap();
        z.abs() > 0.1
    }));
}
