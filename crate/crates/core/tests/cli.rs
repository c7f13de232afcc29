use std::path::Path;
use std::process::{Command, Output};

fn tec_polar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tec-polar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Column `col` of the data rows of a CSV.
fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn series_matches_reference_row() {
    let out = tec_polar(&[
        "series",
        "becpair:0.55,0.55",
        "--kernel",
        "twist",
        "--depth",
        "20",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,mean_psi,neg_log2_ratio,mean_inertia\n"));
    let ratios = column(&text, 2);
    assert_eq!(ratios.len(), 20);
    assert!((ratios[9] - 3.1585).abs() <= 0.01, "n=10: {}", ratios[9]);
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        &["series", "becpair:0.55,0.55", "--depth", "12"][..],
        &["scatter", "becpair:0.55,0.55", "--depth", "8"][..],
        &["verify", "uniform-q", "--samples", "2000", "--seed", "7"][..],
    ] {
        let a = tec_polar(args);
        let b = tec_polar(args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn verify_all_passes() {
    let out = tec_polar(&["verify", "all", "--samples", "20000", "--seed", "1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 11);
    assert!(lines.iter().all(|r| r["pass"] == true));
}

#[test]
fn trap_writes_spline_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inner.csv");
    let out = tec_polar(&[
        "trap",
        "inner",
        "--nodes",
        "5001",
        "--tol",
        "1e-7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let xs = column(&text, 0);
    let ys = column(&text, 1);
    assert_eq!(xs.len(), 5001);
    let mid = ys[2500];
    assert!((mid - 0.3930).abs() <= 0.002, "phi(0.5) = {mid}");
}

#[test]
fn figure_commands_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let fig3 = dir.path().join("fig3");
    let out = tec_polar(&["fig3", "--depth", "10", "--out", fig3.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["series_twist.csv", "series_untwisted.csv"] {
        let text = std::fs::read_to_string(fig3.join(name)).unwrap();
        assert_eq!(column(&text, 2).len(), 10);
    }

    let fig2 = dir.path().join("fig2");
    let out = tec_polar(&[
        "fig2",
        "--nodes",
        "5001",
        "--tol",
        "1e-7",
        "--out",
        fig2.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(Path::new(&fig2.join("scatter.csv")).exists());
    let curves = std::fs::read_to_string(fig2.join("curves.csv")).unwrap();
    assert!(
        curves.starts_with("x,alpha_parabola,outer_parabola,poly_inner,poly_outer,inner,outer\n")
    );
    assert_eq!(curves.lines().count(), 102);
    let scatter = std::fs::read_to_string(fig2.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1025);
}

#[test]
fn exit_codes() {
    assert_eq!(
        tec_polar(&["show", "tec:0.5,0.6,0,0,0"]).status.code(),
        Some(2)
    );
    assert_eq!(tec_polar(&["bogus"]).status.code(), Some(2));
    assert_eq!(tec_polar(&["show", "qec:0.3"]).status.code(), Some(0));
    assert_eq!(
        tec_polar(&["trap", "outer", "--nodes", "5001", "--max-iters", "2"])
            .status
            .code(),
        Some(1)
    );
}
