use std::path::Path;
use std::process::{Command, Output};

use dualwell::cli::{parse_csv, SweepTable};

fn dualwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualwell"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ANNULUS: &str = r#"{"type":"annulus","r1":0.5,"r2":1.277,"nu":1,"lambda":1}"#;

#[test]
fn roots_prints_json() {
    let out = dualwell(&[
        "roots",
        "--nu",
        "1",
        "--lambda",
        "1",
        "--sigma-sq",
        "0.1111111111111111",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["regime"], "ThreeReal");
    assert!((v["zeta1"].as_f64().unwrap() - 0.213928).abs() < 1e-6);
    assert!((v["zeta3"].as_f64().unwrap() + 0.936679).abs() < 1e-6);

    let out = dualwell(&["roots", "--nu", "1", "--lambda", "1", "--sigma-sq", "-1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

/// Linear interpolation of a column at `r`.
fn interpolate(
    table: &SweepTable,
    r: f64,
    column: impl Fn(&dualwell::cli::SweepRow) -> Option<f64>,
) -> f64 {
    let i = table.rows.iter().position(|row| row.r >= r).unwrap();
    if i == 0 || table.rows[i].r == r {
        return column(&table.rows[i]).unwrap();
    }
    let (a, b) = (&table.rows[i - 1], &table.rows[i]);
    let t = (r - a.r) / (b.r - a.r);
    (1.0 - t) * column(a).unwrap() + t * column(b).unwrap()
}

#[test]
fn sweep_reproduces_reference_roots() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("annulus.json");
    std::fs::write(&config, ANNULUS).unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = dualwell(&[
        "sweep",
        "--config",
        path(&config),
        "--nodes",
        "512",
        "--out",
        path(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 513);
    assert_eq!(text.lines().next().unwrap(), "r,zeta1,zeta2,zeta3,u1,u2,u3");

    let table = SweepTable::from_csv(&text).unwrap();
    let at_one = [0.213928, -0.277249, -0.936679];
    for (k, want) in at_one.iter().enumerate() {
        let got = interpolate(&table, 1.0, |row| row.zeta[k]);
        assert!((got - want).abs() <= 1e-4, "zeta{} = {got}", k + 1);
    }
    let at_half = [0.0573064, -0.0608031, -0.996503];
    for (k, want) in at_half.iter().enumerate() {
        assert!((table.rows[0].zeta[k].unwrap() - want).abs() <= 1e-4);
        assert_eq!(table.rows[0].u[k], Some(0.0));
    }
}

#[test]
fn sweep_leaves_missing_branches_empty() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("wide.json");
    std::fs::write(
        &config,
        r#"{"type":"annulus","r1":0.5,"r2":1.6,"nu":1,"lambda":1}"#,
    )
    .unwrap();
    let csv = dir.path().join("sweep.csv");
    assert!(dualwell(&[
        "sweep",
        "--config",
        path(&config),
        "--nodes",
        "64",
        "--out",
        path(&csv)
    ])
    .status
    .success());
    let table = SweepTable::from_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    let last = table.rows.last().unwrap();
    assert!(last.zeta[0].is_some() && last.u[0].is_some());
    assert_eq!(
        (last.zeta[1], last.zeta[2], last.u[1], last.u[2]),
        (None, None, None, None)
    );
    assert!(table.rows[0].u[1].is_some());
}

#[test]
fn solve_with_branch_map_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("annulus.json");
    std::fs::write(&config, ANNULUS).unwrap();
    let map = dir.path().join("map.json");
    std::fs::write(
        &map,
        r#"{"segments":[{"from":0.5,"to":0.9,"branch":1},{"from":0.9,"to":1.277,"branch":2}]}"#,
    )
    .unwrap();
    let csv = dir.path().join("solution.csv");
    let out = dualwell(&[
        "solve",
        "--config",
        path(&config),
        "--branch",
        path(&map),
        "--out",
        path(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (p, d) = (
        report["primal"].as_f64().unwrap(),
        report["dual"].as_f64().unwrap(),
    );
    assert!((p - d).abs() <= 1e-6 * d.abs());

    let (header, rows) = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(header, ["r", "branch", "zeta", "u", "u_prime"]);
    assert_eq!(rows.len(), 512);
    assert_eq!(rows[0][1], Some(1.0));
    assert_eq!(rows[511][1], Some(2.0));

    let out = dualwell(&[
        "solve",
        "--config",
        path(&config),
        "--branch",
        "3",
        "--out",
        path(&csv),
    ]);
    assert!(out.status.success());
}

#[test]
fn solve_reports_missing_branch() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bar.json");
    std::fs::write(
        &config,
        r#"{"type":"bar1d","length":1,"nu":1,"lambda":1,"source":"zero","t_right":2}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = dualwell(&[
        "solve",
        "--config",
        path(&config),
        "--branch",
        "2",
        "--out",
        path(&csv),
    ]);
    assert!(!out.status.success());
    assert!(!csv.exists());
}

#[test]
fn verify_bar_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bar.json");
    std::fs::write(
        &config,
        r#"{"type":"bar1d","length":1,"nu":1,"lambda":1,"source":"zero","t_right":2}"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let out = dualwell(&[
        "verify",
        "--config",
        path(&config),
        "--report",
        path(&report),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["overall"], true);
    let count = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "branch_count")
        .unwrap();
    assert_eq!(count["value"], 1.0);
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("annulus.json");
    std::fs::write(&config, ANNULUS).unwrap();
    let csv = dir.path().join("sweep.csv");
    assert!(dualwell(&[
        "sweep",
        "--config",
        path(&config),
        "--nodes",
        "64",
        "--out",
        path(&csv)
    ])
    .status
    .success());
    let svg = dir.path().join("zeta.svg");
    let out = dualwell(&[
        "plot",
        "--in",
        path(&csv),
        "--x",
        "r",
        "--y",
        "zeta1",
        "--y",
        "zeta2",
        "--y",
        "zeta3",
        "--out",
        path(&svg),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polyline").count(), 3);

    // ζ̄₁ rises with r, so the polyline climbs (SVG y decreases).
    let first = text
        .split("points=\"")
        .nth(1)
        .unwrap()
        .split('"')
        .next()
        .unwrap();
    let ys: Vec<f64> = first
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(ys.windows(2).all(|w| w[1] <= w[0]));

    let out = dualwell(&[
        "plot",
        "--in",
        path(&csv),
        "--x",
        "r",
        "--y",
        "nope",
        "--out",
        path(&svg),
    ]);
    assert!(!out.status.success());
}
