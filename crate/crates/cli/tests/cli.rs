use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hausdorff"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gallery_lists_three_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gallery", "list"], dir.path());
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(names, ["total_type_3pt", "grid_2x2", "hausdorff_line_5pt"]);
    for name in &names {
        let o = run(&["space", "analyze", "--example", name], dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "all"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("input sha256: "));
    assert!(report.contains(" 0 fail"));
}

#[test]
fn grid_analysis_reports_two_classes() {
    let dir = tempfile::tempdir().unwrap();
    let space = Path::new(env!("CARGO_MANIFEST_DIR")).join("gallery/grid_2x2.json");
    let o = run(&["space", "analyze", "--space", space.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("2 classes"));
    assert!(text.contains("[pass] relation.generators_consistent"));
    let quotient = fs::read_to_string(dir.path().join("quotient.csv")).unwrap();
    assert_eq!(quotient, "id,weight,coords\n0,2,0\n1,2,1\n");
}

#[test]
fn deform_sweep_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["deform", "sweep", "--example", "grid_2x2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("deform.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let blocks: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(blocks, ["1", "2", "4"]);
    assert_eq!(rows[0][4], "2");
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"dimension": 1, "points": [{"id": 0, "coords": [0]}]}"#).unwrap();
    let o = run(&["space", "analyze", "--space", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weight"));

    let o = run(&["space", "analyze", "--example", "nowhere"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["algebra", "conv", "--example", "grid_2x2", "--a", "x1 +"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let density = dir.path().join("density.csv");
    fs::write(&density, "point,row,col,re,im\n0,0,0,1,0\n1,0,0,1,0\n").unwrap();
    let o = run(
        &["vn", "state-check", "--example", "grid_2x2", "--density", density.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let checks = fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert!(checks.contains("state.density_valid,fail,1,0,"));
}

#[test]
fn rank_deficient_density_is_not_faithful() {
    let dir = tempfile::tempdir().unwrap();
    let density = dir.path().join("density.csv");
    fs::write(&density, "point,row,col,re,im\n0,0,0,0.5,0\n1,0,0,0.5,0\n").unwrap();
    let o = run(
        &["vn", "state-check", "--example", "grid_2x2", "--density", density.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not faithful"));
}

#[test]
fn heisenberg_commutator() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["calculus", "commutator", "--example", "grid_2x2", "--p", "0,1", "--f", "x2", "--a", "x1*y2 + cos(x2)"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[pass] calculus.heisenberg_x2"));
}

#[test]
fn commutant_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["vn", "commutant", "--example", "hausdorff_line_5pt"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let t = fs::read_to_string(dir.path().join("commutant.csv")).unwrap();
    assert_eq!(t.lines().nth(1), Some("5,5,5,5"));
}

#[test]
fn csv_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&["verify", "all", "--seed", "11", "--cases", "5"], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.len() > 10);
    for n in names {
        let x = fs::read(a.path().join(&n)).unwrap();
        let y = fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
}
