use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qgraph::io::{self, GraphFile};
use qgraph::{catalog, mfunction, CouplingVector};
use tempfile::TempDir;

fn qgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn k33_matrix(dir: &TempDir) -> PathBuf {
    let adj = catalog("k33", &[]).unwrap().base().adjacency_matrix();
    write(dir, "k33.mat", &format!("# K3,3\n{}", io::format_matrix(&-adj)))
}

#[test]
fn realize_weighted_pipeline() {
    let dir = TempDir::new().unwrap();
    let mat = k33_matrix(&dir);
    let o = qgraph(&["realize", "--family", "weighted", "--matrix", s(&mat)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("[metadata]") && text.contains("family = \"weighted\""));
    assert!(text.contains("# verdict: ok"));
    let file = io::parse_graph_file(&text).unwrap();
    assert_eq!(file.graph.edge_count(), 9);

    let g = write(&dir, "real.g", &text);
    let o = qgraph(&["verify", "--matrix", s(&mat), "--graph", s(&g)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("multiplicity 4"));
}

#[test]
fn verify_flags_corrupted_realization() {
    let dir = TempDir::new().unwrap();
    let mat = k33_matrix(&dir);
    let out = dir.path().join("real.g");
    let o = qgraph(&["realize", "--matrix", s(&mat), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let mut file = io::load_graph_file(&out).unwrap();
    let mut first = true;
    file.graph = file
        .graph
        .map_edges(|_, mut d| {
            if std::mem::take(&mut first) {
                d.length *= 1.01;
            }
            d
        })
        .unwrap();
    let bad = write(&dir, "bad.g", &io::serialize_graph_file(&file));
    let o = qgraph(&["verify", "--matrix", s(&mat), "--graph", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn sap_fails_on_star_secular_matrix() {
    let dir = TempDir::new().unwrap();
    let g = catalog("star", &[6]).unwrap();
    let mut a = vec![-1.0; 7];
    a[0] = 0.0;
    let alpha = CouplingVector::new(a, 7).unwrap();
    let q = -mfunction::secular_matrix(&g, &alpha, 0.0).unwrap();
    let mat = write(&dir, "star6_secular.mat", &io::format_matrix(&q));
    let gf = write(&dir, "star6.g", &io::serialize_graph_file(&GraphFile::new(g, alpha)));
    let witness = dir.path().join("witness.mat");
    let o = qgraph(&["sap", "--matrix", s(&mat), "--graph", s(&gf), "--out", s(&witness)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("SAP: fails"));
    let x = io::load_matrix(&witness).unwrap();
    assert!((&q * &x).amax() < 1e-8);
    assert!(x[(0, 1)] == 0.0 && x[(2, 2)] == 0.0);
}

#[test]
fn missing_file_is_a_domain_error() {
    let o = qgraph(&["spectrum", "missing.g"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.g"));
}

#[test]
fn usage_errors_exit_2() {
    let o = qgraph(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(qgraph(&["probe", "--samples", "many"]).status.code(), Some(2));
    assert_eq!(qgraph(&["realize", "--family", "magnetic", "--matrix", "x"]).status.code(), Some(2));
}

#[test]
fn validation_diagnostics_carry_lines() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "neg.g", "vertices = 2\n[[edges]]\ni = 1\nj = 2\nlength = -1\n");
    let o = qgraph(&["validate", s(&g)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("positive length required"), "{err}");
}

#[test]
fn validate_reports_mu() {
    let dir = TempDir::new().unwrap();
    let mat = k33_matrix(&dir);
    let o = qgraph(&["validate", "--matrix", s(&mat)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mu candidate: 4"));
}

#[test]
fn spectrum_and_curves() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("p3.g");
    assert_eq!(qgraph(&["catalog", "path", "3", "--out", s(&g)]).status.code(), Some(0));
    let o = qgraph(&["spectrum", "--graph", s(&g)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("second eigenvalue: 2.46740110"), "{}", stdout(&o));

    let o = qgraph(&["curves", s(&g), "--lambda-lo", "-5", "--lambda-hi", "5", "--points", "11"]);
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("lambda,xi_1,xi_2,xi_3"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn probe_is_byte_identical() {
    let a = qgraph(&["probe", "--samples", "30", "--seed", "9"]);
    let b = qgraph(&["probe", "--samples", "30", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("max multiplicity observed"));
}

#[test]
fn catalog_listing() {
    let o = qgraph(&["catalog"]);
    assert!(stdout(&o).lines().any(|l| l == "k33_plus_edge"));
    assert_eq!(qgraph(&["catalog", "petersen"]).status.code(), Some(1));
}
