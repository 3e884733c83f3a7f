use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use chaincausal::gaussian::{sample_params, sigma_of, write_cov_csv};
use chaincausal::graph::clique_digraph;
use chaincausal::{CovMatrix, MixedGraph};

const CONFOUNDED_CHAIN: &str = "node 1\nnode 2\nnode 3\nnode 4\ndir 1 3\ndir 2 4\nbi 3 4\n";
const FOUR_CYCLE: &str = "node 1\nnode 2\nnode 3\nnode 4\nbi 1 2\nbi 2 3\nbi 3 4\nbi 4 1\n";
const TWO_ROOT_DAG: &str = "node 1\nnode 2\nnode 3\nnode 4\nnode 5\ndir 1 3\ndir 1 4\ndir 2 3\ndir 2 5\ndir 3 4\ndir 4 5\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaincausal")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn file(dir: &TempDir, name: &str, content: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, content).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decide_writes_witness_dot_with_one_hidden_node() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    let out = dir.path().join("witness.dot");
    let o = run(&["decide", "--graph", s(&g), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("strictly causal"));
    let dot = fs::read_to_string(&out).unwrap();
    assert_eq!(dot.matches("[style=solid]").count(), 1);
    assert!(dot.contains("\"h{3,4}\" -> \"3\""));
}

#[test]
fn decide_writes_certificate_for_the_four_cycle() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "cycle4.txt", FOUR_CYCLE);
    let out = dir.path().join("cert.json");
    let o = run(&["decide", "--graph", s(&g), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    let cert: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cert["schema_version"], 1);
    assert_eq!(cert["certificate"]["cycle"], serde_json::json!(["1", "2", "3", "4"]));
    assert_eq!(cert["certificate"]["identities"]["passed"], true);
    assert!(cert["certificate"]["phi_flipped_min_eigenvalue"].as_f64().unwrap() < -0.05);
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cyc = file(&dir, "cycle4.txt", FOUR_CYCLE);
    let chain = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    for args in [
        vec!["decide", "--graph", s(&cyc), "--format", "json"],
        vec!["verify-equality", "--graph", s(&chain), "--format", "json", "--seed", "7"],
        vec!["index", "--graph", s(&chain), "--format", "json"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        let v = json(&a);
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn treks_lists_every_trek_with_its_monomial() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "dag.txt", TWO_ROOT_DAG);
    let o = run(&["treks", "--graph", s(&g), "--from", "3", "--to", "5", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["count"], 5);
    let treks = v["treks"].as_array().unwrap();
    assert!(treks.iter().any(|t| t["trek"] == "3 <- 2 -> 5" && t["monomial"] == "w22*l23*l25"));
}

#[test]
fn det_and_separate_reproduce_the_worked_examples() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "dag.txt", TWO_ROOT_DAG);
    let o = run(&["det", "--graph", s(&g), "--rows", "3,5", "--cols", "2,5", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["has_nsi_system"], true);
    for given in ["3,5", "5"] {
        let o = run(&["separate", "--graph", s(&g), "--from", "2", "--to", "4", "--given", given, "--format", "json"]);
        assert_eq!(code(&o), 0);
        let v = json(&o);
        assert_eq!(v["d_connected"], true);
        assert_eq!(v["tops"], serde_json::json!(["2"]));
    }
}

#[test]
fn index_of_the_confounded_chain_is_one() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    let o = run(&["index", "--graph", s(&g), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["exact"], 1);
    assert_eq!(v["levels"][0]["screened"], 0);
}

#[test]
fn index_of_a_non_decomposable_graph_is_infinite() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "cycle4.txt", FOUR_CYCLE);
    let o = run(&["index", "--graph", s(&g), "--format", "json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["exact"], "infinity");
}

#[test]
fn membership_separates_model_points_from_dependent_matrices() {
    let dir = TempDir::new().unwrap();
    let g = MixedGraph::from_raw(&chaincausal::graph::io::parse_text(CONFOUNDED_CHAIN).unwrap()).unwrap();
    let (d, _) = clique_digraph(&g).unwrap();
    let inside = sigma_of(&d, &sample_params(&d, 3, 1.0)).unwrap().marginal(g.labels()).unwrap();
    let gp = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    let cov = file(&dir, "inside.csv", &write_cov_csv(&inside));
    let o = run(&["membership", "--graph", s(&gp), "--cov", s(&cov)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let mut m = nalgebra::DMatrix::identity(4, 4);
    m[(0, 1)] = 0.4;
    m[(1, 0)] = 0.4;
    let outside = CovMatrix::new(g.labels().to_vec(), m).unwrap();
    let cov = file(&dir, "outside.csv", &write_cov_csv(&outside));
    let o = run(&["membership", "--graph", s(&gp), "--cov", s(&cov), "--format", "json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["report"]["member"], false);
}

#[test]
fn negate_demo_runs_end_to_end() {
    let o = run(&["negate-demo", "--p", "4", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert!(v["phi_min_eigenvalue"].as_f64().unwrap() > 0.01);
    assert_eq!(code(&run(&["negate-demo", "--p", "3"])), 2);
}

#[test]
fn validate_and_analyze() {
    let dir = TempDir::new().unwrap();
    let good = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    assert_eq!(code(&run(&["validate", "--graph", s(&good)])), 0);
    let bad = file(&dir, "bad.txt", "node 1\nnode 2\ndir 1 1\ndir 1 3\n");
    let o = run(&["validate", "--graph", s(&bad), "--format", "json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["report"]["valid"], false);

    let cyc = file(&dir, "cycle4.txt", FOUR_CYCLE);
    let o = run(&["analyze", "--graph", s(&cyc), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["decomposable"], false);
    assert_eq!(v["strictly_causal"], false);
}

#[test]
fn out_flag_redirects_the_report() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    let out = dir.path().join("report.json");
    let o = run(&["analyze", "--graph", s(&g), "--format", "json", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["chain_graph"], true);
}

#[test]
fn exit_codes_for_usage_and_verdict_failures() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "chain.txt", CONFOUNDED_CHAIN);
    assert_eq!(code(&run(&["analyze", "--graph", s(&g), "--bogus"])), 2);
    assert_eq!(code(&run(&["analyze"])), 2);
    assert_eq!(code(&run(&["separate", "--graph", s(&g), "--from", "1", "--to", "9"])), 2);
    let unparsable = file(&dir, "junk.txt", "node 1\nedge 1 2\n");
    let o = run(&["analyze", "--graph", s(&unparsable)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let not_chain = file(&dir, "semi.txt", "node 1\nnode 2\nnode 3\ndir 1 2\nbi 2 3\nbi 3 1\n");
    assert_eq!(code(&run(&["decide", "--graph", s(&not_chain)])), 1);
}
