use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    dir.join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freediv")).args(args).output().expect("binary runs")
}

/// Exit code and parsed report.
fn report(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json)
}

#[test]
fn reduce_examples() {
    let (code, r) = report(&["reduce", "--graph", &data("theta.txt"), "--divisor", "2u", "--point", "v:v"]);
    assert_eq!(code, 0);
    assert_eq!(r["command"], "reduce");
    assert_eq!(r["outputs"]["reduced"], "(v:u, 2)");
    assert_eq!(r["outputs"]["script"]["moves"].as_array().unwrap().len(), 0);

    let (code, r) = report(&["reduce", "--graph", &data("loop.txt"), "--divisor", "2 e:1@1/2", "--point", "v:v"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["reduced"], "(v:v, 2)");
    assert!(!r["outputs"]["script"]["moves"].as_array().unwrap().is_empty());

    let (code, r) = report(&["reduce", "--graph", &data("theta.txt"), "--divisor", "-u + 2v", "--point", "v"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["reduced"], "(v:u, 2), (v:v, -1)");
}

#[test]
fn parse_and_semantic_errors() {
    let (code, r) = report(&["reduce", "--graph", &data("loop.txt"), "--divisor", "2 e:1@1/0", "--point", "v:v"]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "Parse");
    let (code, _) = report(&["rank", "--graph", &data("missing.txt"), "--divisor", "0"]);
    assert_eq!(code, 2);
    let (code, _) = report(&["rank", "--graph", &data("theta.txt"), "--divisor", "u + 0.5v"]);
    assert_eq!(code, 2);
    let (code, r) = report(&["reduce", "--graph", &data("theta.txt"), "--divisor", "u", "--point", "v:nowhere"]);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], "PointNotOnGraph");
    let (code, _) = report(&["reduce", "--graph", &data("theta.txt"), "--divisor", "u", "--point", "e:a@3/2"]);
    assert_eq!(code, 3);
    assert_eq!(run(&["rank", "--graph"]).status.code(), Some(2));
}

#[test]
fn rank_examples() {
    let (code, r) = report(&["rank", "--graph", &data("theta.txt"), "--divisor", "u+v"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["rank"], 1);
    assert_eq!(r["outputs"]["riemann_roch"], true);
    let (_, r) = report(&["rank", "--graph", &data("loop.txt"), "--divisor", "e:1@1/3"]);
    assert_eq!(r["outputs"]["rank"], 0);
    for graph in ["theta.txt", "theta.json", "loop.txt", "dumbbell.txt", "hyperelliptic3.txt"] {
        let g = data(graph);
        let first = if graph == "loop.txt" { "v" } else if graph.starts_with("hyper") { "w1" } else { "u" };
        let (code, r) = report(&["rank", "--graph", &g, "--divisor", &format!("-{first}")]);
        assert_eq!(code, 0, "{graph}");
        assert_eq!(r["outputs"]["rank"], -1, "{graph}");
    }
}

#[test]
fn free_check_examples() {
    let (code, r) = report(&["free-check", "--graph", &data("loop.txt"), "--divisor", "2v", "--resolution", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["free"], true);

    let args = ["free-check", "--graph", &data("hyperelliptic3.txt"), "--divisor", "2w1 + e:c1@1/4"];
    let (code, r) = report(&args);
    assert_eq!(code, 1);
    let violations = r["outputs"]["certificate"]["violations"].as_array().unwrap();
    assert!(violations.contains(&Value::from("e:c1@1/4")));

    let (code, r) = report(&["free-check", "--graph", &data("theta.txt"), "--divisor", "u"]);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], "RankNotPositive");
}

#[test]
fn equivalence_exit_codes() {
    let (code, r) = report(&["equivalent", "--graph", &data("loop.txt"), "--d1", "2 e:1@1/2", "--d2", "2v"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["abel_jacobi_agrees"], true);
    assert!(r["outputs"]["witness"].is_object());
    let (code, r) = report(&["equivalent", "--graph", &data("loop.txt"), "--d1", "e:1@1/2", "--d2", "v"]);
    assert_eq!(code, 1);
    assert_eq!(r["outputs"]["equivalent"], false);
    assert_eq!(r["outputs"]["abel_jacobi_agrees"], true);
}

#[test]
fn abel_jacobi_report() {
    let (code, r) = report(&["abel-jacobi", "--graph", &data("loop.txt"), "--divisor", "e:1@1/2 - v"]);
    assert_eq!(code, 0);
    let x = r["outputs"]["vector"][0].as_str().unwrap();
    assert!(x == "1/2" || x == "-1/2", "{x}");
}

#[test]
fn theorem2_examples() {
    let (code, r) = report(&["verify-theorem2", "--g", "4", "--a", "1", "--r", "1", "--seed", "2024"]);
    assert_eq!(code, 0);
    let o = &r["outputs"];
    assert_eq!((o["d"].as_i64(), o["rank"]["rank"].as_i64()), (Some(3), Some(1)));
    assert_eq!(o["clifford_index"], 1);
    assert_eq!(o["very_special"], true);
    assert_eq!(o["freeness"]["free"], true);

    let (code, r) = report(&["verify-theorem2", "--g", "7", "--a", "1", "--r", "2", "--seed", "2024"]);
    assert_eq!(code, 0);
    assert_eq!((r["outputs"]["d"].as_i64(), r["outputs"]["rank"]["rank"].as_i64()), (Some(5), Some(2)));

    let (code, r) = report(&["verify-theorem2", "--g", "4", "--a", "1", "--r", "2"]);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], "RankOutOfRange");
}

#[test]
fn budget_exhaustion() {
    let (code, r) = report(&["verify-theorem2", "--g", "5", "--a", "2", "--r", "1", "--budget", "1", "--seed", "12"]);
    assert_eq!(code, 4);
    assert_eq!(r["error"]["kind"], "BudgetExhausted");
    assert_eq!(r["error"]["near_misses"].as_array().unwrap().len(), 1);
}

#[test]
fn reports_are_deterministic() {
    let base = ["verify-theorem2", "--g", "5", "--a", "2", "--r", "1", "--seed", "7"];
    let one = run(&[&base[..], &["--jobs", "1"]].concat());
    let two = run(&[&base[..], &["--jobs", "3"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);

    let args = ["rank", "--graph", &data("dumbbell.txt"), "--divisor", "2u + e:bar@1/3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn out_file_and_timing() {
    let dir = std::env::temp_dir().join(format!("freediv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&["rank", "--graph", &data("theta.txt"), "--divisor", "u+v", "--out", path.to_str().unwrap()]);
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
    let (_, r) = report(&["rank", "--graph", &data("theta.txt"), "--divisor", "u+v"]);
    assert!(r.get("wall_time_ns").is_none());
    let (_, r) = report(&["rank", "--graph", &data("theta.txt"), "--divisor", "u+v", "--timing"]);
    assert!(r["wall_time_ns"].is_u64());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn hyperelliptic_witnesses() {
    let (code, r) = report(&["hyperelliptic", "--g", "4", "--r", "1", "--f", "1"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["free"], false);
    let (_, r) = report(&["hyperelliptic", "--g", "3", "--r", "1"]);
    assert_eq!(r["outputs"]["free"], true);
    let (code, r) = report(&["hyperelliptic", "--g", "3", "--r", "1", "--f", "3"]);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], "DegreeWindowViolated");
}

#[test]
fn graph_text_round_trip() {
    let (_, r) = report(&["hyperelliptic", "--g", "3", "--r", "1"]);
    let text = r["outputs"]["graph"].as_str().unwrap();
    let saved = std::fs::read_to_string(data("hyperelliptic3.txt")).unwrap();
    let body: String = saved.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    assert_eq!(body, text);
}
