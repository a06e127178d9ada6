use serde_json::Value;
use std::process::{Command, Output};

fn lamplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lamplab")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn efficiency_of_a_path_is_two() {
    let out = lamplab(&["efficiency", "--family", "path", "--n", "5", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["report"]["k"], "2");
    assert!(v["report"]["witness"].is_object());
    assert_eq!(v["config"]["command"]["command"], "efficiency");
    assert_eq!(v["passed"], true);
}

#[test]
fn violated_bound_exits_one_with_witness() {
    let out = lamplab(&["efficiency", "--family", "path", "--n", "5", "--K", "3/2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["passed"], false);
    assert!(v["report"]["witness"]["targets"].is_array());
}

#[test]
fn identical_lamp_points_are_at_distance_zero() {
    let p = r#"{"lamps":[0,2],"pos":1}"#;
    let out = lamplab(&["dist", "--family", "cycle", "--n", "5", "--metric", "dlam", "--a", p, "--b", p]);
    assert_eq!(json_of(&out)["report"]["value"], "0");
}

#[test]
fn dist_reports_tour() {
    let out = lamplab(&["dist", "--family", "path", "--n", "4", "--metric", "tsp", "--a", r#"{"lamps":[0,4],"pos":2}"#, "--b", r#"{"lamps":[],"pos":2}"#]);
    let v = json_of(&out);
    assert_eq!(v["report"]["value"], "8");
    assert_eq!(v["report"]["tour"]["tour"].as_array().unwrap().len(), 4);
}

#[test]
fn gen_csv_carries_config() {
    let out = lamplab(&["gen", "--family", "grid", "--dims", "1,1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# config: {"));
    assert!(text.contains("\"dims\":[1,1]"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn graph_input_files_are_accepted() {
    let dir = std::env::temp_dir().join(format!("lamplab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let graph = dir.join("graph.json");
    std::fs::write(&graph, r#"{"n": 3, "edges": [[0, 1, 1], [1, 2, "1/2"]]}"#).unwrap();
    let out = lamplab(&["gen", "--input", graph.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["report"]["matrix"][0][2], "3/2");

    let report = dir.join("report.json");
    let out = lamplab(&["doubling", "--input", graph.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["report"]["K_source"], "certified");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lamplab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lamplab(&["gen"]).status.code(), Some(2));
    assert_eq!(lamplab(&["gen", "--family", "star", "--n", "3"]).status.code(), Some(2));
    assert_eq!(lamplab(&["efficiency", "--family", "path", "--n", "20"]).status.code(), Some(2));
    assert_eq!(lamplab(&["frechet-star", "--n", "2", "--k", "2", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(lamplab(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_variable_is_validated() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_lamplab"))
            .args(["efficiency", "--family", "cycle", "--n", "6"])
            .env("LAMPLAB_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(2));
    assert_eq!(run("two").status.code(), Some(2));
    let one = run("1");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, run("3").stdout);
}

#[test]
fn nagata_weak_on_a_path_passes() {
    let out = lamplab(&["nagata-weak", "--family", "path", "--n", "16", "--scales", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["report"]["constant"], "7");
    assert_eq!(v["report"]["check"]["passed"], true);
}

#[test]
fn embed_lamz_checks_its_bound() {
    let out = lamplab(&["embed-lamz", "--family", "path", "--n", "3", "--sigma", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["report"]["bound"], "6");
    assert_eq!(v["report"]["points"], 64);
    assert_eq!(v["report"]["lip_witness"].as_array().unwrap().len(), 2);
    let cycle = lamplab(&["embed-lamz", "--family", "cycle", "--n", "5"]);
    assert_eq!(cycle.status.code(), Some(2));
}

#[test]
fn markov_table_as_csv() {
    let out = lamplab(&["markov", "--family", "path", "--n", "4", "--t-max", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,ratio,exact,stderr");
    assert!(rows[1].starts_with("1,1,1,"));
    assert_eq!(rows.len(), 4);
}

#[test]
fn frechet_star_reports_quality() {
    let v = json_of(&lamplab(&["frechet-star", "--n", "2", "--k", "3"]));
    assert_eq!(v["report"]["quality"], "3/2");
}
