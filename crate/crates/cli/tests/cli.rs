use std::path::PathBuf;
use std::process::{Command, Output};

use coarse_kit::covers::dim_at_scale;
use coarse_kit::io::FamilyJson;
use coarse_kit::{Space, SpaceDescriptor};
use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarse-kit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn read<T: serde::de::DeserializeOwned>(name: &str) -> T {
    serde_json::from_str(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

#[test]
fn cover_dim_matches_the_library() {
    let out = run(&["cover", "dim", "--space", &data("path10.json"), "--cover", &data("c.json"), "--scale", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let space = Space::from_descriptor(&read::<SpaceDescriptor>("path10.json")).unwrap();
    let cover = read::<FamilyJson>("c.json").resolve(&space).unwrap();
    assert_eq!(r["result"]["dim"], dim_at_scale(&space, &cover, 2.0));
    assert_eq!(r["schema"], "coarse-kit/1");
    assert_eq!(r["status"], "ok");
    assert_eq!(r["inputs"]["space"]["sha256"].as_str().unwrap().len(), 64);
    assert!(r.get("timing_ms").is_none());
}

#[test]
fn sfdc_tree_on_sixteen_points_verifies() {
    let out = run(&["tree", "verify", "--tree", &data("t.json"), "--mode", "sfdc"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["certificate"]["bounded_level"], 2);
    assert_eq!(r["result"]["certificate"]["tightest"][0], 3.0);
}

#[test]
fn broken_tree_is_a_violation() {
    let out = run(&["tree", "verify", "--tree", &data("bad_tree.json")]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["status"], "violation");
    assert_eq!(r["result"]["violation"]["condition"], "disjoint");
}

#[test]
fn missing_file_exits_two() {
    let out = run(&["space", "--space", &data("no-such-file.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_json_reports_its_location() {
    let dir = std::env::temp_dir().join(format!("coarse-kit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"kind\": \"matrix\",\n  \"matrix\": [[0, 1],\n}\n").unwrap();
    let out = run(&["space", "--space", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:4:1"), "{err}");
}

#[test]
fn bad_metric_exits_two() {
    let dir = std::env::temp_dir().join(format!("coarse-kit-cli-tri-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("tri.json");
    std::fs::write(&bad, r#"{"kind":"matrix","matrix":[[0,1,5],[1,0,1],[5,1,0]]}"#).unwrap();
    let out = run(&["space", "--space", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rotation_quotient_of_the_hexagon() {
    let out = run(&["quotient", "--space", &data("c6.json"), "--action", &data("rot.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["orbits"].as_array().unwrap().len(), 3);
    assert_eq!(r["result"]["group_order"], 2);
}

#[test]
fn identity_pushes_a_tree() {
    let out = run(&[
        "tree", "push", "--map", &data("id16.json"), "--n", "1", "--control", "identity", "--tree", &data("t.json"),
        "--targets", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["audit"][0]["containments"], 3);
}

#[test]
fn pushforward_precondition_refuses() {
    let out = run(&[
        "tree", "push", "--map", &data("abs.json"), "--n", "2", "--control", "identity", "--tree", &data("t31.json"),
        "--targets", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["status"], "refused");
}

#[test]
fn fold_map_control_and_profile() {
    let out = run(&["map", "control", "--map", &data("abs.json"), "--n", "2", "--control", "identity", "--scale", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["required"], 3.0);
    let out = run(&["map", "control", "--map", &data("abs.json"), "--n", "1", "--control", "identity", "--scale", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["map", "profile", "--map", &data("abs.json"), "--scale", "2", "--big-r", "3"]);
    assert_eq!(report(&out)["result"]["max_components"], 2);
}

#[test]
fn apc_refuses_an_impossible_single_family() {
    let out = run(&["apc", "witness", "--space", &data("line16.json"), "--scales", "3", "--mesh-cap", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["reason"], "impossible");
    let out = run(&["apc", "witness", "--space", &data("line16.json"), "--scales", "3,4", "--mesh-cap", "5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn disjointify_suite_seed_7() {
    let out = run(&["suite", "lemma-disjointify", "--seed", "7", "--count", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["instances"], 200);
    assert_eq!(r["result"]["passed"], 200);
}

#[test]
fn suite_msp_pipelines_seed_1() {
    let out = run(&["suite", "msp-pipelines", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(report(&out)["result"]["failed"], 0);
}

#[test]
fn suite_sandwich_seed_3() {
    let out = run(&["suite", "sandwich", "--seed", "3", "--max-points", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_suite_exits_two() {
    let out = run(&["suite", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["suite", "fibers", "--seed", "11", "--count", "10"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
