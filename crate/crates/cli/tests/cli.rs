use std::path::PathBuf;
use std::process::{Command, Output};

fn nilprog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilprog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
        .display()
        .to_string()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn hall_rank_two_step_three() {
    let o = nilprog(&["hall", "--rank", "2", "--step", "3"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["d"], 5);
    assert_eq!(v["basis"].as_array().unwrap().len(), 5);

    let o = nilprog(&["hall", "--rank", "2", "--step", "2", "--table"]);
    let table = json(&o)["commutators"].as_array().unwrap().clone();
    // three pairs, four sign patterns each
    assert_eq!(table.len(), 12);
    assert_eq!(table[0]["coords"], serde_json::json!([0, 0, -1]));
}

#[test]
fn collect_and_bch() {
    let o = nilprog(&["collect", "--rank", "2", "--step", "2", "--word", "x2 x1"]);
    assert_eq!(json(&o)["coords"], serde_json::json!([1, 1, 1]));

    let o = nilprog(&[
        "bch", "--rank", "2", "--step", "2", "--x", "1,0,0", "--y", "0,1,0",
    ]);
    assert_eq!(json(&o)["bch"], serde_json::json!(["1", "1", "-1/2"]));

    let o = nilprog(&["bch", "--rank", "2", "--step", "3"]);
    assert_eq!(json(&o)["denominator_lcm"], "12");
}

#[test]
fn properize_example() {
    let o = nilprog(&["properize", "--input", &example("z2_to_z.json"), "--m", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["P"]["gens"].as_array().unwrap().len(), 1);
    assert_eq!(v["proper"]["proper"], true);
    assert_eq!(v["iterations"].as_array().unwrap().len(), 1);
    assert!(v["sandwich"]["hp0_in_xp"].as_bool().unwrap());

    let o = nilprog(&["properize", "--input", &example("heisenberg_mod5.json")]);
    assert!(o.status.success());
    assert_eq!(json(&o)["H"].as_array().unwrap().len(), 5);
}

#[test]
fn grow_heisenberg_standard() {
    let o = nilprog(&[
        "grow",
        "--group",
        "heisenberg",
        "--gens",
        "standard",
        "--nmax",
        "10",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,size,ratio,slope");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("1,7,"));

    let o = nilprog(&["grow", "--group", "integers", "--nmax", "5"]);
    assert!(stdout(&o).lines().nth(5).unwrap().starts_with("5,11,"));
}

#[test]
fn box_minima_rom8_persist() {
    let o = nilprog(&["box", "--lengths", "2,2,4", "--rank", "2", "--step", "2"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["box"]["triangular"], true);

    let o = nilprog(&[
        "box",
        "--lengths",
        "3,3,5",
        "--rank",
        "2",
        "--step",
        "2",
        "--quotient",
        "0,0,1",
    ]);
    assert_eq!(json(&o)["box"]["L"], serde_json::json!([3, 3]));

    let o = nilprog(&["minima", "--basis", "1,0;0,1", "--lengths", "2,3"]);
    assert_eq!(
        json(&o)["minima"]["lambda"],
        serde_json::json!(["1/3", "1/2"])
    );

    let o = nilprog(&["rom8", "--lengths", "20,20"]);
    assert!(json(&o)["k"].as_u64().unwrap() <= 12);

    let o = nilprog(&[
        "persist",
        "--family",
        "heisenberg",
        "--ns",
        "1",
        "--rmax",
        "8",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("n,s_size,sn_size,hypothesis,slope"));
}

#[test]
fn exit_codes() {
    let o = nilprog(&[
        "box",
        "--lengths",
        "1/3,1/3,1/3",
        "--rank",
        "2",
        "--step",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let o = nilprog(&[
        "box",
        "--lengths",
        "1/3,1/3,1/3",
        "--rank",
        "2",
        "--step",
        "2",
        "--prescale",
    ]);
    assert_eq!(o.status.code(), Some(0));

    let o = nilprog(&["collect", "--rank", "2", "--step", "2", "--word", "x9"]);
    assert_eq!(o.status.code(), Some(1));

    let o = nilprog(&["properize", "--input", "/nonexistent/input.json"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = tmp("bad.json");
    std::fs::write(&bad, "{\"domain\": 3}").unwrap();
    let o = nilprog(&["properize", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = nilprog(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nilprog(&["--help"]);
    assert_eq!(o.status.code(), Some(0));

    // A set that does not generate Z^2 through its differences.
    let pts = tmp("even.json");
    std::fs::write(&pts, "[[0,0],[2,0],[-2,0],[0,2],[0,-2]]").unwrap();
    let o = nilprog(&[
        "rom8",
        "--points",
        pts.to_str().unwrap(),
        "--lengths",
        "2,2",
        "--c",
        "1/4",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifests_replay_across_worker_counts() {
    let manifest = tmp("grow_manifest.json");
    let first = nilprog(&[
        "grow",
        "--gens",
        "cubic:1",
        "--nmax",
        "8",
        "--save-manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("\"seed\": 0"));
    for w in ["1", "3", "8"] {
        let again = nilprog(&["--manifest", manifest.to_str().unwrap(), "--workers", w]);
        assert_eq!(again.stdout, first.stdout, "workers = {w}");
    }

    let input = example("heisenberg_mod5.json");
    let a = nilprog(&["--workers", "1", "properize", "--input", &input]);
    let b = nilprog(&["--workers", "6", "properize", "--input", &input]);
    assert_eq!(a.stdout, b.stdout);

    let out = tmp("rom8.json");
    let o = nilprog(&[
        "--seed",
        "9",
        "rom8",
        "--lengths",
        "12,12",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success() && o.stdout.is_empty());
    let c = nilprog(&[
        "--seed",
        "9",
        "--workers",
        "4",
        "rom8",
        "--lengths",
        "12,12",
    ]);
    assert_eq!(std::fs::read(&out).unwrap(), c.stdout);
}

#[test]
fn verify_suite() {
    let o = nilprog(&["verify", "--suite", "criterion3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("criterion  3 PASS"));
    let o = nilprog(&["verify", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
}
