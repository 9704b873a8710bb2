use std::path::Path;
use std::process::Command;

use turan_core::cli::{run, SystemFile, EXIT_COUNTEREXAMPLE, EXIT_FAILURE, EXIT_OK, EXIT_PARSE, EXIT_TOO_LARGE};

fn turan(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["turan"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.json");
    let (code, out, _) = turan(&["construct", "--n", "12", "--r", "6", "--R", "1", "--lemma", "main", "--out", path_str(&file)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("size"));
    let sys = SystemFile::read(&file).unwrap();
    assert!(sys.edges.len() <= 823);
    assert_eq!(sys.meta.as_ref().unwrap().size, sys.edges.len() as u64);
    let (code, out, _) = turan(&["verify", "--in", path_str(&file)]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, _, _) = turan(&["verify", "--in", path_str(&file), "--mode", "sample", "--samples", "500"]);
    assert_eq!(code, EXIT_OK);
    // re-serializing reproduces the file byte for byte
    let text = std::fs::read_to_string(&file).unwrap();
    assert_eq!(SystemFile::parse(&text).unwrap().to_json() + "\n", text);
}

#[test]
fn round_trip_over_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    for (n, r, big_r, lemma) in [(9, 4, 1, "main"), (14, 7, 1, "general"), (11, 6, 2, "general"), (10, 3, 3, "general")] {
        let file = dir.path().join(format!("{n}-{r}-{big_r}.json"));
        let (code, _, err) = turan(&[
            "construct", "--n", &n.to_string(), "--r", &r.to_string(), "--R", &big_r.to_string(),
            "--lemma", lemma, "--out", path_str(&file),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let (code, out, _) = turan(&["verify", "--in", path_str(&file), "--json"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("\"covered\""));
    }
}

#[test]
fn construct_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("e.json");
    let (code, _, _) = turan(&["construct", "--n", "5", "--r", "8", "--out", path_str(&file)]);
    assert_eq!(code, EXIT_OK);
    assert!(SystemFile::read(&file).unwrap().edges.is_empty());
    let (code, _, err) = turan(&["construct", "--n", "10", "--r", "6", "--beta", "0.9", "--c", "0.1", "--mu", "2"]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("infeasible"));
    // partial constants are a usage error
    let (code, _, _) = turan(&["construct", "--n", "10", "--r", "6", "--beta", "0.9"]);
    assert_eq!(code, EXIT_FAILURE);
    let (code, out, _) = turan(&["--json", "construct", "--n", "9", "--r", "4", "--mode", "random", "--seed", "3"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["mode"], "random");
}

#[test]
fn verify_failures() {
    let dir = tempfile::tempdir().unwrap();
    // the optimal (5, 4, 3) system minus one edge
    let exact = dir.path().join("opt.json");
    let (code, out, _) = turan(&["exact", "--n", "5", "--s", "4", "--r", "3", "--json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let mut edges: Vec<Vec<u32>> = serde_json::from_value(v["witness"].clone()).unwrap();
    assert_eq!(edges.len(), 3);
    edges.pop();
    let mut text = format!("5 3 4 {}\n", edges.len());
    for e in &edges {
        text += &format!("{} {} {}\n", e[0], e[1], e[2]);
    }
    std::fs::write(&exact, text).unwrap();
    let (code, out, _) = turan(&["verify", "--in", path_str(&exact)]);
    assert_eq!(code, EXIT_COUNTEREXAMPLE);
    assert!(out.contains("counterexample"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1, \"n\": ").unwrap();
    assert_eq!(turan(&["verify", "--in", path_str(&bad)]).0, EXIT_PARSE);
    std::fs::write(&bad, "{\"format_version\":1,\"n\":4,\"r\":2,\"s\":3,\"edges\":[[1,5]]}").unwrap();
    assert_eq!(turan(&["verify", "--in", path_str(&bad)]).0, EXIT_PARSE);

    let big = dir.path().join("big.json");
    std::fs::write(&big, "{\"format_version\":1,\"n\":40,\"r\":1,\"s\":20,\"edges\":[]}").unwrap();
    assert_eq!(turan(&["verify", "--in", path_str(&big)]).0, EXIT_TOO_LARGE);
    assert_eq!(
        turan(&["verify", "--in", path_str(&big), "--mode", "sample", "--samples", "10"]).0,
        EXIT_COUNTEREXAMPLE
    );
}

#[test]
fn constants_command() {
    let (code, out, _) = turan(&["constants", "--R", "1", "--json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["mu"].as_f64().unwrap() < 4.911);
    let (code, out, _) = turan(&["constants", "--R", "2", "--json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible_general"], true);
    assert_eq!(turan(&["constants", "--R", "0"]).0, EXIT_FAILURE);
    let (code, out, _) = turan(&["constants", "--R", "1000"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("c0 range"));
}

#[test]
fn exact_command() {
    let (code, out, _) = turan(&["exact", "--n", "5", "--s", "4", "--r", "3"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("T(5, 4, 3) = 3"));
    let (_, out, _) = turan(&["exact", "--n", "9", "--s", "4", "--r", "1"]);
    assert!(out.starts_with("T(9, 4, 1) = 6"));
    let (_, out, _) = turan(&["exact", "--n", "3", "--s", "4", "--r", "2"]);
    assert!(out.starts_with("T(3, 4, 2) = 0"));
    assert_eq!(turan(&["exact", "--n", "9", "--s", "5", "--r", "4", "--budget", "10"]).0, EXIT_TOO_LARGE);
}

#[test]
fn table_command() {
    let (code, out, _) = turan(&["table", "--R", "1", "--r-min", "6", "--r-max", "9", "--n-max", "18"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("r\tn\ts\tsize"));
    assert_eq!(lines.len(), 1 + (6..=9).map(|r| 18 - r).sum::<usize>());
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols[7], "covered", "{line}");
        assert!(cols[6].parse::<f64>().unwrap() <= 6.239);
    }
    let (code, out, _) = turan(&["table", "--r-min", "5", "--r-max", "4", "--n-max", "9"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1);
    let (_, out, _) = turan(&["table", "--r-min", "3", "--r-max", "3", "--n-min", "5", "--n-max", "5", "--exact-compare"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split('\t').collect();
    let size: u64 = row[3].parse().unwrap();
    let exact: u64 = row[8].parse().unwrap();
    assert_eq!(exact, 3);
    assert!(size >= exact);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_turan");
    let status = Command::new(bin).args(["exact", "--n", "4", "--s", "4", "--r", "3"]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_OK));
    let status = Command::new(bin).args(["constants", "--R", "0"]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_FAILURE));
    let out = Command::new(bin)
        .args(["--threads", "1", "constants"])
        .env("TURAN_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
}
