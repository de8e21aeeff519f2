mod common;

use common::{density_file, pure_file, run, stdout_json, write_json};
use tempfile::TempDir;

fn values(doc: &serde_json::Value) -> Vec<(String, f64)> {
    doc["result"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| (v["pscm"].as_str().unwrap().to_string(), v["value"].as_f64().unwrap()))
        .collect()
}

fn report_values(doc: &serde_json::Value) -> Vec<f64> {
    doc["result"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_f64().unwrap())
        .collect()
}

#[test]
fn measure_pure_state() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("psi.json");
    write_json(&path, &pure_file(&[0.2f64.sqrt(), 0.3f64.sqrt(), 0.5f64.sqrt()]));
    let out = run(&["measure", path.to_str().unwrap(), "--pscm", "dm"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["label"], "pure");
    let v = values(&doc);
    assert_eq!(v.len(), 1);
    assert!((v[0].1 - 0.31).abs() < 1e-12);
}

#[test]
fn measure_mcs_projector_uses_populations() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("mcs.json");
    let third = 1.0 / 3.0;
    write_json(&path, &density_file(&[&[third; 3], &[third; 3], &[third; 3]]));
    let out = run(&["measure", path.to_str().unwrap(), "--pscm", "dd,l1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["label"], "dephased-populations");
    let v = values(&doc);
    assert!((v[0].1 - 2.0).abs() < 1e-12);
    assert!((doc["result"]["c_l1_mixed"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn malformed_input_names_the_field() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dim": 2, "kind": "density", "matrix": [[[1, 0], [0]], [[0, 0], [0, 0]]]}"#).unwrap();
    let out = run(&["measure", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("matrix"));

    std::fs::write(&path, r#"{"dim": 2, "kind": "pure"}"#).unwrap();
    let out = run(&["measure", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("amplitudes"));

    write_json(&path, &density_file(&[&[0.6, 0.0], &[0.0, 0.6]]));
    let out = run(&["measure", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotUnitTrace"));

    let out = run(&["measure", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(&["verify", "--pscm", "dd", "--dim", "4", "--samples", "10000"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "--pscm", "dm", "--dim", "3"]).status.code(), Some(0));
    let out = run(&["verify", "--dim", "3", "--fixture", "sum-squares", "--samples", "500"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = stdout_json(&out);
    let c3 = &doc["result"]["reports"][0]["condition3"];
    assert_eq!(c3["passed"], false);
    assert!(c3["witness"]["lambda"].is_number());
    assert_eq!(run(&["verify", "--dim", "1"]).status.code(), Some(2));
}

#[test]
fn quantifier_commands() {
    let dir = TempDir::new().unwrap();
    let small = ["--restarts", "4", "--samples", "32", "--refine", "20"];

    let inc = dir.path().join("inc.json");
    write_json(&inc, &density_file(&[&[0.7, 0.0], &[0.0, 0.3]]));
    for cmd in ["cp", "roof"] {
        let mut args = vec![cmd, inc.to_str().unwrap()];
        args.extend(small);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        assert!(report_values(&stdout_json(&out)).iter().all(|&v| v == 0.0));
    }

    let qubit = dir.path().join("qubit.json");
    write_json(&qubit, &density_file(&[&[0.5, 0.25], &[0.25, 0.5]]));
    let out = run(&["roof", qubit.to_str().unwrap(), "--pscm", "l1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((report_values(&stdout_json(&out))[0] - 0.5).abs() < 1e-3);

    let pure = dir.path().join("pure.json");
    let amps = [0.2f64.sqrt(), 0.3f64.sqrt(), 0.5f64.sqrt()];
    write_json(&pure, &pure_file(&amps));
    let mu = [0.2, 0.3, 0.5];
    for cmd in ["cp", "roof"] {
        let mut args = vec![cmd, pure.to_str().unwrap()];
        args.extend(small);
        let doc = stdout_json(&run(&args));
        for (tag, v) in ["dd", "dm", "l1", "entropy"].iter().zip(report_values(&doc)) {
            assert!((v - common::oracle(tag, &mu)).abs() < 1e-9, "{cmd} {tag}");
        }
    }

    let mut args = vec!["gap", qubit.to_str().unwrap()];
    args.extend(small);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["result"]["respects_order"], true);

    let mut args = vec!["cp", qubit.to_str().unwrap(), "--refine-scale", "2"];
    args.extend(small);
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn gap_search_contract() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("gaps.csv");
    let args = [
        "gap-search", "--dim", "2", "--trials", "12", "--pscm", "dm", "--seed", "7", "--timestamp", "fixed",
        "--restarts", "4", "--samples", "32", "--refine", "20", "--csv", csv.to_str().unwrap(),
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    let first_csv = std::fs::read_to_string(&csv).unwrap();
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first_csv, std::fs::read_to_string(&csv).unwrap());
    let lines: Vec<&str> = first_csv.lines().collect();
    assert_eq!(lines[0], "pscm,trial,state_seed,c_p,c_roof,gap,status");
    assert_eq!(lines.len(), 13);

    let out = run(&["gap-search", "--dim", "2", "--trials", "0", "--pscm", "dm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_and_transformable() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let r = run(&[
            "gen", "--dim", "3", "--rank", "1", "--count", "5", "--seed", "3", "--timestamp", "fixed", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(&out_a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for n in &names {
        let a = std::fs::read(out_a.join(n)).unwrap();
        assert_eq!(a, std::fs::read(out_b.join(n)).unwrap());
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(v["kind"], "pure");
    }

    assert_eq!(
        run(&["gen", "--dim", "3", "--rank", "4", "--out", dir.path().join("c").to_str().unwrap()]).status.code(),
        Some(2)
    );

    let mcs = dir.path().join("mcs.json");
    let basis = dir.path().join("basis.json");
    let s = (1.0f64 / 3.0).sqrt();
    write_json(&mcs, &pure_file(&[s, s, s]));
    write_json(&basis, &pure_file(&[1.0, 0.0, 0.0]));
    let ok = run(&["transformable", "--source", mcs.to_str().unwrap(), "--target", basis.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout_json(&ok)["result"]["transformable"], true);
    let no = run(&["transformable", "--source", basis.to_str().unwrap(), "--target", mcs.to_str().unwrap()]);
    assert_eq!(no.status.code(), Some(1));
}

#[test]
fn seed_from_environment() {
    let out = std::process::Command::new(common::binary())
        .args(["verify", "--dim", "2", "--pscm", "dm", "--samples", "50", "--timestamp", "t"])
        .env("COHERENCE_LAB_SEED", "41")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["manifest"]["seed"], 41);
}
