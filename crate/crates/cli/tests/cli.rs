use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qalab_cli::manifest::{RunManifest, RunStatus};

fn qalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qalab"))
        .args(args)
        .env_remove("QALAB_ENDPOINT")
        .env_remove("QALAB_TOKEN")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const RELAX_1Q: &str = r#"{
  "model": {"preset": "single_qubit"},
  "schedule": {"t1_us": 10, "t3_us": 10, "h_d": 0.6, "t2_grid_us": [0, 20, 40, 80, 160]},
  "noise": {"mode": "eigenbasis_davies", "rate": 0.05},
  "experiment": {"shots": 5000, "seed": 3}
}"#;

#[test]
fn spectrum_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model":{"preset":"fully_connected"},"schedule":{"hd_grid":[0.5,0.75,1.0]}}"#,
    );
    let out = dir.path().join("spec.csv");
    let o = qalab(&["spectrum", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("h_d,gap,transition_element_z\n"));
    let last = rows(&text).pop().unwrap();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 4.0).abs() < 1e-12);
    assert!(dir.path().join("spec.csv.manifest.json").exists());

    let cfg = write_config(
        dir.path(),
        "q.json",
        r#"{"model":{"preset":"single_qubit"},"schedule":{"hd_grid":{"start":0.70,"stop":0.85,"points":151}}}"#,
    );
    let o = qalab(&["spectrum", "--config", s(&cfg)]);
    assert!(o.status.success());
    let table = rows(&String::from_utf8(o.stdout).unwrap());
    let best = table
        .iter()
        .min_by(|a, b| (a[1] - 0.75).abs().total_cmp(&(b[1] - 0.75).abs()))
        .unwrap();
    assert!((0.76..=0.80).contains(&best[0]), "{best:?}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(qalab(&["spectrum", "--config", s(&missing)]).status.code(), Some(2));
    assert_eq!(qalab(&["spectrum"]).status.code(), Some(2));
    let typo = write_config(dir.path(), "t.json", r#"{"model":{"preset":"single_qubit"},"schedule":{"hd":1}}"#);
    let o = qalab(&["spectrum", "--config", s(&typo)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hd"));
    let ok = write_config(dir.path(), "ok.json", RELAX_1Q);
    assert_eq!(qalab(&["relax", "--config", s(&ok)]).status.code(), Some(2));
}

#[test]
fn relax_outputs_and_rerun_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", RELAX_1Q);
    let a = dir.path().join("a");
    let o = qalab(&["relax", "--config", s(&cfg), "--out", s(&a)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("fit.json")).unwrap()).unwrap();
    assert!(fit["t1_us"].as_f64().unwrap() > 0.0);
    let manifest = RunManifest::from_json(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, RunStatus::Completed);
    assert_eq!(manifest.seed, 3);
    assert_eq!(manifest.outputs.len(), 2);

    let b = dir.path().join("b");
    let o = qalab(&["relax", "--config", s(&a.join("manifest.json")), "--out", s(&b)]);
    assert!(o.status.success());
    for f in ["curve.csv", "fit.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let c = dir.path().join("c");
    assert!(qalab(&["relax", "--config", s(&cfg), "--out", s(&c), "--seed", "4"]).status.success());
    assert_ne!(fs::read(a.join("curve.csv")).unwrap(), fs::read(c.join("curve.csv")).unwrap());
}

#[test]
fn failed_fit_keeps_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model":{"preset":"single_qubit"},"schedule":{"h_d":0.9,"t2_grid_us":[0,1]},
            "noise":{"mode":"none"},"experiment":{"shots":1000}}"#,
    );
    let out = dir.path().join("r");
    let o = qalab(&["relax", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("curve.csv").exists());
    assert!(!out.join("fit.json").exists());
    let m = RunManifest::from_json(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    assert!(m.error.unwrap().contains("fit"));
}

#[test]
fn sweeps_match_across_backends() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#"{
      "model": {"preset": "single_qubit"},
      "schedule": {"t2_us": 5, "t2_grid_us": [0, 10, 20, 40], "hd_grid": [0.6, 0.7]},
      "noise": {"rate": 0.05},
      "experiment": {"shots": 3000, "seed": 11},
      "backend": {"kind": "KIND"}
    }"#;
    for mode in ["survival", "t1"] {
        let mut outputs = Vec::new();
        for kind in ["simulated", "mock"] {
            let cfg = write_config(dir.path(), &format!("{kind}.json"), &base.replace("KIND", kind));
            let out = dir.path().join(format!("{mode}-{kind}"));
            let o = qalab(&["sweep", "--mode", mode, "--config", s(&cfg), "--out", s(&out)]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            outputs.push(out);
        }
        let files: &[&str] = if mode == "t1" { &["t1_sweep.csv", "curves.csv"] } else { &["survival.csv"] };
        for f in files {
            let a = fs::read_to_string(outputs[0].join(f)).unwrap();
            assert_eq!(a, fs::read_to_string(outputs[1].join(f)).unwrap(), "{mode} {f}");
            assert_eq!(a.lines().count(), if *f == "curves.csv" { 9 } else { 3 });
        }
    }
}

#[test]
fn entropy_and_perturb_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model":{"preset":"fully_connected"},"schedule":{"h_d":0.5,"t2_us":1},
            "experiment":{"entropy_points":31}}"#,
    );
    let o = qalab(&["entropy", "--config", s(&cfg)]);
    assert!(o.status.success());
    let e = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(e.len(), 31);
    assert!(e[0][1].abs() < 1e-9);
    assert!(e[15][1] > 0.01);

    let o = qalab(&["perturb-check", "--config", s(&cfg)]);
    assert!(o.status.success());
    for r in rows(&String::from_utf8(o.stdout).unwrap()) {
        assert!(r[3] > 1.9, "{r:?}");
        if r[0] <= 1e-2 {
            assert!((r[4] - 1.0).abs() < 0.05, "{r:?}");
        }
    }

    let q = write_config(dir.path(), "q.json", r#"{"model":{"preset":"single_qubit"}}"#);
    assert_eq!(qalab(&["entropy", "--config", s(&q)]).status.code(), Some(2));
}

#[test]
fn submit_through_mock() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model":{"preset":"fully_connected"},"schedule":{"t2_us":2},
            "experiment":{"shots":500,"seed":5},"backend":{"kind":"mock"}}"#,
    );
    let out = dir.path().join("s");
    let o = qalab(&["submit", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let job = fs::read_to_string(out.join("job.json")).unwrap();
    assert!(job.starts_with(r#"{"h":[0.5,0.5,0.5,0.5],"j":{"0,1":-1.0"#));
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["status"], "completed");
    let total: u64 = result["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 500);

    let plain = write_config(dir.path(), "p.json", r#"{"model":{"preset":"fully_connected"}}"#);
    let o = qalab(&["submit", "--config", s(&plain), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
}
