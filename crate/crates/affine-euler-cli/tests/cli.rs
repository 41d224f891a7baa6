use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_affine-lab"));
    cmd.args(args).arg("--out").arg(dir.join("out")).env_remove("AFFINE_LAB_WORKERS");
    if let Some(text) = config {
        let path = dir.join("run.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["verify", "--workers", "2"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], "affine-lab/1");
    assert_eq!(manifest["status"], "pass");
    let files: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a["file"].as_str().unwrap()).collect();
    for f in ["key_lemma.csv", "commutators.csv", "hardy.csv", "verdict.json"] {
        assert!(files.contains(&f), "{files:?}");
        assert!(dir.path().join("out").join(f).exists());
    }
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["affine"], Some("[params]\ndelta = -1.0\n"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
    let o = lab(dir.path(), &["affine"], Some("[params]\ngamma = 1.4\nbogus = 1\n"));
    assert_eq!(code(&o), 2);
    let o = lab(dir.path(), &["affine"], Some("kind = \"verify\"\n"));
    assert_eq!(code(&o), 2);
    let o = lab(dir.path(), &["verify", "--workers", "0"], None);
    assert_eq!(code(&o), 2);
    let o = lab(dir.path(), &["perturb", "--model", "radial"], Some("[affine]\na1 = [1, 0.2, 0, 0, 1, 0, 0, 0, 1]\n"));
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_perturbation_is_steady() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "kind = \"perturb-radial\"\n[grid]\nradial_n = 64\n[data]\nprofile = \"zero\"\n[solver]\ntau_end = 2.0\n";
    let o = lab(dir.path(), &["perturb"], Some(cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let verdict = fs::read_to_string(dir.path().join("out/verdict.json")).unwrap();
    assert!(verdict.contains("steady_state_step_change"));
}

#[test]
fn sweep_recovers_rate_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["sweep", "affine"], Some("[sweep]\ngammas = [1.4, 1.6666666666666667]\n"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let mut rd = csv::Reader::from_path(dir.path().join("out/summary.csv")).unwrap();
    let ratios: Vec<f64> = rd.records().map(|r| r.unwrap()[6].parse().unwrap()).collect();
    assert!((ratios[0] - 0.6).abs() < 1e-6 && (ratios[1] - 1.0).abs() < 1e-6, "{ratios:?}");
    assert!(dir.path().join("out/cell-001/trajectory.csv").exists());
    let o = lab(dir.path(), &["sweep", "affine"], Some("[params]\ngamma = 1.4\n"));
    assert_eq!(code(&o), 2);
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = "seed = 3\n[affine]\nseeded = true\nt_end = 100.0\n";
    assert_eq!(code(&lab(a.path(), &["affine"], Some(cfg))), 0);
    assert_eq!(code(&lab(b.path(), &["affine", "--workers", "1"], Some(cfg))), 0);
    for f in ["trajectory.csv", "asymptotics.json", "verdict.json", "manifest.json"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}
