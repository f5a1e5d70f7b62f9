use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const QUICK: &str = r#"
[model]
kind = "tfi_chain"
sizes = [6]
g = 0.8

[vqe]
restarts = 1
seed = 3

[excitation]
parity_filter = "even"

[oracle]
kind = "fermion"

[output]
directory = "out"
formats = ["csv", "json", "subspace_binary", "subspace_json"]
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcex-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn qcex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcex")).args(args).env_remove("QCEX_THREADS").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn hashes(m: &serde_json::Value) -> BTreeMap<String, String> {
    m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn validate_accepts_shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = qcex(&["validate", path.to_str().unwrap()]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn invalid_configs_exit_with_two_and_name_the_field() {
    let dir = scratch("invalid");
    let cases = [
        (QUICK.replace("sizes = [6]", "sizes = [30]"), "model.sizes"),
        (QUICK.replace("sizes = [6]", "sizes = [7]"), "circuit"),
        (QUICK.replace("g = 0.8", "g = nan"), "model.g"),
        (QUICK.replace("restarts = 1", "restarts = 0"), "vqe.restarts"),
        (QUICK.replace("[oracle]", "[oracle]\nbogus = 1"), "bogus"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("bad{i}.toml"), text);
        let out = qcex(&["validate", &cfg]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "case {i}: {err}");
    }
}

#[test]
fn bad_thread_count_is_a_validation_error() {
    let dir = scratch("threads");
    let cfg = write_config(&dir, "run.toml", QUICK);
    let out = Command::new(env!("CARGO_BIN_EXE_qcex")).args(["validate", &cfg]).env("QCEX_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("QCEX_THREADS"));
}

#[test]
fn runs_are_reproducible_and_checkpoints_skip_the_optimizer() {
    let dir = scratch("repro");
    let a = write_config(&dir, "a.toml", &QUICK.replace("directory = \"out\"", "directory = \"a\""));
    let b = write_config(&dir, "b.toml", &QUICK.replace("directory = \"out\"", "directory = \"b\""));
    for cfg in [&a, &b] {
        let out = qcex(&["run", cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ma, mb) = (manifest(&dir.join("a")), manifest(&dir.join("b")));
    assert_eq!(hashes(&ma), hashes(&mb));
    assert_eq!(ma["checkpoint_reused"], false);

    // every listed file exists with the recorded hash
    for (path, sha) in hashes(&ma) {
        let bytes = std::fs::read(dir.join("a").join(&path)).unwrap();
        assert_eq!(qcex_cli::manifest::sha256_hex(&bytes), sha, "{path}");
    }
    let listed = hashes(&ma);
    for name in ["spectrum.csv", "spectrum.json", "params.json", "vqe.json", "oracle.csv", "comparison.csv", "comparison.json"] {
        assert!(listed.contains_key(name), "{name} missing from manifest");
    }
    assert!(listed.keys().any(|p| p.ends_with(".qcexsub")));

    let resumed = QUICK
        .replace("directory = \"out\"", "directory = \"c\"")
        .replace("seed = 3", "seed = 3\ncheckpoint = \"a/params.json\"");
    let c = write_config(&dir, "c.toml", &resumed);
    let out = qcex(&["run", &c]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mc = manifest(&dir.join("c"));
    assert_eq!(mc["checkpoint_reused"], true);
    let hc = hashes(&mc);
    for name in ["spectrum.csv", "oracle.csv", "comparison.csv"] {
        assert_eq!(hc[name], listed[name], "{name}");
    }
}

#[test]
fn checkpoint_for_another_circuit_is_rejected() {
    let dir = scratch("mismatch");
    let a = write_config(&dir, "a.toml", QUICK);
    assert!(qcex(&["run", &a]).status.success());
    let other = QUICK
        .replace("sizes = [6]", "sizes = [8]")
        .replace("seed = 3", "seed = 3\ncheckpoint = \"out/params.json\"")
        .replace("directory = \"out\"", "directory = \"other\"");
    let b = write_config(&dir, "b.toml", &other);
    let out = qcex(&["run", &b]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!dir.join("other/manifest.json").exists());
}

#[test]
fn compare_matches_a_spectrum_with_itself() {
    let dir = scratch("compare");
    let cfg = write_config(&dir, "run.toml", QUICK);
    assert!(qcex(&["run", &cfg]).status.success());
    let spectrum = dir.join("out/spectrum.csv");
    let oracle = dir.join("out/oracle.csv");
    let report = dir.join("matches.csv");
    let out = qcex(&["compare", oracle.to_str().unwrap(), spectrum.to_str().unwrap(), "--tolerance", "1e-6", "--output", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("matched"), "{text}");
    assert!(std::fs::read_to_string(&report).unwrap().lines().count() > 1);

    let same = qcex(&["compare", spectrum.to_str().unwrap(), spectrum.to_str().unwrap(), "--tolerance", "0"]);
    assert!(same.status.success());
    assert!(String::from_utf8_lossy(&same.stdout).contains("unmatched_reference 0 "));

    let garbage = dir.join("garbage.csv");
    std::fs::write(&garbage, "not,a,spectrum\n1,2,3\n").unwrap();
    let out = qcex(&["compare", garbage.to_str().unwrap(), spectrum.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_verb_writes_only_the_reference() {
    let dir = scratch("oracle");
    let cfg = write_config(&dir, "run.toml", QUICK);
    let out = qcex(&["oracle", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed = hashes(&manifest(&dir.join("out")));
    assert!(listed.contains_key("oracle.csv"));
    assert!(!listed.contains_key("spectrum.csv"));
}
