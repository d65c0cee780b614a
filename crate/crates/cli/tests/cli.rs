use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = "\
[model]
cutoff = 4
dt = 0.002

[sampling]
chains = 3
samples_per_chain = 8
burn_factor = 5.0

[sweep]
alphas = [0.5, 0.25]
";

fn snls(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_snls"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("SNLS_")) {
        cmd.env_remove(k);
    }
    cmd.args(args).output().expect("binary runs")
}

fn status(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn oracle_passes_on_a_clean_checkout() {
    let dir = tempfile::tempdir().unwrap();
    let o = snls(&["oracle", "--out", s(dir.path())]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("oracle.manifest.json"));
    assert!(m["predicates"].as_array().unwrap().iter().all(|p| p["pass"] == true));
    assert_eq!(json(&dir.path().join("oracle.json"))["manifest"], "oracle.manifest.json");
}

#[test]
fn sampling_twice_gives_identical_packs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(status(&snls(&["sample", "--config", s(&cfg), "--out", s(&a), "--seed", "7"])), 0);
    assert_eq!(status(&snls(&["sample", "--config", s(&cfg), "--out", s(&b), "--seed", "7", "--threads", "2"])), 0);
    let pa = fs::read(a.join("measure.pack")).unwrap();
    assert!(!pa.is_empty());
    assert_eq!(pa, fs::read(b.join("measure.pack")).unwrap());
    assert_ne!(status(&snls(&["sample", "--config", s(&cfg), "--out", s(&dir.path().join("c")), "--seed", "8"])), 1);
    assert_ne!(pa, fs::read(dir.path().join("c/measure.pack")).unwrap());
}

#[test]
fn sweep_writes_one_measure_per_alpha_and_a_trend_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep");
    assert_eq!(status(&snls(&["sweep", "--config", s(&cfg), "--out", s(&out)])), 0);
    for a in ["0.5", "0.25"] {
        let desc = json(&out.join(format!("measure-a{a}.json")));
        assert_eq!(desc["manifest"], "sweep.manifest.json");
        assert_eq!(desc["measure"]["provenance"]["alpha"].as_f64().unwrap().to_string(), a);
        assert!(out.join(desc["pack"].as_str().unwrap()).is_file());
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# manifest: sweep.manifest.json");
    assert!(lines[1].starts_with("alpha,"));
    assert_eq!(lines.len(), 4);
    assert!(out.join("invariance-trend.csv").is_file());
}

#[test]
fn manifest_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = dir.path().join("first");
    assert_eq!(status(&snls(&["oracle", "--config", s(&cfg), "--out", s(&first)])), 0);
    let text = json(&first.join("oracle.manifest.json"))["config"].as_str().unwrap().to_string();
    let again = dir.path().join("again.toml");
    fs::write(&again, &text).unwrap();
    let second = dir.path().join("second");
    assert_eq!(status(&snls(&["oracle", "--config", s(&again), "--out", s(&second)])), 0);
    assert_eq!(json(&second.join("oracle.manifest.json"))["config"].as_str().unwrap(), text);
}

#[test]
fn replay_reproduces_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    assert_eq!(status(&snls(&["sample", "--config", s(&cfg), "--out", s(&out)])), 0);
    let o = snls(&["replay", s(&out.join("sample.manifest.json")), "--out", s(&dir.path().join("again"))]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let mut m = json(&out.join("sample.manifest.json"));
    m["outputs"][0]["sha256"] = "00".into();
    let tampered = out.join("tampered.manifest.json");
    fs::write(&tampered, m.to_string()).unwrap();
    assert_eq!(status(&snls(&["replay", s(&tampered), "--out", s(&dir.path().join("third"))])), 4);
}

#[test]
fn analyses_accept_a_stored_measure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    assert_eq!(status(&snls(&["sample", "--config", s(&cfg), "--out", s(&out)])), 0);
    let input = out.join("measure.json");
    let sb = dir.path().join("sb");
    assert_eq!(status(&snls(&["smallball", "--input", s(&input), "--out", s(&sb)])), 0);
    let m = json(&sb.join("smallball.manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    assert!(!sb.join("measure.pack").exists());

    fs::remove_file(out.join("sample.manifest.json")).unwrap();
    assert_eq!(status(&snls(&["smallball", "--input", s(&input), "--out", s(&sb)])), 2);
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[model]\ncutof = 4\n").unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    assert_eq!(status(&snls(&["sample", "--config", s(&bad), "--out", &out("a")])), 2);
    assert_eq!(status(&snls(&["sample", "--no-such-flag"])), 2);
    let coarse = dir.path().join("loud.toml");
    fs::write(&coarse, "[model]\ndt = 0.02\n\n[simulate]\namplitude = 1.0\n").unwrap();
    assert_eq!(status(&snls(&["simulate", "--config", s(&coarse), "--out", &out("b")])), 0);
    assert_eq!(status(&snls(&["simulate", "--config", s(&coarse), "--out", &out("b"), "--check"])), 4);
    let blow = dir.path().join("blow.toml");
    fs::write(&blow, "[simulate]\ninitial = \"power-law\"\nnorm = 1000.0\n").unwrap();
    assert_eq!(status(&snls(&["simulate", "--config", s(&blow), "--out", &out("c")])), 3);
}

#[test]
fn plots_follow_reports() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    assert_eq!(status(&snls(&["plot", "--out", s(&empty)])), 0);
    assert!(!empty.exists());

    let sim = dir.path().join("sim");
    assert_eq!(status(&snls(&["simulate", "--out", s(&sim)])), 0);
    let plots = dir.path().join("plots");
    assert_eq!(status(&snls(&["plot", s(&sim.join("growth.json")), "--out", s(&plots)])), 0);
    let svgs: Vec<_> = fs::read_dir(&plots).unwrap().filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "svg")).collect();
    assert_eq!(svgs.len(), 1);
    let svg = fs::read_to_string(svgs[0].path()).unwrap();
    assert!(svg.contains("<!-- manifest: plot.manifest.json -->"));

    fs::remove_file(sim.join("simulate.manifest.json")).unwrap();
    assert_eq!(status(&snls(&["plot", s(&sim.join("growth.json")), "--out", s(&dir.path().join("p2"))])), 2);
}

#[test]
fn density_report_plots_a_histogram_per_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("density");
    assert_eq!(status(&snls(&["density", "--config", s(&cfg), "--out", s(&out)])), 0);
    let plots = dir.path().join("plots");
    assert_eq!(status(&snls(&["plot", s(&out.join("density.json")), "--out", s(&plots)])), 0);
    for tag in ["M", "E"] {
        let svg = fs::read_to_string(plots.join(format!("density-{tag}.svg"))).unwrap();
        assert!(svg.contains("density bound"));
    }
}
