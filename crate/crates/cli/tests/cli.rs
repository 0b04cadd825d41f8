use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ee_scenario::artifact::{read_manifest, read_summary, read_user_csv, user_csv, SUMMARY_SCHEMA};

const SMALL: &str = r#"
name = "small"
horizon_frames = 30
seeds = [3, 4]

[network]
n_cells = 7
n_focal_users = 2
n_shared_subcarriers = 2
tx_antennas = 2
rx_antennas = 2

[[network.mobility]]
class = "pedestrian"
speed_kmh = 3.0
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ee-scenario"));
    c.env_remove(ee_scenario::OUTPUT_ROOT_ENV);
    c
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for seed in fs::read_dir(dir).unwrap() {
        let seed = seed.unwrap().path();
        if !seed.is_dir() {
            continue;
        }
        for f in fs::read_dir(&seed).unwrap() {
            let f = f.unwrap().path();
            let rel = f.strip_prefix(dir).unwrap().display().to_string();
            files.push((rel, fs::read(&f).unwrap()));
        }
    }
    files.sort();
    files
}

#[test]
fn bundled_scenarios_validate() {
    for name in ["static", "mobility", "noisy"] {
        let o = run(&["validate", s(&bundled(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn invalid_scenario_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "bad.toml",
        "name = \"bad\"\nhorizon_frames = 0\nseeds = []\n[network]\nn_cells = 5\ntx_antennas = 0\n",
    );
    let o = run(&["validate", s(&p)]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    for field in ["horizon_frames", "seeds", "network.n_cells", "network.tx_antennas"] {
        assert!(err.contains(field), "{field} missing in {err}");
    }
    let o = run(&["run", s(&p), "--out", s(&tmp.path().join("out"))]);
    assert_eq!(code(&o), 1);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn run_writes_complete_reproducible_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = run(&["run", s(&sc), "--out", s(&a)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("median gain"));
    let o = run(&["run", s(&sc), "--out", s(&b), "--parallel", "2"]);
    assert_eq!(code(&o), 0);

    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    let manifest = read_manifest(&a).unwrap();
    assert_eq!(manifest.seeds, vec![3, 4]);
    assert_eq!(manifest.horizon, 30);

    let summary = read_summary(&a).unwrap();
    assert_eq!(summary.seeds.len(), 2);
    for seed in [3, 4] {
        for u in 0..2 {
            let rows = read_user_csv(&user_csv(&a, seed, u)).unwrap();
            assert_eq!(rows.len(), 30);
            assert!(rows.iter().all(|r| r.ee_instant_opt.unwrap() >= r.ee * (1.0 - 1e-9)));
        }
    }

    let schema: serde_json::Value = serde_json::from_str(SUMMARY_SCHEMA).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(fs::read_to_string(a.join("summary.schema.json")).unwrap(), SUMMARY_SCHEMA);

    let o = run(&["check-bounds", s(&a)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn overrides_and_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "small.toml", SMALL);
    let root = tmp.path().join("root");
    let o = bin()
        .args(["run", s(&sc), "--seeds", "9", "--horizon", "1"])
        .env(ee_scenario::OUTPUT_ROOT_ENV, &root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = root.join("small");
    let summary = read_summary(&dir).unwrap();
    assert_eq!(summary.horizon, 1);
    assert_eq!(summary.seeds.len(), 1);
    for u in 0..2 {
        let rows = read_user_csv(&user_csv(&dir, 9, u)).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].regret_avg.is_finite());
        let r = &summary.seeds[0].users[u].regret;
        assert!(r.cumulative_regret.is_finite() && r.bound_sqrt.is_finite());
    }
    assert_eq!(code(&run(&["check-bounds", s(&dir)])), 0);
}

#[test]
fn inflated_regret_fails_check_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "small.toml", SMALL);
    let dir = tmp.path().join("a");
    assert_eq!(code(&run(&["run", s(&sc), "--out", s(&dir)])), 0);

    let path = dir.join("summary.json");
    let original = fs::read_to_string(&path).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&original).unwrap();
    for seed in doc["seeds"].as_array_mut().unwrap() {
        for u in seed["users"].as_array_mut().unwrap() {
            for key in ["cumulative_regret", "average_regret"] {
                let v = u["regret"][key].as_f64().unwrap();
                u["regret"][key] = serde_json::json!(v + 0.1 * v.abs());
            }
            let v = u["final_average_regret"].as_f64().unwrap();
            u["final_average_regret"] = serde_json::json!(v + 0.1 * v.abs());
        }
    }
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = run(&["check-bounds", s(&dir)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));

    fs::write(&path, &original).unwrap();
    assert_eq!(code(&run(&["check-bounds", s(&dir)])), 0);
    let mut doc: serde_json::Value = serde_json::from_str(&original).unwrap();
    doc["seeds"][0]["users"][0]["regret"]["gamma"] = serde_json::json!(null);
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(code(&run(&["check-bounds", s(&dir)])), 1);
}

#[test]
fn runtime_failure_leaves_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[network]\n", "[network]\nchannel_norm_cap = 1e-30\n");
    let sc = write(tmp.path(), "capped.toml", &text);
    let dir = tmp.path().join("a");
    let o = run(&["run", s(&sc), "--out", s(&dir)]);
    assert_eq!(code(&o), 3);
    let marker = fs::read_to_string(dir.join("FAILED")).unwrap();
    assert!(marker.contains("seed 3") && marker.contains("seed 4"), "{marker}");
    assert!(dir.join("manifest.json").exists());
    assert!(!dir.join("summary.json").exists());
    assert_eq!(code(&run(&["check-bounds", s(&dir)])), 1);
    assert_eq!(code(&run(&["check-bounds", s(&tmp.path().join("missing"))])), 1);
}

#[test]
fn baseline_power_is_half_the_maximum() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "small.toml", SMALL);
    let dir = tmp.path().join("base");
    let o = run(&["baseline", s(&sc), "--out", s(&dir), "--horizon", "12"]);
    assert_eq!(code(&o), 0);
    let p0_dbm = 33.0 - 10.0 * 2f64.log10();
    for seed in [3, 4] {
        for u in 0..2 {
            let path = dir.join(format!("seed-{seed}")).join(format!("baseline-user-{u:02}.csv"));
            let mut r = csv::Reader::from_path(&path).unwrap();
            let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
            assert_eq!(rows.len(), 12);
            for row in rows {
                let p: f64 = row[1].parse().unwrap();
                assert!((p - p0_dbm).abs() < 1e-9, "{p}");
            }
        }
    }
}

#[test]
fn bundled_static_first_seed_gains() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("static");
    let o = run(&["run", s(&bundled("static")), "--seeds", "1", "--out", s(&dir)]);
    assert_eq!(code(&o), 0);
    let summary = read_summary(&dir).unwrap();
    for u in &summary.seeds[0].users {
        assert!((1.0..=10.0).contains(&u.ee_gain), "user {}: {}", u.user, u.ee_gain);
    }
}

#[test]
fn bundled_noisy_regret_decays() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("noisy");
    let o = run(&["run", s(&bundled("noisy")), "--seeds", "1", "--out", s(&dir)]);
    assert_eq!(code(&o), 0);
    for u in 0..15 {
        let rows = read_user_csv(&user_csv(&dir, 1, u)).unwrap();
        assert!(rows[199].regret_avg < rows[19].regret_avg, "user {u}");
    }
}
