use std::path::Path;
use std::process::{Command, Output};

use vin_attention::config::{circle_montecarlo, ExperimentConfig, TrajectorySpec};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vin-attention"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = circle_montecarlo();
    if let TrajectorySpec::Circle { duration, .. } = &mut cfg.trajectory {
        *duration = 12.0;
    }
    cfg.n_landmarks = 120;
    cfg.kappa = 10;
    cfg.n_runs = 2;
    cfg.output_dir = dir.join("results").to_string_lossy().into_owned();
    cfg
}

#[test]
fn run_writes_every_output_under_the_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let cfg_path = tmp.path().join("cfg.json");
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();

    let out = cli(&["run", cfg_path.to_str().unwrap(), "--threads", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let results = Path::new(&cfg.output_dir);
    for f in ["summary.csv", "runs.csv", "aggregate.csv", "config.json"] {
        assert!(results.join(f).is_file(), "missing {f}");
    }
    let mut entries: Vec<String> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    entries.sort();
    assert_eq!(entries, ["cfg.json", "results"]);

    let echoed = ExperimentConfig::from_path(&results.join("config.json")).unwrap();
    assert_eq!(echoed, cfg);

    let summary = std::fs::read_to_string(results.join("summary.csv")).unwrap();
    assert!(!summary.contains('\r'));
    assert!(summary.lines().count() > 1);
}

#[test]
fn seed_override_changes_results_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let cfg_path = tmp.path().join("cfg.json");
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg_arg = cfg_path.to_str().unwrap();
    assert_eq!(cli(&["run", cfg_arg, "--out", a.to_str().unwrap()], tmp.path()).status.code(), Some(0));
    let out = cli(&["run", cfg_arg, "--seed-override", "7", "--out", b.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0));

    let echoed = ExperimentConfig::from_path(&b.join("config.json")).unwrap();
    assert_eq!(echoed.master_seed, 7);
    let sa = std::fs::read(a.join("runs.csv")).unwrap();
    let sb = std::fs::read(b.join("runs.csv")).unwrap();
    assert_ne!(sa, sb);
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cli(&["validate", bad.to_str().unwrap()], tmp.path()).status.code(), Some(2));

    let mut cfg = small_config(tmp.path());
    cfg.kappa = cfg.n_landmarks + 1;
    std::fs::write(&bad, cfg.to_json()).unwrap();
    let out = cli(&["run", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!tmp.path().join("results").exists());

    let json = small_config(tmp.path()).to_json().replace("\"n_runs\"", "\"n_rums\"");
    std::fs::write(&bad, json).unwrap();
    let out = cli(&["validate", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_rums"));

    assert_eq!(cli(&["run"], tmp.path()).status.code(), Some(2));
}

#[test]
fn presets_list_and_print_as_valid_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["presets"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8(out.stdout).unwrap();
    assert!(listing.contains("straightline-sweep") && listing.contains("circle-montecarlo"));

    let out = cli(&["presets", "circle-montecarlo"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let cfg = ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, circle_montecarlo());

    let out = cli(&["validate", "straightline-sweep"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(cli(&["presets", "nope"], tmp.path()).status.code(), Some(2));
}
