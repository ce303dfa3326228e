use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tubelab_cli::config::{emit, parse, AeConfig, CompareConfig, ContinueConfig, FlowConfig, MeshConfig, StabilityConfig};

fn tubelab(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tubelab"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(text) = config {
        let path = dir.join(format!("{}.json", out.file_name().unwrap().to_string_lossy()));
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn column(header: &str, row: &str, name: &str) -> String {
    let i = header.split(',').position(|h| h == name).unwrap();
    row.split(',').nth(i).unwrap().to_string()
}

#[test]
fn stability_reports_windows_and_marks_poles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("stab");
    let cfg = r#"{ "l": 10.0, "c0": [0.0, 0.4, 0.5, 0.6, 0.75], "k_max": 2.0, "k_samples": 40 }"#;
    let stdout = ok(&tubelab(&["stability"], Some(cfg), &out));
    assert!(stdout.contains("c0 = 0  L = 10  window (-0.954911, 1.197392)"), "{stdout}");
    assert!(stdout.contains("c0 = 0.75  L = 10  no stable window"), "{stdout}");

    let curves = read(&out, "neutral_curves.csv");
    let header = curves.lines().next().unwrap();
    let poles: Vec<&str> = curves.lines().skip(1).filter(|r| column(header, r, "pole") == "1").collect();
    // One marked row per c0 except 1/2, where the pole cancels.
    assert_eq!(poles.len(), 4);
    for r in &poles {
        assert_eq!(column(header, r, "pearl_lambda2"), "");
        assert_eq!(column(header, r, "kappa").parse::<f64>().unwrap(), 1.0);
        assert!(column(header, r, "c0").parse::<f64>().unwrap() != 0.5);
    }
    // k = 1 lies on this sample grid, so the pole rows replace samples.
    assert_eq!(curves.lines().count(), 1 + 5 * 40);

    let window = read(&out, "window.csv");
    let wh = window.lines().next().unwrap();
    let last = window.lines().last().unwrap();
    assert_eq!(column(wh, last, "stable_window"), "false");
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    assert_eq!(summary[4]["no_stable_window"], true);
    assert_eq!(summary[0]["no_stable_window"], false);
}

#[test]
fn ae_table_row_for_positive_spontaneous_curvature() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ae");
    let stdout = ok(&tubelab(&["ae"], Some(r#"{ "l": 10.0, "c0": [0.0, 0.48] }"#), &out));
    assert!(stdout.contains("coiling_stable"));
    let table = read(&out, "coil_buckle.csv");
    let header = table.lines().next().unwrap();
    let row = table.lines().nth(2).unwrap();
    let get = |n: &str| column(header, row, n).parse::<f64>().unwrap();
    assert!((get("a") - 0.3948).abs() < 1e-3);
    assert!((get("b1") + 0.0827).abs() < 1e-3);
    assert!(get("b2") > 0.5);
    assert_eq!(column(header, row, "classification"), "buckling_stable");
    assert_eq!(read(&out, "pearling.csv").lines().count(), 3);
    assert_eq!(read(&out, "wrinkling.csv").lines().count(), 3);
}

#[test]
fn invalid_configs_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tubelab(&["stability"], Some(r#"{ "l": -1.0 }"#), &tmp.path().join("a"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("L must be positive"));
    let o = tubelab(&["ae"], Some(r#"{ "lenght": 10.0 }"#), &tmp.path().join("b"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
    let o = tubelab(&["mesh"], Some(r#"{ "mesh": { "nodes": 600, "grid": [10, 10] } }"#), &tmp.path().join("c"));
    assert!(!o.status.success());
    let missing = Command::new(env!("CARGO_BIN_EXE_tubelab")).args(["ae", "--config", "/nonexistent.json"]).output().unwrap();
    assert!(!missing.status.success());
}

#[test]
fn unperturbed_flow_gives_a_one_row_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flow");
    let cfg = r#"{ "mesh": { "grid": [40, 24] }, "start": { "type": "cylinder", "lambda2": 0.3 } }"#;
    let stdout = ok(&tubelab(&["flow"], Some(cfg), &out));
    assert!(stdout.starts_with("converged after 1 rows"), "{stdout}");
    assert_eq!(read(&out, "trajectory.csv").lines().count(), 2);
    for f in ["start.off", "start.vtk", "final.off", "final.pairs.csv", "summary.json", "config.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

fn run_twice(args: &[&str], cfg: &str, files: &[&str]) {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&tubelab(args, Some(cfg), &a));
    ok(&tubelab(args, Some(cfg), &b));
    for f in files {
        assert_eq!(read(&a, f), read(&b, f), "{f} differs between identical runs");
    }
}

#[test]
fn reruns_are_byte_identical() {
    run_twice(&["stability"], r#"{ "c0": [0.0, 0.48, 0.75] }"#, &["neutral_curves.csv", "window.csv", "summary.json"]);
    run_twice(&["ae"], r#"{ "c0": [-1.0, 0.0, 0.48] }"#, &["pearling.csv", "wrinkling.csv", "coil_buckle.csv"]);
    run_twice(&["mesh", "--seed", "7"], r#"{ "mesh": { "nodes": 600 }, "jitter": 1e-3 }"#, &["mesh.off", "mesh.vtk", "geometry.json"]);
    let flow = r#"{ "mesh": { "grid": [40, 24] },
                    "perturbation": { "type": "bump", "delta": -0.05, "xi": 1.0 },
                    "controls": { "max_steps": 3 } }"#;
    run_twice(&["flow"], flow, &["trajectory.csv", "final.off"]);
    let cont = r#"{ "mesh": { "nodes": 600 }, "lambda2_start": 0.0, "direction": 1.0, "steps": 2, "ds": 0.1 }"#;
    run_twice(&["continue"], cont, &["trivial.csv", "bifurcations.json"]);
}

#[test]
fn the_seed_drives_mesh_jitter() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{ "mesh": { "nodes": 600 }, "jitter": 1e-3 }"#;
    ok(&tubelab(&["mesh", "--seed", "1"], Some(cfg), &tmp.path().join("a")));
    ok(&tubelab(&["mesh", "--seed", "2"], Some(cfg), &tmp.path().join("b")));
    assert_ne!(read(&tmp.path().join("a"), "mesh.off"), read(&tmp.path().join("b"), "mesh.off"));
}

fn round_trip<T>(text: &str) -> T
where
    T: serde::de::DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug,
{
    let cfg: T = parse(text).unwrap();
    let again: T = parse(&emit(&cfg)).unwrap();
    assert_eq!(cfg, again);
    cfg
}

#[test]
fn configs_round_trip() {
    round_trip::<StabilityConfig>(&emit(&StabilityConfig::default()));
    round_trip::<AeConfig>(&emit(&AeConfig::default()));
    round_trip::<MeshConfig>(&emit(&MeshConfig::default()));
    round_trip::<FlowConfig>(&emit(&FlowConfig::default()));
    round_trip::<ContinueConfig>(&emit(&ContinueConfig::default()));
    round_trip::<CompareConfig>(&emit(&CompareConfig::default()));
}

#[test]
fn scenario_library_parses_and_validates() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).unwrap();
        let kind = name.trim_end_matches(".json").rsplit('.').next().unwrap().to_string();
        match kind.split('_').next().unwrap() {
            "stability" => round_trip::<StabilityConfig>(&text).validate().unwrap(),
            "ae" => round_trip::<AeConfig>(&text).validate().unwrap(),
            "continue" => round_trip::<ContinueConfig>(&text).validate().unwrap(),
            "compare" => round_trip::<CompareConfig>(&text).validate().unwrap(),
            _ if name.starts_with("flow_") => round_trip::<FlowConfig>(&text).validate().unwrap(),
            _ => panic!("unrecognized config {name}"),
        }
        seen += 1;
    }
    assert!(seen >= 16);
}
