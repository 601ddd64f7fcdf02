use std::process::Command;

fn qphase() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qphase"))
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = qphase().args(["solve", "--config", "/nonexistent/run.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/run.json"), "{stderr}");
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"model":"annni","n_sites":6,"chi":0,
            "training":{"kind":"line","start":[0.1,0.1],"end":[0.9,1.9],"points":3},
            "test_grid":{"region":{"k":[0,1],"h":[0,2]},"counts":[2,2]},
            "sectors":{"states_per_point":1,"seed":1}}"#,
    )
    .unwrap();
    let out = qphase().args(["train", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("chi"));
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = qphase().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_diagram_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"model":"annni","n_sites":6,"chi":8,
                "training":{{"kind":"grid","region":{{"k":[0,1],"h":[0,2]}},"counts":[3,2],"centered":true}},
                "test_grid":{{"region":{{"k":[0,1],"h":[0,2]}},"counts":[3,3]}},
                "sectors":{{"states_per_point":2,"degeneracy_window":0.05,"seed":4}},
                "cache_dir":{:?}}}"#,
            dir.path().join("cache")
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = qphase()
        .args(["phase-diagram", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["phase_grid.csv", "model.txt", "support.csv", "training_layout.csv", "manifest.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
    let grid = std::fs::read_to_string(out_dir.join("phase_grid.csv")).unwrap();
    let cache = manifest["cache"].as_array().unwrap();
    for line in grid.lines().skip(1) {
        let mut cols = line.split(',');
        let (k, h): (f64, f64) = (cols.next().unwrap().parse().unwrap(), cols.next().unwrap().parse().unwrap());
        let entry = cache
            .iter()
            .find(|e| e["role"] == "test" && e["k"].as_f64() == Some(k) && e["h"].as_f64() == Some(h))
            .unwrap_or_else(|| panic!("no cache record for ({k}, {h})"));
        let file = dir.path().join("cache").join(format!("{}.mps", entry["hash"].as_str().unwrap()));
        assert!(file.exists(), "{}", file.display());
    }

    let pred_dir = dir.path().join("pred");
    let out = qphase()
        .args(["predict", "--config"])
        .arg(&cfg)
        .arg("--model")
        .arg(out_dir.join("model.txt"))
        .arg("--out")
        .arg(&pred_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(out_dir.join("phase_grid.csv")).unwrap(),
        std::fs::read(pred_dir.join("phase_grid.csv")).unwrap()
    );
}
