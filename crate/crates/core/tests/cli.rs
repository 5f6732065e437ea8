use std::path::PathBuf;
use std::process::{Command, Output};

fn lfia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfia"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lfia-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn alloc_prints_water_filled_bits() {
    let dir = scratch("alloc");
    let stats = dir.join("stats.csv");
    std::fs::write(&stats, "rx,tx,beta,l,m_r,m_t\n0,1,5,1,2,3\n0,2,5,0.1,2,3\n").unwrap();
    let out = lfia(&["alloc", stats.to_str().unwrap(), "--budget", "20"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("rx,tx,bits\n0,1,18\n0,2,2\n"), "{text}");
    assert!(text.contains("water level"));
}

#[test]
fn beta_of_identity_link() {
    let dir = scratch("beta");
    let link = dir.join("link.json");
    std::fs::write(
        &link,
        r#"{"phi_r": [[[1,0],[0,0]],[[0,0],[1,0]]], "phi_t": [[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    )
    .unwrap();
    let out = lfia(&["beta", link.to_str().unwrap(), "--samples", "2000"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 3.0).abs() < 0.1, "{text}");
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = scratch("simulate");
    let cfg = dir.join("cfg.json");
    let out_csv = dir.join("out.csv");
    std::fs::write(
        &cfg,
        r#"{"dims": {"k": 3, "nt": 2, "nr": 2, "d": 1}, "itp": "iid", "snr_db": [10, 20],
            "budgets": [12], "schemes": ["CVQ", "RB"], "trials": 4, "seed": 9}"#,
    )
    .unwrap();
    let out = lfia(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("CVQ,grid,10.0,12,,,4,0,"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["config"]["trials"], 4);
}

#[test]
fn correlation_sweep_needs_random_topology() {
    let dir = scratch("sweep");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"dims": {"k": 3, "nt": 2, "nr": 2, "d": 1}, "itp": "iid", "snr_db": [10],
            "budgets": [12], "trials": 2, "seed": 1, "sweep": {"eps_abs": [0.2]}}"#,
    )
    .unwrap();
    let out = lfia(&["sweep", cfg.to_str().unwrap(), "--axis", "correlation"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("random topology"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = scratch("invalid");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"dims": {"k": 3, "nt": 2, "nr": 2, "d": 1}, "itp": "iid", "snr_db": [],
            "budgets": [12], "trials": 2, "seed": 1}"#,
    )
    .unwrap();
    let out = lfia(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn table1_small_run() {
    let out = lfia(&["table1", "--trials", "20", "--seed", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("4,") && rows[2].starts_with("10,") && rows[3].starts_with("16,"));
}
