use std::process::Command as Process;

use collisional_cli::config::{AxisSpec, Scale};
use collisional_cli::{execute, Command, ExperimentConfig};

const GIBBS_00: f64 = 0.514_995_501_619_41;

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_collisional"))
}

fn trajectory_cmd() -> Command {
    Command::Trajectory { gamma: None, dephase: false, trajectories: None }
}

fn small_sweep() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.map.check_convergence = false;
    cfg.sweep.gamma = Some(AxisSpec { min: 0.1, max: 10.0, count: 5, scale: Scale::Log });
    cfg.sweep.dx = Some(AxisSpec { min: 1.0, max: 10.0, count: 3, scale: Scale::Linear });
    cfg
}

#[test]
fn metadata_config_reproduces_the_table() {
    let mut cfg = small_sweep();
    cfg.run.seed = 5;
    let first = execute(&Command::Sweep, &cfg).unwrap().table;
    let again_cfg = ExperimentConfig::from_json(&first.to_json()).unwrap();
    assert_eq!(again_cfg, cfg);
    let second = execute(&Command::Sweep, &again_cfg).unwrap().table;
    assert_eq!(first.to_csv().unwrap(), second.to_csv().unwrap());

    let mut traj = ExperimentConfig::default();
    traj.run.t_max = 5.0;
    traj.run.trajectories = 50;
    traj.run.seed = 77;
    let a = execute(&trajectory_cmd(), &traj).unwrap().table;
    let b = execute(&trajectory_cmd(), &ExperimentConfig::from_json(&a.to_json()).unwrap()).unwrap().table;
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.t_max = 5.0;
    cfg.run.trajectories = 200;
    cfg.threads = Some(1);
    let one = execute(&trajectory_cmd(), &cfg).unwrap().table.to_csv().unwrap();
    cfg.threads = Some(4);
    let four = execute(&trajectory_cmd(), &cfg).unwrap().table.to_csv().unwrap();
    assert_eq!(one, four);
    let mut sweep = small_sweep();
    sweep.threads = Some(1);
    let s1 = execute(&Command::Sweep, &sweep).unwrap().table.to_csv().unwrap();
    sweep.threads = Some(3);
    let s3 = execute(&Command::Sweep, &sweep).unwrap().table.to_csv().unwrap();
    assert_eq!(s1, s3);
}

#[test]
fn seeds_change_trajectories() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.t_max = 5.0;
    let a = execute(&trajectory_cmd(), &cfg).unwrap().table.to_csv().unwrap();
    cfg.run.seed = 1;
    let b = execute(&trajectory_cmd(), &cfg).unwrap().table.to_csv().unwrap();
    assert_ne!(a, b);
}

#[test]
fn sweep_builds_one_map_per_delta_dx_pair() {
    let mut cfg = ExperimentConfig::default();
    cfg.map.check_convergence = false;
    let rep = execute(&Command::Sweep, &cfg).unwrap();
    assert_eq!(rep.table.rows.len(), 40);
    assert_eq!(rep.table.metadata.map_builds, 1);
    let cfg = small_sweep();
    let rep = execute(&Command::Sweep, &cfg).unwrap();
    assert_eq!(rep.table.rows.len(), 15);
    assert_eq!(rep.table.metadata.map_builds, 3);
    let dx = rep.table.column("dx").unwrap();
    let gamma = rep.table.column("gamma").unwrap();
    assert_eq!(&dx[..5], &[1.0; 5]);
    assert_eq!(gamma[0], 0.1);
    assert_eq!(gamma[5], 0.1);
}

#[test]
fn single_point_sweep_matches_steady() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.gamma = 2.0;
    cfg.sweep.gamma = None;
    let sweep = execute(&Command::Sweep, &cfg).unwrap().table;
    let steady = execute(&Command::Steady { gamma: None }, &cfg).unwrap().table;
    assert_eq!(sweep.rows, steady.rows);
}

#[test]
fn gibbs_limit_and_rising_coherence_along_the_rate_axis() {
    let cfg = ExperimentConfig::default();
    let t = execute(&Command::Sweep, &cfg).unwrap().table;
    let rho00 = t.column("rho00").unwrap();
    let coh = t.column("abs_rho01").unwrap();
    assert!((rho00[0] - GIBBS_00).abs() <= 5e-3 * 0.1);
    assert!(coh.windows(2).all(|w| w[1] > w[0]));
    assert!(t.rows.iter().all(|r| r[10].render() == "ok"));
}

#[test]
fn fig3_right_grid_decreases_along_width() {
    let mut cfg = ExperimentConfig::default();
    cfg.model.delta = 1.2;
    cfg.map.check_convergence = false;
    cfg.sweep.gamma = Some(AxisSpec { min: 1.0, max: 10.0, count: 3, scale: Scale::Linear });
    cfg.sweep.dx = Some(AxisSpec { min: 1.0, max: 20.0, count: 5, scale: Scale::Linear });
    let t = execute(&Command::Sweep, &cfg).unwrap().table;
    let coh = t.column("abs_rho01").unwrap();
    for g in 0..3 {
        let along: Vec<f64> = (0..5).map(|x| coh[x * 3 + g]).collect();
        assert!(along.windows(2).all(|w| w[1] <= w[0]), "{along:?}");
    }
}

#[test]
fn free_barrier_map_check() {
    let mut cfg = ExperimentConfig::default();
    cfg.model.lambda = 0.0;
    let rep = execute(&Command::MapCheck, &cfg).unwrap();
    assert!(rep.verdict.is_none());
    let t = rep.table;
    for col in ["trace_defect", "hermiticity_defect", "detailed_balance_defect", "unitarity_defect", "microrev_defect", "energy_route_defect"] {
        assert!(t.column(col).unwrap()[0].abs() <= 1e-12, "{col}");
    }
    for (col, want) in [("p_0_to_0", 1.0), ("p_0_to_1", 0.0), ("p_1_to_0", 0.0), ("p_1_to_1", 1.0)] {
        assert!((t.column(col).unwrap()[0] - want).abs() <= 1e-12);
    }
}

#[test]
fn convergence_column_shrinks_with_nodes() {
    let mut cfg = ExperimentConfig::default();
    cfg.map.nodes = 16;
    let coarse = execute(&Command::MapCheck, &cfg).unwrap().table.column("convergence_delta").unwrap()[0];
    cfg.map.nodes = 400;
    let fine = execute(&Command::MapCheck, &cfg).unwrap().table.column("convergence_delta").unwrap()[0];
    assert!(fine < coarse, "{fine} vs {coarse}");
    assert!(fine <= 1e-9);
}

#[test]
fn trajectory_examples() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.gamma = 0.0;
    cfg.run.t_max = 5.0;
    let t = execute(&trajectory_cmd(), &cfg).unwrap().table;
    assert!(t.column("rho00").unwrap().iter().all(|&x| x == 0.0));
    assert!(t.column("collisions_so_far").unwrap().iter().all(|&x| x == 0.0));

    let mut cfg = ExperimentConfig::default();
    cfg.run.gamma = 10.0;
    cfg.run.dephase = true;
    let t = execute(&trajectory_cmd(), &cfg).unwrap().table;
    let rho00 = t.column("rho00").unwrap();
    assert!((rho00.last().unwrap() - GIBBS_00).abs() <= 1e-3);
    let times = t.column("t").unwrap();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let gt = t.column("gamma_t").unwrap();
    assert_eq!(gt.last().copied(), Some(500.0));
}

#[test]
fn estimate_values() {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.gamma = None;
    cfg.sweep.dx = Some(AxisSpec { min: 1.0, max: 10.0, count: 2, scale: Scale::Linear });
    let t = execute(&Command::Estimate { compare_exact: false }, &cfg).unwrap().table;
    let est = t.column("estimate").unwrap();
    assert!((est[0] - 8.3183e-4).abs() <= 5e-9);
    assert!((est[1] / est[0] - 0.836_775_051_741_8).abs() <= 1e-12);
    assert_eq!(t.metadata.map_builds, 0);
}

#[test]
fn binary_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("steady.csv");
    let status = bin().args(["steady", "--gamma", "0.5", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("gamma,delta,dx,rho00,rho11,re_rho01,im_rho01,abs_rho01,residual,trace_defect,status\n"));
    assert!(!csv.contains('\r'));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["map_builds"], 1);
    assert_eq!(json["metadata"]["config"]["run"]["gamma"], 0.5);

    let replay = dir.path().join("replay.csv");
    let status = bin()
        .args(["steady", "--config"])
        .arg(out.with_extension("json"))
        .arg("--out")
        .arg(&replay)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(std::fs::read(&replay).unwrap(), csv.as_bytes());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"particle": {"dx": 0.01}}"#).unwrap();
    let out = bin().args(["sweep", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4*pi*dx*sqrt(mass/beta) >= hbar"));

    std::fs::write(&bad, r#"{"run": {"gama": 1.0}}"#).unwrap();
    let out = bin().args(["steady", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama"));

    let out = bin().args(["steady", "--gamma", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("error: precondition violated"));

    let out = bin().args(["map-check", "--backend", "exact"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
