//! The five experiments behind the subcommands. Each returns a table plus
//! an optional verdict that decides the exit status once the table has
//! been written.

use std::sync::atomic::{AtomicUsize, Ordering};

use collisional::collision::{build_map, transition_probs_energy, CollisionMap, MapDiagnostics};
use collisional::dynamics::{
    coherence_estimate, ensemble_mean, liouvillian, sample_trajectory, steady_state, TrajectorySpec,
};
use collisional::linalg::ComplexMatrix;
use collisional::scattering::{amplitude_diagnostics, diagnostic_energy_grid};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::table::{Cell, Metadata, ResultTable};

/// Detailed-balance defect above which `map-check` exits with status 3.
pub const DETAILED_BALANCE_THRESHOLD: f64 = 1e-6;

/// Negative steady-state eigenvalues below `-NEGATIVE_EIGENVALUE_FLAG` are flagged.
pub const NEGATIVE_EIGENVALUE_FLAG: f64 = 1e-8;

pub const STEADY_COLUMNS: [&str; 11] = [
    "gamma",
    "delta",
    "dx",
    "rho00",
    "rho11",
    "re_rho01",
    "im_rho01",
    "abs_rho01",
    "residual",
    "trace_defect",
    "status",
];

pub const TRAJECTORY_COLUMNS: [&str; 8] =
    ["t", "gamma_t", "rho00", "rho11", "re_rho01", "im_rho01", "abs_rho01", "collisions_so_far"];

#[derive(Debug)]
pub struct Report {
    pub table: ResultTable,
    pub verdict: Option<CliError>,
}

impl Report {
    fn ok(table: ResultTable) -> Self {
        Self { table, verdict: None }
    }
}

/// Counts map builds so caching can be checked from the output.
#[derive(Debug, Default)]
pub struct MapBuilder {
    builds: AtomicUsize,
}

impl MapBuilder {
    pub fn build(&self, cfg: &ExperimentConfig, delta: f64, dx: f64) -> Result<CollisionMap<f64>> {
        self.builds.fetch_add(1, Ordering::Relaxed);
        let model = cfg.scattering_model(delta)?;
        let particle = cfg.particle(dx)?;
        Ok(build_map(&model, &particle, cfg.map.backend.into(), &cfg.map.quadrature())?)
    }

    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::Relaxed)
    }
}

fn diagnostics_json(d: &MapDiagnostics) -> Value {
    json!({
        "trace_defect": d.trace_defect,
        "population_trace_defect": d.population_trace_defect,
        "hermiticity_defect": d.hermiticity_defect,
        "choi_min_eigenvalue": d.choi_min_eigenvalue,
        "detailed_balance_defect": d.detailed_balance_defect,
        "convergence_delta": d.convergence_delta,
        "warnings": d.warnings,
    })
}

fn state_cells(m: &ComplexMatrix<f64>) -> [Cell; 5] {
    let c = m[(0, 1)];
    let p1 = if m.dim() > 1 { m[(1, 1)].re } else { f64::NAN };
    [Cell::Num(m[(0, 0)].re), Cell::Num(p1), Cell::Num(c.re), Cell::Num(c.im), Cell::Num(c.norm())]
}

fn pairs(deltas: &[f64], dxs: &[f64]) -> Vec<(f64, f64)> {
    deltas.iter().flat_map(|&d| dxs.iter().map(move |&x| (d, x))).collect()
}

/// Build diagnostics for each `(delta, dx)` of the sweep grid.
pub fn map_check(cfg: &ExperimentConfig) -> Result<Report> {
    let builder = MapBuilder::default();
    let d = cfg.dimension();
    let mut columns: Vec<String> = [
        "delta",
        "dx",
        "nodes",
        "trace_defect",
        "population_trace_defect",
        "hermiticity_defect",
        "choi_min_eigenvalue",
        "detailed_balance_defect",
        "convergence_delta",
        "unitarity_defect",
        "microrev_defect",
        "phase_microrev_defect",
        "energy_route_defect",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for j in 0..d {
        for jp in 0..d {
            columns.push(format!("p_{j}_to_{jp}"));
        }
    }
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = ResultTable::new(&col_refs, Metadata::new("map-check", cfg));

    let grid = pairs(&cfg.delta_values(), &cfg.dx_values());
    let rows: Vec<(Vec<Cell>, Value, Vec<String>)> = grid
        .par_iter()
        .map(|&(delta, dx)| -> Result<_> {
            let map = builder.build(cfg, delta, dx)?;
            let model = cfg.scattering_model(delta)?;
            let backend = cfg.map.backend.into();
            let energy_grid = diagnostic_energy_grid(&model, cfg.particle.beta, 100);
            let amps = amplitude_diagnostics(&model, backend, &energy_grid)?;
            let oracle = transition_probs_energy(&model, cfg.particle.beta, backend, &cfg.map.quadrature())?;
            let pops = map.population_block();
            let route = pops.max_abs_diff(&oracle);
            let diag = map.diagnostics();
            let mut row = vec![
                Cell::Num(delta),
                Cell::Num(dx),
                Cell::Int(cfg.map.nodes as u64),
                Cell::Num(diag.trace_defect),
                Cell::Num(diag.population_trace_defect),
                Cell::Num(diag.hermiticity_defect),
                Cell::Num(diag.choi_min_eigenvalue),
                Cell::Num(diag.detailed_balance_defect),
                Cell::Num(diag.convergence_delta.unwrap_or(f64::NAN)),
                Cell::Num(amps.max_unitarity_defect),
                Cell::Num(amps.max_microrev_defect),
                Cell::Num(amps.max_phase_microrev_defect),
                Cell::Num(route),
            ];
            for j in 0..d {
                for jp in 0..d {
                    row.push(Cell::Num(pops.get(j, jp)));
                }
            }
            let mut value = diagnostics_json(diag);
            value["delta"] = json!(delta);
            value["dx"] = json!(dx);
            Ok((row, value, diag.warnings.clone()))
        })
        .collect::<Result<_>>()?;

    let mut worst: f64 = 0.0;
    let mut maps = Vec::new();
    for (row, value, warnings) in rows {
        worst = worst.max(value["detailed_balance_defect"].as_f64().unwrap_or(f64::INFINITY));
        table.push(row);
        maps.push(value);
        table.metadata.warnings.extend(warnings);
    }
    table.metadata.map_builds = builder.builds();
    table.metadata.diagnostics = json!({ "maps": maps, "detailed_balance_threshold": DETAILED_BALANCE_THRESHOLD });
    let verdict = (worst > DETAILED_BALANCE_THRESHOLD).then(|| {
        CliError::Threshold(format!(
            "detailed_balance_defect {worst:e} exceeds {DETAILED_BALANCE_THRESHOLD:e}"
        ))
    });
    Ok(Report { table, verdict })
}

fn collision_map(cfg: &ExperimentConfig, builder: &MapBuilder, delta: f64, dx: f64) -> Result<CollisionMap<f64>> {
    let map = builder.build(cfg, delta, dx)?;
    Ok(if cfg.run.dephase { map.dephased() } else { map })
}

/// A single trajectory (with its collision events), or the ensemble mean
/// on the sample grid when `run.trajectories > 1`.
pub fn trajectory(cfg: &ExperimentConfig) -> Result<Report> {
    let builder = MapBuilder::default();
    let map = collision_map(cfg, &builder, cfg.model.delta, cfg.particle.dx)?;
    let model = cfg.scattering_model(cfg.model.delta)?;
    let rho0 = cfg.initial_state()?;
    let gamma = cfg.run.gamma;
    let spec = TrajectorySpec {
        gamma,
        t_max: cfg.run.t_max,
        sample_dt: cfg.run.sample_dt,
        seed: cfg.run.seed,
        stream: 0,
        renormalize: cfg.run.renormalize,
    };
    let mut table = ResultTable::new(&TRAJECTORY_COLUMNS, Metadata::new("trajectory", cfg));
    let mut diagnostics = json!({ "map": diagnostics_json(map.diagnostics()) });

    if cfg.run.trajectories == 1 {
        let rec = sample_trajectory(map.superop(), model.energies(), model.hbar(), &spec, &rho0)?;
        for ((t, s), n) in rec.times.iter().zip(&rec.states).zip(&rec.collisions_so_far) {
            let mut row = vec![Cell::Num(*t), Cell::Num(gamma * t)];
            row.extend(state_cells(s.matrix()));
            row.push(Cell::Int(*n as u64));
            table.push(row);
        }
        diagnostics["collisions"] = json!(rec.collision_times.len());
    } else {
        let times = spec.sample_grid();
        let stats = ensemble_mean(
            map.superop(),
            model.energies(),
            model.hbar(),
            gamma,
            cfg.run.seed,
            cfg.run.renormalize,
            &rho0,
            &times,
            cfg.run.trajectories,
        )?;
        let mut errors = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![Cell::Num(t), Cell::Num(gamma * t)];
            row.extend(state_cells(&stats.mean[i]));
            row.push(Cell::Num(stats.mean_collisions[i]));
            table.push(row);
            let se = &stats.std_error[i];
            errors.push(json!([se[(0, 0)].re, se[(1, 1)].re, se[(0, 1)].re, se[(0, 1)].im]));
        }
        diagnostics["trajectories"] = json!(stats.trajectories);
        diagnostics["std_error_columns"] = json!(["rho00", "rho11", "re_rho01", "im_rho01"]);
        diagnostics["std_error"] = Value::Array(errors);
    }
    table.metadata.warnings.extend(map.diagnostics().warnings.iter().cloned());
    table.metadata.map_builds = builder.builds();
    table.metadata.diagnostics = diagnostics;
    Ok(Report::ok(table))
}

struct PointResult {
    row: Vec<Cell>,
    failed: bool,
}

fn steady_point(cfg: &ExperimentConfig, map: &CollisionMap<f64>, delta: f64, dx: f64, gamma: f64) -> PointResult {
    let mut row = vec![Cell::Num(gamma), Cell::Num(delta), Cell::Num(dx)];
    let trace_defect = map.diagnostics().trace_defect;
    let solved = liouvillian(map.superop(), map.energies(), cfg.model.hbar, gamma)
        .and_then(|l| steady_state(&l, cfg.run.steady_tolerance));
    match solved {
        Ok(ss) => {
            row.extend(state_cells(ss.state.matrix()));
            row.push(Cell::Num(ss.residual));
            row.push(Cell::Num(trace_defect));
            let status = if ss.has_negative_eigenvalue(NEGATIVE_EIGENVALUE_FLAG) { "ok_negative_eigenvalue" } else { "ok" };
            row.push(Cell::Text(status.into()));
            PointResult { row, failed: false }
        }
        Err(e) => {
            row.extend((0..6).map(|_| Cell::Num(f64::NAN)));
            row.push(Cell::Num(trace_defect));
            row.push(Cell::Text(format!("error: {e}")));
            PointResult { row, failed: true }
        }
    }
}

fn steady_grid(cfg: &ExperimentConfig, command: &str, deltas: &[f64], dxs: &[f64], gammas: &[f64]) -> Result<Report> {
    let builder = MapBuilder::default();
    let grid = pairs(deltas, dxs);
    let maps: Vec<CollisionMap<f64>> = grid
        .par_iter()
        .map(|&(delta, dx)| collision_map(cfg, &builder, delta, dx))
        .collect::<Result<_>>()?;
    let points: Vec<(usize, f64)> =
        (0..grid.len()).flat_map(|m| gammas.iter().map(move |&g| (m, g))).collect();
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|&(m, gamma)| steady_point(cfg, &maps[m], grid[m].0, grid[m].1, gamma))
        .collect();

    let mut table = ResultTable::new(&STEADY_COLUMNS, Metadata::new(command, cfg));
    let failed = results.iter().filter(|r| r.failed).count();
    for r in results {
        table.push(r.row);
    }
    let mut map_diags = Vec::new();
    for (map, &(delta, dx)) in maps.iter().zip(&grid) {
        let mut v = diagnostics_json(map.diagnostics());
        v["delta"] = json!(delta);
        v["dx"] = json!(dx);
        map_diags.push(v);
        table.metadata.warnings.extend(map.diagnostics().warnings.iter().cloned());
    }
    table.metadata.map_builds = builder.builds();
    table.metadata.diagnostics = json!({ "maps": map_diags, "failed_points": failed });
    let total = table.rows.len();
    let verdict = (failed > 0).then_some(CliError::PointFailures { failed, total });
    Ok(Report { table, verdict })
}

/// Steady state at `run.gamma` (or every rate of `run.gamma_grid`).
pub fn steady(cfg: &ExperimentConfig) -> Result<Report> {
    let gammas = cfg.run.gamma_grid.clone().unwrap_or_else(|| vec![cfg.run.gamma]);
    steady_grid(cfg, "steady", &[cfg.model.delta], &[cfg.particle.dx], &gammas)
}

/// Steady states over the `(delta, dx, gamma)` grid, one map per `(delta, dx)`.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Report> {
    steady_grid(cfg, "sweep", &cfg.delta_values(), &cfg.dx_values(), &cfg.gamma_values())
}

/// Coherence estimate over the sweep grid, optionally next to the steady state.
pub fn estimate(cfg: &ExperimentConfig) -> Result<Report> {
    let gammas = cfg.gamma_values();
    if let Some(g) = gammas.iter().find(|&&g| g <= 0.0) {
        return Err(CliError::Config(format!("estimate needs positive gamma values, got {g}")));
    }
    let deltas = cfg.delta_values();
    let dxs = cfg.dx_values();
    let mut columns = vec!["gamma", "delta", "dx", "omega", "estimate"];
    if cfg.estimate.compare_exact {
        columns.extend(["exact_abs_rho01", "exact_status"]);
    }
    let mut table = ResultTable::new(&columns, Metadata::new("estimate", cfg));
    let exact = if cfg.estimate.compare_exact { Some(steady_grid(cfg, "estimate", &deltas, &dxs, &gammas)?) } else { None };

    let beta = cfg.particle.beta;
    let mass = cfg.model.mass;
    let mut slopes = Vec::new();
    let mut i = 0;
    for &delta in &deltas {
        let omega = cfg.omega(delta);
        slopes.push(json!({ "delta": delta, "omega": omega, "log_slope_dx2": -beta * mass * omega * omega / 2.0 }));
        for &dx in &dxs {
            for &gamma in &gammas {
                let est = coherence_estimate(gamma, omega, beta, mass, dx, cfg.estimate.s_const)?;
                let mut row = vec![Cell::Num(gamma), Cell::Num(delta), Cell::Num(dx), Cell::Num(omega), Cell::Num(est)];
                if let Some(rep) = &exact {
                    let src = &rep.table.rows[i];
                    row.push(src[7].clone());
                    row.push(src[10].clone());
                }
                table.push(row);
                i += 1;
            }
        }
    }
    let mut diagnostics = json!({ "s_const": cfg.estimate.s_const, "slopes": slopes });
    if let Some(rep) = exact {
        table.metadata.map_builds = rep.table.metadata.map_builds;
        table.metadata.warnings = rep.table.metadata.warnings.clone();
        diagnostics["trend_agreement"] = trend_agreement(&table, dxs.len(), gammas.len());
        diagnostics["exact"] = rep.table.metadata.diagnostics;
    }
    table.metadata.diagnostics = diagnostics;
    Ok(Report::ok(table))
}

/// Whether estimate and exact coherence move in the same direction between
/// neighbouring grid points along the `dx` and `gamma` axes. Rows are laid
/// out `delta -> dx -> gamma`.
fn trend_agreement(table: &ResultTable, n_dx: usize, n_gamma: usize) -> Value {
    let est = table.column("estimate").unwrap_or_default();
    let exact = table.column("exact_abs_rho01").unwrap_or_default();
    let (mut agree, mut total) = (0usize, 0usize);
    let mut compare = |a: usize, b: usize| {
        if exact[a].is_finite() && exact[b].is_finite() {
            total += 1;
            if (est[b] - est[a]).signum() == (exact[b] - exact[a]).signum() {
                agree += 1;
            }
        }
    };
    for i in 0..est.len() {
        let g = i % n_gamma;
        let x = (i / n_gamma) % n_dx;
        if g + 1 < n_gamma {
            compare(i, i + 1);
        }
        if x + 1 < n_dx {
            compare(i, i + n_gamma);
        }
    }
    json!({ "agreeing_pairs": agree, "compared_pairs": total })
}
