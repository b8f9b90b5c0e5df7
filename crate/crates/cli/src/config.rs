//! Experiment configuration: one JSON document, every field optional, with
//! defaults taken from the qubit example (`delta = 0.6`, `beta = m = 0.1`,
//! `lambda = L = hbar = 1`, `dx = 1`, `x0 = -10`).

use std::f64::consts::PI;
use std::path::Path;

use clap::ValueEnum;
use collisional::collision::{ParticleDensity, QuadratureSpec};
use collisional::linalg::{ComplexMatrix, DensityMatrix, HermitianOperator};
use collisional::scattering::{Backend, ScatteringModel};
use collisional::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Approx,
    Exact,
}

impl From<BackendChoice> for Backend {
    fn from(b: BackendChoice) -> Self {
        match b {
            BackendChoice::Approx => Backend::Approximate,
            BackendChoice::Exact => Backend::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub delta: f64,
    pub lambda: f64,
    pub barrier_length: f64,
    pub mass: f64,
    pub hbar: f64,
    pub dimension: usize,
    /// Custom ascending level energies; replaces `(-delta/2, delta/2)`.
    pub energies: Option<Vec<f64>>,
    /// Custom coupling as rows of `[re, im]` pairs in the energy eigenbasis;
    /// replaces `lambda (sigma_x + sigma_y)`.
    pub coupling: Option<Vec<Vec<[f64; 2]>>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            delta: 0.6,
            lambda: 1.0,
            barrier_length: 1.0,
            mass: 0.1,
            hbar: 1.0,
            dimension: 2,
            energies: None,
            coupling: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleConfig {
    pub beta: f64,
    pub dx: f64,
    pub x0: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self { beta: 0.1, dx: 1.0, x0: -10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub backend: BackendChoice,
    pub nodes: usize,
    pub p_cut_tolerance: f64,
    pub check_convergence: bool,
}

impl Default for MapConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            backend: BackendChoice::Approx,
            nodes: q.nodes,
            p_cut_tolerance: q.p_cut_tolerance,
            check_convergence: q.check_convergence,
        }
    }
}

impl MapConfig {
    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            nodes: self.nodes,
            p_cut_tolerance: self.p_cut_tolerance,
            check_convergence: self.check_convergence,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    /// Rates used by `steady` instead of the single `gamma`.
    pub gamma_grid: Option<Vec<f64>>,
    pub t_max: f64,
    pub sample_dt: f64,
    pub seed: u64,
    /// 1 writes the single trajectory with its collision events; more
    /// writes the ensemble mean on the sample grid.
    pub trajectories: usize,
    pub renormalize: bool,
    /// Apply full dephasing after every collision.
    pub dephase: bool,
    /// Initial diagonal state; defaults to the top level fully populated.
    pub initial_populations: Option<Vec<f64>>,
    pub steady_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 5.0,
            gamma_grid: None,
            t_max: 50.0,
            sample_dt: 0.1,
            seed: 0,
            trajectories: 1,
            renormalize: false,
            dephase: false,
            initial_populations: None,
            steady_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                if i + 1 == self.count {
                    return self.max;
                }
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * f,
                    Scale::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma: Option<AxisSpec>,
    pub delta: Option<AxisSpec>,
    pub dx: Option<AxisSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: Some(AxisSpec { min: 0.01, max: 10.0, count: 40, scale: Scale::Log }),
            delta: None,
            dx: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub s_const: f64,
    /// Also solve the steady state on the same grid.
    pub compare_exact: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { s_const: 0.01, compare_exact: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub particle: ParticleConfig,
    pub map: MapConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
    pub estimate: EstimateConfig,
    pub threads: Option<usize>,
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(format!("{path} must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(format!("{path} must be non-negative and finite, got {v}")))
    }
}

fn wigner(path: &str, dx: f64, mass: f64, beta: f64, hbar: f64) -> Result<()> {
    let lhs = 4.0 * PI * dx * (mass / beta).sqrt();
    if lhs >= hbar {
        Ok(())
    } else {
        Err(err(format!(
            "{path} = {dx} violates the Wigner validity condition 4*pi*dx*sqrt(mass/beta) >= hbar ({lhs} < {hbar})"
        )))
    }
}

impl ExperimentConfig {
    /// Parse a config document. A JSON output mirror is also accepted: its
    /// `metadata.config` block is used.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| err(format!("malformed JSON: {e}")))?;
        let inner = match value.get("metadata").and_then(|m| m.get("config")) {
            Some(c) => c.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| err(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn is_qubit(&self) -> bool {
        self.model.energies.is_none() && self.model.coupling.is_none()
    }

    pub fn dimension(&self) -> usize {
        match &self.model.energies {
            Some(e) => e.len(),
            None => self.model.dimension,
        }
    }

    /// Field-by-field validation; the first violation is reported with its path.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        non_negative("model.lambda", m.lambda)?;
        positive("model.barrier_length", m.barrier_length)?;
        positive("model.mass", m.mass)?;
        positive("model.hbar", m.hbar)?;
        if m.dimension == 0 || m.dimension > 16 {
            return Err(err(format!("model.dimension must lie in 1..=16, got {}", m.dimension)));
        }
        match &m.energies {
            None => {
                positive("model.delta", m.delta)?;
                if m.dimension != 2 {
                    return Err(err(format!(
                        "model.dimension = {} needs model.energies (the built-in model is a qubit)",
                        m.dimension
                    )));
                }
            }
            Some(e) => {
                if e.len() != m.dimension {
                    return Err(err(format!(
                        "model.energies has {} entries but model.dimension is {}",
                        e.len(),
                        m.dimension
                    )));
                }
                if e.iter().any(|x| !x.is_finite()) || e.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(err("model.energies must be finite and strictly ascending"));
                }
            }
        }
        if m.coupling.is_some() && m.energies.is_none() {
            return Err(err("model.coupling requires model.energies"));
        }
        if let Some(c) = &m.coupling {
            let d = self.dimension();
            if c.len() != d || c.iter().any(|r| r.len() != d) {
                return Err(err(format!("model.coupling must be a {d}x{d} array of [re, im] pairs")));
            }
            if c.iter().flatten().flatten().any(|x| !x.is_finite()) {
                return Err(err("model.coupling entries must be finite"));
            }
        }

        let p = &self.particle;
        positive("particle.beta", p.beta)?;
        positive("particle.dx", p.dx)?;
        if !p.x0.is_finite() {
            return Err(err(format!("particle.x0 must be finite, got {}", p.x0)));
        }
        wigner("particle.dx", p.dx, m.mass, p.beta, m.hbar)?;

        if self.map.nodes < 16 {
            return Err(err(format!("map.nodes must be at least 16, got {}", self.map.nodes)));
        }
        if !(self.map.p_cut_tolerance > 0.0 && self.map.p_cut_tolerance < 1.0) {
            return Err(err(format!("map.p_cut_tolerance must lie in (0, 1), got {}", self.map.p_cut_tolerance)));
        }

        let r = &self.run;
        non_negative("run.gamma", r.gamma)?;
        if let Some(g) = &r.gamma_grid {
            if g.is_empty() {
                return Err(err("run.gamma_grid must not be empty"));
            }
            for (i, &x) in g.iter().enumerate() {
                non_negative(&format!("run.gamma_grid[{i}]"), x)?;
            }
        }
        positive("run.t_max", r.t_max)?;
        positive("run.sample_dt", r.sample_dt)?;
        if r.sample_dt > r.t_max {
            return Err(err(format!("run.sample_dt = {} exceeds run.t_max = {}", r.sample_dt, r.t_max)));
        }
        if r.trajectories == 0 {
            return Err(err("run.trajectories must be at least 1"));
        }
        positive("run.steady_tolerance", r.steady_tolerance)?;
        if let Some(pops) = &r.initial_populations {
            if pops.len() != self.dimension() {
                return Err(err(format!(
                    "run.initial_populations has {} entries, expected {}",
                    pops.len(),
                    self.dimension()
                )));
            }
            if pops.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(err("run.initial_populations must be non-negative"));
            }
            let total: f64 = pops.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(err(format!("run.initial_populations must sum to 1, got {total}")));
            }
        }

        for (name, axis) in [("gamma", &self.sweep.gamma), ("delta", &self.sweep.delta), ("dx", &self.sweep.dx)] {
            let Some(a) = axis else { continue };
            let path = format!("sweep.{name}");
            if a.count == 0 {
                return Err(err(format!("{path}.count must be at least 1")));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
                return Err(err(format!("{path} needs finite min <= max, got [{}, {}]", a.min, a.max)));
            }
            if a.scale == Scale::Log && a.min <= 0.0 {
                return Err(err(format!("{path}.min must be positive on a log scale, got {}", a.min)));
            }
            match name {
                "gamma" => non_negative(&format!("{path}.min"), a.min)?,
                "delta" => {
                    positive(&format!("{path}.min"), a.min)?;
                    if !self.is_qubit() {
                        return Err(err("sweep.delta requires the built-in qubit model"));
                    }
                }
                _ => {
                    positive(&format!("{path}.min"), a.min)?;
                    wigner(&format!("{path}.min"), a.min, m.mass, p.beta, m.hbar)?;
                }
            }
        }
        positive("estimate.s_const", self.estimate.s_const)?;
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(err("threads must be at least 1"));
            }
        }
        Ok(())
    }

    /// Scattering model with the gap replaced by `delta` (qubit model only).
    pub fn scattering_model(&self, delta: f64) -> Result<ScatteringModel<f64>> {
        let m = &self.model;
        let model = match (&m.energies, &m.coupling) {
            (None, _) => ScatteringModel::qubit(delta, m.lambda, m.barrier_length, m.mass, m.hbar)?,
            (Some(e), coupling) => {
                let d = e.len();
                let v = match coupling {
                    Some(c) => {
                        let mat = ComplexMatrix::from_fn(d, |r, k| Complex64::new(c[r][k][0], c[r][k][1]));
                        HermitianOperator::new(mat).map_err(|e| err(format!("model.coupling: {e}")))?
                    }
                    None => HermitianOperator::zeros(d),
                };
                ScatteringModel::new(e.clone(), v, m.barrier_length, m.mass, m.hbar)?
            }
        };
        Ok(model)
    }

    pub fn particle(&self, dx: f64) -> Result<ParticleDensity<f64>> {
        Ok(ParticleDensity::new(self.particle.beta, self.model.mass, dx, self.particle.x0, self.model.hbar)?)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix<f64>> {
        let d = self.dimension();
        let pops = match &self.run.initial_populations {
            Some(p) => p.clone(),
            None => (0..d).map(|j| if j + 1 == d { 1.0 } else { 0.0 }).collect(),
        };
        Ok(DensityMatrix::from_populations(&pops)?)
    }

    /// Bohr frequency between the two lowest levels.
    pub fn omega(&self, delta: f64) -> f64 {
        match &self.model.energies {
            Some(e) if e.len() >= 2 => (e[1] - e[0]) / self.model.hbar,
            _ => delta / self.model.hbar,
        }
    }

    pub fn delta_values(&self) -> Vec<f64> {
        match &self.sweep.delta {
            Some(a) => a.values(),
            None => vec![self.model.delta],
        }
    }

    pub fn dx_values(&self) -> Vec<f64> {
        match &self.sweep.dx {
            Some(a) => a.values(),
            None => vec![self.particle.dx],
        }
    }

    pub fn gamma_values(&self) -> Vec<f64> {
        match &self.sweep.gamma {
            Some(a) => a.values(),
            None => vec![self.run.gamma],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentConfig::from_json(r#"{"particle": {"betta": 1.0}}"#).unwrap_err();
        assert!(e.to_string().contains("betta"));
    }

    #[test]
    fn messages_name_the_field() {
        let mut c = ExperimentConfig::default();
        c.particle.beta = -1.0;
        assert!(c.validate().unwrap_err().to_string().contains("particle.beta"));
        let mut c = ExperimentConfig::default();
        c.particle.dx = 0.01;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("particle.dx") && msg.contains("4*pi*dx*sqrt(mass/beta) >= hbar"));
        let mut c = ExperimentConfig::default();
        c.sweep.gamma = Some(AxisSpec { min: 0.0, max: 1.0, count: 3, scale: Scale::Log });
        assert!(c.validate().unwrap_err().to_string().contains("sweep.gamma.min"));
    }

    #[test]
    fn axis_values() {
        let a = AxisSpec { min: 0.01, max: 10.0, count: 4, scale: Scale::Log };
        let v = a.values();
        assert_eq!(v[0], 0.01);
        assert_eq!(v[3], 10.0);
        assert!((v[1] - 0.1).abs() < 1e-15);
        let l = AxisSpec { min: 1.0, max: 2.0, count: 3, scale: Scale::Linear };
        assert_eq!(l.values(), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn metadata_document_is_accepted() {
        let mut c = ExperimentConfig::default();
        c.run.seed = 17;
        let doc = serde_json::json!({"metadata": {"config": c.to_json()}, "rows": []});
        assert_eq!(ExperimentConfig::from_json(&doc.to_string()).unwrap(), c);
    }

    #[test]
    fn custom_levels() {
        let text = r#"{"model": {"dimension": 3, "energies": [-1.0, 0.0, 0.5],
            "coupling": [[[0,0],[0.2,0],[0,0]],[[0.2,0],[0,0],[0.1,0.1]],[[0,0],[0.1,-0.1],[0,0]]]}}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        c.validate().unwrap();
        let m = c.scattering_model(0.0).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(c.initial_state().unwrap().populations(), vec![0.0, 0.0, 1.0]);
    }
}
