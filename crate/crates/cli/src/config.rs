//! Sectioned TOML run configuration.

use serde::{Deserialize, Serialize};
use subcav_core::contact::{BoundaryCondition, SolverParams};
use subcav_core::geometry::BedProfile;
use subcav_core::rheology::{GlenRheology, DEFAULT_REGULARIZATION};
use subcav_core::scenarios::{ScenarioConfig, UnsteadyParams};
use toml::Spanned;

/// Parsed configuration file, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub bed: BedSection,
    pub rheology: RheologySection,
    #[serde(default)]
    pub mesh: MeshSection,
    pub bc: BcSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub unsteady: Option<UnsteadySection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BedShape {
    Sinusoid,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BedSection {
    #[serde(default = "default_shape")]
    pub shape: BedShape,
    /// Amplitude of `r sin(π/2 + 2πx)`; required for the sinusoid.
    pub r: Option<Spanned<f64>>,
}

fn default_shape() -> BedShape {
    BedShape::Sinusoid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RheologySection {
    pub n: f64,
    #[serde(rename = "A", default = "default_rate_factor")]
    pub a: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_rate_factor() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    DEFAULT_REGULARIZATION
}

/// A single value or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Roof edges; a list runs one steady case per entry.
    #[serde(default = "default_n_e")]
    pub n_e: OneOrMany<usize>,
    #[serde(rename = "H", default = "default_height")]
    pub height: f64,
    pub layers: Option<usize>,
    pub grading: Option<f64>,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self {
            n_e: default_n_e(),
            height: default_height(),
            layers: None,
            grading: None,
        }
    }
}

fn default_n_e() -> OneOrMany<usize> {
    OneOrMany::One(16)
}

fn default_height() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub mode: Spanned<BcMode>,
    /// Effective pressure.
    #[serde(rename = "N")]
    pub n_eff: f64,
    pub u_i: Option<f64>,
    pub tau_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_threshold")]
    pub steady_threshold: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_t_end(),
            steady_threshold: default_threshold(),
            snapshot_every: 0,
        }
    }
}

fn default_dt() -> f64 {
    0.01
}

fn default_t_end() -> f64 {
    50.0
}

fn default_threshold() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_true")]
    pub continuation: bool,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            c: default_c(),
            newton_tol: default_tol(),
            max_iter: default_max_iter(),
            continuation: true,
            max_halvings: default_halvings(),
        }
    }
}

fn default_c() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    50
}

fn default_true() -> bool {
    true
}

fn default_halvings() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Write the per-step series of steady runs.
    #[serde(default = "default_true")]
    pub series: bool,
    /// Write roof profiles.
    #[serde(default = "default_true")]
    pub roof: bool,
    /// Write the multiplier profile of steady runs.
    #[serde(default = "default_true")]
    pub multiplier: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            series: true,
            roof: true,
            multiplier: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Effective pressures, visited in decreasing order.
    #[serde(rename = "N")]
    pub n_eff: Vec<f64>,
    /// Flow exponents, one independent chain each; defaults to `rheology.n`.
    pub exponents: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnsteadySection {
    /// Mean effective pressure; defaults to `bc.N`.
    #[serde(rename = "N0")]
    pub n0: Option<f64>,
    pub amplitude: f64,
    pub frequency: f64,
    pub t_end: f64,
}

/// Configuration error with a human-readable location.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

impl ConfigFile {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(src).map_err(|e| ConfigError(e.to_string()))?;
        file.check(src)?;
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&src)
    }

    fn check(&self, src: &str) -> Result<(), ConfigError> {
        let mode_line = line_of(src, self.bc.mode.span().start);
        match *self.bc.mode.get_ref() {
            BcMode::Dirichlet if self.bc.u_i.is_none() => {
                return Err(ConfigError(format!(
                    "line {mode_line}: bc.mode = \"dirichlet\" requires bc.u_i"
                )));
            }
            BcMode::Neumann if self.bc.tau_b.is_none() => {
                return Err(ConfigError(format!(
                    "line {mode_line}: bc.mode = \"neumann\" requires bc.tau_b"
                )));
            }
            _ => {}
        }
        if self.bed.shape == BedShape::Sinusoid && self.bed.r.is_none() {
            return Err(ConfigError("[bed]: shape = \"sinusoid\" requires r".into()));
        }
        if self.mesh.n_e.to_vec().is_empty() {
            return Err(ConfigError("mesh.n_e: empty list".into()));
        }
        for n_e in self.mesh.n_e.to_vec() {
            self.scenario(n_e)
                .validate()
                .map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(())
    }

    pub fn bed(&self) -> BedProfile {
        match self.bed.shape {
            BedShape::Sinusoid => BedProfile::sinusoid(*self.bed.r.as_ref().expect("checked").get_ref()),
            BedShape::Flat => BedProfile::flat(),
        }
    }

    pub fn bc(&self) -> BoundaryCondition {
        match *self.bc.mode.get_ref() {
            BcMode::Dirichlet => BoundaryCondition::Dirichlet {
                u_i: self.bc.u_i.expect("checked"),
            },
            BcMode::Neumann => BoundaryCondition::Neumann {
                tau_b: self.bc.tau_b.expect("checked"),
            },
        }
    }

    /// Scenario for one mesh size.
    pub fn scenario(&self, n_e: usize) -> ScenarioConfig {
        ScenarioConfig {
            bed: self.bed(),
            rheology: GlenRheology {
                rate_factor: self.rheology.a,
                exponent: self.rheology.n,
                regularization: self.rheology.delta,
            },
            height: self.mesh.height,
            n_e,
            n_layers: self.mesh.layers,
            grading: self.mesh.grading,
            effective_pressure: self.bc.n_eff,
            bc: self.bc(),
            dt: self.time.dt,
            t_end: self.time.t_end,
            steady_threshold: self.time.steady_threshold,
            solver: SolverParams {
                c: self.solver.c,
                newton_tol: self.solver.newton_tol,
                max_iter: self.solver.max_iter,
                continuation: self.solver.continuation,
                max_halvings: self.solver.max_halvings,
            },
            snapshot_every: self.time.snapshot_every,
        }
    }

    /// Scenario for the first mesh size.
    pub fn primary(&self) -> ScenarioConfig {
        self.scenario(self.mesh.n_e.to_vec()[0])
    }

    pub fn unsteady_params(&self) -> Option<UnsteadyParams> {
        self.unsteady.as_ref().map(|u| UnsteadyParams {
            n0: u.n0.unwrap_or(self.bc.n_eff),
            amplitude: u.amplitude,
            frequency: u.frequency,
            t_end: u.t_end,
        })
    }
}
