//! Shared fixtures for the solver benchmarks.

use subcav_core::discretization::FunctionSpaces;
use subcav_core::geometry::{CavityRoof, PeriodicMesh};
use subcav_core::scenarios::{ScenarioConfig, State};

/// Table 1 operating point on `n_e` roof edges.
pub fn table1(n_e: usize) -> ScenarioConfig {
    ScenarioConfig {
        n_e,
        dt: 0.5 / n_e as f64,
        ..ScenarioConfig::default()
    }
}

/// Attached mesh, spaces and a sheared velocity field.
pub fn sheared(n_e: usize) -> (PeriodicMesh, FunctionSpaces, Vec<f64>) {
    let cfg = table1(n_e);
    let reference = cfg.reference_mesh().expect("mesh");
    let mesh = reference.deform(&CavityRoof::attached(&cfg.bed, n_e)).expect("deform");
    let spaces = FunctionSpaces::new(&mesh);
    let u = spaces.interpolate(&mesh, |[x, y]| [y + 0.1 * x * y, -0.05 * y * y]);
    (mesh, spaces, u)
}

/// State after `steps` time steps from the attached roof.
pub fn warmed_state(cfg: &ScenarioConfig, steps: usize) -> State {
    let mut state = State::attached(cfg).expect("state");
    for _ in 0..steps {
        subcav_core::scenarios::step(&mut state, cfg, cfg.effective_pressure).expect("step");
    }
    state
}
