//! Oscillating effective pressure under a fixed basal shear stress.

use super::{run_steady_from, step, RunFailure, ScenarioConfig, State, StepRecord, TimeSeries};
use crate::contact::BoundaryCondition;
use crate::error::Error;

/// `N(t) = N₀ (1 + a sin 2πft)` for `t ∈ [0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsteadyParams {
    pub n0: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub t_end: f64,
}

impl UnsteadyParams {
    pub fn effective_pressure(&self, t: f64) -> f64 {
        self.n0 * (1.0 + self.amplitude * (2.0 * std::f64::consts::PI * self.frequency * t).sin())
    }
}

#[derive(Debug, Clone)]
pub struct UnsteadyRun {
    /// Shear stress of the initial steady state, applied throughout.
    pub tau_b0: f64,
    /// Final record of the initial steady solve.
    pub initial: StepRecord,
    pub series: TimeSeries,
}

/// Steady state at `(N₀, u_i)` in Dirichlet mode, then the time loop with the
/// top shear fixed to the steady `τ_b`.
pub fn run_unsteady(config: &ScenarioConfig, params: &UnsteadyParams) -> Result<UnsteadyRun, RunFailure> {
    if !matches!(config.bc, BoundaryCondition::Dirichlet { .. }) {
        return Err(Error::Config("the initial steady state needs a Dirichlet top condition".into()).into());
    }
    let cfg = ScenarioConfig {
        effective_pressure: params.n0,
        ..config.clone()
    };
    let mut state = State::attached(&cfg)?;
    let steady = run_steady_from(&cfg, &mut state)?;
    run_unsteady_from(config, params, &mut state, steady.record)
}

/// Time loop from a steady `state` whose final record is `initial`.
pub fn run_unsteady_from(
    config: &ScenarioConfig,
    params: &UnsteadyParams,
    state: &mut State,
    initial: StepRecord,
) -> Result<UnsteadyRun, RunFailure> {
    if !(params.n0 > 0.0 && params.amplitude.abs() < 1.0 && params.frequency >= 0.0 && params.t_end > 0.0) {
        return Err(Error::Config(format!("invalid unsteady parameters {params:?}")).into());
    }
    let tau_b0 = initial.tau_b;
    let cfg = ScenarioConfig {
        bc: BoundaryCondition::Neumann { tau_b: tau_b0 },
        ..config.clone()
    };
    state.t = 0.0;
    state.steps = 0;
    let mut series = TimeSeries::default();
    let n_steps = (params.t_end / cfg.dt).round() as usize;
    for k in 0..=n_steps {
        if cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0 {
            series.snapshots.push((state.t, state.roof.clone()));
        }
        let n_eff = params.effective_pressure(state.t);
        match step(state, &cfg, n_eff) {
            Ok(r) => series.push(r),
            Err(error) => return Err(RunFailure { error, series }),
        }
    }
    Ok(UnsteadyRun {
        tau_b0,
        initial,
        series,
    })
}
