//! Time loop and experiment drivers: steady cavity, sliding-law sweep and
//! oscillating effective pressure.

mod output;
mod sweep;
mod unsteady;

pub use output::*;
pub use sweep::{fit_c0, sweep_sliding_law, SweepPoint};
pub use unsteady::{run_unsteady, run_unsteady_from, UnsteadyParams, UnsteadyRun};

use crate::contact::{
    BoundaryCondition, ContactProblem, ContactSolver, InitialGuess, Load, MixedSolution, SolverParams,
};
use crate::discretization::{gamma_n_all, lower_boundary_ux_integral, FunctionSpaces};
use crate::error::{Error, Result};
use crate::geometry::{
    classify_edges, default_layers, grading_for_first_layer, BedProfile, CavityRoof, EdgePartition, PeriodicMesh,
};
use crate::rheology::GlenRheology;
use crate::surface::{advect_roof, cavity_endpoints, cavity_volume, cfl_monitor, clip_to_bed};

/// Nondimensional run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub bed: BedProfile,
    pub rheology: GlenRheology,
    /// Domain height `H`.
    pub height: f64,
    /// Number of roof nodes (and lower edges).
    pub n_e: usize,
    /// Vertical layers; `None` picks [`default_layers`].
    pub n_layers: Option<usize>,
    /// Geometric row ratio; `None` makes the first row one edge length tall.
    pub grading: Option<f64>,
    /// Effective pressure `N`.
    pub effective_pressure: f64,
    pub bc: BoundaryCondition,
    pub dt: f64,
    pub t_end: f64,
    /// Steady when `max_i |Δθ_i|/Δt` falls below this.
    pub steady_threshold: f64,
    pub solver: SolverParams,
    /// Keep a roof snapshot every this many steps (0 = none).
    pub snapshot_every: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bed: BedProfile::sinusoid(0.01),
            rheology: GlenRheology::default(),
            height: 1.0,
            n_e: 16,
            n_layers: None,
            grading: None,
            effective_pressure: 0.3,
            bc: BoundaryCondition::Dirichlet { u_i: 1.0 },
            dt: 0.01,
            t_end: 50.0,
            steady_threshold: 1e-4,
            solver: SolverParams::default(),
            snapshot_every: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.rheology.validate()?;
        self.solver.validate()?;
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.height, "height")?;
        positive(self.t_end, "t_end")?;
        positive(self.steady_threshold, "steady threshold")?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::TimeStep(self.dt));
        }
        if !(self.effective_pressure >= 0.0 && self.effective_pressure.is_finite()) {
            return Err(Error::Config(format!(
                "effective pressure must be >= 0, got {}",
                self.effective_pressure
            )));
        }
        if self.bed.amplitude() >= self.height {
            return Err(Error::Config("bed amplitude must be below the domain height".into()));
        }
        match self.bc {
            BoundaryCondition::Dirichlet { u_i } if !u_i.is_finite() => {
                Err(Error::Config(format!("u_i must be finite, got {u_i}")))
            }
            BoundaryCondition::Neumann { tau_b } if !tau_b.is_finite() => {
                Err(Error::Config(format!("tau_b must be finite, got {tau_b}")))
            }
            _ => Ok(()),
        }
    }

    pub fn layers(&self) -> usize {
        self.n_layers.unwrap_or_else(|| default_layers(self.n_e))
    }

    pub fn row_grading(&self) -> f64 {
        self.grading
            .unwrap_or_else(|| grading_for_first_layer(self.layers(), self.height, 1.0 / self.n_e as f64))
    }

    pub fn reference_mesh(&self) -> Result<PeriodicMesh> {
        PeriodicMesh::reference(self.n_e, self.layers(), self.height, self.row_grading())
    }
}

/// One time-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub n_eff: f64,
    pub tau_b: f64,
    pub u_b: f64,
    pub volume: f64,
    pub x_detach: Option<f64>,
    pub x_reattach: Option<f64>,
    pub newton_iterations: usize,
    /// Largest violation of the discrete contact conditions.
    pub contact_violation: f64,
    /// `max |Bᵀu|` of the solution.
    pub divergence: f64,
    /// `max_i |θ_i^{k+1} − θ_i^k| / Δt` of the roof update that followed.
    pub rate: f64,
}

/// Per-step records of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub records: Vec<StepRecord>,
    /// `(t, roof)` snapshots.
    pub snapshots: Vec<(f64, CavityRoof)>,
}

impl TimeSeries {
    pub fn push(&mut self, r: StepRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// Evolving simulation state.
#[derive(Clone)]
pub struct State {
    pub t: f64,
    pub steps: usize,
    pub reference: PeriodicMesh,
    pub mesh: PeriodicMesh,
    pub spaces: FunctionSpaces,
    pub roof: CavityRoof,
    pub partition: EdgePartition,
    /// Solution on `mesh` from the last step.
    pub solution: Option<MixedSolution>,
    solver: ContactSolver,
}

impl State {
    /// Roof lying on the bed.
    pub fn attached(config: &ScenarioConfig) -> Result<Self> {
        let roof = CavityRoof::attached(&config.bed, config.n_e);
        Self::from_roof(config, roof)
    }

    pub fn from_roof(config: &ScenarioConfig, roof: CavityRoof) -> Result<Self> {
        config.validate()?;
        let reference = config.reference_mesh()?;
        let roof = clip_to_bed(&roof, &config.bed);
        let mesh = reference.deform(&roof)?;
        let spaces = FunctionSpaces::new(&reference);
        let partition = classify_edges(&roof, &config.bed);
        Ok(Self {
            t: 0.0,
            steps: 0,
            reference,
            mesh,
            spaces,
            roof,
            partition,
            solution: None,
            solver: ContactSolver::new(),
        })
    }

    /// Solve on the current geometry without moving the roof.
    pub fn solve(&mut self, config: &ScenarioConfig, n_eff: f64) -> Result<&MixedSolution> {
        self.partition = classify_edges(&self.roof, &config.bed);
        let guess: Option<InitialGuess> = self.solution.as_ref().map(|s| s.to_guess(config.n_e));
        let problem = ContactProblem {
            mesh: &self.mesh,
            spaces: &self.spaces,
            partition: &self.partition,
            rheo: config.rheology,
            bc: config.bc,
            load: Load::Effective(n_eff),
        };
        let sol = match self.solver.solve(&problem, &config.solver, guess.as_ref()) {
            Ok(s) => s,
            // a stale warm start can fail where a cold start does not
            Err(e @ (Error::NonConvergence { .. } | Error::Singular { .. } | Error::NullSpace(_)))
                if guess.is_some() =>
            {
                log::info!("warm start failed at t = {} ({e}); retrying cold", self.t);
                self.solver.solve(&problem, &config.solver, None)?
            }
            Err(e) => return Err(e),
        };
        self.solution = Some(sol);
        Ok(self.solution.as_ref().expect("just set"))
    }

    /// Basal quantities of the current solution.
    pub fn basal(&self) -> Option<(f64, f64)> {
        self.solution
            .as_ref()
            .map(|s| basal_quantities(s, &self.mesh, &self.spaces))
    }
}

/// `τ_b = −Σ_j λ_j n_x,j |e_j|` and `u_b = ∫ u_x ds` along the lower boundary
/// (unit period).
pub fn basal_quantities(sol: &MixedSolution, mesh: &PeriodicMesh, spaces: &FunctionSpaces) -> (f64, f64) {
    (sol.basal_shear(mesh, spaces), lower_boundary_ux_integral(mesh, spaces, &sol.u))
}

/// Multiplier profile `(edge midpoint x, λ)` over the attached edges, by
/// increasing `x`.
pub fn multiplier_profile(sol: &MixedSolution, mesh: &PeriodicMesh) -> Vec<(f64, f64)> {
    let roof = mesh.roof();
    let mut prof: Vec<(f64, f64)> = sol
        .multiplier_edges
        .iter()
        .zip(&sol.lambda)
        .map(|(&i, &l)| {
            let (_, dx) = roof.upstream(i);
            ((roof.x[i] - 0.5 * dx).rem_euclid(1.0), l)
        })
        .collect();
    prof.sort_by(|a, b| a.0.total_cmp(&b.0));
    prof
}

/// Edge normal velocities used to move the roof: zero on active edges,
/// `γ_n u` elsewhere.
pub fn roof_velocities(sol: &MixedSolution, mesh: &PeriodicMesh, spaces: &FunctionSpaces) -> Vec<f64> {
    let mut un = gamma_n_all(mesh, spaces, &sol.u);
    for (&i, &a) in sol.multiplier_edges.iter().zip(&sol.active) {
        if a {
            un[i] = 0.0;
        }
    }
    un
}

/// One pass of the solution procedure: classify, solve, advect, clip, deform.
pub fn step(state: &mut State, config: &ScenarioConfig, n_eff: f64) -> Result<StepRecord> {
    state.solve(config, n_eff)?;
    let sol = state.solution.as_ref().expect("solved");
    let (tau_b, u_b) = basal_quantities(sol, &state.mesh, &state.spaces);
    let volume = cavity_volume(&state.roof, &config.bed);
    let ends = cavity_endpoints(&state.roof, &config.bed);
    let iterations = sol.iterations;

    let un = roof_velocities(sol, &state.mesh, &state.spaces);
    cfl_monitor(&state.roof, &un, config.dt);
    let moved = clip_to_bed(&advect_roof(&state.roof, &un, config.dt)?, &config.bed);
    let rate = moved
        .theta
        .iter()
        .zip(&state.roof.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / config.dt;
    let record = StepRecord {
        t: state.t,
        n_eff,
        tau_b,
        u_b,
        volume,
        x_detach: ends.map(|e| e.detach),
        x_reattach: ends.map(|e| e.reattach),
        newton_iterations: iterations,
        contact_violation: sol.contact_violation(),
        divergence: sol.divergence_max,
        rate,
    };
    state.mesh = state.reference.deform(&moved)?;
    state.roof = moved;
    state.t += config.dt;
    state.steps += 1;
    Ok(record)
}

/// Converged steady state.
#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Record of the final step, computed on `roof`.
    pub record: StepRecord,
    pub series: TimeSeries,
    pub roof: CavityRoof,
    pub mesh: PeriodicMesh,
    pub solution: MixedSolution,
    pub spaces: FunctionSpaces,
}

impl SteadyState {
    pub fn partition(&self, bed: &BedProfile) -> EdgePartition {
        classify_edges(&self.roof, bed)
    }
}

/// Failure of a time loop, with the series recorded so far.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub series: TimeSeries,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} steps)", self.error, self.series.len())
    }
}

impl std::error::Error for RunFailure {}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            series: TimeSeries::default(),
        }
    }
}

/// Step from the fully attached roof until the roof stops moving.
pub fn run_steady(config: &ScenarioConfig) -> std::result::Result<SteadyState, RunFailure> {
    let mut state = State::attached(config)?;
    run_steady_from(config, &mut state)
}

/// Step `state` until the roof stops moving. On success the state is left on
/// the roof of the returned solution.
pub fn run_steady_from(config: &ScenarioConfig, state: &mut State) -> std::result::Result<SteadyState, RunFailure> {
    let mut series = TimeSeries::default();
    let n_eff = config.effective_pressure;
    let t0 = state.t;
    loop {
        let roof = state.roof.clone();
        let mesh = state.mesh.clone();
        if config.snapshot_every > 0 && state.steps % config.snapshot_every == 0 {
            series.snapshots.push((state.t, roof.clone()));
        }
        let record = match step(state, config, n_eff) {
            Ok(r) => r,
            Err(error) => return Err(RunFailure { error, series }),
        };
        series.push(record.clone());
        if record.rate < config.steady_threshold {
            log::info!(
                "steady after {} steps (t = {:.4}): tau_b = {:.6}, u_b = {:.6}",
                series.len(),
                record.t,
                record.tau_b,
                record.u_b
            );
            state.mesh = mesh.clone();
            state.roof = roof.clone();
            state.t = record.t;
            return Ok(SteadyState {
                record,
                series,
                roof,
                mesh,
                solution: state.solution.clone().expect("solved"),
                spaces: state.spaces.clone(),
            });
        }
        if state.t - t0 >= config.t_end - 1e-12 {
            return Err(RunFailure {
                error: Error::NotSteady {
                    t_end: config.t_end,
                    last_rate: record.rate,
                },
                series,
            });
        }
    }
}

#[cfg(test)]
mod tests;
