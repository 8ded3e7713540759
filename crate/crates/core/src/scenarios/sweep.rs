//! Steady sliding-law sweeps over the effective pressure.

use super::{run_steady_from, ScenarioConfig, State};
use crate::error::{Error, Result};

/// One steady state of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n_eff: f64,
    pub u_b: f64,
    pub tau_b: f64,
    /// `u_b / (A·Nⁿ)`.
    pub u_b_scaled: f64,
    /// `τ_b / (r·N)`.
    pub tau_scaled: f64,
    pub volume: f64,
    pub x_detach: Option<f64>,
    pub x_reattach: Option<f64>,
    pub steps: usize,
    /// Largest contact violation over every solve of this point.
    pub contact_violation: f64,
    /// Largest `max |Bᵀu|` over every solve of this point.
    pub divergence: f64,
    /// False when the steady iteration failed; values are then those of the
    /// last completed step.
    pub converged: bool,
}

/// Steady states for each `N`, visited in decreasing order, each started
/// from the previous steady roof. Failed points are flagged and the sweep
/// continues from the last good state.
pub fn sweep_sliding_law(config: &ScenarioConfig, n_list: &[f64]) -> Result<Vec<SweepPoint>> {
    if n_list.is_empty() {
        return Err(Error::Config("sweep needs at least one effective pressure".into()));
    }
    let mut ns = n_list.to_vec();
    ns.sort_by(|a, b| b.total_cmp(a));
    ns.dedup();
    let n = config.rheology.exponent;
    let a = config.rheology.rate_factor;
    let r = config.bed.amplitude();

    let mut state = State::attached(config)?;
    let mut points = Vec::with_capacity(ns.len());
    for &n_eff in &ns {
        let cfg = ScenarioConfig {
            effective_pressure: n_eff,
            ..config.clone()
        };
        let saved = (state.roof.clone(), state.mesh.clone(), state.solution.clone(), state.t);
        let (record, series, converged) = match run_steady_from(&cfg, &mut state) {
            Ok(s) => (s.record, s.series, true),
            Err(fail) => {
                log::warn!("sweep point N = {n_eff} failed: {}", fail.error);
                (state.roof, state.mesh, state.solution, state.t) = saved;
                match fail.series.last() {
                    Some(r) => (r.clone(), fail.series, false),
                    None => continue,
                }
            }
        };
        let worst = |f: fn(&super::StepRecord) -> f64| series.records.iter().map(f).fold(0.0, f64::max);
        points.push(SweepPoint {
            n_eff,
            u_b: record.u_b,
            tau_b: record.tau_b,
            u_b_scaled: record.u_b / (a * n_eff.powf(n)),
            tau_scaled: record.tau_b / (r * n_eff),
            volume: record.volume,
            x_detach: record.x_detach,
            x_reattach: record.x_reattach,
            steps: series.len(),
            contact_violation: worst(|r| r.contact_violation),
            divergence: worst(|r| r.divergence),
            converged,
        });
    }
    Ok(points)
}

/// `c₀ = (2π)^{n+2} / (2α)`, with `α` the least-squares slope through the
/// origin of `(τ_b/(rN))ⁿ` against `(r/A)·u_b/Nⁿ` over the uncavitated
/// points.
pub fn fit_c0(points: &[SweepPoint], n: f64, r: f64, a: f64) -> Result<f64> {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut used = 0;
    for p in points.iter().filter(|p| p.converged && p.volume == 0.0) {
        let x = r / a * p.u_b / p.n_eff.powf(n);
        let y = (p.tau_b / (r * p.n_eff)).powf(n);
        sxy += x * y;
        sxx += x * x;
        used += 1;
    }
    if used == 0 || sxx == 0.0 {
        return Err(Error::NoData("no uncavitated sweep points to fit c0".into()));
    }
    let alpha = sxy / sxx;
    Ok((2.0 * std::f64::consts::PI).powf(n + 2.0) / (2.0 * alpha))
}
