//! Cavity roof evolution and cavity diagnostics.

use crate::error::{Error, Result};
use crate::geometry::{BedProfile, CavityRoof};

/// Fraction of the smallest node spacing a roof node may move per step
/// before the CFL monitor warns.
pub const CFL_LIMIT: f64 = 0.5;

/// Result of one roof update.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofUpdate {
    pub dt: f64,
    /// Edge-average outward normal velocity per roof edge.
    pub un: Vec<f64>,
    pub roof: CavityRoof,
}

/// Upwind update `θ_i ← θ_i − Δt·√(s_i² + 1)·ū_{n,i}`, with `s_i` the slope
/// and `ū_{n,i}` the normal velocity of edge `e_i` (upstream of node `i`).
pub fn advect_roof(roof: &CavityRoof, un_edges: &[f64], dt: f64) -> Result<CavityRoof> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::TimeStep(dt));
    }
    if un_edges.len() != roof.len() {
        return Err(Error::Dimension {
            expected: roof.len(),
            got: un_edges.len(),
        });
    }
    let mut out = roof.clone();
    for i in 0..roof.len() {
        let (up, dx) = roof.upstream(i);
        let slope = (roof.theta[i] - roof.theta[up]) / dx;
        out.theta[i] = roof.theta[i] - dt * slope.hypot(1.0) * un_edges[i];
    }
    Ok(out)
}

/// `θ_i := b(x_i)` wherever the roof lies below the bed.
pub fn clip_to_bed(roof: &CavityRoof, bed: &BedProfile) -> CavityRoof {
    let mut out = roof.clone();
    for (x, t) in out.x.iter().zip(out.theta.iter_mut()) {
        let b = bed.height(*x);
        if *t < b {
            *t = b;
        }
    }
    out
}

/// Trapezoidal `∫ (θ − b) dx` over one period.
pub fn cavity_volume(roof: &CavityRoof, bed: &BedProfile) -> f64 {
    let gap: Vec<f64> = roof
        .x
        .iter()
        .zip(&roof.theta)
        .map(|(&x, &t)| t - bed.height(x))
        .collect();
    (0..roof.len())
        .map(|i| {
            let (up, dx) = roof.upstream(i);
            0.5 * (gap[i] + gap[up]) * dx
        })
        .sum()
}

/// Ends of the dominant cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityEndpoints {
    /// Last attached node before the detached run.
    pub detach: f64,
    /// First attached node after it, unwrapped so that `reattach > detach`.
    pub reattach: f64,
    /// More than one disjoint cavity was found.
    pub multiple: bool,
}

/// Endpoints of the longest run of detached edges, or `None` when the roof is
/// fully attached. A roof detached everywhere has no endpoints (`NaN`).
pub fn cavity_endpoints(roof: &CavityRoof, bed: &BedProfile) -> Option<CavityEndpoints> {
    let n = roof.len();
    let detached: Vec<bool> = roof
        .x
        .iter()
        .zip(&roof.theta)
        .map(|(&x, &t)| t > bed.height(x))
        .collect();
    if !detached.iter().any(|d| *d) {
        return None;
    }
    let Some(start) = (0..n).find(|&i| !detached[i]) else {
        return Some(CavityEndpoints {
            detach: f64::NAN,
            reattach: f64::NAN,
            multiple: false,
        });
    };
    // walk once around the period starting from an attached node
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < n {
        let i = (start + k) % n;
        if detached[i] {
            let first = k;
            while k < n && detached[(start + k) % n] {
                k += 1;
            }
            runs.push((first, k - first));
        } else {
            k += 1;
        }
    }
    let &(first, len) = runs
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("at least one run");
    let before = (start + first + n - 1) % n;
    let after = (start + first + len) % n;
    let detach = roof.x[before];
    let mut reattach = roof.x[after];
    if reattach <= detach {
        reattach += 1.0;
    }
    Some(CavityEndpoints {
        detach,
        reattach,
        multiple: runs.len() > 1,
    })
}

/// `max|ū_n|·Δt / min_i(x_i − x_{i−1})`.
pub fn cfl_number(roof: &CavityRoof, un_edges: &[f64], dt: f64) -> f64 {
    let umax = un_edges.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    umax * dt / roof.min_spacing()
}

/// Warns and returns true when the CFL number exceeds [`CFL_LIMIT`].
pub fn cfl_monitor(roof: &CavityRoof, un_edges: &[f64], dt: f64) -> bool {
    let c = cfl_number(roof, un_edges, dt);
    if c > CFL_LIMIT {
        log::warn!("roof CFL number {c:.3} exceeds {CFL_LIMIT} (dt = {dt})");
        return true;
    }
    false
}
