//! Semi-smooth Newton solver for the mixed contact-Stokes system.
//!
//! Unknowns are velocity `u`, cellwise pressure `p` and one multiplier `λ_j`
//! per attached edge. The residuals are
//!
//! ```text
//! R1 = A(u) − B p − D λ − f
//! R2 = −Bᵀ u
//! R3 = λ + max(0, −λ + c γ_n u)
//! ```
//!
//! Each iteration marks edge `j` active when `−λ_j + c (γ_n u)_j > 0`,
//! enforces `D_jᵀ u = 0` there and `λ_j = 0` elsewhere, and solves the
//! linearized saddle-point system.

mod system;

use crate::discretization::element::LOCAL_DOFS;
use crate::discretization::quadrature::TriangleRule;
use crate::discretization::{assemble_load, assemble_load_split, assembly, FunctionSpaces, RoofEdge};
use crate::error::{Error, Result};
use crate::geometry::{EdgePartition, PeriodicMesh};
use crate::linalg::Factorizer;
use crate::rheology::GlenRheology;

use system::{multiplier_edge_data, SystemAssembler};

/// Tolerance on the discrete contact conditions.
pub const CONTACT_TOL: f64 = 1e-8;

/// Absolute floor under the relative residual test.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Complementarity scaling `c > 0`.
    pub c: f64,
    /// Relative residual tolerance.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Warm-start nonlinear solves from the `n = 1` solution.
    pub continuation: bool,
    /// Maximum step halvings per iteration (nonlinear rheology only).
    pub max_halvings: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            newton_tol: 1e-10,
            max_iter: 50,
            continuation: true,
            max_halvings: 8,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("complementarity scaling c must be > 0, got {}", self.c)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!("newton_tol must be > 0, got {}", self.newton_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Boundary condition on the top surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// Horizontal top velocity fixed to `u_i`.
    Dirichlet { u_i: f64 },
    /// Shear traction `τ_b` applied on the top.
    Neumann { tau_b: f64 },
}

/// Pressure loading of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    /// Effective pressure `N` on the top, traction-free cavities.
    Effective(f64),
    /// Overburden `p_i` on the top and water pressure `p_w` on the bed.
    Split { p_i: f64, p_w: f64 },
}

/// `λ + max(0, −λ + c·un)`, elementwise.
pub fn complementarity_residual(lambda: &[f64], un: &[f64], c: f64) -> Vec<f64> {
    assert_eq!(lambda.len(), un.len());
    lambda
        .iter()
        .zip(un)
        .map(|(&l, &g)| l + (c * g - l).max(0.0))
        .collect()
}

/// Relative residual norms of the three equation blocks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualNorms {
    pub momentum: f64,
    pub divergence: f64,
    pub complementarity: f64,
}

impl ResidualNorms {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.divergence).max(self.complementarity)
    }
}

/// One Newton iteration, as written to the diagnostic log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residuals: ResidualNorms,
    pub n_active: usize,
    pub active_changed: bool,
    pub step: f64,
}

impl IterationRecord {
    /// Single-line JSON record.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"iter\":{},\"momentum\":{:.6e},\"divergence\":{:.6e},\"complementarity\":{:.6e},\"active\":{},\"active_changed\":{},\"step\":{}}}",
            self.iteration,
            self.residuals.momentum,
            self.residuals.divergence,
            self.residuals.complementarity,
            self.n_active,
            self.active_changed,
            self.step
        )
    }
}

/// Starting point for a solve, with multipliers indexed by roof edge so
/// that it survives changes of `Γ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialGuess {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Initial active flag per roof edge.
    pub active: Vec<bool>,
}

/// Converged velocity, pressure and multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// One value per entry of `multiplier_edges`.
    pub lambda: Vec<f64>,
    /// Roof edges of `Γ_a`, increasing.
    pub multiplier_edges: Vec<usize>,
    /// Active flag per multiplier edge.
    pub active: Vec<bool>,
    /// `γ_n u` per multiplier edge.
    pub gamma: Vec<f64>,
    /// `max_q |(Bᵀu)_q|`.
    pub divergence_max: f64,
    pub iterations: usize,
    pub residuals: ResidualNorms,
    pub history: Vec<IterationRecord>,
}

impl MixedSolution {
    /// Multipliers per roof edge, zero on `Γ_d`.
    pub fn lambda_on_roof(&self, n_e: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_e];
        for (&i, &l) in self.multiplier_edges.iter().zip(&self.lambda) {
            out[i] = l;
        }
        out
    }

    /// Warm start for the next solve. Edges outside `Γ_a` start active so
    /// that newly reattached edges are constrained from the first iteration.
    pub fn to_guess(&self, n_e: usize) -> InitialGuess {
        let mut active = vec![true; n_e];
        for (&i, &a) in self.multiplier_edges.iter().zip(&self.active) {
            active[i] = a;
        }
        InitialGuess {
            u: self.u.clone(),
            p: self.p.clone(),
            lambda: self.lambda_on_roof(n_e),
            active,
        }
    }

    /// Largest violation of `λ ≤ 0`, `γ_n u ≤ 0`, `λ·γ_n u = 0`.
    pub fn contact_violation(&self) -> f64 {
        self.lambda
            .iter()
            .zip(&self.gamma)
            .map(|(&l, &g)| l.max(g).max((l * g).abs()))
            .fold(0.0, f64::max)
    }

    /// `τ_b = −Σ_j λ_j n_x,j |e_j|` over the attached edges.
    pub fn basal_shear(&self, mesh: &PeriodicMesh, spaces: &FunctionSpaces) -> f64 {
        -self
            .multiplier_edges
            .iter()
            .zip(&self.lambda)
            .map(|(&i, &l)| {
                let e = assembly::roof_edge(mesh, spaces, i);
                l * e.normal[0] * e.len
            })
            .sum::<f64>()
    }
}

/// Everything defining one contact solve.
#[derive(Debug, Clone, Copy)]
pub struct ContactProblem<'a> {
    pub mesh: &'a PeriodicMesh,
    /// Spaces of the full lower boundary; restricted internally to `Γ_a`.
    pub spaces: &'a FunctionSpaces,
    pub partition: &'a EdgePartition,
    pub rheo: GlenRheology,
    pub bc: BoundaryCondition,
    pub load: Load,
}

/// Reusable solver state: the Newton matrix pattern and the symbolic
/// factorization survive between solves with the same `Γ_a`.
#[derive(Default)]
pub struct ContactSolver {
    cache: Option<(Vec<usize>, SystemAssembler)>,
    factorizer: Factorizer,
}

/// Clones start with empty caches.
impl Clone for ContactSolver {
    fn clone(&self) -> Self {
        Self::default()
    }
}

struct Evaluation {
    norms: ResidualNorms,
    converged: bool,
    r1: Vec<f64>,
    r2: Vec<f64>,
    gamma: Vec<f64>,
    r2_inf: f64,
    indicator: Vec<bool>,
    /// Merit for damping: momentum and divergence only.
    merit: f64,
}

struct Setup<'a> {
    mesh: &'a PeriodicMesh,
    spaces: FunctionSpaces,
    rheo: GlenRheology,
    rule: TriangleRule,
    div: Vec<[f64; LOCAL_DOFS]>,
    div_scale: f64,
    edges: Vec<RoofEdge>,
    f: Vec<f64>,
    params: SolverParams,
}

impl ContactSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(
        &mut self,
        problem: &ContactProblem,
        params: &SolverParams,
        guess: Option<&InitialGuess>,
    ) -> Result<MixedSolution> {
        params.validate()?;
        problem.rheo.validate()?;
        if !problem.rheo.is_linear() && params.continuation && guess.is_none() {
            let linear = ContactProblem {
                rheo: problem.rheo.linearized(),
                ..*problem
            };
            let start = self.solve_inner(&linear, params, None)?;
            return self.solve_inner(problem, params, Some(&start.to_guess(problem.partition.len())));
        }
        self.solve_inner(problem, params, guess)
    }

    fn solve_inner(
        &mut self,
        problem: &ContactProblem,
        params: &SolverParams,
        guess: Option<&InitialGuess>,
    ) -> Result<MixedSolution> {
        let mesh = problem.mesh;
        let n_e = problem.partition.len();
        if n_e != problem.spaces.n_roof_edges() {
            return Err(Error::Dimension {
                expected: problem.spaces.n_roof_edges(),
                got: n_e,
            });
        }
        let spaces = problem.spaces.with_contact(problem.partition);
        let (fixed, u_top, tau_b) = match problem.bc {
            BoundaryCondition::Dirichlet { u_i } => (spaces.top_horizontal_dofs(), u_i, None),
            BoundaryCondition::Neumann { tau_b } => (Vec::new(), 0.0, Some(tau_b)),
        };
        let edges = multiplier_edge_data(mesh, &spaces);
        let all_active = vec![true; edges.len()];
        check_null_space(&edges, &all_active, &problem.bc)?;

        let mut f = match problem.load {
            Load::Effective(n) => assemble_load(mesh, &spaces, n, tau_b),
            Load::Split { p_i, p_w } => assemble_load_split(mesh, &spaces, p_i, p_w, tau_b),
        };
        for &d in &fixed {
            f[d] = 0.0;
        }
        let div: Vec<[f64; LOCAL_DOFS]> = (0..mesh.n_cells())
            .map(|c| assembly::cell_geometry(mesh, c).divergence_integrals())
            .collect();
        let div_scale = div
            .iter()
            .map(|d| d.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);

        let rebuild = !matches!(&self.cache, Some((fx, sa)) if *fx == fixed && sa.multiplier_edges == spaces.multiplier_edges && sa.nv == spaces.n_velocity() && sa.nq == spaces.n_pressure());
        if rebuild {
            self.cache = Some((fixed.clone(), SystemAssembler::new(&spaces, &fixed)));
        }
        let (_, asm) = self.cache.as_mut().expect("assembler present");

        let setup = Setup {
            mesh,
            spaces,
            rheo: problem.rheo,
            rule: TriangleRule::for_degree(assembly::VOLUME_DEGREE),
            div,
            div_scale,
            edges,
            f,
            params: *params,
        };
        let (nv, nq, nm) = (asm.nv, asm.nq, asm.nm);

        let (mut u, mut p, mut lam, mut prev_active) = match guess {
            Some(g) => {
                if g.u.len() != nv || g.p.len() != nq || g.lambda.len() != n_e || g.active.len() != n_e {
                    return Err(Error::Dimension { expected: nv, got: g.u.len() });
                }
                let lam: Vec<f64> = setup.spaces.multiplier_edges.iter().map(|&i| g.lambda[i]).collect();
                let act: Vec<bool> = setup.spaces.multiplier_edges.iter().map(|&i| g.active[i]).collect();
                (g.u.clone(), g.p.clone(), lam, act)
            }
            None => {
                let mut u = vec![0.0; nv];
                for k in 0..nv / 2 {
                    u[2 * k] = u_top;
                }
                (u, vec![0.0; nq], vec![0.0; nm], vec![true; nm])
            }
        };
        for &d in &fixed {
            u[d] = u_top;
        }

        let nonlinear = !problem.rheo.is_linear();
        let mut history = Vec::new();
        let mut eval = evaluate(&setup, asm, &u, &p, &lam)?;
        let mut step = 1.0;
        for it in 0..=params.max_iter {
            let changed = eval.indicator != prev_active;
            let record = IterationRecord {
                iteration: it,
                residuals: eval.norms,
                n_active: eval.indicator.iter().filter(|a| **a).count(),
                active_changed: changed,
                step,
            };
            log::debug!(target: "subcav::newton", "{}", record.to_json());
            history.push(record);
            if eval.converged && !changed {
                return Ok(MixedSolution {
                    u,
                    p,
                    lambda: lam,
                    multiplier_edges: setup.spaces.multiplier_edges.clone(),
                    active: eval.indicator,
                    gamma: eval.gamma,
                    divergence_max: eval.r2_inf,
                    iterations: it,
                    residuals: eval.norms,
                    history,
                });
            }
            if it == params.max_iter {
                break;
            }
            let active = if it == 0 { prev_active.clone() } else { eval.indicator.clone() };
            check_null_space(&setup.edges, &active, &problem.bc)?;

            asm.assemble(mesh, &setup.spaces, &setup.rheo, &setup.rule, &setup.div, &setup.edges, &u, Some(&active))?;
            let mut rhs = vec![0.0; asm.n()];
            for i in 0..nv {
                rhs[i] = if asm.is_fixed(i) { 0.0 } else { -eval.r1[i] };
            }
            for c in 0..nq {
                rhs[nv + c] = -eval.r2[c];
            }
            for j in 0..nm {
                rhs[nv + nq + j] = if active[j] {
                    eval.gamma[j] * setup.edges[j].len
                } else {
                    -lam[j]
                };
            }
            let lu = self
                .factorizer
                .factorize(&asm.matrix, &format!("newton iteration {it}"))?;
            let delta = lu.solve(&rhs)?;

            step = 1.0;
            let mut halvings = 0;
            loop {
                let tu: Vec<f64> = u.iter().zip(&delta[..nv]).map(|(a, d)| a + step * d).collect();
                let tp: Vec<f64> = p.iter().zip(&delta[nv..nv + nq]).map(|(a, d)| a + step * d).collect();
                let tl: Vec<f64> = lam.iter().zip(&delta[nv + nq..]).map(|(a, d)| a + step * d).collect();
                let trial = evaluate(&setup, asm, &tu, &tp, &tl);
                let accept = match &trial {
                    Ok(t) => !nonlinear || t.merit <= eval.merit || halvings >= params.max_halvings,
                    Err(_) => halvings >= params.max_halvings,
                };
                if accept {
                    eval = trial?;
                    u = tu;
                    p = tp;
                    lam = tl;
                    break;
                }
                step *= 0.5;
                halvings += 1;
            }
            prev_active = active;
        }
        let residual_history = history.iter().map(|r| r.residuals.max()).collect();
        Err(Error::NonConvergence {
            iterations: params.max_iter,
            last: eval.norms.max(),
            history: residual_history,
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn evaluate(setup: &Setup, asm: &mut SystemAssembler, u: &[f64], p: &[f64], lam: &[f64]) -> Result<Evaluation> {
    let (nv, nq) = (asm.nv, asm.nq);
    let a_u = asm.assemble(setup.mesh, &setup.spaces, &setup.rheo, &setup.rule, &setup.div, &setup.edges, u, None)?;

    let mut bp = vec![0.0; nv];
    let mut r2 = vec![0.0; nq];
    for cell in 0..nq {
        let dofs = setup.spaces.cell_dofs(cell);
        let d = &setup.div[cell];
        let mut s = 0.0;
        for a in 0..LOCAL_DOFS {
            bp[dofs[a]] += d[a] * p[cell];
            s += d[a] * u[dofs[a]];
        }
        r2[cell] = -s;
    }
    let mut dl = vec![0.0; nv];
    let mut gamma = Vec::with_capacity(lam.len());
    for (j, e) in setup.edges.iter().enumerate() {
        let mut s = 0.0;
        for k in 0..3 {
            for c in 0..2 {
                let dof = 2 * e.nodes[k] + c;
                let w = e.weights[k] * e.normal[c];
                dl[dof] += w * lam[j];
                s += w * u[dof];
            }
        }
        gamma.push(s / e.len);
    }
    for i in 0..nv {
        if asm.is_fixed(i) {
            bp[i] = 0.0;
            dl[i] = 0.0;
        }
    }
    let r1: Vec<f64> = (0..nv)
        .map(|i| if asm.is_fixed(i) { 0.0 } else { a_u[i] - bp[i] - dl[i] - setup.f[i] })
        .collect();
    let c = setup.params.c;
    let r3 = complementarity_residual(lam, &gamma, c);
    let indicator: Vec<bool> = lam.iter().zip(&gamma).map(|(&l, &g)| -l + c * g > 0.0).collect();

    let scale_m = norm(&setup.f).max(norm(&bp)).max(norm(&dl));
    let u_inf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale_d = setup.div_scale * u_inf;
    let r2_inf = r2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gamma_scaled: Vec<f64> = gamma.iter().map(|g| c * g).collect();
    let scale_c = norm(lam).max(norm(&gamma_scaled));
    let (n1, n3) = (norm(&r1), norm(&r3));
    let tol = setup.params.newton_tol;
    let converged = n1 <= tol * scale_m + RESIDUAL_FLOOR
        && r2_inf <= tol * scale_d + RESIDUAL_FLOOR
        && n3 <= tol * scale_c + RESIDUAL_FLOOR;
    let rel = |n: f64, s: f64| n / s.max(RESIDUAL_FLOOR);
    let norms = ResidualNorms {
        momentum: rel(n1, scale_m),
        divergence: rel(r2_inf, scale_d),
        complementarity: rel(n3, scale_c),
    };
    Ok(Evaluation {
        merit: norms.momentum.max(norms.divergence),
        norms,
        converged,
        r1,
        r2,
        gamma,
        r2_inf,
        indicator,
    })
}

/// Reject active sets that leave a rigid translation unconstrained.
fn check_null_space(edges: &[RoofEdge], active: &[bool], bc: &BoundaryCondition) -> Result<()> {
    let normals: Vec<[f64; 2]> = edges
        .iter()
        .zip(active)
        .filter(|(_, a)| **a)
        .map(|(e, _)| e.normal)
        .collect();
    match bc {
        BoundaryCondition::Dirichlet { .. } => {
            if !normals.iter().any(|n| n[1].abs() > 1e-12) {
                return Err(Error::NullSpace(
                    "no active contact edge constrains vertical translation".into(),
                ));
            }
        }
        BoundaryCondition::Neumann { .. } => {
            let spans = normals
                .first()
                .is_some_and(|n0| normals.iter().any(|n| (n0[0] * n[1] - n0[1] * n[0]).abs() > 1e-10));
            if !spans {
                return Err(Error::NullSpace(format!(
                    "{} active contact edge(s) with parallel normals cannot fix the horizontal rigid mode",
                    normals.len()
                )));
            }
        }
    }
    Ok(())
}

/// One-shot solve with a fresh workspace.
#[allow(clippy::too_many_arguments)]
pub fn solve_contact_stokes(
    mesh: &PeriodicMesh,
    spaces: &FunctionSpaces,
    partition: &EdgePartition,
    rheo: &GlenRheology,
    bc: BoundaryCondition,
    n_eff: f64,
    params: &SolverParams,
    guess: Option<&InitialGuess>,
) -> Result<MixedSolution> {
    let problem = ContactProblem {
        mesh,
        spaces,
        partition,
        rheo: *rheo,
        bc,
        load: Load::Effective(n_eff),
    };
    ContactSolver::new().solve(&problem, params, guess)
}

#[cfg(test)]
mod tests;
