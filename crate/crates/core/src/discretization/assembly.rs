//! Assembly of the discrete operators of the mixed contact-Stokes system.

use crate::error::{Error, Result};
use crate::geometry::PeriodicMesh;
use crate::linalg::SparseMatrix;
use crate::rheology::GlenRheology;

use super::element::{edge_shape_integrals, viscous_kernel, P2Triangle, LOCAL_DOFS};
use super::quadrature::TriangleRule;
use super::spaces::FunctionSpaces;

/// Quadrature degree for volume integrals.
pub const VOLUME_DEGREE: usize = 4;

/// Assembled linear operators and constraints for one mesh configuration.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    /// Divergence coupling, `N_v × N_q`.
    pub b: SparseMatrix,
    /// Contact coupling, `N_v × N_μ`.
    pub d: SparseMatrix,
    /// Load vector, `N_v`.
    pub f: Vec<f64>,
    /// Dirichlet constraints `(dof, value)`.
    pub constraints: Vec<(usize, f64)>,
}

impl DiscreteOperators {
    /// Operators for the N-form load; `tau_b` is the applied top shear in
    /// Neumann mode, `u_i` the imposed top speed in Dirichlet mode.
    pub fn assemble(
        mesh: &PeriodicMesh,
        spaces: &FunctionSpaces,
        n_eff: f64,
        tau_b: Option<f64>,
        u_i: Option<f64>,
    ) -> Self {
        let mut f = assemble_load(mesh, spaces, n_eff, tau_b);
        let constraints = u_i.map(|v| top_constraints(spaces, v)).unwrap_or_default();
        for &(dof, _) in &constraints {
            f[dof] = 0.0;
        }
        Self {
            b: assemble_divergence(mesh, spaces),
            d: assemble_contact_coupling(mesh, spaces),
            f,
            constraints,
        }
    }
}

/// Geometry of a roof edge: outward unit normal, length, P2 nodes and the
/// edge integrals of the three nodal basis functions.
#[derive(Debug, Clone, Copy)]
pub struct RoofEdge {
    pub normal: [f64; 2],
    pub len: f64,
    pub nodes: [usize; 3],
    pub weights: [f64; 3],
}

pub fn roof_edge(mesh: &PeriodicMesh, spaces: &FunctionSpaces, i: usize) -> RoofEdge {
    let (normal, len) = mesh.bottom_normal(mesh.bottom_edge_of_roof_edge(i));
    RoofEdge {
        normal,
        len,
        nodes: spaces.roof_edge_nodes[i],
        weights: edge_shape_integrals(len),
    }
}

/// Per-cell triangle geometry.
pub fn cell_geometry(mesh: &PeriodicMesh, cell: usize) -> P2Triangle {
    P2Triangle::new(mesh.cell_vertices(cell))
}

/// `B_{a,c} = ∫_{T_c} ∇·φ_a`.
pub fn assemble_divergence(mesh: &PeriodicMesh, spaces: &FunctionSpaces) -> SparseMatrix {
    let mut trip = Vec::with_capacity(LOCAL_DOFS * mesh.n_cells());
    for cell in 0..mesh.n_cells() {
        let div = cell_geometry(mesh, cell).divergence_integrals();
        for (a, dof) in spaces.cell_dofs(cell).into_iter().enumerate() {
            trip.push((dof, cell, div[a]));
        }
    }
    SparseMatrix::from_triplets(spaces.n_velocity(), spaces.n_pressure(), &trip)
}

fn gather(u: &[f64], dofs: &[usize; LOCAL_DOFS]) -> [f64; LOCAL_DOFS] {
    let mut out = [0.0; LOCAL_DOFS];
    for (o, &d) in out.iter_mut().zip(dofs) {
        *o = u[d];
    }
    out
}

fn check_len(u: &[f64], n: usize) -> Result<()> {
    if u.len() != n {
        return Err(Error::Dimension { expected: n, got: u.len() });
    }
    Ok(())
}

/// `[A(u)]_a = ∫ 2η ε(u_h):ε(φ_a)` with the default volume rule.
pub fn assemble_residual_a(
    mesh: &PeriodicMesh,
    spaces: &FunctionSpaces,
    rheo: &GlenRheology,
    u: &[f64],
) -> Result<Vec<f64>> {
    assemble_residual_a_with_rule(mesh, spaces, rheo, u, &TriangleRule::for_degree(VOLUME_DEGREE))
}

pub fn assemble_residual_a_with_rule(
    mesh: &PeriodicMesh,
    spaces: &FunctionSpaces,
    rheo: &GlenRheology,
    u: &[f64],
    rule: &TriangleRule,
) -> Result<Vec<f64>> {
    check_len(u, spaces.n_velocity())?;
    let mut out = vec![0.0; spaces.n_velocity()];
    let mut local = [0.0; LOCAL_DOFS];
    for cell in 0..mesh.n_cells() {
        let dofs = spaces.cell_dofs(cell);
        let tri = cell_geometry(mesh, cell);
        viscous_kernel(&tri, rheo, rule, &gather(u, &dofs), &mut local, None)
            .map_err(|what| Error::Numeric { cell, what })?;
        for (a, &d) in dofs.iter().enumerate() {
            out[d] += local[a];
        }
    }
    Ok(out)
}

/// Consistent tangent `∂A/∂u`.
pub fn assemble_jacobian_a(
    mesh: &PeriodicMesh,
    spaces: &FunctionSpaces,
    rheo: &GlenRheology,
    u: &[f64],
) -> Result<SparseMatrix> {
    assemble_jacobian_a_with_rule(mesh, spaces, rheo, u, &TriangleRule::for_degree(VOLUME_DEGREE))
}

pub fn assemble_jacobian_a_with_rule(
    mesh: &PeriodicMesh,
    spaces: &FunctionSpaces,
    rheo: &GlenRheology,
    u: &[f64],
    rule: &TriangleRule,
) -> Result<SparseMatrix> {
    check_len(u, spaces.n_velocity())?;
    let mut trip = Vec::with_capacity(LOCAL_DOFS * LOCAL_DOFS * mesh.n_cells());
    let mut res = [0.0; LOCAL_DOFS];
    let mut tan = [[0.0; LOCAL_DOFS]; LOCAL_DOFS];
    for cell in 0..mesh.n_cells() {
        let dofs = spaces.cell_dofs(cell);
        let tri = cell_geometry(mesh, cell);
        viscous_kernel(&tri, rheo, rule, &gather(u, &dofs), &mut res, Some(&mut tan))
            .map_err(|what| Error::Numeric { cell, what })?;
        for a in 0..LOCAL_DOFS {
            for b in 0..LOCAL_DOFS {
                trip.push((dofs[a], dofs[b], tan[a][b]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(spaces.n_velocity(), spaces.n_velocity(), &trip))
}

/// `D_{a,j} = ∫_{e_j} φ_a·n ds` over the multiplier edges of `spaces`.
pub fn assemble_contact_coupling(mesh: &PeriodicMesh, spaces: &FunctionSpaces) -> SparseMatrix {
    let mut trip = Vec::with_capacity(6 * spaces.n_multiplier());
    for (j, &i) in spaces.multiplier_edges.iter().enumerate() {
        let e = roof_edge(mesh, spaces, i);
        for k in 0..3 {
            trip.push((2 * e.nodes[k], j, e.weights[k] * e.normal[0]));
            trip.push((2 * e.nodes[k] + 1, j, e.weights[k] * e.normal[1]));
        }
    }
    SparseMatrix::from_triplets(spaces.n_velocity(), spaces.n_multiplier(), &trip)
}

/// N-form load: `f_a = τ_b ∫_{Γt} φ_a·e_x ds − N ∫_{Γt} φ_a·n ds`.
pub fn assemble_load(mesh: &PeriodicMesh, spaces: &FunctionSpaces, n_eff: f64, tau_b: Option<f64>) -> Vec<f64> {
    let mut f = vec![0.0; spaces.n_velocity()];
    add_top_load(mesh, spaces, n_eff, tau_b.unwrap_or(0.0), &mut f);
    f
}

/// Load with separate ice and water pressures: overburden `p_i` on the top
/// and water pressure `p_w` on the whole lower boundary.
pub fn assemble_load_split(
    mesh: &PeriodicMesh,
    spaces: &FunctionSpaces,
    p_i: f64,
    p_w: f64,
    tau_b: Option<f64>,
) -> Vec<f64> {
    let mut f = vec![0.0; spaces.n_velocity()];
    add_top_load(mesh, spaces, p_i, tau_b.unwrap_or(0.0), &mut f);
    for i in 0..spaces.n_roof_edges() {
        let e = roof_edge(mesh, spaces, i);
        for k in 0..3 {
            f[2 * e.nodes[k]] -= p_w * e.weights[k] * e.normal[0];
            f[2 * e.nodes[k] + 1] -= p_w * e.weights[k] * e.normal[1];
        }
    }
    f
}

fn add_top_load(mesh: &PeriodicMesh, spaces: &FunctionSpaces, normal_stress: f64, tau_b: f64, f: &mut [f64]) {
    // top edges are horizontal with outward normal (0, 1)
    for (edge, nodes) in mesh.top.iter().zip(&spaces.top_edge_nodes) {
        let [a, b] = edge.vertices;
        let len = (mesh.vertices[b][0] - mesh.vertices[a][0]).abs();
        let w = edge_shape_integrals(len);
        for k in 0..3 {
            f[2 * nodes[k]] += tau_b * w[k];
            f[2 * nodes[k] + 1] -= normal_stress * w[k];
        }
    }
}

/// Edge-average outward normal velocity `(1/|e_i|) ∫_{e_i} u_h·n ds` for the
/// given roof edges.
pub fn gamma_n(mesh: &PeriodicMesh, spaces: &FunctionSpaces, edges: &[usize], u: &[f64]) -> Vec<f64> {
    edges
        .iter()
        .map(|&i| {
            let e = roof_edge(mesh, spaces, i);
            let s: f64 = (0..3)
                .map(|k| e.weights[k] * (u[2 * e.nodes[k]] * e.normal[0] + u[2 * e.nodes[k] + 1] * e.normal[1]))
                .sum();
            s / e.len
        })
        .collect()
}

/// `γ_n u` on every roof edge.
pub fn gamma_n_all(mesh: &PeriodicMesh, spaces: &FunctionSpaces, u: &[f64]) -> Vec<f64> {
    let all: Vec<usize> = (0..spaces.n_roof_edges()).collect();
    gamma_n(mesh, spaces, &all, u)
}

/// `∫_{lower boundary} u_x ds`.
pub fn lower_boundary_ux_integral(mesh: &PeriodicMesh, spaces: &FunctionSpaces, u: &[f64]) -> f64 {
    (0..spaces.n_roof_edges())
        .map(|i| {
            let e = roof_edge(mesh, spaces, i);
            (0..3).map(|k| e.weights[k] * u[2 * e.nodes[k]]).sum::<f64>()
        })
        .sum()
}

/// Horizontal top velocities fixed to `u_i`.
pub fn top_constraints(spaces: &FunctionSpaces, u_i: f64) -> Vec<(usize, f64)> {
    spaces.top_horizontal_dofs().into_iter().map(|d| (d, u_i)).collect()
}

/// Row/column elimination of `constraints` from `a x = rhs`.
///
/// Constrained rows and columns become identity, the right-hand side takes
/// the prescribed value and the remaining rows are corrected for the moved
/// column contributions.
pub fn apply_dirichlet(a: &mut SparseMatrix, rhs: &mut [f64], constraints: &[(usize, f64)]) -> Result<()> {
    let n = a.nrows();
    check_len(rhs, n)?;
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(dof, val) in constraints {
        if dof >= n {
            return Err(Error::Config(format!("constraint on dof {dof} outside system of size {n}")));
        }
        match fixed[dof] {
            Some(prev) if prev != val => {
                return Err(Error::Config(format!(
                    "conflicting constraints on dof {dof}: {prev} and {val}"
                )))
            }
            _ => fixed[dof] = Some(val),
        }
    }
    let row_ptr = a.row_ptr().to_vec();
    let col_idx = a.col_idx().to_vec();
    let vals = a.values_mut();
    for r in 0..n {
        for p in row_ptr[r]..row_ptr[r + 1] {
            let c = col_idx[p];
            match (fixed[r], fixed[c]) {
                (Some(_), _) => vals[p] = if r == c { 1.0 } else { 0.0 },
                (None, Some(v)) => {
                    rhs[r] -= vals[p] * v;
                    vals[p] = 0.0;
                }
                (None, None) => {}
            }
        }
    }
    for (r, v) in fixed.iter().enumerate() {
        if let Some(v) = v {
            if a.position(r, r).is_none() {
                return Err(Error::Config(format!("constrained dof {r} has no diagonal entry")));
            }
            rhs[r] = *v;
        }
    }
    Ok(())
}
