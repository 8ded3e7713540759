//! Fixed-pattern assembly of the Newton matrix.
//!
//! Unknowns are ordered `[u | p | λ]`. The sparsity pattern depends only on
//! the mesh topology and the multiplier edges, so it is built once and the
//! values are overwritten in place every iteration.

use crate::discretization::element::{viscous_kernel, LOCAL_DOFS};
use crate::discretization::quadrature::TriangleRule;
use crate::discretization::{assembly::cell_geometry, roof_edge, FunctionSpaces, RoofEdge};
use crate::error::{Error, Result};
use crate::geometry::PeriodicMesh;
use crate::linalg::SparseMatrix;
use crate::rheology::GlenRheology;

pub(crate) struct SystemAssembler {
    pub nv: usize,
    pub nq: usize,
    pub nm: usize,
    pub multiplier_edges: Vec<usize>,
    pub matrix: SparseMatrix,
    uu_pos: Vec<[usize; LOCAL_DOFS * LOCAL_DOFS]>,
    up_pos: Vec<[usize; LOCAL_DOFS]>,
    pu_pos: Vec<[usize; LOCAL_DOFS]>,
    ul_pos: Vec<[usize; 6]>,
    lu_pos: Vec<[usize; 6]>,
    ll_pos: Vec<usize>,
    fixed: Vec<bool>,
    fixed_entries: Vec<usize>,
    fixed_diag: Vec<usize>,
}

impl SystemAssembler {
    pub fn new(spaces: &FunctionSpaces, fixed_dofs: &[usize]) -> Self {
        let nv = spaces.n_velocity();
        let nq = spaces.n_pressure();
        let nm = spaces.n_multiplier();
        let n = nv + nq + nm;
        let edge_dofs = |i: usize| {
            let nodes = spaces.roof_edge_nodes[i];
            let mut d = [0; 6];
            for k in 0..3 {
                d[2 * k] = 2 * nodes[k];
                d[2 * k + 1] = 2 * nodes[k] + 1;
            }
            d
        };

        let mut trip = Vec::with_capacity(nq * (LOCAL_DOFS * LOCAL_DOFS + 2 * LOCAL_DOFS) + 13 * nm);
        for cell in 0..nq {
            let dofs = spaces.cell_dofs(cell);
            for &a in &dofs {
                for &b in &dofs {
                    trip.push((a, b, 0.0));
                }
                trip.push((a, nv + cell, 0.0));
                trip.push((nv + cell, a, 0.0));
            }
        }
        for (j, &i) in spaces.multiplier_edges.iter().enumerate() {
            let row = nv + nq + j;
            for d in edge_dofs(i) {
                trip.push((d, row, 0.0));
                trip.push((row, d, 0.0));
            }
            trip.push((row, row, 0.0));
        }
        let matrix = SparseMatrix::from_triplets(n, n, &trip);
        let pos = |r: usize, c: usize| matrix.position(r, c).expect("entry in pattern");

        let mut uu_pos = Vec::with_capacity(nq);
        let mut up_pos = Vec::with_capacity(nq);
        let mut pu_pos = Vec::with_capacity(nq);
        for cell in 0..nq {
            let dofs = spaces.cell_dofs(cell);
            let mut uu = [0; LOCAL_DOFS * LOCAL_DOFS];
            let mut up = [0; LOCAL_DOFS];
            let mut pu = [0; LOCAL_DOFS];
            for a in 0..LOCAL_DOFS {
                for b in 0..LOCAL_DOFS {
                    uu[a * LOCAL_DOFS + b] = pos(dofs[a], dofs[b]);
                }
                up[a] = pos(dofs[a], nv + cell);
                pu[a] = pos(nv + cell, dofs[a]);
            }
            uu_pos.push(uu);
            up_pos.push(up);
            pu_pos.push(pu);
        }
        let mut ul_pos = Vec::with_capacity(nm);
        let mut lu_pos = Vec::with_capacity(nm);
        let mut ll_pos = Vec::with_capacity(nm);
        for (j, &i) in spaces.multiplier_edges.iter().enumerate() {
            let row = nv + nq + j;
            let d = edge_dofs(i);
            ul_pos.push(d.map(|a| pos(a, row)));
            lu_pos.push(d.map(|a| pos(row, a)));
            ll_pos.push(pos(row, row));
        }

        let mut fixed = vec![false; n];
        for &d in fixed_dofs {
            fixed[d] = true;
        }
        let mut fixed_entries = Vec::new();
        let mut fixed_diag = Vec::new();
        for &r in fixed_dofs {
            for (c, _) in matrix.row(r) {
                fixed_entries.push(pos(r, c));
                fixed_entries.push(pos(c, r));
            }
            fixed_diag.push(pos(r, r));
        }

        Self {
            nv,
            nq,
            nm,
            multiplier_edges: spaces.multiplier_edges.clone(),
            matrix,
            uu_pos,
            up_pos,
            pu_pos,
            ul_pos,
            lu_pos,
            ll_pos,
            fixed,
            fixed_entries,
            fixed_diag,
        }
    }

    pub fn n(&self) -> usize {
        self.nv + self.nq + self.nm
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    /// Viscous residual `A(u)`; with an active set, also fills the Newton
    /// matrix.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        &mut self,
        mesh: &PeriodicMesh,
        spaces: &FunctionSpaces,
        rheo: &GlenRheology,
        rule: &TriangleRule,
        div: &[[f64; LOCAL_DOFS]],
        edges: &[RoofEdge],
        u: &[f64],
        active: Option<&[bool]>,
    ) -> Result<Vec<f64>> {
        let mut a_u = vec![0.0; self.nv];
        let mut res = [0.0; LOCAL_DOFS];
        let mut tan = [[0.0; LOCAL_DOFS]; LOCAL_DOFS];
        let with_tangent = active.is_some();
        if with_tangent {
            self.matrix.values_mut().fill(0.0);
        }
        for cell in 0..self.nq {
            let dofs = spaces.cell_dofs(cell);
            let mut local_u = [0.0; LOCAL_DOFS];
            for (l, &d) in local_u.iter_mut().zip(&dofs) {
                *l = u[d];
            }
            let tri = cell_geometry(mesh, cell);
            viscous_kernel(
                &tri,
                rheo,
                rule,
                &local_u,
                &mut res,
                if with_tangent { Some(&mut tan) } else { None },
            )
            .map_err(|what| Error::Numeric { cell, what })?;
            for (a, &d) in dofs.iter().enumerate() {
                a_u[d] += res[a];
            }
            if with_tangent {
                let vals = self.matrix.values_mut();
                let uu = &self.uu_pos[cell];
                for a in 0..LOCAL_DOFS {
                    for b in 0..LOCAL_DOFS {
                        vals[uu[a * LOCAL_DOFS + b]] += tan[a][b];
                    }
                    vals[self.up_pos[cell][a]] -= div[cell][a];
                    vals[self.pu_pos[cell][a]] -= div[cell][a];
                }
            }
        }
        if let Some(active) = active {
            let vals = self.matrix.values_mut();
            for (j, e) in edges.iter().enumerate() {
                for k in 0..3 {
                    for c in 0..2 {
                        let dj = e.weights[k] * e.normal[c];
                        vals[self.ul_pos[j][2 * k + c]] = -dj;
                        vals[self.lu_pos[j][2 * k + c]] = if active[j] { -dj } else { 0.0 };
                    }
                }
                vals[self.ll_pos[j]] = if active[j] { 0.0 } else { 1.0 };
            }
            for &p in &self.fixed_entries {
                vals[p] = 0.0;
            }
            for &p in &self.fixed_diag {
                vals[p] = 1.0;
            }
        }
        Ok(a_u)
    }
}

/// Geometry of the multiplier edges.
pub(crate) fn multiplier_edge_data(mesh: &PeriodicMesh, spaces: &FunctionSpaces) -> Vec<RoofEdge> {
    spaces
        .multiplier_edges
        .iter()
        .map(|&i| roof_edge(mesh, spaces, i))
        .collect()
}
