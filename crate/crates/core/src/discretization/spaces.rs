//! Degree-of-freedom maps for the P2 velocity, P0 pressure and edgewise
//! constant multiplier spaces.

use std::collections::HashMap;

use crate::geometry::{EdgePartition, PeriodicMesh};

use super::element::EDGE_NODES;

/// DoF maps on a fixed mesh topology. Deforming the mesh does not change
/// them, so one instance serves a whole run.
#[derive(Debug, Clone)]
pub struct FunctionSpaces {
    /// Global P2 node of each local node, periodic copies identified.
    pub cell_nodes: Vec<[usize; 6]>,
    pub n_nodes: usize,
    /// P2 nodes (start, mid, end) of roof edge `e_i`, indexed by `i`.
    pub roof_edge_nodes: Vec<[usize; 3]>,
    /// P2 nodes of every top edge.
    pub top_edge_nodes: Vec<[usize; 3]>,
    /// Roof edges carrying a multiplier DoF (`Γ_a`), increasing.
    pub multiplier_edges: Vec<usize>,
    n_cells: usize,
    n_roof_edges: usize,
}

impl FunctionSpaces {
    /// Spaces with every lower edge attached.
    pub fn new(mesh: &PeriodicMesh) -> Self {
        let n_e = mesh.n_columns;
        let nc = n_e + 1;
        let rep = |v: usize| {
            let (i, j) = (v % nc, v / nc);
            j * n_e + (i % n_e)
        };
        let n_vertices = n_e * (mesh.n_layers + 1);

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_nodes = Vec::with_capacity(mesh.n_cells());
        let mut next = n_vertices;
        for tri in &mesh.triangles {
            let r = [rep(tri[0]), rep(tri[1]), rep(tri[2])];
            let mut nodes = [r[0], r[1], r[2], 0, 0, 0];
            for (m, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let key = (r[a].min(r[b]), r[a].max(r[b]));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    next += 1;
                    next - 1
                });
                nodes[3 + m] = id;
            }
            cell_nodes.push(nodes);
        }

        let edge_nodes = |e: &crate::geometry::BoundaryEdge| {
            let local = EDGE_NODES[e.local_edge];
            let cn = &cell_nodes[e.cell];
            [cn[local[0]], cn[local[1]], cn[local[2]]]
        };
        let bottom: Vec<[usize; 3]> = mesh.bottom.iter().map(edge_nodes).collect();
        let roof_edge_nodes = (0..n_e).map(|i| bottom[mesh.bottom_edge_of_roof_edge(i)]).collect();
        let top_edge_nodes = mesh.top.iter().map(edge_nodes).collect();

        Self {
            n_nodes: next,
            roof_edge_nodes,
            top_edge_nodes,
            multiplier_edges: (0..n_e).collect(),
            n_cells: mesh.n_cells(),
            n_roof_edges: n_e,
            cell_nodes,
        }
    }

    /// Copy with the multiplier space restricted to the attached edges.
    pub fn with_contact(&self, partition: &EdgePartition) -> Self {
        assert_eq!(partition.len(), self.n_roof_edges);
        Self {
            multiplier_edges: partition.attached(),
            ..self.clone()
        }
    }

    /// `N_v`.
    pub fn n_velocity(&self) -> usize {
        2 * self.n_nodes
    }

    /// `N_q`.
    pub fn n_pressure(&self) -> usize {
        self.n_cells
    }

    /// `N_μ`.
    pub fn n_multiplier(&self) -> usize {
        self.multiplier_edges.len()
    }

    pub fn n_roof_edges(&self) -> usize {
        self.n_roof_edges
    }

    /// Global velocity DoFs of a cell, in local order `2k + c`.
    #[inline]
    pub fn cell_dofs(&self, cell: usize) -> [usize; 12] {
        let n = &self.cell_nodes[cell];
        let mut d = [0; 12];
        for k in 0..6 {
            d[2 * k] = 2 * n[k];
            d[2 * k + 1] = 2 * n[k] + 1;
        }
        d
    }

    /// Velocity DoFs of the horizontal component on the top boundary.
    pub fn top_horizontal_dofs(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.top_edge_nodes.iter().flatten().copied().collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes.into_iter().map(|n| 2 * n).collect()
    }

    /// Nodal interpolation of a vector field; `f` receives node coordinates
    /// in the cell's own (unwrapped) frame.
    pub fn interpolate(&self, mesh: &PeriodicMesh, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_velocity()];
        for (cell, nodes) in self.cell_nodes.iter().enumerate() {
            for (k, p) in node_coordinates(mesh, cell).iter().enumerate() {
                let v = f(*p);
                u[2 * nodes[k]] = v[0];
                u[2 * nodes[k] + 1] = v[1];
            }
        }
        u
    }
}

/// Coordinates of the six P2 nodes of a cell.
pub fn node_coordinates(mesh: &PeriodicMesh, cell: usize) -> [[f64; 2]; 6] {
    let v = mesh.cell_vertices(cell);
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    [v[0], v[1], v[2], mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_periodic_identification() {
        let mesh = PeriodicMesh::reference(8, 3, 1.0, 1.0).unwrap();
        let s = FunctionSpaces::new(&mesh);
        // periodic strip of 8 columns × 3 rows: 2·8 × (2·3 + 1) P2 nodes
        assert_eq!(s.n_nodes, 16 * 7);
        assert_eq!(s.n_pressure(), 48);
        assert_eq!(s.n_multiplier(), 8);
        assert_eq!(s.n_velocity(), 2 * 16 * 7);
        assert_eq!(s.top_horizontal_dofs().len(), 16);
        // roof edge 0 wraps: ends on the node at x = 0
        assert_eq!(s.roof_edge_nodes[0][2], 0);
        assert_eq!(s.roof_edge_nodes[1][0], 0);
        assert_eq!(s.roof_edge_nodes[3][2], s.roof_edge_nodes[4][0]);
    }

    #[test]
    fn periodic_nodes_share_values() {
        let mesh = PeriodicMesh::reference(6, 2, 1.0, 1.0).unwrap();
        let s = FunctionSpaces::new(&mesh);
        let u = s.interpolate(&mesh, |p| [(2.0 * std::f64::consts::PI * p[0]).cos(), p[1]]);
        for (cell, nodes) in s.cell_nodes.iter().enumerate() {
            for (k, p) in node_coordinates(&mesh, cell).iter().enumerate() {
                let want = (2.0 * std::f64::consts::PI * p[0]).cos();
                assert!((u[2 * nodes[k]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn contact_restriction() {
        let mesh = PeriodicMesh::reference(8, 1, 1.0, 1.0).unwrap();
        let s = FunctionSpaces::new(&mesh);
        let mut p = EdgePartition::all_attached(8);
        p.detached[2] = true;
        p.detached[3] = true;
        let c = s.with_contact(&p);
        assert_eq!(c.multiplier_edges, vec![0, 1, 4, 5, 6, 7]);
        assert_eq!(c.n_multiplier(), 6);
    }
}
