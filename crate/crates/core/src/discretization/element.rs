//! Quadratic Lagrange element on straight-sided triangles.
//!
//! Local nodes: vertices 0, 1, 2, then the midpoints of edges (0,1), (1,2),
//! (2,0). Local velocity DoF `2k + c` is component `c` of node `k`.

use super::quadrature::{TriangleRule, GAUSS3_POINTS, GAUSS3_WEIGHTS};
use crate::rheology::GlenRheology;

pub const NODES: usize = 6;
pub const LOCAL_DOFS: usize = 12;

/// Local node triples along each triangle edge: (start, midpoint, end).
pub const EDGE_NODES: [[usize; 3]; 3] = [[0, 3, 1], [1, 4, 2], [2, 5, 0]];

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct P2Triangle {
    pub area: f64,
    grad_l: [[f64; 2]; 3],
}

/// Symmetric 2×2 tensor stored as `(xx, yy, xy)`.
pub type Sym2 = [f64; 3];

#[inline]
pub fn contract(a: &Sym2, b: &Sym2) -> f64 {
    a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]
}

impl P2Triangle {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let grad_l = [
            [(v[1][1] - v[2][1]) / det, (v[2][0] - v[1][0]) / det],
            [(v[2][1] - v[0][1]) / det, (v[0][0] - v[2][0]) / det],
            [(v[0][1] - v[1][1]) / det, (v[1][0] - v[0][0]) / det],
        ];
        Self {
            area: 0.5 * det,
            grad_l,
        }
    }

    /// Barycentric coordinates of a reference point `(ξ, η)`.
    #[inline]
    pub fn barycentric(p: [f64; 2]) -> [f64; 3] {
        [1.0 - p[0] - p[1], p[0], p[1]]
    }

    #[inline]
    pub fn shape_values(l: [f64; 3]) -> [f64; NODES] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    #[inline]
    pub fn shape_gradients(&self, l: [f64; 3]) -> [[f64; 2]; NODES] {
        let g = &self.grad_l;
        let mut out = [[0.0; 2]; NODES];
        for k in 0..3 {
            let s = 4.0 * l[k] - 1.0;
            out[k] = [s * g[k][0], s * g[k][1]];
        }
        for (m, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + m] = [
                4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
                4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
            ];
        }
        out
    }

    /// Symmetric gradients of the twelve vector basis functions.
    #[inline]
    pub fn basis_strains(&self, l: [f64; 3]) -> [Sym2; LOCAL_DOFS] {
        let grads = self.shape_gradients(l);
        let mut eps = [[0.0; 3]; LOCAL_DOFS];
        for (k, g) in grads.iter().enumerate() {
            eps[2 * k] = [g[0], 0.0, 0.5 * g[1]];
            eps[2 * k + 1] = [0.0, g[1], 0.5 * g[0]];
        }
        eps
    }

    /// `∫_T ∇·φ_a` for every local DoF.
    pub fn divergence_integrals(&self) -> [f64; LOCAL_DOFS] {
        let rule = TriangleRule::degree2();
        let mut out = [0.0; LOCAL_DOFS];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let grads = self.shape_gradients(Self::barycentric(*p));
            for (k, g) in grads.iter().enumerate() {
                out[2 * k] += w * self.area * g[0];
                out[2 * k + 1] += w * self.area * g[1];
            }
        }
        out
    }
}

/// Viscous residual `∫ 2η ε(u):ε(φ_a)` and, optionally, its tangent.
pub fn viscous_kernel(
    tri: &P2Triangle,
    rheo: &GlenRheology,
    rule: &TriangleRule,
    u: &[f64; LOCAL_DOFS],
    residual: &mut [f64; LOCAL_DOFS],
    mut tangent: Option<&mut [[f64; LOCAL_DOFS]; LOCAL_DOFS]>,
) -> std::result::Result<(), String> {
    *residual = [0.0; LOCAL_DOFS];
    if let Some(t) = tangent.as_deref_mut() {
        *t = [[0.0; LOCAL_DOFS]; LOCAL_DOFS];
    }
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let eps = tri.basis_strains(P2Triangle::barycentric(*p));
        let mut e = [0.0; 3];
        for (a, ea) in eps.iter().enumerate() {
            for c in 0..3 {
                e[c] += u[a] * ea[c];
            }
        }
        let q = 0.5 * contract(&e, &e);
        let (eta, deta) = rheo.eval_invariant(q);
        if !eta.is_finite() || !deta.is_finite() {
            return Err(format!("viscosity not finite at strain invariant {q:e}"));
        }
        let jw = w * tri.area;
        let mut proj = [0.0; LOCAL_DOFS];
        for a in 0..LOCAL_DOFS {
            proj[a] = contract(&e, &eps[a]);
            residual[a] += jw * 2.0 * eta * proj[a];
        }
        if let Some(t) = tangent.as_deref_mut() {
            for a in 0..LOCAL_DOFS {
                for b in a..LOCAL_DOFS {
                    let v = jw * (2.0 * eta * contract(&eps[a], &eps[b]) + 2.0 * deta * proj[a] * proj[b]);
                    t[a][b] += v;
                    if a != b {
                        t[b][a] += v;
                    }
                }
            }
        }
    }
    Ok(())
}

/// `∫_e φ_k ds` for the three P2 nodes of a straight edge (start, mid, end),
/// by three-point Gauss quadrature.
pub fn edge_shape_integrals(len: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (s, w) in GAUSS3_POINTS.iter().zip(GAUSS3_WEIGHTS) {
        let phi = [(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)];
        for k in 0..3 {
            out[k] += w * len * phi[k];
        }
    }
    out
}
