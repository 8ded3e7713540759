//! The periodic strip `0 ≤ x ≤ 1`, `θ(x) ≤ y ≤ H`: bed profile, cavity roof,
//! structured triangulation and its deformation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Bedrock height `b(x)` on the unit-period domain.
#[derive(Debug, Clone, PartialEq)]
pub enum BedProfile {
    /// `b(x) = r·sin(π/2 + 2πx)`; the crest sits at `x = 0`.
    Sinusoid { amplitude: f64 },
    /// Periodic piecewise-linear interpolant of `(x, b)` samples on `[0, 1)`.
    Tabulated { x: Vec<f64>, b: Vec<f64> },
}

impl BedProfile {
    pub fn sinusoid(amplitude: f64) -> Self {
        BedProfile::Sinusoid { amplitude }
    }

    pub fn flat() -> Self {
        BedProfile::Sinusoid { amplitude: 0.0 }
    }

    pub fn tabulated(x: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if x.len() != b.len() || x.len() < 2 {
            return Err(Error::Config(
                "tabulated bed needs at least two (x, b) samples".into(),
            ));
        }
        if x[0] < 0.0 || *x.last().unwrap() >= 1.0 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "tabulated bed abscissae must be strictly increasing in [0, 1)".into(),
            ));
        }
        Ok(BedProfile::Tabulated { x, b })
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            BedProfile::Sinusoid { amplitude } => amplitude.abs(),
            BedProfile::Tabulated { b, .. } => b.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    pub fn height(&self, x: f64) -> f64 {
        match self {
            BedProfile::Sinusoid { amplitude } => {
                if *amplitude == 0.0 {
                    0.0
                } else {
                    amplitude * (0.5 * PI + 2.0 * PI * x).sin()
                }
            }
            BedProfile::Tabulated { x: xs, b } => {
                let t = x.rem_euclid(1.0);
                let n = xs.len();
                let k = xs.partition_point(|&v| v <= t);
                let (x0, b0, x1, b1) = if k == 0 {
                    (xs[n - 1] - 1.0, b[n - 1], xs[0], b[0])
                } else if k == n {
                    (xs[n - 1], b[n - 1], xs[0] + 1.0, b[0])
                } else {
                    (xs[k - 1], b[k - 1], xs[k], b[k])
                };
                b0 + (b1 - b0) * (t - x0) / (x1 - x0)
            }
        }
    }
}

/// Lower boundary of the ice: nodes `(x_i, θ_i)` for `i = 0..n_e` on a unit
/// period. Edge `e_i` joins node `i-1` to node `i` (indices mod `n_e`), so
/// `e_0` is the wrap-around edge ending at `x = 1 ≡ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityRoof {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

impl CavityRoof {
    /// Roof lying on the bed at `n_e` uniformly spaced nodes.
    pub fn attached(bed: &BedProfile, n_e: usize) -> Self {
        let x: Vec<f64> = (0..n_e).map(|i| i as f64 / n_e as f64).collect();
        let theta = x.iter().map(|&xi| bed.height(xi)).collect();
        Self { x, theta }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Index of the node upstream of node `i`, and the horizontal spacing to it.
    pub fn upstream(&self, i: usize) -> (usize, f64) {
        let n = self.len();
        if i == 0 {
            (n - 1, self.x[0] + 1.0 - self.x[n - 1])
        } else {
            (i - 1, self.x[i] - self.x[i - 1])
        }
    }

    /// Piecewise-linear periodic interpolant of the roof.
    pub fn interpolate(&self, x: f64) -> f64 {
        let t = x.rem_euclid(1.0);
        let n = self.len();
        let k = self.x.partition_point(|&v| v <= t);
        let (x0, y0, x1, y1) = if k == n {
            (self.x[n - 1], self.theta[n - 1], 1.0 + self.x[0], self.theta[0])
        } else if k == 0 {
            (self.x[n - 1] - 1.0, self.theta[n - 1], self.x[0], self.theta[0])
        } else {
            (self.x[k - 1], self.theta[k - 1], self.x[k], self.theta[k])
        };
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.len())
            .map(|i| self.upstream(i).1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Attached/detached classification of the lower edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePartition {
    /// `detached[i]` is true iff edge `e_i` belongs to `Γ_d`.
    pub detached: Vec<bool>,
}

impl EdgePartition {
    pub fn all_attached(n_e: usize) -> Self {
        Self {
            detached: vec![false; n_e],
        }
    }

    pub fn len(&self) -> usize {
        self.detached.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detached.is_empty()
    }

    /// Edge indices in `Γ_a`, increasing.
    pub fn attached(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.detached[i]).collect()
    }

    pub fn detached_edges(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.detached[i]).collect()
    }

    pub fn n_attached(&self) -> usize {
        self.detached.iter().filter(|d| !**d).count()
    }
}

/// Edge `e_i` is detached iff its downstream node lies strictly above the bed.
///
/// The comparison is exact: clipping writes `b(x_i)` bit-for-bit into
/// attached nodes.
pub fn classify_edges(roof: &CavityRoof, bed: &BedProfile) -> EdgePartition {
    let detached = roof
        .x
        .iter()
        .zip(&roof.theta)
        .map(|(&x, &t)| t > bed.height(x))
        .collect();
    EdgePartition { detached }
}

/// A boundary edge of the triangulation and the cell that owns it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub cell: usize,
    /// Local edge index within the cell: 0 = (v0,v1), 1 = (v1,v2), 2 = (v2,v0).
    pub local_edge: usize,
}

/// Structured triangulation of the periodic strip.
///
/// Vertices are stored column-major within rows: vertex `(i, j)` has index
/// `j·(n_e+1) + i` for column `i ∈ 0..=n_e` and row `j ∈ 0..=n_layers`.
/// Column `n_e` duplicates column 0 shifted by one period.
#[derive(Debug, Clone)]
pub struct PeriodicMesh {
    pub n_columns: usize,
    pub n_layers: usize,
    pub height: f64,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Lower boundary, left to right; edge `k` spans columns `k` and `k+1`.
    pub bottom: Vec<BoundaryEdge>,
    /// Top boundary `y = H`, left to right.
    pub top: Vec<BoundaryEdge>,
    /// `(left, right)` vertex pairs identified by periodicity.
    pub periodic_pairs: Vec<(usize, usize)>,
    /// Reference heights of the vertex rows (undeformed mesh).
    pub row_heights: Vec<f64>,
}

/// Geometric ratio making the bottom row as tall as one bed edge.
pub fn grading_for_first_layer(n_layers: usize, height: f64, first: f64) -> f64 {
    if n_layers as f64 * first >= height || n_layers == 1 {
        return 1.0;
    }
    let total = |g: f64| {
        if (g - 1.0).abs() < 1e-14 {
            first * n_layers as f64
        } else {
            first * (g.powi(n_layers as i32) - 1.0) / (g - 1.0)
        }
    };
    let (mut lo, mut hi) = (1.0, 2.0);
    while total(hi) < height {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < height {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Vertical layer count used for a given number of bed edges when none is
/// configured; reproduces the cell counts 96, 192, 768, 3072 for
/// `n_e` = 16, 32, 64, 128.
pub fn default_layers(n_e: usize) -> usize {
    (3 * n_e).div_ceil(32).max(3)
}

impl PeriodicMesh {
    /// Graded structured mesh of `[0,1]×[0,H]`, two triangles per quad.
    pub fn reference(n_e: usize, n_layers: usize, height: f64, grading: f64) -> Result<Self> {
        if n_e < 4 || n_e % 2 != 0 {
            return Err(Error::Config(format!(
                "bed edge count must be even and >= 4, got {n_e}"
            )));
        }
        if n_layers < 1 {
            return Err(Error::Config("need at least one vertical layer".into()));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::Config(format!("height must be positive, got {height}")));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::Config(format!("grading must be >= 1, got {grading}")));
        }

        let mut row_heights = Vec::with_capacity(n_layers + 1);
        let weights: Vec<f64> = (0..n_layers).map(|k| grading.powi(k as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut y = 0.0;
        row_heights.push(0.0);
        for w in &weights[..n_layers - 1] {
            y += height * w / total;
            row_heights.push(y);
        }
        row_heights.push(height);

        let nc = n_e + 1;
        let mut vertices = Vec::with_capacity(nc * (n_layers + 1));
        for &yj in &row_heights {
            for i in 0..nc {
                vertices.push([i as f64 / n_e as f64, yj]);
            }
        }
        let vid = |i: usize, j: usize| j * nc + i;

        let mut triangles = Vec::with_capacity(2 * n_e * n_layers);
        let mut bottom = Vec::with_capacity(n_e);
        let mut top = Vec::with_capacity(n_e);
        for j in 0..n_layers {
            for i in 0..n_e {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                let lower = triangles.len();
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
                if j == 0 {
                    bottom.push(BoundaryEdge {
                        vertices: [v00, v10],
                        cell: lower,
                        local_edge: 0,
                    });
                }
                if j == n_layers - 1 {
                    top.push(BoundaryEdge {
                        vertices: [v01, v11],
                        cell: lower + 1,
                        local_edge: 1,
                    });
                }
            }
        }
        let periodic_pairs = (0..=n_layers).map(|j| (vid(0, j), vid(n_e, j))).collect();

        Ok(Self {
            n_columns: n_e,
            n_layers,
            height,
            vertices,
            triangles,
            bottom,
            top,
            periodic_pairs,
            row_heights,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn cell_vertices(&self, cell: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[cell];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn signed_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_vertices(cell);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Outward unit normal and length of bottom edge `k` (mesh order).
    pub fn bottom_normal(&self, k: usize) -> ([f64; 2], f64) {
        let [a, b] = self.bottom[k].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        ([dy / len, -dx / len], len)
    }

    /// Bottom mesh edge carrying roof edge `e_i`.
    #[inline]
    pub fn bottom_edge_of_roof_edge(&self, i: usize) -> usize {
        (i + self.n_columns - 1) % self.n_columns
    }

    /// Lower-boundary nodes as a roof (first `n_e` columns of row 0).
    pub fn roof(&self) -> CavityRoof {
        let x = (0..self.n_columns).map(|i| self.vertices[i][0]).collect();
        let theta = (0..self.n_columns).map(|i| self.vertices[i][1]).collect();
        CavityRoof { x, theta }
    }

    /// Move the lower boundary onto `roof`, scaling every column vertically.
    ///
    /// `self` must be the undeformed reference mesh; the map is always applied
    /// from the reference configuration.
    pub fn deform(&self, roof: &CavityRoof) -> Result<Self> {
        if roof.len() != self.n_columns {
            return Err(Error::Dimension {
                expected: self.n_columns,
                got: roof.len(),
            });
        }
        let h = self.height;
        if let Some(i) = roof.theta.iter().position(|&t| !(t < h)) {
            return Err(Error::Geometry(format!(
                "roof node {i} at height {} reaches the top of the domain (H = {h})",
                roof.theta[i]
            )));
        }
        let nc = self.n_columns + 1;
        let mut out = self.clone();
        for (j, &yr) in self.row_heights.iter().enumerate() {
            for i in 0..nc {
                let th = roof.theta[i % self.n_columns];
                let y = if j == self.n_layers {
                    h
                } else if j == 0 {
                    th
                } else {
                    th + yr * (h - th) / h
                };
                out.vertices[j * nc + i][1] = y;
            }
        }
        if let Some(c) = (0..out.n_cells()).find(|&c| !(out.signed_area(c) > 0.0)) {
            return Err(Error::Geometry(format!(
                "cell {c} has nonpositive area after deformation"
            )));
        }
        Ok(out)
    }

    /// Plain-text dump: one `v x y` line per vertex, then one `t a b c` line
    /// per triangle.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {:.15e} {:.15e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

/// Convenience wrapper matching the operation name used in the docs.
pub fn build_reference_mesh(n_e: usize, n_layers: usize, height: f64, grading: f64) -> Result<PeriodicMesh> {
    PeriodicMesh::reference(n_e, n_layers, height, grading)
}

pub fn deform_mesh(reference: &PeriodicMesh, roof: &CavityRoof) -> Result<PeriodicMesh> {
    reference.deform(roof)
}
