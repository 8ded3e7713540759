//! Triangle and edge quadrature rules.
//!
//! Triangle points are barycentric-free reference coordinates `(ξ, η)` on the
//! unit triangle; weights are area fractions and sum to one.

/// A quadrature rule on the reference triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Three interior points, exact for quadratics.
    pub fn degree2() -> Self {
        let a = 1.0 / 6.0;
        let b = 2.0 / 3.0;
        Self {
            points: vec![[a, a], [b, a], [a, b]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six-point rule, exact for quartics.
    pub fn degree4() -> Self {
        let mut rule = Self {
            points: Vec::with_capacity(6),
            weights: Vec::with_capacity(6),
            degree: 4,
        };
        rule.push_orbit3(0.445948490915965, 0.223381589678011);
        rule.push_orbit3(0.091576213509771, 0.109951743655322);
        rule
    }

    /// Twelve-point rule, exact for sextics.
    pub fn degree6() -> Self {
        let mut rule = Self {
            points: Vec::with_capacity(12),
            weights: Vec::with_capacity(12),
            degree: 6,
        };
        rule.push_orbit3(0.249286745170910, 0.116786275726379);
        rule.push_orbit3(0.063089014491502, 0.050844906370207);
        rule.push_orbit6(0.053145049844817, 0.310352451033784, 0.082851075618374);
        rule
    }

    pub fn for_degree(degree: usize) -> Self {
        match degree {
            0..=2 => Self::degree2(),
            3..=4 => Self::degree4(),
            _ => Self::degree6(),
        }
    }

    /// Points `(a, a)`, `(1-2a, a)`, `(a, 1-2a)` in barycentric form.
    fn push_orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a], [b, a], [a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// All six permutations of barycentric `(a, b, 1-a-b)`.
    fn push_orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Three-point Gauss–Legendre rule on `[0, 1]` (exact for quintics).
pub const GAUSS3_POINTS: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
pub const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
