//! Quadrature on the reference triangle, the reference tetrahedra and their faces.
//!
//! Rules are collapsed (conical) products of Gauss-Legendre rules, so every
//! weight is positive. Points are stored in barycentric coordinates with respect
//! to the domain's vertices.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{ReferenceElement, Simplex};

/// Highest polynomial degree for which rules are generated.
pub const MAX_DEGREE: usize = 24;

/// Gauss-Legendre nodes and weights on [0, 1]; weights sum to 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Edge,
    Triangle,
    Tetrahedron,
}

impl Domain {
    fn dim(self) -> usize {
        match self {
            Domain::Edge => 1,
            Domain::Triangle => 2,
            Domain::Tetrahedron => 3,
        }
    }
}

/// A quadrature rule on a simplex given by barycentric points and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub domain: Domain,
    /// Barycentric coordinates, `dim + 1` per point.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Points mapped onto the simplex spanned by `vertices`.
    pub fn map_points(&self, vertices: &[DVector<f64>]) -> Vec<DVector<f64>> {
        assert_eq!(vertices.len(), self.domain.dim() + 1);
        self.points
            .iter()
            .map(|b| {
                b.iter()
                    .zip(vertices)
                    .fold(DVector::zeros(vertices[0].len()), |acc, (l, v)| acc + v * *l)
            })
            .collect()
    }

    /// Integrates `f` over the simplex with the given vertices; the weights are
    /// rescaled by the ratio of its measure to the reference measure.
    pub fn integrate<F: FnMut(&DVector<f64>) -> f64>(
        &self,
        vertices: &[DVector<f64>],
        measure: f64,
        mut f: F,
    ) -> f64 {
        let scale = measure / self.weight_sum();
        self.map_points(vertices)
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * scale * f(x))
            .sum()
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Rule on the unit edge, the reference triangle or the reference
/// tetrahedron `conv{0, e_1, .., e_d}`, exact for total degree `<= degree`.
/// Weights sum to 1, 1/2 and 1/6 respectively.
pub fn simplex_rule(dim: usize, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    // The collapsed map adds a Jacobian factor of degree dim - 1 in the first
    // variable, so dim - 1 extra degrees are needed there.
    let m = (degree + dim).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(m);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            for (xi, wi) in x.iter().zip(&w) {
                points.push(vec![1.0 - xi, *xi]);
                weights.push(*wi);
            }
        }
        2 => {
            for (u, wu) in x.iter().zip(&w) {
                for (v, wv) in x.iter().zip(&w) {
                    let p = [*u, v * (1.0 - u)];
                    points.push(vec![1.0 - p[0] - p[1], p[0], p[1]]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
        }
        3 => {
            for (u, wu) in x.iter().zip(&w) {
                for (v, wv) in x.iter().zip(&w) {
                    for (s, ws) in x.iter().zip(&w) {
                        let p = [*u, v * (1.0 - u), s * (1.0 - u) * (1.0 - v)];
                        points.push(vec![1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]]);
                        weights.push(wu * wv * ws * (1.0 - u).powi(2) * (1.0 - v));
                    }
                }
            }
        }
        d => return Err(Error::InvalidDimension(d)),
    }
    let domain = match dim {
        1 => Domain::Edge,
        2 => Domain::Triangle,
        _ => Domain::Tetrahedron,
    };
    Ok(QuadratureRule {
        domain,
        points,
        weights,
        exact_degree: degree,
    })
}

/// Rule on one face of a reference element.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceRule {
    /// Barycentric with respect to `vertex_indices`; weights sum to `measure`.
    pub rule: QuadratureRule,
    pub face_index: usize,
    /// Element vertices spanning the face, increasing.
    pub vertex_indices: Vec<usize>,
    pub measure: f64,
    pub normal: DVector<f64>,
}

impl FaceRule {
    /// Quadrature points on the face of `simplex` with the same index.
    pub fn points_on(&self, simplex: &Simplex) -> Vec<DVector<f64>> {
        let verts: Vec<DVector<f64>> = self
            .vertex_indices
            .iter()
            .map(|&i| simplex.vertex(i).clone())
            .collect();
        self.rule.map_points(&verts)
    }
}

/// Rule on face `face_index` (the face opposite that vertex) of `reference`.
pub fn face_rule(
    reference: ReferenceElement,
    face_index: usize,
    degree: usize,
) -> Result<FaceRule> {
    face_rule_on(&reference.simplex(), face_index, degree)
}

/// Rule on face `face_index` of an arbitrary simplex.
pub fn face_rule_on(simplex: &Simplex, face_index: usize, degree: usize) -> Result<FaceRule> {
    let d = simplex.dim();
    if face_index > d {
        return Err(Error::BadFaceIndex {
            index: face_index,
            faces: d + 1,
        });
    }
    let mut rule = simplex_rule(d - 1, degree)?;
    let measure = simplex.face_measure(face_index);
    let scale = measure / rule.weight_sum();
    for w in &mut rule.weights {
        *w *= scale;
    }
    Ok(FaceRule {
        rule,
        face_index,
        vertex_indices: simplex.face_vertices(face_index),
        measure,
        normal: simplex.outward_normal(face_index),
    })
}
