//! Simplices, reference elements and the geometric parameters of an element.
//!
//! A physical simplex `T0` is written as `T0 = Phi_T0(Phi_T(T_ref))`, where
//! `Phi_T(x) = A_T x` with `A_T = A_tilde * A_hat` maps a reference element
//! onto a canonically placed simplex `T`, and `Phi_T0` is a rigid motion
//! (rotation, possibly with a mirror, plus translation). See
//! [`canonical_decompose`].

mod decomposition;
mod report;

pub use decomposition::{
    canonical_decompose, check_assumption1, condition_numbers, mathscr_h, minimal_assumption1_m,
    CanonicalDecomposition, ConditionNumbers, ShapeParams, TetCase,
};
pub use report::{angle_report, param_h_t, param_h_t0, GeometricReport};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative volume threshold below which a simplex counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// The reference elements: the unit triangle, and the two reference tetrahedra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ReferenceElement {
    /// (0,0), (1,0), (0,1)
    Triangle,
    /// (0,0,0), (1,0,0), (0,1,0), (0,0,1)
    TetTypeI,
    /// (0,0,0), (1,0,0), (1,1,0), (0,0,1)
    TetTypeII,
}

impl ReferenceElement {
    pub fn dim(self) -> usize {
        match self {
            ReferenceElement::Triangle => 2,
            _ => 3,
        }
    }

    pub fn vertices(self) -> Vec<DVector<f64>> {
        let raw: &[&[f64]] = match self {
            ReferenceElement::Triangle => &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]],
            ReferenceElement::TetTypeI => &[
                &[0.0, 0.0, 0.0],
                &[1.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0],
                &[0.0, 0.0, 1.0],
            ],
            ReferenceElement::TetTypeII => &[
                &[0.0, 0.0, 0.0],
                &[1.0, 0.0, 0.0],
                &[1.0, 1.0, 0.0],
                &[0.0, 0.0, 1.0],
            ],
        };
        raw.iter().map(|v| DVector::from_column_slice(v)).collect()
    }

    pub fn simplex(self) -> Simplex {
        Simplex::from_points(self.vertices()).expect("reference elements are nondegenerate")
    }

    /// Measure of the reference element (1/2 or 1/6).
    pub fn measure(self) -> f64 {
        match self {
            ReferenceElement::Triangle => 0.5,
            _ => 1.0 / 6.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReferenceElement::Triangle => "triangle",
            ReferenceElement::TetTypeI => "tet_type_i",
            ReferenceElement::TetTypeII => "tet_type_ii",
        }
    }
}

/// A nondegenerate triangle or tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    vertices: Vec<DVector<f64>>,
}

impl Simplex {
    /// Builds a simplex from raw coordinates, checking dimension, vertex count
    /// and nondegeneracy.
    pub fn new(vertices: &[Vec<f64>]) -> Result<Self> {
        Self::from_points(
            vertices
                .iter()
                .map(|v| DVector::from_column_slice(v))
                .collect(),
        )
    }

    pub fn from_points(vertices: Vec<DVector<f64>>) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if vertices.len() != dim + 1 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::WrongVertexCount {
                dim,
                expected: dim + 1,
                got: vertices.len(),
            });
        }
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("non-finite vertex coordinate".into()));
        }
        let s = Self { vertices };
        let h = s.diameter();
        let volume = s.volume();
        let tolerance = DEGENERACY_TOL * h.powi(dim as i32);
        if !(volume > tolerance) {
            return Err(Error::DegenerateSimplex { volume, tolerance });
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &DVector<f64> {
        &self.vertices[i]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| v.iter().copied().collect()).collect()
    }

    /// Columns `v_i - v_0`, i = 1..=d.
    pub fn edge_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.vertices[c + 1][r] - self.vertices[0][r])
    }

    pub fn signed_volume(&self) -> f64 {
        let d = self.dim();
        self.edge_matrix().determinant() / factorial(d)
    }

    pub fn volume(&self) -> f64 {
        self.signed_volume().abs()
    }

    /// All edges `(i, j, |v_i - v_j|)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push((i, j, (&self.vertices[i] - &self.vertices[j]).norm()));
            }
        }
        out
    }

    /// Diameter, i.e. the longest edge.
    pub fn diameter(&self) -> f64 {
        self.edges().iter().map(|e| e.2).fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> DVector<f64> {
        let n = self.vertices.len() as f64;
        self.vertices
            .iter()
            .fold(DVector::zeros(self.dim()), |acc, v| acc + v)
            / n
    }

    /// Vertex indices of the face opposite vertex `i`, increasing.
    pub fn face_vertices(&self, i: usize) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&j| j != i).collect()
    }

    /// Length (d = 2) or area (d = 3) of the face opposite vertex `i`.
    pub fn face_measure(&self, i: usize) -> f64 {
        let f = self.face_vertices(i);
        let a = &self.vertices[f[0]];
        let b = &self.vertices[f[1]];
        if self.dim() == 2 {
            (b - a).norm()
        } else {
            let c = &self.vertices[f[2]];
            0.5 * cross(&(b - a), &(c - a)).norm()
        }
    }

    /// Outward unit normal on the face opposite vertex `i`.
    pub fn outward_normal(&self, i: usize) -> DVector<f64> {
        let f = self.face_vertices(i);
        let a = &self.vertices[f[0]];
        let b = &self.vertices[f[1]];
        let mut n = if self.dim() == 2 {
            let e = b - a;
            DVector::from_column_slice(&[e[1], -e[0]])
        } else {
            let c = &self.vertices[f[2]];
            cross(&(b - a), &(c - a))
        };
        n /= n.norm();
        if n.dot(&(&self.vertices[i] - a)) > 0.0 {
            n = -n;
        }
        n
    }

    /// Diameter of the largest inscribed ball, `2 d |T| / sum |F_i|`.
    pub fn inradius_diameter(&self) -> f64 {
        let d = self.dim();
        let surface: f64 = (0..=d).map(|i| self.face_measure(i)).sum();
        2.0 * d as f64 * self.volume() / surface
    }

    /// Radius of the circumscribed sphere.
    pub fn circumradius(&self) -> f64 {
        // |c - v_0|^2 = |c - v_i|^2  <=>  2 (v_i - v_0) . (c - v_0) = |v_i - v_0|^2
        let e = self.edge_matrix();
        let rhs = DVector::from_fn(self.dim(), |i, _| e.column(i).norm_squared());
        let y = (2.0 * e.transpose())
            .lu()
            .solve(&rhs)
            .expect("nondegenerate simplex has a circumcentre");
        y.norm()
    }

    /// Interior angles of every triangular face (3 for a triangle, 12 for a tetrahedron).
    pub fn face_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        let triangles: Vec<[usize; 3]> = if n == 3 {
            vec![[0, 1, 2]]
        } else {
            vec![[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
        };
        let mut out = Vec::with_capacity(3 * triangles.len());
        for t in triangles {
            for k in 0..3 {
                let p = &self.vertices[t[k]];
                let q = &self.vertices[t[(k + 1) % 3]];
                let r = &self.vertices[t[(k + 2) % 3]];
                out.push(angle_between(&(q - p), &(r - p)));
            }
        }
        out
    }

    /// Interior dihedral angles at the six edges of a tetrahedron.
    pub fn dihedral_angles(&self) -> Vec<f64> {
        assert_eq!(self.dim(), 3, "dihedral angles need a tetrahedron");
        let mut out = Vec::with_capacity(6);
        for (i, j, _) in self.edges() {
            let others: Vec<usize> = (0..4).filter(|&m| m != i && m != j).collect();
            let a = &self.vertices[i];
            let e = &self.vertices[j] - a;
            let e = &e / e.norm();
            let project = |p: &DVector<f64>| {
                let w = p - a;
                &w - &e * w.dot(&e)
            };
            let pc = project(&self.vertices[others[0]]);
            let pd = project(&self.vertices[others[1]]);
            out.push(angle_between(&pc, &pd));
        }
        out
    }
}

pub(crate) fn factorial(d: usize) -> f64 {
    (1..=d).product::<usize>() as f64
}

pub(crate) fn cross(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Angle between two vectors; the cosine is clamped to [-1, 1].
pub fn angle_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn reference_measures() {
        for r in [
            ReferenceElement::Triangle,
            ReferenceElement::TetTypeI,
            ReferenceElement::TetTypeII,
        ] {
            assert_relative_eq!(r.simplex().volume(), r.measure(), epsilon = 1e-15);
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let err = Simplex::new(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSimplex { .. }));
    }

    #[test]
    fn wrong_vertex_count() {
        let err = Simplex::new(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::WrongVertexCount { .. }));
        let err = Simplex::new(&[vec![0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidDimension(1)));
    }

    #[test]
    fn normals_point_outward() {
        let t = ReferenceElement::Triangle.simplex();
        assert_relative_eq!(t.outward_normal(2), DVector::from_column_slice(&[0.0, -1.0]));
        assert_relative_eq!(t.outward_normal(1), DVector::from_column_slice(&[-1.0, 0.0]));
        let s = 0.5f64.sqrt();
        assert_relative_eq!(
            t.outward_normal(0),
            DVector::from_column_slice(&[s, s]),
            epsilon = 1e-15
        );
        let tet = ReferenceElement::TetTypeI.simplex();
        assert_relative_eq!(tet.face_measure(0), 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn tetrahedron_angles() {
        let tet = ReferenceElement::TetTypeI.simplex();
        let face_max = tet.face_angles().into_iter().fold(0.0, f64::max);
        assert_relative_eq!(face_max, PI / 2.0, epsilon = 1e-14);
        let dihedral_max = tet.dihedral_angles().into_iter().fold(0.0, f64::max);
        assert_relative_eq!(dihedral_max, PI / 2.0, epsilon = 1e-14);
        // Regular tetrahedron: every dihedral angle is acos(1/3).
        let reg = Simplex::new(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ])
        .unwrap();
        for a in reg.dihedral_angles() {
            assert_relative_eq!(a, (1.0f64 / 3.0).acos(), epsilon = 1e-14);
        }
    }

    #[test]
    fn circumradius_of_right_triangle() {
        let t = Simplex::new(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_relative_eq!(t.circumradius(), 5f64.sqrt() / 2.0, epsilon = 1e-14);
    }
}
