use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{ReferenceElement, Simplex};
use crate::error::{Error, Result};
use crate::serde_util::{serialize_matrix, serialize_vector};

/// Relative tolerance used to treat two edge lengths as tied.
const TIE_TOL: f64 = 1e-12;
/// Relative tolerance for checking the parameter constraints.
const PARAM_TOL: f64 = 1e-10;

/// Which of the two tetrahedral configurations a decomposition uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TetCase {
    /// The third and fourth vertex lie in the same half-space; uses `A_tilde_1`.
    TypeI,
    /// They lie in different half-spaces; uses `A_tilde_2` (negated `s1`).
    TypeII,
}

/// Entries of the shear matrix `A_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeParams {
    Triangle {
        s: f64,
        t: f64,
    },
    Tetrahedron {
        s1: f64,
        t1: f64,
        s21: f64,
        s22: f64,
        t2: f64,
        case: TetCase,
    },
}

/// Factorisation `x0 = A_T0 (A_tilde A_hat x_ref) + b_T0` of an element map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalDecomposition {
    /// Diagonal of `A_hat`.
    pub alphas: Vec<f64>,
    pub params: ShapeParams,
    /// Orthogonal `A_T0`; its determinant may be -1.
    #[serde(serialize_with = "serialize_matrix")]
    pub rotation: DMatrix<f64>,
    #[serde(serialize_with = "serialize_vector")]
    pub translation: DVector<f64>,
    pub reference: ReferenceElement,
    /// `permutation[j]` is the input index of canonical vertex `x_{j+1}`.
    pub permutation: Vec<usize>,
}

impl CanonicalDecomposition {
    /// Builds a decomposition directly from its parameters, with the identity
    /// vertex permutation. The parameter constraints are checked.
    pub fn from_parameters(
        alphas: Vec<f64>,
        params: ShapeParams,
        rotation: DMatrix<f64>,
        translation: DVector<f64>,
    ) -> Result<Self> {
        let d = alphas.len();
        let reference = match (d, params) {
            (2, ShapeParams::Triangle { .. }) => ReferenceElement::Triangle,
            (3, ShapeParams::Tetrahedron { case, .. }) => match case {
                TetCase::TypeI => ReferenceElement::TetTypeI,
                TetCase::TypeII => ReferenceElement::TetTypeII,
            },
            (2 | 3, _) => {
                return Err(Error::InvalidArgument(
                    "shape parameters do not match the dimension".into(),
                ))
            }
            _ => return Err(Error::InvalidDimension(d)),
        };
        if rotation.shape() != (d, d) || translation.len() != d {
            return Err(Error::InvalidArgument(
                "rotation or translation has the wrong size".into(),
            ));
        }
        let decomp = Self {
            alphas,
            params,
            rotation,
            translation,
            reference,
            permutation: (0..=d).collect(),
        };
        decomp.validate()?;
        Ok(decomp)
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn case(&self) -> Option<TetCase> {
        match self.params {
            ShapeParams::Triangle { .. } => None,
            ShapeParams::Tetrahedron { case, .. } => Some(case),
        }
    }

    pub fn a_hat(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.alphas))
    }

    pub fn a_tilde(&self) -> DMatrix<f64> {
        match self.params {
            ShapeParams::Triangle { s, t } => DMatrix::from_row_slice(2, 2, &[1.0, s, 0.0, t]),
            ShapeParams::Tetrahedron {
                s1,
                t1,
                s21,
                s22,
                t2,
                case,
            } => {
                let s1 = match case {
                    TetCase::TypeI => s1,
                    TetCase::TypeII => -s1,
                };
                DMatrix::from_row_slice(3, 3, &[1.0, s1, s21, 0.0, t1, s22, 0.0, 0.0, t2])
            }
        }
    }

    /// `A_T = A_tilde A_hat`.
    pub fn a_t(&self) -> DMatrix<f64> {
        self.a_tilde() * self.a_hat()
    }

    /// `A = A_T0 A_T`, the linear part of the full map from the reference element.
    pub fn a_full(&self) -> DMatrix<f64> {
        &self.rotation * self.a_t()
    }

    /// Direction vectors `r_1..r_d`: the columns of `A_tilde`.
    pub fn directions(&self) -> Vec<DVector<f64>> {
        let a = self.a_tilde();
        (0..self.dim()).map(|j| a.column(j).into_owned()).collect()
    }

    /// Vertices of the canonically placed element `T = A_T(T_ref)`.
    pub fn canonical_vertices(&self) -> Vec<DVector<f64>> {
        let a = self.a_t();
        self.reference.vertices().iter().map(|v| &a * v).collect()
    }

    pub fn canonical_simplex(&self) -> Simplex {
        Simplex::from_points(self.canonical_vertices()).expect("validated decomposition")
    }

    /// Image of the reference vertices under the full map, in canonical order.
    pub fn reconstruct(&self) -> Vec<DVector<f64>> {
        self.canonical_vertices()
            .iter()
            .map(|v| &self.rotation * v + &self.translation)
            .collect()
    }

    /// Largest distance between a reconstructed vertex and the matching input vertex.
    pub fn reconstruction_error(&self, simplex: &Simplex) -> f64 {
        self.reconstruct()
            .iter()
            .zip(&self.permutation)
            .map(|(x, &i)| (x - simplex.vertex(i)).norm())
            .fold(0.0, f64::max)
    }

    /// Input vertices reordered into canonical order.
    pub fn canonical_order(&self, simplex: &Simplex) -> Simplex {
        Simplex::from_points(
            self.permutation
                .iter()
                .map(|&i| simplex.vertex(i).clone())
                .collect(),
        )
        .expect("permutation of a valid simplex")
    }

    /// Checks every parameter constraint of the decomposition.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::NoAdmissibleLabeling(what.to_string()));
        let tol = PARAM_TOL;
        if self.alphas.iter().any(|&a| !(a > 0.0)) {
            return bad("non-positive alpha");
        }
        let a1 = self.alphas[0];
        let scale = a1 * tol;
        match self.params {
            ShapeParams::Triangle { s, t } => {
                if (s * s + t * t - 1.0).abs() > tol || !(t > 0.0) {
                    return bad("s^2 + t^2 = 1, t > 0");
                }
                if self.alphas[1] > a1 + scale {
                    return bad("alpha2 <= alpha1");
                }
            }
            ShapeParams::Tetrahedron {
                s1,
                t1,
                s21,
                s22,
                t2,
                ..
            } => {
                let (a2, a3) = (self.alphas[1], self.alphas[2]);
                if (s1 * s1 + t1 * t1 - 1.0).abs() > tol || !(s1 > 0.0) || !(t1 > 0.0) {
                    return bad("s1^2 + t1^2 = 1, s1 > 0, t1 > 0");
                }
                if (s21 * s21 + s22 * s22 + t2 * t2 - 1.0).abs() > tol || !(t2 > 0.0) {
                    return bad("s21^2 + s22^2 + t2^2 = 1, t2 > 0");
                }
                if a2 * s1 > a1 / 2.0 + scale || a3 * s21 > a1 / 2.0 + scale {
                    return bad("alpha2 s1 <= alpha1/2, alpha3 s21 <= alpha1/2");
                }
                if a2 > a3 + scale || a3 > a1 + scale {
                    return bad("alpha2 <= alpha3 <= alpha1");
                }
            }
        }
        let d = self.dim();
        let orth = (self.rotation.transpose() * &self.rotation - DMatrix::identity(d, d)).amax();
        if orth > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "rotation is not orthogonal (deviation {orth:e})"
            )));
        }
        Ok(())
    }
}

/// Index of the longest (or shortest) edge, ties going to the first edge in
/// lexicographic order.
fn pick_edge(edges: &[(usize, usize, f64)], longest: bool, scale: f64) -> usize {
    let mut best = 0;
    for (i, e) in edges.iter().enumerate().skip(1) {
        let better = if longest {
            e.2 > edges[best].2 + TIE_TOL * scale
        } else {
            e.2 < edges[best].2 - TIE_TOL * scale
        };
        if better {
            best = i;
        }
    }
    best
}

/// Orthonormal frame from the edge vectors `x_j - x_1`, j = 2..=d+1, by
/// Gram-Schmidt. Returns the frame as matrix columns.
fn edge_frame(points: &[&DVector<f64>]) -> DMatrix<f64> {
    let d = points[0].len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    for p in &points[1..] {
        let mut w = *p - points[0];
        for _ in 0..2 {
            for u in &cols {
                let c = w.dot(u);
                w -= u * c;
            }
        }
        let n = w.norm();
        cols.push(w / n);
    }
    DMatrix::from_columns(&cols)
}

/// Computes the canonical decomposition of a triangle or tetrahedron.
///
/// Ties between equally long edges go to the lexicographically smallest
/// vertex-index pair, so the result is deterministic.
pub fn canonical_decompose(simplex: &Simplex) -> Result<CanonicalDecomposition> {
    match simplex.dim() {
        2 => decompose_triangle(simplex),
        3 => decompose_tetrahedron(simplex),
        d => Err(Error::InvalidDimension(d)),
    }
}

fn decompose_triangle(simplex: &Simplex) -> Result<CanonicalDecomposition> {
    let h = simplex.diameter();
    let edges = simplex.edges();
    let (i, j, _) = edges[pick_edge(&edges, true, h)];
    let x1 = 3 - i - j;
    let d_i = (simplex.vertex(i) - simplex.vertex(x1)).norm();
    let d_j = (simplex.vertex(j) - simplex.vertex(x1)).norm();
    // i < j, so on a tie the smaller index becomes x2.
    let (x2, x3) = if d_j > d_i + TIE_TOL * h {
        (j, i)
    } else {
        (i, j)
    };
    let p1 = simplex.vertex(x1);
    let p2 = simplex.vertex(x2);
    let p3 = simplex.vertex(x3);
    let rotation = edge_frame(&[p1, p2, p3]);
    let c3 = rotation.transpose() * (p3 - p1);
    let a1 = (p2 - p1).norm();
    let a2 = (p3 - p1).norm();
    let decomp = CanonicalDecomposition {
        alphas: vec![a1, a2],
        params: ShapeParams::Triangle {
            s: c3[0] / a2,
            t: c3[1] / a2,
        },
        rotation,
        translation: p1.clone(),
        reference: ReferenceElement::Triangle,
        permutation: vec![x1, x2, x3],
    };
    decomp.validate()?;
    Ok(decomp)
}

fn decompose_tetrahedron(simplex: &Simplex) -> Result<CanonicalDecomposition> {
    let h = simplex.diameter();
    let edges = simplex.edges();
    let (m0, m1, _) = edges[pick_edge(&edges, false, h)];
    // The four edges with exactly one endpoint on the shortest edge.
    let adjacent: Vec<(usize, usize, f64)> = edges
        .iter()
        .copied()
        .filter(|&(i, j, _)| (i == m0 || i == m1 || j == m0 || j == m1) && !(i == m0 && j == m1))
        .collect();
    let (i, j, _) = adjacent[pick_edge(&adjacent, true, h)];
    let (p, q) = if i == m0 || i == m1 { (i, j) } else { (j, i) };
    let m = if p == m0 { m1 } else { m0 };
    let r = 6 - p - q - m;

    let vp = simplex.vertex(p);
    let vq = simplex.vertex(q);
    let mid = (vp + vq) / 2.0;
    let side = (simplex.vertex(r) - &mid).dot(&(vp - vq));
    let a1sq = (vp - vq).norm_squared();
    // Both the shortest edge's far endpoint and r are on p's side: Type i.
    let (case, x1, x2) = if side >= -TIE_TOL * a1sq {
        (TetCase::TypeI, p, q)
    } else {
        (TetCase::TypeII, q, p)
    };
    let (x3, x4) = (m, r);
    let pts = [
        simplex.vertex(x1),
        simplex.vertex(x2),
        simplex.vertex(x3),
        simplex.vertex(x4),
    ];
    let rotation = edge_frame(&pts);
    let c3 = rotation.transpose() * (pts[2] - pts[0]);
    let c4 = rotation.transpose() * (pts[3] - pts[0]);
    let a1 = (pts[1] - pts[0]).norm();
    let a2 = match case {
        TetCase::TypeI => (pts[2] - pts[0]).norm(),
        TetCase::TypeII => (pts[2] - pts[1]).norm(),
    };
    let a3 = (pts[3] - pts[0]).norm();
    let s1 = match case {
        TetCase::TypeI => c3[0] / a2,
        TetCase::TypeII => (a1 - c3[0]) / a2,
    };
    let decomp = CanonicalDecomposition {
        alphas: vec![a1, a2, a3],
        params: ShapeParams::Tetrahedron {
            s1,
            t1: c3[1] / a2,
            s21: c4[0] / a3,
            s22: c4[1] / a3,
            t2: c4[2] / a3,
            case,
        },
        rotation,
        translation: pts[0].clone(),
        reference: match case {
            TetCase::TypeI => ReferenceElement::TetTypeI,
            TetCase::TypeII => ReferenceElement::TetTypeII,
        },
        permutation: vec![x1, x2, x3, x4],
    };
    decomp.validate()?;
    Ok(decomp)
}

/// Direction-weighted lengths: `(alpha1, alpha2 t)` or `(alpha1, alpha2 t1, alpha3 t2)`.
pub fn mathscr_h(decomp: &CanonicalDecomposition) -> Vec<f64> {
    let a = &decomp.alphas;
    match decomp.params {
        ShapeParams::Triangle { t, .. } => vec![a[0], a[1] * t],
        ShapeParams::Tetrahedron { t1, t2, .. } => vec![a[0], a[1] * t1, a[2] * t2],
    }
}

/// Smallest `M` for which `|s22| <= M alpha2 t1 / alpha3` holds; zero in 2D.
pub fn minimal_assumption1_m(decomp: &CanonicalDecomposition) -> f64 {
    match decomp.params {
        ShapeParams::Triangle { .. } => 0.0,
        ShapeParams::Tetrahedron { t1, s22, .. } => {
            s22.abs() * decomp.alphas[2] / (decomp.alphas[1] * t1)
        }
    }
}

/// Whether `|s22| <= M alpha2 t1 / alpha3`. Always true for triangles.
pub fn check_assumption1(decomp: &CanonicalDecomposition, m: f64) -> bool {
    match decomp.params {
        ShapeParams::Triangle { .. } => true,
        ShapeParams::Tetrahedron { t1, s22, .. } => {
            s22.abs() <= m * decomp.alphas[1] * t1 / decomp.alphas[2]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionNumbers {
    pub norm_ahat: f64,
    pub cond_ahat: f64,
    pub norm_atilde: f64,
    pub cond_atilde: f64,
    pub norm_atilde_inv: f64,
    pub det_at: f64,
    pub norm_rotation: f64,
}

fn spectral(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Spectral norms and condition numbers of `A_hat`, `A_tilde` and `A_T0`.
pub fn condition_numbers(decomp: &CanonicalDecomposition) -> ConditionNumbers {
    let (hat_max, hat_min) = spectral(&decomp.a_hat());
    let (til_max, til_min) = spectral(&decomp.a_tilde());
    let (rot_max, _) = spectral(&decomp.rotation);
    ConditionNumbers {
        norm_ahat: hat_max,
        cond_ahat: hat_max / hat_min,
        norm_atilde: til_max,
        cond_atilde: til_max / til_min,
        norm_atilde_inv: 1.0 / til_min,
        det_at: decomp.a_t().determinant(),
        norm_rotation: rot_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_triangle_is_canonical() {
        let t = ReferenceElement::Triangle.simplex();
        let d = canonical_decompose(&t).unwrap();
        assert_eq!(d.alphas, vec![1.0, 1.0]);
        assert_eq!(d.params, ShapeParams::Triangle { s: 0.0, t: 1.0 });
        assert_relative_eq!(d.rotation, DMatrix::identity(2, 2));
        assert_relative_eq!(d.translation, DVector::zeros(2));
        assert_eq!(d.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn stretched_right_triangle() {
        let t = Simplex::new(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = canonical_decompose(&t).unwrap();
        assert_relative_eq!(d.alphas[0], 2.0);
        assert_relative_eq!(d.alphas[1], 1.0);
        match d.params {
            ShapeParams::Triangle { s, t } => {
                assert!(s.abs() < 1e-15);
                assert_relative_eq!(t, 1.0);
            }
            _ => unreachable!(),
        }
        assert!(d.reconstruction_error(&t) < 1e-14);
    }

    #[test]
    fn mirrored_triangle_uses_reflection() {
        // Third vertex below the first edge forces det A_T0 = -1.
        let t = Simplex::new(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let d = canonical_decompose(&t).unwrap();
        assert_relative_eq!(d.rotation.determinant(), -1.0, epsilon = 1e-14);
        assert!(d.reconstruction_error(&t) < 1e-14);
    }

    #[test]
    fn type_ii_tetrahedron() {
        let t = ReferenceElement::TetTypeII.simplex();
        let d = canonical_decompose(&t).unwrap();
        assert!(d.reconstruction_error(&t) < 1e-14);
        d.validate().unwrap();
    }

    #[test]
    fn assumption1_examples() {
        let tri = canonical_decompose(&ReferenceElement::Triangle.simplex()).unwrap();
        assert!(check_assumption1(&tri, 0.0));
        let tet = |s22: f64| {
            let t2 = (1.0 - s22 * s22).sqrt();
            CanonicalDecomposition::from_parameters(
                vec![1.0, 1.0, 1.0],
                ShapeParams::Tetrahedron {
                    s1: 0.5,
                    t1: 0.75f64.sqrt(),
                    s21: 0.0,
                    s22,
                    t2,
                    case: TetCase::TypeI,
                },
                DMatrix::identity(3, 3),
                DVector::zeros(3),
            )
            .unwrap()
        };
        assert!(check_assumption1(&tet(0.0), 1e-9));
        // t1 is not 1 here, so use the closed form directly
        let d = tet(0.5);
        let t1 = 0.75f64.sqrt();
        assert_eq!(check_assumption1(&d, 0.4), 0.5 <= 0.4 * t1);
        assert_relative_eq!(minimal_assumption1_m(&d), 0.5 / t1, epsilon = 1e-15);
    }

    #[test]
    fn from_parameters_rejects_bad_params() {
        let err = CanonicalDecomposition::from_parameters(
            vec![1.0, 1.0],
            ShapeParams::Triangle { s: 0.6, t: -0.8 },
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoAdmissibleLabeling(_)));
    }

    #[test]
    fn diagonal_condition_number() {
        let d = CanonicalDecomposition::from_parameters(
            vec![2.0, 1.0],
            ShapeParams::Triangle { s: 0.0, t: 1.0 },
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .unwrap();
        let c = condition_numbers(&d);
        assert_relative_eq!(c.cond_ahat, 2.0, epsilon = 1e-14);
        assert_relative_eq!(c.norm_atilde, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.cond_atilde, 1.0, epsilon = 1e-14);
    }
}
