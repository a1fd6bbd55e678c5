//! Raviart-Thomas spaces on the reference elements and local interpolation.
//!
//! Degrees of freedom are ordered faces first (face `i` is opposite vertex `i`,
//! each with `dim P^k(F)` moments), then interior moments against
//! `P^{k-1}(T)^d`, component-major. Face test polynomials are written in the
//! face-local coordinates `lambda`, where the face point is
//! `a + lambda_1 (b - a) [+ lambda_2 (c - a)]` for the face vertices `a < b < c`,
//! and are orthonormal on the unit parameter simplex.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::{FieldRef, VectorField};
use crate::geometry::{canonical_decompose, ReferenceElement, Simplex};
use crate::poly::{self, Polynomial};
use crate::quadrature::{face_rule_on, simplex_rule, FaceRule, QuadratureRule};
use crate::transforms::AffineMap;

/// Highest supported order.
pub const MAX_K: usize = 2;
/// Moment matrices with a larger condition number count as singular.
pub const UNISOLVENCE_LIMIT: f64 = 1e12;

/// Dimension of `RT^k` on a simplex in `R^d`.
pub fn rt_dim(k: usize, d: usize) -> usize {
    match d {
        2 => (k + 1) * (k + 3),
        3 => (k + 1) * (k + 2) * (k + 4) / 2,
        _ => panic!("dimension {d} not supported"),
    }
}

/// Quadrature degree used for the moments of a general field.
fn dof_degree(k: usize) -> usize {
    2 * k + 8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    /// Normal moment on face `face` against face polynomial `poly`.
    Face { face: usize, poly: usize },
    /// Moment of component `component` against interior polynomial `poly`.
    Interior { component: usize, poly: usize },
}

/// `RT^k` on one reference element, with the basis dual to the moment DOFs.
#[derive(Debug)]
pub struct RtSpace {
    k: usize,
    reference: ReferenceElement,
    generators: Vec<Vec<Polynomial>>,
    basis: Vec<Vec<Polynomial>>,
    dofs: Vec<DofKind>,
    face_tests: Vec<Polynomial>,
    interior_tests: Vec<Polynomial>,
    face_rules: Vec<FaceRule>,
    volume_rule: QuadratureRule,
    moment_condition: f64,
}

/// Gram-Schmidt on `polys` in the inner product given by `points`/`weights`.
fn orthonormalize(polys: Vec<Polynomial>, points: &[Vec<f64>], weights: &[f64]) -> Vec<Polynomial> {
    let inner = |a: &Polynomial, b: &Polynomial| -> f64 {
        points
            .iter()
            .zip(weights)
            .map(|(x, w)| w * a.eval(x) * b.eval(x))
            .sum()
    };
    let mut out: Vec<Polynomial> = Vec::with_capacity(polys.len());
    for p in polys {
        let mut q = p;
        for _ in 0..2 {
            for e in &out {
                let c = inner(&q, e);
                q.axpy(-c, e);
            }
        }
        let n = inner(&q, &q).sqrt();
        out.push(q.scaled(1.0 / n));
    }
    out
}

fn rule_points(rule: &QuadratureRule, vertices: &[DVector<f64>]) -> Vec<Vec<f64>> {
    rule.map_points(vertices)
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect()
}

fn basis_generators(dim: usize, k: usize) -> Vec<Vec<Polynomial>> {
    let mut out = Vec::new();
    for c in 0..dim {
        for e in poly::monomials(dim, k) {
            let mut v = vec![Polynomial::zero(dim); dim];
            v[c] = Polynomial::monomial(dim, e, 1.0);
            out.push(v);
        }
    }
    for e in poly::homogeneous_monomials(dim, k) {
        let m = Polynomial::monomial(dim, e, 1.0);
        out.push((0..dim).map(|i| m.mul_variable(i)).collect());
    }
    out
}

impl RtSpace {
    /// Assembles the moment matrix over the monomial generators and inverts it.
    pub fn build(k: usize, reference: ReferenceElement) -> Result<Self> {
        if k > MAX_K {
            return Err(Error::InvalidArgument(format!(
                "RT order {k} not supported (maximum {MAX_K})"
            )));
        }
        let dim = reference.dim();
        let simplex = reference.simplex();
        let degree = dof_degree(k);

        let param_rule = simplex_rule(dim - 1, 2 * k)?;
        let param_vertices: Vec<DVector<f64>> = std::iter::once(DVector::zeros(dim - 1))
            .chain((0..dim - 1).map(|i| DVector::from_fn(dim - 1, |j, _| (i == j) as u8 as f64)))
            .collect();
        let face_tests = orthonormalize(
            poly::monomials(dim - 1, k)
                .into_iter()
                .map(|e| Polynomial::monomial(dim - 1, e, 1.0))
                .collect(),
            &rule_points(&param_rule, &param_vertices),
            &param_rule.weights,
        );

        let volume_rule = simplex_rule(dim, degree)?;
        let interior_tests = if k == 0 {
            Vec::new()
        } else {
            let rule = simplex_rule(dim, 2 * k)?;
            orthonormalize(
                poly::monomials(dim, k - 1)
                    .into_iter()
                    .map(|e| Polynomial::monomial(dim, e, 1.0))
                    .collect(),
                &rule_points(&rule, simplex.vertices()),
                &rule.weights,
            )
        };
        let face_rules = (0..=dim)
            .map(|f| face_rule_on(&simplex, f, degree))
            .collect::<Result<Vec<_>>>()?;

        let mut dofs = Vec::new();
        for face in 0..=dim {
            for p in 0..face_tests.len() {
                dofs.push(DofKind::Face { face, poly: p });
            }
        }
        for component in 0..dim {
            for p in 0..interior_tests.len() {
                dofs.push(DofKind::Interior { component, poly: p });
            }
        }
        let generators = basis_generators(dim, k);
        let n = rt_dim(k, dim);
        debug_assert_eq!(dofs.len(), n);
        debug_assert_eq!(generators.len(), n);

        let mut space = Self {
            k,
            reference,
            generators,
            basis: Vec::new(),
            dofs,
            face_tests,
            interior_tests,
            face_rules,
            volume_rule,
            moment_condition: 0.0,
        };

        let moments = space.moment_matrix();
        let sv = moments.clone().singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = smax / smin;
        if !(condition < UNISOLVENCE_LIMIT) {
            return Err(Error::UnisolvenceFailure { condition });
        }
        let inverse = moments
            .lu()
            .try_inverse()
            .ok_or(Error::UnisolvenceFailure { condition })?;
        space.basis = (0..n)
            .map(|j| {
                let mut v = vec![Polynomial::zero(dim); dim];
                for (m, g) in space.generators.iter().enumerate() {
                    for c in 0..dim {
                        v[c].axpy(inverse[(m, j)], &g[c]);
                    }
                }
                v.into_iter().map(|p| p.pruned(1e-14)).collect()
            })
            .collect();
        space.moment_condition = condition;
        Ok(space)
    }

    /// A process-wide shared instance.
    pub fn shared(k: usize, reference: ReferenceElement) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(usize, ReferenceElement), Arc<RtSpace>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(s) = cache.lock().expect("cache lock").get(&(k, reference)) {
            return Ok(s.clone());
        }
        let space = Arc::new(Self::build(k, reference)?);
        cache
            .lock()
            .expect("cache lock")
            .insert((k, reference), space.clone());
        Ok(space)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    pub fn reference(&self) -> ReferenceElement {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn dofs(&self) -> &[DofKind] {
        &self.dofs
    }

    pub fn basis(&self) -> &[Vec<Polynomial>] {
        &self.basis
    }

    pub fn generators(&self) -> &[Vec<Polynomial>] {
        &self.generators
    }

    pub fn face_tests(&self) -> &[Polynomial] {
        &self.face_tests
    }

    pub fn interior_tests(&self) -> &[Polynomial] {
        &self.interior_tests
    }

    pub fn moment_condition(&self) -> f64 {
        self.moment_condition
    }

    /// `DOF_i(g_j)` for the monomial generators.
    pub fn moment_matrix(&self) -> DMatrix<f64> {
        let n = self.generators.len();
        let mut m = DMatrix::zeros(n, n);
        for (j, g) in self.generators.iter().enumerate() {
            let vals = self.dof_values(|x| poly::eval_vector(g, x.as_slice()).into());
            m.set_column(j, &vals);
        }
        m
    }

    /// All DOF values of a function on the reference element.
    pub fn dof_values<F: Fn(&DVector<f64>) -> DVector<f64>>(&self, g: F) -> DVector<f64> {
        let dim = self.dim();
        let simplex = self.reference.simplex();
        let nf = self.face_tests.len();
        let ni = self.interior_tests.len();
        let mut out = DVector::zeros(self.len());
        for (f, rule) in self.face_rules.iter().enumerate() {
            let pts = rule.points_on(&simplex);
            for ((x, w), b) in pts.iter().zip(&rule.rule.weights).zip(&rule.rule.points) {
                let flux = g(x).dot(&rule.normal) * w;
                let lambda = &b[1..];
                for p in 0..nf {
                    out[f * nf + p] += flux * self.face_tests[p].eval(lambda);
                }
            }
        }
        if ni > 0 {
            let offset = (dim + 1) * nf;
            let pts = self.volume_rule.map_points(simplex.vertices());
            for (x, w) in pts.iter().zip(&self.volume_rule.weights) {
                let v = g(x);
                for p in 0..ni {
                    let q = self.interior_tests[p].eval(x.as_slice()) * w;
                    for c in 0..dim {
                        out[offset + c * ni + p] += v[c] * q;
                    }
                }
            }
        }
        out
    }

    /// `sum_i c_i phi_i` as a vector polynomial.
    pub fn combine(&self, coefficients: &DVector<f64>) -> Vec<Polynomial> {
        let dim = self.dim();
        let mut v = vec![Polynomial::zero(dim); dim];
        for (c, b) in coefficients.iter().zip(&self.basis) {
            for i in 0..dim {
                v[i].axpy(*c, &b[i]);
            }
        }
        v
    }
}

/// An element of `RT^k`, stored on the reference element together with the
/// affine map onto the physical element.
#[derive(Debug, Clone)]
pub struct RtInterpolant {
    space: Arc<RtSpace>,
    coefficients: DVector<f64>,
    local: Vec<Polynomial>,
    local_div: Polynomial,
    map: AffineMap,
}

impl RtInterpolant {
    pub fn new(space: Arc<RtSpace>, coefficients: DVector<f64>, map: AffineMap) -> Self {
        let local = space.combine(&coefficients);
        let local_div = poly::divergence(&local);
        Self {
            space,
            coefficients,
            local,
            local_div,
            map,
        }
    }

    pub fn space(&self) -> &Arc<RtSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Reference-to-physical map; the identity for reference interpolants.
    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    /// The interpolant on the reference element, as polynomials.
    pub fn reference_polynomials(&self) -> &[Polynomial] {
        &self.local
    }

    pub fn evaluate_reference(&self, xhat: &[f64]) -> DVector<f64> {
        poly::eval_vector(&self.local, xhat).into()
    }

    /// Value at a physical point (Piola push of the reference function).
    pub fn evaluate(&self, x: &[f64]) -> DVector<f64> {
        let xhat = self.map.apply_inverse(&DVector::from_column_slice(x));
        self.map.matrix() * self.evaluate_reference(xhat.as_slice()) / self.map.det()
    }

    pub fn divergence(&self, x: &[f64]) -> f64 {
        let xhat = self.map.apply_inverse(&DVector::from_column_slice(x));
        self.local_div.eval(xhat.as_slice()) / self.map.det()
    }
}

/// Interpolates `field` given on the reference element.
pub fn interpolate_reference(space: &Arc<RtSpace>, field: &dyn VectorField) -> RtInterpolant {
    let coeffs = space.dof_values(|x| field.value(x.as_slice()));
    RtInterpolant::new(space.clone(), coeffs, AffineMap::identity(space.dim()))
}

/// Interpolates a physical field by pulling it back to the reference element
/// of the canonical decomposition, interpolating there, and pushing forward.
pub fn interpolate_physical(k: usize, simplex: &Simplex, field: &FieldRef) -> Result<RtInterpolant> {
    let decomp = canonical_decompose(simplex)?;
    let space = RtSpace::shared(k, decomp.reference)?;
    let map = AffineMap::from_decomposition(&decomp);
    let pulled = crate::fields::pullback_field(field.clone(), &map);
    let coeffs = space.dof_values(|x| pulled.value(x.as_slice()));
    Ok(RtInterpolant::new(space, coeffs, map))
}

/// Same interpolant computed from moments taken directly on the physical
/// element: physical normals and face measures, physical quadrature points and
/// the interior test functions `A^{-T} (q o Phi^{-1})`.
pub fn interpolate_physical_direct(
    k: usize,
    simplex: &Simplex,
    field: &dyn VectorField,
) -> Result<RtInterpolant> {
    let decomp = canonical_decompose(simplex)?;
    let space = RtSpace::shared(k, decomp.reference)?;
    let map = AffineMap::from_decomposition(&decomp);
    let dim = simplex.dim();
    // The element with vertices in canonical order, so that face i of it is the
    // image of reference face i.
    let ordered = decomp.canonical_order(simplex);
    let sign = map.det().signum();
    let degree = dof_degree(k);
    let nf = space.face_tests().len();
    let ni = space.interior_tests().len();
    let mut coeffs = DVector::zeros(space.len());
    for f in 0..=dim {
        let rule = face_rule_on(&ordered, f, degree)?;
        let pts = rule.points_on(&ordered);
        for ((x, w), b) in pts.iter().zip(&rule.rule.weights).zip(&rule.rule.points) {
            let flux = field.value(x.as_slice()).dot(&rule.normal) * w;
            for p in 0..nf {
                coeffs[f * nf + p] += sign * flux * space.face_tests()[p].eval(&b[1..]);
            }
        }
    }
    if ni > 0 {
        let rule = simplex_rule(dim, degree)?;
        let measure = ordered.volume();
        let scale = measure / rule.weight_sum();
        let inv_t = map.inverse_matrix().transpose();
        let offset = (dim + 1) * nf;
        for (x, w) in rule.map_points(ordered.vertices()).iter().zip(&rule.weights) {
            let v = field.value(x.as_slice());
            let xhat = map.apply_inverse(x);
            for p in 0..ni {
                let q = space.interior_tests()[p].eval(xhat.as_slice());
                for c in 0..dim {
                    let test = inv_t.column(c) * q;
                    coeffs[offset + c * ni + p] += sign * w * scale * v.dot(&test);
                }
            }
        }
    }
    Ok(RtInterpolant::new(space, coeffs, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{field_by_name, PolynomialField};
    use approx::assert_relative_eq;

    const REFS: [ReferenceElement; 3] = [
        ReferenceElement::Triangle,
        ReferenceElement::TetTypeI,
        ReferenceElement::TetTypeII,
    ];

    #[test]
    fn dimensions() {
        assert_eq!(rt_dim(0, 2), 3);
        assert_eq!(rt_dim(1, 2), 8);
        assert_eq!(rt_dim(2, 2), 15);
        assert_eq!(rt_dim(0, 3), 4);
        assert_eq!(rt_dim(1, 3), 15);
        assert_eq!(rt_dim(2, 3), 36);
    }

    #[test]
    fn duality_and_membership() {
        for r in REFS {
            for k in 0..=MAX_K {
                let s = RtSpace::build(k, r).unwrap();
                assert_eq!(s.len(), rt_dim(k, r.dim()));
                for (j, b) in s.basis().iter().enumerate() {
                    let vals = s.dof_values(|x| poly::eval_vector(b, x.as_slice()).into());
                    for i in 0..s.len() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((vals[i] - expect).abs() < 1e-10, "{r:?} k={k} ({i},{j})");
                    }
                    assert!(poly::is_in_rt_space(b, k, 1e-9));
                }
            }
        }
    }

    #[test]
    fn lowest_order_triangle_basis() {
        // phi_i = (x - P_i) / (2 |T|) = x - P_i on the unit triangle.
        let s = RtSpace::build(0, ReferenceElement::Triangle).unwrap();
        let verts = ReferenceElement::Triangle.vertices();
        for (b, p) in s.basis().iter().zip(&verts) {
            for x in [[0.2, 0.3], [0.6, 0.1]] {
                let v = poly::eval_vector(b, &x);
                assert_relative_eq!(v[0], x[0] - p[0], epsilon = 1e-12);
                assert_relative_eq!(v[1], x[1] - p[1], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn counterexample_interpolant() {
        let s = RtSpace::shared(0, ReferenceElement::Triangle).unwrap();
        let f = field_by_name("counterexample", 2).unwrap();
        let i = interpolate_reference(&s, f.as_ref());
        let v = i.evaluate(&[1.0, 1.0]);
        assert_relative_eq!(v[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(i.divergence(&[0.2, 0.1]), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn constants_are_reproduced() {
        let c = PolynomialField::new(
            "c",
            vec![Polynomial::constant(2, 1.0), Polynomial::constant(2, 1.0)],
        );
        for k in 0..=MAX_K {
            let s = RtSpace::shared(k, ReferenceElement::Triangle).unwrap();
            let i = interpolate_reference(&s, &c);
            let v = i.evaluate(&[0.3, 0.3]);
            assert_relative_eq!(v[0], 1.0, epsilon = 1e-12);
            assert_relative_eq!(v[1], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_interpolant() {
        let s = RtSpace::shared(1, ReferenceElement::TetTypeI).unwrap();
        let i = RtInterpolant::new(s.clone(), DVector::zeros(s.len()), AffineMap::identity(3));
        assert_eq!(i.evaluate(&[0.1, 0.1, 0.1]).norm(), 0.0);
    }

    #[test]
    fn paths_agree_on_a_thin_triangle() {
        let t = Simplex::new(&[vec![0.1, 0.2], vec![1.3, 0.25], vec![0.5, 0.21]]).unwrap();
        let f = field_by_name("trig", 2).unwrap();
        for k in 0..=1 {
            let a = interpolate_physical(k, &t, &f).unwrap();
            let b = interpolate_physical_direct(k, &t, f.as_ref()).unwrap();
            assert!((a.coefficients() - b.coefficients()).amax() < 1e-9);
        }
    }
}
