//! Analytic vector fields with closed-form derivatives up to order two.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{self, Polynomial};
use crate::transforms::AffineMap;

/// A smooth vector field `R^d -> R^d`.
///
/// `gradient(x)[(i, j)]` is `d v_i / d x_j`; `hessian(x)[i][(j, k)]` is
/// `d^2 v_i / d x_j d x_k`.
pub trait VectorField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn value(&self, x: &[f64]) -> DVector<f64>;
    fn gradient(&self, x: &[f64]) -> DMatrix<f64>;
    fn hessian(&self, x: &[f64]) -> Vec<DMatrix<f64>>;
    fn divergence(&self, x: &[f64]) -> f64;
    fn divergence_gradient(&self, x: &[f64]) -> DVector<f64>;
    /// Highest derivative order available.
    fn smoothness_order(&self) -> usize {
        2
    }
}

pub type FieldRef = Arc<dyn VectorField>;

/// Polynomial field with symbolic derivatives.
#[derive(Clone)]
pub struct PolynomialField {
    name: String,
    comps: Vec<Polynomial>,
    grad: Vec<Vec<Polynomial>>,
    hess: Vec<Vec<Vec<Polynomial>>>,
    div: Polynomial,
    div_grad: Vec<Polynomial>,
}

impl fmt::Debug for PolynomialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolynomialField({}: {:?})", self.name, self.comps)
    }
}

impl PolynomialField {
    pub fn new(name: impl Into<String>, comps: Vec<Polynomial>) -> Self {
        let d = comps.len();
        let grad: Vec<Vec<Polynomial>> = comps
            .iter()
            .map(|p| (0..d).map(|j| p.derivative(j)).collect())
            .collect();
        let hess = grad
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| (0..d).map(|k| g.derivative(k)).collect())
                    .collect()
            })
            .collect();
        let div = poly::divergence(&comps);
        let div_grad = (0..d).map(|j| div.derivative(j)).collect();
        Self {
            name: name.into(),
            comps,
            grad,
            hess,
            div,
            div_grad,
        }
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.comps
    }
}

impl VectorField for PolynomialField {
    fn dim(&self) -> usize {
        self.comps.len()
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|p| p.eval(x)))
    }

    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.grad[i][j].eval(x))
    }

    fn hessian(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| DMatrix::from_fn(d, d, |j, k| self.hess[i][j][k].eval(x)))
            .collect()
    }

    fn divergence(&self, x: &[f64]) -> f64 {
        self.div.eval(x)
    }

    fn divergence_gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.div_grad.iter().map(|p| p.eval(x)))
    }

    fn smoothness_order(&self) -> usize {
        usize::MAX
    }
}

/// Field with components `v_i(x) = amp_i * prod_j sin(freq_ij x_j + phase_ij)`.
///
/// Factors with zero frequency and phase `pi/2` are constant 1, so this covers
/// products of sines and cosines in any subset of the variables.
#[derive(Debug, Clone)]
pub struct SineProductField {
    name: String,
    amp: Vec<f64>,
    freq: Vec<Vec<f64>>,
    phase: Vec<Vec<f64>>,
}

impl SineProductField {
    pub fn new(
        name: impl Into<String>,
        amp: Vec<f64>,
        freq: Vec<Vec<f64>>,
        phase: Vec<Vec<f64>>,
    ) -> Self {
        let d = amp.len();
        assert!(freq.len() == d && phase.len() == d);
        assert!(freq.iter().chain(&phase).all(|r| r.len() == d));
        Self {
            name: name.into(),
            amp,
            freq,
            phase,
        }
    }

    fn factors(&self, i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.amp.len();
        let arg = |j: usize| self.freq[i][j] * x[j] + self.phase[i][j];
        ((0..d).map(|j| arg(j).sin()).collect(), (0..d).map(|j| arg(j).cos()).collect())
    }

    fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let d = self.amp.len();
        let (s, c) = self.factors(i, x);
        (0..d)
            .map(|k| {
                let mut v = self.amp[i] * self.freq[i][k] * c[k];
                for (j, sj) in s.iter().enumerate() {
                    if j != k {
                        v *= sj;
                    }
                }
                v
            })
            .collect()
    }

    fn component_hessian(&self, i: usize, x: &[f64]) -> DMatrix<f64> {
        let d = self.amp.len();
        let (s, c) = self.factors(i, x);
        let w = &self.freq[i];
        DMatrix::from_fn(d, d, |k, l| {
            let mut v = self.amp[i];
            for j in 0..d {
                v *= if j == k && j == l {
                    -w[j] * w[j] * s[j]
                } else if j == k || j == l {
                    w[j] * c[j]
                } else {
                    s[j]
                };
            }
            v
        })
    }
}

impl VectorField for SineProductField {
    fn dim(&self) -> usize {
        self.amp.len()
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            self.amp[i] * self.factors(i, x).0.iter().product::<f64>()
        })
    }

    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let rows: Vec<Vec<f64>> = (0..d).map(|i| self.component_gradient(i, x)).collect();
        DMatrix::from_fn(d, d, |i, j| rows[i][j])
    }

    fn hessian(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        (0..self.dim())
            .map(|i| self.component_hessian(i, x))
            .collect()
    }

    fn divergence(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| self.component_gradient(i, x)[i])
            .sum()
    }

    fn divergence_gradient(&self, x: &[f64]) -> DVector<f64> {
        let d = self.dim();
        let mut out = DVector::zeros(d);
        for i in 0..d {
            let h = self.component_hessian(i, x);
            for k in 0..d {
                out[k] += h[(i, k)];
            }
        }
        out
    }

    fn smoothness_order(&self) -> usize {
        usize::MAX
    }
}

/// The Piola pullback `x_ref -> det(A) A^{-1} v(A x_ref + b)` of a field
/// through an affine map. The chain rule is exact because the Jacobian is
/// constant.
#[derive(Debug, Clone)]
pub struct PulledBack {
    inner: FieldRef,
    map: AffineMap,
}

impl PulledBack {
    pub fn new(inner: FieldRef, map: AffineMap) -> Self {
        assert_eq!(inner.dim(), map.dim());
        Self { inner, map }
    }

    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    fn image(&self, x: &[f64]) -> Vec<f64> {
        self.map
            .apply(&DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }
}

impl VectorField for PulledBack {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn name(&self) -> String {
        format!("pullback({})", self.inner.name())
    }

    fn value(&self, x: &[f64]) -> DVector<f64> {
        self.map.inverse_matrix() * self.inner.value(&self.image(x)) * self.map.det()
    }

    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        self.map.inverse_matrix() * self.inner.gradient(&self.image(x)) * self.map.matrix()
            * self.map.det()
    }

    fn hessian(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let a = self.map.matrix();
        let inv = self.map.inverse_matrix();
        let d = self.dim();
        let inner: Vec<DMatrix<f64>> = self
            .inner
            .hessian(&self.image(x))
            .iter()
            .map(|h| a.transpose() * h * a)
            .collect();
        (0..d)
            .map(|i| {
                let mut out = DMatrix::zeros(d, d);
                for (m, hm) in inner.iter().enumerate() {
                    out += hm * inv[(i, m)];
                }
                out * self.map.det()
            })
            .collect()
    }

    fn divergence(&self, x: &[f64]) -> f64 {
        self.map.det() * self.inner.divergence(&self.image(x))
    }

    fn divergence_gradient(&self, x: &[f64]) -> DVector<f64> {
        self.map.matrix().transpose() * self.inner.divergence_gradient(&self.image(x)) * self.map.det()
    }

    fn smoothness_order(&self) -> usize {
        self.inner.smoothness_order()
    }
}

/// Pulls `field` back through `map`.
pub fn pullback_field(field: FieldRef, map: &AffineMap) -> FieldRef {
    Arc::new(PulledBack::new(field, map.clone()))
}

/// Pushes `field` forward through `map`: `x -> A v(A^{-1}(x - b)) / det(A)`.
pub fn pushforward_field(field: FieldRef, map: &AffineMap) -> FieldRef {
    Arc::new(PulledBack::new(field, map.inverse()))
}

fn p(dim: usize, terms: &[([u8; 3], f64)]) -> Polynomial {
    let mut out = Polynomial::zero(dim);
    for (e, c) in terms {
        out.add_term(*e, *c);
    }
    out
}

fn polynomial_catalog(dim: usize) -> Vec<PolynomialField> {
    let (x, y, z) = ([1, 0, 0], [0, 1, 0], [0, 0, 1]);
    let one = [0, 0, 0];
    if dim == 2 {
        vec![
            PolynomialField::new("poly0", vec![p(2, &[(one, 1.0)]), p(2, &[(one, -0.5)])]),
            PolynomialField::new(
                "poly1",
                vec![
                    p(2, &[(one, 0.3), (x, 1.0), (y, 2.0)]),
                    p(2, &[(x, 3.0), (y, -1.0)]),
                ],
            ),
            PolynomialField::new(
                "poly2",
                vec![
                    p(2, &[(x, 1.0), ([2, 0, 0], 0.5), ([1, 1, 0], -1.0)]),
                    p(2, &[(one, 1.0), ([0, 2, 0], 2.0), ([1, 1, 0], 0.25)]),
                ],
            ),
            PolynomialField::new(
                "poly3",
                vec![
                    p(2, &[([3, 0, 0], 1.0), ([1, 2, 0], -0.5), (y, 1.0)]),
                    p(2, &[([2, 1, 0], 0.75), ([0, 3, 0], -1.0), (one, 0.2)]),
                ],
            ),
            PolynomialField::new("linear", vec![p(2, &[(x, 1.0)]), p(2, &[(y, 1.0)])]),
            PolynomialField::new(
                "counterexample",
                vec![Polynomial::zero(2), p(2, &[([0, 2, 0], 1.0)])],
            ),
            PolynomialField::new(
                "counterexample_cubic",
                vec![Polynomial::zero(2), p(2, &[([0, 3, 0], 1.0)])],
            ),
        ]
    } else {
        vec![
            PolynomialField::new(
                "poly0",
                vec![p(3, &[(one, 1.0)]), p(3, &[(one, -0.5)]), p(3, &[(one, 0.25)])],
            ),
            PolynomialField::new(
                "poly1",
                vec![
                    p(3, &[(one, 0.3), (x, 1.0), (y, 2.0)]),
                    p(3, &[(x, 3.0), (z, -1.0)]),
                    p(3, &[(y, 0.5), (z, 1.5)]),
                ],
            ),
            PolynomialField::new(
                "poly2",
                vec![
                    p(3, &[(x, 1.0), ([2, 0, 0], 0.5), ([0, 1, 1], -1.0)]),
                    p(3, &[(one, 1.0), ([0, 2, 0], 2.0), ([1, 0, 1], 0.25)]),
                    p(3, &[([1, 1, 0], 1.0), ([0, 0, 2], -0.5)]),
                ],
            ),
            PolynomialField::new(
                "poly3",
                vec![
                    p(3, &[([3, 0, 0], 1.0), ([1, 1, 1], -0.5), (y, 1.0)]),
                    p(3, &[([2, 1, 0], 0.75), ([0, 3, 0], -1.0), (one, 0.2)]),
                    p(3, &[([0, 1, 2], 0.5), ([0, 0, 3], 0.3)]),
                ],
            ),
            PolynomialField::new(
                "linear",
                vec![p(3, &[(x, 1.0)]), p(3, &[(y, 1.0)]), p(3, &[(z, 1.0)])],
            ),
            PolynomialField::new(
                "counterexample",
                vec![
                    Polynomial::zero(3),
                    p(3, &[([0, 2, 0], 1.0)]),
                    Polynomial::zero(3),
                ],
            ),
            PolynomialField::new(
                "counterexample_cubic",
                vec![
                    Polynomial::zero(3),
                    p(3, &[([0, 3, 0], 1.0)]),
                    Polynomial::zero(3),
                ],
            ),
        ]
    }
}

fn trig_field(dim: usize) -> SineProductField {
    let h = PI / 2.0;
    if dim == 2 {
        // (sin(pi x) sin(pi y), cos(pi x) cos(pi y))
        SineProductField::new(
            "trig",
            vec![1.0, 1.0],
            vec![vec![PI, PI], vec![PI, PI]],
            vec![vec![0.0, 0.0], vec![h, h]],
        )
    } else {
        SineProductField::new(
            "trig",
            vec![1.0, 1.0, 1.0],
            vec![vec![PI, PI, PI], vec![PI, PI, PI], vec![PI, PI, PI]],
            vec![vec![0.0, 0.0, h], vec![h, h, 0.0], vec![0.0, h, 0.0]],
        )
    }
}

fn aniso_field(dim: usize) -> SineProductField {
    let h = PI / 2.0;
    // (sin(x), sin(40 y)/40, [sin(40 z)/40])
    let mut freq = vec![vec![0.0; dim]; dim];
    let mut phase = vec![vec![h; dim]; dim];
    let mut amp = vec![1.0 / 40.0; dim];
    amp[0] = 1.0;
    for i in 0..dim {
        freq[i][i] = if i == 0 { 1.0 } else { 40.0 };
        phase[i][i] = 0.0;
    }
    SineProductField::new("aniso", amp, freq, phase)
}

/// Names understood by [`field_by_name`].
pub const FIELD_NAMES: &[&str] = &[
    "poly0",
    "poly1",
    "poly2",
    "poly3",
    "linear",
    "counterexample",
    "counterexample_cubic",
    "trig",
    "aniso",
];

/// Every catalog field in dimension `dim`.
pub fn catalog(dim: usize) -> Result<Vec<FieldRef>> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidDimension(dim));
    }
    let mut out: Vec<FieldRef> = polynomial_catalog(dim)
        .into_iter()
        .map(|f| Arc::new(f) as FieldRef)
        .collect();
    out.push(Arc::new(trig_field(dim)));
    out.push(Arc::new(aniso_field(dim)));
    Ok(out)
}

/// Looks up a catalog field by name.
pub fn field_by_name(name: &str, dim: usize) -> Result<FieldRef> {
    catalog(dim)?
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| Error::UnknownField(name.to_string()))
}
