//! Sparse multivariate polynomials in up to three variables.
//!
//! Only what the Raviart-Thomas machinery needs: evaluation, partial
//! derivatives, multiplication by a coordinate, and linear combinations.

use std::collections::BTreeMap;
use std::fmt;

/// Exponent tuple; unused trailing slots stay zero when `dim < 3`.
pub type Exponent = [u8; 3];

/// Total degree of an exponent tuple.
pub fn exponent_degree(e: &Exponent) -> usize {
    e.iter().map(|&v| v as usize).sum()
}

/// All exponents of total degree `<= degree` in `dim` variables, graded by degree.
pub fn monomials(dim: usize, degree: usize) -> Vec<Exponent> {
    (0..=degree)
        .flat_map(|d| homogeneous_monomials(dim, d))
        .collect()
}

/// All exponents of total degree exactly `degree` in `dim` variables.
pub fn homogeneous_monomials(dim: usize, degree: usize) -> Vec<Exponent> {
    assert!((1..=3).contains(&dim), "dim must be 1, 2 or 3");
    let mut out = Vec::new();
    let d = degree as u8;
    match dim {
        1 => out.push([d, 0, 0]),
        2 => {
            for a in (0..=d).rev() {
                out.push([a, d - a, 0]);
            }
        }
        _ => {
            for a in (0..=d).rev() {
                for b in (0..=(d - a)).rev() {
                    out.push([a, b, d - a - b]);
                }
            }
        }
    }
    out
}

/// Number of monomials of total degree `<= degree` in `dim` variables.
pub fn polynomial_count(dim: usize, degree: usize) -> usize {
    match dim {
        0 => 1,
        1 => degree + 1,
        2 => (degree + 1) * (degree + 2) / 2,
        3 => (degree + 1) * (degree + 2) * (degree + 3) / 6,
        _ => panic!("dimension {dim} not supported"),
    }
}

#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, [0, 0, 0], c)
    }

    pub fn monomial(dim: usize, exponent: Exponent, coeff: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(exponent, coeff);
        p
    }

    /// The coordinate function `x_var`.
    pub fn variable(dim: usize, var: usize) -> Self {
        let mut e = [0u8; 3];
        e[var] = 1;
        Self::monomial(dim, e, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: &Exponent) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, exponent: Exponent, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponent).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&exponent);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(exponent_degree).max()
    }

    /// Terms with |coefficient| above `tol`, as a new polynomial.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(e, c)| (*e, *c))
                .collect(),
        }
    }

    /// The homogeneous part of exact degree `degree`.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| exponent_degree(e) == degree)
                .map(|(e, c)| (*e, *c))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for (i, &p) in e.iter().enumerate().take(self.dim) {
                    if p > 0 {
                        v *= x[i].powi(p as i32);
                    }
                }
                v
            })
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut ne = *e;
                ne[var] -= 1;
                out.add_term(ne, c * e[var] as f64);
            }
        }
        out
    }

    pub fn mul_variable(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let mut ne = *e;
            ne[var] += 1;
            out.add_term(ne, *c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (e, c) in &other.terms {
            self.add_term(*e, s * c);
        }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["x", "y", "z"];
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &p) in e.iter().enumerate().take(self.dim) {
                match p {
                    0 => {}
                    1 => write!(f, "*{}", names[i])?,
                    _ => write!(f, "*{}^{}", names[i], p)?,
                }
            }
        }
        Ok(())
    }
}

/// A vector of `dim` polynomial components.
pub type VectorPolynomial = Vec<Polynomial>;

pub fn eval_vector(v: &[Polynomial], x: &[f64]) -> Vec<f64> {
    v.iter().map(|p| p.eval(x)).collect()
}

pub fn divergence(v: &[Polynomial]) -> Polynomial {
    let dim = v.len();
    let mut out = Polynomial::zero(dim);
    for (i, p) in v.iter().enumerate() {
        out.axpy(1.0, &p.derivative(i));
    }
    out
}

/// Whether `v` lies in `P_k^d + x P_k`: every component has degree at most
/// `k + 1`, and the degree-`k + 1` part is parallel to `x`.
pub fn is_in_rt_space(v: &[Polynomial], k: usize, tol: f64) -> bool {
    let v: Vec<Polynomial> = v.iter().map(|p| p.pruned(tol)).collect();
    if v.iter().any(|p| p.degree().is_some_and(|d| d > k + 1)) {
        return false;
    }
    let top: Vec<Polynomial> = v.iter().map(|p| p.homogeneous_part(k + 1)).collect();
    let dim = v.len();
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut cross = top[i].mul_variable(j);
            cross.axpy(-1.0, &top[j].mul_variable(i));
            if !cross.pruned(tol).is_zero() {
                return false;
            }
        }
    }
    true
}
