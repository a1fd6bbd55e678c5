use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::quadrature::simplex_rule;

/// Checks that `p` is one of the supported exponents 1, 2 or infinity.
pub fn check_p(p: f64) -> Result<()> {
    if p == 1.0 || p == 2.0 || p == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "p = {p} not supported; use 1, 2 or inf"
        )))
    }
}

/// Quadrature on a physical simplex for `L^p` norms.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Integrator {
    pub fn new(simplex: &Simplex, degree: usize) -> Result<Self> {
        let rule = simplex_rule(simplex.dim(), degree)?;
        let scale = simplex.volume() / rule.weight_sum();
        Ok(Self {
            points: rule
                .map_points(simplex.vertices())
                .into_iter()
                .map(|x| x.iter().copied().collect())
                .collect(),
            weights: rule.weights.iter().map(|w| w * scale).collect(),
        })
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// `(int sum_i |f_i|^p)^(1/p)`, or the largest entry over the points for p = inf.
    pub fn norm<F: FnMut(&[f64]) -> DVector<f64>>(&self, p: f64, mut f: F) -> f64 {
        if p.is_infinite() {
            return self
                .points
                .iter()
                .map(|x| f(x).amax())
                .fold(0.0, f64::max);
        }
        let s = self.integrate(|x| f(x).iter().map(|v| v.abs().powf(p)).sum());
        s.powf(1.0 / p)
    }

    /// Norms of several vector integrands that are cheaper to evaluate
    /// together; `f` returns all of them at a point.
    pub fn norms_of_many<F: FnMut(&[f64]) -> Vec<DVector<f64>>>(
        &self,
        p: f64,
        count: usize,
        mut f: F,
    ) -> Vec<f64> {
        let mut acc = vec![0.0; count];
        for (x, w) in self.points.iter().zip(&self.weights) {
            for (a, v) in acc.iter_mut().zip(f(x)) {
                if p.is_infinite() {
                    *a = f64::max(*a, v.amax());
                } else {
                    *a += w * v.iter().map(|c| c.abs().powf(p)).sum::<f64>();
                }
            }
        }
        if !p.is_infinite() {
            acc.iter_mut().for_each(|a| *a = a.powf(1.0 / p));
        }
        acc
    }

    pub fn scalar_norm<F: FnMut(&[f64]) -> f64>(&self, p: f64, mut f: F) -> f64 {
        self.norm(p, |x| DVector::from_element(1, f(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReferenceElement;
    use approx::assert_relative_eq;

    #[test]
    fn constant_norms() {
        let t = ReferenceElement::Triangle.simplex();
        let q = Integrator::new(&t, 4).unwrap();
        let one = |_: &[f64]| DVector::from_column_slice(&[1.0, 1.0]);
        assert_relative_eq!(q.norm(1.0, one), 1.0, epsilon = 1e-14);
        assert_relative_eq!(q.norm(2.0, one), 1.0, epsilon = 1e-14);
        assert_relative_eq!(q.norm(f64::INFINITY, one), 1.0);
        assert!(check_p(3.0).is_err());
    }
}
