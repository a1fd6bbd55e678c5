use serde::Serialize;

use super::bounds::norm_degree;
use super::norms::Integrator;
use crate::error::{Error, Result};
use crate::fields::field_by_name;
use crate::geometry::ReferenceElement;
use crate::poly::{self, Polynomial};
use crate::rt_space::{interpolate_reference, RtSpace};

/// Threshold the first-component error is compared against.
pub const ERROR_THRESHOLD: f64 = 0.1;

/// A field with vanishing first component whose interpolant has a nonzero
/// first component, on the reference triangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub k: usize,
    pub field: String,
    /// Coefficients of the interpolant components, as `(exponent, coefficient)`.
    pub interpolant: Vec<Vec<([u8; 3], f64)>>,
    /// Largest coefficient deviation from `x / 3`; only for `k = 0`.
    pub coefficient_error: Option<f64>,
    /// `|| (I v)_1 - v_1 ||_{L^2}`
    pub first_component_error: f64,
    /// `| v_1 |_{H^1}`
    pub first_component_seminorm: f64,
    /// Closed form of the error for `k = 0`: `1 / (6 sqrt 3)`.
    pub exact_error: Option<f64>,
    pub threshold: f64,
    pub exceeds_threshold: bool,
    /// Error strictly positive while the seminorm vanishes.
    pub estimate_fails: bool,
}

fn sorted_terms(p: &Polynomial) -> Vec<([u8; 3], f64)> {
    let mut t: Vec<([u8; 3], f64)> = p.pruned(1e-14).terms().map(|(e, c)| (*e, *c)).collect();
    t.sort_by_key(|a| a.0);
    t
}

/// Runs the check for `k = 0` with `(0, y^2)` or `k = 1` with `(0, y^3)`.
pub fn counterexample(k: usize) -> Result<CounterexampleReport> {
    let name = match k {
        0 => "counterexample",
        1 => "counterexample_cubic",
        _ => {
            return Err(Error::InvalidArgument(format!(
                "counterexample exists for k = 0 and k = 1, got {k}"
            )))
        }
    };
    let field = field_by_name(name, 2)?;
    let reference = ReferenceElement::Triangle;
    let space = RtSpace::shared(k, reference)?;
    let interp = interpolate_reference(&space, field.as_ref());
    let integ = Integrator::new(&reference.simplex(), norm_degree(k))?;
    let polys = interp.reference_polynomials();

    let coefficient_error = (k == 0).then(|| {
        let third = 1.0 / 3.0;
        (0..2)
            .map(|i| {
                let mut diff = polys[i].clone();
                diff.axpy(-third, &Polynomial::variable(2, i));
                diff.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    });
    let first_component_error = integ.scalar_norm(2.0, |x| {
        interp.evaluate_reference(x)[0] - field.value(x)[0]
    });
    let first_component_seminorm = integ
        .integrate(|x| {
            let g = field.gradient(x);
            g[(0, 0)].powi(2) + g[(0, 1)].powi(2)
        })
        .sqrt();
    let estimate_fails = first_component_seminorm == 0.0 && first_component_error > 1e-8;
    Ok(CounterexampleReport {
        k,
        field: name.to_string(),
        interpolant: polys.iter().map(sorted_terms).collect(),
        coefficient_error,
        first_component_error,
        first_component_seminorm,
        exact_error: (k == 0).then(|| 1.0 / (6.0 * 3f64.sqrt())),
        threshold: ERROR_THRESHOLD,
        exceeds_threshold: first_component_error > ERROR_THRESHOLD,
        estimate_fails,
    })
}

/// `(x/3, y/3) - (0, y^2)` as exact polynomials, for oracles.
pub fn exact_error_polynomials() -> Vec<Polynomial> {
    let mut second = Polynomial::variable(2, 1).scaled(1.0 / 3.0);
    second.add_term([0, 2, 0], -1.0);
    vec![Polynomial::variable(2, 0).scaled(1.0 / 3.0), second]
}

/// `int_T p` over the reference triangle by `a! b! / (a + b + 2)!`.
pub fn exact_triangle_integral(p: &Polynomial) -> f64 {
    let fact = |n: u8| (1..=n as u32).map(f64::from).product::<f64>();
    p.terms()
        .map(|(e, c)| c * fact(e[0]) * fact(e[1]) / fact(e[0] + e[1] + 2))
        .sum()
}

/// `|| v ||_{L^2}` of a polynomial vector on the reference triangle, exactly.
pub fn exact_l2_norm(v: &[Polynomial]) -> f64 {
    v.iter()
        .map(|c| exact_triangle_integral(&c.mul(c)))
        .sum::<f64>()
        .sqrt()
}

/// The divergence of the interpolant as a polynomial.
pub fn interpolant_divergence(report: &CounterexampleReport) -> Polynomial {
    let comps: Vec<Polynomial> = report
        .interpolant
        .iter()
        .map(|terms| {
            let mut p = Polynomial::zero(2);
            for (e, c) in terms {
                p.add_term(*e, *c);
            }
            p
        })
        .collect();
    poly::divergence(&comps)
}
