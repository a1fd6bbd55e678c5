use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use super::bounds::{
    derivatives_along_many, direction_lists, safe_ratio, weighted_derivative_sum,
    weighted_divergence_sum, ElementContext,
};
use super::norms::{check_p, Integrator};
use crate::error::{Error, Result};
use crate::fields::{pullback_field, FieldRef};
use crate::geometry::{
    check_assumption1, condition_numbers, minimal_assumption1_m, ReferenceElement, Simplex,
};
use crate::transforms::{divergence_derivative_along, multi_indices, AffineMap};

/// Degree of the quadrature used by the scaling checks.
const SCALING_DEGREE: usize = 6;

/// The scaling inequalities between a physical element and its reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingLemma {
    /// Values on the element against weighted reference components.
    Rt41,
    /// Reference derivatives against rotated-frame derivatives.
    Rt42,
    /// Reference derivatives against canonical-coordinate derivatives.
    Rt43,
    /// Reference divergence derivatives, rotated frame.
    Rt12,
    /// Reference divergence derivatives, canonical coordinates.
    Rt13,
    /// Type ii: derivatives of `d v_k / d x_k`, rotated frame.
    Rt14,
    /// Type ii: the same in canonical coordinates.
    Rt14b,
}

impl ScalingLemma {
    pub const ALL: [ScalingLemma; 7] = [
        ScalingLemma::Rt41,
        ScalingLemma::Rt42,
        ScalingLemma::Rt43,
        ScalingLemma::Rt12,
        ScalingLemma::Rt13,
        ScalingLemma::Rt14,
        ScalingLemma::Rt14b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalingLemma::Rt41 => "rt41",
            ScalingLemma::Rt42 => "rt42",
            ScalingLemma::Rt43 => "rt43",
            ScalingLemma::Rt12 => "rt12",
            ScalingLemma::Rt13 => "rt13",
            ScalingLemma::Rt14 => "rt14",
            ScalingLemma::Rt14b => "rt14b",
        }
    }

    pub fn needs_assumption1(self) -> bool {
        matches!(self, ScalingLemma::Rt43 | ScalingLemma::Rt13 | ScalingLemma::Rt14b)
    }

    pub fn needs_type_ii(self) -> bool {
        matches!(self, ScalingLemma::Rt14 | ScalingLemma::Rt14b)
    }

    /// Highest derivative order the check supports.
    pub fn max_order(self) -> usize {
        match self {
            ScalingLemma::Rt41 => 0,
            ScalingLemma::Rt42 | ScalingLemma::Rt43 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ScalingLemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalingLemma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scaling lemma `{s}`")))
    }
}

/// Both sides of one scaling inequality with the constant set to 1. When the
/// inequality has several instances (components, multi-indices) the worst one
/// is reported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lemma: ScalingLemma,
    pub order: usize,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub instances: usize,
}

/// `(1 - p) / p`, with the limit -1 at `p = inf`.
fn det_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        -1.0
    } else {
        (1.0 - p) / p
    }
}

fn unit(dim: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 })
}

fn expand<'a>(dirs: &'a [DVector<f64>], eps: &[usize]) -> Vec<&'a DVector<f64>> {
    eps.iter()
        .enumerate()
        .flat_map(|(i, &e)| std::iter::repeat_n(&dirs[i], e))
        .collect()
}

struct Worst {
    lhs: f64,
    rhs: f64,
    ratio: f64,
    instances: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            lhs: 0.0,
            rhs: 0.0,
            ratio: f64::NEG_INFINITY,
            instances: 0,
        }
    }

    fn push(&mut self, lhs: f64, rhs: f64) {
        let r = safe_ratio(lhs, rhs);
        self.instances += 1;
        if r > self.ratio {
            self.lhs = lhs;
            self.rhs = rhs;
            self.ratio = r;
        }
    }
}

/// Evaluates one scaling inequality on `simplex` for derivative order `order`.
/// `m` is the constant allowed in the shear bound.
pub fn check_scaling_lemma(
    simplex: &Simplex,
    field: &FieldRef,
    p: f64,
    which: ScalingLemma,
    order: usize,
    m: f64,
) -> Result<ScalingReport> {
    check_p(p)?;
    if order > which.max_order() {
        return Err(Error::UnsupportedOrder {
            requested: order,
            available: which.max_order(),
        });
    }
    let ctx = ElementContext::new(simplex, SCALING_DEGREE)?;
    let decomp = &ctx.decomp;
    if which.needs_type_ii() && decomp.reference != ReferenceElement::TetTypeII {
        return Err(Error::WrongElementType(format!(
            "{which} needs a Type ii tetrahedron, got {}",
            decomp.reference.name()
        )));
    }
    if which.needs_assumption1() && !check_assumption1(decomp, m) {
        return Err(Error::Assumption1Violated {
            required: minimal_assumption1_m(decomp),
            allowed: m,
        });
    }
    let d = ctx.dim();
    let reference = Integrator::new(&decomp.reference.simplex(), SCALING_DEGREE)?;
    let hat = pullback_field(field.clone(), &AffineMap::from_decomposition(decomp));
    let v = ctx.canonical_field(field);
    let v0 = field.as_ref();
    let cn = condition_numbers(decomp);
    let det = decomp.a_t().determinant().abs();
    let scale = det.powf(-det_exponent(p));
    let axes = ctx.axes.r.clone();
    let alphas = decomp.alphas.clone();
    let mut worst = Worst::new();

    match which {
        ScalingLemma::Rt41 => {
            let lhs = ctx.physical.norm(p, |x| v0.value(x));
            let comps: Vec<f64> = (0..d)
                .map(|j| alphas[j] * reference.scalar_norm(p, |x| hat.value(x)[j]))
                .collect();
            let weighted = if p.is_infinite() {
                comps.iter().copied().fold(0.0, f64::max)
            } else {
                comps.iter().map(|c| c.powf(p)).sum::<f64>().powf(1.0 / p)
            };
            worst.push(lhs, det.powf(det_exponent(p)) * cn.norm_atilde * weighted);
        }
        ScalingLemma::Rt42 | ScalingLemma::Rt43 => {
            let sum = if which == ScalingLemma::Rt42 {
                weighted_derivative_sum(&ctx.physical, v0, &ctx.frame.rotated, &alphas, order, None, p)?
            } else {
                weighted_derivative_sum(&ctx.canonical, v.as_ref(), &axes, &ctx.lengths, order, None, p)?
            };
            let (_, lists) = direction_lists(&axes, order, None);
            let norms = reference.norms_of_many(p, lists.len() * d, |x| {
                derivatives_along_many(hat.as_ref(), &lists, x)
                    .iter()
                    .flat_map(|v| v.iter().map(|c| DVector::from_element(1, *c)).collect::<Vec<_>>())
                    .collect()
            });
            for (i, lhs) in norms.into_iter().enumerate() {
                let k = i % d;
                worst.push(lhs, scale / alphas[k] * cn.norm_atilde_inv * sum);
            }
        }
        ScalingLemma::Rt12 | ScalingLemma::Rt13 => {
            let sum = if which == ScalingLemma::Rt12 {
                weighted_divergence_sum(&ctx.physical, v0, &ctx.frame.rotated, &alphas, order, p)?
            } else {
                weighted_divergence_sum(&ctx.canonical, v.as_ref(), &axes, &ctx.lengths, order, p)?
            };
            for beta in multi_indices(d, order) {
                let dirs = expand(&axes, &beta);
                let lhs = reference.scalar_norm(p, |x| {
                    divergence_derivative_along(hat.as_ref(), &dirs, x).expect("order checked")
                });
                worst.push(lhs, scale * sum);
            }
        }
        ScalingLemma::Rt14 | ScalingLemma::Rt14b => {
            for k in 0..d {
                let ek = unit(d, k);
                let sum = if which == ScalingLemma::Rt14 {
                    weighted_derivative_sum(
                        &ctx.physical,
                        v0,
                        &ctx.frame.rotated,
                        &alphas,
                        order,
                        Some(&ctx.frame.rotated[k]),
                        p,
                    )?
                } else {
                    weighted_derivative_sum(
                        &ctx.canonical,
                        v.as_ref(),
                        &axes,
                        &ctx.lengths,
                        order,
                        Some(&ctx.frame.r[k]),
                        p,
                    )?
                };
                let (_, lists) = direction_lists(&axes, order, Some(&ek));
                let norms = reference.norms_of_many(p, lists.len(), |x| {
                    derivatives_along_many(hat.as_ref(), &lists, x)
                        .iter()
                        .map(|v| DVector::from_element(1, v[k]))
                        .collect()
                });
                for lhs in norms {
                    worst.push(lhs, scale * cn.norm_atilde_inv * sum);
                }
            }
        }
    }

    Ok(ScalingReport {
        lemma: which,
        order,
        p,
        lhs: worst.lhs,
        rhs: worst.rhs,
        ratio: worst.ratio,
        instances: worst.instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::field_by_name;

    #[test]
    fn reference_rt41_ratio_at_most_one() {
        let t = ReferenceElement::Triangle.simplex();
        let f = field_by_name("trig", 2).unwrap();
        let r = check_scaling_lemma(&t, &f, 2.0, ScalingLemma::Rt41, 0, 10.0).unwrap();
        assert!(r.ratio <= 1.0 + 1e-12, "{r:?}");
    }

    #[test]
    fn divergence_free_field_gives_zero() {
        // (y, x) has zero divergence.
        let t = Simplex::new(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 0.05]]).unwrap();
        let f = field_by_name("linear", 2).unwrap();
        let r = check_scaling_lemma(&t, &f, 2.0, ScalingLemma::Rt12, 0, 10.0);
        let r = r.unwrap();
        assert!(r.ratio.is_finite());
        let rot = crate::fields::PolynomialField::new(
            "rot",
            vec![
                crate::poly::Polynomial::variable(2, 1),
                crate::poly::Polynomial::variable(2, 0),
            ],
        );
        let f: FieldRef = std::sync::Arc::new(rot);
        let r = check_scaling_lemma(&t, &f, 2.0, ScalingLemma::Rt12, 0, 10.0).unwrap();
        assert!(r.lhs < 1e-12 && r.rhs < 1e-12);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn type_checks() {
        let t = ReferenceElement::Triangle.simplex();
        let f = field_by_name("trig", 2).unwrap();
        assert!(matches!(
            check_scaling_lemma(&t, &f, 2.0, ScalingLemma::Rt14, 0, 10.0),
            Err(Error::WrongElementType(_))
        ));
        assert!(matches!(
            check_scaling_lemma(&t, &f, 2.0, ScalingLemma::Rt12, 2, 10.0),
            Err(Error::UnsupportedOrder { .. })
        ));
    }
}
