use serde::Serialize;

use super::bounds::{norm_degree, safe_ratio};
use super::norms::{check_p, Integrator};
use crate::error::Result;
use crate::fields::VectorField;
use crate::geometry::ReferenceElement;
use crate::rt_space::{interpolate_reference, RtSpace};

/// Which right-hand side the component-wise bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentBound {
    /// `||u_i||_{W^{1,p}} + ||div u||`
    Divergence,
    /// `||u_i||_{W^{1,p}} + sum_{j != i} ||d u_j / d x_j||`
    DiagonalDerivatives,
}

impl ComponentBound {
    /// The bound proved for each reference element: the divergence form on the
    /// triangle and the Type i tetrahedron, the diagonal form on Type ii.
    pub fn for_reference(reference: ReferenceElement) -> Self {
        match reference {
            ReferenceElement::TetTypeII => ComponentBound::DiagonalDerivatives,
            _ => ComponentBound::Divergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentStability {
    pub reference: ReferenceElement,
    pub bound: ComponentBound,
    pub k: usize,
    pub p: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

fn combine(parts: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        parts.iter().copied().fold(0.0, f64::max)
    } else {
        parts.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Compares each component of the interpolant on the reference element with
/// the component-wise right-hand side.
pub fn component_stability(
    reference: ReferenceElement,
    k: usize,
    field: &dyn VectorField,
    p: f64,
) -> Result<ComponentStability> {
    check_p(p)?;
    let space = RtSpace::shared(k, reference)?;
    let interp = interpolate_reference(&space, field);
    let integ = Integrator::new(&reference.simplex(), norm_degree(k))?;
    let d = reference.dim();
    let bound = ComponentBound::for_reference(reference);
    let diag: Vec<f64> = (0..d)
        .map(|j| integ.scalar_norm(p, |x| field.gradient(x)[(j, j)]))
        .collect();
    let div = integ.scalar_norm(p, |x| field.divergence(x));
    let mut lhs = Vec::with_capacity(d);
    let mut rhs = Vec::with_capacity(d);
    for i in 0..d {
        lhs.push(integ.scalar_norm(p, |x| interp.evaluate_reference(x)[i]));
        let mut parts = vec![integ.scalar_norm(p, |x| field.value(x)[i])];
        for j in 0..d {
            parts.push(integ.scalar_norm(p, |x| field.gradient(x)[(i, j)]));
        }
        let extra = match bound {
            ComponentBound::Divergence => div,
            ComponentBound::DiagonalDerivatives => {
                (0..d).filter(|&j| j != i).map(|j| diag[j]).sum()
            }
        };
        rhs.push(combine(&parts, p) + extra);
    }
    let ratios: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| safe_ratio(*l, *r)).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ComponentStability {
        reference,
        bound,
        k,
        p,
        lhs,
        rhs,
        ratios,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::field_by_name;

    #[test]
    fn bounded_on_catalog_fields() {
        for reference in [ReferenceElement::TetTypeI, ReferenceElement::TetTypeII] {
            for name in ["poly1", "poly2", "trig"] {
                let f = field_by_name(name, 3).unwrap();
                let s = component_stability(reference, 0, f.as_ref(), 2.0).unwrap();
                assert!(s.max_ratio.is_finite() && s.max_ratio > 0.0, "{s:?}");
            }
        }
    }

    #[test]
    fn bound_choice() {
        assert_eq!(
            ComponentBound::for_reference(ReferenceElement::TetTypeII),
            ComponentBound::DiagonalDerivatives
        );
        assert_eq!(
            ComponentBound::for_reference(ReferenceElement::Triangle),
            ComponentBound::Divergence
        );
    }
}
