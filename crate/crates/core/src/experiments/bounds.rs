use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use super::norms::{check_p, Integrator};
use crate::error::{Error, Result};
use crate::fields::{pullback_field, FieldRef, VectorField};
use crate::geometry::{
    canonical_decompose, check_assumption1, condition_numbers, mathscr_h, minimal_assumption1_m,
    param_h_t0, CanonicalDecomposition, ReferenceElement, Simplex, TetCase,
};
use crate::rt_space::{interpolate_physical, RtInterpolant};
use crate::transforms::{
    divergence_derivative_along, multi_indices, weight_power, AffineMap,
    DirectionFrame,
};

/// Highest order for which error bounds are assembled (fields carry two derivatives).
pub const MAX_BOUND_K: usize = 1;

/// Quadrature degree for norms on an element carrying an `RT^k` interpolant.
pub fn norm_degree(k: usize) -> usize {
    2 * k + 8
}

/// The right-hand sides that can be assembled for an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Rotated-frame derivatives weighted by `alpha^eps` (triangles, Type i).
    Rt61,
    /// Canonical-coordinate derivatives weighted by the direction lengths.
    Rt62,
    /// Type ii, rotated frame, only the `h`-weighted term as printed.
    Rt616,
    /// Type ii, canonical coordinates.
    Rt616b,
    /// `(h / rho) h^{l+1} |v|_{W^{l+1,p}}`.
    Classical,
    /// Stability of the interpolant (triangles, Type i).
    Stability51,
    /// Stability of the interpolant (Type ii).
    Stability58,
}

impl BoundVariant {
    pub const ALL: [BoundVariant; 7] = [
        BoundVariant::Rt61,
        BoundVariant::Rt62,
        BoundVariant::Rt616,
        BoundVariant::Rt616b,
        BoundVariant::Classical,
        BoundVariant::Stability51,
        BoundVariant::Stability58,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Rt61 => "rt61",
            BoundVariant::Rt62 => "rt62",
            BoundVariant::Rt616 => "rt616",
            BoundVariant::Rt616b => "rt616b",
            BoundVariant::Classical => "classical",
            BoundVariant::Stability51 => "stability51",
            BoundVariant::Stability58 => "stability58",
        }
    }

    /// Whether the variant applies to an element with this reference element.
    pub fn applies_to(self, reference: ReferenceElement) -> bool {
        let type_ii = reference == ReferenceElement::TetTypeII;
        match self {
            BoundVariant::Classical => true,
            BoundVariant::Rt61 | BoundVariant::Rt62 | BoundVariant::Stability51 => !type_ii,
            BoundVariant::Rt616 | BoundVariant::Rt616b | BoundVariant::Stability58 => type_ii,
        }
    }

    /// Stability variants bound the interpolant itself, the rest its error.
    pub fn is_stability(self) -> bool {
        matches!(self, BoundVariant::Stability51 | BoundVariant::Stability58)
    }

    /// Variants that need the bound on `s22`.
    pub fn needs_assumption1(self) -> bool {
        matches!(self, BoundVariant::Rt62 | BoundVariant::Rt616b)
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bound variant `{s}`")))
    }
}

/// `lhs / rhs`, with `0/0` read as 0 and `x/0` as infinity.
pub fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs.abs() < 1e-10 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Everything needed to assemble bounds on one element.
pub(crate) struct ElementContext {
    pub simplex: Simplex,
    pub decomp: CanonicalDecomposition,
    pub h: f64,
    pub h_t0: f64,
    pub rho: f64,
    pub frame: DirectionFrame,
    pub axes: DirectionFrame,
    pub lengths: Vec<f64>,
    pub physical: Integrator,
    pub canonical: Integrator,
    pub rigid: AffineMap,
}

impl ElementContext {
    pub fn new(simplex: &Simplex, degree: usize) -> Result<Self> {
        let decomp = canonical_decompose(simplex)?;
        let canonical_simplex = decomp.canonical_simplex();
        Ok(Self {
            h: simplex.diameter(),
            h_t0: param_h_t0(simplex),
            rho: simplex.inradius_diameter(),
            frame: DirectionFrame::from_decomposition(&decomp),
            axes: DirectionFrame::axes(simplex.dim()),
            lengths: mathscr_h(&decomp),
            physical: Integrator::new(simplex, degree)?,
            canonical: Integrator::new(&canonical_simplex, degree)?,
            rigid: AffineMap::rigid(&decomp),
            simplex: simplex.clone(),
            decomp,
        })
    }

    pub fn dim(&self) -> usize {
        self.simplex.dim()
    }

    pub fn h_ratio(&self) -> f64 {
        self.h_t0 / self.h
    }

    /// The field in canonical coordinates, `Psi_T0^{-1} v0`.
    pub fn canonical_field(&self, field: &FieldRef) -> FieldRef {
        pullback_field(field.clone(), &self.rigid)
    }
}

fn require_order(field: &dyn VectorField, order: usize) -> Result<()> {
    let available = field.smoothness_order().min(2);
    if order > available {
        return Err(Error::UnsupportedOrder {
            requested: order,
            available,
        });
    }
    Ok(())
}

/// Derivatives of `field` at `x` along each list of directions; all lists
/// have the same length, at most two.
pub(crate) fn derivatives_along_many(
    field: &dyn VectorField,
    lists: &[Vec<&DVector<f64>>],
    x: &[f64],
) -> Vec<DVector<f64>> {
    match lists.first().map_or(0, Vec::len) {
        0 => vec![field.value(x); lists.len()],
        1 => {
            let g = field.gradient(x);
            lists.iter().map(|l| &g * l[0]).collect()
        }
        _ => {
            let h = field.hessian(x);
            lists
                .iter()
                .map(|l| DVector::from_fn(field.dim(), |i, _| l[0].dot(&(&h[i] * l[1]))))
                .collect()
        }
    }
}

/// Direction lists for every multi-index of total order `order`, with
/// `extra` appended when given.
pub(crate) fn direction_lists<'a>(
    dirs: &'a [DVector<f64>],
    order: usize,
    extra: Option<&'a DVector<f64>>,
) -> (Vec<Vec<usize>>, Vec<Vec<&'a DVector<f64>>>) {
    let indices = multi_indices(dirs.len(), order);
    let lists = indices
        .iter()
        .map(|eps| {
            let mut l: Vec<&DVector<f64>> = eps
                .iter()
                .enumerate()
                .flat_map(|(i, &e)| std::iter::repeat_n(&dirs[i], e))
                .collect();
            l.extend(extra);
            l
        })
        .collect();
    (indices, lists)
}

/// `sum_{|eps| = order} w^eps || d^eps [d_extra] v ||_{L^p}` with derivatives
/// along `dirs`.
pub(crate) fn weighted_derivative_sum(
    integrator: &Integrator,
    field: &dyn VectorField,
    dirs: &[DVector<f64>],
    weights: &[f64],
    order: usize,
    extra: Option<&DVector<f64>>,
    p: f64,
) -> Result<f64> {
    require_order(field, order + extra.is_some() as usize)?;
    let (indices, lists) = direction_lists(dirs, order, extra);
    let norms = integrator.norms_of_many(p, lists.len(), |x| derivatives_along_many(field, &lists, x));
    Ok(indices
        .iter()
        .zip(norms)
        .map(|(eps, n)| weight_power(weights, eps) * n)
        .sum())
}

/// `sum_{|eps| = order} w^eps || d^eps div v ||_{L^p}`.
pub(crate) fn weighted_divergence_sum(
    integrator: &Integrator,
    field: &dyn VectorField,
    dirs: &[DVector<f64>],
    weights: &[f64],
    order: usize,
    p: f64,
) -> Result<f64> {
    if order > 1 {
        return Err(Error::UnsupportedOrder {
            requested: order,
            available: 1,
        });
    }
    require_order(field, order + 1)?;
    let mut total = 0.0;
    for eps in multi_indices(dirs.len(), order) {
        let along: Vec<&DVector<f64>> = eps
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(&dirs[i], e))
            .collect();
        let norm = integrator.scalar_norm(p, |x| {
            divergence_derivative_along(field, &along, x).expect("order checked")
        });
        total += weight_power(weights, &eps) * norm;
    }
    Ok(total)
}

/// `|v|_{W^{order,p}}` over the coordinate derivatives.
fn sobolev_seminorm(integrator: &Integrator, field: &dyn VectorField, order: usize, p: f64) -> Result<f64> {
    require_order(field, order)?;
    let axes = DirectionFrame::axes(field.dim()).r;
    let (_, lists) = direction_lists(&axes, order, None);
    let norms = integrator.norms_of_many(p, lists.len(), |x| derivatives_along_many(field, &lists, x));
    Ok(if p.is_infinite() {
        norms.iter().copied().fold(0.0, f64::max)
    } else {
        norms.iter().map(|n| n.powf(p)).sum::<f64>().powf(1.0 / p)
    })
}

fn check_orders(k: usize, ell: usize) -> Result<()> {
    if k > MAX_BOUND_K {
        return Err(Error::UnsupportedOrder {
            requested: k + 1,
            available: 2,
        });
    }
    if ell > k {
        return Err(Error::InvalidArgument(format!(
            "derivative order l = {ell} exceeds k = {k}"
        )));
    }
    Ok(())
}

/// `|| I v0 - v0 ||_{L^p(T0)}` for the interpolant `interp` of `field`.
pub(crate) fn interpolation_error(
    integrator: &Integrator,
    interp: &RtInterpolant,
    field: &dyn VectorField,
    p: f64,
) -> f64 {
    integrator.norm(p, |x| interp.evaluate(x) - field.value(x))
}

/// `|| I^{RT^k} v0 - v0 ||_{L^p(T0)^d}` by quadrature.
pub fn error_lhs(k: usize, simplex: &Simplex, field: &FieldRef, p: f64) -> Result<f64> {
    check_p(p)?;
    let interp = interpolate_physical(k, simplex, field)?;
    let integrator = Integrator::new(simplex, norm_degree(k))?;
    Ok(interpolation_error(&integrator, &interp, field.as_ref(), p))
}

/// `|| I^{RT^k} v0 ||_{L^p(T0)^d}`.
pub fn interpolant_norm(k: usize, simplex: &Simplex, field: &FieldRef, p: f64) -> Result<f64> {
    check_p(p)?;
    let interp = interpolate_physical(k, simplex, field)?;
    let integrator = Integrator::new(simplex, norm_degree(k))?;
    Ok(integrator.norm(p, |x| interp.evaluate(x)))
}

fn rhs_with(
    ctx: &ElementContext,
    canonical_field: &FieldRef,
    ell: usize,
    field: &FieldRef,
    p: f64,
    variant: BoundVariant,
    m: f64,
) -> Result<f64> {
    let reference = ctx.decomp.reference;
    if !variant.applies_to(reference) {
        return Err(Error::WrongElementType(format!(
            "{variant} does not apply to a {} element",
            reference.name()
        )));
    }
    if variant.needs_assumption1() && !check_assumption1(&ctx.decomp, m) {
        return Err(Error::Assumption1Violated {
            required: minimal_assumption1_m(&ctx.decomp),
            allowed: m,
        });
    }
    let v0 = field.as_ref();
    let v = canonical_field.as_ref();
    let alphas = &ctx.decomp.alphas;
    let rh = ctx.h_ratio();
    let h = ctx.h;
    Ok(match variant {
        BoundVariant::Rt61 => {
            rh * weighted_derivative_sum(&ctx.physical, v0, &ctx.frame.rotated, alphas, ell + 1, None, p)?
                + h * weighted_divergence_sum(&ctx.physical, v0, &ctx.frame.rotated, alphas, ell, p)?
        }
        BoundVariant::Rt62 => {
            rh * weighted_derivative_sum(&ctx.canonical, v, &ctx.axes.r, &ctx.lengths, ell + 1, None, p)?
                + h * weighted_divergence_sum(&ctx.canonical, v, &ctx.axes.r, &ctx.lengths, ell, p)?
        }
        BoundVariant::Rt616 => {
            let mut s = 0.0;
            for rk in &ctx.frame.rotated {
                s += weighted_derivative_sum(&ctx.physical, v0, &ctx.frame.rotated, alphas, ell, Some(rk), p)?;
            }
            rh * h * s
        }
        BoundVariant::Rt616b => {
            let mut s = 0.0;
            for rk in &ctx.frame.r {
                s += weighted_derivative_sum(&ctx.canonical, v, &ctx.axes.r, &ctx.lengths, ell, Some(rk), p)?;
            }
            rh * (weighted_derivative_sum(&ctx.canonical, v, &ctx.axes.r, &ctx.lengths, ell + 1, None, p)?
                + h * s)
        }
        BoundVariant::Classical => {
            ctx.h / ctx.rho * h.powi(ell as i32 + 1) * sobolev_seminorm(&ctx.physical, v0, ell + 1, p)?
        }
        BoundVariant::Stability51 => {
            let value = ctx.physical.norm(p, |x| v0.value(x));
            rh * (value
                + weighted_derivative_sum(&ctx.physical, v0, &ctx.frame.rotated, alphas, 1, None, p)?)
                + h * weighted_divergence_sum(&ctx.physical, v0, &ctx.frame.rotated, alphas, 0, p)?
        }
        BoundVariant::Stability58 => {
            let value = ctx.physical.norm(p, |x| v0.value(x));
            let mut s = 0.0;
            for rk in &ctx.frame.rotated {
                s += weighted_derivative_sum(&ctx.physical, v0, &ctx.frame.rotated, alphas, 0, Some(rk), p)?;
            }
            rh * (value + h * s)
        }
    })
}

/// One right-hand side for the element `simplex`. `m` is the constant allowed
/// in the shear bound, used by the variants that need it.
pub fn bound_rhs(
    k: usize,
    ell: usize,
    simplex: &Simplex,
    field: &FieldRef,
    p: f64,
    variant: BoundVariant,
    m: f64,
) -> Result<f64> {
    check_p(p)?;
    check_orders(k, ell)?;
    let ctx = ElementContext::new(simplex, norm_degree(k))?;
    let canonical_field = ctx.canonical_field(field);
    rhs_with(&ctx, &canonical_field, ell, field, p, variant, m)
}

/// Error, interpolant norm and every applicable right-hand side on one element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundBreakdown {
    pub k: usize,
    pub ell: usize,
    pub p: f64,
    pub field: String,
    pub element_type: &'static str,
    pub h: f64,
    pub h_t0: f64,
    pub h_ratio: f64,
    pub inradius_diameter: f64,
    pub assumption1_m: f64,
    pub assumption1_allowed: f64,
    pub norm_atilde_inv: f64,
    /// `|| I v0 - v0 ||`
    pub lhs: f64,
    /// `|| I v0 ||`, the left side of the stability bounds.
    pub interp_norm: f64,
    /// Right-hand sides by variant name; missing when not applicable.
    pub rhs: BTreeMap<String, f64>,
    /// `lhs / rhs`, or `interp_norm / rhs` for the stability variants.
    pub ratios: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl BoundBreakdown {
    pub fn rhs(&self, v: BoundVariant) -> Option<f64> {
        self.rhs.get(v.name()).copied()
    }

    pub fn ratio(&self, v: BoundVariant) -> Option<f64> {
        self.ratios.get(v.name()).copied()
    }
}

pub const RT616_NOTE: &str =
    "rt616 is evaluated as printed: only the h-weighted first-derivative term, no order l+1 term";

/// Computes every applicable variant on one element.
pub fn bound_breakdown(
    k: usize,
    ell: usize,
    simplex: &Simplex,
    field: &FieldRef,
    p: f64,
    m: f64,
) -> Result<BoundBreakdown> {
    check_p(p)?;
    check_orders(k, ell)?;
    let ctx = ElementContext::new(simplex, norm_degree(k))?;
    let canonical_field = ctx.canonical_field(field);
    let interp = interpolate_physical(k, simplex, field)?;
    let lhs = interpolation_error(&ctx.physical, &interp, field.as_ref(), p);
    let interp_norm = ctx.physical.norm(p, |x| interp.evaluate(x));
    let mut rhs = BTreeMap::new();
    let mut ratios = BTreeMap::new();
    let mut notes = Vec::new();
    for variant in BoundVariant::ALL {
        if !variant.applies_to(ctx.decomp.reference) {
            continue;
        }
        match rhs_with(&ctx, &canonical_field, ell, field, p, variant, m) {
            Ok(r) => {
                let num = if variant.is_stability() { interp_norm } else { lhs };
                rhs.insert(variant.name().to_string(), r);
                ratios.insert(variant.name().to_string(), safe_ratio(num, r));
                if variant == BoundVariant::Rt616 {
                    notes.push(RT616_NOTE.to_string());
                }
            }
            Err(Error::Assumption1Violated { required, allowed }) => notes.push(format!(
                "{variant} skipped: shear bound needs M >= {required:.4e} > {allowed}"
            )),
            Err(e) => return Err(e),
        }
    }
    let element_type = match ctx.decomp.case() {
        None => "triangle",
        Some(TetCase::TypeI) => "tet_type_i",
        Some(TetCase::TypeII) => "tet_type_ii",
    };
    Ok(BoundBreakdown {
        k,
        ell,
        p,
        field: field.name(),
        element_type,
        h: ctx.h,
        h_t0: ctx.h_t0,
        h_ratio: ctx.h_ratio(),
        inradius_diameter: ctx.rho,
        assumption1_m: minimal_assumption1_m(&ctx.decomp),
        assumption1_allowed: m,
        norm_atilde_inv: condition_numbers(&ctx.decomp).norm_atilde_inv,
        lhs,
        interp_norm,
        rhs,
        ratios,
        notes,
    })
}
