use std::collections::BTreeMap;

use serde::Serialize;

use super::bounds::{bound_breakdown, BoundVariant};
use super::family::FamilySpec;
use crate::error::{Error, Result};
use crate::fields::FieldRef;
use crate::geometry::angle_report;

/// Default `gamma0` in the good-element test.
pub const DEFAULT_GAMMA0: f64 = 10.0;
/// Default bound on the shear-bound constant.
pub const DEFAULT_M: f64 = 10.0;
/// Levels up to and including this one form the reference window for
/// ratio growth.
pub const REFERENCE_LEVEL: usize = 3;
/// Allowed growth of the sup ratio after the reference window.
pub const GROWTH_TOLERANCE: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub h_t0: f64,
    pub h_ratio: f64,
    pub max_angle: f64,
    pub max_dihedral: Option<f64>,
    pub element_type: &'static str,
    pub assumption1_m: f64,
    pub lhs: f64,
    pub interp_norm: f64,
    pub rhs: BTreeMap<String, f64>,
    pub ratios: BTreeMap<String, f64>,
    /// Observed order of `lhs` against the previous level.
    pub order: Option<f64>,
    pub notes: Vec<String>,
}

/// One level of a family study.
pub fn study_level(
    spec: &FamilySpec,
    level: usize,
    k: usize,
    ell: usize,
    field: &FieldRef,
    p: f64,
    m: f64,
) -> Result<StudyRow> {
    if field.dim() != spec.kind.dim() {
        return Err(Error::InvalidArgument(format!(
            "field `{}` has dimension {}, family {} needs {}",
            field.name(),
            field.dim(),
            spec.kind.name(),
            spec.kind.dim()
        )));
    }
    let simplex = spec.representative(level)?;
    let geo = angle_report(&simplex, DEFAULT_GAMMA0)?;
    let b = bound_breakdown(k, ell, &simplex, field, p, m)?;
    Ok(StudyRow {
        level,
        h: b.h,
        h_t0: b.h_t0,
        h_ratio: b.h_ratio,
        max_angle: geo.max_angle,
        max_dihedral: geo.max_dihedral,
        element_type: b.element_type,
        assumption1_m: b.assumption1_m,
        lhs: b.lhs,
        interp_norm: b.interp_norm,
        rhs: b.rhs,
        ratios: b.ratios,
        order: None,
        notes: b.notes,
    })
}

/// `log(lhs_{l-1} / lhs_l) / log(h_{l-1} / h_l)`, or `None` when either error
/// vanishes.
pub fn observed_order(prev: (f64, f64), cur: (f64, f64)) -> Option<f64> {
    let ((h0, e0), (h1, e1)) = (prev, cur);
    if e0 > 1e-300 && e1 > 1e-300 && h0 != h1 {
        let o = (e0 / e1).ln() / (h0 / h1).ln();
        o.is_finite().then_some(o)
    } else {
        None
    }
}

/// Fills `order` on rows sorted by level.
pub fn fill_orders(rows: &mut [StudyRow]) {
    for i in 1..rows.len() {
        rows[i].order = observed_order((rows[i - 1].h, rows[i - 1].lhs), (rows[i].h, rows[i].lhs));
    }
}

/// All levels `0..spec.levels` with `l = k` and the default `M`.
pub fn run_family_study(spec: &FamilySpec, k: usize, field: &FieldRef, p: f64) -> Result<Vec<StudyRow>> {
    run_family_study_with(spec, k, k, field, p, DEFAULT_M)
}

pub fn run_family_study_with(
    spec: &FamilySpec,
    k: usize,
    ell: usize,
    field: &FieldRef,
    p: f64,
    m: f64,
) -> Result<Vec<StudyRow>> {
    if spec.levels < 3 {
        return Err(Error::BadSpec(format!(
            "a study needs at least 3 levels, got {}",
            spec.levels
        )));
    }
    let mut rows = (0..spec.levels)
        .map(|l| study_level(spec, l, k, ell, field, p, m))
        .collect::<Result<Vec<_>>>()?;
    fill_orders(&mut rows);
    Ok(rows)
}

/// Sup ratios and verdicts over a finished study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub levels: usize,
    /// Sup of each ratio over all levels.
    pub sup_ratio: BTreeMap<String, f64>,
    /// Sup of each ratio over levels `0..=REFERENCE_LEVEL`.
    pub sup_ratio_reference: BTreeMap<String, f64>,
    /// `sup_ratio / sup_ratio_reference`.
    pub growth: BTreeMap<String, f64>,
    /// Growth within [`GROWTH_TOLERANCE`].
    pub bounded: BTreeMap<String, bool>,
    pub min_order: Option<f64>,
    pub max_h_ratio: f64,
    pub max_assumption1_m: f64,
    pub assumption1_admissible: bool,
}

pub fn summarize(rows: &[StudyRow]) -> StudySummary {
    let mut sup_ratio = BTreeMap::new();
    let mut sup_ratio_reference = BTreeMap::new();
    for row in rows {
        for (name, &r) in &row.ratios {
            let e = sup_ratio.entry(name.clone()).or_insert(0.0f64);
            *e = e.max(r);
            if row.level <= REFERENCE_LEVEL {
                let e = sup_ratio_reference.entry(name.clone()).or_insert(0.0f64);
                *e = e.max(r);
            }
        }
    }
    let mut growth = BTreeMap::new();
    let mut bounded = BTreeMap::new();
    for (name, &all) in &sup_ratio {
        let reference = sup_ratio_reference.get(name).copied().unwrap_or(0.0);
        let g = if all == 0.0 { 1.0 } else { all / reference };
        growth.insert(name.clone(), g);
        bounded.insert(name.clone(), g <= GROWTH_TOLERANCE);
    }
    let min_order = rows
        .iter()
        .filter_map(|r| r.order)
        .fold(None, |acc: Option<f64>, o| Some(acc.map_or(o, |a| a.min(o))));
    let max_assumption1_m = rows.iter().map(|r| r.assumption1_m).fold(0.0, f64::max);
    StudySummary {
        levels: rows.len(),
        sup_ratio,
        sup_ratio_reference,
        growth,
        bounded,
        min_order,
        max_h_ratio: rows.iter().map(|r| r.h_ratio).fold(0.0, f64::max),
        max_assumption1_m,
        assumption1_admissible: max_assumption1_m <= DEFAULT_M,
    }
}

/// Growth of the running sup of `lhs / rhs` for one variant; `None` when the
/// variant is absent from the rows.
pub fn variant_growth(rows: &[StudyRow], variant: BoundVariant) -> Option<f64> {
    summarize(rows).growth.get(variant.name()).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::family::FamilyKind;
    use crate::fields::field_by_name;

    #[test]
    fn orders() {
        assert!((observed_order((1.0, 4.0), (0.5, 1.0)).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(observed_order((1.0, 0.0), (0.5, 1.0)), None);
    }

    #[test]
    fn small_study() {
        let spec = FamilySpec::new(FamilyKind::ShapeRegular { dim: 2 }, 3);
        let f = field_by_name("trig", 2).unwrap();
        let rows = run_family_study(&spec, 0, &f, 2.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[1].h < w[0].h));
        assert!(rows[0].order.is_none() && rows[2].order.is_some());
        let s = summarize(&rows);
        assert!(s.sup_ratio.contains_key("rt62"));
        let too_few = FamilySpec::new(FamilyKind::ShapeRegular { dim: 2 }, 2);
        assert!(run_family_study(&too_few, 0, &f, 2.0).is_err());
    }
}
