//! Refinement families of anisotropic elements.
//!
//! Every family is refined dyadically: level `l` has mesh size
//! `h = h0 2^{-l}`. Thin directions get size `h^gamma` and are meshed as a
//! single layer, so the element count grows only with the coarse direction.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Simplex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Unit square (or cube) cut into right triangles (Kuhn tetrahedra).
    ShapeRegular { dim: usize },
    /// Right triangles with legs `h` and `h^gamma`.
    Needle2d { gamma: f64 },
    /// Isosceles caps with base `h` and apex height `h^kappa`.
    Cap2d { kappa: f64 },
    /// Kuhn tetrahedra of `h x h x h^gamma / 2` boxes, Type i representative.
    TetTypeI { gamma: f64 },
    /// Same boxes, Type ii representative.
    TetTypeII { gamma: f64 },
    /// Flat tetrahedron `(0,0,0), (h,h,0), (h,0,e), (0,h,e)` with `e = h^gamma`.
    Sliver { gamma: f64 },
}

impl FamilyKind {
    pub const NAMES: [&'static str; 6] = [
        "shape_regular",
        "needle_2d",
        "cap_2d",
        "tet_type_i",
        "tet_type_ii",
        "sliver",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::ShapeRegular { .. } => "shape_regular",
            FamilyKind::Needle2d { .. } => "needle_2d",
            FamilyKind::Cap2d { .. } => "cap_2d",
            FamilyKind::TetTypeI { .. } => "tet_type_i",
            FamilyKind::TetTypeII { .. } => "tet_type_ii",
            FamilyKind::Sliver { .. } => "sliver",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FamilyKind::ShapeRegular { dim } => *dim,
            FamilyKind::Needle2d { .. } | FamilyKind::Cap2d { .. } => 2,
            _ => 3,
        }
    }

    /// The exponent of the thin direction, if any.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            FamilyKind::ShapeRegular { .. } => None,
            FamilyKind::Needle2d { gamma }
            | FamilyKind::TetTypeI { gamma }
            | FamilyKind::TetTypeII { gamma }
            | FamilyKind::Sliver { gamma } => Some(*gamma),
            FamilyKind::Cap2d { kappa } => Some(*kappa),
        }
    }

    fn with_exponent(name: &str, e: Option<f64>) -> Result<Self> {
        let g = |default: f64| e.unwrap_or(default);
        Ok(match name {
            "shape_regular" => FamilyKind::ShapeRegular {
                dim: match e {
                    None => 2,
                    Some(d) if d == 2.0 || d == 3.0 => d as usize,
                    Some(d) => return Err(Error::BadSpec(format!("shape_regular dimension {d}"))),
                },
            },
            "needle_2d" => FamilyKind::Needle2d { gamma: g(2.0) },
            "cap_2d" => FamilyKind::Cap2d { kappa: g(3.0) },
            "tet_type_i" => FamilyKind::TetTypeI { gamma: g(2.0) },
            "tet_type_ii" => FamilyKind::TetTypeII { gamma: g(2.0) },
            "sliver" => FamilyKind::Sliver { gamma: g(2.0) },
            _ => return Err(Error::BadSpec(format!("unknown family `{name}`"))),
        })
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::ShapeRegular { dim } => write!(f, "shape_regular:{dim}"),
            other => write!(f, "{}:{}", other.name(), other.exponent().unwrap_or(1.0)),
        }
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    /// `name` or `name:exponent`, e.g. `needle_2d:2` or `shape_regular:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, e) = match s.split_once(':') {
            Some((n, e)) => {
                let v: f64 = e
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadSpec(format!("bad family parameter `{e}`")))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        Self::with_exponent(name, e)
    }
}

/// Upper bound on generated mesh sizes.
pub const MAX_ELEMENTS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub levels: usize,
    pub h0: f64,
    /// Point whose enclosing cell supplies the representative element.
    pub anchor: [f64; 3],
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, levels: usize) -> Self {
        Self {
            kind,
            levels,
            h0: 1.0,
            anchor: [0.3, 0.4, 0.35],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0 && self.h0 <= 1.0) {
            return Err(Error::BadSpec(format!("h0 = {} must lie in (0, 1]", self.h0)));
        }
        if let Some(e) = self.kind.exponent() {
            if !(e.is_finite() && e >= 1.0) {
                return Err(Error::BadSpec(format!("exponent {e} must be >= 1")));
            }
        }
        if self.anchor.iter().any(|a| !(0.0..1.0).contains(a)) {
            return Err(Error::BadSpec("anchor must lie in [0, 1)^3".into()));
        }
        Ok(())
    }

    pub fn h(&self, level: usize) -> f64 {
        self.h0 * 0.5f64.powi(level as i32)
    }

    /// Size of the thin direction at `level`. The tetrahedral slabs use
    /// `h^gamma / 2`: with `h = h^gamma` at level 0 the box would be a cube, on
    /// which both Kuhn paths give congruent (Type ii) elements.
    pub fn thin(&self, level: usize) -> f64 {
        let h = self.h(level);
        match self.kind {
            FamilyKind::TetTypeI { gamma } | FamilyKind::TetTypeII { gamma } => 0.5 * h.powf(gamma),
            _ => self.kind.exponent().map_or(h, |e| h.powf(e)),
        }
    }

    /// Number of cells along a unit-length coarse direction.
    pub fn cells(&self, level: usize) -> usize {
        (1.0 / self.h(level) - 1e-9).ceil().max(1.0) as usize
    }

    /// Lower corner of the cell that holds the anchor along a coarse axis.
    fn corner(&self, level: usize, axis: usize) -> f64 {
        let h = self.h(level);
        let i = ((self.anchor[axis] / h).floor() as usize).min(self.cells(level) - 1);
        i as f64 * h
    }

    /// The element of the level-`level` mesh studied at that level.
    pub fn representative(&self, level: usize) -> Result<Simplex> {
        self.validate()?;
        let h = self.h(level);
        let c = self.thin(level);
        let x0 = self.corner(level, 0);
        let v = |p: &[f64]| p.to_vec();
        let s = match self.kind {
            FamilyKind::ShapeRegular { dim: 2 } => {
                let y0 = self.corner(level, 1);
                Simplex::new(&[v(&[x0, y0]), v(&[x0 + h, y0]), v(&[x0, y0 + h])])
            }
            FamilyKind::ShapeRegular { .. } => {
                let base = [x0, self.corner(level, 1), self.corner(level, 2)];
                Simplex::from_points(kuhn_tet(&base, [h, h, h], [0, 1, 2]))
            }
            FamilyKind::Needle2d { .. } => {
                Simplex::new(&[v(&[x0, 0.0]), v(&[x0 + h, 0.0]), v(&[x0, c])])
            }
            FamilyKind::Cap2d { .. } => {
                Simplex::new(&[v(&[x0, 0.0]), v(&[x0 + h, 0.0]), v(&[x0 + 0.5 * h, c])])
            }
            FamilyKind::TetTypeI { .. } => {
                let base = [x0, self.corner(level, 1), 0.0];
                Simplex::from_points(kuhn_tet(&base, [h, h, c], [0, 2, 1]))
            }
            FamilyKind::TetTypeII { .. } => {
                let base = [x0, self.corner(level, 1), 0.0];
                Simplex::from_points(kuhn_tet(&base, [h, h, c], [0, 1, 2]))
            }
            FamilyKind::Sliver { .. } => Ok(sliver(h, c)),
        };
        s.map_err(|e| Error::BadSpec(format!("level {level}: {e}")))
    }
}

/// Tetrahedron of the Kuhn subdivision of the box at `base` with edge lengths
/// `size` that walks the axes in the order `path`.
pub fn kuhn_tet(base: &[f64; 3], size: [f64; 3], path: [usize; 3]) -> Vec<DVector<f64>> {
    let mut p = DVector::from_column_slice(base);
    let mut out = vec![p.clone()];
    for &axis in &path {
        p[axis] += size[axis];
        out.push(p.clone());
    }
    out
}

pub fn sliver(h: f64, e: f64) -> Simplex {
    Simplex::new(&[
        vec![0.0, 0.0, 0.0],
        vec![h, h, 0.0],
        vec![h, 0.0, e],
        vec![0.0, h, e],
    ])
    .expect("sliver is nondegenerate for e > 0")
}

/// Cap triangle `(0,0), (1,0), (1/2, eps)`.
pub fn cap_triangle(eps: f64) -> Result<Simplex> {
    Simplex::new(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, eps]])
}

/// The cap series `eps = 10^-1, ..., 10^-n`.
pub fn cap_series(n: usize) -> Result<Vec<(f64, Simplex)>> {
    (1..=n)
        .map(|i| {
            let eps = 10f64.powi(-(i as i32));
            cap_triangle(eps).map(|s| (eps, s))
        })
        .collect()
}
