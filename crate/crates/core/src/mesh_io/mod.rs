//! Plain-text simplicial meshes and generators for the study families.
//!
//! Format (0-based indices, `#` starts a comment):
//!
//! ```text
//! dim 2
//! nodes 3
//! 0 0
//! 1 0
//! 0 1
//! elements 1
//! 0 1 2
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::family::{sliver, FamilyKind, FamilySpec, MAX_ELEMENTS};
use crate::geometry::Simplex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh after checking indices and element volumes.
    pub fn new(dim: usize, nodes: Vec<Vec<f64>>, elements: Vec<Vec<usize>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDimension(dim));
        }
        let mesh = Self {
            dim,
            nodes,
            elements,
        };
        for (e, el) in mesh.elements.iter().enumerate() {
            if el.len() != dim + 1 {
                return Err(Error::WrongVertexCount {
                    dim,
                    expected: dim + 1,
                    got: el.len(),
                });
            }
            if let Some(&node) = el.iter().find(|&&n| n >= mesh.nodes.len()) {
                return Err(Error::IndexOutOfRange {
                    element: e,
                    node,
                    nodes: mesh.nodes.len(),
                });
            }
            if mesh.element(e).is_err() {
                return Err(Error::DegenerateElement { element: e });
            }
        }
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, e: usize) -> Result<Simplex> {
        Simplex::new(
            &self.elements[e]
                .iter()
                .map(|&n| self.nodes[n].clone())
                .collect::<Vec<_>>(),
        )
    }

    pub fn simplices(&self) -> impl Iterator<Item = Simplex> + '_ {
        (0..self.len()).map(|e| self.element(e).expect("checked on construction"))
    }

    /// Checks that faces are shared by at most two elements and that no node
    /// sits on a boundary face it is not a vertex of (a hanging node).
    pub fn check_conformity(&self) -> std::result::Result<(), String> {
        let mut faces: HashMap<Vec<usize>, usize> = HashMap::new();
        for el in &self.elements {
            for skip in 0..el.len() {
                let mut f: Vec<usize> = (0..el.len()).filter(|&i| i != skip).map(|i| el[i]).collect();
                f.sort_unstable();
                *faces.entry(f).or_default() += 1;
            }
        }
        if let Some((f, n)) = faces.iter().find(|(_, &n)| n > 2) {
            return Err(format!("face {f:?} shared by {n} elements"));
        }
        let pts: Vec<DVector<f64>> = self
            .nodes
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect();
        let mut boundary: Vec<&Vec<usize>> =
            faces.iter().filter(|(_, &n)| n == 1).map(|(f, _)| f).collect();
        boundary.sort();
        for f in boundary {
            let scale = (1..f.len())
                .map(|i| (&pts[f[i]] - &pts[f[0]]).norm())
                .fold(0.0, f64::max);
            for (n, p) in pts.iter().enumerate() {
                if !f.contains(&n) && on_face(p, f.iter().map(|&i| &pts[i]), scale) {
                    return Err(format!("node {n} hangs on face {f:?}"));
                }
            }
        }
        Ok(())
    }
}

/// Whether `p` lies in the closed simplex spanned by `verts` (a face of
/// dimension `d - 1`), within `1e-10 * scale`.
fn on_face<'a>(p: &DVector<f64>, verts: impl Iterator<Item = &'a DVector<f64>>, scale: f64) -> bool {
    let verts: Vec<&DVector<f64>> = verts.collect();
    let a = verts[0];
    let m = nalgebra::DMatrix::from_columns(
        &verts[1..].iter().map(|v| *v - a).collect::<Vec<_>>(),
    );
    let rhs = p - a;
    let Some(lam) = (m.transpose() * &m).lu().solve(&(m.transpose() * &rhs)) else {
        return false;
    };
    let tol = 1e-10;
    if (&m * &lam - &rhs).norm() > tol * scale {
        return false;
    }
    lam.iter().all(|&l| l >= -tol) && lam.sum() <= 1.0 + tol
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the text format above.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut header = |key: &str| -> Result<(usize, usize)> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| parse_err(text.lines().count(), format!("missing `{key}` line")))?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_err(n, format!("expected `{key} <count>`")));
        }
        let v = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(n, format!("`{key}` needs a nonnegative integer")))?;
        if parts.next().is_some() {
            return Err(parse_err(n, "trailing tokens"));
        }
        Ok((n, v))
    };
    let (dline, dim) = header("dim")?;
    if dim != 2 && dim != 3 {
        return Err(parse_err(dline, format!("dimension {dim} not supported")));
    }
    let (_, nn) = header("nodes")?;
    let mut rest = lines;
    let mut nodes = Vec::with_capacity(nn);
    for i in 0..nn {
        let (n, l) = rest
            .next()
            .ok_or_else(|| parse_err(text.lines().count(), format!("expected {nn} nodes, found {i}")))?;
        let coords: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(n, format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if coords.len() != dim || coords.iter().any(|c| !c.is_finite()) {
            return Err(parse_err(n, format!("expected {dim} finite coordinates")));
        }
        nodes.push(coords);
    }
    let (n, l) = rest
        .next()
        .ok_or_else(|| parse_err(text.lines().count(), "missing `elements` line"))?;
    let ne: usize = match l.split_whitespace().collect::<Vec<_>>()[..] {
        ["elements", v] => v
            .parse()
            .map_err(|_| parse_err(n, "`elements` needs a nonnegative integer"))?,
        _ => return Err(parse_err(n, "expected `elements <count>`")),
    };
    let mut elements = Vec::with_capacity(ne);
    for i in 0..ne {
        let (n, l) = rest
            .next()
            .ok_or_else(|| parse_err(text.lines().count(), format!("expected {ne} elements, found {i}")))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(n, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?;
        if idx.len() != dim + 1 {
            return Err(parse_err(n, format!("expected {} indices", dim + 1)));
        }
        elements.push(idx);
    }
    if let Some((n, _)) = rest.next() {
        return Err(parse_err(n, "unexpected content after elements"));
    }
    Mesh::new(dim, nodes, elements)
}

/// Writes the text format with 17 significant digits per coordinate.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", mesh.dim);
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let row: Vec<String> = p.iter().map(|c| format!("{c:.16e}")).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for e in &mesh.elements {
        let row: Vec<String> = e.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Box grid `nx x ny x nz` with spacings `size`, each box cut into six Kuhn
/// tetrahedra.
fn kuhn_grid(n: [usize; 3], size: [f64; 3]) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let id = |i: usize, j: usize, k: usize| (k * (n[1] + 1) + j) * (n[0] + 1) + i;
    let mut nodes = Vec::new();
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                nodes.push(vec![i as f64 * size[0], j as f64 * size[1], k as f64 * size[2]]);
            }
        }
    }
    let mut elements = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                for path in KUHN_PATHS {
                    let mut c = [i, j, k];
                    let mut el = vec![id(c[0], c[1], c[2])];
                    for axis in path {
                        c[axis] += 1;
                        el.push(id(c[0], c[1], c[2]));
                    }
                    elements.push(el);
                }
            }
        }
    }
    (nodes, elements)
}

fn expected_elements(spec: &FamilySpec, level: usize) -> usize {
    let n = spec.cells(level);
    match spec.kind {
        FamilyKind::ShapeRegular { dim: 2 } => 2 * n * n,
        FamilyKind::ShapeRegular { .. } => 6 * n * n * n,
        FamilyKind::Needle2d { .. } | FamilyKind::Cap2d { .. } => 2 * n,
        FamilyKind::TetTypeI { .. } | FamilyKind::TetTypeII { .. } => 6 * n * n,
        FamilyKind::Sliver { .. } => 1,
    }
}

/// The level-`level` mesh of a family. The representative element of
/// [`FamilySpec::representative`] is one of its elements.
pub fn generate_family(spec: &FamilySpec, level: usize) -> Result<Mesh> {
    spec.validate()?;
    let count = expected_elements(spec, level);
    if count > MAX_ELEMENTS {
        return Err(Error::BadSpec(format!(
            "level {level} would have {count} elements (limit {MAX_ELEMENTS})"
        )));
    }
    let n = spec.cells(level);
    let h = spec.h(level);
    let c = spec.thin(level);
    let (dim, nodes, elements) = match spec.kind {
        FamilyKind::ShapeRegular { dim: 2 } | FamilyKind::Needle2d { .. } => {
            let (ny, hy) = match spec.kind {
                FamilyKind::Needle2d { .. } => (1, c),
                _ => (n, h),
            };
            let id = |i: usize, j: usize| j * (n + 1) + i;
            let mut nodes = Vec::new();
            for j in 0..=ny {
                for i in 0..=n {
                    nodes.push(vec![i as f64 * h, j as f64 * hy]);
                }
            }
            let mut elements = Vec::new();
            for j in 0..ny {
                for i in 0..n {
                    elements.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
                    elements.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            (2, nodes, elements)
        }
        FamilyKind::ShapeRegular { .. } => {
            let (nodes, elements) = kuhn_grid([n, n, n], [h, h, h]);
            (3, nodes, elements)
        }
        FamilyKind::Cap2d { .. } => {
            // Bottom nodes 0..=n, then top nodes at the cell midpoints.
            let mut nodes: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 * h, 0.0]).collect();
            nodes.extend((0..n).map(|i| vec![(i as f64 + 0.5) * h, c]));
            let top = |i: usize| n + 1 + i;
            let mut elements = Vec::new();
            for i in 0..n {
                elements.push(vec![i, i + 1, top(i)]);
                if i + 1 < n {
                    elements.push(vec![top(i), i + 1, top(i + 1)]);
                }
            }
            (2, nodes, elements)
        }
        FamilyKind::TetTypeI { .. } | FamilyKind::TetTypeII { .. } => {
            let (nodes, elements) = kuhn_grid([n, n, 1], [h, h, c]);
            (3, nodes, elements)
        }
        FamilyKind::Sliver { .. } => {
            let s = sliver(h, c);
            (3, s.to_vecs(), vec![vec![0, 1, 2, 3]])
        }
    };
    Mesh::new(dim, nodes, elements)
}
