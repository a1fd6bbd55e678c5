use serde::Serialize;

use super::{canonical_decompose, mathscr_h, CanonicalDecomposition, Simplex};
use crate::error::Result;

/// `H_T = (prod alpha_i / |T|) h`.
pub fn param_h_t(decomp: &CanonicalDecomposition, volume: f64, h: f64) -> f64 {
    decomp.alphas.iter().product::<f64>() / volume * h
}

/// `H_T0 = h^2 / |T0|` times the shortest edge (d = 2) or the product of the
/// two shortest edges (d = 3).
pub fn param_h_t0(simplex: &Simplex) -> f64 {
    let mut lengths: Vec<f64> = simplex.edges().iter().map(|e| e.2).collect();
    lengths.sort_by(f64::total_cmp);
    let h = lengths[lengths.len() - 1];
    let edge_term = if simplex.dim() == 2 {
        lengths[0]
    } else {
        lengths[0] * lengths[1]
    };
    h * h / simplex.volume() * edge_term
}

/// Geometric summary of one element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricReport {
    pub dim: usize,
    pub h: f64,
    pub volume: f64,
    pub h_t: f64,
    pub h_t0: f64,
    /// `H_T0 / h`
    pub ratio_h: f64,
    /// `H_T / h`
    pub ratio_h_t: f64,
    /// Largest vertex angle (d = 2) or largest face angle (d = 3), radians.
    pub max_angle: f64,
    /// Largest dihedral angle, d = 3 only.
    pub max_dihedral: Option<f64>,
    pub inradius_diameter: f64,
    pub circumradius: f64,
    pub mathscr_h: Vec<f64>,
    /// Smallest admissible constant in the shear bound (0 in 2D).
    pub assumption1_m: f64,
    pub gamma0: f64,
    /// `H_T0 / h <= gamma0`
    pub good_element: bool,
}

/// Angles, diameters and the `H` parameters of `simplex`, with the
/// `H_T0 / h <= gamma0` verdict.
pub fn angle_report(simplex: &Simplex, gamma0: f64) -> Result<GeometricReport> {
    let decomp = canonical_decompose(simplex)?;
    Ok(report_with(simplex, &decomp, gamma0))
}

pub(crate) fn report_with(
    simplex: &Simplex,
    decomp: &CanonicalDecomposition,
    gamma0: f64,
) -> GeometricReport {
    let h = simplex.diameter();
    let volume = simplex.volume();
    let h_t = param_h_t(decomp, volume, h);
    let h_t0 = param_h_t0(simplex);
    let max_angle = simplex.face_angles().into_iter().fold(0.0, f64::max);
    let max_dihedral =
        (simplex.dim() == 3).then(|| simplex.dihedral_angles().into_iter().fold(0.0, f64::max));
    GeometricReport {
        dim: simplex.dim(),
        h,
        volume,
        h_t,
        h_t0,
        ratio_h: h_t0 / h,
        ratio_h_t: h_t / h,
        max_angle,
        max_dihedral,
        inradius_diameter: simplex.inradius_diameter(),
        circumradius: simplex.circumradius(),
        mathscr_h: mathscr_h(decomp),
        assumption1_m: super::minimal_assumption1_m(decomp),
        gamma0,
        good_element: h_t0 / h <= gamma0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReferenceElement;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn reference_triangle_parameters() {
        let t = ReferenceElement::Triangle.simplex();
        let r = angle_report(&t, 10.0).unwrap();
        assert_relative_eq!(r.h_t, 2.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(r.h_t0, 4.0, epsilon = 1e-14);
        assert_relative_eq!(r.max_angle, PI / 2.0, epsilon = 1e-14);
        assert!(r.good_element);
        assert_eq!(r.mathscr_h, vec![1.0, 1.0]);
    }

    #[test]
    fn equilateral_angle() {
        let t = crate::geometry::Simplex::new(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 0.75f64.sqrt()],
        ])
        .unwrap();
        let r = angle_report(&t, 10.0).unwrap();
        assert_relative_eq!(r.max_angle, PI / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn reference_tet_h_t0() {
        let t = ReferenceElement::TetTypeI.simplex();
        assert_relative_eq!(param_h_t0(&t), 12.0, epsilon = 1e-13);
    }
}
