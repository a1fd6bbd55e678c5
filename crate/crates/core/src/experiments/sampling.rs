//! Seeded random simplices and fields for Monte-Carlo sweeps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::fields::PolynomialField;
use crate::geometry::{canonical_decompose, Simplex, TetCase};
use crate::poly::{homogeneous_monomials, monomials, Polynomial};

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// Random orthogonal matrix from Gram-Schmidt on a random square matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let qr = m.qr();
        let r = qr.r();
        if (0..dim).all(|i| r[(i, i)].abs() > 1e-3) {
            return qr.q();
        }
    }
}

/// Vertices uniform in the unit cube, rejecting elements with
/// `|T| < 1e-3 h^d`.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Simplex {
    loop {
        let pts: Vec<DVector<f64>> = (0..=dim)
            .map(|_| DVector::from_fn(dim, |_, _| rng.random::<f64>()))
            .collect();
        if let Ok(s) = Simplex::from_points(pts) {
            if s.volume() > 1e-3 * s.diameter().powi(dim as i32) {
                return s;
            }
        }
    }
}

/// An affine image of the unit simplex under a random rotation, log-uniform
/// axis scales in `[1e-3, 1]`, a random unit-diagonal shear and a random
/// offset. Produces needles, caps and slivers as well as regular shapes.
pub fn random_anisotropic_simplex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Simplex {
    loop {
        let q = random_orthogonal(rng, dim);
        let scales = DMatrix::from_diagonal(&DVector::from_fn(dim, |_, _| log_uniform(rng, 1e-3, 1.0)));
        let shear = DMatrix::from_fn(dim, dim, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => rng.random_range(-1.0..1.0),
            std::cmp::Ordering::Greater => 0.0,
        });
        let a = q * scales * shear;
        let b = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let mut pts = vec![b.clone()];
        for j in 0..dim {
            pts.push(&b + a.column(j));
        }
        if let Ok(s) = Simplex::from_points(pts) {
            return s;
        }
    }
}

/// Thin triangle: random rotation and offset, base length log-uniform in
/// `[1e-2, 1]`, height ratio log-uniform in `[1e-4, 1]`, apex position along
/// the base uniform.
pub fn random_thin_triangle<R: Rng + ?Sized>(rng: &mut R) -> Simplex {
    let base = log_uniform(rng, 1e-2, 1.0);
    let height = base * log_uniform(rng, 1e-4, 1.0);
    let apex = rng.random_range(-0.5..1.5) * base;
    let q = random_orthogonal(rng, 2);
    let b = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
    let pts = [
        DVector::from_vec(vec![0.0, 0.0]),
        DVector::from_vec(vec![base, 0.0]),
        DVector::from_vec(vec![apex, height]),
    ];
    Simplex::from_points(pts.iter().map(|p| &q * p + &b).collect()).expect("nondegenerate by construction")
}

/// The mixed sample used by geometry sweeps: generic and anisotropic halves.
pub fn random_sweep_simplex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Simplex {
    if rng.random::<bool>() {
        random_simplex(rng, dim)
    } else {
        random_anisotropic_simplex(rng, dim)
    }
}

/// A sweep tetrahedron whose canonical decomposition is of the given type.
pub fn random_tet_of_type<R: Rng + ?Sized>(rng: &mut R, case: TetCase) -> Simplex {
    loop {
        let s = random_sweep_simplex(rng, 3);
        if canonical_decompose(&s).ok().and_then(|d| d.case()) == Some(case) {
            return s;
        }
    }
}

fn random_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    exps: &[[u8; 3]],
) -> Polynomial {
    let mut p = Polynomial::zero(dim);
    for e in exps {
        p.add_term(*e, rng.random_range(-1.0..1.0));
    }
    p
}

/// A random member of `RT^k`: random `P^k` components plus `x` times a random
/// homogeneous polynomial of degree `k`.
pub fn random_rt_member<R: Rng + ?Sized>(rng: &mut R, k: usize, dim: usize) -> Vec<Polynomial> {
    let full = monomials(dim, k);
    let top = homogeneous_monomials(dim, k);
    let q = random_polynomial(rng, dim, &top);
    (0..dim)
        .map(|i| {
            let mut c = random_polynomial(rng, dim, &full);
            c.axpy(1.0, &q.mul_variable(i));
            c
        })
        .collect()
}

/// A vector field with independent random coefficients in `[-1, 1]` on every
/// monomial of degree at most `degree`.
pub fn random_polynomial_field<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    degree: usize,
) -> PolynomialField {
    let exps = monomials(dim, degree);
    let comps = (0..dim).map(|_| random_polynomial(rng, dim, &exps)).collect();
    PolynomialField::new(format!("random_p{degree}"), comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::is_in_rt_space;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_samples_repeat() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 3] {
            assert_eq!(
                random_anisotropic_simplex(&mut a, dim).to_vecs(),
                random_anisotropic_simplex(&mut b, dim).to_vecs()
            );
        }
    }

    #[test]
    fn rt_members_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..=2 {
            for dim in [2, 3] {
                assert!(is_in_rt_space(&random_rt_member(&mut rng, k, dim), k, 1e-12));
            }
        }
    }

    #[test]
    fn type_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in [TetCase::TypeI, TetCase::TypeII] {
            let s = random_tet_of_type(&mut rng, case);
            assert_eq!(canonical_decompose(&s).unwrap().case(), Some(case));
        }
    }
}
