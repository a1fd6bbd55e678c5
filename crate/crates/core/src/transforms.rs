//! Affine maps, Piola transformations and directional derivatives along the
//! direction vectors of a canonical decomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::geometry::CanonicalDecomposition;

/// `x -> A x + b` with a cached inverse and determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
    inverse: DMatrix<f64>,
    det: f64,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::InvalidArgument("affine map has mismatched sizes".into()));
        }
        let det = matrix.determinant();
        let inverse = matrix
            .clone()
            .try_inverse()
            .filter(|_| det != 0.0 && det.is_finite())
            .ok_or_else(|| Error::InvalidArgument("affine map is singular".into()))?;
        Ok(Self {
            matrix,
            offset,
            inverse,
            det,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), DVector::zeros(dim)).expect("identity")
    }

    /// The full map `x_ref -> A_T0 A_T x_ref + b_T0` of a decomposition.
    pub fn from_decomposition(decomp: &CanonicalDecomposition) -> Self {
        Self::new(decomp.a_full(), decomp.translation.clone()).expect("validated decomposition")
    }

    /// `x_ref -> A_T x_ref` onto the canonically placed element.
    pub fn canonical(decomp: &CanonicalDecomposition) -> Self {
        Self::new(decomp.a_t(), DVector::zeros(decomp.dim())).expect("validated decomposition")
    }

    /// The rigid motion `x -> A_T0 x + b_T0`.
    pub fn rigid(decomp: &CanonicalDecomposition) -> Self {
        Self::new(decomp.rotation.clone(), decomp.translation.clone())
            .expect("orthogonal matrix is invertible")
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    pub fn apply_inverse(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.inverse * (y - &self.offset)
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.inverse.clone(),
            offset: -(&self.inverse * &self.offset),
            inverse: self.matrix.clone(),
            det: 1.0 / self.det,
        }
    }

    /// `self after inner`, i.e. `x -> self(inner(x))`.
    pub fn compose(&self, inner: &AffineMap) -> Self {
        Self::new(
            &self.matrix * &inner.matrix,
            &self.matrix * &inner.offset + &self.offset,
        )
        .expect("product of invertible maps")
    }
}

/// The contravariant Piola transformation of an affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct PiolaMap {
    map: AffineMap,
}

impl PiolaMap {
    pub fn new(map: AffineMap) -> Self {
        Self { map }
    }

    pub fn affine(&self) -> &AffineMap {
        &self.map
    }

    /// `v_ref -> A v_ref / det(A)`, a value at the image point.
    pub fn push(&self, v: &DVector<f64>) -> DVector<f64> {
        self.map.matrix() * v / self.map.det()
    }

    /// `v -> det(A) A^{-1} v`, a value at the preimage point.
    pub fn pull(&self, v: &DVector<f64>) -> DVector<f64> {
        self.map.inverse_matrix() * v * self.map.det()
    }

    /// `Psi_T0 after Psi_T` as a single Piola map.
    pub fn compose(&self, inner: &PiolaMap) -> Self {
        Self::new(self.map.compose(&inner.map))
    }
}

/// The direction vectors `r_i` (columns of `A_tilde`) and their images
/// `A_T0 r_i` in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionFrame {
    pub r: Vec<DVector<f64>>,
    pub rotated: Vec<DVector<f64>>,
}

impl DirectionFrame {
    pub fn from_decomposition(decomp: &CanonicalDecomposition) -> Self {
        let r = decomp.directions();
        let rotated = r.iter().map(|v| &decomp.rotation * v).collect();
        Self { r, rotated }
    }

    /// The coordinate axes, for plain `x`-derivatives.
    pub fn axes(dim: usize) -> Self {
        let r: Vec<DVector<f64>> = (0..dim)
            .map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        Self {
            rotated: r.clone(),
            r,
        }
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }
}

/// All multi-indices in `dim` variables of total order `order`.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    crate::poly::homogeneous_monomials(dim, order)
        .iter()
        .map(|e| e[..dim].iter().map(|&v| v as usize).collect())
        .collect()
}

/// `prod_i w_i^{eps_i}`.
pub fn weight_power(weights: &[f64], eps: &[usize]) -> f64 {
    weights
        .iter()
        .zip(eps)
        .map(|(w, &e)| w.powi(e as i32))
        .product()
}

/// Direction indices listed with multiplicity, e.g. `(1, 0, 2)` -> `[0, 2, 2]`.
fn expand(eps: &[usize]) -> Vec<usize> {
    eps.iter()
        .enumerate()
        .flat_map(|(i, &e)| std::iter::repeat_n(i, e))
        .collect()
}

/// Derivative of a vector field along the given directions, in order, at `x`.
/// Up to two directions.
pub fn derivative_along(
    field: &dyn VectorField,
    dirs: &[&DVector<f64>],
    x: &[f64],
) -> Result<DVector<f64>> {
    if dirs.len() > field.smoothness_order().min(2) {
        return Err(Error::UnsupportedOrder {
            requested: dirs.len(),
            available: field.smoothness_order().min(2),
        });
    }
    Ok(match dirs {
        [] => field.value(x),
        [a] => field.gradient(x) * *a,
        [a, b] => {
            let h = field.hessian(x);
            DVector::from_fn(field.dim(), |i, _| a.dot(&(&h[i] * *b)))
        }
        _ => unreachable!(),
    })
}

/// Derivative of the divergence along the given directions. Up to one direction.
pub fn divergence_derivative_along(
    field: &dyn VectorField,
    dirs: &[&DVector<f64>],
    x: &[f64],
) -> Result<f64> {
    match dirs {
        [] => Ok(field.divergence(x)),
        [a] => Ok(field.divergence_gradient(x).dot(a)),
        _ => Err(Error::UnsupportedOrder {
            requested: dirs.len(),
            available: 1,
        }),
    }
}

/// `d^eps / d r^(0)` of a vector field: derivatives along the rotated frame.
pub fn directional_derivative(
    field: &dyn VectorField,
    frame: &DirectionFrame,
    eps: &[usize],
    x: &[f64],
) -> Result<DVector<f64>> {
    let dirs: Vec<&DVector<f64>> = expand(eps).iter().map(|&i| &frame.rotated[i]).collect();
    derivative_along(field, &dirs, x)
}

/// `d^eps / d r^(0)` of the divergence of a field.
pub fn directional_divergence_derivative(
    field: &dyn VectorField,
    frame: &DirectionFrame,
    eps: &[usize],
    x: &[f64],
) -> Result<f64> {
    let dirs: Vec<&DVector<f64>> = expand(eps).iter().map(|&i| &frame.rotated[i]).collect();
    divergence_derivative_along(field, &dirs, x)
}

/// For a signed permutation matrix, the physical axis each canonical axis is
/// sent to; `None` for columns that are not (up to sign) unit vectors.
pub fn axis_pairing(rotation: &DMatrix<f64>, tol: f64) -> Vec<Option<usize>> {
    (0..rotation.ncols())
        .map(|c| {
            let col = rotation.column(c);
            let hits: Vec<usize> = (0..col.len())
                .filter(|&r| (col[r].abs() - 1.0).abs() < tol)
                .collect();
            let rest_zero = (0..col.len())
                .filter(|r| !hits.contains(r))
                .all(|r| col[r].abs() < tol);
            (hits.len() == 1 && rest_zero).then(|| hits[0])
        })
        .collect()
}
