use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Skew-symmetric generator `X = Σ_{i<j} x_ij (e_i e_jᵀ − e_j e_iᵀ)` of the
/// orbital rotation `U = exp(X)`, whose rows are the new orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationGenerator {
    x: DMatrix<f64>,
}

impl RotationGenerator {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: DMatrix::zeros(n, n),
        }
    }

    /// Accepts `x` if `x + xᵀ` vanishes to within `1e-14`.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != x.ncols() {
            return Err(Error::Dimension(format!("generator is {}x{}", x.nrows(), x.ncols())));
        }
        let dev = (&x + x.transpose()).amax();
        if dev > 1e-14 {
            return Err(Error::Domain(format!(
                "generator is not skew-symmetric (deviation {dev:.3e})"
            )));
        }
        Ok(Self { x })
    }

    /// Builds the generator from its upper triangle, mirroring with a sign flip.
    pub fn from_upper(upper: &DMatrix<f64>) -> Self {
        let n = upper.nrows();
        let x = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => upper[(i, j)],
            std::cmp::Ordering::Greater => -upper[(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        });
        Self { x }
    }

    /// Rotation by `theta` in the plane of orbitals `i` and `j`.
    pub fn jacobi(n: usize, i: usize, j: usize, theta: f64) -> Self {
        let mut x = DMatrix::zeros(n, n);
        x[(i, j)] = theta;
        x[(j, i)] = -theta;
        Self { x }
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { x: &self.x * s }
    }

    pub fn norm(&self) -> f64 {
        self.x.norm()
    }

    /// The orthogonal matrix `exp(X)`, re-orthonormalized against rounding.
    pub fn exp(&self) -> DMatrix<f64> {
        if self.x.iter().all(|v| *v == 0.0) {
            return DMatrix::identity(self.dim(), self.dim());
        }
        let u = self.x.clone().exp();
        // one Newton–Schulz polish toward the nearest orthogonal matrix
        let n = u.nrows();
        let corr = DMatrix::<f64>::identity(n, n) * 1.5 - (&u.transpose() * &u) * 0.5;
        u * corr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_exponential_is_a_plane_rotation() {
        let g = RotationGenerator::jacobi(3, 0, 2, 0.3);
        let u = g.exp();
        assert!((u[(0, 0)] - 0.3f64.cos()).abs() < 1e-15);
        assert!((u[(0, 2)] - 0.3f64.sin()).abs() < 1e-15);
        assert!((u[(2, 0)] + 0.3f64.sin()).abs() < 1e-15);
        assert_eq!(u[(1, 1)], 1.0);
    }

    #[test]
    fn zero_generator_is_identity() {
        assert_eq!(RotationGenerator::zeros(4).exp(), DMatrix::identity(4, 4));
    }

    #[test]
    fn exponential_is_orthogonal_and_inverted_by_negation() {
        let upper = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.21 - 0.4);
        let g = RotationGenerator::from_upper(&upper);
        let u = g.exp();
        let id = DMatrix::<f64>::identity(5, 5);
        assert!((&u * u.transpose() - &id).amax() < 1e-14);
        assert!((&u * g.scaled(-1.0).exp() - &id).amax() < 1e-13);
    }

    #[test]
    fn rejects_non_skew_input() {
        assert!(RotationGenerator::new(DMatrix::identity(2, 2)).is_err());
        assert!(RotationGenerator::new(DMatrix::zeros(2, 3)).is_err());
    }
}
