//! Diagonal spectral representation of the generator `A`, its contraction
//! semigroup `T(t)`, and the Yosida approximation `R(n) = n R(n, A)`.
//!
//! The operator is fixed to a diagonalizable class with non-positive
//! eigenvalues against a shared orthonormal eigenbasis, so `T(t)` and the
//! resolvent act exactly (mode by mode) and no operator-exponential error
//! enters the time stepping. The canonical instance is the Dirichlet
//! Laplacian on `(0, π)` with eigenvalues `−k²`.

use crate::error::{Error, Result};

/// Element of the state space, stored as coefficients against the fixed
/// orthonormal eigenbasis shared by `A` and the noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub coords: Vec<f64>,
}

impl FieldState {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Squared Hilbert norm `Σ_k x_k²`.
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &FieldState) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, c: f64) -> FieldState {
        FieldState {
            coords: self.coords.iter().map(|x| c * x).collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, other: &FieldState, c: f64) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a += c * b;
        }
    }

    /// Componentwise product, used for diagonal diffusion gains.
    pub fn hadamard(&self, other: &FieldState) -> FieldState {
        debug_assert_eq!(self.dim(), other.dim());
        FieldState {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

impl std::ops::Add for FieldState {
    type Output = FieldState;
    fn add(mut self, rhs: FieldState) -> FieldState {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl std::ops::Sub for FieldState {
    type Output = FieldState;
    fn sub(mut self, rhs: FieldState) -> FieldState {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

/// Diagonal unbounded operator with non-positive spectrum.
///
/// Eigenvalues are kept sorted non-increasing; the semigroup it generates is
/// a contraction.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    pub label: String,
}

impl SpectralOperator {
    /// Builds an operator from raw eigenvalues. All must be `≤ 0`; they are
    /// sorted non-increasing on construction.
    pub fn new(mut eigenvalues: Vec<f64>, label: &str) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidDimension);
        }
        for &mu in &eigenvalues {
            if !(mu <= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "eigenvalue",
                    value: mu,
                });
            }
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self {
            eigenvalues,
            label: label.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Least-negative eigenvalue `μ_1`.
    pub fn top_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `A x`, mode `k` scaled by `μ_k`.
    pub fn apply(&self, x: &FieldState) -> FieldState {
        debug_assert_eq!(self.dim(), x.dim());
        FieldState {
            coords: self
                .eigenvalues
                .iter()
                .zip(&x.coords)
                .map(|(mu, c)| mu * c)
                .collect(),
        }
    }

    /// Semigroup action `T(t) x`, mode `k` scaled by `exp(μ_k t)`.
    ///
    /// The norm is non-increasing in `t` since every eigenvalue is `≤ 0`.
    pub fn semigroup_apply(&self, t: f64, x: &FieldState) -> Result<FieldState> {
        if !(t >= 0.0) {
            return Err(Error::InvalidTime(t));
        }
        debug_assert_eq!(self.dim(), x.dim());
        Ok(FieldState {
            coords: self
                .eigenvalues
                .iter()
                .zip(&x.coords)
                .map(|(mu, c)| (mu * t).exp() * c)
                .collect(),
        })
    }

    /// Per-mode Yosida factor `n / (n − μ_k)`, in `(0, 1]` for `n > 0`.
    pub fn yosida_factor(&self, n: f64, k: usize) -> f64 {
        n / (n - self.eigenvalues[k])
    }

    /// Yosida approximation `R(n) x = n R(n, A) x`; converges to `x` as
    /// `n → ∞`. Any `n > 0` lies in the resolvent set since the spectrum is
    /// non-positive.
    pub fn yosida_apply(&self, n: f64, x: &FieldState) -> Result<FieldState> {
        if !(n > 0.0) {
            return Err(Error::InvalidParameter {
                name: "yosida_n",
                value: n,
            });
        }
        debug_assert_eq!(self.dim(), x.dim());
        Ok(FieldState {
            coords: self
                .eigenvalues
                .iter()
                .zip(&x.coords)
                .map(|(mu, c)| n / (n - mu) * c)
                .collect(),
        })
    }
}

/// Dirichlet Laplacian on `(0, π)` truncated to `dim` modes: `μ_k = −k²`.
pub fn make_dirichlet_laplacian(dim: usize) -> Result<SpectralOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension);
    }
    let eigenvalues = (1..=dim).map(|k| -((k * k) as f64)).collect();
    SpectralOperator::new(eigenvalues, "dirichlet_laplacian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_state<R: Rng>(dim: usize, rng: &mut R) -> FieldState {
        FieldState::new((0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
    }

    #[test]
    fn dirichlet_spectrum() {
        let op = make_dirichlet_laplacian(1).unwrap();
        assert_eq!(op.eigenvalues(), &[-1.0]);
        let op = make_dirichlet_laplacian(3).unwrap();
        assert_eq!(op.eigenvalues(), &[-1.0, -4.0, -9.0]);
        assert!(matches!(
            make_dirichlet_laplacian(0),
            Err(Error::InvalidDimension)
        ));
    }

    #[test]
    fn rejects_positive_eigenvalue() {
        assert!(SpectralOperator::new(vec![-1.0, 0.5], "bad").is_err());
    }

    #[test]
    fn semigroup_identity_at_zero() {
        let op = make_dirichlet_laplacian(3).unwrap();
        let x = FieldState::new(vec![0.3, -0.7, 1.1]);
        let y = op.semigroup_apply(0.0, &x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn semigroup_scalar_decay() {
        let op = make_dirichlet_laplacian(1).unwrap();
        let y = op
            .semigroup_apply(1.0, &FieldState::new(vec![1.0]))
            .unwrap();
        assert!((y.coords[0] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((y.coords[0] - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn semigroup_diagonal_action() {
        let op = SpectralOperator::new(vec![-1.0, -4.0], "test").unwrap();
        let y = op
            .semigroup_apply(0.5, &FieldState::new(vec![1.0, 1.0]))
            .unwrap();
        assert!((y.coords[0] - (-0.5f64).exp()).abs() < 1e-14);
        assert!((y.coords[1] - (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn semigroup_rejects_negative_time() {
        let op = make_dirichlet_laplacian(1).unwrap();
        assert!(op
            .semigroup_apply(-0.1, &FieldState::new(vec![1.0]))
            .is_err());
    }

    #[test]
    fn yosida_examples() {
        let op = make_dirichlet_laplacian(1).unwrap();
        let y = op.yosida_apply(1.0, &FieldState::new(vec![1.0])).unwrap();
        assert!((y.coords[0] - 0.5).abs() < 1e-15);

        let op = SpectralOperator::new(vec![-1.0, -4.0], "test").unwrap();
        let y = op
            .yosida_apply(4.0, &FieldState::new(vec![0.0, 1.0]))
            .unwrap();
        assert!((y.coords[0]).abs() < 1e-15);
        assert!((y.coords[1] - 0.5).abs() < 1e-15);

        assert!(op.yosida_apply(0.0, &FieldState::new(vec![1.0, 1.0])).is_err());
        assert!(op.yosida_apply(-2.0, &FieldState::new(vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn yosida_resolvent_limit() {
        let op = make_dirichlet_laplacian(4).unwrap();
        let x = FieldState::new(vec![0.9, -0.4, 0.2, 1.5]);
        let y = op.yosida_apply(1e9, &x).unwrap();
        for (a, b) in x.coords.iter().zip(&y.coords) {
            assert!(((a - b) / a).abs() < 1e-6);
        }
    }

    #[test]
    fn contraction_property() {
        let op = make_dirichlet_laplacian(5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = random_state(5, &mut rng);
            let t = rng.random::<f64>() * 4.0;
            let y = op.semigroup_apply(t, &x).unwrap();
            assert!(y.norm() <= x.norm() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn semigroup_law() {
        let op = make_dirichlet_laplacian(4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut x = random_state(4, &mut rng);
            let scale = x.norm();
            if scale > 0.0 {
                x = x.scaled(1.0 / scale);
            }
            let s = rng.random::<f64>() * 2.0;
            let t = rng.random::<f64>() * 2.0;
            let two_step = op
                .semigroup_apply(s, &op.semigroup_apply(t, &x).unwrap())
                .unwrap();
            let one_step = op.semigroup_apply(s + t, &x).unwrap();
            let diff = (two_step - one_step).norm();
            assert!(diff <= 1e-12, "semigroup law violated by {diff}");
        }
    }

    #[test]
    fn yosida_monotone_convergence() {
        let op = make_dirichlet_laplacian(4).unwrap();
        let x = FieldState::new(vec![1.0, -0.5, 0.25, 2.0]);
        let mut last = f64::INFINITY;
        for n in [1.0, 10.0, 100.0, 1000.0] {
            let gap = (op.yosida_apply(n, &x).unwrap() - x.clone()).norm();
            assert!(gap <= last);
            last = gap;
        }
    }
}
