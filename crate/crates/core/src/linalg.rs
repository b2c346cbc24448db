//! Incremental ridge regression.
//!
//! [`RidgeState`] keeps the regularized Gram matrix `V = λI + Σ x xᵀ`, its
//! inverse, the moment vector `W = Σ y x` and the estimate `θ̂ = V⁻¹ W`.
//! The inverse is maintained with the Sherman–Morrison rank-1 identity and
//! rebuilt from a Cholesky factorization every [`REFRESH_EVERY`] updates.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Number of rank-1 updates between full Cholesky refreshes of `V⁻¹`.
pub const REFRESH_EVERY: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    lambda: f64,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    moment: DVector<f64>,
    estimate: DVector<f64>,
    updates: usize,
    observations: usize,
}

impl RidgeState {
    /// `V₀ = λI`, `W₀ = 0`, `θ̂₀ = 0`.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("ridge dimension must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "ridge regularizer must be finite and positive, got {lambda}"
            )));
        }
        Ok(Self {
            lambda,
            gram: DMatrix::identity(dim, dim) * lambda,
            gram_inv: DMatrix::identity(dim, dim) / lambda,
            moment: DVector::zeros(dim),
            estimate: DVector::zeros(dim),
            updates: 0,
            observations: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.estimate
    }

    /// Rank-1 updates applied since the last full refresh.
    pub fn updates_since_refresh(&self) -> usize {
        self.updates
    }

    /// Total number of `update` calls, including zero contexts.
    pub fn observations(&self) -> usize {
        self.observations
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Adds the observation `(x, y)`.
    pub fn update(&mut self, x: &DVector<f64>, y: f64) -> Result<()> {
        self.check_dim(x)?;
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite context or reward".into()));
        }
        self.observations += 1;
        self.updates += 1;
        let zero = x.iter().all(|&v| v == 0.0);
        if !zero {
            self.gram.ger(1.0, x, x, 1.0);
            self.moment.axpy(y, x, 1.0);
        }
        if self.updates >= REFRESH_EVERY {
            self.refresh()?;
        } else if !zero {
            // (V + xxᵀ)⁻¹ = V⁻¹ − V⁻¹x xᵀV⁻¹ / (1 + xᵀV⁻¹x)
            let v = &self.gram_inv * x;
            let denom = 1.0 + x.dot(&v);
            self.gram_inv.ger(-1.0 / denom, &v, &v, 1.0);
            self.estimate = &self.gram_inv * &self.moment;
        }
        Ok(())
    }

    /// Rebuilds `V⁻¹` and `θ̂` from a Cholesky factorization of `V`.
    pub fn refresh(&mut self) -> Result<()> {
        let chol = self
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("Gram matrix lost positive definiteness".into()))?;
        self.gram_inv = chol.inverse();
        self.estimate = &self.gram_inv * &self.moment;
        self.updates = 0;
        Ok(())
    }

    /// `‖x‖²_{V⁻¹} = xᵀ V⁻¹ x`, clamped at zero.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.quad_inv(x))
    }

    pub(crate) fn quad_inv(&self, x: &DVector<f64>) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for j in 0..d {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.gram_inv.column(j);
            let mut s = 0.0;
            for i in 0..d {
                s += col[i] * x[i];
            }
            acc += s * xj;
        }
        acc.max(0.0)
    }

    /// `⟨θ̂, x⟩`.
    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.estimate.dot(x))
    }

    /// Lower-triangular `L` with `L Lᵀ = V⁻¹`.
    pub fn inverse_sqrt_factor(&self) -> Result<DMatrix<f64>> {
        let sym = (&self.gram_inv + self.gram_inv.transpose()) * 0.5;
        sym.cholesky()
            .map(|c| c.unpack())
            .ok_or_else(|| Error::Numeric("inverse Gram matrix is not positive definite".into()))
    }

    /// Max-abs entry of `V · V⁻¹ − I`.
    pub fn inverse_residual(&self) -> f64 {
        let d = self.dim();
        let prod = &self.gram * &self.gram_inv;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).abs());
            }
        }
        worst
    }
}
