//! The power family `f^q(y) = y^q / q` (with `q = 0` the logarithm) and the
//! gradient and Hessian of `f^q ∘ p`.
//!
//! Composed quantities are assembled from `(log p, ∇p/p, H_p/p)`:
//!
//! ```text
//! ∇(f∘p)   = p^q · r
//! H_{f∘p}  = p^q · (H_p/p + (q − 1) r rᵀ)        with r = ∇p/p
//! ```
//!
//! The bracketed matrix is a positive multiple of both `H_{f∘p}` and the
//! modified Hessian `H_p^f`, so ridge tests use it directly and never form
//! `p^q`, which overflows for strongly negative `q`.

use nalgebra::{DMatrix, DVector};

use crate::cloud::Point;
use crate::density::{DensityModel, LogDerivatives};
use crate::error::{invalid, Error, Result};

/// Exponents closer to zero than this use the logarithm branch.
pub const LOG_BRANCH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTransform {
    q: f64,
}

impl PowerTransform {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q > 1.0 || q == f64::NEG_INFINITY {
            return Err(invalid(format!("power exponent must be finite and <= 1, got {q}")));
        }
        let q = if q.abs() < LOG_BRANCH_EPS { 0.0 } else { q };
        Ok(Self { q })
    }

    pub fn identity() -> Self {
        Self { q: 1.0 }
    }

    pub fn log() -> Self {
        Self { q: 0.0 }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_log(&self) -> bool {
        self.q == 0.0
    }

    fn check(y: f64) -> Result<()> {
        if y > 0.0 && y.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("power transform needs a positive argument, got {y}")))
        }
    }

    pub fn apply(&self, y: f64) -> Result<f64> {
        Self::check(y)?;
        Ok(if self.is_log() { y.ln() } else { y.powf(self.q) / self.q })
    }

    /// `f'(y) = y^{q−1}`.
    pub fn deriv1(&self, y: f64) -> Result<f64> {
        Self::check(y)?;
        Ok(((self.q - 1.0) * y.ln()).exp())
    }

    /// `f''(y) = (q − 1) y^{q−2}`.
    pub fn deriv2(&self, y: f64) -> Result<f64> {
        Self::check(y)?;
        Ok((self.q - 1.0) * ((self.q - 2.0) * y.ln()).exp())
    }

    /// `f''(y) / f'(y) = (q − 1) / y`.
    pub fn curvature_ratio(&self, y: f64) -> Result<f64> {
        Self::check(y)?;
        Ok((self.q - 1.0) / y)
    }
}

/// `H_p/p + (q − 1)·r rᵀ`: a positive multiple of `H_{f∘p}`.
pub fn normalized_hessian(ld: &LogDerivatives, t: PowerTransform) -> DMatrix<f64> {
    let r = &ld.grad_ratio;
    let mut m = ld.hess_ratio.clone();
    m.ger(t.q() - 1.0, r, r, 1.0);
    m
}

fn power_of_density(ld: &LogDerivatives, exponent: f64) -> Result<f64> {
    let s = (exponent * ld.log_p).exp();
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::Domain(format!(
            "p^{exponent} with log p = {} is not representable",
            ld.log_p
        )))
    }
}

/// `∇(f∘p)(x) = f'(p)·∇p`.
pub fn composed_grad(model: &dyn DensityModel, t: PowerTransform, x: &Point) -> Result<DVector<f64>> {
    let ld = model.log_derivatives(x)?;
    Ok(&ld.grad_ratio * power_of_density(&ld, t.q())?)
}

/// `H_{f∘p}(x) = f'(p)·H_p^f(x)`.
pub fn composed_hess(model: &dyn DensityModel, t: PowerTransform, x: &Point) -> Result<DMatrix<f64>> {
    let ld = model.log_derivatives(x)?;
    Ok(normalized_hessian(&ld, t) * power_of_density(&ld, t.q())?)
}

/// `H_p^f(x) = H_p + (f''(p)/f'(p))·∇p ∇pᵀ`.
pub fn modified_hessian(model: &dyn DensityModel, t: PowerTransform, x: &Point) -> Result<DMatrix<f64>> {
    let ld = model.log_derivatives(x)?;
    Ok(normalized_hessian(&ld, t) * power_of_density(&ld, 1.0)?)
}

/// Derivatives of the reparameterization `g` with `f^{q1} = g ∘ f^{q2}`,
/// expressed in the original variable: `g' = y^{q1−q2}`,
/// `g'' = (q1 − q2)·y^{q1−2q2}`.
pub fn reparam_check(q1: f64, q2: f64, y: f64) -> Result<(f64, f64)> {
    if !(q1 <= q2 && q2 <= 1.0) || !q1.is_finite() {
        return Err(invalid(format!("need q1 <= q2 <= 1, got q1={q1}, q2={q2}")));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("reparameterization needs y > 0, got {y}")));
    }
    let g1 = ((q1 - q2) * y.ln()).exp();
    let g2 = (q1 - q2) * ((q1 - 2.0 * q2) * y.ln()).exp();
    Ok((g1, g2))
}
