//! The piecewise power/linear preference function and its parameter domain.
//!
//! b(k) = k^α + ε below the changeover degree k₀ and continues linearly with
//! slope β above it. The two branches meet at k₀ by construction, and b(0) = ε
//! since 0^α = 0 for every α > 0.

use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters (α, β, ε, k₀) of the preference function.
///
/// Validated on construction; downstream code assumes validity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefParams {
    alpha: f64,
    beta: f64,
    epsilon: f64,
    k0: u32,
}

impl PrefParams {
    pub fn new(alpha: f64, beta: f64, epsilon: f64, k0: u32) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        if k0 < 1 {
            return Err(Error::InvalidParams(format!("k0 must be at least 1, got {k0}")));
        }
        Ok(Self { alpha, beta, epsilon, k0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    /// b(k₀) = k₀^α + ε, the value where the linear branch starts.
    pub fn changeover_value(&self) -> f64 {
        (self.k0 as f64).powf(self.alpha) + self.epsilon
    }

    /// Evaluate the preference function b(k).
    ///
    /// Always strictly positive: ε > 0 keeps degree-0 vertices reachable.
    pub fn eval(&self, k: u64) -> f64 {
        let v = if k < u64::from(self.k0) {
            (k as f64).powf(self.alpha) + self.epsilon
        } else {
            self.changeover_value() + self.beta * ((k - u64::from(self.k0)) as f64)
        };
        debug_assert!(v > 0.0, "preference function must stay positive");
        v
    }

    /// lim b(k+1) − b(k) as k → ∞, which is exactly the slope β.
    pub fn diff_limit(&self) -> f64 {
        self.beta
    }
}
