//! Truncated log-likelihood of a degree-count vector under the limiting
//! degree distribution.
//!
//! The likelihood of counts n with minimum modeled degree l is
//! Σ_{i≥l} n_i · log[ f(i) / F̄(l−1) ]: each vertex contributes its pmf value
//! conditioned on having degree at least l. At l = 0 the conditioning factor
//! is 1 and this is the plain product-form likelihood.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::data::DegreeCounts;
use crate::error::{Error, Result};
use crate::limit::{solve_lambda_star, LimitModel};
use crate::pref::PrefParams;

/// Degrees above this are treated as data errors rather than evaluated.
pub const DEGREE_HARD_CAP: u64 = 100_000_000;

/// Log-likelihood value with the λ* and truncation level it was computed at.
#[derive(Debug, Clone, Copy)]
pub struct LogLik {
    pub value: f64,
    pub lambda_star: f64,
    pub l: u64,
}

/// Memoizes λ* per exact parameter bit pattern.
///
/// Root solves dominate repeated likelihood evaluation at the same point
/// (rejected proposals, revisited states), so the cache is keyed on the raw
/// bits of (α, β, ε) plus k₀. Safe for concurrent use.
#[derive(Default)]
pub struct LambdaCache {
    map: Mutex<HashMap<(u64, u64, u64, u32), f64>>,
}

impl LambdaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&self, p: &PrefParams, tol: f64) -> Result<f64> {
        let key = (p.alpha().to_bits(), p.beta().to_bits(), p.epsilon().to_bits(), p.k0());
        if let Some(&hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit);
        }
        let lambda = solve_lambda_star(p, tol)?;
        self.map.lock().unwrap().insert(key, lambda);
        Ok(lambda)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// log[ f(k) / F̄(l−1) ], the per-vertex contribution at degree k ≥ l.
pub fn log_conditional_pmf(model: &LimitModel, k: u64, l: u64) -> f64 {
    debug_assert!(k >= l);
    model.log_pmf(k) - model.log_survival(l as i64 - 1)
}

/// Evaluate the truncated log-likelihood, solving λ* afresh.
pub fn log_likelihood(d: &DegreeCounts, p: &PrefParams, l: u64, tol: f64) -> Result<LogLik> {
    log_likelihood_with_cap(d, p, l, tol, DEGREE_HARD_CAP)
}

/// As [`log_likelihood`] with a caller-chosen degree cap.
pub fn log_likelihood_with_cap(
    d: &DegreeCounts,
    p: &PrefParams,
    l: u64,
    tol: f64,
    cap: u64,
) -> Result<LogLik> {
    let lambda = solve_lambda_star(p, tol)?;
    log_likelihood_at(d, p, lambda, l, cap)
}

/// Evaluate the truncated log-likelihood reusing a λ* cache.
pub fn log_likelihood_cached(
    cache: &LambdaCache,
    d: &DegreeCounts,
    p: &PrefParams,
    l: u64,
    tol: f64,
) -> Result<LogLik> {
    let lambda = cache.solve(p, tol)?;
    log_likelihood_at(d, p, lambda, l, DEGREE_HARD_CAP)
}

fn log_likelihood_at(d: &DegreeCounts, p: &PrefParams, lambda: f64, l: u64, cap: u64) -> Result<LogLik> {
    if d.max_degree() > cap {
        return Err(Error::Data(format!(
            "max degree {} exceeds the hard cap {cap}",
            d.max_degree()
        )));
    }
    let model = LimitModel::from_parts(*p, lambda)?;
    let log_tail = model.log_survival(l as i64 - 1);
    let mut value = 0.0;
    let mut modeled = 0u64;
    // Counts representation: one pmf evaluation per unique degree.
    for (&k, &n) in d.counts().range(l..) {
        value += n as f64 * (model.log_pmf(k) - log_tail);
        modeled += n;
    }
    if modeled == 0 {
        return Err(Error::Data(format!("no counts at or above the truncation level {l}")));
    }
    if !value.is_finite() {
        return Err(Error::Data(format!("log-likelihood is not finite at {p:?}")));
    }
    Ok(LogLik { value, lambda_star: lambda, l })
}
