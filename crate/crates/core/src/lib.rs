//! Generalized preferential attachment networks: limiting degree
//! distributions, growth simulation, and Bayesian inference of the preference
//! function from an observed degree distribution.
//!
//! The preference function is piecewise power/linear: b(k) = k^α + ε below a
//! changeover degree k₀ and linear with slope β above it, which pins the tail
//! index of the limiting degree distribution at β/λ* where λ* solves
//! ρ̂(λ*) = 1.
//!
//! Modules:
//! - [`pref`]: the preference function and its parameter domain.
//! - [`limit`]: λ* solver, survival/pmf, tail index, IGP tail approximation,
//!   Ω tail diagnostic, ξ parameter grids.
//! - [`sim`]: seeded network growth simulator over degree classes.
//! - [`data`]: edge-list and degree-count ingestion with truncation.
//! - [`likelihood`]: truncated log-likelihood of a degree-count vector.
//! - [`mcmc`]: adaptive Metropolis–Hastings over (α, β, ε, k₀) with
//!   posterior summaries and survival/preference bands.

pub mod data;
pub mod error;
pub mod likelihood;
pub mod limit;
pub mod mcmc;
pub mod pref;
pub mod sim;
pub mod special;

pub use data::{DegreeCounts, DegreeMode};
pub use error::{Error, Result};
pub use limit::{LimitModel, IgpParams};
pub use pref::PrefParams;
