//! Adaptive Metropolis–Hastings over (α, β, ε, k₀).
//!
//! Two update blocks per iteration: a joint Gaussian random walk on
//! (log α, log β, log ε) whose proposal covariance adapts to the running
//! empirical covariance (Haario-style, scale 2.38²/3, frozen jitter), and a
//! symmetric integer random walk on k₀ reflected at its support bounds. The
//! log-posterior is the truncated likelihood plus Exponential-rate priors on
//! the continuous parameters, a discrete-uniform prior on k₀, and the
//! Jacobian of the log transform.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::DegreeCounts;
use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood_cached, LambdaCache};
use crate::limit::{fmt_g, LimitModel};
use crate::pref::PrefParams;

/// Prior specification: Ga(1, rate) ≡ Exponential(rate) on each continuous
/// parameter and a discrete uniform on k₀ ∈ {1, …, k0_max}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Priors {
    pub alpha_rate: f64,
    pub beta_rate: f64,
    pub epsilon_rate: f64,
    pub k0_max: u32,
}

impl Default for Priors {
    fn default() -> Self {
        Self { alpha_rate: 0.01, beta_rate: 0.01, epsilon_rate: 0.01, k0_max: 10_000 }
    }
}

impl Priors {
    /// Log prior density of the continuous parameters (natural scale).
    fn log_density_continuous(&self, alpha: f64, beta: f64, epsilon: f64) -> f64 {
        if !(alpha > 0.0 && beta > 0.0 && epsilon > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.alpha_rate.ln() - self.alpha_rate * alpha + self.beta_rate.ln()
            - self.beta_rate * beta
            + self.epsilon_rate.ln()
            - self.epsilon_rate * epsilon
    }

    fn k0_in_support(&self, k0: u32) -> bool {
        (1..=self.k0_max).contains(&k0)
    }
}

/// Sampler configuration. The defaults match the documented run shape:
/// 50,000 iterations with a 10,000-draw burn-in, adaptation starting after
/// 1,000 iterations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Iterations before the continuous proposal switches to the adapted
    /// covariance.
    pub adapt_start: usize,
    /// Frozen diagonal jitter added to the adapted covariance.
    pub jitter: f64,
    /// Pre-adaptation proposal standard deviation on the log scale.
    pub init_step: f64,
    /// Half-width of the symmetric integer proposal for k₀.
    pub k0_step_width: u32,
    pub solver_tol: f64,
    /// Test hook: drop the likelihood term and sample the prior.
    pub prior_only: bool,
    pub priors: Priors,
    /// Optional override of the initial state (α, β, ε, k₀).
    pub init: Option<(f64, f64, f64, u32)>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 50_000,
            burn_in: 10_000,
            adapt_start: 1_000,
            jitter: 1e-6,
            init_step: 0.1,
            k0_step_width: 5,
            solver_tol: 1e-10,
            prior_only: false,
            priors: Priors::default(),
            init: None,
        }
    }
}

/// One stored draw. `lambda_star` is NaN in prior-only runs (no likelihood
/// evaluation means no solve).
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub k0: u32,
    pub lambda_star: f64,
    pub log_post: f64,
    /// Bitmask: 1 = continuous block accepted, 2 = k₀ block accepted.
    pub accepted_block: u8,
}

/// A completed chain with acceptance statistics and its config snapshot.
#[derive(Debug, Clone)]
pub struct Chain {
    pub draws: Vec<Draw>,
    pub accepted_continuous: u64,
    pub accepted_k0: u64,
    pub seed: u64,
    pub config: SamplerConfig,
}

impl Chain {
    pub fn acceptance_rate_continuous(&self) -> f64 {
        self.accepted_continuous as f64 / self.draws.len() as f64
    }

    pub fn acceptance_rate_k0(&self) -> f64 {
        self.accepted_k0 as f64 / self.draws.len() as f64
    }

    pub fn retained(&self, burn_in: usize) -> &[Draw] {
        &self.draws[burn_in.min(self.draws.len())..]
    }

    /// CSV with header (iter, alpha, beta, epsilon, k0, lambda_star,
    /// log_post, accepted_block).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,alpha,beta,epsilon,k0,lambda_star,log_post,accepted_block")?;
        for (i, d) in self.draws.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                i,
                fmt_g(d.alpha),
                fmt_g(d.beta),
                fmt_g(d.epsilon),
                d.k0,
                fmt_g(d.lambda_star),
                fmt_g(d.log_post),
                d.accepted_block
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Two-block engine over a generic log target. The target sees the continuous
// block on the unconstrained (log) scale plus the integer coordinate, and
// returns (log density, payload) where the payload rides along into storage
// (fit uses it for λ*).
// ---------------------------------------------------------------------------

struct RunningMoments {
    count: f64,
    mean: [f64; 3],
    m2: [[f64; 3]; 3],
}

impl RunningMoments {
    fn new() -> Self {
        Self { count: 0.0, mean: [0.0; 3], m2: [[0.0; 3]; 3] }
    }

    fn update(&mut self, z: &[f64; 3]) {
        self.count += 1.0;
        let mut delta = [0.0; 3];
        for i in 0..3 {
            delta[i] = z[i] - self.mean[i];
            self.mean[i] += delta[i] / self.count;
        }
        for i in 0..3 {
            for j in 0..3 {
                self.m2[i][j] += delta[i] * (z[j] - self.mean[j]);
            }
        }
    }

    fn covariance(&self) -> [[f64; 3]; 3] {
        let d = (self.count - 1.0).max(1.0);
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = self.m2[i][j] / d;
            }
        }
        c
    }
}

/// Lower-triangular Cholesky factor of a 3×3 SPD matrix. The jitter added by
/// the caller keeps the input strictly positive definite.
fn cholesky3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = s.max(1e-300).sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

fn reflect_into(mut v: i64, lo: i64, hi: i64) -> i64 {
    for _ in 0..64 {
        if v < lo {
            v = 2 * lo - v;
        } else if v > hi {
            v = 2 * hi - v;
        } else {
            return v;
        }
    }
    v.clamp(lo, hi)
}

struct EngineDraw {
    z: [f64; 3],
    k0: u32,
    log_post: f64,
    payload: f64,
    accepted_block: u8,
}

struct EngineOut {
    draws: Vec<EngineDraw>,
    accepted_continuous: u64,
    accepted_k0: u64,
}

fn run_two_block<F>(
    mut target: F,
    init_z: [f64; 3],
    init_k0: u32,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<EngineOut>
where
    F: FnMut(&[f64; 3], u32) -> (f64, f64),
{
    if cfg.iterations == 0 || cfg.burn_in >= cfg.iterations {
        return Err(Error::Sampler(format!(
            "need burn_in < iterations, got {} vs {}",
            cfg.burn_in, cfg.iterations
        )));
    }
    if cfg.k0_step_width < 1 || cfg.k0_step_width >= cfg.priors.k0_max {
        return Err(Error::Sampler(format!(
            "k0 step width {} outside (0, k0_max)",
            cfg.k0_step_width
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut z, mut k0) = (init_z, init_k0);
    let (mut lp, mut payload) = target(&z, k0);
    if !lp.is_finite() {
        return Err(Error::Sampler(format!(
            "initial log-posterior is not finite at z={z:?}, k0={k0}; \
             provide a different initialization via the config"
        )));
    }

    let s = 2.38 * 2.38 / 3.0;
    let mut moments = RunningMoments::new();
    let mut chol = [[0.0; 3]; 3];
    let mut adapted = false;
    // Moment collection skips the opening drift towards the mode, and the
    // estimator restarts once after the chain has settled; otherwise the
    // transient inflates the empirical covariance for the whole run and the
    // adapted proposals overshoot.
    let moments_from = cfg.adapt_start / 2;
    let moments_restart = cfg.adapt_start * 5;

    let mut out = EngineOut {
        draws: Vec::with_capacity(cfg.iterations),
        accepted_continuous: 0,
        accepted_k0: 0,
    };

    for iter in 0..cfg.iterations {
        let mut accepted_block = 0u8;

        // Block A: joint Gaussian walk on the log-scale continuous block.
        if iter >= cfg.adapt_start && moments.count >= 100.0 && (!adapted || iter % 50 == 0) {
            let mut c = moments.covariance();
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] *= s;
                }
                c[i][i] += cfg.jitter;
            }
            chol = cholesky3(&c);
            adapted = true;
        }
        let eta: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let mut zp = z;
        if adapted {
            for i in 0..3 {
                for k in 0..=i {
                    zp[i] += chol[i][k] * eta[k];
                }
            }
        } else {
            for i in 0..3 {
                zp[i] += cfg.init_step * eta[i];
            }
        }
        let (lpp, plp) = target(&zp, k0);
        if rng.random::<f64>().ln() < lpp - lp {
            z = zp;
            lp = lpp;
            payload = plp;
            out.accepted_continuous += 1;
            accepted_block |= 1;
        }

        // Block B: symmetric integer walk on k₀, reflected at the support.
        let w = i64::from(cfg.k0_step_width);
        let mag = rng.random_range(1..=w);
        let delta = if rng.random::<bool>() { mag } else { -mag };
        let k0p = reflect_into(i64::from(k0) + delta, 1, i64::from(cfg.priors.k0_max)) as u32;
        let (lpp, plp) = target(&z, k0p);
        if rng.random::<f64>().ln() < lpp - lp {
            k0 = k0p;
            lp = lpp;
            payload = plp;
            out.accepted_k0 += 1;
            accepted_block |= 2;
        }

        if iter == moments_restart {
            moments = RunningMoments::new();
        }
        if iter >= moments_from {
            moments.update(&z);
        }
        out.draws.push(EngineDraw { z, k0, log_post: lp, payload, accepted_block });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// 90th percentile of the observed positive degrees, the default k₀ start.
/// Degree-0 vertices are excluded: they usually dominate the counts and
/// would pin the start to the bottom of the support.
fn degree_percentile(d: &DegreeCounts, q: f64) -> u64 {
    let total: u64 = d.counts().range(1..).map(|(_, &n)| n).sum();
    if total == 0 {
        return 1;
    }
    let cut = (q * total as f64).ceil() as u64;
    let mut cum = 0;
    for (&k, &n) in d.counts().range(1..) {
        cum += n;
        if cum >= cut {
            return k;
        }
    }
    d.max_degree()
}

/// Run the sampler against a degree-count vector truncated at `l`.
/// Deterministic for fixed (data, config, seed).
pub fn fit(d: &DegreeCounts, l: u64, cfg: &SamplerConfig, seed: u64) -> Result<Chain> {
    if d.counts().range(l..).next().is_none() {
        return Err(Error::Data(format!("no counts at or above the truncation level {l}")));
    }
    let priors = cfg.priors;
    let cache = LambdaCache::new();
    let target = |z: &[f64; 3], k0: u32| -> (f64, f64) {
        let (alpha, beta, epsilon) = (z[0].exp(), z[1].exp(), z[2].exp());
        if !(alpha.is_finite() && beta.is_finite() && epsilon.is_finite()) {
            return (f64::NEG_INFINITY, f64::NAN);
        }
        if !priors.k0_in_support(k0) {
            return (f64::NEG_INFINITY, f64::NAN);
        }
        let mut lp = priors.log_density_continuous(alpha, beta, epsilon);
        // Jacobian of the log transform.
        lp += z[0] + z[1] + z[2];
        if !lp.is_finite() {
            return (f64::NEG_INFINITY, f64::NAN);
        }
        if cfg.prior_only {
            return (lp, f64::NAN);
        }
        let Ok(p) = PrefParams::new(alpha, beta, epsilon, k0) else {
            return (f64::NEG_INFINITY, f64::NAN);
        };
        match log_likelihood_cached(&cache, d, &p, l, cfg.solver_tol) {
            Ok(ll) => (lp + ll.value, ll.lambda_star),
            Err(_) => (f64::NEG_INFINITY, f64::NAN),
        }
    };

    let (a0, b0, e0, k00) = cfg.init.unwrap_or_else(|| {
        let k = degree_percentile(d, 0.9).clamp(1, u64::from(priors.k0_max)) as u32;
        (1.0, 1.0, 1.0, k)
    });
    if !(a0 > 0.0 && b0 > 0.0 && e0 > 0.0) || !priors.k0_in_support(k00) {
        return Err(Error::Sampler(format!(
            "initial state ({a0}, {b0}, {e0}, {k00}) is outside the prior support"
        )));
    }

    let out = run_two_block(target, [a0.ln(), b0.ln(), e0.ln()], k00, cfg, seed)?;
    let draws = out
        .draws
        .into_iter()
        .map(|d| Draw {
            alpha: d.z[0].exp(),
            beta: d.z[1].exp(),
            epsilon: d.z[2].exp(),
            k0: d.k0,
            lambda_star: d.payload,
            log_post: d.log_post,
            accepted_block: d.accepted_block,
        })
        .collect();
    Ok(Chain {
        draws,
        accepted_continuous: out.accepted_continuous,
        accepted_k0: out.accepted_k0,
        seed,
        config: *cfg,
    })
}

// ---------------------------------------------------------------------------
// Summaries and bands
// ---------------------------------------------------------------------------

/// Mean, median, central 95% interval, and effective sample size.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub alpha: ParamSummary,
    pub beta: ParamSummary,
    pub epsilon: ParamSummary,
    pub k0: ParamSummary,
    /// Tail index ξ = β/λ* per draw; NaN-omitted for prior-only chains.
    pub xi: Option<ParamSummary>,
    pub acceptance_rate_continuous: f64,
    pub acceptance_rate_k0: f64,
    pub n_retained: usize,
    pub burn_in: usize,
    /// True when every retained draw is identical.
    pub degenerate: bool,
    pub seed: u64,
    pub config: SamplerConfig,
}

/// Type-7 quantile (linear interpolation) of an unsorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Effective sample size via the initial-positive-sequence estimator.
fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 8 {
        return n as f64;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| -> f64 {
        xs[..n - lag]
            .iter()
            .zip(&xs[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (n as f64 * var)
    };
    let mut tau = 1.0;
    let mut m = 0;
    loop {
        let pair = acf(2 * m + 1) + acf(2 * m + 2);
        if pair <= 0.0 || 2 * m + 2 >= n / 2 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    n as f64 / tau
}

fn summarize(values: &[f64]) -> ParamSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ParamSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: quantile(&sorted, 0.5),
        q025: quantile(&sorted, 0.025),
        q975: quantile(&sorted, 0.975),
        ess: effective_sample_size(values),
    }
}

/// Summaries over the post-burn-in draws.
pub fn posterior_summary(chain: &Chain, burn_in: usize) -> Result<PosteriorSummary> {
    if burn_in >= chain.draws.len() {
        return Err(Error::Sampler(format!(
            "burn-in {burn_in} is not below the chain length {}",
            chain.draws.len()
        )));
    }
    let kept = chain.retained(burn_in);
    let alpha: Vec<f64> = kept.iter().map(|d| d.alpha).collect();
    let beta: Vec<f64> = kept.iter().map(|d| d.beta).collect();
    let epsilon: Vec<f64> = kept.iter().map(|d| d.epsilon).collect();
    let k0: Vec<f64> = kept.iter().map(|d| f64::from(d.k0)).collect();
    let xi: Vec<f64> = kept
        .iter()
        .filter(|d| d.lambda_star.is_finite())
        .map(|d| d.beta / d.lambda_star)
        .collect();
    let first = &kept[0];
    let degenerate = kept.iter().all(|d| {
        d.alpha == first.alpha && d.beta == first.beta && d.epsilon == first.epsilon && d.k0 == first.k0
    });
    Ok(PosteriorSummary {
        alpha: summarize(&alpha),
        beta: summarize(&beta),
        epsilon: summarize(&epsilon),
        k0: summarize(&k0),
        xi: if xi.is_empty() { None } else { Some(summarize(&xi)) },
        acceptance_rate_continuous: chain.acceptance_rate_continuous(),
        acceptance_rate_k0: chain.acceptance_rate_k0(),
        n_retained: kept.len(),
        burn_in,
        degenerate,
        seed: chain.seed,
        config: chain.config,
    })
}

/// A pointwise posterior band at one degree.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandPoint {
    pub k: u64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

fn band_from_curves<G: Fn(&Draw, u64) -> f64>(
    draws: &[Draw],
    ks: &[u64],
    level: f64,
    eval: G,
) -> Vec<BandPoint> {
    let tail = (1.0 - level) / 2.0;
    ks.iter()
        .map(|&k| {
            let mut vals: Vec<f64> = draws.iter().map(|d| eval(d, k)).collect();
            vals.sort_by(f64::total_cmp);
            BandPoint {
                k,
                lower: quantile(&vals, tail),
                median: quantile(&vals, 0.5),
                upper: quantile(&vals, 1.0 - tail),
            }
        })
        .collect()
}

/// Pointwise survival band over the retained draws.
pub fn posterior_survival_band(
    chain: &Chain,
    burn_in: usize,
    ks: &[u64],
    level: f64,
) -> Result<Vec<BandPoint>> {
    let kept: Vec<Draw> = chain
        .retained(burn_in)
        .iter()
        .copied()
        .filter(|d| d.lambda_star.is_finite())
        .collect();
    if kept.is_empty() {
        return Err(Error::Sampler("no solved draws available for survival bands".into()));
    }
    // One model rebuild per draw, not per (draw, k).
    let models: Vec<LimitModel> = kept
        .iter()
        .map(|d| {
            let p = PrefParams::new(d.alpha, d.beta, d.epsilon, d.k0)?;
            LimitModel::from_parts(p, d.lambda_star)
        })
        .collect::<Result<_>>()?;
    let tail = (1.0 - level) / 2.0;
    Ok(ks
        .iter()
        .map(|&k| {
            let mut vals: Vec<f64> = models.iter().map(|m| m.survival(k as i64)).collect();
            vals.sort_by(f64::total_cmp);
            BandPoint {
                k,
                lower: quantile(&vals, tail),
                median: quantile(&vals, 0.5),
                upper: quantile(&vals, 1.0 - tail),
            }
        })
        .collect())
}

/// Pointwise preference-function band b(k) over the retained draws.
pub fn posterior_pref_band(
    chain: &Chain,
    burn_in: usize,
    ks: &[u64],
    level: f64,
) -> Result<Vec<BandPoint>> {
    let kept = chain.retained(burn_in);
    if kept.is_empty() {
        return Err(Error::Sampler("empty chain".into()));
    }
    Ok(band_from_curves(kept, ks, level, |d, k| {
        PrefParams::new(d.alpha, d.beta, d.epsilon, d.k0)
            .map(|p| p.eval(k))
            .unwrap_or(f64::NAN)
    }))
}

/// (k, lower, median, upper) rows.
pub fn write_band_csv<W: Write>(band: &[BandPoint], mut w: W) -> Result<()> {
    writeln!(w, "k,lower,median,upper")?;
    for b in band {
        writeln!(w, "{},{},{},{}", b.k, fmt_g(b.lower), fmt_g(b.median), fmt_g(b.upper))?;
    }
    Ok(())
}
