//! Limiting degree distribution of the GPA model.
//!
//! The Malthusian parameter λ* is the unique root of ρ̂(λ) = 1 on (β, ∞),
//! where ρ̂ sums the birth-process products of the preference function. With
//! λ* in hand the survival of the limiting degree distribution is a finite
//! product below the changeover degree and a gamma-function ratio above it,
//! the tail index is β/λ*, and the tail is approximated by an integer
//! generalized Pareto distribution.
//!
//! The sum in ρ̂ runs from n = 1: the printed n = 0 empty-product term would
//! make ρ̂ ≥ 1 everywhere and is inconsistent with the linear-preference
//! special case (b(k) = k + 1 must give λ* = 2), so it is excluded.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pref::PrefParams;
use crate::special::ln_gamma_ratio;

/// Default residual tolerance for |ρ̂(λ*) − 1|.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

const MAX_BRACKET_DOUBLINGS: u32 = 200;
const MAX_BISECTIONS: u32 = 500;

/// ρ̂(β + δ) with the pole distance δ = λ − β given explicitly.
///
/// The only ill-conditioned piece of ρ̂ is the b(k₀)/(λ−β) factor; taking δ
/// as the argument keeps it at full relative precision even where λ* − β is
/// far below the spacing of f64 values near β. Everything else is a log-space
/// product sum, exponentiated per term.
pub fn rho_hat_excess(p: &PrefParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "rho_hat requires lambda > beta (delta positive), got delta={delta}"
        )));
    }
    let lambda = p.beta() + delta;
    let mut log_prod = 0.0;
    let mut total = 0.0;
    for n in 1..=u64::from(p.k0()) {
        let b = p.eval(n - 1);
        log_prod += (b / (lambda + b)).ln();
        total += log_prod.exp();
    }
    total += p.changeover_value() / delta * log_prod.exp();
    Ok(total)
}

/// ρ̂(λ): Laplace transform of the birth-process intensity. Strictly
/// decreasing in λ on (β, ∞) with a pole at β.
///
/// Near the pole the accuracy is bounded by how well λ itself can represent
/// the distance to β; use [`rho_hat_excess`] when that distance is known.
pub fn rho_hat(p: &PrefParams, lambda: f64) -> Result<f64> {
    rho_hat_excess(p, lambda - p.beta())
}

/// Solve ρ̂(λ*) = 1 and return (λ*, λ* − β).
///
/// Works on the pole distance δ = λ − β: the initial bracket [β/2, β]
/// (i.e. λ ∈ [1.5β, 2β]) is expanded geometrically in both directions until
/// it straddles the root, then bisected in log δ until the residual meets
/// `tol`. The returned δ is exact to f64 relative precision even when λ*
/// is indistinguishable from β as an f64.
pub fn solve_lambda_excess(p: &PrefParams, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParams(format!("solver tol must be positive, got {tol}")));
    }
    let beta = p.beta();
    let mut hi = beta;
    let mut expansions = 0;
    while rho_hat_excess(p, hi)? >= 1.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_BRACKET_DOUBLINGS {
            return Err(Error::Solver(format!(
                "bracket expansion exceeded {MAX_BRACKET_DOUBLINGS} doublings for {p:?}"
            )));
        }
    }
    let mut lo = hi * 0.5;
    while rho_hat_excess(p, lo)? <= 1.0 {
        lo *= 0.5;
        expansions += 1;
        if lo < f64::MIN_POSITIVE || expansions > 4 * MAX_BRACKET_DOUBLINGS {
            return Err(Error::Solver(format!(
                "could not bracket the fixed point above lambda = beta for {p:?}"
            )));
        }
    }
    let (mut llo, mut lhi) = (lo.ln(), hi.ln());
    for _ in 0..MAX_BISECTIONS {
        let mid = ((llo + lhi) * 0.5).exp();
        let r = rho_hat_excess(p, mid)?;
        if (r - 1.0).abs() <= tol {
            return Ok((beta + mid, mid));
        }
        if r > 1.0 {
            llo = mid.ln();
        } else {
            lhi = mid.ln();
        }
        if lhi - llo <= f64::EPSILON {
            break;
        }
    }
    Err(Error::Solver(format!(
        "bisection exhausted without meeting residual tolerance {tol} for {p:?}"
    )))
}

/// Solve ρ̂(λ*) = 1 for the Malthusian parameter λ*.
pub fn solve_lambda_star(p: &PrefParams, tol: f64) -> Result<f64> {
    solve_lambda_excess(p, tol).map(|(lambda, _)| lambda)
}

/// Integer generalized Pareto parameters (shape ξ, scale σ, threshold v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IgpParams {
    pub xi: f64,
    pub sigma: f64,
    pub v: u64,
}

/// Conditional survival Pr(X > x | X > v) = (ξ(x−v)/σ + 1)^(−1/ξ).
pub fn igp_survival(g: &IgpParams, x: u64) -> Result<f64> {
    if x < g.v {
        return Err(Error::InvalidParams(format!(
            "igp_survival requires x >= v, got x={x}, v={}",
            g.v
        )));
    }
    Ok((g.xi * ((x - g.v) as f64) / g.sigma + 1.0).powf(-1.0 / g.xi))
}

/// Shimura's tail diagnostic from three consecutive survival values.
///
/// Requires the evaluator to be strictly positive and strictly decreasing at
/// k, k+1, k+2. Heavy tails with F̄(k) ~ k^(−a) give Ω → 1/a; light tails
/// give Ω → 0.
pub fn omega_diag<F: Fn(u64) -> f64>(survival: F, k: u64) -> Result<f64> {
    let s0 = survival(k);
    let s1 = survival(k + 1);
    let s2 = survival(k + 2);
    if !(s2 > 0.0 && s1 > s2 && s0 > s1) {
        return Err(Error::InvalidParams(format!(
            "omega_diag needs positive strictly decreasing survival at k={k}: got {s0}, {s1}, {s2}"
        )));
    }
    Ok(1.0 / (s1 / s2).ln() - 1.0 / (s0 / s1).ln())
}

/// Partial sum of Γ(n+x)/Γ(n+x+y) over n = 0..terms−1.
///
/// Converges to Γ(x)/((y−1)Γ(x+y−1)) when x > 1 and y > 1; used as the
/// numerical check of that identity.
pub fn gamma_ratio_sum(x: f64, y: f64, terms: u64) -> f64 {
    assert!(x > 0.0 && y > 0.0, "gamma_ratio_sum requires positive x, y");
    (0..terms).map(|n| (-ln_gamma_ratio(x + n as f64, y)).exp()).sum()
}

/// A solved model: preference parameters, Malthusian parameter, and the
/// cached log-survival values below the changeover degree.
///
/// Immutable after construction; every evaluator is a pure function of it.
#[derive(Debug, Clone)]
pub struct LimitModel {
    params: PrefParams,
    lambda_star: f64,
    /// λ* − β at full relative precision (see [`solve_lambda_excess`]).
    delta_star: f64,
    /// log F̄(k) for k = 0..k0−1.
    log_prefix: Vec<f64>,
}

impl LimitModel {
    /// Solve for λ* and build the model.
    pub fn solve(params: PrefParams, tol: f64) -> Result<Self> {
        let (lambda_star, delta_star) = solve_lambda_excess(&params, tol)?;
        Ok(Self::assemble(params, lambda_star, delta_star))
    }

    /// Rebuild a model from an already-solved λ* (e.g. replaying stored MCMC
    /// draws). The caller vouches that λ* satisfies the fixed point.
    pub fn from_parts(params: PrefParams, lambda_star: f64) -> Result<Self> {
        let delta = lambda_star - params.beta();
        if !(delta > 0.0 && lambda_star.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "lambda_star must exceed beta, got {lambda_star} vs beta={}",
                params.beta()
            )));
        }
        Ok(Self::assemble(params, lambda_star, delta))
    }

    fn assemble(params: PrefParams, lambda_star: f64, delta_star: f64) -> Self {
        let k0 = params.k0() as usize;
        let mut log_prefix = Vec::with_capacity(k0);
        let mut acc = 0.0;
        for k in 0..k0 {
            let b = params.eval(k as u64);
            acc += (b / (lambda_star + b)).ln();
            log_prefix.push(acc);
        }
        debug_assert!(log_prefix.windows(2).all(|w| w[1] < w[0]));
        Self { params, lambda_star, delta_star, log_prefix }
    }

    pub fn params(&self) -> &PrefParams {
        &self.params
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    /// λ* − β, kept separately because λ* can sit within one ulp of β.
    pub fn lambda_excess(&self) -> f64 {
        self.delta_star
    }

    /// Tail index ξ = β/λ* in (0, 1), evaluated through the pole distance.
    pub fn tail_index(&self) -> f64 {
        1.0 / (1.0 + self.delta_star / self.params.beta())
    }

    /// (x, y) = (b(k₀)/β, λ*/β), the gamma-ratio coordinates of the tail.
    fn tail_coords(&self) -> (f64, f64) {
        (
            self.params.changeover_value() / self.params.beta(),
            1.0 + self.delta_star / self.params.beta(),
        )
    }

    /// log F̄(k). Defined for k ≥ −1 with log F̄(−1) = 0.
    pub fn log_survival(&self, k: i64) -> f64 {
        assert!(k >= -1, "survival is defined for k >= -1, got {k}");
        if k < 0 {
            return 0.0;
        }
        let k = k as u64;
        let k0 = u64::from(self.params.k0());
        if k < k0 {
            return self.log_prefix[k as usize];
        }
        let (x, y) = self.tail_coords();
        let u = (k - k0) as f64;
        self.log_prefix[k0 as usize - 1] + ln_gamma_ratio(x, y) - ln_gamma_ratio(u + 1.0 + x, y)
    }

    /// Survival F̄(k) of the limiting degree distribution; underflows to 0.
    pub fn survival(&self, k: i64) -> f64 {
        self.log_survival(k).exp()
    }

    /// log f(k): product form below k₀, Beta-ratio form at and above it.
    pub fn log_pmf(&self, k: u64) -> f64 {
        let k0 = u64::from(self.params.k0());
        let lam = self.lambda_star;
        if k < k0 {
            let head = if k == 0 { 0.0 } else { self.log_prefix[k as usize - 1] };
            return (lam / (lam + self.params.eval(k))).ln() + head;
        }
        let (x, y) = self.tail_coords();
        let u = (k - k0) as f64;
        self.log_prefix[k0 as usize - 1] + y.ln() + ln_gamma_ratio(x, u)
            - ln_gamma_ratio(x + y, u + 1.0)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.log_pmf(k).exp()
    }

    /// IGP(β/λ*, b(k₀)/λ*, k₀−1), the tail approximation.
    pub fn igp_approx(&self) -> IgpParams {
        IgpParams {
            xi: self.tail_index(),
            sigma: self.params.changeover_value() / self.lambda_star,
            v: u64::from(self.params.k0()) - 1,
        }
    }

    /// Ω evaluated through the closed form of the model survival ratios,
    /// (log[1 + λ*/b(k+2)])⁻¹ − (log[1 + λ*/b(k+1)])⁻¹.
    ///
    /// Immune to survival underflow, so it stays meaningful at degrees where
    /// F̄ itself is subnormal. Converges to β/λ* as k → ∞.
    pub fn omega_analytic(&self, k: u64) -> f64 {
        let r2 = (self.lambda_star / self.params.eval(k + 2)).ln_1p();
        let r1 = (self.lambda_star / self.params.eval(k + 1)).ln_1p();
        1.0 / r2 - 1.0 / r1
    }
}

/// Inclusive linear range for grid axes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + h * i as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min > 0.0 && self.max >= self.min && self.steps >= 1) {
            return Err(Error::InvalidParams(format!(
                "{name} range must satisfy 0 < min <= max and steps >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// One grid cell; `lambda_star`/`xi` are None when the per-cell solve failed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XiCell {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_star: Option<f64>,
    pub xi: Option<f64>,
}

/// ξ over an (α, β) grid at fixed ε and k₀, row-major in α.
#[derive(Debug, Clone)]
pub struct XiGrid {
    pub epsilon: f64,
    pub k0: u32,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub cells: Vec<XiCell>,
}

impl XiGrid {
    pub fn cell(&self, i: usize, j: usize) -> &XiCell {
        &self.cells[i * self.betas.len() + j]
    }

    pub fn n_valid(&self) -> usize {
        self.cells.iter().filter(|c| c.xi.is_some()).count()
    }

    /// Cells adjacent to the ξ = `target` level set: a valid cell qualifies
    /// when some 4-neighbour sits on the other side of the target.
    pub fn contour_cells(&self, target: f64) -> Vec<&XiCell> {
        let (na, nb) = (self.alphas.len(), self.betas.len());
        let xi = |i: usize, j: usize| self.cell(i, j).xi;
        let mut out = Vec::new();
        for i in 0..na {
            for j in 0..nb {
                let Some(v) = xi(i, j) else { continue };
                let mut bracketed = false;
                let mut visit = |oi: Option<usize>, oj: Option<usize>| {
                    if let (Some(oi), Some(oj)) = (oi, oj) {
                        if oi < na && oj < nb {
                            if let Some(w) = xi(oi, oj) {
                                if (v - target) * (w - target) <= 0.0 {
                                    bracketed = true;
                                }
                            }
                        }
                    }
                };
                visit(i.checked_sub(1), Some(j));
                visit(Some(i + 1), Some(j));
                visit(Some(i), j.checked_sub(1));
                visit(Some(i), Some(j + 1));
                if bracketed {
                    out.push(self.cell(i, j));
                }
            }
        }
        out
    }

    /// CSV with header (alpha, beta, epsilon, k0, lambda_star, xi); failed
    /// cells carry NaN.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,beta,epsilon,k0,lambda_star,xi")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_g(c.alpha),
                fmt_g(c.beta),
                fmt_g(self.epsilon),
                self.k0,
                fmt_g(c.lambda_star.unwrap_or(f64::NAN)),
                fmt_g(c.xi.unwrap_or(f64::NAN)),
            )?;
        }
        Ok(())
    }

    pub fn write_contour_csv<W: Write>(&self, target: f64, mut w: W) -> Result<()> {
        writeln!(w, "alpha,beta,xi")?;
        for c in self.contour_cells(target) {
            writeln!(w, "{},{},{}", fmt_g(c.alpha), fmt_g(c.beta), fmt_g(c.xi.unwrap()))?;
        }
        Ok(())
    }
}

/// Solve ξ = β/λ* for every (α, β) pair. Per-cell solver failures are data
/// (NaN cells), not errors; invalid ranges are errors.
pub fn xi_grid(
    alpha_range: &GridRange,
    beta_range: &GridRange,
    epsilon: f64,
    k0: u32,
    tol: f64,
) -> Result<XiGrid> {
    alpha_range.validate("alpha")?;
    beta_range.validate("beta")?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    if k0 < 1 {
        return Err(Error::InvalidParams("k0 must be at least 1".into()));
    }
    let alphas = alpha_range.values();
    let betas = beta_range.values();
    let mut cells = Vec::with_capacity(alphas.len() * betas.len());
    for &alpha in &alphas {
        for &beta in &betas {
            let solved = PrefParams::new(alpha, beta, epsilon, k0)
                .and_then(|p| solve_lambda_star(&p, tol));
            let (lambda_star, xi) = match solved {
                Ok(l) => (Some(l), Some(beta / l)),
                Err(_) => (None, None),
            };
            cells.push(XiCell { alpha, beta, lambda_star, xi });
        }
    }
    Ok(XiGrid { epsilon, k0, alphas, betas, cells })
}

/// (k, survival, pmf) rows for k = 0..=kmax.
pub fn write_curve_csv<W: Write>(model: &LimitModel, kmax: u64, mut w: W) -> Result<()> {
    writeln!(w, "k,survival,pmf")?;
    for k in 0..=kmax {
        writeln!(w, "{},{},{}", k, fmt_g(model.survival(k as i64)), fmt_g(model.pmf(k)))?;
    }
    Ok(())
}

/// 17 significant digits: enough to reproduce any f64 bit pattern on re-read.
pub(crate) fn fmt_g(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn anchor() -> PrefParams {
        PrefParams::new(0.5, 1.5, 0.01, 20).unwrap()
    }

    fn ba(k0: u32) -> PrefParams {
        PrefParams::new(1.0, 1.0, 1.0, k0).unwrap()
    }

    /// Independent pmf route: single log-sum over all preference factors.
    fn pmf_product_oracle(p: &PrefParams, lambda: f64, k: u64) -> f64 {
        let mut acc = (lambda / (lambda + p.eval(k))).ln();
        for i in 0..k {
            let b = p.eval(i);
            acc += (b / (lambda + b)).ln();
        }
        acc.exp()
    }

    #[test]
    fn rho_hat_hand_example_k0_one() {
        // k0=1, lambda=2, b(k)=k+1: 1/3 + 2/3 = 1.
        let p = ba(1);
        assert!((rho_hat(&p, 2.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rho_hat_domain_and_pole() {
        let p = anchor();
        assert!(rho_hat(&p, 1.5).is_err());
        assert!(rho_hat(&p, 0.3).is_err());
        // Just above the pole the value blows up.
        assert!(rho_hat(&p, 1.5 * (1.0 + 1e-12)).unwrap() > 1e6);
    }

    #[test]
    fn rho_hat_strictly_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let p = PrefParams::new(
                rng.random_range(0.2..2.0),
                rng.random_range(0.05..2.0),
                rng.random_range(0.01..5.0),
                rng.random_range(1..=200),
            )
            .unwrap();
            let mut prev = f64::INFINITY;
            // log-spaced lambda grid on (1.0001 beta, 1e6 beta)
            for i in 0..40 {
                let lam = p.beta() * 1.0001 * (1e6f64 / 1.0001).powf(i as f64 / 39.0);
                let r = rho_hat(&p, lam).unwrap();
                assert!(r < prev, "rho_hat not decreasing at lambda={lam} for {p:?}");
                prev = r;
            }
        }
    }

    #[test]
    fn lambda_star_anchors() {
        // High-precision reference 1.5000065883308825 (the paper's printed
        // 1.500094 reflects a looser solve; both sit inside the paper band).
        let l = solve_lambda_star(&anchor(), 1e-12).unwrap();
        assert!((l - 1.500_006_588_330_882_5).abs() < 1e-8, "got {l}");
        assert!((l - 1.500_094).abs() < 1e-3);

        // Linear preference: lambda* = 2 regardless of k0.
        for k0 in [1, 20, 137] {
            let l = solve_lambda_star(&ba(k0), 1e-12).unwrap();
            assert!((l - 2.0).abs() < 1e-9, "k0={k0}: got {l}");
        }

        // Sub-unit tail index case.
        let p = PrefParams::new(1.5, 0.1, 1.0, 20).unwrap();
        let l = solve_lambda_star(&p, 1e-12).unwrap();
        assert!((l - 2.864_363_103_423_056).abs() < 1e-8, "got {l}");
    }

    #[test]
    fn solver_residual_across_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let p = PrefParams::new(
                rng.random_range(0.2..2.0),
                rng.random_range(0.05..2.0),
                rng.random_range(0.01..5.0),
                rng.random_range(1..=200),
            )
            .unwrap();
            let (lambda, delta) = solve_lambda_excess(&p, 1e-10).unwrap();
            assert!(delta > 0.0 && lambda >= p.beta());
            let res = (rho_hat_excess(&p, delta).unwrap() - 1.0).abs();
            assert!(res <= 1e-10, "residual {res} for {p:?}");
            // Through the f64 lambda value the residual degrades with the
            // pole conditioning 1/delta; assert it only where representable.
            if delta / lambda > 1e-5 {
                let res = (rho_hat(&p, lambda).unwrap() - 1.0).abs();
                assert!(res <= 1e-10, "lambda-space residual {res} for {p:?}");
            }
        }
    }

    #[test]
    fn solver_flags_pathological_parameters() {
        // epsilon/beta spans ~600 octaves: bracket doubling gives up.
        let p = PrefParams::new(1.0, 1e-300, 1e300, 1).unwrap();
        match solve_lambda_star(&p, 1e-10) {
            Err(Error::Solver(_)) => {}
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn survival_matches_ba_closed_form() {
        // The 1e-12 relative target on survival needs lambda* a couple of
        // digits tighter than that (log-survival sensitivity to lambda is
        // about sum 1/(lambda+b(i)) ~ 5 at k = 1000).
        let m = LimitModel::solve(ba(20), 1e-14).unwrap();
        for k in -1..=1000i64 {
            let want = if k < 0 { 1.0 } else { 2.0 / ((k as f64 + 2.0) * (k as f64 + 3.0)) };
            let got = m.survival(k);
            assert!(
                (got - want).abs() <= 1e-12 * want,
                "k={k}: got {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn survival_anchor_values() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        // Paper-printed value and high-precision references.
        assert!((m.survival(0) - 0.006_622_105).abs() < 1e-6);
        let refs = [
            (0, 0.006_622_487_661_496_703),
            (1, 0.002_664_818_717_690_922_5),
            (5, 2.394_459_214_478_808e-4),
            (19, 1.451_739_183_386_822e-6),
            (20, 1.087_719_382_145_848e-6),
            (50, 1.276_295_486_957_12e-7),
        ];
        for (k, want) in refs {
            let got = m.survival(k);
            assert!(
                ((got - want) / want).abs() < 1e-9,
                "survival({k}): got {got:e}, want {want:e}"
            );
        }
        assert_eq!(m.survival(-1), 1.0);
    }

    #[test]
    fn survival_strictly_decreasing_and_prefix_cached() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        let mut prev = m.survival(-1);
        for k in 0..200 {
            let s = m.survival(k);
            assert!(s < prev && s > 0.0, "not strictly decreasing at {k}");
            prev = s;
        }
    }

    #[test]
    fn tail_index_values() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        assert!((m.tail_index() - 0.999_937_4).abs() < 1e-4);
        let m = LimitModel::solve(ba(20), 1e-12).unwrap();
        assert!((m.tail_index() - 0.5).abs() < 1e-9);
        let m = LimitModel::solve(PrefParams::new(1.5, 0.1, 1.0, 20).unwrap(), 1e-12).unwrap();
        assert!((m.tail_index() - 0.035).abs() < 0.005);
        assert!((m.tail_index() - 0.034_911_774_935_410_62).abs() < 1e-9);
    }

    #[test]
    fn pmf_trivial_and_ba_values() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        let want = m.lambda_star() / (m.lambda_star() + 0.01);
        assert!((m.pmf(0) - want).abs() < 1e-14);

        let m = LimitModel::solve(ba(7), 1e-12).unwrap();
        assert!((m.pmf(0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_forms_agree() {
        // Product-form oracle vs the implementation (prefix cache below k0,
        // Beta ratio above), including the changeover degree itself.
        for p in [
            anchor(),
            ba(20),
            PrefParams::new(1.5, 0.1, 1.0, 20).unwrap(),
            PrefParams::new(2.0, 0.05, 5.0, 200).unwrap(),
        ] {
            let m = LimitModel::solve(p, 1e-12).unwrap();
            let kmax = u64::from(p.k0()) + 1000;
            for k in (0..=kmax).step_by(13) {
                let want = pmf_product_oracle(&p, m.lambda_star(), k);
                let got = m.pmf(k);
                assert!(
                    ((got - want) / want).abs() < 1e-10,
                    "pmf({k}) for {p:?}: got {got:e}, product form {want:e}"
                );
            }
        }
    }

    #[test]
    fn pmf_matches_survival_difference() {
        // The difference route amplifies survival rounding by F̄/f, so the
        // assertion scales with that conditioning factor.
        for p in [anchor(), ba(20), PrefParams::new(1.5, 0.1, 1.0, 20).unwrap()] {
            let m = LimitModel::solve(p, 1e-12).unwrap();
            for k in 0..=(u64::from(p.k0()) + 1000) {
                let diff = m.survival(k as i64 - 1) - m.survival(k as i64);
                let f = m.pmf(k);
                let cond = m.survival(k as i64 - 1) / f;
                let tol = 1e-13 * cond.max(1.0) + 1e-14;
                assert!(
                    ((diff - f) / f).abs() < tol.max(1e-10),
                    "k={k} for {p:?}: diff {diff:e} vs pmf {f:e}"
                );
            }
        }
    }

    #[test]
    fn pmf_beta_route_matches_high_precision_corner() {
        // x = b(k0)/beta = 800100 here: exercises the large-argument path.
        let p = PrefParams::new(2.0, 0.05, 5.0, 200).unwrap();
        let m = LimitModel::solve(p, 1e-12).unwrap();
        assert!((m.lambda_star() - 16.770_874_590_748_785).abs() < 1e-7);
        let refs = [
            (200u64, 1.056_984_352_994_139_7e-7),
            (201, 1.056_540_110_307_086_3e-7),
            (500, 9.317_685_587_006_375e-8),
            (1200, 6.944_057_320_528_237e-8),
        ];
        for (k, want) in refs {
            let got = m.pmf(k);
            assert!(
                ((got - want) / want).abs() < 1e-9,
                "pmf({k}): got {got:e}, want {want:e}"
            );
        }
        let s = m.survival(1200);
        let want = 1.658_495_592_872_595_6e-4;
        assert!(((s - want) / want).abs() < 1e-9);
    }

    #[test]
    fn normalization_sums_to_one() {
        for p in [anchor(), ba(20), PrefParams::new(1.5, 0.1, 1.0, 20).unwrap()] {
            let m = LimitModel::solve(p, 1e-12).unwrap();
            let kcap = 10 * u64::from(p.k0());
            let total: f64 = (0..=kcap).map(|k| m.pmf(k)).sum::<f64>() + m.survival(kcap as i64);
            assert!((total - 1.0).abs() < 1e-9, "normalization off: {total} for {p:?}");
        }
    }

    #[test]
    fn igp_approx_examples() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        let g = m.igp_approx();
        assert!((g.xi - 0.999_937_4).abs() < 1e-4);
        assert!((g.sigma - 2.988).abs() < 1e-3);
        assert_eq!(g.v, 19);

        let m = LimitModel::solve(ba(20), 1e-12).unwrap();
        let g = m.igp_approx();
        assert!((g.xi - 0.5).abs() < 1e-9);
        assert!((g.sigma - 10.5).abs() < 1e-9);
        assert_eq!(g.v, 19);
    }

    #[test]
    fn igp_survival_examples() {
        let g = IgpParams { xi: 1.0, sigma: 1.0, v: 0 };
        assert_eq!(igp_survival(&g, 0).unwrap(), 1.0);
        assert!((igp_survival(&g, 1).unwrap() - 0.5).abs() < 1e-15);

        let g = IgpParams { xi: 0.5, sigma: 10.5, v: 19 };
        assert!((igp_survival(&g, 40).unwrap() - 0.25).abs() < 1e-14);
        assert!(igp_survival(&g, 18).is_err());

        let mut prev = 2.0;
        for x in 19..60 {
            let s = igp_survival(&g, x).unwrap();
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn omega_diag_geometric_is_exactly_zero() {
        // Powers of 1/2 are exact, so the two log-ratios are identical.
        let geo = |k: u64| 0.5f64.powi(k as i32 + 1);
        for k in [0, 3, 17, 40] {
            assert_eq!(omega_diag(geo, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn omega_diag_inverse_square_limit() {
        let sf = |k: u64| (k as f64 + 1.0).powi(-2);
        let om3 = omega_diag(sf, 1_000).unwrap();
        let om4 = omega_diag(sf, 10_000).unwrap();
        assert!((om3 - 0.5).abs() < 1e-6);
        assert!((om4 - 0.5).abs() < (om3 - 0.5).abs());
    }

    #[test]
    fn omega_diag_rejects_bad_inputs() {
        assert!(omega_diag(|_| 0.3, 5).is_err());
        assert!(omega_diag(|k| -(k as f64), 5).is_err());
    }

    #[test]
    fn omega_analytic_converges_to_tail_index() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        let target = m.tail_index();
        // Frozen reference at k = 1e4.
        let om = m.omega_analytic(10_000);
        assert!(((om - 0.999_995_608_634_547_8) / om).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for k in [100u64, 1_000, 10_000, 100_000] {
            let gap = (m.omega_analytic(k) - target).abs();
            assert!(gap < prev, "gap not shrinking at k={k}");
            prev = gap;
        }
        assert!(prev / target < 0.01);
    }

    #[test]
    fn omega_diag_agrees_with_analytic_route() {
        let m = LimitModel::solve(anchor(), 1e-12).unwrap();
        let om = omega_diag(|k| m.survival(k as i64), 100).unwrap();
        let oa = m.omega_analytic(100);
        assert!(((om - oa) / oa).abs() < 1e-6, "{om} vs {oa}");
    }

    #[test]
    fn regular_variation_slope() {
        let p = PrefParams::new(1.5, 0.1, 1.0, 20).unwrap();
        let m = LimitModel::solve(p, 1e-12).unwrap();
        let s5 = m.log_survival(100_000);
        let s6 = m.log_survival(1_000_000);
        let slope = (s6 - s5) / (1_000_000f64.ln() - 100_000f64.ln());
        let want = -m.lambda_star() / p.beta();
        assert!(
            ((slope - want) / want).abs() < 0.02,
            "slope {slope} vs -lambda*/beta {want}"
        );
    }

    #[test]
    fn gamma_ratio_sum_values() {
        // Single term: Γ(2)/Γ(4) = 1/6.
        assert!((gamma_ratio_sum(2.0, 2.0, 1) - 1.0 / 6.0).abs() < 1e-14);
        // Partial sums approach the closed forms at the rate of the analytic
        // tail: 1/(N+2) for (2,2) and ~1/(2N^2) for (3,3).
        let gap = (gamma_ratio_sum(2.0, 2.0, 10_000) - 0.5).abs();
        assert!(gap > 0.8e-4 && gap < 1.2e-4, "gap {gap} vs tail ~1e-4");
        let gap = (gamma_ratio_sum(3.0, 3.0, 10_000) - 1.0 / 24.0).abs();
        assert!(gap < 6e-9, "gap {gap} vs tail ~5e-9");
    }

    #[test]
    fn xi_grid_anchors_and_contour() {
        let grid = xi_grid(
            &GridRange { min: 0.5, max: 1.0, steps: 2 },
            &GridRange { min: 0.5, max: 1.0, steps: 2 },
            1.0,
            20,
            1e-10,
        )
        .unwrap();
        assert_eq!(grid.n_valid(), 4);
        // (alpha=1, beta=1, eps=1) is the linear case: xi = 1/2.
        let c = grid.cell(1, 1);
        assert!((c.xi.unwrap() - 0.5).abs() < 1e-9);
        for c in &grid.cells {
            let xi = c.xi.unwrap();
            assert!(xi > 0.0 && xi < 1.0);
        }
        // Every cell whose neighbourhood spans 0.5 is reported.
        let contour = grid.contour_cells(0.5);
        assert!(!contour.is_empty());

        // A grid holding the printed-output parameter point.
        let grid = xi_grid(
            &GridRange { min: 0.5, max: 1.0, steps: 2 },
            &GridRange { min: 1.5, max: 2.0, steps: 2 },
            0.01,
            20,
            1e-10,
        )
        .unwrap();
        assert!((grid.cell(0, 0).xi.unwrap() - 0.999_937_4).abs() < 1e-4);
    }

    #[test]
    fn xi_grid_marks_failed_cells_without_aborting() {
        let grid = xi_grid(
            &GridRange { min: 1.0, max: 1.0, steps: 1 },
            &GridRange { min: 1e-300, max: 1.0, steps: 2 },
            1e300,
            1,
            1e-10,
        )
        .unwrap();
        assert_eq!(grid.cells.len(), 2);
        assert!(grid.n_valid() < 2);
        assert!(grid.cells.iter().any(|c| c.xi.is_none()));
    }

    #[test]
    fn xi_grid_rejects_invalid_ranges() {
        let bad = GridRange { min: -1.0, max: 1.0, steps: 2 };
        let ok = GridRange { min: 0.5, max: 1.0, steps: 2 };
        assert!(xi_grid(&bad, &ok, 1.0, 20, 1e-10).is_err());
        assert!(xi_grid(&ok, &ok, -1.0, 20, 1e-10).is_err());
        assert!(xi_grid(&ok, &ok, 1.0, 0, 1e-10).is_err());
    }

    #[test]
    fn curve_csv_roundtrips_numbers() {
        let m = LimitModel::solve(ba(3), 1e-12).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&m, 5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,survival,pmf");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "0");
        let s: f64 = row[1].parse().unwrap();
        assert_eq!(s, m.survival(0), "17-digit output must round-trip exactly");
    }
}
