//! Monte Carlo for the full model: terminal log-prices, small-time tail
//! probabilities, OTM option prices and their implied volatilities, plus the
//! Gaussian-tail experiment for Hölder norms of bounded stochastic integrals.
//!
//! Path `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i` (on
//! stream `i / 2` with negated normals for the odd member of an antithetic
//! pair). Estimators reduce in path order, so results do not depend on how
//! rayon schedules the paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::grid::{holder_norm, GridFunction};
use crate::kernels::{conv_weights, Targets};
use crate::model::ModelSpec;
use crate::rate;

/// Largest tolerated share of paths dropped for non-finite states.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;
/// Fewest paths for which confidence intervals are reported.
pub const MIN_PATHS_FOR_CI: usize = 1000;
pub const MIN_STEPS: usize = 50;
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq)]
pub struct MCConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub maturities: Vec<f64>,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            n_paths: 200_000,
            n_steps: 500,
            maturities: vec![0.1, 0.05, 0.02, 0.01],
            seed: 7,
            antithetic: false,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return invalid("n_paths must be positive");
        }
        if self.n_steps < MIN_STEPS {
            return invalid(format!("n_steps must be at least {MIN_STEPS}, got {}", self.n_steps));
        }
        if let Some(t) = self.maturities.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return invalid(format!("maturities must lie in (0, 1], got {t}"));
        }
        Ok(())
    }

    fn rng_for(&self, path: usize) -> (ChaCha8Rng, f64) {
        let (stream, sign) = if self.antithetic {
            ((path / 2) as u64, if path % 2 == 1 { -1.0 } else { 1.0 })
        } else {
            (path as u64, 1.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        (rng, sign)
    }
}

/// Sum with pairwise splitting, so float drift stays logarithmic in length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Dot product with independent accumulators so the loop vectorises.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 8];
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    tail + ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Terminal values `Y_t` of the surviving paths, in path order.
#[derive(Debug, Clone)]
pub struct TerminalSample {
    pub t: f64,
    pub y0: f64,
    /// Kernel exponent, fixing the small-time scaling `t^μ`.
    pub mu: f64,
    pub values: Vec<f64>,
    pub excluded: usize,
}

struct PathCtx<'m> {
    m: &'m ModelSpec,
    n: usize,
    dt: f64,
    /// Node weights divided by `dt`, so they act on increments of `A`.
    lags: Option<Vec<f64>>,
}

impl PathCtx<'_> {
    fn run(&self, cfg: &MCConfig, path: usize) -> Option<f64> {
        let m = self.m;
        let (n, dt) = (self.n, self.dt);
        let (mut rng, sign) = cfg.rng_for(path);
        let sq = dt.sqrt();
        let mut dw = vec![0.0; n];
        let mut dx = vec![0.0; n];
        let rho_bar = m.rho_bar();
        for k in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            dw[k] = sign * z1 * sq;
            dx[k] = m.rho * dw[k] + rho_bar * sign * z2 * sq;
        }
        let mut v = vec![m.psi.value(0.0, 0.0); n];
        if let Some(lags) = &self.lags {
            // increments of A stored back to front so each node is one contiguous dot
            let mut rev = vec![0.0; n];
            let mut a = m.a0;
            for k in 0..n {
                let s = k as f64 * dt;
                let da = m.b.value(a, s) * dt + m.a.value(a, s) * dw[k];
                a += da;
                rev[n - 1 - k] = da;
            }
            if !a.is_finite() {
                return None;
            }
            for k in 1..n {
                v[k] = m.psi.value(dot(&lags[..k], &rev[n - k..]), 0.0);
            }
        }
        let mut y = m.y0;
        for k in 0..n {
            let s = k as f64 * dt;
            let vol = m.sigma.value(y, s) * m.f.value(v[k], s);
            y += vol * dx[k] - 0.5 * vol * vol * dt;
        }
        y.is_finite().then_some(y)
    }
}

/// Simulates `Y_t` on `cfg.n_steps` Euler steps of `[0, t]`.
pub fn simulate_terminal(m: &ModelSpec, t: f64, cfg: &MCConfig) -> Result<TerminalSample> {
    m.validate()?;
    cfg.validate()?;
    if !(t > 0.0 && t <= 1.0) {
        return invalid(format!("maturity must lie in (0, 1], got {t}"));
    }
    let n = cfg.n_steps;
    let dt = t / n as f64;
    let lags = if m.f.is_v_independent() {
        None
    } else {
        let table = conv_weights(&m.kernel, n, t, Targets::Nodes, 1.0)?;
        Some(table.lags().iter().map(|w| w / dt).collect())
    };
    let ctx = PathCtx { m, n, dt, lags };
    let raw: Vec<Option<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| ctx.run(cfg, p))
        .collect();
    let values: Vec<f64> = raw.iter().flatten().copied().collect();
    let excluded = raw.len() - values.len();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * cfg.n_paths as f64 {
        return Err(Error::TooManyExcluded { excluded, total: cfg.n_paths });
    }
    Ok(TerminalSample { t, y0: m.y0, mu: m.kernel.mu(), values, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Put,
    Call,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Put => "put",
            Side::Call => "call",
        }
    }

    /// The out-of-the-money side for log-moneyness `x`; `x = 0` is quoted as a put.
    pub fn otm(x: f64) -> Self {
        if x > 0.0 {
            Side::Call
        } else {
            Side::Put
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub t: f64,
    pub x: f64,
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    /// `-t^{2μ+1} ln p̂`, absent when no path reached the tail.
    pub rate_stat: Option<f64>,
    pub hits: usize,
    pub n: usize,
    pub zero_hits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceEstimate {
    pub t: f64,
    pub x: f64,
    pub side: Side,
    pub strike: f64,
    pub price: f64,
    pub std_error: f64,
    pub ci_halfwidth: f64,
    /// Paths finishing in the money.
    pub itm: usize,
    /// Call prices rely on an exponential-moment condition that is not
    /// checked for the model, so they carry this flag.
    pub moment_caveat: bool,
}

impl TerminalSample {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.n() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let sq: Vec<f64> = self.values.iter().map(|v| (v - mean) * (v - mean)).collect();
        pairwise_sum(&sq) / (self.n() as f64 - 1.0)
    }

    /// Log-price increments `Y_t - Y_0`.
    pub fn log_returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |v| v - self.y0)
    }

    /// `P(t^μ (Y_t - Y_0) >= x)` for `x > 0`, `<= x` for `x < 0`.
    pub fn tail(&self, x: f64) -> Result<TailEstimate> {
        if x == 0.0 || !x.is_finite() {
            return invalid(format!("tail threshold must be finite and nonzero, got {x}"));
        }
        let scale = self.t.powf(self.mu);
        let hits = self
            .log_returns()
            .filter(|r| if x > 0.0 { scale * r >= x } else { scale * r <= x })
            .count();
        let n = self.n();
        let p_hat = hits as f64 / n as f64;
        let ci_halfwidth = if n >= MIN_PATHS_FOR_CI {
            Z95 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        let rate_stat = (hits > 0).then(|| -self.t.powf(2.0 * self.mu + 1.0) * p_hat.ln());
        Ok(TailEstimate { t: self.t, x, p_hat, ci_halfwidth, rate_stat, hits, n, zero_hits: hits == 0 })
    }

    /// Price of the option struck at `exp(x t^{-μ})` with `S_0 = 1`.
    pub fn price(&self, x: f64, side: Side) -> Result<PriceEstimate> {
        match side {
            Side::Put if x > 0.0 => return invalid(format!("put needs x <= 0, got {x}")),
            Side::Call if x < 0.0 => return invalid(format!("call needs x >= 0, got {x}")),
            _ => {}
        }
        let strike = (x * self.t.powf(-self.mu)).exp();
        let payoffs: Vec<f64> = self
            .log_returns()
            .map(|r| {
                let s = r.exp();
                match side {
                    Side::Put => (strike - s).max(0.0),
                    Side::Call => (s - strike).max(0.0),
                }
            })
            .collect();
        let n = payoffs.len() as f64;
        let price = pairwise_sum(&payoffs) / n;
        let sq: Vec<f64> = payoffs.iter().map(|p| (p - price) * (p - price)).collect();
        let std_error = (pairwise_sum(&sq) / (n - 1.0) / n).sqrt();
        Ok(PriceEstimate {
            t: self.t,
            x,
            side,
            strike,
            price,
            std_error,
            ci_halfwidth: Z95 * std_error,
            itm: payoffs.iter().filter(|&&p| p > 0.0).count(),
            moment_caveat: side == Side::Call,
        })
    }
}

pub fn tail_prob(m: &ModelSpec, t: f64, x: f64, cfg: &MCConfig) -> Result<TailEstimate> {
    simulate_terminal(m, t, cfg)?.tail(x)
}

pub fn option_price(m: &ModelSpec, t: f64, x: f64, side: Side, cfg: &MCConfig) -> Result<PriceEstimate> {
    simulate_terminal(m, t, cfg)?.price(x, side)
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Zero-rate Black–Scholes price with total volatility `σ√t`; a nonpositive
/// total volatility gives the intrinsic value.
pub fn bs_price(spot: f64, strike: f64, vol_sqrt_t: f64, side: Side) -> f64 {
    if vol_sqrt_t <= 0.0 {
        return match side {
            Side::Call => (spot - strike).max(0.0),
            Side::Put => (strike - spot).max(0.0),
        };
    }
    let d1 = (spot / strike).ln() / vol_sqrt_t + 0.5 * vol_sqrt_t;
    let d2 = d1 - vol_sqrt_t;
    match side {
        Side::Call => spot * norm_cdf(d1) - strike * norm_cdf(d2),
        Side::Put => strike * norm_cdf(-d2) - spot * norm_cdf(-d1),
    }
}

pub const IMPLIED_VOL_TOL: f64 = 1e-10;
pub const IMPLIED_VOL_MAX_ITER: usize = 200;

/// Annualised Black–Scholes implied volatility by bisection on `σ√t`.
pub fn implied_vol(price: f64, spot: f64, strike: f64, t: f64, side: Side) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && t > 0.0) {
        return Err(Error::Inversion(format!("need positive spot, strike, t; got {spot}, {strike}, {t}")));
    }
    let lower = bs_price(spot, strike, 0.0, side);
    let upper = match side {
        Side::Call => spot,
        Side::Put => strike,
    };
    if !(price >= lower - 1e-14 && price < upper) {
        return Err(Error::Inversion(format!(
            "price {price} outside no-arbitrage bounds [{lower}, {upper})"
        )));
    }
    if price <= lower + 1e-14 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while bs_price(spot, strike, hi, side) < price {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Inversion(format!("price {price} too close to its upper bound")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..IMPLIED_VOL_MAX_ITER {
        if hi - lo < IMPLIED_VOL_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if bs_price(spot, strike, mid, side) < price {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / t.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmileCell {
    pub t: f64,
    pub x: f64,
    pub side: Side,
    pub price: f64,
    pub implied_vol: Option<f64>,
    pub target: f64,
    /// `|Σ̂ - target| / target`, absent for flagged cells.
    pub gap: Option<f64>,
    /// No path finished in the money, or the price could not be inverted.
    pub undersampled: bool,
    pub moment_caveat: bool,
}

#[derive(Debug, Clone)]
pub struct SmileConvergenceReport {
    pub cells: Vec<SmileCell>,
}

impl SmileConvergenceReport {
    /// Gaps for one `x`, ordered from the longest maturity to the shortest,
    /// flagged cells skipped.
    pub fn gaps(&self, x: f64) -> Vec<(f64, f64)> {
        let mut g: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.x == x)
            .filter_map(|c| c.gap.map(|g| (c.t, g)))
            .collect();
        g.sort_by(|a, b| b.0.total_cmp(&a.0));
        g
    }

    /// Gaps shrink as the maturity shrinks, for every `x`.
    pub fn trend_ok(&self, x: f64) -> bool {
        self.gaps(x).windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,side,price,impvol,target,gap,undersampled")?;
        for c in &self.cells {
            let opt = |v: Option<f64>| v.map(|v| format!("{v:.10e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{:.10e},{},{:.10e},{},{}",
                c.t,
                c.x,
                c.side.name(),
                c.price,
                opt(c.implied_vol),
                c.target,
                opt(c.gap),
                c.undersampled
            )?;
        }
        Ok(())
    }
}

/// Limiting smile `|x| / √(2Λ*(x))` at default rate-solver settings.
pub fn asymptotic_vol(m: &ModelSpec, x: f64) -> Result<f64> {
    let ls = rate::lambda_star(m, x, rate::DEFAULT_N, rate::default_span(x), rate::DEFAULT_SCAN_POINTS)?;
    Ok(x.abs() / (2.0 * ls.value).sqrt())
}

/// Implied vol of one OTM option priced from `sample`, against `target`.
pub fn smile_cell(sample: &TerminalSample, x: f64, target: f64) -> Result<SmileCell> {
    let side = Side::otm(x);
    let p = sample.price(x, side)?;
    let iv = if p.itm == 0 {
        None
    } else {
        implied_vol(p.price, 1.0, p.strike, sample.t, side).ok()
    };
    let gap = iv.map(|v| (v - target).abs() / target);
    Ok(SmileCell {
        t: sample.t,
        x,
        side,
        price: p.price,
        implied_vol: iv,
        target,
        gap,
        undersampled: iv.is_none(),
        moment_caveat: p.moment_caveat,
    })
}

/// Monte Carlo implied vols at strikes `exp(x t^{-μ})` compared with the
/// limiting smile, one simulation per maturity shared across `x`.
pub fn smile_convergence_report(
    m: &ModelSpec,
    x_grid: &[f64],
    maturities: &[f64],
    cfg: &MCConfig,
) -> Result<SmileConvergenceReport> {
    if let Some(x) = x_grid.iter().find(|&&x| x == 0.0) {
        return invalid(format!("x = {x} has no limiting smile value"));
    }
    let targets = x_grid
        .iter()
        .map(|&x| asymptotic_vol(m, x))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for &t in maturities {
        let sample = simulate_terminal(m, t, cfg)?;
        for (&x, &target) in x_grid.iter().zip(&targets) {
            cells.push(smile_cell(&sample, x, target)?);
        }
    }
    Ok(SmileConvergenceReport { cells })
}

/// Bounded adapted integrands driven by a Brownian motion `B` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    UnitConstant,
    /// `sign(B_s)`, with `sign(0) = 1`.
    SignSwitch,
    /// `B_s` clipped to `[-1, 1]`.
    ClippedBrownian,
}

impl Integrand {
    pub fn name(&self) -> &'static str {
        match self {
            Integrand::UnitConstant => "unit_constant",
            Integrand::SignSwitch => "sign_switch",
            Integrand::ClippedBrownian => "clipped_brownian",
        }
    }

    fn at(&self, b: f64) -> f64 {
        match self {
            Integrand::UnitConstant => 1.0,
            Integrand::SignSwitch => {
                if b >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Integrand::ClippedBrownian => b.clamp(-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UetCell {
    pub integrand: Integrand,
    pub eps: f64,
    pub k: f64,
    pub p_hat: f64,
    pub hits: usize,
}

/// Least-squares fit of `ln p` against `K²/ε` for one integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct UetFit {
    pub integrand: Integrand,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub cells_used: usize,
    /// Largest `p_U / p_1` over cells where the unit integrand has at least
    /// [`UET_MIN_HITS`] hits.
    pub domination_ratio: f64,
}

pub const UET_MIN_HITS: usize = 20;
pub const UET_MIN_R2: f64 = 0.9;
/// Constant allowed in front of the unit-integrand tail.
pub const UET_DOMINATION_BOUND: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct UetReport {
    pub alpha: f64,
    pub cells: Vec<UetCell>,
    pub fits: Vec<UetFit>,
}

impl UetFit {
    pub fn passes(&self) -> bool {
        self.r_squared >= UET_MIN_R2 && self.slope < 0.0 && self.domination_ratio <= UET_DOMINATION_BOUND
    }
}

impl UetReport {
    pub fn fit(&self, integrand: Integrand) -> Option<&UetFit> {
        self.fits.iter().find(|f| f.integrand == integrand)
    }

    pub fn passes(&self) -> bool {
        self.fits.iter().all(UetFit::passes)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "integrand,eps,K,p_hat,hits")?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{:.10e},{}", c.integrand.name(), c.eps, c.k, c.p_hat, c.hits)?;
        }
        Ok(())
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Tail of `‖U·B^ε‖_α` on `cfg.n_steps` cells of `[0, 1]` for each
/// `(ε, K)` and integrand.
///
/// `U` is driven by the unscaled `B`, so `U·B^ε = √ε (U·B)` and one norm per
/// path serves every `ε`. The unit integrand is always simulated, as the
/// calibration for the domination ratio.
pub fn uet_tail_experiment(
    alpha: f64,
    eps_ladder: &[f64],
    k_ladder: &[f64],
    integrands: &[Integrand],
    cfg: &MCConfig,
) -> Result<UetReport> {
    if !((1.0 / 3.0..0.5).contains(&alpha)) {
        return invalid(format!("alpha must lie in [1/3, 1/2), got {alpha}"));
    }
    if eps_ladder.iter().chain(k_ladder).any(|&v| !(v > 0.0)) {
        return invalid("eps and K ladders must be positive");
    }
    cfg.validate()?;
    let mut families = vec![Integrand::UnitConstant];
    families.extend(integrands.iter().filter(|&&i| i != Integrand::UnitConstant));
    let n = cfg.n_steps;
    let sq = (1.0 / n as f64).sqrt();
    let norms: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let (mut rng, sign) = cfg.rng_for(p);
            let db: Vec<f64> = (0..n).map(|_| sign * sq * rng.sample::<f64, _>(StandardNormal)).collect();
            families
                .iter()
                .map(|u| {
                    let mut b = 0.0;
                    let inc: Vec<f64> = db
                        .iter()
                        .map(|d| {
                            let v = u.at(b) * d;
                            b += d;
                            v
                        })
                        .collect();
                    let path = GridFunction::from_increments(1.0, 0.0, &inc)?;
                    holder_norm(&path, alpha)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let total = norms.len() as f64;
    let mut cells = Vec::new();
    for (f, &u) in families.iter().enumerate() {
        for &eps in eps_ladder {
            for &k in k_ladder {
                let level = k / eps.sqrt();
                let hits = norms.iter().filter(|row| row[f] >= level).count();
                cells.push(UetCell { integrand: u, eps, k, p_hat: hits as f64 / total, hits });
            }
        }
    }
    let per_family = eps_ladder.len() * k_ladder.len();
    let unit = &cells[..per_family];
    let fits = families
        .iter()
        .enumerate()
        .map(|(f, &u)| {
            let own = &cells[f * per_family..(f + 1) * per_family];
            let (xs, ys): (Vec<f64>, Vec<f64>) = own
                .iter()
                .filter(|c| c.hits > 0)
                .map(|c| (c.k * c.k / c.eps, c.p_hat.ln()))
                .unzip();
            let (slope, intercept, r_squared) = if xs.len() >= 2 {
                linear_fit(&xs, &ys)
            } else {
                (f64::NAN, f64::NAN, 0.0)
            };
            let domination_ratio = own
                .iter()
                .zip(unit)
                .filter(|(_, c1)| c1.hits >= UET_MIN_HITS)
                .map(|(c, c1)| c.p_hat / c1.p_hat)
                .fold(0.0, f64::max);
            UetFit { integrand: u, slope, intercept, r_squared, cells_used: xs.len(), domination_ratio }
        })
        .collect();
    Ok(UetReport { alpha, cells, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, FunctionFamily, Preset};
    use proptest::prelude::*;
    use rand::Rng;

    fn small(paths: usize, steps: usize, seed: u64) -> MCConfig {
        MCConfig { n_paths: paths, n_steps: steps, maturities: vec![0.05], seed, antithetic: false }
    }

    fn oracle_cdf(x: f64) -> f64 {
        // Maclaurin series of erf, independent of statrs
        let u = x / std::f64::consts::SQRT_2;
        let (mut term, mut sum) = (u, u);
        for k in 1..200 {
            term *= -u * u / k as f64;
            sum += term / (2 * k + 1) as f64;
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn bs_price_examples() {
        let c = bs_price(1.0, 1.0, 0.2, Side::Call);
        assert!((c - (2.0 * oracle_cdf(0.1) - 1.0)).abs() < 1e-12);
        assert!((c - 0.0796557).abs() < 1e-7);
        assert!(bs_price(1.0, 1.2, 1e-9, Side::Call) < 1e-300);
        assert!(bs_price(1.0, 0.8, 1e-9, Side::Put) < 1e-300);
        for (k, s) in [(0.8, 0.1), (1.0, 0.3), (1.3, 0.05)] {
            let parity = bs_price(1.0, k, s, Side::Call) - bs_price(1.0, k, s, Side::Put);
            assert!((parity - (1.0 - k)).abs() < 1e-12);
        }
    }

    #[test]
    fn implied_vol_examples() {
        let p = bs_price(1.0, 0.9, 0.2 * 0.5f64.sqrt(), Side::Put);
        assert!((implied_vol(p, 1.0, 0.9, 0.5, Side::Put).unwrap() - 0.2).abs() < 1e-9);
        assert_eq!(implied_vol(0.0, 1.0, 0.9, 0.5, Side::Put).unwrap(), 0.0);
        assert_eq!(implied_vol(0.1, 1.0, 0.9, 0.5, Side::Call).unwrap(), 0.0);
        assert!(matches!(implied_vol(1.0, 1.0, 0.9, 0.5, Side::Call), Err(Error::Inversion(_))));
        assert!(matches!(implied_vol(-0.1, 1.0, 0.9, 0.5, Side::Put), Err(Error::Inversion(_))));
        let lo = implied_vol(0.01, 1.0, 1.0, 0.1, Side::Call).unwrap();
        let hi = implied_vol(0.02, 1.0, 1.0, 0.1, Side::Call).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn reduced_model_moments() {
        let m = preset(Preset::BlackScholes);
        let t = 0.05;
        let s = simulate_terminal(&m, t, &small(20_000, 50, 3)).unwrap();
        let c2 = 0.09;
        let n = s.n() as f64;
        let mean_se = (c2 * t / n).sqrt();
        assert!((s.mean() - (m.y0 - 0.5 * c2 * t)).abs() < 4.0 * mean_se);
        let var_se = c2 * t * (2.0 / (n - 1.0)).sqrt();
        assert!((s.variance() - c2 * t).abs() < 4.0 * var_se);
        assert_eq!(s.excluded, 0);
    }

    #[test]
    fn symmetric_model_has_symmetric_terminal_law() {
        // ρ = 0 and f even in v: Y - drift is symmetric
        let mut m = preset(Preset::RoughBergomi);
        m.rho = 0.0;
        m.f = FunctionFamily::Linear { m: 0.0, c: 0.2 };
        m.sigma = FunctionFamily::Constant { c: 1.0 };
        let s = simulate_terminal(&m, 0.1, &small(20_000, 50, 5)).unwrap();
        let mean = s.mean();
        let sd = s.variance().sqrt();
        let skew = s.values.iter().map(|v| ((v - mean) / sd).powi(3)).sum::<f64>() / s.n() as f64;
        assert!(skew.abs() < 4.0 * (6.0 / s.n() as f64).sqrt(), "{skew}");
    }

    #[test]
    fn determinism_and_antithetic_pairs() {
        let m = preset(Preset::RoughBergomi);
        let cfg = small(2000, 64, 11);
        let a = simulate_terminal(&m, 0.05, &cfg).unwrap();
        let b = simulate_terminal(&m, 0.05, &cfg).unwrap();
        assert_eq!(a.values, b.values);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| simulate_terminal(&m, 0.05, &cfg).unwrap());
        assert_eq!(a.values, c.values);
        let bs = preset(Preset::BlackScholes);
        let anti = MCConfig { antithetic: true, ..small(1000, 50, 2) };
        let s = simulate_terminal(&bs, 0.05, &anti).unwrap();
        let drift = bs.y0 - 0.5 * 0.09 * 0.05;
        for pair in s.values.chunks(2) {
            assert!((pair[0] - drift + pair[1] - drift).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_examples() {
        let m = preset(Preset::BlackScholes);
        let t = 0.05;
        let s = simulate_terminal(&m, t, &small(20_000, 50, 9)).unwrap();
        let mu = m.kernel.mu();
        for x in [0.05, -0.05, 0.1] {
            let est = s.tail(x).unwrap();
            let shift = x * t.powf(-mu);
            let z = (shift + 0.5 * 0.09 * t) / (0.3 * t.sqrt());
            let exact = if x > 0.0 { 1.0 - oracle_cdf(z) } else { oracle_cdf(z) };
            let se = (exact * (1.0 - exact) / est.n as f64).sqrt();
            assert!((est.p_hat - exact).abs() < 4.0 * se, "x={x} {} vs {exact}", est.p_hat);
            assert!(est.rate_stat.is_some());
        }
        let rare = s.tail(5.0).unwrap();
        assert!(rare.zero_hits && rare.rate_stat.is_none());
        assert!(s.tail(0.0).is_err());
    }

    #[test]
    fn price_examples() {
        let m = preset(Preset::BlackScholes);
        let t = 0.05;
        let s = simulate_terminal(&m, t, &small(20_000, 50, 13)).unwrap();
        let atm = s.price(0.0, Side::Put).unwrap();
        assert!(atm.price > 0.0 && atm.price < 2.0);
        let x = -0.05;
        let p = s.price(x, Side::Put).unwrap();
        let exact = bs_price(1.0, p.strike, 0.3 * t.sqrt(), Side::Put);
        assert!((p.price - exact).abs() < 4.0 * p.std_error);
        assert!(!p.moment_caveat);
        assert!(s.price(0.05, Side::Call).unwrap().moment_caveat);
        assert!(s.price(0.05, Side::Put).is_err());
        // parity on the same paths: E[(S-K)+] - E[(K-S)+] = E[S] - K
        let k0 = s.price(0.0, Side::Call).unwrap();
        let mean_s = s.log_returns().map(f64::exp).sum::<f64>() / s.n() as f64;
        assert!((k0.price - atm.price - (mean_s - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn blow_up_is_excluded_and_reported() {
        let mut m = preset(Preset::BlackScholes);
        m.f = FunctionFamily::Constant { c: 1e200 };
        let err = simulate_terminal(&m, 0.05, &small(1000, 50, 1)).unwrap_err();
        assert!(matches!(err, Error::TooManyExcluded { excluded: 1000, total: 1000 }));
    }

    #[test]
    fn uet_unit_integrand_matches_brownian_oracle() {
        let cfg = small(4000, 64, 21);
        let rep = uet_tail_experiment(0.4, &[1.0], &[0.1, 2.0], &[], &cfg).unwrap();
        // far below the median every path exceeds K
        assert_eq!(rep.cells[0].p_hat, 1.0);
        // direct Brownian oracle on the same streams
        let hits = (0..cfg.n_paths)
            .filter(|&p| {
                let (mut rng, _) = cfg.rng_for(p);
                let sq = (1.0f64 / 64.0).sqrt();
                let inc: Vec<f64> = (0..64).map(|_| sq * rng.sample::<f64, _>(StandardNormal)).collect();
                let path = GridFunction::from_increments(1.0, 0.0, &inc).unwrap();
                holder_norm(&path, 0.4).unwrap() >= 2.0
            })
            .count();
        assert_eq!(rep.cells[1].hits, hits);
        assert!(uet_tail_experiment(0.5, &[1.0], &[1.0], &[], &cfg).is_err());
    }

    #[test]
    fn linear_fit_exact_line() {
        let (s, i, r2) = linear_fit(&[1.0, 2.0, 3.0], &[-1.0, -3.0, -5.0]);
        assert!((s + 2.0).abs() < 1e-14 && (i - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn implied_vol_roundtrip(vol in 0.02f64..1.5, k in 0.7f64..1.4, t in 0.01f64..1.0) {
            let side = Side::otm(k.ln());
            let p = bs_price(1.0, k, vol * t.sqrt(), side);
            prop_assume!(p > 1e-12);
            let iv = implied_vol(p, 1.0, k, t, side).unwrap();
            prop_assert!((iv - vol).abs() < 1e-6 * (1.0 + vol));
        }

        #[test]
        fn pairwise_matches_naive(xs in proptest::collection::vec(-1e3f64..1e3, 0..500)) {
            let naive: f64 = xs.iter().sum();
            prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
        }
    }
}
