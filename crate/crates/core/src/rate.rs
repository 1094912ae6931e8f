//! Short-time rate function of the log-price, its tail infimum `Λ*`, and the
//! limiting implied-volatility smile.
//!
//! The rate function is the value of a variational problem over controls
//! `g ∈ L²([0, 1])`:
//!
//! ```text
//! J(z) = inf_g  ½ ∫ g²  +  (z - ρ σ₀ ∫ f(v_r, 0) g_r dr)² / (2 (1-ρ²) σ₀² ∫ f(v_r, 0)² dr)
//! v    = Ψ(a(A₀) · 𝒦₀ g)
//! ```
//!
//! Controls are piecewise constant on `n` cells of `[0, 1]`. All three
//! integrals use the midpoint rule, with `𝒦₀ g` evaluated exactly at cell
//! midpoints.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kernels::{conv_weights, Targets, WeightTable};
use crate::model::ModelSpec;

pub const DEFAULT_N: usize = 128;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 10_000;

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// How a gradient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Analytic,
    /// Central differences, used when a coefficient has no derivative at
    /// some evaluation point.
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct Gradient {
    pub values: Vec<f64>,
    pub mode: GradientMode,
}

/// Discretised rate functional for one target `z`.
pub struct RateProblem<'m> {
    model: &'m ModelSpec,
    z: f64,
    n: usize,
    dt: f64,
    sigma0: f64,
    a_scale: f64,
    weights: WeightTable,
}

/// Intermediate quantities of one objective evaluation.
struct Eval {
    value: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    f: Vec<f64>,
    /// `z - ρ σ₀ Σ f g Δ`.
    residual: f64,
    /// `2 (1-ρ²) σ₀² Σ f² Δ`.
    denom: f64,
}

impl<'m> RateProblem<'m> {
    pub fn new(model: &'m ModelSpec, z: f64, n: usize) -> Result<Self> {
        model.validate_short_time()?;
        if n < 2 {
            return invalid(format!("need at least 2 cells, got {n}"));
        }
        if !z.is_finite() {
            return invalid(format!("z must be finite, got {z}"));
        }
        let k0 = model.kernel.riemann_liouville_counterpart();
        let weights = conv_weights(&k0, n, 1.0, Targets::Midpoints, 1.0)?;
        Ok(Self {
            model,
            z,
            n,
            dt: 1.0 / n as f64,
            sigma0: model.sigma0(),
            a_scale: model.a_at_a0(),
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, g: &[f64]) -> Eval {
        let m = self.model;
        let u: Vec<f64> = self.weights.apply(g).into_iter().map(|k| self.a_scale * k).collect();
        let v: Vec<f64> = u.iter().map(|&x| m.psi.value(x, 0.0)).collect();
        let f: Vec<f64> = v.iter().map(|&x| m.f.value(x, 0.0)).collect();
        let dt = self.dt;
        let s1: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * dt;
        let s2: f64 = f.iter().map(|a| a * a).sum::<f64>() * dt;
        let energy = 0.5 * dt * g.iter().map(|x| x * x).sum::<f64>();
        let rho = m.rho;
        let residual = self.z - rho * self.sigma0 * s1;
        let denom = 2.0 * (1.0 - rho * rho) * self.sigma0 * self.sigma0 * s2;
        let penalty = if denom > 0.0 {
            residual * residual / denom
        } else if residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Eval { value: energy + penalty, u, v, f, residual, denom }
    }

    /// Objective value; `+∞` when the denominator vanishes.
    pub fn value(&self, g: &[f64]) -> f64 {
        self.eval(g).value
    }

    pub fn objective(&self, g: &[f64]) -> Result<f64> {
        self.check_len(g)?;
        let e = self.eval(g);
        if e.denom <= 0.0 {
            return Err(Error::DegenerateDenominator);
        }
        Ok(e.value)
    }

    fn check_len(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.n {
            return Err(Error::Shape(format!("control has {} cells, expected {}", g.len(), self.n)));
        }
        Ok(())
    }

    /// Chain-rule gradient, or `None` where a derivative is unavailable.
    fn analytic_gradient(&self, g: &[f64]) -> Option<Vec<f64>> {
        let m = self.model;
        let e = self.eval(g);
        if !(e.denom > 0.0) {
            return None;
        }
        let dt = self.dt;
        let rho = m.rho;
        let two_r_over_d = 2.0 * e.residual / e.denom;
        let r2_over_d2 = e.residual * e.residual / (e.denom * e.denom);
        let dd_df = 2.0 * (1.0 - rho * rho) * self.sigma0 * self.sigma0 * 2.0 * dt;
        // sensitivity of the penalty to u_k, to be pulled back through 𝒦₀
        let mut du = Vec::with_capacity(self.n);
        for (k, &gk) in g.iter().enumerate() {
            let df = m.f.dv(e.v[k], 0.0).ok()?;
            let dpsi = m.psi.dv(e.u[k], 0.0).ok()?;
            let d_residual = -rho * self.sigma0 * gk * dt;
            let d_pen_df = two_r_over_d * d_residual - r2_over_d2 * dd_df * e.f[k];
            du.push(d_pen_df * df * dpsi * self.a_scale);
        }
        let pulled = self.weights.apply_transpose(&du);
        Some(
            (0..self.n)
                .map(|j| dt * g[j] - two_r_over_d * rho * self.sigma0 * e.f[j] * dt + pulled[j])
                .collect(),
        )
    }

    /// Central differences with step `1e-6 (1 + |g_j|)`.
    pub fn finite_difference_gradient(&self, g: &[f64]) -> Vec<f64> {
        let mut probe = g.to_vec();
        (0..self.n)
            .map(|j| {
                let h = 1e-6 * (1.0 + g[j].abs());
                probe[j] = g[j] + h;
                let up = self.value(&probe);
                probe[j] = g[j] - h;
                let down = self.value(&probe);
                probe[j] = g[j];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    pub fn gradient(&self, g: &[f64]) -> Result<Gradient> {
        self.check_len(g)?;
        Ok(match self.analytic_gradient(g) {
            Some(values) => Gradient { values, mode: GradientMode::Analytic },
            None => Gradient {
                values: self.finite_difference_gradient(g),
                mode: GradientMode::FiniteDifference,
            },
        })
    }

    /// Slopes of the orthogonal Cameron–Martin component that realise the
    /// target `z` at least cost for the given control: `h = λ f(v, 0)`.
    pub fn orthogonal_control(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check_len(g)?;
        let e = self.eval(g);
        let s2: f64 = e.f.iter().map(|x| x * x).sum::<f64>() * self.dt;
        if !(s2 > 0.0) {
            return Err(Error::DegenerateDenominator);
        }
        let lambda = e.residual / (self.model.rho_bar() * self.sigma0 * s2);
        Ok(e.f.iter().map(|x| lambda * x).collect())
    }
}

/// Rate functional at control `g` (cell values on `[0, 1]`).
pub fn objective(m: &ModelSpec, z: f64, g: &[f64]) -> Result<f64> {
    RateProblem::new(m, z, g.len())?.objective(g)
}

/// Gradient of [`objective`] with respect to the cell values.
pub fn gradient(m: &ModelSpec, z: f64, g: &[f64]) -> Result<Gradient> {
    RateProblem::new(m, z, g.len())?.gradient(g)
}

/// Minimiser output for one `z`.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub z: f64,
    pub value: f64,
    pub control: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub start_label: &'static str,
    pub converged: bool,
    pub gradient_mode: GradientMode,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iterations: MAX_ITERATIONS }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Descent {
    g: Vec<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    mode: GradientMode,
}

/// Limited-memory BFGS with a monotone Armijo backtracking line search.
fn minimize(p: &RateProblem, start: Vec<f64>, opts: &SolverOptions) -> Option<Descent> {
    let mut g = start;
    let mut value = p.value(&g);
    if !value.is_finite() {
        return None;
    }
    let mut grad = p.gradient(&g).ok()?;
    let mut mode = grad.mode;
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let mut gn = sup_norm(&grad.values);
    while gn >= opts.tol && iterations < opts.max_iterations {
        // two-loop recursion; the initial scaling 1/dt matches the ½Δ|g|² term
        let mut q = grad.values.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let h0 = match history.last() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / p.dt,
        };
        q.iter_mut().for_each(|x| *x *= h0);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|x| -x).collect();
        let mut slope = dot(&dir, &grad.values);
        if !(slope < 0.0) {
            history.clear();
            dir = grad.values.iter().map(|x| -x / p.dt).collect();
            slope = dot(&dir, &grad.values);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = g.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
            let tv = p.value(&trial);
            if tv.is_finite() && tv <= value + ARMIJO_C1 * step * slope {
                accepted = Some((trial, tv));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let next_grad = p.gradient(&next).ok()?;
        if next_grad.mode == GradientMode::FiniteDifference {
            mode = GradientMode::FiniteDifference;
        }
        let s: Vec<f64> = next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.values.iter().zip(&grad.values).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == LBFGS_MEMORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }
        g = next;
        value = next_value;
        grad = next_grad;
        gn = sup_norm(&grad.values);
        iterations += 1;
    }
    Some(Descent { g, value, grad_norm: gn, iterations, converged: gn < opts.tol, mode })
}

/// Minimises the discrete rate functional from a fixed set of starting
/// controls and keeps the best.
pub fn solve_rate(m: &ModelSpec, z: f64, n: usize, tol: f64) -> Result<RateResult> {
    solve_rate_with(m, z, n, &SolverOptions { tol, ..Default::default() })
}

pub fn solve_rate_with(m: &ModelSpec, z: f64, n: usize, opts: &SolverOptions) -> Result<RateResult> {
    if n < 16 {
        return invalid(format!("solve_rate needs n >= 16, got {n}"));
    }
    if !(opts.tol > 0.0) {
        return invalid(format!("tol must be positive, got {}", opts.tol));
    }
    let p = RateProblem::new(m, z, n)?;
    if z == 0.0 {
        return Ok(RateResult {
            z,
            value: 0.0,
            control: vec![0.0; n],
            grad_norm: 0.0,
            iterations: 0,
            start_label: "zero",
            converged: true,
            gradient_mode: GradientMode::Analytic,
        });
    }
    let f0 = m.spot_vol();
    let aligned = if f0 != 0.0 { m.rho * z / f0 } else { 0.0 };
    let starts: [(&'static str, f64); 4] =
        [("zero", 0.0), ("rho_aligned", aligned), ("plus", z.abs()), ("minus", -z.abs())];

    let mut best: Option<(RateResult, f64)> = None;
    let mut failures = Vec::new();
    for (label, level) in starts {
        match minimize(&p, vec![level; n], opts) {
            Some(d) => {
                let better = match &best {
                    None => true,
                    Some((b, _)) => d.value < b.value,
                };
                if better {
                    let r = RateResult {
                        z,
                        value: d.value.max(0.0),
                        control: d.g,
                        grad_norm: d.grad_norm,
                        iterations: d.iterations,
                        start_label: label,
                        converged: d.converged,
                        gradient_mode: d.mode,
                    };
                    best = Some((r, d.value));
                }
            }
            None => failures.push(label),
        }
    }
    best.map(|(r, _)| r).ok_or_else(|| {
        Error::OptimizationFailed(format!(
            "objective non-finite from every start ({}) at z = {z}",
            failures.join(", ")
        ))
    })
}

/// Result of the tail-rate scan.
#[derive(Debug, Clone)]
pub struct LambdaStar {
    pub x: f64,
    pub value: f64,
    /// Scan point where the minimum was found.
    pub argmin: f64,
    /// True when the minimum sits at `y = x`, as expected for a rate that is
    /// monotone in `|y|`.
    pub boundary_attained: bool,
}

/// Tail rate `Λ*(x)`: infimum of the rate function beyond `x` (below `x`
/// when `x < 0`), scanned on `y = x ± k span / points`, `k = 0..=points`.
pub fn lambda_star(m: &ModelSpec, x: f64, n: usize, span: f64, points: usize) -> Result<LambdaStar> {
    lambda_star_with(m, x, n, span, points, &SolverOptions::default())
}

pub fn lambda_star_with(
    m: &ModelSpec,
    x: f64,
    n: usize,
    span: f64,
    points: usize,
    opts: &SolverOptions,
) -> Result<LambdaStar> {
    if points < 2 {
        return invalid(format!("points must be at least 2, got {points}"));
    }
    if !(span > 0.0) {
        return invalid(format!("span must be positive, got {span}"));
    }
    let sign = if x >= 0.0 { 1.0 } else { -1.0 };
    let mut best = (f64::INFINITY, x, 0usize);
    for k in 0..=points {
        let y = x + sign * k as f64 * span / points as f64;
        let v = solve_rate_with(m, y, n, opts)?.value;
        if v < best.0 {
            best = (v, y, k);
        }
    }
    let at_x = if best.2 == 0 { best.0 } else { solve_rate_with(m, x, n, opts)?.value };
    let boundary_attained = best.2 == 0 || at_x <= best.0 + 1e-10 * (1.0 + best.0);
    Ok(LambdaStar { x, value: best.0, argmin: best.1, boundary_attained })
}

/// Default scan for `Λ*`: half of `|x|` beyond the threshold, at least 0.02.
pub fn default_span(x: f64) -> f64 {
    (0.5 * x.abs()).max(0.02)
}

pub const DEFAULT_SCAN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SmileRow {
    pub x: f64,
    pub lambda_star: f64,
    pub sigma_asym: f64,
    pub boundary_attained: bool,
    /// Set on the `x = 0` row, whose volatility is interpolated from its
    /// neighbours.
    pub extrapolated: bool,
}

/// Asymptotic smile `x ↦ |x| / √(2 Λ*(x))`.
#[derive(Debug, Clone)]
pub struct SmileTable {
    pub rows: Vec<SmileRow>,
}

impl SmileTable {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,lambda_star,sigma_asym")?;
        for r in &self.rows {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", r.x, r.lambda_star, r.sigma_asym)?;
        }
        Ok(())
    }

    /// Slope of `sigma_asym` between the innermost negative and positive `x`.
    pub fn atm_skew(&self) -> Option<f64> {
        let left = self.rows.iter().filter(|r| r.x < 0.0).max_by(|a, b| a.x.total_cmp(&b.x))?;
        let right = self.rows.iter().filter(|r| r.x > 0.0).min_by(|a, b| a.x.total_cmp(&b.x))?;
        Some((right.sigma_asym - left.sigma_asym) / (right.x - left.x))
    }
}

/// Computes the asymptotic smile on `x_grid`, in parallel over `x`.
pub fn smile(m: &ModelSpec, x_grid: &[f64], n: usize) -> Result<SmileTable> {
    smile_with(m, x_grid, n, &SolverOptions::default())
}

pub fn smile_with(m: &ModelSpec, x_grid: &[f64], n: usize, opts: &SolverOptions) -> Result<SmileTable> {
    if x_grid.is_empty() {
        return invalid("x grid is empty");
    }
    let mut rows = x_grid
        .par_iter()
        .map(|&x| {
            if x == 0.0 {
                return Ok(SmileRow {
                    x,
                    lambda_star: 0.0,
                    sigma_asym: f64::NAN,
                    boundary_attained: true,
                    extrapolated: true,
                });
            }
            let ls = lambda_star_with(m, x, n, default_span(x), DEFAULT_SCAN_POINTS, opts)?;
            Ok(SmileRow {
                x,
                lambda_star: ls.value,
                sigma_asym: x.abs() / (2.0 * ls.value).sqrt(),
                boundary_attained: ls.boundary_attained,
                extrapolated: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let solved: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.extrapolated)
        .map(|r| (r.x, r.sigma_asym))
        .collect();
    let left = solved.iter().filter(|p| p.0 < 0.0).max_by(|a, b| a.0.total_cmp(&b.0)).copied();
    let right = solved.iter().filter(|p| p.0 > 0.0).min_by(|a, b| a.0.total_cmp(&b.0)).copied();
    let at_zero = match (left, right) {
        (Some((xl, sl)), Some((xr, sr))) => sl + (sr - sl) * (-xl) / (xr - xl),
        (Some((_, s)), None) | (None, Some((_, s))) => s,
        (None, None) => f64::NAN,
    };
    for r in rows.iter_mut().filter(|r| r.extrapolated) {
        r.sigma_asym = at_zero;
    }
    Ok(SmileTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, FunctionFamily, Preset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bs(rho: f64) -> ModelSpec {
        let mut m = preset(Preset::BlackScholes);
        m.rho = rho;
        m
    }

    #[test]
    fn objective_examples() {
        let m = preset(Preset::RoughBergomi);
        let g = vec![0.0; 32];
        // with g = 0, v = Ψ(0) everywhere
        let f0 = m.f.value(m.psi.value(0.0, 0.0), 0.0);
        let z = 0.13;
        let expect = z * z / (2.0 * (1.0 - m.rho * m.rho) * f0 * f0);
        assert!((objective(&m, z, &g).unwrap() - expect).abs() < 1e-14);
        assert_eq!(objective(&m, 0.0, &g).unwrap(), 0.0);
        let v = objective(&bs(0.0), 0.2, &[0.0; 16]).unwrap();
        assert!((v - 0.04 / 0.18).abs() < 1e-14);
    }

    #[test]
    fn objective_degenerate_denominator() {
        let mut m = bs(0.0);
        m.f = FunctionFamily::Constant { c: 0.0 };
        assert!(matches!(objective(&m, 0.1, &[0.0; 8]), Err(Error::DegenerateDenominator)));
    }

    #[test]
    fn gradient_constant_f() {
        let m = bs(0.5);
        let n = 20;
        let g: Vec<f64> = (0..n).map(|j| (j as f64 * 0.3).sin()).collect();
        let gr = gradient(&m, 0.2, &g).unwrap();
        assert_eq!(gr.mode, GradientMode::Analytic);
        // penalty part is the same in every cell once the energy term is removed
        let dt = 1.0 / n as f64;
        let pen: Vec<f64> = gr.values.iter().zip(&g).map(|(d, x)| d - dt * x).collect();
        for p in &pen {
            assert!((p - pen[0]).abs() < 1e-15);
        }
        let zero = gradient(&m, 0.0, &vec![0.0; n]).unwrap();
        assert!(zero.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in Preset::ALL {
            let m = preset(p);
            let n = 32;
            for _ in 0..5 {
                let g: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
                let prob = RateProblem::new(&m, 0.15, n).unwrap();
                let an = prob.gradient(&g).unwrap();
                assert_eq!(an.mode, GradientMode::Analytic);
                let fd = prob.finite_difference_gradient(&g);
                let scale = sup_norm(&fd);
                let err = an.values.iter().zip(&fd).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
                assert!(err <= 1e-5 * scale, "{}: err {err} scale {scale}", p.name());
            }
        }
    }

    #[test]
    fn gradient_falls_back_at_kink() {
        let mut m = preset(Preset::RoughHestonLike);
        m.psi = FunctionFamily::Shift { c: 0.04 };
        m.f = FunctionFamily::SqrtPlus { floor: 0.04 };
        let mut g = vec![0.1; 16];
        g[0] = 0.0;
        let gr = gradient(&m, 0.1, &g).unwrap();
        assert_eq!(gr.mode, GradientMode::FiniteDifference);
    }

    #[test]
    fn black_scholes_closed_form() {
        for rho in [-0.7, 0.0, 0.7] {
            for z in [-0.4, 0.05, 0.2] {
                let r = solve_rate(&bs(rho), z, 64, 1e-8).unwrap();
                let exact = z * z / 0.18;
                assert!((r.value - exact).abs() <= 1e-4 * exact, "rho {rho} z {z}: {}", r.value);
                assert!(r.converged);
            }
        }
    }

    #[test]
    fn zero_target_costs_nothing() {
        for p in Preset::ALL {
            let r = solve_rate(&preset(p), 0.0, 32, 1e-8).unwrap();
            assert_eq!(r.value, 0.0);
            assert!(r.control.iter().all(|&g| g == 0.0));
            assert_eq!(r.iterations, 0);
        }
    }

    #[test]
    fn solver_rejects_bad_inputs() {
        let m = bs(0.0);
        assert!(solve_rate(&m, 0.1, 8, 1e-8).is_err());
        assert!(solve_rate(&m, 0.1, 32, 0.0).is_err());
        let mut bad = bs(0.0);
        bad.rho = -1.0;
        assert!(matches!(solve_rate(&bad, 0.1, 32, 1e-8), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn joint_scaling_invariance() {
        let m = preset(Preset::RoughBergomi);
        let c = 1.7;
        let mut scaled = m.clone();
        if let FunctionFamily::BergomiF { xi, eta, h } = m.f {
            scaled.f = FunctionFamily::BergomiF { xi: xi * c * c, eta, h };
        }
        let a = solve_rate(&m, 0.1, 64, 1e-9).unwrap().value;
        let b = solve_rate(&scaled, 0.1 * c, 64, 1e-9).unwrap().value;
        assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
    }

    #[test]
    fn rough_bergomi_refinement_is_cauchy() {
        let m = preset(Preset::RoughBergomi);
        let vals: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| solve_rate(&m, 0.1, n, 1e-9).unwrap().value)
            .collect();
        let g1 = (vals[1] - vals[0]).abs();
        let g2 = (vals[2] - vals[1]).abs();
        assert!(g2 * 2.0 <= g1, "{vals:?}");
    }

    #[test]
    fn lambda_star_examples() {
        let m = bs(0.0);
        assert_eq!(lambda_star(&m, 0.0, 32, 0.1, 4).unwrap().value, 0.0);
        let ls = lambda_star(&m, 0.2, 32, 0.1, 4).unwrap();
        assert!((ls.value - 0.04 / 0.18).abs() < 1e-8);
        assert!(ls.boundary_attained);
        let mut sym = preset(Preset::RoughBergomi);
        sym.rho = 0.0;
        let up = lambda_star(&sym, 0.1, 32, 0.05, 2).unwrap().value;
        let down = lambda_star(&sym, -0.1, 32, 0.05, 2).unwrap().value;
        assert!((up - down).abs() <= 1e-7 * up, "{up} vs {down}");
        assert!(lambda_star(&m, 0.1, 32, 0.1, 1).is_err());
        assert!(lambda_star(&m, 0.1, 32, 0.0, 4).is_err());
    }

    #[test]
    fn smile_examples() {
        let t = smile(&bs(0.0), &[-0.2, -0.1, 0.0, 0.1, 0.2], 32).unwrap();
        for r in &t.rows {
            assert!((r.sigma_asym - 0.3).abs() < 1e-6, "{r:?}");
        }
        assert!(t.rows[2].extrapolated);

        let rb = smile(&preset(Preset::RoughBergomi), &[-0.05, 0.05], 64).unwrap();
        assert!(rb.atm_skew().unwrap() < 0.0);

        let mut sym = preset(Preset::RoughBergomi);
        sym.rho = 0.0;
        let s = smile(&sym, &[-0.08, 0.08], 32).unwrap();
        assert!((s.rows[0].sigma_asym - s.rows[1].sigma_asym).abs() < 1e-6);
        assert!(smile(&sym, &[], 32).is_err());
    }

    #[test]
    fn smile_csv_header() {
        let t = smile(&bs(0.0), &[0.1], 16).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,lambda_star,sigma_asym\n"));
    }
}
