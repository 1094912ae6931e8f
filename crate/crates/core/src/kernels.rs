//! Singular Volterra kernels `κ(t) = L(t) t^μ` and the fractional operators
//! they induce on grid paths.
//!
//! Every operator here is a discrete convolution with a Toeplitz weight
//! table. The power part `t^μ` is integrated in closed form over each cell;
//! the regular factor `L` is frozen at the midpoint of the integration
//! interval.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{holder_dist, holder_norm, GridFunction};

/// Hölder regularity assumed for operator inputs when a config omits `alpha`.
pub const DEFAULT_ALPHA: f64 = 0.45;

const GAMMA_CLAMP: f64 = 1e-6;

/// Parametric kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// `κ(t) = t^{H - 1/2}`.
    RiemannLiouville {
        #[serde(rename = "H")]
        h: f64,
    },
    /// `κ(t) = t^μ e^{ct}` with `c < 0`.
    GammaFractional { mu: f64, c: f64 },
    /// `κ(t) = t^μ (1 + t)^{β - μ}` with `β < -1`.
    PowerLaw { mu: f64, beta: f64 },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RiemannLiouville { .. } => "riemann_liouville",
            Self::GammaFractional { .. } => "gamma_fractional",
            Self::PowerLaw { .. } => "power_law",
        }
    }
}

/// Kernel together with the Hölder regularity `alpha` of the paths it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl From<KernelFamily> for KernelSpec {
    fn from(family: KernelFamily) -> Self {
        Self { family, alpha: None }
    }
}

impl KernelSpec {
    pub fn riemann_liouville(h: f64) -> Self {
        KernelFamily::RiemannLiouville { h }.into()
    }

    pub fn gamma_fractional(mu: f64, c: f64) -> Self {
        KernelFamily::GammaFractional { mu, c }.into()
    }

    pub fn power_law(mu: f64, beta: f64) -> Self {
        KernelFamily::PowerLaw { mu, beta }.into()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// Exponent of the singular part.
    pub fn mu(&self) -> f64 {
        match self.family {
            KernelFamily::RiemannLiouville { h } => h - 0.5,
            KernelFamily::GammaFractional { mu, .. } | KernelFamily::PowerLaw { mu, .. } => mu,
        }
    }

    /// `H = μ + 1/2` when `μ < 1/2`.
    pub fn hurst_like(&self) -> Option<f64> {
        let mu = self.mu();
        (mu > -1.0 && mu < 0.5).then_some(mu + 0.5)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    /// Target regularity `alpha + mu`, clamped into `(0, 1)`.
    pub fn gamma(&self) -> f64 {
        (self.alpha() + self.mu()).clamp(GAMMA_CLAMP, 1.0 - GAMMA_CLAMP)
    }

    pub fn is_riemann_liouville(&self) -> bool {
        matches!(self.family, KernelFamily::RiemannLiouville { .. })
    }

    /// The pure-power kernel `t^μ` sharing this kernel's exponent.
    pub fn riemann_liouville_counterpart(&self) -> Self {
        Self {
            family: KernelFamily::RiemannLiouville { h: self.mu() + 0.5 },
            alpha: self.alpha,
        }
    }

    /// Regular factor `L(t)`; `L(0) = 1` for every family.
    pub fn lipschitz_factor(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::RiemannLiouville { .. } => 1.0,
            KernelFamily::GammaFractional { c, .. } => (c * t).exp(),
            KernelFamily::PowerLaw { mu, beta } => (1.0 + t).powf(beta - mu),
        }
    }

    /// Parameter diagnostics; empty when the kernel is admissible.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.family {
            KernelFamily::RiemannLiouville { h } => {
                if !(h > 0.0 && h < 0.5) {
                    out.push(format!("riemann_liouville requires H in (0, 1/2), got {h}"));
                }
            }
            KernelFamily::GammaFractional { mu, c } => {
                if !(mu > -1.0 && mu < 1.0) {
                    out.push(format!("gamma_fractional requires mu in (-1, 1), got {mu}"));
                }
                if !(c < 0.0) {
                    out.push(format!("gamma_fractional requires c < 0, got {c}"));
                }
            }
            KernelFamily::PowerLaw { mu, beta } => {
                if !(mu > -1.0 && mu < 1.0) {
                    out.push(format!("power_law requires mu in (-1, 1), got {mu}"));
                }
                if !(beta < -1.0) {
                    out.push(format!("power_law requires beta < -1, got {beta}"));
                }
            }
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha < 1.0) {
            out.push(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(v.join("; ")))
        }
    }
}

/// `κ(t) = L(t) t^μ` for `t > 0`.
pub fn kernel_eval(k: &KernelSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::KernelDomain(t));
    }
    Ok(k.lipschitz_factor(t) * t.powf(k.mu()))
}

/// Where a weight table evaluates the convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Targets {
    /// Grid nodes `t_0, ..., t_n` (`n + 1` outputs, the first always zero).
    Nodes,
    /// Cell midpoints `t_i + dt/2` (`n` outputs).
    Midpoints,
}

/// Toeplitz convolution weights on a uniform grid.
///
/// `weight(i, j)` is `ε^{-μ} ∫ κ(ε(s_i - r)) dr` over the part of cell `j`
/// lying before target `s_i`. The table depends on `i - j` only.
#[derive(Debug, Clone)]
pub struct WeightTable {
    targets: Targets,
    n: usize,
    dt: f64,
    lags: Vec<f64>,
}

/// `∫_lo^hi u^μ du` in closed form.
fn power_integral(mu: f64, lo: f64, hi: f64) -> f64 {
    let p = mu + 1.0;
    (hi.powf(p) - lo.powf(p)) / p
}

/// Builds the weight table on an `n`-cell grid of `[0, horizon]`.
pub fn conv_weights(
    k: &KernelSpec,
    n: usize,
    horizon: f64,
    targets: Targets,
    eps: f64,
) -> Result<WeightTable> {
    if n == 0 {
        return invalid("conv_weights needs n >= 1");
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("eps must lie in (0, 1], got {eps}"));
    }
    if !(horizon > 0.0) {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    let mu = k.mu();
    if !(mu > -1.0) {
        return invalid(format!("mu must exceed -1, got {mu}"));
    }
    let dt = horizon / n as f64;
    let lags = match targets {
        // target minus cell start is k*dt, k = 1..=n
        Targets::Nodes => (1..=n)
            .map(|lag| {
                let hi = lag as f64 * dt;
                let lo = (lag - 1) as f64 * dt;
                k.lipschitz_factor(eps * (lag as f64 - 0.5) * dt) * power_integral(mu, lo, hi)
            })
            .collect(),
        // lag 0 is the half cell between t_i and the midpoint
        Targets::Midpoints => (0..n)
            .map(|lag| {
                let hi = (lag as f64 + 0.5) * dt;
                let lo = (lag as f64 - 0.5).max(0.0) * dt;
                k.lipschitz_factor(eps * 0.5 * (lo + hi)) * power_integral(mu, lo, hi)
            })
            .collect(),
    };
    Ok(WeightTable { targets, n, dt, lags })
}

impl WeightTable {
    pub fn targets(&self) -> Targets {
        self.targets
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Weights by lag; for node targets entry `d` belongs to cell `i - 1 - d`.
    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    /// Number of output rows.
    pub fn rows(&self) -> usize {
        match self.targets {
            Targets::Nodes => self.n + 1,
            Targets::Midpoints => self.n,
        }
    }

    /// Weight of cell `j` for target row `i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.targets {
            Targets::Nodes if j < i => self.lags[i - j - 1],
            Targets::Midpoints if j <= i => self.lags[i - j],
            _ => 0.0,
        }
    }

    /// Number of cells feeding row `i`.
    fn support(&self, i: usize) -> usize {
        match self.targets {
            Targets::Nodes => i,
            Targets::Midpoints => i + 1,
        }
    }

    /// Lag weight for the nearest contributing cell of a row.
    fn lag(&self, distance: usize) -> f64 {
        self.lags[distance]
    }

    /// Row `i` applied to cell values: `Σ_j w[i][j] c_j`.
    pub fn row_dot(&self, i: usize, cells: &[f64]) -> f64 {
        let m = self.support(i);
        let mut acc = 0.0;
        for (d, c) in cells[..m].iter().rev().enumerate() {
            acc += self.lag(d) * c;
        }
        acc
    }

    /// Applies the table to `n` cell values.
    pub fn apply(&self, cells: &[f64]) -> Vec<f64> {
        debug_assert_eq!(cells.len(), self.n);
        (0..self.rows()).map(|i| self.row_dot(i, cells)).collect()
    }

    /// Adjoint: `out_j = Σ_i w[i][j] r_i` for row values `r`.
    pub fn apply_transpose(&self, rows: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rows.len(), self.rows());
        (0..self.n)
            .map(|j| {
                let first = match self.targets {
                    Targets::Nodes => j + 1,
                    Targets::Midpoints => j,
                };
                rows[first..]
                    .iter()
                    .enumerate()
                    .map(|(d, r)| self.lag(d) * r)
                    .sum()
            })
            .collect()
    }
}

/// `𝒦₀g(t) = ∫₀ᵗ κ_H(t - r) g_r dr` for `g` piecewise constant on cells.
pub fn apply_k0(k: &KernelSpec, horizon: f64, cells: &[f64]) -> Result<GridFunction> {
    if !k.is_riemann_liouville() {
        return Err(Error::KernelFamily(k.family.name()));
    }
    let table = conv_weights(k, cells.len(), horizon, Targets::Nodes, 1.0)?;
    GridFunction::new(horizon, table.apply(cells))
}

/// `𝒦A` at the nodes, as the convolution of κ against the increments of `A`.
pub fn apply_k_path(k: &KernelSpec, a: &GridFunction) -> Result<GridFunction> {
    apply_k_eps(k, a, 1.0)
}

/// Scaled operator `𝒦^ε A` built from the kernel `κ(ε ·)` and normalised by
/// `ε^{-μ}`.
pub fn apply_k_eps(k: &KernelSpec, a: &GridFunction, eps: f64) -> Result<GridFunction> {
    let table = conv_weights(k, a.n(), a.horizon(), Targets::Nodes, eps)?;
    GridFunction::new(a.horizon(), table.apply(&a.slopes()))
}

/// One row of a [`KepsReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct KepsRow {
    pub path: usize,
    pub eps: f64,
    /// Hölder distance between `𝒦^ε A` and `𝒦₀ A`.
    pub distance: f64,
    /// `C (ε + sup_t |L(εt) - 1|) ‖A‖_α`.
    pub envelope: f64,
}

#[derive(Debug, Clone)]
pub struct KepsReport {
    pub gamma: f64,
    pub rows: Vec<KepsRow>,
    /// Envelope constant per path, fitted on the largest `ε`.
    pub constants: Vec<f64>,
    /// Rows whose distance exceeds the envelope.
    pub violations: Vec<KepsRow>,
}

impl KepsReport {
    /// Ratios `d(ε_k) / d(ε_{k+1})` along the ladder for one path.
    pub fn ratios(&self, path: usize) -> Vec<f64> {
        let d: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.path == path)
            .map(|r| r.distance)
            .collect();
        d.windows(2).map(|w| w[0] / w[1]).collect()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "path,eps,holder_dist,envelope")?;
        for r in &self.rows {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e}", r.path, r.eps, r.distance, r.envelope)?;
        }
        Ok(())
    }
}

/// Measures how fast `𝒦^ε` approaches `𝒦₀` along a decreasing ladder of `ε`.
pub fn keps_convergence_report(
    k: &KernelSpec,
    test_paths: &[GridFunction],
    eps_ladder: &[f64],
    gamma: f64,
) -> Result<KepsReport> {
    if eps_ladder.is_empty() {
        return invalid("eps ladder is empty");
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("eps ladder must be strictly decreasing");
    }
    if eps_ladder.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return invalid("eps ladder entries must lie in (0, 1]");
    }
    let rl = k.riemann_liouville_counterpart();
    let alpha = k.alpha();
    let mut rows = Vec::new();
    let mut constants = Vec::new();
    let mut violations = Vec::new();
    for (p, path) in test_paths.iter().enumerate() {
        let reference = apply_k_path(&rl, path)?;
        let norm = holder_norm(path, alpha)?;
        let times = path.times();
        let mut c_fit = None;
        for &eps in eps_ladder {
            let d = holder_dist(&apply_k_eps(k, path, eps)?, &reference, gamma)?;
            let sup_l = times
                .iter()
                .map(|&t| (k.lipschitz_factor(eps * t) - 1.0).abs())
                .fold(0.0, f64::max);
            let scale = (eps + sup_l) * norm;
            let c = *c_fit.get_or_insert(if scale > 0.0 { d / scale } else { 0.0 });
            let row = KepsRow { path: p, eps, distance: d, envelope: c * scale };
            if d > row.envelope * (1.0 + 1e-9) + 1e-12 {
                violations.push(row.clone());
            }
            rows.push(row);
        }
        constants.push(c_fit.unwrap_or(0.0));
    }
    Ok(KepsReport { gamma, rows, constants, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_eval_examples() {
        let rl = KernelSpec::riemann_liouville(0.3);
        assert!((kernel_eval(&rl, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let gf = KernelSpec::gamma_fractional(-0.2, -1.0);
        assert!((kernel_eval(&gf, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let pl = KernelSpec::power_law(-0.2, -2.0);
        let expect = 0.5f64.powf(-0.2) * 1.5f64.powf(-1.8);
        assert!((kernel_eval(&pl, 0.5).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.55361).abs() < 1e-4);
        assert!(matches!(kernel_eval(&rl, 0.0), Err(Error::KernelDomain(_))));
    }

    #[test]
    fn single_cell_weight() {
        let rl = KernelSpec::riemann_liouville(0.3);
        let w = conv_weights(&rl, 1, 1.0, Targets::Nodes, 1.0).unwrap();
        assert!((w.weight(1, 0) - 1.25).abs() < 1e-15);
        assert_eq!(w.weight(0, 0), 0.0);
    }

    #[test]
    fn rl_weights_ignore_eps() {
        let rl = KernelSpec::riemann_liouville(0.2);
        let a = conv_weights(&rl, 16, 1.0, Targets::Nodes, 1.0).unwrap();
        for eps in [0.5, 0.01, 1e-6] {
            let b = conv_weights(&rl, 16, 1.0, Targets::Nodes, eps).unwrap();
            for i in 0..=16 {
                for j in 0..16 {
                    assert_eq!(a.weight(i, j), b.weight(i, j));
                }
            }
        }
    }

    #[test]
    fn rl_row_sums_closed_form() {
        let h = 0.3;
        let rl = KernelSpec::riemann_liouville(h);
        let n = 200;
        let w = conv_weights(&rl, n, 1.0, Targets::Nodes, 1.0).unwrap();
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let sum: f64 = (0..n).map(|j| w.weight(i, j)).sum();
            let exact = t.powf(h + 0.5) / (h + 0.5);
            assert!((sum - exact).abs() <= 1e-13 * exact, "row {i}: {sum} vs {exact}");
        }
    }

    #[test]
    fn midpoint_rows_include_half_cell() {
        let rl = KernelSpec::riemann_liouville(0.3);
        let n = 10;
        let w = conv_weights(&rl, n, 1.0, Targets::Midpoints, 1.0).unwrap();
        let out = w.apply(&vec![1.0; n]);
        for (i, v) in out.iter().enumerate() {
            let s = (i as f64 + 0.5) / n as f64;
            assert!((v - s.powf(0.8) / 0.8).abs() < 1e-14);
        }
    }

    #[test]
    fn k0_examples() {
        let rl = KernelSpec::riemann_liouville(0.3);
        let y = apply_k0(&rl, 1.0, &vec![1.0; 64]).unwrap();
        assert!((y.last() - 1.25).abs() < 1e-14);
        for (i, v) in y.values().iter().enumerate() {
            assert!((v - y.time(i).powf(0.8) / 0.8).abs() < 1e-14);
        }
        let z = apply_k0(&rl, 1.0, &[0.0; 8]).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let g: Vec<f64> = (0..32).map(|j| (j as f64 * 0.7).sin()).collect();
        let g2: Vec<f64> = g.iter().map(|v| 2.0 * v).collect();
        let a = apply_k0(&rl, 1.0, &g).unwrap();
        let b = apply_k0(&rl, 1.0, &g2).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((2.0 * x - y).abs() < 1e-14);
        }
        let gf = KernelSpec::gamma_fractional(-0.2, -1.0);
        assert!(matches!(apply_k0(&gf, 1.0, &g), Err(Error::KernelFamily(_))));
    }

    #[test]
    fn transpose_is_adjoint() {
        let k = KernelSpec::gamma_fractional(-0.3, -2.0);
        for targets in [Targets::Nodes, Targets::Midpoints] {
            let w = conv_weights(&k, 12, 0.8, targets, 0.4).unwrap();
            let c: Vec<f64> = (0..12).map(|j| (j as f64).cos()).collect();
            let r: Vec<f64> = (0..w.rows()).map(|i| (i as f64 * 0.3).sin()).collect();
            let lhs: f64 = w.apply(&c).iter().zip(&r).map(|(a, b)| a * b).sum();
            let rhs: f64 = w.apply_transpose(&r).iter().zip(&c).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn k_path_examples() {
        let rl = KernelSpec::riemann_liouville(0.3);
        let slope = 1.7;
        let a = GridFunction::from_fn(1.0, 50, |t| slope * t - 0.4).unwrap();
        let k = apply_k_path(&rl, &a).unwrap();
        for (i, v) in k.values().iter().enumerate() {
            let expect = slope * k.time(i).powf(0.8) / 0.8;
            assert!((v - expect).abs() < 1e-13);
        }
        let c = GridFunction::from_fn(1.0, 50, |_| 3.0).unwrap();
        assert!(apply_k_path(&rl, &c).unwrap().values().iter().all(|&v| v == 0.0));
    }

    /// Direct two-term form `κ(t)(A_t - A_0) + ∫₀ᵗ (A_s - A_t) κ'(t - s) ds`
    /// for `κ(u) = u^μ`, by product integration on a fine sub-grid: the power
    /// part of `κ'` is integrated exactly, the bracket is frozen at the cell
    /// midpoint, and the last cell uses the linearisation `A_s - A_t ≈ -A'(t) u`.
    fn direct_rl_oracle(mu: f64, a: impl Fn(f64) -> f64, da: impl Fn(f64) -> f64, t: f64) -> f64 {
        let m = 20_000;
        let h = t / m as f64;
        let mut integral = 0.0;
        for c in 1..m {
            let lo = c as f64 * h;
            let hi = lo + h;
            let u_mid = 0.5 * (lo + hi);
            integral += (a(t - u_mid) - a(t)) * (hi.powf(mu) - lo.powf(mu));
        }
        integral += -da(t) * mu * h.powf(mu + 1.0) / (mu + 1.0);
        t.powf(mu) * (a(t) - a(0.0)) + integral
    }

    #[test]
    fn k_path_matches_direct_formula() {
        let h = 0.3;
        let mu = h - 0.5;
        let rl = KernelSpec::riemann_liouville(h);
        let n = 512;
        let a = GridFunction::from_fn(1.0, n, |t| t * t).unwrap();
        let k = apply_k_path(&rl, &a).unwrap();
        for i in [n / 8, n / 4, n / 2, n] {
            let t = k.time(i);
            let direct = direct_rl_oracle(mu, |s| s * s, |s| 2.0 * s, t);
            let rel = (k.values()[i] - direct).abs() / direct.abs();
            assert!(rel < 1e-3, "t={t}: {} vs {direct}", k.values()[i]);
        }
    }

    #[test]
    fn k_eps_examples() {
        let rl = KernelSpec::riemann_liouville(0.3);
        let a = GridFunction::from_fn(1.0, 64, |t| (5.0 * t).sin() + t.sqrt()).unwrap();
        let base = apply_k_path(&rl, &a).unwrap();
        for eps in [1.0, 0.3, 1e-3] {
            let e = apply_k_eps(&rl, &a, eps).unwrap();
            let diff = base
                .values()
                .iter()
                .zip(e.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
        assert!(apply_k_eps(&rl, &a, 0.0).is_err());
        assert!(apply_k_eps(&rl, &a, 1.5).is_err());

        // gamma_fractional vs its pure-power counterpart at eps = 0.01
        let gf = KernelSpec::gamma_fractional(-0.2, -1.0);
        let lin = GridFunction::from_fn(1.0, 128, |t| t).unwrap();
        let eps = 0.01;
        let g = apply_k_eps(&gf, &lin, eps).unwrap();
        let r = apply_k_path(&gf.riemann_liouville_counterpart(), &lin).unwrap();
        let sup_l = 1.0 - (-eps).exp();
        let diff = g
            .values()
            .iter()
            .zip(r.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 2.0 * (eps + sup_l), "diff {diff}");
    }

    #[test]
    fn keps_report_rl_and_constant() {
        let rl = KernelSpec::riemann_liouville(0.3).with_alpha(0.45);
        let paths = vec![
            GridFunction::from_fn(1.0, 128, |t| t.powf(0.45)).unwrap(),
            GridFunction::from_fn(1.0, 128, |_| 2.0).unwrap(),
        ];
        let rep = keps_convergence_report(&rl, &paths, &[1.0, 0.5, 0.1], 0.25).unwrap();
        assert!(rep.rows.iter().all(|r| r.distance < 1e-12));
        assert!(rep.passed());
        let gf = KernelSpec::gamma_fractional(-0.2, -1.0).with_alpha(0.45);
        let rep = keps_convergence_report(&gf, &paths[1..], &[1.0, 0.5], 0.25).unwrap();
        assert!(rep.rows.iter().all(|r| r.distance == 0.0));
        assert!(keps_convergence_report(&gf, &paths, &[], 0.25).is_err());
        assert!(keps_convergence_report(&gf, &paths, &[0.5, 1.0], 0.25).is_err());
    }

    #[test]
    fn keps_report_gamma_fractional_halving() {
        let gf = KernelSpec::gamma_fractional(-0.2, -1.0).with_alpha(0.45);
        let paths = vec![GridFunction::from_fn(1.0, 256, |t| t.powf(0.45)).unwrap()];
        let ladder: Vec<f64> = (0..7).map(|k| 0.5f64.powi(k)).collect();
        let rep = keps_convergence_report(&gf, &paths, &ladder, gf.gamma()).unwrap();
        let ratios = rep.ratios(0);
        for r in &ratios[3..] {
            assert!((r - 2.0).abs() < 0.1, "ratios {ratios:?}");
        }
        // the first halving is still curved by e^{-ε}, so ratios climb toward 2
        assert!(ratios.windows(2).all(|w| w[1] >= w[0] - 1e-9), "ratios {ratios:?}");
    }

    #[test]
    fn json_shapes() {
        let rl: KernelSpec = serde_json::from_str(r#"{"family":"riemann_liouville","H":0.3}"#).unwrap();
        assert_eq!(rl, KernelSpec::riemann_liouville(0.3));
        let gf: KernelSpec =
            serde_json::from_str(r#"{"family":"gamma_fractional","mu":-0.2,"c":-1.0}"#).unwrap();
        assert_eq!(gf, KernelSpec::gamma_fractional(-0.2, -1.0));
        let pl: KernelSpec =
            serde_json::from_str(r#"{"family":"power_law","mu":-0.2,"beta":-2.0}"#).unwrap();
        assert_eq!(pl, KernelSpec::power_law(-0.2, -2.0));
        assert_eq!(
            serde_json::to_string(&rl).unwrap(),
            r#"{"family":"riemann_liouville","H":0.3}"#
        );
    }

    #[test]
    fn family_invariants() {
        assert!(KernelSpec::riemann_liouville(0.6).validate().is_err());
        assert!(KernelSpec::gamma_fractional(-0.2, 1.0).validate().is_err());
        assert!(KernelSpec::power_law(-0.2, -0.5).validate().is_err());
        for k in [
            KernelSpec::riemann_liouville(0.1),
            KernelSpec::gamma_fractional(0.3, -2.0),
            KernelSpec::power_law(-0.7, -3.0),
        ] {
            assert!(k.validate().is_ok());
            assert_eq!(k.lipschitz_factor(0.0), 1.0);
            assert!(k.gamma() > 0.0 && k.gamma() < 1.0);
        }
    }

    /// Sum of scaled sinusoids with rough-looking spectrum.
    fn synthetic_rough(n: usize, h: f64, phase: f64) -> GridFunction {
        GridFunction::from_fn(1.0, n, |t| {
            (1..=64)
                .map(|m| {
                    let m = m as f64;
                    m.powf(-(h + 0.5)) * (std::f64::consts::PI * m * t + phase * m).sin()
                })
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn regularity_transfer_bounded() {
        let rl = KernelSpec::riemann_liouville(0.3).with_alpha(0.4);
        let gamma = rl.gamma();
        let ratios: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&n| {
                let a = synthetic_rough(n, 0.4, 0.37);
                let ka = apply_k_path(&rl, &a).unwrap();
                holder_norm(&ka, gamma).unwrap() / holder_norm(&a, 0.4).unwrap()
            })
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::MAX, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
        assert!(hi / lo < 1.5, "{ratios:?}");
    }

    proptest! {
        #[test]
        fn k0_linearity(
            g in prop::collection::vec(-3.0f64..3.0, 24),
            h in prop::collection::vec(-3.0f64..3.0, 24),
            a in -2.0f64..2.0, b in -2.0f64..2.0,
        ) {
            let rl = KernelSpec::riemann_liouville(0.25);
            let comb: Vec<f64> = g.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
            let lhs = apply_k0(&rl, 1.0, &comb).unwrap();
            let kg = apply_k0(&rl, 1.0, &g).unwrap();
            let kh = apply_k0(&rl, 1.0, &h).unwrap();
            for i in 0..lhs.values().len() {
                let rhs = a * kg.values()[i] + b * kh.values()[i];
                prop_assert!((lhs.values()[i] - rhs).abs() < 1e-12);
            }
        }

        #[test]
        fn rl_scale_invariance(v in prop::collection::vec(-3.0f64..3.0, 2..40), eps in 1e-6f64..1.0) {
            let rl = KernelSpec::riemann_liouville(0.15);
            let a = GridFunction::new(1.0, v).unwrap();
            let x = apply_k_path(&rl, &a).unwrap();
            let y = apply_k_eps(&rl, &a, eps).unwrap();
            for (p, q) in x.values().iter().zip(y.values()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
