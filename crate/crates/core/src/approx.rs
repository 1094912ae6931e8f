//! Stopping-time approximation of `∫ a dx` by a piecewise-constant integrand.
//!
//! The integrand `a` is frozen at `a(τ_{k-1})` until it first moves by more
//! than `δ`; the approximation is then an exact finite sum against `x`.

use crate::error::{invalid, Result};
use crate::grid::{holder_dist, holder_norm, GridFunction};

/// Grid-snapped stopping times `0 = τ_0 < τ_1 < ... <= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingPartition {
    pub delta: f64,
    /// Node indices of the stopping times; the last is always `n`.
    pub indices: Vec<usize>,
    pub taus: Vec<f64>,
}

/// Greedy scan: `τ_k` is the first node after `τ_{k-1}` where
/// `|a - a(τ_{k-1})| > δ`, or `T` if there is none.
pub fn stopping_times(a: &GridFunction, delta: f64) -> Result<StoppingPartition> {
    if !(delta > 0.0) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    let v = a.values();
    let n = a.n();
    let mut indices = vec![0];
    let mut anchor = 0;
    for (j, &x) in v.iter().enumerate().skip(1) {
        if (x - v[anchor]).abs() > delta {
            indices.push(j);
            anchor = j;
        }
    }
    if *indices.last().unwrap() != n {
        indices.push(n);
    }
    let taus = indices.iter().map(|&i| a.time(i)).collect();
    Ok(StoppingPartition { delta, indices, taus })
}

/// Frozen integrand `Ψ_δ(a)` at the nodes: `a(τ_{k-1})` on `[τ_{k-1}, τ_k)`.
pub fn frozen_integrand(a: &GridFunction, delta: f64) -> Result<GridFunction> {
    let part = stopping_times(a, delta)?;
    let v = a.values();
    let mut out = vec![0.0; v.len()];
    for w in part.indices.windows(2) {
        out[w[0]..w[1]].fill(v[w[0]]);
    }
    // T opens a new level only if it triggered a stop itself
    let k = part.indices.len();
    let (prev, last) = (part.indices[k - 2], part.indices[k - 1]);
    out[last] = if (v[last] - v[prev]).abs() > delta { v[last] } else { v[prev] };
    GridFunction::new(a.horizon(), out)
}

/// `G_δ(a, x)_t = Σ_k a(τ_{k-1}) (x_{t∧τ_k} - x_{t∧τ_{k-1}})` at every node.
pub fn g_delta(a: &GridFunction, x: &GridFunction, delta: f64) -> Result<GridFunction> {
    a.check_same_grid(x)?;
    let part = stopping_times(a, delta)?;
    let av = a.values();
    let xv = x.values();
    let mut out = vec![0.0; xv.len()];
    let mut base = 0.0;
    for w in part.indices.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let level = av[lo];
        for i in lo + 1..=hi {
            out[i] = base + level * (xv[i] - xv[lo]);
        }
        base = out[hi];
    }
    GridFunction::new(x.horizon(), out)
}

/// Left-point Riemann–Stieltjes sums `Σ a_i (x_{i+1} - x_i)`.
pub fn riemann_stieltjes(a: &GridFunction, x: &GridFunction) -> Result<GridFunction> {
    a.check_same_grid(x)?;
    let av = a.values();
    let inc: Vec<f64> = x.increments().iter().enumerate().map(|(i, d)| av[i] * d).collect();
    GridFunction::from_increments(x.horizon(), 0.0, &inc)
}

#[derive(Debug, Clone)]
pub struct GDeltaReport {
    pub beta: f64,
    /// `(δ, β-Hölder distance to the left-point integral)`.
    pub rows: Vec<(f64, f64)>,
    /// Distances nonincreasing along the ladder, up to 5% slack.
    pub monotone: bool,
    pub final_distance: f64,
}

impl GDeltaReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.monotone && self.final_distance < tolerance
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "delta,holder_dist")?;
        for (d, h) in &self.rows {
            writeln!(w, "{d:.16e},{h:.16e}")?;
        }
        Ok(())
    }
}

pub const MONOTONE_SLACK: f64 = 0.05;

/// Distances of `G_δ(a, x)` to the left-point integral along a decreasing
/// ladder of `δ`.
pub fn gdelta_convergence(
    a: &GridFunction,
    x: &GridFunction,
    beta: f64,
    delta_ladder: &[f64],
) -> Result<GDeltaReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return invalid(format!("beta must lie in (0, 1), got {beta}"));
    }
    if delta_ladder.is_empty() || delta_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("delta ladder must be nonempty and strictly decreasing");
    }
    let reference = riemann_stieltjes(a, x)?;
    let rows = delta_ladder
        .iter()
        .map(|&d| Ok((d, holder_dist(&g_delta(a, x, d)?, &reference, beta)?)))
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].1 <= (1.0 + MONOTONE_SLACK) * w[0].1);
    let final_distance = rows.last().map(|r| r.1).unwrap_or(0.0);
    Ok(GDeltaReport { beta, rows, monotone, final_distance })
}

/// `‖x‖_β`, the scale used for relative `G_δ` tolerances.
pub fn reference_scale(x: &GridFunction, beta: f64) -> Result<f64> {
    holder_norm(x, beta)
}
