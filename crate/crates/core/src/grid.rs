//! Real-valued paths sampled on a uniform grid of `[0, T]`, with discrete
//! Hölder norms and the Hölder modulus of continuity.
//!
//! Grid functions are stored by their values at the nodes `t_i = i T / n`.
//! When a grid function is used as an integrand it is read as piecewise
//! constant on cells, taking the left-endpoint value.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// Largest number of cells accepted by the O(n²) norm computations.
pub const MAX_NORM_CELLS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    horizon: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid function from `n + 1` node values on `[0, horizon]`.
    pub fn new(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return invalid(format!("horizon must be positive and finite, got {horizon}"));
        }
        if values.len() < 2 {
            return invalid(format!("need at least 2 nodes, got {}", values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value {} at node {i}", values[i]));
        }
        Ok(Self { horizon, values })
    }

    /// Samples `f` at the `n + 1` nodes of the uniform `n`-cell grid.
    pub fn from_fn(horizon: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        let dt = horizon / n as f64;
        Self::new(horizon, (0..=n).map(|i| f(i as f64 * dt)).collect())
    }

    pub fn zeros(horizon: f64, n: usize) -> Result<Self> {
        Self::from_fn(horizon, n, |_| 0.0)
    }

    /// Path whose increments are given cell by cell, starting at `start`.
    pub fn from_increments(horizon: f64, start: f64, increments: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = start;
        values.push(acc);
        for d in increments {
            acc += d;
            values.push(acc);
        }
        Self::new(horizon, values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n() {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n()).map(|i| self.time(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.n()]
    }

    /// Cell increments `x_{i+1} - x_i`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cell slopes `(x_{i+1} - x_i) / dt`.
    pub fn slopes(&self) -> Vec<f64> {
        let dt = self.dt();
        self.values.windows(2).map(|w| (w[1] - w[0]) / dt).collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n() == other.n() && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: n={} T={} vs n={} T={}",
                self.n(),
                self.horizon,
                other.n(),
                other.horizon
            )))
        }
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.horizon, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two paths on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.horizon,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Piecewise-linear interpolation at `t`, clamped to `[0, T]`.
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.n();
        let s = (t / self.dt()).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Piecewise-linear interpolation onto an `m`-cell grid on the same horizon.
    pub fn resample(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("resample needs m >= 1");
        }
        if m == self.n() {
            return Ok(self.clone());
        }
        let n = self.n();
        let values = (0..=m)
            .map(|k| {
                // exact rational position k * n / m avoids drift at shared nodes
                let num = k * n;
                let i = num / m;
                if i >= n {
                    return self.values[n];
                }
                let w = (num % m) as f64 / m as f64;
                self.values[i] * (1.0 - w) + self.values[i + 1] * w
            })
            .collect();
        Self::new(self.horizon, values)
    }

    /// Writes the path as a two-column `t,value` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.time(i), v)?;
        }
        Ok(())
    }

    /// Reads a `t,value` CSV written by [`GridFunction::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some("t,value") {
            return invalid("missing `t,value` header");
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |c: Option<&str>| -> Result<f64> {
                c.and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("bad row {}: `{line}`", lineno + 2)))
            };
            ts.push(parse(cols.next())?);
            vs.push(parse(cols.next())?);
        }
        if ts.len() < 2 {
            return invalid("need at least 2 rows");
        }
        let horizon = *ts.last().unwrap();
        let n = ts.len() - 1;
        for (i, t) in ts.iter().enumerate() {
            let expect = horizon * i as f64 / n as f64;
            if (t - expect).abs() > 1e-9 * horizon.max(1.0) {
                return invalid(format!("non-uniform grid at row {}: t={t}, expected {expect}", i + 2));
            }
        }
        Self::new(horizon, vs)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        invalid(format!("alpha must lie in (0, 1], got {alpha}"))
    }
}

fn check_norm_size(x: &GridFunction) -> Result<()> {
    if x.n() > MAX_NORM_CELLS {
        return invalid(format!(
            "norm computations are capped at {MAX_NORM_CELLS} cells, got {}",
            x.n()
        ));
    }
    Ok(())
}

/// `max |x_j - x_i| / (t_j - t_i)^alpha` over pairs with `j - i <= max_lag`.
fn increment_sup(values: &[f64], dt: f64, alpha: f64, max_lag: usize) -> f64 {
    let n = values.len() - 1;
    let max_lag = max_lag.min(n);
    let inv_pow: Vec<f64> = (0..=max_lag)
        .map(|k| if k == 0 { 0.0 } else { (k as f64 * dt).powf(-alpha) })
        .collect();
    let mut best = 0.0f64;
    for i in 0..n {
        let xi = values[i];
        let hi = (i + max_lag).min(n);
        for (j, xj) in values.iter().enumerate().take(hi + 1).skip(i + 1) {
            let r = (xj - xi).abs() * inv_pow[j - i];
            if r > best {
                best = r;
            }
        }
    }
    best
}

/// Discrete α-Hölder norm `|x_0| + max_{i<j} |x_j - x_i| / (t_j - t_i)^α`.
pub fn holder_norm(x: &GridFunction, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_norm_size(x)?;
    Ok(x.first().abs() + increment_sup(&x.values, x.dt(), alpha, x.n()))
}

/// Hölder distance: the norm of the pointwise difference.
pub fn holder_dist(x: &GridFunction, y: &GridFunction, alpha: f64) -> Result<f64> {
    let d = x.zip_with(y, |a, b| a - b)?;
    holder_norm(&d, alpha)
}

/// Hölder modulus `w_α(δ, x)`: the increment ratio restricted to pairs at
/// distance at most `delta`.
pub fn modulus(x: &GridFunction, alpha: f64, delta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_norm_size(x)?;
    if !(delta > 0.0) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    let max_lag = ((delta / x.dt()) * (1.0 + 1e-12)).floor() as usize;
    Ok(increment_sup(&x.values, x.dt(), alpha, max_lag))
}
