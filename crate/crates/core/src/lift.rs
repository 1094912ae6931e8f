//! Young pairing of two grid paths, Chen and Young-estimate diagnostics, and
//! the deterministic skeleton equations driven by bounded-variation controls.

use crate::error::{invalid, Error, Result};
use crate::grid::{holder_norm, GridFunction};
use crate::kernels::apply_k0;
use crate::model::{FunctionFamily, ModelSpec};

/// Two-component grid path with its second-level iterated integrals.
///
/// Second levels are stored anchored at zero, `𝐳^{(ij)}_{0,t_k}`; general
/// increments follow from Chen's relation.
#[derive(Debug, Clone)]
pub struct YoungLift {
    z: [GridFunction; 2],
    anchored: [[Vec<f64>; 2]; 2],
}

impl YoungLift {
    pub fn component(&self, i: usize) -> &GridFunction {
        &self.z[i]
    }

    pub fn n(&self) -> usize {
        self.z[0].n()
    }

    /// First-level increment `z^{(i)}_{st}` between nodes `s <= t`.
    pub fn first(&self, i: usize, s: usize, t: usize) -> f64 {
        let v = self.z[i].values();
        v[t] - v[s]
    }

    /// Stored `𝐳^{(ij)}_{0,t_k}`.
    pub fn anchored(&self, i: usize, j: usize) -> &[f64] {
        &self.anchored[i][j]
    }

    /// Mutable access to the stored anchors, for defect-injection checks.
    pub fn anchored_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        &mut self.anchored[i][j]
    }

    /// `𝐳^{(ij)}_{st}` reconstructed from the anchors:
    /// `𝐳_{st} = 𝐳_{0t} - 𝐳_{0s} - z_{0s} ⊗ z_{st}`.
    pub fn second(&self, i: usize, j: usize, s: usize, t: usize) -> f64 {
        let a = &self.anchored[i][j];
        a[t] - a[s] - self.first(i, 0, s) * self.first(j, s, t)
    }

    /// `𝐳^{(ij)}_{st}` summed cell by cell from the first level.
    pub fn second_direct(&self, i: usize, j: usize, s: usize, t: usize) -> f64 {
        let zi = self.z[i].values();
        let zj = self.z[j].values();
        (s..t)
            .map(|c| (0.5 * (zi[c] + zi[c + 1]) - zi[s]) * (zj[c + 1] - zj[c]))
            .sum()
    }
}

/// Young pairing of the piecewise-linear interpolants of `z1` and `z2`.
pub fn young_pair(z1: &GridFunction, z2: &GridFunction) -> Result<YoungLift> {
    z1.check_same_grid(z2)?;
    let z = [z1.clone(), z2.clone()];
    let n = z1.n();
    let mut anchored: [[Vec<f64>; 2]; 2] = Default::default();
    for i in 0..2 {
        for j in 0..2 {
            let zi = z[i].values();
            let zj = z[j].values();
            let mut acc = Vec::with_capacity(n + 1);
            acc.push(0.0);
            if i == j {
                // geometric convention: ½ (z_{0t})²
                for k in 1..=n {
                    let d = zi[k] - zi[0];
                    acc.push(0.5 * d * d);
                }
            } else {
                let mut s = 0.0;
                for c in 0..n {
                    s += (0.5 * (zi[c] + zi[c + 1]) - zi[0]) * (zj[c + 1] - zj[c]);
                    acc.push(s);
                }
            }
            anchored[i][j] = acc;
        }
    }
    Ok(YoungLift { z, anchored })
}

/// Deterministic sample of node triples `s <= u <= t`.
///
/// Every node appears as a right endpoint through `(0, ⌊t/2⌋, t)`, and a
/// strided lattice covers interior triples.
fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out: Vec<(usize, usize, usize)> = (1..=n).map(|t| (0, t / 2, t)).collect();
    let stride = (n / 24).max(1);
    let nodes: Vec<usize> = (0..=n).step_by(stride).chain(std::iter::once(n)).collect();
    for (a, &s) in nodes.iter().enumerate() {
        for (b, &u) in nodes.iter().enumerate().skip(a) {
            for &t in nodes.iter().skip(b) {
                if s < t {
                    out.push((s, u, t));
                }
            }
        }
    }
    out
}

/// Largest entrywise violation of Chen's relation
/// `𝐳_{st} = 𝐳_{su} + 𝐳_{ut} + z_{su} ⊗ z_{ut}`, with the left side read from
/// the stored anchors and the pieces summed directly from the first level.
pub fn chen_defect(l: &YoungLift) -> f64 {
    let mut worst = 0.0f64;
    for (s, u, t) in triples(l.n()) {
        for i in 0..2 {
            for j in 0..2 {
                let lhs = l.second(i, j, s, t);
                let rhs = l.second_direct(i, j, s, u)
                    + l.second_direct(i, j, u, t)
                    + l.first(i, s, u) * l.first(j, u, t);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// Largest violation of `𝐳^{(12)}_{st} + 𝐳^{(21)}_{st} = z¹_{st} z²_{st}`.
pub fn integration_by_parts_defect(l: &YoungLift) -> f64 {
    let n = l.n();
    let mut worst = 0.0f64;
    for (s, _, t) in triples(n) {
        let lhs = l.second(0, 1, s, t) + l.second(1, 0, s, t);
        worst = worst.max((lhs - l.first(0, s, t) * l.first(1, s, t)).abs());
    }
    worst
}

#[derive(Debug, Clone, Copy)]
pub struct YoungBoundReport {
    /// `max |𝐳^{(12)}_{st}| / (‖z¹‖ ‖z²‖ |t-s|^{α₁+α₂})`.
    pub ratio: f64,
    /// `1 / (1 - 2^{1-α₁-α₂})`.
    pub young_constant: f64,
    pub within_bound: bool,
}

/// Checks the Young estimate for the cross integral `𝐳^{(12)}`.
pub fn young_bound_check(l: &YoungLift, alpha1: f64, alpha2: f64) -> Result<YoungBoundReport> {
    let theta = alpha1 + alpha2;
    if !(theta > 1.0) {
        return invalid(format!("Young pairing needs alpha1 + alpha2 > 1, got {theta}"));
    }
    let n1 = holder_norm(l.component(0), alpha1)?;
    let n2 = holder_norm(l.component(1), alpha2)?;
    let young_constant = 1.0 / (1.0 - 2f64.powf(1.0 - theta));
    let n = l.n();
    let dt = l.component(0).dt();
    let mut ratio = 0.0f64;
    if n1 * n2 > 0.0 {
        for s in 0..n {
            for t in s + 1..=n {
                let denom = n1 * n2 * ((t - s) as f64 * dt).powf(theta);
                ratio = ratio.max(l.second(0, 1, s, t).abs() / denom);
            }
        }
    }
    Ok(YoungBoundReport { ratio, young_constant, within_bound: ratio <= young_constant })
}

#[derive(Debug, Clone)]
pub struct SkeletonResult {
    /// `Ȳ = Y - Y₀`, with `Ȳ(0) = 0`.
    pub y: GridFunction,
    /// Hölder norms of `(a, ã, x)` at exponents `(1, 1, 1)` on the grid.
    pub driver_stats: [f64; 3],
}

pub const SKELETON_SUBSTEPS: usize = 4;

/// Solves `y' = σ₁(y₀+y) a(t) ẋ(t) + σ₂(y₀+y) ã(t)`, `y(0) = 0`, with `ẋ`
/// the cell slope of `x` and `a`, `ã` interpolated linearly.
pub fn skeleton_solve(
    sigma1: &FunctionFamily,
    sigma2: &FunctionFamily,
    a: &GridFunction,
    atilde: &GridFunction,
    x: &GridFunction,
    y0: f64,
) -> Result<SkeletonResult> {
    skeleton_solve_with(sigma1, sigma2, a, atilde, x, y0, SKELETON_SUBSTEPS)
}

/// [`skeleton_solve`] with a chosen number of classical Runge–Kutta steps per cell.
pub fn skeleton_solve_with(
    sigma1: &FunctionFamily,
    sigma2: &FunctionFamily,
    a: &GridFunction,
    atilde: &GridFunction,
    x: &GridFunction,
    y0: f64,
    substeps: usize,
) -> Result<SkeletonResult> {
    a.check_same_grid(x)?;
    atilde.check_same_grid(x)?;
    if substeps == 0 {
        return invalid("substeps must be positive");
    }
    let n = x.n();
    let dt = x.dt();
    let h = dt / substeps as f64;
    let (av, tv, xv) = (a.values(), atilde.values(), x.values());
    let mut y = 0.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for c in 0..n {
        let slope = (xv[c + 1] - xv[c]) / dt;
        // θ ∈ [0, 1] is the position inside the cell
        let rhs = |theta: f64, y: f64| {
            let ai = av[c] + theta * (av[c + 1] - av[c]);
            let ti = tv[c] + theta * (tv[c + 1] - tv[c]);
            sigma1.value(y0 + y, 0.0) * ai * slope + sigma2.value(y0 + y, 0.0) * ti
        };
        for k in 0..substeps {
            let th = k as f64 / substeps as f64;
            let dth = 1.0 / substeps as f64;
            let k1 = rhs(th, y);
            let k2 = rhs(th + 0.5 * dth, y + 0.5 * h * k1);
            let k3 = rhs(th + 0.5 * dth, y + 0.5 * h * k2);
            let k4 = rhs(th + dth, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !y.is_finite() {
            return Err(Error::BlowUp(format!("skeleton solution non-finite in cell {c}")));
        }
        out.push(y);
    }
    Ok(SkeletonResult {
        y: GridFunction::new(x.horizon(), out)?,
        driver_stats: [holder_norm(a, 1.0)?, holder_norm(atilde, 1.0)?, holder_norm(x, 1.0)?],
    })
}

/// Forward map of the short-time skeleton on `[0, 1]`:
/// `ỹ = σ(Y₀) ∫₀^· f(Ψ(a(A₀) 𝒦₀ẇ)_r, 0) dx_r`, `x = ρw + √(1-ρ²) w⊥`,
/// by the trapezoid rule on the grid of `w`.
pub fn short_time_skeleton(m: &ModelSpec, w: &GridFunction, wperp: &GridFunction) -> Result<GridFunction> {
    m.validate_short_time()?;
    w.check_same_grid(wperp)?;
    let k0 = m.kernel.riemann_liouville_counterpart();
    let kw = apply_k0(&k0, w.horizon(), &w.slopes())?;
    let a0 = m.a_at_a0();
    let f: Vec<f64> = kw
        .values()
        .iter()
        .map(|&k| m.f.value(m.psi.value(a0 * k, 0.0), 0.0))
        .collect();
    let rho_bar = m.rho_bar();
    let x = w.zip_with(wperp, |a, b| m.rho * a + rho_bar * b)?;
    let dx = x.increments();
    let sigma0 = m.sigma0();
    GridFunction::from_increments(
        w.horizon(),
        0.0,
        &(0..w.n())
            .map(|c| sigma0 * 0.5 * (f[c] + f[c + 1]) * dx[c])
            .collect::<Vec<_>>(),
    )
}
