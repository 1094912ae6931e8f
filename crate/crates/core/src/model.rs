//! Rough volatility model specification.
//!
//! The log-price `Y` solves
//!
//! ```text
//! dY_t = σ(Y_t) f(V_t, t) dX_t - ½ σ²(Y_t) f²(V_t, t) dt
//! X    = ρ W + √(1-ρ²) W⊥
//! V    = Ψ(𝒦A),   dA_t = b(A_t) dt + a(A_t) dW_t
//! ```
//!
//! Every coefficient is drawn from an enumerated parametric family so that
//! regularity and derivative availability are known up front.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Parametric coefficient family, evaluated as `φ(v, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FunctionFamily {
    Constant { c: f64 },
    Linear { m: f64, c: f64 },
    /// `center + scale · tanh(v)`.
    TanhBounded { scale: f64, center: f64 },
    /// `√ξ · exp(ηv/2 - η² t^{2H} / 4)`.
    BergomiF {
        xi: f64,
        eta: f64,
        #[serde(rename = "H")]
        h: f64,
    },
    /// `√max(v, floor)`.
    SqrtPlus { floor: f64 },
    #[serde(rename = "exp_psi", alias = "exp")]
    Exp,
    #[serde(rename = "identity", alias = "identity_psi")]
    Identity,
    /// `v + c`.
    #[serde(rename = "shift_psi", alias = "shift")]
    Shift { c: f64 },
    /// `log(1 + e^{kv}) / k`.
    #[serde(rename = "softplus_psi", alias = "softplus")]
    Softplus { k: f64 },
}

/// Which quantity [`eval_family`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Want {
    Value,
    Dv,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl FunctionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Linear { .. } => "linear",
            Self::TanhBounded { .. } => "tanh_bounded",
            Self::BergomiF { .. } => "bergomi_f",
            Self::SqrtPlus { .. } => "sqrt_plus",
            Self::Exp => "exp_psi",
            Self::Identity => "identity",
            Self::Shift { .. } => "shift_psi",
            Self::Softplus { .. } => "softplus_psi",
        }
    }

    pub fn is_psi(&self) -> bool {
        matches!(self, Self::Exp | Self::Identity | Self::Shift { .. } | Self::Softplus { .. })
    }

    /// Bounded with bounded derivatives.
    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::Constant { .. } | Self::TanhBounded { .. })
    }

    /// True when the family ignores `v`.
    pub fn is_v_independent(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    pub fn value(&self, v: f64, t: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::Linear { m, c } => m * v + c,
            Self::TanhBounded { scale, center } => center + scale * v.tanh(),
            Self::BergomiF { xi, eta, h } => {
                xi.sqrt() * (0.5 * eta * v - 0.25 * eta * eta * t.powf(2.0 * h)).exp()
            }
            Self::SqrtPlus { floor } => v.max(floor).sqrt(),
            Self::Exp => v.exp(),
            Self::Identity => v,
            Self::Shift { c } => v + c,
            Self::Softplus { k } => softplus(k * v) / k,
        }
    }

    /// `∂φ/∂v`; fails at the kink of `sqrt_plus`.
    pub fn dv(&self, v: f64, t: f64) -> Result<f64> {
        Ok(match *self {
            Self::Constant { .. } => 0.0,
            Self::Linear { m, .. } => m,
            Self::TanhBounded { scale, .. } => {
                let th = v.tanh();
                scale * (1.0 - th * th)
            }
            Self::BergomiF { eta, .. } => 0.5 * eta * self.value(v, t),
            Self::SqrtPlus { floor } => {
                if v > floor {
                    0.5 / v.sqrt()
                } else if v < floor {
                    0.0
                } else {
                    return Err(Error::DerivativeUnavailable { family: "sqrt_plus", v });
                }
            }
            Self::Exp => v.exp(),
            Self::Identity | Self::Shift { .. } => 1.0,
            Self::Softplus { k } => sigmoid(k * v),
        })
    }
}

/// Uniform evaluation surface over value and `v`-derivative.
pub fn eval_family(ff: &FunctionFamily, v: f64, t: f64, want: Want) -> Result<f64> {
    match want {
        Want::Value => Ok(ff.value(v, t)),
        Want::Dv => ff.dv(v, t),
    }
}

/// Full model specification; the JSON config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub sigma: FunctionFamily,
    pub f: FunctionFamily,
    pub psi: FunctionFamily,
    pub a: FunctionFamily,
    pub b: FunctionFamily,
    pub rho: f64,
    pub y0: f64,
    pub a0: f64,
    pub kernel: KernelSpec,
}

/// Named model presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    RoughBergomi,
    RoughHestonLike,
    BlackScholes,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::RoughBergomi, Preset::RoughHestonLike, Preset::BlackScholes];

    pub fn name(&self) -> &'static str {
        match self {
            Self::RoughBergomi => "rough_bergomi",
            Self::RoughHestonLike => "rough_heston_like",
            Self::BlackScholes => "black_scholes",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Spot variance of the rough Heston-like preset at `A₀ = 0`.
const HESTON_SPOT_VARIANCE: f64 = 0.04;

pub fn preset(p: Preset) -> ModelSpec {
    let h = 0.3;
    match p {
        Preset::RoughBergomi => ModelSpec {
            sigma: FunctionFamily::Constant { c: 1.0 },
            f: FunctionFamily::BergomiF { xi: 0.04, eta: 1.5, h },
            psi: FunctionFamily::Identity,
            a: FunctionFamily::Constant { c: 1.0 },
            b: FunctionFamily::Constant { c: 0.0 },
            rho: -0.7,
            y0: 0.0,
            a0: 0.0,
            kernel: KernelSpec::riemann_liouville(h),
        },
        // Ψ(0) = ln 2 / k places the spot variance at 0.04
        Preset::RoughHestonLike => ModelSpec {
            sigma: FunctionFamily::Constant { c: 1.0 },
            f: FunctionFamily::SqrtPlus { floor: 0.0 },
            psi: FunctionFamily::Softplus { k: std::f64::consts::LN_2 / HESTON_SPOT_VARIANCE },
            a: FunctionFamily::TanhBounded { scale: 0.05, center: 0.1 },
            b: FunctionFamily::Constant { c: 0.0 },
            rho: -0.5,
            y0: 0.0,
            a0: 0.0,
            kernel: KernelSpec::riemann_liouville(h),
        },
        Preset::BlackScholes => ModelSpec {
            sigma: FunctionFamily::Constant { c: 1.0 },
            f: FunctionFamily::Constant { c: 0.3 },
            psi: FunctionFamily::Identity,
            a: FunctionFamily::Constant { c: 1.0 },
            b: FunctionFamily::Constant { c: 0.0 },
            rho: 0.0,
            y0: 0.0,
            a0: 0.0,
            kernel: KernelSpec::riemann_liouville(h),
        },
    }
}

impl ModelSpec {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(preset(name.parse()?))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma.value(self.y0, 0.0)
    }

    /// `a(A₀)`.
    pub fn a_at_a0(&self) -> f64 {
        self.a.value(self.a0, 0.0)
    }

    /// `√(1 - ρ²)`.
    pub fn rho_bar(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }

    /// Spot volatility `σ(Y₀) f(Ψ(0), 0)`.
    pub fn spot_vol(&self) -> f64 {
        self.sigma0() * self.f.value(self.psi.value(0.0, 0.0), 0.0)
    }

    /// Diagnostics for the model's standing assumptions; empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.rho.abs() < 1.0) {
            out.push(format!("correlation degenerate: |rho| must be < 1, got {}", self.rho));
        }
        if !(self.y0.is_finite() && self.a0.is_finite()) {
            out.push("initial values y0, a0 must be finite".into());
        }
        out.extend(self.kernel.violations());
        if !self.sigma.is_bounded() {
            out.push(format!(
                "sigma must be bounded with bounded derivatives (constant or tanh_bounded), got {}",
                self.sigma.name()
            ));
        }
        for (role, ff) in [("a", &self.a), ("b", &self.b)] {
            if !(ff.is_bounded() || matches!(ff, FunctionFamily::Linear { .. })) {
                out.push(format!(
                    "{role} must be constant, tanh_bounded or linear, got {}",
                    ff.name()
                ));
            }
        }
        if !self.psi.is_psi() {
            out.push(format!("psi must be a transform family, got {}", self.psi.name()));
        }
        if self.f.is_psi() {
            out.push(format!("f cannot be the transform family {}", self.f.name()));
        } else if let Some((v, t, val)) = negative_probe(&self.f) {
            out.push(format!("f must be nonnegative: f({v}, {t}) = {val}"));
        }
        out
    }

    /// Diagnostics for short-time operations, which additionally need `μ < 0`.
    pub fn short_time_violations(&self) -> Vec<String> {
        let mut out = self.violations();
        let mu = self.kernel.mu();
        if !(mu < 0.0) {
            out.push(format!("mu must be negative for short-time asymptotics, got {mu}"));
        }
        out
    }

    /// Notes on admitted-but-nonstandard choices (linear `a` or `b`).
    pub fn deviations(&self) -> Vec<String> {
        [("a", &self.a), ("b", &self.b)]
            .iter()
            .filter(|(_, ff)| matches!(ff, FunctionFamily::Linear { .. }))
            .map(|(role, _)| format!("{role} is linear: unbounded coefficient admitted"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }

    pub fn validate_short_time(&self) -> Result<()> {
        let v = self.short_time_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }
}

/// First probe point where `f` is negative, over `v ∈ [-10, 10]`, `t ∈ [0, 1]`.
fn negative_probe(f: &FunctionFamily) -> Option<(f64, f64, f64)> {
    for i in 0..=80 {
        let v = -10.0 + 0.25 * i as f64;
        for j in 0..=10 {
            let t = 0.1 * j as f64;
            let val = f.value(v, t);
            if !(val >= 0.0) {
                return Some((v, t, val));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let c = FunctionFamily::Constant { c: 0.3 };
        assert_eq!(eval_family(&c, 7.0, 0.2, Want::Value).unwrap(), 0.3);
        let b = FunctionFamily::BergomiF { xi: 0.04, eta: 1.5, h: 0.3 };
        assert!((eval_family(&b, 0.0, 0.0, Want::Value).unwrap() - 0.2).abs() < 1e-15);
        let s = FunctionFamily::SqrtPlus { floor: 0.0 };
        assert!((eval_family(&s, 0.09, 0.0, Want::Value).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(
            eval_family(&s, 0.0, 0.0, Want::Dv),
            Err(Error::DerivativeUnavailable { .. })
        ));
        assert_eq!(eval_family(&s, -1.0, 0.0, Want::Dv).unwrap(), 0.0);
    }

    #[test]
    fn presets_validate() {
        for p in Preset::ALL {
            let m = preset(p);
            assert!(m.short_time_violations().is_empty(), "{}: {:?}", p.name(), m.violations());
            assert!(negative_probe(&m.f).is_none());
        }
        assert_eq!(preset(Preset::BlackScholes).f, FunctionFamily::Constant { c: 0.3 });
        assert!((preset(Preset::RoughBergomi).kernel.mu() - (0.3 - 0.5)).abs() < 1e-15);
        let heston = preset(Preset::RoughHestonLike);
        assert!((heston.f.value(0.04, 0.0) - 0.2).abs() < 1e-12);
        assert!((heston.spot_vol() - 0.2).abs() < 1e-12);
        assert!(ModelSpec::preset("nope").is_err());
    }

    #[test]
    fn validation_diagnostics() {
        let mut m = preset(Preset::RoughBergomi);
        m.rho = 1.0;
        assert!(m.violations().iter().any(|v| v.contains("correlation degenerate")));
        let mut m = preset(Preset::BlackScholes);
        m.kernel = KernelSpec::power_law(0.2, -2.0);
        assert!(m.violations().is_empty());
        assert!(m.short_time_violations().iter().any(|v| v.contains("mu must be negative")));
        let mut m = preset(Preset::BlackScholes);
        m.sigma = FunctionFamily::Linear { m: 1.0, c: 0.0 };
        assert!(m.validate().is_err());
        let mut m = preset(Preset::BlackScholes);
        m.f = FunctionFamily::Linear { m: 1.0, c: 0.0 };
        assert!(m.violations().iter().any(|v| v.contains("nonnegative")));
        let mut m = preset(Preset::BlackScholes);
        m.a = FunctionFamily::Linear { m: 0.1, c: 1.0 };
        assert!(m.validate().is_ok());
        assert_eq!(m.deviations().len(), 1);
    }

    #[test]
    fn json_schema_keys() {
        let text = r#"{"sigma":{"family":"constant","c":1.0}, "f":{"family":"bergomi_f","xi":0.04,"eta":1.5,"H":0.3}, "psi":{"family":"identity"}, "a":{"family":"constant","c":1.0}, "b":{"family":"constant","c":0.0}, "rho":-0.7, "y0":0.0, "a0":0.0, "kernel":{"family":"riemann_liouville","H":0.3}}"#;
        let m = ModelSpec::from_json_str(text).unwrap();
        assert_eq!(m, preset(Preset::RoughBergomi));
        let back = ModelSpec::from_json_str(&m.to_json_string().unwrap()).unwrap();
        assert_eq!(back, m);
        let heston = preset(Preset::RoughHestonLike);
        let back = ModelSpec::from_json_str(&heston.to_json_string().unwrap()).unwrap();
        assert_eq!(back, heston);
        let aliased: FunctionFamily = serde_json::from_str(r#"{"family":"softplus","k":2.0}"#).unwrap();
        assert_eq!(aliased, FunctionFamily::Softplus { k: 2.0 });
    }

    fn families() -> Vec<FunctionFamily> {
        vec![
            FunctionFamily::Constant { c: 0.7 },
            FunctionFamily::Linear { m: -0.4, c: 1.0 },
            FunctionFamily::TanhBounded { scale: 0.3, center: 1.0 },
            FunctionFamily::BergomiF { xi: 0.04, eta: 1.5, h: 0.3 },
            FunctionFamily::SqrtPlus { floor: 0.01 },
            FunctionFamily::Exp,
            FunctionFamily::Identity,
            FunctionFamily::Shift { c: 0.2 },
            FunctionFamily::Softplus { k: 17.0 },
        ]
    }

    proptest! {
        #[test]
        fn dv_matches_central_difference(v in -2.0f64..2.0, t in 0.0f64..1.0) {
            let h = 1e-6;
            for ff in families() {
                let Ok(d) = ff.dv(v, t) else { continue };
                if let FunctionFamily::SqrtPlus { floor } = ff {
                    if (v - floor).abs() < 1e-3 {
                        continue;
                    }
                }
                let fd = (ff.value(v + h, t) - ff.value(v - h, t)) / (2.0 * h);
                prop_assert!(
                    (d - fd).abs() <= 1e-6 * d.abs().max(1.0),
                    "{}: {} vs {}", ff.name(), d, fd
                );
            }
        }
    }
}
