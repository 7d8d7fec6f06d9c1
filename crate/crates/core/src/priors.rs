//! The mixing density family `π(g; a, b, c)` on the normal-prior scale `g`.
//!
//! ```text
//! π(g) = (g+1)^a · (g/(g+1))^b · L(g)^c,   L(g) = log(g+1) + 1
//! ```
//!
//! The marginal of `X` is finite for every `x` exactly when `a < d/2 - 1`
//! and `b > -1`; parameters are validated against that region once, at
//! construction, and every downstream integral relies on it.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{integrate_real_line, QuadratureConfig};

/// Dimension plus the `(a, b, c)` exponents of the mixing density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingParams {
    d: u32,
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Deserialize)]
struct RawParams {
    d: u32,
    a: f64,
    b: f64,
    c: f64,
}

impl<'de> Deserialize<'de> for MixingParams {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(de)?;
        MixingParams::new(raw.d, raw.a, raw.b, raw.c).map_err(serde::de::Error::custom)
    }
}

impl MixingParams {
    pub fn new(d: u32, a: f64, b: f64, c: f64) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidParams(format!(
                "dimension d = {d} must be at least 3"
            )));
        }
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "exponents must be finite (a={a}, b={b}, c={c})"
            )));
        }
        let half = f64::from(d) / 2.0;
        if a >= half - 1.0 {
            return Err(Error::InvalidParams(format!(
                "a = {a} must be below d/2 - 1 = {}",
                half - 1.0
            )));
        }
        if b <= -1.0 {
            return Err(Error::InvalidParams(format!("b = {b} must exceed -1")));
        }
        Ok(Self { d, a, b, c })
    }

    /// Stein's prior `‖μ‖^{2-d}`: `a = b = c = 0`.
    pub fn stein(d: u32) -> Result<Self> {
        Self::new(d, 0.0, 0.0, 0.0)
    }

    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn half_d(&self) -> f64 {
        f64::from(self.d) / 2.0
    }

    /// `π(g; a, b, c)`. Uses `0^0 = 1`, so `π(0) = 1` when `b = 0`.
    pub fn density(&self, g: f64) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!(
                "mixing density needs g >= 0, got {g}"
            )));
        }
        let edge = if self.b == 0.0 {
            1.0
        } else {
            (g / (g + 1.0)).powf(self.b)
        };
        Ok((g + 1.0).powf(self.a) * edge * log_weight(g).powf(self.c))
    }

    /// `(g+1) π'(g)/π(g) = a + b/g + c/L(g)`.
    pub fn log_slope(&self, g: f64) -> Result<f64> {
        if !(g > 0.0) {
            return Err(Error::Domain(format!("log slope needs g > 0, got {g}")));
        }
        Ok(self.a + self.b / g + self.c / log_weight(g))
    }

    /// Limit of `t^{d/2-1} m_π(t) / π(t)` as `t → ∞`: `Γ(d/2-1-a) 2^{d/2-1-a}`.
    pub fn tauberian_limit(&self) -> f64 {
        let nu = self.half_d() - 1.0 - self.a;
        gamma(nu) * 2f64.powf(nu)
    }
}

/// `L(g) = log(g+1) + 1`.
pub fn log_weight(g: f64) -> f64 {
    g.ln_1p() + 1.0
}

pub fn mixing_density(g: f64, p: &MixingParams) -> Result<f64> {
    p.density(g)
}

pub fn log_slope(g: f64, p: &MixingParams) -> Result<f64> {
    p.log_slope(g)
}

/// Numerical and closed-form sides of
/// `∫_0^∞ g^{-d/2} exp(-‖μ‖²/(2g)) dg = Γ(d/2-1) 2^{d/2-1} ‖μ‖^{2-d}`,
/// the identity that makes `a = b = c = 0` Stein's prior.
pub fn stein_prior_check(mu_norm_sq: f64, d: u32, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    if d < 3 {
        return Err(Error::Domain(format!("d = {d} must be at least 3")));
    }
    if !(mu_norm_sq > 0.0 && mu_norm_sq.is_finite()) {
        return Err(Error::Domain(format!(
            "‖μ‖² must be positive, got {mu_norm_sq}"
        )));
    }
    let half = f64::from(d) / 2.0;
    // g = e^x; the integrand peaks where e^{-x} = (d-2)/‖μ‖².
    let integrand = |x: f64| ((1.0 - half) * x - 0.5 * mu_norm_sq * (-x).exp()).exp();
    let center = (mu_norm_sq / (2.0 * half - 2.0)).ln();
    let lhs = integrate_real_line(integrand, center, cfg)?.value;
    let rhs = gamma(half - 1.0) * 2f64.powf(half - 1.0) * mu_norm_sq.powf(1.0 - half);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn p(d: u32, a: f64, b: f64, c: f64) -> MixingParams {
        MixingParams::new(d, a, b, c).unwrap()
    }

    #[test]
    fn density_examples() {
        assert_eq!(p(5, -3.0, 0.0, 7.0).density(0.0).unwrap(), 1.0);
        let v = p(5, 0.0, 0.0, 1.0).density(1.0).unwrap();
        assert!((v - (2f64.ln() + 1.0)).abs() < 1e-15);
        assert!((v - 1.693147).abs() < 1e-6);
        let v = p(5, 1.0, 0.0, 2.0).density(E - 1.0).unwrap();
        assert!((v - 4.0 * E).abs() < 1e-12);
        assert!((v - 10.87313).abs() < 1e-5);
    }

    #[test]
    fn density_at_zero_follows_edge_exponent() {
        assert_eq!(p(5, 0.0, 0.5, 0.0).density(0.0).unwrap(), 0.0);
        assert!(p(5, 0.0, -0.5, 0.0).density(0.0).unwrap().is_infinite());
    }

    #[test]
    fn negative_g_is_a_domain_error() {
        assert!(matches!(
            p(4, 0.0, 0.0, 0.0).density(-1e-3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            p(4, 0.0, 0.0, 0.0).log_slope(0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn log_slope_examples() {
        assert_eq!(p(5, 0.0, 1.0, 0.0).log_slope(1.0).unwrap(), 1.0);
        for g in [0.1, 3.0, 1e5] {
            assert_eq!(p(7, 2.0, 0.0, 0.0).log_slope(g).unwrap(), 2.0);
        }
        let v = p(5, 0.0, 0.0, 1.0).log_slope(E - 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validity_region_is_enforced() {
        assert!(MixingParams::new(2, 0.0, 0.0, 0.0).is_err());
        assert!(MixingParams::new(6, 2.0, 0.0, 0.0).is_err());
        assert!(MixingParams::new(6, 1.999, 0.0, 0.0).is_ok());
        assert!(MixingParams::new(6, 0.0, -1.0, 0.0).is_err());
        assert!(MixingParams::new(6, 0.0, -0.999, -40.0).is_ok());
        assert!(MixingParams::new(6, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok: MixingParams = serde_json::from_str(r#"{"d":5,"a":0.5,"b":0,"c":0}"#).unwrap();
        assert_eq!(ok.a(), 0.5);
        assert!(serde_json::from_str::<MixingParams>(r#"{"d":5,"a":2,"b":0,"c":0}"#).is_err());
    }

    #[test]
    fn stein_prior_closed_forms() {
        let cfg = QuadratureConfig::default();
        let (_, rhs) = stein_prior_check(1.0, 4, &cfg).unwrap();
        assert!((rhs - 2.0).abs() < 1e-14);
        let (_, rhs) = stein_prior_check(4.0, 6, &cfg).unwrap();
        assert!((rhs - 0.25).abs() < 1e-15);
    }

    #[test]
    fn stein_prior_quadrature_matches() {
        let cfg = QuadratureConfig::default();
        for d in 3..=10 {
            for r in [0.01, 1.0, 37.0] {
                let (lhs, rhs) = stein_prior_check(r, d, &cfg).unwrap();
                assert!(
                    (lhs / rhs - 1.0).abs() < 1e-8,
                    "d={d} r={r}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn tauberian_limit_values() {
        assert!((p(6, 0.0, 0.0, 0.0).tauberian_limit() - 4.0).abs() < 1e-12);
        assert!((p(6, 1.0, 0.0, 0.0).tauberian_limit() - 2.0).abs() < 1e-12);
        assert!((p(8, -1.0, 0.0, 0.0).tauberian_limit() - 96.0).abs() < 1e-10);
    }
}
