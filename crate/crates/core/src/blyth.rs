//! Blyth sequences of proper priors and the Bayes-risk differences `Δ_i`.
//!
//! The proper priors reweight the mixing density by `h_i(g)²`:
//!
//! * moment kind: `h_i(g)² = i/(g+i)`, proper whenever `∫ π/(g+1) < ∞`;
//! * log kind: `h_i(g) = 1 - log L(g) / log L(i)` on `g < i`, zero beyond,
//!   where `log L(g)` is the closed form of `∫_0^g dt/((t+1)L(t))`.
//!
//! `Δ_i = ∫_{R^d} ‖δ_π - δ_i‖² m_i(‖x‖²) dx` is reduced to one radial
//! integral with `∫_{R^d} h(‖x‖²) dx = π^{d/2}/Γ(d/2) ∫_0^∞ w^{d/2-1} h(w) dw`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::classify::mixing_moment;
use crate::error::{Error, Result};
use crate::marginal::{kernel, MarginalEvaluator, Weight};
use crate::quad::{integrate_real_line, with_fallible, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlythKind {
    Moment,
    Log,
}

impl std::str::FromStr for BlythKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moment" => Ok(BlythKind::Moment),
            "log" => Ok(BlythKind::Log),
            other => Err(Error::Config(format!(
                "unknown Blyth kind {other:?} (expected moment or log)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlythSequence {
    pub kind: BlythKind,
    pub index: f64,
}

impl BlythSequence {
    pub fn new(kind: BlythKind, index: f64) -> Result<Self> {
        if !(index > 0.0 && index.is_finite()) {
            return Err(Error::Domain(format!(
                "Blyth index must be positive, got {index}"
            )));
        }
        Ok(Self { kind, index })
    }

    pub fn moment(index: f64) -> Result<Self> {
        Self::new(BlythKind::Moment, index)
    }

    pub fn log(index: f64) -> Result<Self> {
        Self::new(BlythKind::Log, index)
    }

    /// `h_i(g)`.
    pub fn h(&self, g: f64) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("h_i needs g >= 0, got {g}")));
        }
        Ok(match self.kind {
            BlythKind::Moment => (self.index / (g + self.index)).sqrt(),
            BlythKind::Log => self.log_h_of_s(g.ln_1p()),
        })
    }

    /// `sup_i |h_i'(g)| (g+1) L(g)` for the log kind, attained at `i → g⁺`
    /// when `g >= 1` and at `i = 1` below.
    pub fn log_kind_derivative_envelope(g: f64) -> f64 {
        let inner = |x: f64| (1.0 + x.ln_1p()).ln();
        1.0 / inner(g.max(1.0))
    }

    /// `|h_i'(g)| (g+1) L(g)` for the log kind.
    pub fn log_kind_scaled_derivative(&self, g: f64) -> f64 {
        if g >= self.index {
            0.0
        } else {
            1.0 / (1.0 + self.index.ln_1p()).ln()
        }
    }

    fn log_h_of_s(&self, s: f64) -> f64 {
        let end = self.index.ln_1p();
        if s >= end {
            0.0
        } else {
            1.0 - s.ln_1p() / end.ln_1p()
        }
    }

    /// `ln h_i²` as a function of `s = log(g+1)`.
    pub(crate) fn ln_h_sq(&self, s: f64) -> f64 {
        match self.kind {
            BlythKind::Moment => {
                let e = (-s).exp();
                self.index.ln() - s - (-(-s).exp_m1() + self.index * e).ln()
            }
            BlythKind::Log => {
                let h = self.log_h_of_s(s);
                if h <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    2.0 * h.ln()
                }
            }
        }
    }

    /// `ln h_i²` at distance `delta` below the end of the support.
    pub(crate) fn ln_h_sq_from_end(&self, delta: f64) -> f64 {
        match self.kind {
            BlythKind::Moment => self.ln_h_sq(self.transition_s() - delta),
            BlythKind::Log => {
                let end = self.index.ln_1p();
                let h = -(-delta / (1.0 + end)).ln_1p() / end.ln_1p();
                2.0 * h.ln()
            }
        }
    }

    /// `ln(1 - h_i²)` as a function of `s = log(g+1)`.
    pub(crate) fn ln_h_sq_complement(&self, s: f64) -> f64 {
        match self.kind {
            BlythKind::Moment => {
                let e = (-s).exp();
                let q = -(-s).exp_m1();
                q.ln() - (q + self.index * e).ln()
            }
            BlythKind::Log => {
                let end = self.index.ln_1p();
                if s >= end {
                    0.0
                } else {
                    let r = s.ln_1p() / end.ln_1p();
                    (r * (2.0 - r)).ln()
                }
            }
        }
    }

    /// Where `h_i` changes character, in `s = log(g+1)`.
    pub(crate) fn transition_s(&self) -> f64 {
        self.index.ln_1p()
    }

    /// Upper end of the support of `h_i²`, if bounded.
    pub(crate) fn support_end_s(&self) -> Option<f64> {
        match self.kind {
            BlythKind::Moment => None,
            BlythKind::Log => Some(self.index.ln_1p()),
        }
    }
}

pub fn h_eval(g: f64, s: &BlythSequence) -> Result<f64> {
    s.h(g)
}

fn check_proper(seq: &BlythSequence, ev: &MarginalEvaluator) -> Result<()> {
    let p = ev.params();
    match seq.kind {
        BlythKind::Moment => {
            if !mixing_moment(p, ev.quad())?.is_finite() {
                return Err(Error::ImproperPrior(format!(
                    "moment-kind Blyth priors need ∫π(g)/(g+1)dg < ∞, which fails for a={}, c={}",
                    p.a(),
                    p.c()
                )));
            }
        }
        BlythKind::Log => {
            // Compact support in g makes every h_i² π integrable; the
            // sequence is only meaningful in the slowly varying regime.
            if p.a() != 0.0 || p.b() < 0.0 || p.c().abs() > 1.0 {
                return Err(Error::ImproperPrior(format!(
                    "log-kind Blyth sequence is defined for a=0, b>=0, |c|<=1 (got a={}, b={}, c={})",
                    p.a(),
                    p.b(),
                    p.c()
                )));
            }
        }
    }
    Ok(())
}

/// Multiplier of `δ_i`: `1 - M_1^{(i)}(w)/M_0^{(i)}(w)` with `h_i²`-weighted marginals.
pub fn delta_i_multiplier(w: f64, seq: &BlythSequence, ev: &MarginalEvaluator) -> Result<f64> {
    let weight = Weight::Blyth(*seq);
    let num = ev.weighted_scaled(w, 1, &weight)?;
    let den = ev.weighted_scaled(w, 0, &weight)?;
    Ok(1.0 - num.ratio(&den))
}

/// Summary of a `Δ_i` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlythPoint {
    pub index: f64,
    pub delta: f64,
    pub error: f64,
    /// `4 d (2π)^{d/2} ∫π/(g+1) dg`, or `+∞` when that moment diverges.
    pub bound: f64,
}

/// `∫_{R^d} ‖x‖² e^{-‖x‖²/2} dx · 4 ∫π/(g+1) dg`, the dominating bound on `Δ_i`.
pub fn delta_upper_bound(ev: &MarginalEvaluator) -> Result<f64> {
    let d = f64::from(ev.params().d());
    let moment = mixing_moment(ev.params(), ev.quad())?;
    Ok(4.0 * d * (2.0 * PI).powf(d / 2.0) * moment)
}

/// `Δ_i` by a single radial quadrature in `x = log w`.
///
/// Where `h_i²` carries most of the mass, the gap `M_1/M_0 - M_1^{(i)}/M_0^{(i)}`
/// is assembled from the complementary weight `1 - h_i²`.
pub fn bayes_risk_difference(seq: &BlythSequence, ev: &MarginalEvaluator) -> Result<BlythPoint> {
    check_proper(seq, ev)?;
    let p = ev.params();
    let half = p.half_d();
    let area = PI.powf(half) / gamma(half);
    let keep = Weight::Blyth(*seq);
    let drop = Weight::BlythComplement(*seq);
    let inner = ev.quad().tightened(1e-2);
    let inner_ev = MarginalEvaluator::new(*p, inner)?;
    let integrand = |x: f64| -> Result<f64> {
        let w = x.exp();
        let m0 = inner_ev.weighted_scaled(w, 0, &Weight::Unit)?;
        let m1 = inner_ev.weighted_scaled(w, 1, &Weight::Unit)?;
        let i0 = inner_ev.weighted_scaled(w, 0, &keep)?;
        let mi = i0.get();
        if mi == 0.0 {
            return Ok(0.0);
        }
        let gap = if i0.ratio(&m0) < 0.5 {
            let i1 = inner_ev.weighted_scaled(w, 1, &keep)?;
            m1.ratio(&m0) - i1.ratio(&i0)
        } else {
            let d0 = inner_ev.weighted_scaled(w, 0, &drop)?;
            let d1 = inner_ev.weighted_scaled(w, 1, &drop)?;
            // r_π - r_i = (M0·D1 - M1·D0) / (M0 · M0^{(i)}), each factor kept
            // as mantissa times e^{ln_scale}.
            let first = m0.value * d1.value * (d1.ln_scale - i0.ln_scale).exp();
            let second =
                m1.value * d0.value * (m1.ln_scale + d0.ln_scale - m0.ln_scale - i0.ln_scale).exp();
            (first - second) / (m0.value * i0.value)
        };
        let out = area * w.powf(half + 1.0) * gap * gap * mi;
        Ok(out)
    };
    let center = f64::from(p.d()).ln();
    let est = with_fallible(integrand, |f| integrate_real_line(f, center, ev.quad()))?;
    let bound = delta_upper_bound(ev)?;
    Ok(BlythPoint {
        index: seq.index,
        delta: est.value,
        error: est.error,
        bound,
    })
}

/// Numerical and closed-form sides of
/// `∫_{R^d} F(‖x‖², g)/‖x‖² dx = C_d/(g+1)`, `C_d = π^{d/2} 2^{d/2}/(d-2)`.
pub fn gamma_identity(g: f64, d: u32, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    if d < 3 {
        return Err(Error::Domain(format!("d = {d} must be at least 3")));
    }
    if !(g >= 0.0) {
        return Err(Error::Domain(format!("g must be nonnegative, got {g}")));
    }
    let half = f64::from(d) / 2.0;
    let area = PI.powf(half) / gamma(half);
    // w = e^x: ∫ w^{d/2-2} F(w,g) dw = ∫ e^{x(d/2-1)} F(e^x, g) dx.
    let integrand = |x: f64| {
        let w = x.exp();
        ((half - 1.0) * x).exp() * kernel(w, g, d)
    };
    let center = (2.0 * (half - 1.0) * (g + 1.0)).ln();
    let lhs = area * integrate_real_line(integrand, center, cfg)?.value;
    let rhs = c_d(d) / (g + 1.0);
    Ok((lhs, rhs))
}

/// `C_d = π^{d/2} 2^{d/2}/(d-2)`.
pub fn c_d(d: u32) -> f64 {
    let half = f64::from(d) / 2.0;
    PI.powf(half) * 2f64.powf(half) / (f64::from(d) - 2.0)
}

/// `∫_{R^d} exp(-‖x‖²/α)/‖x‖² dx = 2π^{d/2} α^{d/2-1}/(d-2)`.
pub fn inverse_norm_gaussian_integral(alpha: f64, d: u32) -> f64 {
    let half = f64::from(d) / 2.0;
    2.0 * PI.powf(half) * alpha.powf(half - 1.0) / (f64::from(d) - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::MixingParams;

    #[test]
    fn h_examples() {
        let m = BlythSequence::moment(7.0).unwrap();
        assert!((m.h(7.0).unwrap().powi(2) - 0.5).abs() < 1e-15);
        let l = BlythSequence::log(50.0).unwrap();
        assert_eq!(l.h(0.0).unwrap(), 1.0);
        assert_eq!(l.h(50.0).unwrap(), 0.0);
        assert_eq!(l.h(80.0).unwrap(), 0.0);
        // L(g) = sqrt(L(i)) ⇒ h = 1/2.
        let li = 1.0 + 50f64.ln_1p();
        let g = li.sqrt() - 1.0;
        let g = g.exp() - 1.0;
        assert!((l.h(g).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn h_bounds_and_monotonicity() {
        for kind in [BlythKind::Moment, BlythKind::Log] {
            for g in [0.0, 0.3, 2.0, 40.0, 900.0] {
                let mut prev = -1.0;
                for i in [1.0, 10.0, 100.0, 1e4, 1e8] {
                    let h = BlythSequence::new(kind, i).unwrap().h(g).unwrap();
                    assert!((0.0..=1.0).contains(&h));
                    assert!(h >= prev, "{kind:?} g={g} i={i}");
                    prev = h;
                }
                if kind == BlythKind::Moment {
                    assert!(prev > 0.99, "g={g}: {prev}");
                }
            }
        }
    }

    #[test]
    fn ln_weights_match_direct_h() {
        for kind in [BlythKind::Moment, BlythKind::Log] {
            let seq = BlythSequence::new(kind, 30.0).unwrap();
            for g in [0.01f64, 1.0, 12.0, 29.0] {
                let s: f64 = g.ln_1p();
                let h = seq.h(g).unwrap();
                assert!((seq.ln_h_sq(s).exp() - h * h).abs() < 1e-13);
                assert!((seq.ln_h_sq_complement(s).exp() - (1.0 - h * h)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn log_kind_derivative_envelope() {
        // sup over i of the scaled derivative, scanning i on a fine grid.
        for g in [0.5, 1.0, 10.0] {
            let mut sup: f64 = 0.0;
            let mut i = 1.0;
            while i < 1e6 {
                let seq = BlythSequence::log(i).unwrap();
                sup = sup.max(seq.log_kind_scaled_derivative(g));
                i *= 1.0005;
            }
            let env = BlythSequence::log_kind_derivative_envelope(g);
            assert!((sup / env - 1.0).abs() < 1e-3, "g={g}: {sup} vs {env}");
        }
    }

    #[test]
    fn gamma_identity_examples() {
        let cfg = QuadratureConfig::default();
        let (_, rhs) = gamma_identity(1.0, 4, &cfg).unwrap();
        assert!((rhs - PI * PI).abs() < 1e-12);
        let (_, rhs) = gamma_identity(0.0, 4, &cfg).unwrap();
        assert!((rhs - 2.0 * PI * PI).abs() < 1e-12);
        assert!((inverse_norm_gaussian_integral(2.0, 4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn gamma_identity_quadrature() {
        let cfg = QuadratureConfig::default();
        for d in 3..=8 {
            for g in [0.0, 1.0, 10.0] {
                let (lhs, rhs) = gamma_identity(g, d, &cfg).unwrap();
                assert!((lhs / rhs - 1.0).abs() < 1e-8, "d={d} g={g}");
            }
        }
    }

    #[test]
    fn improper_moment_kind_is_refused() {
        let ev = MarginalEvaluator::with_defaults(MixingParams::stein(4).unwrap());
        let seq = BlythSequence::moment(10.0).unwrap();
        assert!(matches!(
            bayes_risk_difference(&seq, &ev),
            Err(Error::ImproperPrior(_))
        ));
        let ev = MarginalEvaluator::with_defaults(MixingParams::new(4, -0.5, 0.0, 0.0).unwrap());
        let seq = BlythSequence::log(10.0).unwrap();
        assert!(matches!(
            bayes_risk_difference(&seq, &ev),
            Err(Error::ImproperPrior(_))
        ));
    }

    #[test]
    fn delta_i_approaches_generalized_bayes() {
        let p = MixingParams::new(4, -2.0, 0.0, 0.0).unwrap();
        let ev = MarginalEvaluator::with_defaults(p);
        for w in [0.0, 1.0, 20.0] {
            let gb =
                1.0 - ev.weighted_marginal(w, 1).unwrap() / ev.weighted_marginal(w, 0).unwrap();
            let far = delta_i_multiplier(w, &BlythSequence::moment(1e9).unwrap(), &ev).unwrap();
            assert!((far - gb).abs() < 1e-7, "w={w}: {far} vs {gb}");
        }
    }
}
