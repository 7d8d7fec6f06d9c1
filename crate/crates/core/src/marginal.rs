//! Weighted marginals of the scale-mixture prior.
//!
//! ```text
//! M_k(w) = ∫_0^∞ (g+1)^{-d/2-k} exp(-w/(2(g+1))) π(g; a,b,c) ω(g) dg
//! ```
//!
//! `M_0 = m_π`, `m_π' = -M_1/2` and `m_π'' = M_2/4`. Integrals are taken in
//! `s = log(g+1)`, where the integrand is
//!
//! ```text
//! e^{-λs} (1-e^{-s})^β (1+s)^γ exp(-w e^{-s}/2) ω,   λ = d/2 + k - a - 1
//! ```
//!
//! so `β > -1` controls the edge at `g = 0` and `λ > 0` the decay at
//! infinity. Large `w` only moves the peak to `s ≈ log(w/2λ)`; the value is
//! carried as a mantissa and a log-scale so it never underflows.

use serde::Serialize;

use crate::blyth::BlythSequence;
use crate::error::{Error, Result};
use crate::priors::MixingParams;
use crate::quad::{integrate, QuadratureConfig};

/// `F(w, g) = (g+1)^{-d/2} exp(-w/(2(g+1)))`.
pub fn kernel(w: f64, g: f64, d: u32) -> f64 {
    let gp1 = g + 1.0;
    gp1.powf(-f64::from(d) / 2.0) * (-w / (2.0 * gp1)).exp()
}

/// Extra factor `ω(g)` applied to the mixing density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Weight {
    Unit,
    /// `1/g`; integrable at zero only when `b > 0`.
    InverseG,
    /// `1/L(g)`.
    InverseLog,
    /// `h_i(g)²`.
    Blyth(BlythSequence),
    /// `1 - h_i(g)²`.
    BlythComplement(BlythSequence),
}

/// Positive value stored as `value · e^{ln_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub value: f64,
    pub ln_scale: f64,
}

impl Scaled {
    pub fn get(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * self.ln_scale.exp()
        }
    }

    pub fn ln(&self) -> f64 {
        self.value.ln() + self.ln_scale
    }

    /// Sum of two scaled values, kept on the larger scale.
    pub fn add(&self, other: &Scaled) -> Scaled {
        if other.value == 0.0 {
            return *self;
        }
        if self.value == 0.0 {
            return *other;
        }
        let ln_scale = self.ln_scale.max(other.ln_scale);
        Scaled {
            value: self.value * (self.ln_scale - ln_scale).exp()
                + other.value * (other.ln_scale - ln_scale).exp(),
            ln_scale,
        }
    }

    /// `self / other` without forming either value.
    pub fn ratio(&self, other: &Scaled) -> f64 {
        self.value / other.value * (self.ln_scale - other.ln_scale).exp()
    }
}

/// `∫ e^{-λs} (1-e^{-s})^β (1+s)^γ exp(-w e^{-s}/2) ω(s) ds` over `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogScaleIntegrand<'a> {
    pub rate: f64,
    pub edge_exp: f64,
    pub log_exp: f64,
    pub w: f64,
    pub weight: &'a Weight,
}

impl LogScaleIntegrand<'_> {
    fn ln_weight(&self, s: f64) -> f64 {
        match self.weight {
            Weight::Blyth(seq) => seq.ln_h_sq(s),
            Weight::BlythComplement(seq) => seq.ln_h_sq_complement(s),
            _ => 0.0,
        }
    }

    fn ln_unweighted_body(&self, s: f64) -> f64 {
        let mut v = -self.rate * s - 0.5 * self.w * (-s).exp();
        if self.log_exp != 0.0 {
            v += self.log_exp * s.ln_1p();
        }
        v
    }

    /// Log of everything except the `(1-e^{-s})^β` edge factor.
    fn ln_body(&self, s: f64) -> f64 {
        self.ln_unweighted_body(s) + self.ln_weight(s)
    }

    fn ln_edge(&self, s: f64) -> f64 {
        if self.edge_exp != 0.0 {
            self.edge_exp * (-(-s).exp_m1()).ln()
        } else {
            0.0
        }
    }

    fn ln_value(&self, s: f64) -> f64 {
        self.ln_body(s) + self.ln_edge(s)
    }

    fn support_end(&self) -> Option<f64> {
        match self.weight {
            Weight::Blyth(seq) => seq.support_end_s(),
            _ => None,
        }
    }

    fn transition(&self) -> Option<f64> {
        match self.weight {
            Weight::Blyth(seq) | Weight::BlythComplement(seq) => Some(seq.transition_s()),
            _ => None,
        }
    }

    /// Integrates over `[lo, hi]` (`hi = None` for `+∞`).
    pub fn integrate(&self, lo: f64, hi: Option<f64>, cfg: &QuadratureConfig) -> Result<Scaled> {
        let mut upper = hi;
        if let Some(end) = self.support_end() {
            upper = Some(upper.map_or(end, |h| h.min(end)));
        }
        if let Some(u) = upper {
            if u <= lo {
                return Ok(Scaled {
                    value: 0.0,
                    ln_scale: 0.0,
                });
            }
        }
        if lo == 0.0 && self.edge_exp <= -1.0 {
            return Err(Error::Divergent(format!(
                "integrand behaves like g^{} at g = 0",
                self.edge_exp
            )));
        }
        if upper.is_none() && !(self.rate > 0.0 || (self.rate == 0.0 && self.log_exp < -1.0)) {
            return Err(Error::Divergent(format!(
                "integrand decays like (g+1)^{}·L(g)^{} at infinity",
                -self.rate - 1.0,
                self.log_exp
            )));
        }

        let mut layer = None;
        if let (Some(end), Some(u)) = (self.support_end(), upper) {
            let k = 0.5 * self.w * (-u).exp() - self.rate;
            if end == u && k > 1.0 {
                let width = (64.0 / k).max(64.0 * f64::EPSILON * u).min(0.5 * (u - lo));
                layer = Some(self.end_layer(u, k, width, cfg)?);
                upper = Some(u - width);
            }
        }
        let body = self.integrate_body(lo, upper, cfg)?;
        Ok(match layer {
            Some(l) => l.add(&body),
            None => body,
        })
    }

    /// Integral over `[u - width, u]` when the integrand climbs steeply
    /// (rate `k`) into a weight that vanishes at the support end `u`.
    fn end_layer(&self, u: f64, k: f64, width: f64, cfg: &QuadratureConfig) -> Result<Scaled> {
        let Weight::Blyth(seq) = self.weight else {
            unreachable!("only Blyth weights have a support end")
        };
        let decay = 0.5 * self.w * (-u).exp();
        let edge_u = self.ln_edge(u);
        let rel = |tau: f64| {
            let delta = tau / k;
            let mut v = self.rate * delta - decay * delta.exp_m1() + seq.ln_h_sq_from_end(delta);
            if self.log_exp != 0.0 {
                v += self.log_exp * (-delta / (1.0 + u)).ln_1p();
            }
            v + self.ln_edge(u - delta) - edge_u
        };
        let span = k * width;
        let mut layer_offset = f64::NEG_INFINITY;
        for tau in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, span] {
            let v = rel(tau.min(span));
            if v.is_finite() {
                layer_offset = layer_offset.max(v);
            }
        }
        if layer_offset == f64::NEG_INFINITY {
            return Ok(Scaled {
                value: 0.0,
                ln_scale: 0.0,
            });
        }
        let mut points = vec![0.0];
        points.extend(
            [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
                .into_iter()
                .filter(|&t| t < span),
        );
        points.push(span);
        let est = integrate(|tau: f64| (rel(tau) - layer_offset).exp(), &points, cfg)?;
        Ok(Scaled {
            value: est.value,
            ln_scale: self.ln_unweighted_body(u) + edge_u - k.ln() + layer_offset,
        })
    }

    fn integrate_body(
        &self,
        lo: f64,
        upper: Option<f64>,
        cfg: &QuadratureConfig,
    ) -> Result<Scaled> {
        let mut points = vec![lo];
        let push = |x: f64, pts: &mut Vec<f64>| {
            if x > lo && upper.is_none_or(|u| x < u) {
                pts.push(x);
            }
        };
        let peak = if self.rate > 0.0 && self.w > 2.0 * self.rate {
            Some((self.w / (2.0 * self.rate)).ln())
        } else {
            None
        };
        let width = if self.rate > 0.0 {
            (1.0 / self.rate.sqrt()).clamp(1.0, 64.0)
        } else {
            1.0
        };
        let mut reach = 8.0_f64.max(lo + 1.0);
        if let Some(pk) = peak {
            for j in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
                push(pk + j * width, &mut points);
            }
            reach = reach.max(pk + 8.0 * width);
        }
        if let Some(t) = self.transition() {
            push(t, &mut points);
            reach = reach.max(t + 8.0);
        }
        let mut x = 0.5;
        while x < reach {
            push(x, &mut points);
            x *= 2.0;
        }
        let first_end = match upper {
            Some(u) => u,
            None => x,
        };
        push(first_end, &mut points);
        points.push(first_end);
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.len() < 2 {
            return Ok(Scaled {
                value: 0.0,
                ln_scale: 0.0,
            });
        }

        // Normalise by the largest sampled log-value so the tolerances act
        // relative to the integrand's own scale.
        let mut offset = f64::NEG_INFINITY;
        for win in points.windows(2) {
            for t in [0.0, 0.02, 0.25, 0.5, 0.75, 0.98, 1.0] {
                let v = self.ln_value(win[0] + t * (win[1] - win[0]));
                if v.is_finite() && v > offset {
                    offset = v;
                }
            }
        }
        if offset == f64::NEG_INFINITY {
            return Ok(Scaled {
                value: 0.0,
                ln_scale: 0.0,
            });
        }

        let mut total = 0.0;
        let mut error = 0.0;
        let mut start = 0;
        // Algebraic edge singularity: s = s1·r^{1/(1+β)} on the first panel.
        if lo == 0.0 && self.edge_exp < 0.0 {
            let s1 = points[1];
            let beta = self.edge_exp;
            let gamma = 1.0 / (1.0 + beta);
            let ln_jac = (1.0 + beta) * s1.ln() + gamma.ln();
            let f = |r: f64| {
                let s = s1 * r.powf(gamma);
                let ratio = if s < 1e-8 {
                    1.0 - 0.5 * s
                } else {
                    -(-s).exp_m1() / s
                };
                (self.ln_body(s) + beta * ratio.ln() + ln_jac - offset).exp()
            };
            let est = integrate(f, &[0.0, 1.0], cfg)?;
            total += est.value;
            error += est.error;
            start = 1;
        }
        let f = |s: f64| (self.ln_value(s) - offset).exp();
        let est = integrate(f, &points[start..], cfg)?;
        total += est.value;
        error += est.error;

        if upper.is_none() {
            let mut edge = *points.last().unwrap();
            loop {
                let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
                let decay = self.rate - self.log_exp / (1.0 + edge);
                let head = (self.ln_value(edge) - offset).exp();
                if self.rate == 0.0 {
                    // Algebraic decay: the remaining factors are 1 to within
                    // e^{-edge}, so close the tail analytically.
                    if edge > 40.0 + self.w.max(1.0).ln() {
                        let p = self.log_exp + 1.0;
                        let tail = (p * edge.ln_1p() - offset).exp() / -p;
                        total += tail;
                        break;
                    }
                } else if decay > 0.5 * self.rate && head / decay <= 0.01 * tol {
                    break;
                }
                if edge > 1e7 {
                    return Err(Error::Quadrature {
                        reason: "integrand tail does not decay within s < 1e7".into(),
                        estimate: total * offset.exp(),
                        error: error * offset.exp(),
                    });
                }
                let panel_cfg = QuadratureConfig {
                    abs_tol: 0.1 * tol,
                    ..*cfg
                };
                let est = integrate(f, &[edge, 2.0 * edge], &panel_cfg)?;
                total += est.value;
                error += est.error;
                edge *= 2.0;
            }
        }
        Ok(Scaled {
            value: total,
            ln_scale: offset,
        })
    }
}

/// Quadrature-backed evaluator of `M_k(w)` and its weighted variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalEvaluator {
    params: MixingParams,
    quad: QuadratureConfig,
}

impl MarginalEvaluator {
    pub fn new(params: MixingParams, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        Ok(Self { params, quad })
    }

    pub fn with_defaults(params: MixingParams) -> Self {
        Self {
            params,
            quad: QuadratureConfig::default(),
        }
    }

    pub fn params(&self) -> &MixingParams {
        &self.params
    }

    pub fn quad(&self) -> &QuadratureConfig {
        &self.quad
    }

    fn check_w(w: f64) -> Result<()> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!(
                "w must be a finite nonnegative value, got {w}"
            )));
        }
        Ok(())
    }

    /// `M_k(w)` with weight `ω`, as a mantissa/log-scale pair.
    pub fn weighted_scaled(&self, w: f64, k: u32, weight: &Weight) -> Result<Scaled> {
        Self::check_w(w)?;
        let p = &self.params;
        let mut rate = p.half_d() + f64::from(k) - p.a() - 1.0;
        let mut edge_exp = p.b();
        let mut log_exp = p.c();
        match weight {
            Weight::InverseG => {
                if p.b() <= 0.0 {
                    return Err(Error::Divergent(format!(
                        "weight 1/g is not integrable at g = 0 when b = {} <= 0",
                        p.b()
                    )));
                }
                rate += 1.0;
                edge_exp -= 1.0;
            }
            Weight::InverseLog => log_exp -= 1.0,
            _ => {}
        }
        LogScaleIntegrand {
            rate,
            edge_exp,
            log_exp,
            w,
            weight,
        }
        .integrate(0.0, None, &self.quad)
    }

    /// `M_k(w)`; `M_0` is the marginal `m_π(w)`.
    pub fn weighted_marginal(&self, w: f64, k: u32) -> Result<f64> {
        Ok(self.weighted_scaled(w, k, &Weight::Unit)?.get())
    }

    pub fn general_weighted_marginal(&self, w: f64, k: u32, weight: &Weight) -> Result<f64> {
        Ok(self.weighted_scaled(w, k, weight)?.get())
    }

    pub fn marginal(&self, w: f64) -> Result<f64> {
        self.weighted_marginal(w, 0)
    }

    /// `m_π'(w) = -M_1(w)/2`.
    pub fn marginal_slope(&self, w: f64) -> Result<f64> {
        Ok(-0.5 * self.weighted_marginal(w, 1)?)
    }

    /// `m_π''(w) = M_2(w)/4`.
    pub fn marginal_curvature(&self, w: f64) -> Result<f64> {
        Ok(0.25 * self.weighted_marginal(w, 2)?)
    }

    /// `M_j(w)/M_k(w)`.
    pub fn ratio(&self, w: f64, num: u32, den: u32) -> Result<f64> {
        let n = self.weighted_scaled(w, num, &Weight::Unit)?;
        let d = self.weighted_scaled(w, den, &Weight::Unit)?;
        Ok(n.ratio(&d))
    }

    /// `t^{d/2-1} m_π(t) / π(t)`.
    pub fn tauberian_ratio(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let m = self.weighted_scaled(t, 0, &Weight::Unit)?;
        let ln_pi = self.params.density(t)?.ln();
        Ok((m.ln() + (self.params.half_d() - 1.0) * t.ln() - ln_pi).exp())
    }

    pub fn tauberian_limit(&self) -> f64 {
        self.params.tauberian_limit()
    }
}

pub fn kernel_f(w: f64, g: f64, d: u32) -> Result<f64> {
    if !(w >= 0.0) || !(g >= 0.0) {
        return Err(Error::Domain(format!(
            "kernel needs w, g >= 0 (w={w}, g={g})"
        )));
    }
    Ok(kernel(w, g, d))
}

pub fn weighted_marginal(w: f64, k: u32, ev: &MarginalEvaluator) -> Result<f64> {
    ev.weighted_marginal(w, k)
}

pub fn general_weighted_marginal(w: f64, weight: &Weight, ev: &MarginalEvaluator) -> Result<f64> {
    ev.general_weighted_marginal(w, 0, weight)
}

pub fn tauberian_ratio(t: f64, ev: &MarginalEvaluator) -> Result<f64> {
    ev.tauberian_ratio(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn ev(d: u32, a: f64, b: f64, c: f64) -> MarginalEvaluator {
        MarginalEvaluator::with_defaults(MixingParams::new(d, a, b, c).unwrap())
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_f(0.0, 0.0, 7).unwrap(), 1.0);
        let v = kernel_f(2.0, 1.0, 4).unwrap();
        assert!((v - 0.25 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.151633).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for w in [0.0, 1.0, 10.0, 100.0, 1e3] {
            let v = kernel(w, 3.0, 5);
            assert!(v < prev);
            prev = v;
        }
        assert!(kernel_f(-1.0, 0.0, 3).is_err());
    }

    #[test]
    fn pure_power_closed_forms_at_zero() {
        let v = ev(4, -2.0, 0.0, 0.0).weighted_marginal(0.0, 0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-13);
        let v = ev(6, 0.0, 0.0, 0.0).weighted_marginal(0.0, 1).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn inverse_log_weight_cancels_log_factor() {
        let v = ev(4, 0.0, 0.0, 1.0)
            .general_weighted_marginal(0.0, 0, &Weight::InverseLog)
            .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_g_needs_positive_b() {
        let err = ev(4, 0.0, 0.0, 0.0)
            .general_weighted_marginal(1.0, 0, &Weight::InverseG)
            .unwrap_err();
        assert!(matches!(err, Error::Divergent(_)));
        // b = 2, a = 0, d = 4, w = 0: ∫ g (g+1)^{-4} dg = 1/6.
        let v = ev(4, 0.0, 2.0, 0.0)
            .general_weighted_marginal(0.0, 0, &Weight::InverseG)
            .unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn closed_form_for_linear_mixing_density() {
        // d = 6, π = g + 1: m(w) = (2/w)(1 - e^{-w/2}).
        let e = ev(6, 1.0, 0.0, 0.0);
        for w in [1e-3, 0.5, 3.0, 40.0, 1e4, 1e8] {
            let exact = 2.0 / w * (-(-w / 2.0f64).exp_m1());
            let v = e.marginal(w).unwrap();
            assert!((v / exact - 1.0).abs() < 1e-10, "w={w}: {v} vs {exact}");
        }
    }

    #[test]
    fn singular_edge_is_integrated() {
        // b = -0.9: ∫ (g+1)^{-2} (g/(g+1))^{-0.9} dg with d = 4, a = 0
        // = ∫_0^1 u^{-0.9} du = 10.
        let v = ev(4, 0.0, -0.9, 0.0).weighted_marginal(0.0, 0).unwrap();
        assert!((v - 10.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn slow_decay_near_upper_limit_of_a() {
        // d = 3, a = 0.49: ∫ (g+1)^{-1.01} dg = 100.
        let v = ev(3, 0.49, 0.0, 0.0).weighted_marginal(0.0, 0).unwrap();
        assert!((v / 100.0 - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn derivative_identity_by_finite_difference() {
        let e = ev(5, 0.3, 0.5, -0.7);
        for w in [1.0, 10.0, 100.0] {
            let central =
                |h: f64| (e.marginal(w + h).unwrap() - e.marginal(w - h).unwrap()) / (2.0 * h);
            let h = 1e-2 * f64::max(w, 1.0);
            let fd = (4.0 * central(h / 2.0) - central(h)) / 3.0;
            let exact = e.marginal_slope(w).unwrap();
            assert!((fd / exact - 1.0).abs() < 1e-6, "w={w}: {fd} vs {exact}");
        }
    }

    #[test]
    fn tauberian_ratio_uses_density() {
        let e = ev(6, 0.0, 0.0, 0.0);
        let r = e.tauberian_ratio(1e6).unwrap();
        assert!((r / 4.0 - 1.0).abs() < 0.02);
        assert!(e.tauberian_ratio(0.0).is_err());
    }

    #[test]
    fn log_factor_matches_at_e() {
        // π(e-1) for c = 1 equals 2; sanity of the s-variable weighting.
        let p = MixingParams::new(5, 0.0, 0.0, 1.0).unwrap();
        assert!((p.density(E - 1.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn compact_support_survives_huge_w() {
        let e = ev(5, 0.0, 0.0, 0.0);
        let seq = BlythSequence::log(10.0).unwrap();
        for w in [1e3, 1e6, 1e12, 1e19] {
            let m0 = e.weighted_scaled(w, 0, &Weight::Blyth(seq)).unwrap();
            let m1 = e.weighted_scaled(w, 1, &Weight::Blyth(seq)).unwrap();
            assert!(m0.value > 0.0 && m0.ln().is_finite());
            // The log-scale itself is of order w, so its rounding bounds the ratio accuracy.
            let tol = 1e-9 + 8.0 * f64::EPSILON * m0.ln_scale.abs();
            if w < 1e15 {
                let r = m1.ratio(&m0);
                assert!(r * 11.0 > 1.0 - tol && r < 0.2, "w={w}: {r}");
            }
        }
    }
}
