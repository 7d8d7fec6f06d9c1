//! Admissibility and minimaxity of the generalized Bayes estimator under
//! `π(g; a, b, c)`.
//!
//! The decision is closed form. [`integrability_tail`] also evaluates the
//! Brown integral `∫_1^T dg/(g π(g))` numerically as an advisory cross-check.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginal::{LogScaleIntegrand, Weight};
use crate::priors::MixingParams;
use crate::quad::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Admissibility {
    Inadmissible,
    Admissible,
    AdmissibleBoundary,
    /// Admissible by Brown's integral criterion, outside the reach of the
    /// Blyth sequences implemented here (`-1 < b < 0`).
    AdmissibleBrownOnly,
}

impl fmt::Display for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Admissibility::Inadmissible => "Inadmissible",
            Admissibility::Admissible => "Admissible",
            Admissibility::AdmissibleBoundary => "AdmissibleBoundary",
            Admissibility::AdmissibleBrownOnly => "AdmissibleBrownOnly",
        };
        f.write_str(s)
    }
}

/// Tag naming the criterion that decided a [`Verdict`].
pub mod rule {
    /// `∫_1^∞ dg/(g π) < ∞`: a dominating estimator exists.
    pub const BROWN_INTEGRAL_FINITE: &str = "brown-integral-finite";
    /// `∫ π/(g+1) dg < ∞`: the moment Blyth sequence applies.
    pub const MIXING_MOMENT_FINITE: &str = "mixing-moment-finite";
    /// `a = 0, b ≥ 0, |c| ≤ 1`: the log Blyth sequence applies.
    pub const SLOWLY_VARYING_BOUNDARY: &str = "slowly-varying-boundary";
    /// `a = 0, -1 < b < 0, |c| ≤ 1`: only Brown's integral criterion applies.
    pub const BROWN_CRITERION_ONLY: &str = "brown-criterion-only";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub admissibility: Admissibility,
    pub rule: &'static str,
    pub minimax: bool,
    /// Whether `∫_1^∞ dg/(g π(g))` diverges.
    pub integral_diverges: bool,
}

pub fn classify(p: &MixingParams) -> Verdict {
    let (a, b, c) = (p.a(), p.b(), p.c());
    let (admissibility, rule) = if a > 0.0 || (a == 0.0 && c > 1.0) {
        (Admissibility::Inadmissible, rule::BROWN_INTEGRAL_FINITE)
    } else if a < 0.0 || c < -1.0 {
        (Admissibility::Admissible, rule::MIXING_MOMENT_FINITE)
    } else if b >= 0.0 {
        (
            Admissibility::AdmissibleBoundary,
            rule::SLOWLY_VARYING_BOUNDARY,
        )
    } else {
        (
            Admissibility::AdmissibleBrownOnly,
            rule::BROWN_CRITERION_ONLY,
        )
    };
    Verdict {
        admissibility,
        rule,
        minimax: minimax_check(p),
        integral_diverges: integral_diverges(p),
    }
}

/// Closed-form decision: `∫_1^∞ dg/(g π)` is finite iff `a > 0` or `a = 0, c > 1`.
pub fn integral_diverges(p: &MixingParams) -> bool {
    !(p.a() > 0.0 || (p.a() == 0.0 && p.c() > 1.0))
}

/// `-d/2 + 1 + max(0, -2c) ≤ a < d/2 - 1` and `b ≥ 0`.
pub fn minimax_check(p: &MixingParams) -> bool {
    let lower = -p.half_d() + 1.0 + (-2.0 * p.c()).max(0.0);
    p.a() >= lower && p.a() < p.half_d() - 1.0 && p.b() >= 0.0
}

/// `∫ π(g)/(g+1) dg`, or `+∞` when it diverges.
pub fn mixing_moment(p: &MixingParams, cfg: &QuadratureConfig) -> Result<f64> {
    if !(p.a() < 0.0 || (p.a() == 0.0 && p.c() < -1.0)) {
        return Ok(f64::INFINITY);
    }
    let integrand = LogScaleIntegrand {
        rate: -p.a(),
        edge_exp: p.b(),
        log_exp: p.c(),
        w: 0.0,
        weight: &Weight::Unit,
    };
    Ok(integrand.integrate(0.0, None, cfg)?.get())
}

pub fn admissible_general_mixture(moment: f64) -> bool {
    moment.is_finite()
}

/// `∫_1^T dg/(g π(g))`.
pub fn brown_tail_partial(p: &MixingParams, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!(
            "upper limit must be at least 1, got {t}"
        )));
    }
    Ok(inverse_density_integrand(p)
        .integrate(std::f64::consts::LN_2, Some(t.ln_1p()), cfg)?
        .get())
}

pub(crate) fn inverse_density_integrand(p: &MixingParams) -> LogScaleIntegrand<'static> {
    LogScaleIntegrand {
        rate: p.a(),
        edge_exp: -p.b() - 1.0,
        log_exp: -p.c(),
        w: 0.0,
        weight: &Weight::Unit,
    }
}

/// Numeric evidence for the closed-form integrability decision.
#[derive(Debug, Clone, Serialize)]
pub struct TailCheck {
    pub diverges: bool,
    pub numeric_diverges: bool,
    /// `I(10²), I(10⁴), I(10⁶)`.
    pub partials: [f64; 3],
    /// `(I(10⁶) - I(10⁴)) / (I(10⁴) - I(10²))`.
    pub growth: f64,
    /// The same increment ratio for `log L(T)`, the slowest divergent rate.
    /// Growth within 5% of it counts as divergent.
    pub reference_growth: f64,
    pub inconclusive: bool,
}

pub const TAIL_CHECK_POINTS: [f64; 3] = [1e2, 1e4, 1e6];

pub fn integrability_tail(p: &MixingParams, cfg: &QuadratureConfig) -> Result<TailCheck> {
    let mut partials = [0.0; 3];
    for (slot, &t) in partials.iter_mut().zip(TAIL_CHECK_POINTS.iter()) {
        *slot = brown_tail_partial(p, t, cfg)?;
    }
    let growth = (partials[2] - partials[1]) / (partials[1] - partials[0]);
    let ll = |t: f64| (t.ln_1p() + 1.0).ln();
    let [t0, t1, t2] = TAIL_CHECK_POINTS;
    let reference_growth = (ll(t2) - ll(t1)) / (ll(t1) - ll(t0));
    let diverges = integral_diverges(p);
    let numeric_diverges = growth >= 0.95 * reference_growth;
    Ok(TailCheck {
        diverges,
        numeric_diverges,
        partials,
        growth,
        reference_growth,
        inconclusive: diverges != numeric_diverges,
    })
}
