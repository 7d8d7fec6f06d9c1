//! Estimators dominating `δ_π` when the Brown integral converges.
//!
//! With `c = ∫_1^∞ dt/(t^{d/2} m(t))` and
//! `1/q*(w) = c - ½∫_1^w dt/(t^{d/2} m(t))`, the function
//! `k*(w) = w^{-d/2} q*(w)` solves `d·k + 2w·k' = w·k²/m`. Shrinking by an
//! extra `k*/m` lowers the SURE by `w (k*/m)²`; shrinking by `2k*/m` leaves
//! it unchanged.
//!
//! Since `c` is the whole integral, `1/q*(w) = c/2 + ½∫_w^∞ dt/(t^{d/2} m)`,
//! which is bounded below by `c/2`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{integral_diverges, inverse_density_integrand};
use crate::error::{Error, Result};
use crate::estimator::{GeneralizedBayes, ShrinkageEstimator};
use crate::interp::HermiteTable;
use crate::marginal::{MarginalEvaluator, Weight};
use crate::quad::{integrate, QuadratureConfig};

/// `ln(t^{1-d/2}/m(t))` at `t = e^x`, the Brown integrand in `x = ln t`.
fn ln_brown_integrand(ev: &MarginalEvaluator, x: f64) -> Result<f64> {
    let m = ev.weighted_scaled(x.exp(), 0, &Weight::Unit)?;
    Ok((1.0 - ev.params().half_d()) * x - m.ln())
}

/// `∫_{x0}^{x1} t^{1-d/2}/m(t) dx` for `x = ln t`.
fn brown_segment(ev: &MarginalEvaluator, x0: f64, x1: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if x0 == x1 {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if x0 < x1 {
        (x0, x1, 1.0)
    } else {
        (x1, x0, -1.0)
    };
    let offset = ln_brown_integrand(ev, lo)?.max(ln_brown_integrand(ev, hi)?);
    let n = ((hi - lo) / 0.25).ceil().max(1.0) as usize;
    let points: Vec<f64> = (0..=n)
        .map(|j| lo + (hi - lo) * j as f64 / n as f64)
        .collect();
    let est = crate::quad::with_fallible(
        |x| Ok((ln_brown_integrand(ev, x)? - offset).exp()),
        |f| integrate(f, &points, cfg),
    )?;
    Ok(sign * est.value * offset.exp())
}

/// `∫_1^T dt/(t^{d/2} m_π(t))`.
pub fn brown_integral(t: f64, ev: &MarginalEvaluator) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!(
            "upper limit must be at least 1, got {t}"
        )));
    }
    brown_segment(ev, 0.0, t.ln(), ev.quad())
}

/// Truncation points tried for the Brown constant, as powers of ten.
const TRUNCATION_DECADES: [i32; 6] = [8, 16, 32, 64, 128, 256];

/// The Brown constant `c = ∫_1^∞ dt/(t^{d/2} m_π(t))`.
pub fn brown_constant(ev: &MarginalEvaluator) -> Result<f64> {
    check_convergent(ev)?;
    let head = brown_integral(1e8, ev)?;
    Ok(head + brown_tail_from(ev, 8.0 * std::f64::consts::LN_10)?)
}

fn check_convergent(ev: &MarginalEvaluator) -> Result<()> {
    if integral_diverges(ev.params()) {
        let p = ev.params();
        return Err(Error::Divergent(format!(
            "Brown integral diverges for a={}, b={}, c={}",
            p.a(),
            p.b(),
            p.c()
        )));
    }
    Ok(())
}

/// `∫_{e^{x0}}^∞ dt/(t^{d/2} m)`: direct quadrature up to a point where the
/// Tauberian ratio has settled, then `∫ dt/(R_T t π(t))` beyond it.
fn brown_tail_from(ev: &MarginalEvaluator, x0: f64) -> Result<f64> {
    let limit = ev.tauberian_limit();
    let mut x = x0;
    let mut total = 0.0;
    let mut ratio = ev.tauberian_ratio(x.exp())?;
    for decade in TRUNCATION_DECADES {
        let xt = f64::from(decade) * std::f64::consts::LN_10;
        if xt > x {
            total += brown_segment(ev, x, xt, ev.quad())?;
            x = xt;
            ratio = ev.tauberian_ratio(x.exp())?;
        }
        if (ratio / limit - 1.0).abs() <= 5e-3 {
            break;
        }
    }
    let tail = inverse_density_integrand(ev.params()).integrate(x, None, ev.quad())?;
    Ok(total + tail.get() / ratio)
}

/// Brown constant and tabulated `1/q*` for one generalized Bayes estimator.
#[derive(Debug, Clone)]
pub struct DominatorConstruction {
    gb: Arc<GeneralizedBayes>,
    brown_c: f64,
    /// `ln(1/q*)` with exact slopes.
    ln_inv_q: HermiteTable,
    /// `J(w_j) = ∫_1^{w_j} dt/(t^{d/2} m)` at each node.
    j_nodes: Vec<f64>,
}

impl DominatorConstruction {
    pub fn new(gb: Arc<GeneralizedBayes>) -> Result<Self> {
        let ev = gb.evaluator();
        check_convergent(ev)?;
        let grid = *gb.grid();
        let unit = grid
            .unit_index()
            .ok_or_else(|| Error::Config("the interpolation grid must contain w = 1".into()))?;
        let panels: Vec<f64> = (0..grid.len() - 1)
            .into_par_iter()
            .map(|j| brown_segment(ev, grid.x(j), grid.x(j + 1), ev.quad()))
            .collect::<Result<_>>()?;
        let mut j_nodes = vec![0.0; grid.len()];
        for j in unit + 1..grid.len() {
            j_nodes[j] = j_nodes[j - 1] + panels[j - 1];
        }
        for j in (0..unit).rev() {
            j_nodes[j] = j_nodes[j + 1] - panels[j];
        }
        let last = grid.len() - 1;
        let brown_c = j_nodes[last] + brown_tail_from(ev, grid.x(last))?;

        let half_d = ev.params().half_d();
        let mut y = Vec::with_capacity(grid.len());
        let mut dy = Vec::with_capacity(grid.len());
        for (j, jv) in j_nodes.iter().enumerate() {
            let inv_q = brown_c - 0.5 * jv;
            if !(inv_q > 0.0) {
                return Err(Error::Singular(format!(
                    "1/q* is not positive at w = {}",
                    grid.w(j)
                )));
            }
            let x = grid.x(j);
            let m = gb.marginal(grid.w(j))?;
            y.push(inv_q.ln());
            dy.push(-0.5 * ((1.0 - half_d) * x).exp() / m / inv_q);
        }
        Ok(Self {
            ln_inv_q: HermiteTable::new(grid, y, dy),
            gb,
            brown_c,
            j_nodes,
        })
    }

    pub fn from_evaluator(ev: MarginalEvaluator) -> Result<Self> {
        check_convergent(&ev)?;
        Self::new(Arc::new(GeneralizedBayes::new(ev)?))
    }

    pub fn brown_c(&self) -> f64 {
        self.brown_c
    }

    pub fn generalized_bayes(&self) -> &Arc<GeneralizedBayes> {
        &self.gb
    }

    pub fn d(&self) -> u32 {
        self.gb.evaluator().params().d()
    }

    fn check_w(w: f64) -> Result<()> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("w must be positive, got {w}")));
        }
        Ok(())
    }

    /// `1/q*(w)` from the table.
    pub fn inv_q(&self, w: f64) -> Result<f64> {
        Self::check_w(w)?;
        match self.ln_inv_q.eval(w.ln()) {
            Some(v) => Ok(v.exp()),
            None => self.inv_q_exact(w),
        }
    }

    /// `1/q*(w)` by quadrature from the nearest tabulated node.
    pub fn inv_q_exact(&self, w: f64) -> Result<f64> {
        Self::check_w(w)?;
        let grid = self.ln_inv_q.grid();
        let x = w.ln();
        let j = (((x - grid.x0()) / grid.step()).round().max(0.0) as usize).min(grid.len() - 1);
        let ev = self.gb.evaluator();
        let cfg = ev.quad().tightened(1e-3);
        let jw = self.j_nodes[j] + brown_segment(ev, grid.x(j), x, &cfg)?;
        let inv_q = self.brown_c - 0.5 * jw;
        if !(inv_q > 0.0) {
            return Err(Error::Singular(format!("1/q* is not positive at w = {w}")));
        }
        Ok(inv_q)
    }

    fn k_from_inv_q(&self, w: f64, inv_q: f64) -> f64 {
        (-self.gb.evaluator().params().half_d() * w.ln()).exp() / inv_q
    }

    /// `k*(w) = w^{-d/2}/(1/q*(w))`.
    pub fn k_star(&self, w: f64) -> Result<f64> {
        Ok(self.k_from_inv_q(w, self.inv_q(w)?))
    }

    pub fn k_star_exact(&self, w: f64) -> Result<f64> {
        Ok(self.k_from_inv_q(w, self.inv_q_exact(w)?))
    }

    /// `κ(w) = k*(w)/m_π(w)`.
    pub fn kappa(&self, w: f64) -> Result<f64> {
        Ok(self.k_star(w)? / self.gb.marginal(w)?)
    }

    /// Multiplier `1 - M_1/M_0 - j·κ` and its slope.
    pub(crate) fn shifted_multiplier(&self, w: f64, j: f64) -> Result<(f64, f64)> {
        if w == 0.0 {
            return Ok((f64::NEG_INFINITY, f64::INFINITY));
        }
        let (ln_m, r1, r2) = self.gb.ratios(w)?;
        let kappa = self.k_star(w)? / ln_m.exp();
        let half_d = self.gb.evaluator().params().half_d();
        let kappa_slope = kappa * (-half_d / w + 0.5 * kappa + 0.5 * r1);
        Ok((1.0 - r1 - j * kappa, 0.5 * (r2 - r1 * r1) - j * kappa_slope))
    }

    /// `Δ(w)` of the companion estimator divided by `4w k²/m`, i.e.
    /// `1 - m (d k + 2 w k')/(w k²)`, with `k'` from a five-point stencil on
    /// [`Self::k_star_exact`].
    pub fn delta_companion(&self, w: f64) -> Result<f64> {
        Self::check_w(w)?;
        let h = 1e-3 * w;
        let k = self.k_star_exact(w)?;
        let at = |t: f64| self.k_star_exact(w + t * h);
        let kp = (8.0 * (at(1.0)? - at(-1.0)?) - (at(2.0)? - at(-2.0)?)) / (12.0 * h);
        let m = self.gb.evaluator().marginal(w)?;
        let d = f64::from(self.d());
        Ok(1.0 - m * (d * k + 2.0 * w * kp) / (w * k * k))
    }

    /// `w·k*(w)/((d-2) m_π(0))`, which tends to 1 as `w → 0`.
    pub fn small_w_ratio(&self, w: f64) -> Result<f64> {
        let m0 = self.gb.evaluator().marginal(0.0)?;
        Ok(w * self.k_star_exact(w)? / ((f64::from(self.d()) - 2.0) * m0))
    }
}

/// Average (`-k*/m`) and companion (`-2k*/m`) estimators.
pub fn improved_estimators(
    dc: &Arc<DominatorConstruction>,
) -> (ShrinkageEstimator, ShrinkageEstimator) {
    (
        ShrinkageEstimator::ImprovedAverage(dc.clone()),
        ShrinkageEstimator::ImprovedCompanion(dc.clone()),
    )
}

pub fn positive_part(est: ShrinkageEstimator) -> ShrinkageEstimator {
    est.positive_part()
}

pub fn k_star(w: f64, dc: &DominatorConstruction) -> Result<f64> {
    dc.k_star(w)
}

/// Pointwise SURE value; `at_kink` marks a positive-part multiplier that is
/// exactly zero, where the one-sided slope from above is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SureValue {
    pub value: f64,
    pub at_kink: bool,
}

/// `d + w s² + 2(d s + 2 w s')` for the radial multiplier `1 + s`.
pub fn sure_from_multiplier(phi: f64, slope: f64, w: f64, d: u32) -> f64 {
    let d = f64::from(d);
    let s = phi - 1.0;
    d + w * s * s + 2.0 * (d * s + 2.0 * w * slope)
}

pub fn sure(est: &ShrinkageEstimator, w: f64, d: u32) -> Result<SureValue> {
    let at_kink = match est {
        ShrinkageEstimator::PositivePart(inner) => inner.multiplier(w)? == 0.0,
        _ => false,
    };
    let (phi, slope) = est.multiplier_and_slope(w)?;
    Ok(SureValue {
        value: sure_from_multiplier(phi, slope, w, d),
        at_kink,
    })
}
