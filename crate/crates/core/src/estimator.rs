//! Radial shrinkage estimators `δ(x) = φ(‖x‖²)·x`.
//!
//! Every estimator here is spherically equivariant and is represented only
//! by its multiplier `φ(w)` and slope `φ'(w)`; the d-vector form is a thin
//! wrapper. The generalized Bayes multiplier is `1 - M_1(w)/M_0(w)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dominate::DominatorConstruction;
use crate::error::{Error, Result};
use crate::interp::{HermiteTable, LogGrid};
use crate::marginal::{MarginalEvaluator, Weight};

/// Memoized generalized Bayes estimator `δ_π = x + ∇ log m_π(‖x‖²)`.
///
/// Holds `log m_π`, `log(M_1/M_0)` and `log(M_2/M_0)` on a log-spaced grid;
/// queries outside the grid fall back to direct quadrature.
#[derive(Debug, Clone)]
pub struct GeneralizedBayes {
    ev: MarginalEvaluator,
    ln_m: HermiteTable,
    ln_r1: HermiteTable,
    ln_r2: HermiteTable,
}

/// `M_0`, `M_1/M_0`, `M_2/M_0` and `M_3/M_2` at one `w`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MarginalRatios {
    pub ln_m: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3_over_r2: f64,
}

pub(crate) fn ratios_direct(ev: &MarginalEvaluator, w: f64) -> Result<MarginalRatios> {
    let m: Vec<_> = (0..4)
        .map(|k| ev.weighted_scaled(w, k, &Weight::Unit))
        .collect::<Result<_>>()?;
    Ok(MarginalRatios {
        ln_m: m[0].ln(),
        r1: m[1].ratio(&m[0]),
        r2: m[2].ratio(&m[0]),
        r3_over_r2: m[3].ratio(&m[2]),
    })
}

impl GeneralizedBayes {
    pub fn new(ev: MarginalEvaluator) -> Result<Self> {
        Self::with_grid(ev, LogGrid::default())
    }

    pub fn with_grid(ev: MarginalEvaluator, grid: LogGrid) -> Result<Self> {
        let nodes: Vec<MarginalRatios> = (0..grid.len())
            .into_par_iter()
            .map(|j| ratios_direct(&ev, grid.w(j)))
            .collect::<Result<_>>()?;
        let mut ln_m = (Vec::new(), Vec::new());
        let mut ln_r1 = (Vec::new(), Vec::new());
        let mut ln_r2 = (Vec::new(), Vec::new());
        for (j, n) in nodes.iter().enumerate() {
            let w = grid.w(j);
            ln_m.0.push(n.ln_m);
            ln_m.1.push(-0.5 * w * n.r1);
            ln_r1.0.push(n.r1.ln());
            ln_r1.1.push(0.5 * w * (n.r1 - n.r2 / n.r1));
            ln_r2.0.push(n.r2.ln());
            ln_r2.1.push(0.5 * w * (n.r1 - n.r3_over_r2));
        }
        Ok(Self {
            ev,
            ln_m: HermiteTable::new(grid, ln_m.0, ln_m.1),
            ln_r1: HermiteTable::new(grid, ln_r1.0, ln_r1.1),
            ln_r2: HermiteTable::new(grid, ln_r2.0, ln_r2.1),
        })
    }

    pub fn evaluator(&self) -> &MarginalEvaluator {
        &self.ev
    }

    pub fn grid(&self) -> &LogGrid {
        self.ln_m.grid()
    }

    fn tabulated(&self, w: f64) -> Option<(f64, f64, f64)> {
        if w <= 0.0 || !self.grid().contains(w) {
            return None;
        }
        let x = w.ln();
        Some((
            self.ln_m.eval(x)?,
            self.ln_r1.eval(x)?.exp(),
            self.ln_r2.eval(x)?.exp(),
        ))
    }

    /// `(log m_π, M_1/M_0, M_2/M_0)`, interpolated inside the grid.
    pub fn ratios(&self, w: f64) -> Result<(f64, f64, f64)> {
        if let Some(v) = self.tabulated(w) {
            return Ok(v);
        }
        let r = ratios_direct(&self.ev, w)?;
        Ok((r.ln_m, r.r1, r.r2))
    }

    pub fn marginal(&self, w: f64) -> Result<f64> {
        Ok(self.ratios(w)?.0.exp())
    }

    /// `M_1(w)/M_0(w) = -2 m'/m`.
    pub fn ratio1(&self, w: f64) -> Result<f64> {
        Ok(self.ratios(w)?.1)
    }

    /// Multiplier `1 - M_1/M_0` from the memo table.
    pub fn multiplier(&self, w: f64) -> Result<f64> {
        Ok(1.0 - self.ratio1(w)?)
    }

    /// Multiplier and its `w`-derivative `(M_1/M_0)² /2 - M_2/(2 M_0)`.
    pub fn multiplier_and_slope(&self, w: f64) -> Result<(f64, f64)> {
        let (_, r1, r2) = self.ratios(w)?;
        Ok((1.0 - r1, 0.5 * (r2 - r1 * r1)))
    }

    /// Multiplier by direct quadrature, bypassing the memo table.
    pub fn multiplier_direct(&self, w: f64) -> Result<f64> {
        Ok(1.0 - self.ev.ratio(w, 1, 0)?)
    }

    /// `f(w) = ‖∇ log m_π‖ = √w · M_1(w)/M_0(w)`, by direct quadrature.
    pub fn grad_log_marginal_norm(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok(w.sqrt() * self.ev.ratio(w, 1, 0)?)
    }
}

/// Kinds of radial estimator the risk engine can evaluate.
#[derive(Debug, Clone)]
pub enum ShrinkageEstimator {
    /// `δ(x) = x`.
    Identity,
    /// `(1 - (d-2)/‖x‖²) x`.
    JamesStein {
        d: u32,
    },
    /// Proper Bayes rule `g/(g+1) x` under `μ ~ N(0, g I)`.
    PointPrior {
        g: f64,
    },
    GeneralizedBayes(Arc<GeneralizedBayes>),
    /// `δ_π - (k*/m_π) x`.
    ImprovedAverage(Arc<DominatorConstruction>),
    /// `δ_π - 2 (k*/m_π) x`; same risk as `δ_π`.
    ImprovedCompanion(Arc<DominatorConstruction>),
    /// Multiplier clipped at zero.
    PositivePart(Box<ShrinkageEstimator>),
}

impl fmt::Display for ShrinkageEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShrinkageEstimator::Identity => write!(f, "identity"),
            ShrinkageEstimator::JamesStein { .. } => write!(f, "js"),
            ShrinkageEstimator::PointPrior { g } => write!(f, "point:{g}"),
            ShrinkageEstimator::GeneralizedBayes(_) => write!(f, "gb"),
            ShrinkageEstimator::ImprovedAverage(_) => write!(f, "avg"),
            ShrinkageEstimator::ImprovedCompanion(_) => write!(f, "comp"),
            ShrinkageEstimator::PositivePart(inner) => write!(f, "pp-{inner}"),
        }
    }
}

impl ShrinkageEstimator {
    pub fn point_prior(g: f64) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::Domain(format!("point prior needs g >= 0, got {g}")));
        }
        Ok(ShrinkageEstimator::PointPrior { g })
    }

    pub fn positive_part(self) -> Self {
        match self {
            ShrinkageEstimator::PositivePart(_) => self,
            other => ShrinkageEstimator::PositivePart(Box::new(other)),
        }
    }

    /// `φ(w)` and `φ'(w)`.
    pub fn multiplier_and_slope(&self, w: f64) -> Result<(f64, f64)> {
        if !(w >= 0.0) {
            return Err(Error::Domain(format!("w must be nonnegative, got {w}")));
        }
        match self {
            ShrinkageEstimator::Identity => Ok((1.0, 0.0)),
            ShrinkageEstimator::JamesStein { d } => {
                let k = f64::from(*d) - 2.0;
                Ok((1.0 - k / w, k / (w * w)))
            }
            ShrinkageEstimator::PointPrior { g } => Ok((g / (g + 1.0), 0.0)),
            ShrinkageEstimator::GeneralizedBayes(gb) => gb.multiplier_and_slope(w),
            ShrinkageEstimator::ImprovedAverage(dc) => dc.shifted_multiplier(w, 1.0),
            ShrinkageEstimator::ImprovedCompanion(dc) => dc.shifted_multiplier(w, 2.0),
            ShrinkageEstimator::PositivePart(inner) => {
                let (m, s) = inner.multiplier_and_slope(w)?;
                Ok(if m > 0.0 { (m, s) } else { (0.0, 0.0) })
            }
        }
    }

    pub fn multiplier(&self, w: f64) -> Result<f64> {
        Ok(self.multiplier_and_slope(w)?.0)
    }

    /// `δ(x)` for a d-vector.
    pub fn estimate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w: f64 = x.iter().map(|v| v * v).sum();
        if w == 0.0 {
            return Ok(vec![0.0; x.len()]);
        }
        let m = self.multiplier(w)?;
        Ok(x.iter().map(|v| m * v).collect())
    }
}

pub fn shrink_multiplier(w: f64, est: &ShrinkageEstimator) -> Result<f64> {
    est.multiplier(w)
}

pub fn grad_log_marginal_norm(w: f64, gb: &GeneralizedBayes) -> Result<f64> {
    gb.grad_log_marginal_norm(w)
}

/// Risk `(g² d + ‖μ‖²)/(g+1)²` of the proper Bayes rule `g/(g+1) x`.
pub fn point_prior_risk(g: f64, mu_norm_sq: f64, d: u32) -> Result<f64> {
    if !(g >= 0.0) || !(mu_norm_sq >= 0.0) {
        return Err(Error::Domain(format!(
            "point prior risk needs g, ‖μ‖² >= 0 (g={g}, ‖μ‖²={mu_norm_sq})"
        )));
    }
    Ok((g * g * f64::from(d) + mu_norm_sq) / ((g + 1.0) * (g + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::MixingParams;

    fn gb(d: u32, a: f64, b: f64, c: f64) -> GeneralizedBayes {
        let ev = MarginalEvaluator::with_defaults(MixingParams::new(d, a, b, c).unwrap());
        GeneralizedBayes::new(ev).unwrap()
    }

    #[test]
    fn point_prior_examples() {
        let e = ShrinkageEstimator::point_prior(1.0).unwrap();
        assert_eq!(e.multiplier(3.0).unwrap(), 0.5);
        assert_eq!(point_prior_risk(1.0, 0.0, 4).unwrap(), 1.0);
        assert_eq!(point_prior_risk(0.0, 7.5, 4).unwrap(), 7.5);
        assert_eq!(point_prior_risk(1.0, 4.0, 4).unwrap(), 2.0);
    }

    #[test]
    fn closed_form_multiplier_at_zero() {
        let e = gb(4, -2.0, 0.0, 0.0);
        assert!((e.multiplier_direct(0.0).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(e.grad_log_marginal_norm(0.0).unwrap(), 0.0);
    }

    #[test]
    fn multiplier_in_unit_interval_and_increasing() {
        let e = gb(5, 0.4, 0.3, -0.5);
        let mut prev = 0.0;
        for j in 0..60 {
            let w = 10f64.powf(-3.0 + 0.2 * j as f64);
            let m = e.multiplier(w).unwrap();
            assert!(m > 0.0 && m < 1.0);
            assert!(m >= prev, "w={w}");
            prev = m;
        }
    }

    #[test]
    fn memo_table_matches_direct_quadrature() {
        let e = gb(6, 1.0, 0.0, 0.0);
        for j in 0..200 {
            let w = 10f64.powf(-7.9 + 0.0797 * j as f64);
            let t = e.multiplier(w).unwrap();
            let d = e.multiplier_direct(w).unwrap();
            assert!((t - d).abs() < 1e-6, "w={w}: {t} vs {d}");
        }
    }

    #[test]
    fn positive_part_is_idempotent_on_positive_multipliers() {
        let e = Arc::new(gb(5, 0.0, 0.0, 0.0));
        let plain = ShrinkageEstimator::GeneralizedBayes(e.clone());
        let pp = plain.clone().positive_part().positive_part();
        assert!(matches!(&pp, ShrinkageEstimator::PositivePart(inner)
            if !matches!(**inner, ShrinkageEstimator::PositivePart(_))));
        for w in [0.01, 1.0, 30.0] {
            assert_eq!(pp.multiplier(w).unwrap(), plain.multiplier(w).unwrap());
        }
    }

    #[test]
    fn estimate_at_origin_is_zero() {
        let e = ShrinkageEstimator::GeneralizedBayes(Arc::new(gb(3, 0.0, 0.0, 0.0)));
        assert_eq!(e.estimate(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
    }
}
