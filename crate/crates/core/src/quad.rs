//! Globally adaptive Gauss–Kronrod (7/15 Gauss, 10/21 Kronrod) quadrature.
//!
//! The integrator bisects whichever sub-interval currently carries the
//! largest error estimate until the summed estimate meets
//! `max(abs_tol, rel_tol * |I|)` or the subdivision budget runs out.
//! Callers supply initial breakpoints; every integral in this crate is
//! first mapped onto a variable in which the integrand is smooth between
//! those breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite())
            || !(self.abs_tol > 0.0 && self.abs_tol.is_finite())
        {
            return Err(Error::Config(format!(
                "quadrature tolerances must be positive (rel_tol={}, abs_tol={})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    /// Same budget, tighter tolerances.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

/// Integral value together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980029535,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn non_finite(x: f64) -> Error {
    Error::Quadrature {
        reason: format!("integrand is not finite at x = {x:e}"),
        estimate: f64::NAN,
        error: f64::NAN,
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(non_finite(center));
    }
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut vals = [(0.0, 0.0); 10];
    for (j, node) in XGK[..10].iter().enumerate() {
        let dx = half * node;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() {
            return Err(non_finite(center - dx));
        }
        if !f2.is_finite() {
            return Err(non_finite(center + dx));
        }
        vals[j] = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for (j, (f1, f2)) in vals.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
    })
}

/// Integrates `f` over `[points[0], points[last]]`, using every entry of
/// `points` as an initial breakpoint. `points` must be strictly increasing.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if points.len() < 2 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let mut heap = BinaryHeap::with_capacity(points.len() + cfg.max_subdivisions + 1);
    let mut total = 0.0;
    let mut total_err = 0.0;
    for pair in points.windows(2) {
        debug_assert!(pair[1] > pair[0], "breakpoints must increase: {pair:?}");
        let p = kronrod21(&f, pair[0], pair[1])?;
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }
    let mut subdivisions = 0;
    // Panels too narrow to split are retired with their error frozen.
    let mut frozen: Vec<Panel> = Vec::new();
    let mut frozen_err = 0.0;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        let width = worst.hi - worst.lo;
        if width <= 8.0 * f64::EPSILON * worst.lo.abs().max(worst.hi.abs()).max(1e-300)
            || mid <= worst.lo
            || mid >= worst.hi
        {
            frozen_err += worst.error;
            frozen.push(worst);
            if frozen_err > tol {
                return Err(Error::Quadrature {
                    reason: "roundoff prevents reaching the requested tolerance".into(),
                    estimate: total,
                    error: total_err,
                });
            }
            continue;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                reason: format!("subdivision budget of {} exhausted", cfg.max_subdivisions),
                estimate: total,
                error: total_err,
            });
        }
        subdivisions += 1;
        let left = kronrod21(&f, worst.lo, mid)?;
        let right = kronrod21(&f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Recompute the sums to shed accumulated cancellation error.
    let value: f64 = heap.iter().chain(frozen.iter()).map(|p| p.value).sum();
    let error: f64 = heap.iter().chain(frozen.iter()).map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        subdivisions,
    })
}

/// Integrates a function over the whole real line, growing panels outward
/// from `center` until both tails stop contributing.
///
/// Intended for integrands written in a logarithmic variable, which decay
/// at least exponentially in both directions.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    const MIN_STEPS: usize = 6;
    const MAX_STEPS: usize = 400;
    let core = integrate(&f, &[center - 1.0, center, center + 1.0], cfg)?;
    let mut value = core.value;
    let mut error = core.error;
    let mut subdivisions = core.subdivisions;
    for dir in [1.0, -1.0] {
        let mut edge = center + dir;
        let mut step: f64 = 1.0;
        let mut steps = 0;
        loop {
            let next = edge + dir * step;
            let (lo, hi) = if dir > 0.0 {
                (edge, next)
            } else {
                (next, edge)
            };
            let panel_cfg = QuadratureConfig {
                abs_tol: (cfg.rel_tol * value.abs()).max(cfg.abs_tol) * 0.1,
                ..*cfg
            };
            let part = integrate(&f, &[lo, hi], &panel_cfg)?;
            value += part.value;
            error += part.error;
            subdivisions += part.subdivisions;
            steps += 1;
            let negligible = part.value.abs() <= 1e-3 * cfg.rel_tol * value.abs();
            if steps >= MIN_STEPS && negligible {
                break;
            }
            if steps >= MAX_STEPS {
                return Err(Error::Quadrature {
                    reason: "integrand does not decay along the real line".into(),
                    estimate: value,
                    error,
                });
            }
            edge = next;
            step = (step * 2.0).min(16.0);
        }
    }
    Ok(Estimate {
        value,
        error,
        subdivisions,
    })
}

/// Runs a quadrature over a fallible integrand, surfacing the first error
/// the integrand reports instead of the integrator's own result.
pub fn with_fallible<F, Q>(f: F, run: Q) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
    Q: FnOnce(&dyn Fn(f64) -> f64) -> Result<Estimate>,
{
    let failure = std::cell::RefCell::new(None);
    let wrapped = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let est = run(&wrapped);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    est
}
