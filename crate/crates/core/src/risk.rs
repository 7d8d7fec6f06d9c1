//! Seeded Monte Carlo risk of radial estimators with paired SURE values.
//!
//! Draw `i` uses ChaCha8 stream `i` under the run seed, so results do not
//! depend on how draws are split across threads. Chunk statistics are merged
//! in chunk order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dominate::sure_from_multiplier;
use crate::error::{Error, Result};
use crate::estimator::ShrinkageEstimator;

pub const MIN_DRAWS: usize = 1000;
const CHUNK: usize = 4096;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n / n,
            m2: self.m2 + o.m2 + delta * delta * self.n * o.n / n,
        }
    }

    fn se(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Per-draw quantities for one or two estimators on the same `X`.
#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    loss: Moments,
    sure: Moments,
    loss_minus_sure: Moments,
    other_loss: Moments,
    loss_diff: Moments,
    kinks: usize,
}

impl ChunkStats {
    fn merge(self, o: ChunkStats) -> ChunkStats {
        ChunkStats {
            loss: self.loss.merge(o.loss),
            sure: self.sure.merge(o.sure),
            loss_minus_sure: self.loss_minus_sure.merge(o.loss_minus_sure),
            other_loss: self.other_loss.merge(o.other_loss),
            loss_diff: self.loss_diff.merge(o.loss_diff),
            kinks: self.kinks + o.kinks,
        }
    }
}

/// `(‖X‖², X_1)` for `X = μ e_1 + Z`, from the draw's own stream.
fn draw(seed: u64, index: u64, mu: f64, d: u32) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut w = 0.0;
    let mut x1 = 0.0;
    for k in 0..d {
        let z: f64 = StandardNormal.sample(&mut rng);
        if k == 0 {
            x1 = mu + z;
            w += x1 * x1;
        } else {
            w += z * z;
        }
    }
    (w, x1)
}

/// `‖φ(w) X - μ e_1‖²`.
fn loss(phi: f64, w: f64, x1: f64, mu: f64) -> f64 {
    phi * phi * w - 2.0 * phi * mu * x1 + mu * mu
}

fn validate(mu: f64, d: u32, n: usize) -> Result<()> {
    if n < MIN_DRAWS {
        return Err(Error::Config(format!(
            "Monte Carlo needs at least {MIN_DRAWS} draws, got {n}"
        )));
    }
    if d < 3 {
        return Err(Error::InvalidParams(format!(
            "dimension must be at least 3, got {d}"
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("‖μ‖ must be nonnegative, got {mu}")));
    }
    Ok(())
}

fn simulate(
    est: &ShrinkageEstimator,
    other: Option<&ShrinkageEstimator>,
    mu: f64,
    d: u32,
    n: usize,
    seed: u64,
) -> Result<ChunkStats> {
    validate(mu, d, n)?;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<ChunkStats> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<ChunkStats> {
            let mut st = ChunkStats::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let (w, x1) = draw(seed, i as u64, mu, d);
                let (phi, slope) = est.multiplier_and_slope(w)?;
                let l = loss(phi, w, x1, mu);
                let s = sure_from_multiplier(phi, slope, w, d);
                if let ShrinkageEstimator::PositivePart(inner) = est {
                    if inner.multiplier(w)? == 0.0 {
                        st.kinks += 1;
                    }
                }
                st.loss.push(l);
                st.sure.push(s);
                st.loss_minus_sure.push(l - s);
                if let Some(o) = other {
                    let l2 = loss(o.multiplier(w)?, w, x1, mu);
                    st.other_loss.push(l2);
                    st.loss_diff.push(l - l2);
                }
            }
            Ok(st)
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(ChunkStats::default(), ChunkStats::merge))
}

/// Monte Carlo risk and SURE at one `‖μ‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskPoint {
    pub mu_norm: f64,
    pub risk: f64,
    pub se: f64,
    pub mean_sure: f64,
    pub sure_se: f64,
    /// Standard error of the paired difference `loss - SURE`.
    pub diff_se: f64,
    pub n: usize,
    pub seed: u64,
    /// Draws landing exactly on a positive-part kink.
    pub kinks: usize,
}

impl RiskPoint {
    /// `|risk - mean_sure|` in units of the paired standard error.
    pub fn sure_z(&self) -> f64 {
        if self.diff_se == 0.0 {
            return if self.risk == self.mean_sure {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.risk - self.mean_sure).abs() / self.diff_se
    }
}

pub fn risk_point(
    est: &ShrinkageEstimator,
    mu_norm: f64,
    d: u32,
    n: usize,
    seed: u64,
) -> Result<RiskPoint> {
    let st = simulate(est, None, mu_norm, d, n, seed)?;
    Ok(RiskPoint {
        mu_norm,
        risk: st.loss.mean,
        se: st.loss.se(),
        mean_sure: st.sure.mean,
        sure_se: st.sure.se(),
        diff_se: st.loss_minus_sure.se(),
        n,
        seed,
        kinks: st.kinks,
    })
}

/// `(risk, se)` of `‖δ(X) - μ‖²`.
pub fn mc_risk(
    est: &ShrinkageEstimator,
    mu_norm: f64,
    d: u32,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let p = risk_point(est, mu_norm, d, n, seed)?;
    Ok((p.risk, p.se))
}

/// `(mean SURE, se)` over the same draws as [`mc_risk`].
pub fn sure_cross_check(
    est: &ShrinkageEstimator,
    mu_norm: f64,
    d: u32,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let p = risk_point(est, mu_norm, d, n, seed)?;
    Ok((p.mean_sure, p.sure_se))
}

/// Two estimators evaluated on common draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedRisk {
    pub mu_norm: f64,
    pub risk_a: f64,
    pub risk_b: f64,
    /// `risk_a - risk_b`.
    pub diff: f64,
    /// Standard error of the per-draw loss difference.
    pub diff_se: f64,
}

impl PairedRisk {
    pub fn z(&self) -> f64 {
        if self.diff_se == 0.0 {
            return if self.diff == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(self.diff)
            };
        }
        self.diff / self.diff_se
    }
}

pub fn paired_risk(
    a: &ShrinkageEstimator,
    b: &ShrinkageEstimator,
    mu_norm: f64,
    d: u32,
    n: usize,
    seed: u64,
) -> Result<PairedRisk> {
    let st = simulate(a, Some(b), mu_norm, d, n, seed)?;
    Ok(PairedRisk {
        mu_norm,
        risk_a: st.loss.mean,
        risk_b: st.other_loss.mean,
        diff: st.loss_diff.mean,
        diff_se: st.loss_diff.se(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub estimator: String,
    pub d: u32,
    pub points: Vec<RiskPoint>,
}

pub fn risk_report(
    est: &ShrinkageEstimator,
    mu_grid: &[f64],
    d: u32,
    n: usize,
    seed: u64,
) -> Result<RiskReport> {
    let points = mu_grid
        .iter()
        .map(|&mu| risk_point(est, mu, d, n, seed))
        .collect::<Result<_>>()?;
    Ok(RiskReport {
        estimator: est.to_string(),
        d,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_risk_is_d() {
        let p = risk_point(&ShrinkageEstimator::Identity, 1.5, 5, 20_000, 3).unwrap();
        assert!((p.risk - 5.0).abs() < 3.0 * p.se);
        assert_eq!(p.mean_sure, 5.0);
        assert_eq!(p.sure_se, 0.0);
    }

    #[test]
    fn james_stein_sure_at_origin() {
        // E[1/χ²_6] = 1/4, so mean SURE = 6 - 16/4 = 2.
        let js = ShrinkageEstimator::JamesStein { d: 6 };
        let (s, se) = sure_cross_check(&js, 0.0, 6, 50_000, 11).unwrap();
        assert!((s - 2.0).abs() < 3.0 * se, "{s} ± {se}");
    }

    #[test]
    fn point_prior_risk_matches_formula() {
        let est = ShrinkageEstimator::point_prior(1.0).unwrap();
        let (r, se) = mc_risk(&est, 0.0, 4, 50_000, 7).unwrap();
        assert!((r - 1.0).abs() < 3.0 * se);
    }

    #[test]
    fn report_is_deterministic() {
        let js = ShrinkageEstimator::JamesStein { d: 4 };
        let a = risk_report(&js, &[0.0, 2.0], 4, 10_000, 5).unwrap();
        let b = risk_report(&js, &[0.0, 2.0], 4, 10_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_draws_rejected() {
        assert!(matches!(
            mc_risk(&ShrinkageEstimator::Identity, 0.0, 4, 10, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - whole.mean).abs() < 1e-12);
        assert!((m.m2 - whole.m2).abs() < 1e-9);
    }
}
