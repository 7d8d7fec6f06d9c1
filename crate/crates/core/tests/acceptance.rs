//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use statrs::function::gamma::gamma;
use steinlab::blyth::{bayes_risk_difference, delta_upper_bound, gamma_identity, BlythSequence};
use steinlab::classify::{classify, integrability_tail, Admissibility};
use steinlab::cli::format_number;
use steinlab::dominate::{improved_estimators, DominatorConstruction};
use steinlab::estimator::{GeneralizedBayes, ShrinkageEstimator};
use steinlab::priors::{stein_prior_check, MixingParams};
use steinlab::quad::QuadratureConfig;
use steinlab::risk::{paired_risk, risk_point};
use steinlab::MarginalEvaluator;

const SEED: u64 = 20_240_101;
const N_MC: usize = 200_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ev(d: u32, a: f64, b: f64, c: f64) -> MarginalEvaluator {
    MarginalEvaluator::with_defaults(MixingParams::new(d, a, b, c).unwrap())
}

/// Expected label from the rule table, written out independently of the
/// library's branch order.
fn expected_label(a: f64, b: f64, c: f64) -> Admissibility {
    match (a.partial_cmp(&0.0).unwrap(), c) {
        (std::cmp::Ordering::Greater, _) => Admissibility::Inadmissible,
        (std::cmp::Ordering::Less, _) => Admissibility::Admissible,
        (_, c) if c > 1.0 => Admissibility::Inadmissible,
        (_, c) if c < -1.0 => Admissibility::Admissible,
        _ if b >= 0.0 => Admissibility::AdmissibleBoundary,
        _ => Admissibility::AdmissibleBrownOnly,
    }
}

fn criterion_1() -> Outcome {
    let vals = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
    let cfg = QuadratureConfig::default();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for &b in &[0.0, 0.5] {
        for &a in &vals {
            for &c in &vals {
                let p = MixingParams::new(6, a, b, c).unwrap();
                let v = classify(&p);
                if v.admissibility != expected_label(a, b, c) {
                    mismatches.push(format!("label a={a} b={b} c={c}"));
                }
                if (v.admissibility == Admissibility::Inadmissible) == v.integral_diverges {
                    mismatches.push(format!("brown a={a} b={b} c={c}"));
                }
                if a != 0.0 {
                    let t = integrability_tail(&p, &cfg).unwrap();
                    checked += 1;
                    if t.inconclusive {
                        mismatches.push(format!("numeric a={a} b={b} c={c}"));
                    }
                }
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "98 verdicts, {checked} numeric integrability checks, mismatches: {:?}",
            mismatches
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, a) in [(6u32, 0.0), (6, 1.0), (8, -1.0)] {
        let e = ev(d, a, 0.0, 0.0);
        let r = e.tauberian_ratio(1e6).unwrap();
        let k = d as f64 / 2.0 - 1.0 - a;
        let limit = gamma(k) * 2f64.powf(k);
        let rel = (r / limit - 1.0).abs();
        pass &= rel < 0.02;
        parts.push(format!(
            "(d={d},a={a}) ratio {r:.5} vs {limit} (rel {rel:.2e})"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_3_rows() -> Vec<(f64, steinlab::RiskPoint)> {
    let gb = Arc::new(GeneralizedBayes::new(ev(6, 0.0, 0.0, 0.0)).unwrap());
    let est = ShrinkageEstimator::GeneralizedBayes(gb);
    [0.0, 2.0, 5.0]
        .iter()
        .map(|&mu| (mu, risk_point(&est, mu, 6, N_MC, SEED).unwrap()))
        .collect()
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (mu, p) in criterion_3_rows() {
        let z = p.sure_z();
        pass &= z < 3.0 && p.risk < 6.0;
        parts.push(format!(
            "‖μ‖={mu}: risk {:.4}±{:.4}, SURE {:.4}, z {z:.2}",
            p.risk, p.se, p.mean_sure
        ));
    }
    outcome(pass, parts.join("; "))
}

fn domination_setup() -> (Arc<GeneralizedBayes>, Arc<DominatorConstruction>) {
    let gb = Arc::new(GeneralizedBayes::new(ev(6, 1.0, 0.0, 0.0)).unwrap());
    let dc = Arc::new(DominatorConstruction::new(gb.clone()).unwrap());
    (gb, dc)
}

fn criterion_4(gb: &Arc<GeneralizedBayes>, dc: &Arc<DominatorConstruction>) -> Outcome {
    let pi = ShrinkageEstimator::GeneralizedBayes(gb.clone());
    let (avg, comp) = improved_estimators(dc);
    let pp = avg.clone().positive_part();
    let mut pass = true;
    let mut parts = Vec::new();

    let mut worst_z: f64 = 0.0;
    for mu in [0.0, 2.0, 5.0] {
        let r = paired_risk(&comp, &pi, mu, 6, N_MC, SEED).unwrap();
        worst_z = worst_z.max(r.z().abs());
    }
    pass &= worst_z < 3.0;
    parts.push(format!("(i) companion vs δ_π max |z| {worst_z:.2}"));

    let mut worst_delta: f64 = 0.0;
    for w in [0.5, 1.0, 5.0, 20.0, 100.0] {
        worst_delta = worst_delta.max(dc.delta_companion(w).unwrap().abs());
    }
    pass &= worst_delta < 1e-6;
    parts.push(format!("(ii) max |Δ| {worst_delta:.2e}"));

    let r = paired_risk(&avg, &pi, 0.0, 6, N_MC, SEED).unwrap();
    pass &= r.z() < -3.0;
    parts.push(format!(
        "(iii) avg {:.4} vs δ_π {:.4}, z {:.1}",
        r.risk_a,
        r.risk_b,
        r.z()
    ));

    let r = paired_risk(&pp, &avg, 0.0, 6, N_MC, SEED).unwrap();
    pass &= r.diff <= 3.0 * r.diff_se;
    parts.push(format!(
        "(iv) pp-avg {:.4} vs avg {:.4}, z {:.1}",
        r.risk_a,
        r.risk_b,
        r.z()
    ));
    outcome(pass, parts.join("; "))
}

fn criterion_5(dc: &DominatorConstruction) -> Outcome {
    let r = dc.small_w_ratio(1e-6).unwrap();
    outcome(
        (0.999..=1.001).contains(&r),
        format!("w·k*(w)/((d-2)m(0)) at w=1e-6: {r:.8}"),
    )
}

fn criterion_6() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst_gamma: f64 = 0.0;
    for d in 3..=8 {
        for g in [0.0, 1.0, 10.0] {
            let (l, r) = gamma_identity(g, d, &cfg).unwrap();
            worst_gamma = worst_gamma.max((l / r - 1.0).abs());
        }
    }
    let mut worst_stein: f64 = 0.0;
    for d in 3..=10 {
        for mu_sq in [0.5, 1.0, 4.0] {
            let (l, r) = stein_prior_check(mu_sq, d, &cfg).unwrap();
            worst_stein = worst_stein.max((l / r - 1.0).abs());
        }
    }
    // b = c = 0: M_k(0) = ∫ (g+1)^{a-d/2-k} dg = 1/(d/2 + k - a - 1).
    let mut worst_beta: f64 = 0.0;
    for (d, a) in [
        (3u32, 0.0),
        (4, -2.0),
        (5, 0.5),
        (6, 1.0),
        (8, -1.0),
        (10, 3.5),
    ] {
        let e = ev(d, a, 0.0, 0.0);
        for k in 0..4 {
            let exact = 1.0 / (d as f64 / 2.0 + k as f64 - a - 1.0);
            let v = e.weighted_marginal(0.0, k).unwrap();
            worst_beta = worst_beta.max((v / exact - 1.0).abs());
        }
    }
    // b = 1, c = 0: M_0(0) = B(2, d/2 - a - 1).
    for (d, a) in [(4u32, -1.0), (6, 0.5)] {
        let e = ev(d, a, 1.0, 0.0);
        let q = d as f64 / 2.0 - a - 1.0;
        let exact = gamma(2.0) * gamma(q) / gamma(2.0 + q);
        let v = e.weighted_marginal(0.0, 0).unwrap();
        worst_beta = worst_beta.max((v / exact - 1.0).abs());
    }
    outcome(
        worst_gamma < 1e-8 && worst_stein < 1e-8 && worst_beta < 1e-9,
        format!(
            "gamma identity {worst_gamma:.1e}, Stein prior {worst_stein:.1e}, Beta forms {worst_beta:.1e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let e = ev(4, -2.0, 0.0, 0.0);
    let bound = delta_upper_bound(&e).unwrap();
    let deltas: Vec<f64> = [10.0, 1e2, 1e3, 1e4]
        .iter()
        .map(|&i| {
            bayes_risk_difference(&BlythSequence::moment(i).unwrap(), &e)
                .unwrap()
                .delta
        })
        .collect();
    let positive = deltas.iter().all(|&v| v > 0.0);
    let decreasing = deltas.windows(2).all(|w| w[1] < w[0]);
    let fast = deltas[3] < deltas[0] / 10.0;
    let bounded = deltas.iter().all(|&v| v <= bound);
    let rate = (deltas[0] / deltas[3]).log10() / 3.0;
    outcome(
        positive && decreasing && fast && bounded,
        format!(
            "Δ_i = {:?}, bound {bound:.2}, empirical rate i^-{rate:.3}",
            deltas
                .iter()
                .map(|v| format!("{v:.4e}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, a, b, c) in [
        (6u32, 0.0, 0.0, 0.0),
        (6, 1.0, 0.0, 0.0),
        (5, -1.0, 0.5, 0.0),
        (8, 1.5, 0.0, 0.0),
    ] {
        let gb = GeneralizedBayes::new(ev(d, a, b, c)).unwrap();
        let grid: Vec<f64> = (0..=100)
            .map(|j| 10f64.powf(-2.0 + 0.1 * j as f64))
            .collect();
        let f: Vec<f64> = grid
            .iter()
            .map(|&w| gb.grad_log_marginal_norm(w).unwrap())
            .collect();
        let sup = f.iter().cloned().fold(0.0, f64::max);
        let tail_max = f[80..].iter().cloned().fold(0.0, f64::max);
        let bounded = sup.is_finite() && tail_max <= sup && f[100] < f[80];
        let limit = 1e8 * gb.ratio1(1e8).unwrap();
        let expected = d as f64 - 2.0 - 2.0 * a;
        let close = (limit / expected - 1.0).abs() < 0.01;
        pass &= bounded && close;
        parts.push(format!(
            "(d={d},a={a}) sup f {sup:.4}, w·M1/M0 at 1e8 = {limit:.5} (d-2-2a = {expected}, d/2-1-a = {})",
            d as f64 / 2.0 - 1.0 - a
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let csv = || {
        let mut s = String::from("mu_norm,risk,se,mean_sure\n");
        for (mu, p) in criterion_3_rows() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                format_number(mu),
                format_number(p.risk),
                format_number(p.se),
                format_number(p.mean_sure)
            ));
        }
        s
    };
    let first = csv();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(csv);
    let second = csv();
    outcome(
        first == second && first == single,
        format!(
            "{} bytes; repeat identical: {}, single-thread identical: {}",
            first.len(),
            first == second,
            first == single
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Duration, Duration, Outcome)> = Vec::new();
    let mut timed = |k: usize, name: &'static str, budget: u64, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(budget);
        let line = format!(
            "[{}] {k} {name} ({:.1}s / {budget}s): {}",
            if o.pass && elapsed <= limit {
                "PASS"
            } else {
                "FAIL"
            },
            elapsed.as_secs_f64(),
            o.detail
        );
        println!("{line}");
        results.push((k, name, elapsed, limit, o));
    };

    timed(1, "classification grid", 10, &mut criterion_1);
    timed(2, "Tauberian limit", 30, &mut criterion_2);
    timed(3, "SURE and Monte Carlo risk agree", 120, &mut criterion_3);
    let mut setup = None;
    timed(4, "domination suite", 300, &mut || {
        let (gb, dc) = domination_setup();
        let o = criterion_4(&gb, &dc);
        setup = Some(dc);
        o
    });
    let dc = setup.expect("domination setup ran");
    timed(5, "small-w limit of k*", 10, &mut || criterion_5(&dc));
    timed(6, "closed-form identities", 10, &mut criterion_6);
    timed(7, "Blyth convergence", 120, &mut criterion_7);
    timed(
        8,
        "bounded score and its limit constant",
        60,
        &mut criterion_8,
    );
    timed(9, "deterministic risk CSV", 240, &mut criterion_9);

    let failed: Vec<_> = results
        .iter()
        .filter(|(_, _, e, l, o)| !o.pass || e > l)
        .map(|(k, ..)| *k)
        .collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
