//! Command-line front end.
//!
//! Table-producing subcommands write CSV with a header row, or with
//! `--json` a report `{command, params, columns, rows}`.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::blyth::{bayes_risk_difference, BlythKind, BlythSequence};
use crate::classify::{classify, integrability_tail};
use crate::config::{GridSpec, ParamOverrides, RunConfig};
use crate::dominate::{sure, DominatorConstruction};
use crate::error::{Error, Result};
use crate::estimator::{GeneralizedBayes, ShrinkageEstimator};
use crate::marginal::MarginalEvaluator;
use crate::priors::MixingParams;
use crate::risk::risk_report;

#[derive(Debug, Parser)]
#[command(
    name = "steinlab",
    version,
    about = "Generalized Bayes shrinkage under π(g; a, b, c) mixing priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Admissibility and minimaxity verdict.
    Classify(ClassifyArgs),
    /// Weighted marginals.
    #[command(after_help = "CSV columns: w, M0, M1, M2, tauberian_ratio\n  \
        Mk = ∫ (g+1)^{-d/2-k} exp(-w/(2(g+1))) π(g) dg; tauberian_ratio = w^{d/2-1} M0(w)/π(w).")]
    Marginal(GridArgs),
    /// Generalized Bayes shrinkage multiplier.
    #[command(after_help = "CSV columns: w, multiplier, f\n  \
        multiplier = 1 - M1/M0; f = sqrt(w)·M1/M0 = ‖∇ log m‖.")]
    Estimate(GridArgs),
    /// Pointwise SURE of an estimator.
    #[command(after_help = "CSV columns: w, multiplier, sure, at_kink\n  \
        at_kink = 1 where a positive-part multiplier is exactly 0.")]
    Sure(SureArgs),
    /// Dominating estimators (requires a convergent Brown integral).
    #[command(
        after_help = "CSV columns: w, k_star, multiplier_avg, multiplier_comp, sure_pi, sure_avg, delta_w\n  \
        multiplier_avg = 1 - M1/M0 - k*/m; multiplier_comp = 1 - M1/M0 - 2k*/m;\n  \
        delta_w = 1 - m(d k* + 2w k*')/(w k*²), zero for the exact k*."
    )]
    Dominate(GridArgs),
    /// Monte Carlo risk with paired SURE.
    #[command(after_help = "CSV columns: mu_norm, risk, se, mean_sure\n  \
        se is the standard error of the per-draw loss.")]
    Risk(RiskArgs),
    /// Tauberian ratio t^{d/2-1} m(t)/π(t) against its limit.
    #[command(after_help = "CSV columns: t, ratio, limit")]
    Tauberian(GridArgs),
    /// Bayes risk differences along a Blyth sequence.
    #[command(after_help = "CSV columns: i, delta_i, bound\n  \
        bound = 4 d (2π)^{d/2} ∫π/(g+1) dg (infinite for the log kind).")]
    Blyth(BlythArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension (≥ 3).
    #[arg(long)]
    d: Option<u32>,
    /// Regular-variation index of π at infinity.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Exponent of π at the origin.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Exponent of the logarithmic factor L(g) = log(g+1) + 1.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a JSON report instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Also run the numeric integrability cross-check.
    #[arg(long)]
    numeric: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Points in w (or t): `1,2,5`, `log:LO:HI:N` or `lin:LO:HI:N`.
    #[arg(long)]
    w_grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
struct SureArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// gb, avg, comp, pp-avg, pp-gb, point:G, js or identity.
    #[arg(long, default_value = "gb")]
    estimator: String,
}

#[derive(Debug, Args)]
struct RiskArgs {
    #[command(flatten)]
    common: Common,
    /// gb, avg, comp, pp-avg, pp-gb, point:G, js or identity.
    #[arg(long, default_value = "gb")]
    estimator: String,
    /// Values of ‖μ‖.
    #[arg(long)]
    mu_grid: Option<GridSpec>,
    /// Monte Carlo draws per point.
    #[arg(long)]
    n: Option<usize>,
    /// Base seed; draw `j` uses stream `j` of a ChaCha8 generator.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BlythArgs {
    #[command(flatten)]
    common: Common,
    /// moment or log.
    #[arg(long, default_value = "moment")]
    kind: BlythKind,
    /// Sequence indices i.
    #[arg(long)]
    i_list: Option<GridSpec>,
}

/// Resolved inputs shared by every subcommand.
struct Context {
    cfg: RunConfig,
    params: MixingParams,
    out: Option<PathBuf>,
    json: bool,
}

impl Context {
    fn new(c: &Common) -> Result<Self> {
        let mut cfg = match &c.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(t) = c.rel_tol {
            cfg.quad.rel_tol = t;
        }
        if let Some(t) = c.abs_tol {
            cfg.quad.abs_tol = t;
        }
        cfg.quad.validate()?;
        let params = cfg.params(ParamOverrides {
            d: c.d,
            a: c.a,
            b: c.b,
            c: c.c,
        })?;
        Ok(Self {
            cfg,
            params,
            out: c.out.clone(),
            json: c.json,
        })
    }

    fn evaluator(&self) -> Result<MarginalEvaluator> {
        MarginalEvaluator::new(self.params, self.cfg.quad)
    }

    fn w_grid(&self, flag: &Option<GridSpec>, default: &str) -> Result<Vec<f64>> {
        pick(flag, &self.cfg.grids.w_grid, default)
    }

    fn params_json(&self) -> serde_json::Value {
        json!({
            "d": self.params.d(),
            "a": self.params.a(),
            "b": self.params.b(),
            "c": self.params.c(),
        })
    }
}

fn pick(flag: &Option<GridSpec>, cfg: &Option<GridSpec>, default: &str) -> Result<Vec<f64>> {
    let spec = match flag.as_ref().or(cfg.as_ref()) {
        Some(s) => s.clone(),
        None => default.parse()?,
    };
    Ok(spec.0)
}

/// A table of numbers with named columns.
struct Table {
    command: &'static str,
    columns: &'static [&'static str],
    rows: Vec<Vec<f64>>,
}

/// `v` with 17 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json_number(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format_number(v))
    }
}

fn emit(ctx: &Context, table: Table, stdout: &mut dyn Write) -> Result<()> {
    let mut file;
    let sink: &mut dyn Write = match &ctx.out {
        Some(path) => {
            file = File::create(path)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
            &mut file
        }
        None => stdout,
    };
    let text = if ctx.json {
        let rows: Vec<serde_json::Value> = table
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<_, _> = table
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(k, v)| (k.to_string(), json_number(*v)))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let report = json!({
            "command": table.command,
            "params": ctx.params_json(),
            "columns": table.columns,
            "rows": rows,
        });
        format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serializes")
        )
    } else {
        let mut s = table.columns.join(",");
        s.push('\n');
        for r in &table.rows {
            let cells: Vec<String> = r.iter().map(|v| format_number(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    };
    sink.write_all(text.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(|e| Error::Config(format!("write failed: {e}")))
}

/// Builds the estimator named by `spec` for the parameters in `ctx`.
fn build_estimator(spec: &str, ctx: &Context) -> Result<ShrinkageEstimator> {
    let gb = || -> Result<Arc<GeneralizedBayes>> {
        Ok(Arc::new(GeneralizedBayes::new(ctx.evaluator()?)?))
    };
    let dc = || -> Result<Arc<DominatorConstruction>> {
        Ok(Arc::new(DominatorConstruction::new(gb()?)?))
    };
    let spec = spec.trim();
    if let Some(g) = spec.strip_prefix("point:") {
        let g: f64 = g
            .parse()
            .map_err(|_| Error::Config(format!("point prior scale '{g}' is not a number")))?;
        return ShrinkageEstimator::point_prior(g).map_err(|e| Error::Config(e.to_string()));
    }
    Ok(match spec {
        "identity" => ShrinkageEstimator::Identity,
        "js" => ShrinkageEstimator::JamesStein { d: ctx.params.d() },
        "gb" => ShrinkageEstimator::GeneralizedBayes(gb()?),
        "pp-gb" => ShrinkageEstimator::GeneralizedBayes(gb()?).positive_part(),
        "avg" => ShrinkageEstimator::ImprovedAverage(dc()?),
        "comp" => ShrinkageEstimator::ImprovedCompanion(dc()?),
        "pp-avg" => ShrinkageEstimator::ImprovedAverage(dc()?).positive_part(),
        other => {
            return Err(Error::Config(format!(
                "unknown estimator '{other}' (expected gb, avg, comp, pp-avg, pp-gb, point:G, js, identity)"
            )))
        }
    })
}

fn run_classify(args: &ClassifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let verdict = classify(&ctx.params);
    let mut report = serde_json::to_value(&verdict).expect("verdict serializes");
    let tail = if args.numeric {
        let t = integrability_tail(&ctx.params, &ctx.cfg.quad)?;
        report["numeric_check"] = serde_json::to_value(&t).expect("tail check serializes");
        Some(t)
    } else {
        None
    };
    let mut text = String::new();
    if !ctx.json {
        let p = &ctx.params;
        text.push_str(&format!(
            "π(g; a={}, b={}, c={}) in d={}\n",
            p.a(),
            p.b(),
            p.c(),
            p.d()
        ));
        text.push_str(&format!(
            "  admissibility: {} ({})\n",
            verdict.admissibility, verdict.rule
        ));
        text.push_str(&format!("  minimax: {}\n", verdict.minimax));
        text.push_str(&format!(
            "  ∫_1^∞ dg/(g π(g)): {}\n",
            if verdict.integral_diverges {
                "diverges"
            } else {
                "converges"
            }
        ));
        if let Some(t) = &tail {
            text.push_str(&format!(
                "  numeric growth {:.4} vs log-log reference {:.4}{}\n",
                t.growth,
                t.reference_growth,
                if t.inconclusive {
                    " (inconclusive)"
                } else {
                    ""
                }
            ));
        }
    }
    text.push_str(&serde_json::to_string(&report).expect("report serializes"));
    text.push('\n');
    match &ctx.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::Config(format!("write failed: {e}"))),
    }
}

fn run_marginal(args: &GridArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let ev = ctx.evaluator()?;
    let ws = ctx.w_grid(&args.w_grid, "0,0.5,1,2,5,10,100,1000")?;
    let rows = ws
        .par_iter()
        .map(|&w| -> Result<Vec<f64>> {
            let tr = if w > 0.0 {
                ev.tauberian_ratio(w)?
            } else {
                f64::NAN
            };
            Ok(vec![
                w,
                ev.weighted_marginal(w, 0)?,
                ev.weighted_marginal(w, 1)?,
                ev.weighted_marginal(w, 2)?,
                tr,
            ])
        })
        .collect::<Result<_>>()?;
    emit(
        &ctx,
        Table {
            command: "marginal",
            columns: &["w", "M0", "M1", "M2", "tauberian_ratio"],
            rows,
        },
        stdout,
    )
}

fn run_estimate(args: &GridArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let ev = ctx.evaluator()?;
    let ws = ctx.w_grid(&args.w_grid, "0,0.5,1,2,5,10,100,1000")?;
    let rows = ws
        .par_iter()
        .map(|&w| -> Result<Vec<f64>> {
            let r1 = ev.ratio(w, 1, 0)?;
            Ok(vec![w, 1.0 - r1, w.sqrt() * r1])
        })
        .collect::<Result<_>>()?;
    emit(
        &ctx,
        Table {
            command: "estimate",
            columns: &["w", "multiplier", "f"],
            rows,
        },
        stdout,
    )
}

fn run_sure(args: &SureArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.grid.common)?;
    let est = build_estimator(&args.estimator, &ctx)?;
    let ws = ctx.w_grid(&args.grid.w_grid, "0.5,1,2,5,10,20,50,100")?;
    let d = ctx.params.d();
    let rows = ws
        .iter()
        .map(|&w| -> Result<Vec<f64>> {
            let s = sure(&est, w, d)?;
            Ok(vec![
                w,
                est.multiplier(w)?,
                s.value,
                f64::from(u8::from(s.at_kink)),
            ])
        })
        .collect::<Result<_>>()?;
    emit(
        &ctx,
        Table {
            command: "sure",
            columns: &["w", "multiplier", "sure", "at_kink"],
            rows,
        },
        stdout,
    )
}

fn run_dominate(args: &GridArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let ws = ctx.w_grid(&args.w_grid, "0.01,0.1,0.5,1,5,20,100,1000")?;
    let gb = Arc::new(GeneralizedBayes::new(ctx.evaluator()?)?);
    let dc = Arc::new(DominatorConstruction::new(gb.clone())?);
    let d = ctx.params.d();
    let pi = ShrinkageEstimator::GeneralizedBayes(gb);
    let avg = ShrinkageEstimator::ImprovedAverage(dc.clone());
    let comp = ShrinkageEstimator::ImprovedCompanion(dc.clone());
    let rows = ws
        .par_iter()
        .map(|&w| -> Result<Vec<f64>> {
            Ok(vec![
                w,
                dc.k_star(w)?,
                avg.multiplier(w)?,
                comp.multiplier(w)?,
                sure(&pi, w, d)?.value,
                sure(&avg, w, d)?.value,
                dc.delta_companion(w)?,
            ])
        })
        .collect::<Result<_>>()?;
    emit(
        &ctx,
        Table {
            command: "dominate",
            columns: &[
                "w",
                "k_star",
                "multiplier_avg",
                "multiplier_comp",
                "sure_pi",
                "sure_avg",
                "delta_w",
            ],
            rows,
        },
        stdout,
    )
}

fn run_risk(args: &RiskArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let est = build_estimator(&args.estimator, &ctx)?;
    let mus = pick(&args.mu_grid, &ctx.cfg.grids.mu_grid, "0,1,2,3,5")?;
    let n = args.n.unwrap_or(ctx.cfg.mc.n);
    let seed = args.seed.unwrap_or(ctx.cfg.mc.seed);
    let report = risk_report(&est, &mus, ctx.params.d(), n, seed)?;
    let rows = report
        .points
        .iter()
        .map(|p| vec![p.mu_norm, p.risk, p.se, p.mean_sure])
        .collect();
    emit(
        &ctx,
        Table {
            command: "risk",
            columns: &["mu_norm", "risk", "se", "mean_sure"],
            rows,
        },
        stdout,
    )
}

fn run_tauberian(args: &GridArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let ev = ctx.evaluator()?;
    let ts = ctx.w_grid(&args.w_grid, "1e2,1e3,1e4,1e5,1e6,1e7,1e8")?;
    let limit = ev.tauberian_limit();
    let rows = ts
        .par_iter()
        .map(|&t| Ok(vec![t, ev.tauberian_ratio(t)?, limit]))
        .collect::<Result<_>>()?;
    emit(
        &ctx,
        Table {
            command: "tauberian",
            columns: &["t", "ratio", "limit"],
            rows,
        },
        stdout,
    )
}

fn run_blyth(args: &BlythArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&args.common)?;
    let ev = ctx.evaluator()?;
    let is = pick(&args.i_list, &ctx.cfg.grids.i_list, "10,100,1000,10000")?;
    let rows = is
        .par_iter()
        .map(|&i| -> Result<Vec<f64>> {
            let seq = BlythSequence::new(args.kind, i).map_err(|e| Error::Config(e.to_string()))?;
            let p = bayes_risk_difference(&seq, &ev)?;
            Ok(vec![i, p.delta, p.bound])
        })
        .collect::<Result<_>>()?;
    emit(
        &ctx,
        Table {
            command: "blyth",
            columns: &["i", "delta_i", "bound"],
            rows,
        },
        stdout,
    )
}

/// Exit status for an error: 2 for numerical failures, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Runs one command line (including the program name) and returns the exit
/// status.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => run_classify(a, stdout),
        Command::Marginal(a) => run_marginal(a, stdout),
        Command::Estimate(a) => run_estimate(a, stdout),
        Command::Sure(a) => run_sure(a, stdout),
        Command::Dominate(a) => run_dominate(a, stdout),
        Command::Risk(a) => run_risk(a, stdout),
        Command::Tauberian(a) => run_tauberian(a, stdout),
        Command::Blyth(a) => run_blyth(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Caps the global thread pool at `STEINLAB_THREADS` when set.
pub fn configure_threads_from_env() -> io::Result<()> {
    if let Ok(v) = std::env::var("STEINLAB_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("STEINLAB_THREADS='{v}'"),
            )
        })?;
        // A pool that already exists keeps its size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}
