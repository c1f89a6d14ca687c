//! Command-line front end.
//!
//! Subcommands map onto the library: `bound` and `bound-ci` run the solvers,
//! `estimate` calibrates from data, `simulate` runs coverage studies, and
//! `app` reproduces the application studies. Output is JSON or CSV, written
//! to stdout or atomically to `--out`. Runs are deterministic: the same
//! flags and seed produce byte-identical output. The simulation subcommand
//! parallelizes across replications; cap its threads with the standard
//! `RAYON_NUM_THREADS` environment variable.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tailbound_core::objective::{
    make_constant, make_exp_utility, make_interval_indicator, make_newsvendor_shortfall,
    make_stop_loss,
};
use tailbound_core::{
    solve_interval, solve_point, to_interval_moment_params, IntervalParams, LineSearchConfig,
    ObjectiveSpec, SearchConfig, TailClass, TailParams,
};

use crate::applications::{
    coverage_study, entropic_risk_worst_case, pareto_ratio_heatmap, CoverageConfig,
    CoverageMethod, NewsvendorProblem,
};
use crate::dist::KnownDistribution;
use crate::estimation::{
    bootstrap_interval_params, suggest_threshold, CalibratedParams, KdeConfig,
};
use crate::io::{
    bound_report, coverage_csv, heatmap_csv, read_sample_csv, write_atomic, xy_csv,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "tailbound",
    version,
    about = "Worst-case bounds on tail expectations under a convex-density assumption"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Worst-case bound from exact tail parameters.
    Bound(BoundArgs),
    /// Worst-case bound from interval parameters, explicit or calibrated.
    BoundCi(BoundCiArgs),
    /// Calibrate interval parameters from a data file.
    Estimate(EstimateArgs),
    /// Coverage simulation against a known truth.
    Simulate(SimulateArgs),
    /// Application studies.
    #[command(subcommand)]
    App(AppCommand),
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Tail threshold.
    #[arg(long)]
    a: f64,
    /// Tail probability P(X > a).
    #[arg(long)]
    beta: f64,
    /// Density value f(a).
    #[arg(long)]
    eta: f64,
    /// Slope bound: f'(a) >= -nu.
    #[arg(long)]
    nu: f64,
    /// Objective spec: interval:c,d | stoploss:l,u,cap | exputility:theta |
    /// constant:k | newsvendor:p,q.
    #[arg(long)]
    objective: String,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundCiArgs {
    /// Tail threshold.
    #[arg(long)]
    a: f64,
    /// Objective spec, as for `bound`.
    #[arg(long)]
    objective: String,
    /// Joint confidence level is 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    beta_lo: Option<f64>,
    #[arg(long)]
    beta_hi: Option<f64>,
    #[arg(long)]
    eta_lo: Option<f64>,
    #[arg(long)]
    eta_hi: Option<f64>,
    #[arg(long)]
    nu_hi: Option<f64>,
    /// Calibrate the box from this single-column CSV instead of flags.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Bootstrap resamples for calibration.
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate the tail probability by the empirical survival function
    /// rather than kernel smoothing.
    #[arg(long)]
    ecdf_tail: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Single-column CSV of observations.
    #[arg(long)]
    data: PathBuf,
    /// Tail threshold.
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ecdf_tail: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Worstcase,
    Gpd,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// True distribution: exp:rate | lognormal:mu,sigma |
    /// lognormal-moments:mean,sd | pareto:index.
    #[arg(long)]
    truth: String,
    /// Sample size per replication.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Tail threshold.
    #[arg(long)]
    a: f64,
    /// Intervals to cover, e.g. 4:5,5:6,6:7.
    #[arg(long)]
    intervals: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold for the generalized Pareto baseline.
    #[arg(long, default_value_t = 1.8)]
    gpd_threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum AppCommand {
    /// Worst-case entropic risk across risk-aversion levels.
    Entropic(EntropicArgs),
    /// Robust newsvendor order quantity.
    Newsvendor(NewsvendorArgs),
    /// Conservatism ratios for Pareto(1) percentile cells.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
struct EntropicArgs {
    /// Demand distribution, known below the threshold.
    #[arg(long, default_value = "exp:1")]
    dist: String,
    /// Threshold as a percentile of the distribution.
    #[arg(long, conflicts_with = "a")]
    a_pct: Option<f64>,
    /// Threshold as a value.
    #[arg(long)]
    a: Option<f64>,
    /// Comma-separated risk-aversion levels.
    #[arg(long, default_value = "0.5,1,2,5,10")]
    theta: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NewsvendorArgs {
    #[arg(long, default_value = "lognormal-moments:50,20")]
    dist: String,
    #[arg(long, default_value_t = 0.7, conflicts_with = "a")]
    a_pct: f64,
    #[arg(long)]
    a: Option<f64>,
    /// Unit sale price.
    #[arg(long)]
    p: f64,
    /// Unit order cost.
    #[arg(long)]
    c: f64,
    /// Override the analytic tail probability at the threshold.
    #[arg(long, requires_all = ["eta", "nu"])]
    beta: Option<f64>,
    #[arg(long, requires_all = ["beta", "nu"])]
    eta: Option<f64>,
    #[arg(long, requires_all = ["beta", "eta"])]
    nu: Option<f64>,
    #[arg(long)]
    q_lo: Option<f64>,
    #[arg(long)]
    q_hi: Option<f64>,
    /// Also report the worst-case profit curve on this many grid points.
    #[arg(long)]
    curve: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    /// Threshold percentile of the Pareto(1) distribution.
    #[arg(long, default_value_t = 0.7)]
    a_pct: f64,
    /// Percentile cells, e.g. 0.85:0.86,0.98:0.99.
    #[arg(long)]
    cells: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    pub fn run(self) -> Result<()> {
        match self.command {
            Command::Bound(args) => cmd_bound(args),
            Command::BoundCi(args) => cmd_bound_ci(args),
            Command::Estimate(args) => cmd_estimate(args),
            Command::Simulate(args) => cmd_simulate(args),
            Command::App(AppCommand::Entropic(args)) => cmd_entropic(args),
            Command::App(AppCommand::Newsvendor(args)) => cmd_newsvendor(args),
            Command::App(AppCommand::Heatmap(args)) => cmd_heatmap(args),
        }
    }
}

/// Builds an objective from its `kind:args` spec string.
pub fn parse_objective(spec: &str, a: f64) -> Result<ObjectiveSpec> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = parse_numbers(rest)?;
    let arity_err = |want: usize| {
        Error::InvalidInput(format!(
            "objective {kind:?} takes {want} argument(s), got {} in {spec:?}",
            nums.len()
        ))
    };
    let obj = match kind {
        "interval" => match nums[..] {
            [c, d] => make_interval_indicator(a, c, d)?,
            _ => return Err(arity_err(2)),
        },
        "stoploss" => match nums[..] {
            [l, u, cap] => make_stop_loss(a, l, u, cap)?,
            _ => return Err(arity_err(3)),
        },
        "exputility" => match nums[..] {
            [theta] => make_exp_utility(a, theta)?,
            _ => return Err(arity_err(1)),
        },
        "constant" => match nums[..] {
            [k] => make_constant(k)?,
            _ => return Err(arity_err(1)),
        },
        "newsvendor" => match nums[..] {
            [p, q] => make_newsvendor_shortfall(a, p, q)?,
            _ => return Err(arity_err(2)),
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown objective {other:?}; expected interval, stoploss, \
                 exputility, constant, or newsvendor"
            )));
        }
    };
    Ok(obj)
}

/// Builds a distribution from its `family:params` spec string.
pub fn parse_distribution(spec: &str) -> Result<KnownDistribution> {
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = parse_numbers(rest)?;
    match (family, &nums[..]) {
        ("exp", [rate]) => KnownDistribution::exponential(*rate),
        ("lognormal", [mu, sigma]) => KnownDistribution::lognormal(*mu, *sigma),
        ("lognormal-moments", [mean, sd]) => {
            KnownDistribution::lognormal_from_moments(*mean, *sd)
        }
        ("pareto", [index]) => KnownDistribution::pareto(*index),
        _ => Err(Error::InvalidInput(format!(
            "unknown distribution {spec:?}; expected exp:rate, lognormal:mu,sigma, \
             lognormal-moments:mean,sd, or pareto:index"
        ))),
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("could not parse number {tok:?}")))
        })
        .collect()
}

/// Parses `c:d,c:d,...` interval lists.
pub fn parse_intervals(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| {
            let (c, d) = pair
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("interval {pair:?} is not c:d")))?;
            let c = c.trim().parse::<f64>();
            let d = d.trim().parse::<f64>();
            match (c, d) {
                (Ok(c), Ok(d)) => Ok((c, d)),
                _ => Err(Error::InvalidInput(format!("interval {pair:?} is not numeric"))),
            }
        })
        .collect()
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn infeasible_point(p: &TailParams) -> Error {
    Error::Infeasible(format!(
        "no convex tail density matches these parameters: eta^2 > 2*beta*nu \
         ({:e} > {:e}); shrink eta or enlarge beta or nu",
        p.eta * p.eta,
        2.0 * p.beta * p.nu
    ))
}

fn infeasible_box(ip: &IntervalParams) -> Error {
    Error::Infeasible(format!(
        "no convex tail density matches any parameters in the box: \
         eta_lo^2 > 2*beta_hi*nu_hi ({:e} > {:e})",
        ip.eta_lo * ip.eta_lo,
        2.0 * ip.beta_hi * ip.nu_hi
    ))
}

fn cmd_bound(args: BoundArgs) -> Result<()> {
    let params = TailParams::new(args.a, args.beta, args.eta, args.nu)?;
    let obj = parse_objective(&args.objective, args.a)?;
    let res = solve_point(&params, &obj, &LineSearchConfig::default())?;
    if res.tail_class == TailClass::Infeasible {
        return Err(infeasible_point(&params));
    }
    let report = bound_report(
        &res,
        json!({
            "a": args.a,
            "beta": args.beta,
            "eta": args.eta,
            "nu": args.nu,
            "objective": args.objective,
        }),
    );
    emit(&args.out, &to_json(&report))
}

fn calibration_json(cal: &CalibratedParams, seed: u64, bootstrap: usize) -> serde_json::Value {
    let p = &cal.params;
    json!({
        "box": {
            "beta_lo": p.beta_lo, "beta_hi": p.beta_hi,
            "eta_lo": p.eta_lo, "eta_hi": p.eta_hi,
            "nu_hi": p.nu_hi,
        },
        "point_estimates": {
            "beta": cal.beta_hat, "eta": cal.eta_hat, "nu": cal.nu_hat,
        },
        "bootstrap": bootstrap,
        "seed": seed,
        "warnings": cal.warnings,
    })
}

fn cmd_bound_ci(args: BoundCiArgs) -> Result<()> {
    let obj = parse_objective(&args.objective, args.a)?;
    let (ip, mut params_used) = if let Some(data) = &args.data {
        let sample = read_sample_csv(data)?;
        let cfg = KdeConfig { ecdf_tail: args.ecdf_tail, ..KdeConfig::default() };
        let cal = bootstrap_interval_params(
            &sample,
            args.a,
            args.alpha,
            args.bootstrap,
            &cfg,
            args.seed,
        )?;
        let used = json!({
            "a": args.a,
            "alpha": args.alpha,
            "source": data.display().to_string(),
            "calibration": calibration_json(&cal, args.seed, args.bootstrap),
        });
        (cal.params, used)
    } else {
        match (args.beta_lo, args.beta_hi, args.eta_lo, args.eta_hi, args.nu_hi) {
            (Some(beta_lo), Some(beta_hi), Some(eta_lo), Some(eta_hi), Some(nu_hi)) => {
                let ip = IntervalParams::new(
                    args.a, beta_lo, beta_hi, eta_lo, eta_hi, nu_hi, args.alpha,
                )?;
                let used = json!({
                    "a": args.a,
                    "alpha": args.alpha,
                    "box": {
                        "beta_lo": beta_lo, "beta_hi": beta_hi,
                        "eta_lo": eta_lo, "eta_hi": eta_hi, "nu_hi": nu_hi,
                    },
                });
                (ip, used)
            }
            _ => {
                return Err(Error::InvalidInput(
                    "give either --data or all of --beta-lo --beta-hi --eta-lo \
                     --eta-hi --nu-hi"
                        .into(),
                ));
            }
        }
    };
    let res = solve_interval(&ip, &obj, &SearchConfig::default())?;
    if res.tail_class == TailClass::Infeasible {
        return Err(infeasible_box(&ip));
    }
    if let Some(m) = &res.maximizer {
        let b = to_interval_moment_params(&ip);
        let winner = if m.omega == Some(b.mu_hi) {
            "fixed-mean-edge"
        } else if m.rho == Some(b.sigma_hi) {
            "fixed-second-moment-edge"
        } else {
            "interior"
        };
        params_used["winning_subproblem"] = json!(winner);
    }
    let report = bound_report(&res, params_used);
    emit(&args.out, &to_json(&report))
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let sample = read_sample_csv(&args.data)?;
    let cfg = KdeConfig { ecdf_tail: args.ecdf_tail, ..KdeConfig::default() };
    let cal = bootstrap_interval_params(
        &sample,
        args.a,
        args.alpha,
        args.bootstrap,
        &cfg,
        args.seed,
    )?;
    let mut warnings = cal.warnings.clone();
    let suggestion = match suggest_threshold(&sample, &cfg) {
        Ok(s) => json!({ "threshold": s.threshold, "points_above": s.points_above }),
        Err(e) => {
            warnings.push(format!("threshold suggestion unavailable: {e}"));
            serde_json::Value::Null
        }
    };
    let p = &cal.params;
    let report = json!({
        "a": args.a,
        "alpha": args.alpha,
        "per_parameter_level": 1.0 - args.alpha / 3.0,
        "bootstrap": args.bootstrap,
        "seed": args.seed,
        "n": sample.n(),
        "beta": { "point": cal.beta_hat, "lo": p.beta_lo, "hi": p.beta_hi },
        "eta": { "point": cal.eta_hat, "lo": p.eta_lo, "hi": p.eta_hi },
        "nu": { "point": cal.nu_hat, "hi": p.nu_hi },
        "suggested_threshold": suggestion,
        "warnings": warnings,
        "version": env!("CARGO_PKG_VERSION"),
    });
    emit(&args.out, &to_json(&report))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = CoverageConfig {
        replications: args.reps,
        sample_size: args.n,
        truth: parse_distribution(&args.truth)?,
        a: args.a,
        intervals: parse_intervals(&args.intervals)?,
        alpha: args.alpha,
        bootstrap: args.bootstrap,
        seed: args.seed,
        gpd_threshold: args.gpd_threshold,
    };
    let method = match args.method {
        MethodArg::Worstcase => CoverageMethod::WorstCase,
        MethodArg::Gpd => CoverageMethod::Gpd,
    };
    let rows = coverage_study(&cfg, method)?;
    emit(&args.out, &coverage_csv(&rows))
}

fn resolve_threshold(dist: &KnownDistribution, a: Option<f64>, a_pct: Option<f64>) -> Result<f64> {
    match (a, a_pct) {
        (Some(a), _) => Ok(a),
        (None, Some(p)) => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "threshold percentile must lie in (0,1), got {p}"
                )));
            }
            Ok(dist.quantile(p))
        }
        (None, None) => Err(Error::InvalidInput("give --a or --a-pct".into())),
    }
}

fn cmd_entropic(args: EntropicArgs) -> Result<()> {
    let dist = parse_distribution(&args.dist)?;
    let a = resolve_threshold(&dist, args.a, args.a_pct)?;
    let thetas = parse_numbers(&args.theta)?;
    if thetas.is_empty() {
        return Err(Error::InvalidInput("no theta values given".into()));
    }
    let mut rows = Vec::with_capacity(thetas.len());
    for theta in thetas {
        rows.push((theta, entropic_risk_worst_case(&dist, a, theta)?));
    }
    emit(&args.out, &xy_csv("theta", "value", &rows))
}

fn cmd_newsvendor(args: NewsvendorArgs) -> Result<()> {
    let dist = parse_distribution(&args.dist)?;
    let a = resolve_threshold(&dist, args.a, Some(args.a_pct))?;
    let tail = match (args.beta, args.eta, args.nu) {
        (Some(beta), Some(eta), Some(nu)) => Some(TailParams::new(a, beta, eta, nu)?),
        (None, None, None) => None,
        _ => unreachable!("clap enforces all-or-none overrides"),
    };
    let q_range = match (args.q_lo, args.q_hi) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(dist.quantile(0.95)))),
    };
    let problem = NewsvendorProblem {
        demand: dist,
        a,
        price: args.p,
        cost: args.c,
        q_range,
        tail,
    };
    let sol = problem.solve()?;
    let curve = match args.curve {
        Some(points) if points >= 2 => {
            let (lo, hi) = q_range.unwrap_or((0.0, problem.demand.quantile(0.95)));
            let mut rows = Vec::with_capacity(points);
            for k in 0..points {
                let q = lo + (hi - lo) * k as f64 / (points - 1) as f64;
                rows.push(json!([q, problem.inner_value(q)?]));
            }
            serde_json::Value::Array(rows)
        }
        Some(_) => return Err(Error::InvalidInput("--curve needs at least 2 points".into())),
        None => serde_json::Value::Null,
    };
    let report = json!({
        "a": a,
        "price": args.p,
        "cost": args.c,
        "q_star": sol.q_star,
        "value": sol.value,
        "curve": curve,
        "version": env!("CARGO_PKG_VERSION"),
    });
    emit(&args.out, &to_json(&report))
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<()> {
    let cells = parse_intervals(&args.cells)?;
    let rows = pareto_ratio_heatmap(args.a_pct, &cells)?;
    emit(&args.out, &heatmap_csv(&rows))
}

/// Entry point used by the binary; split from `main` so integration tests
/// can drive parsing.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses exit code 2 for usage errors; this tool reserves 2
            // for infeasibility, so usage problems exit 1.
            let is_usage = e.use_stderr();
            let _ = e.print();
            return if is_usage { 1 } else { 0 };
        }
    };
    match cli.run() {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_specs_parse_and_reject() {
        assert!(parse_objective("interval:4,5", 3.1).is_ok());
        assert!(parse_objective("stoploss:1,2,1", 0.5).is_ok());
        assert!(parse_objective("exputility:0.5", 0.0).is_ok());
        assert!(parse_objective("constant:1", 0.0).is_ok());
        assert!(parse_objective("newsvendor:7,55", 50.0).is_ok());
        assert!(parse_objective("interval:4", 3.1).is_err());
        assert!(parse_objective("interval:4,x", 3.1).is_err());
        assert!(parse_objective("mystery:1", 0.0).is_err());
    }

    #[test]
    fn distribution_specs_parse_and_reject() {
        assert!(parse_distribution("exp:1").is_ok());
        assert!(parse_distribution("lognormal:0,0.5").is_ok());
        assert!(parse_distribution("lognormal-moments:50,20").is_ok());
        assert!(parse_distribution("pareto:1").is_ok());
        assert!(parse_distribution("exp").is_err());
        assert!(parse_distribution("cauchy:1").is_err());
    }

    #[test]
    fn interval_lists_parse() {
        assert_eq!(parse_intervals("4:5,6:7").unwrap(), vec![(4.0, 5.0), (6.0, 7.0)]);
        assert!(parse_intervals("4-5").is_err());
        assert!(parse_intervals("4:x").is_err());
    }
}
