//! Command-line surface: argument parsing, dispatch, and report output.
//!
//! Every command writes a JSON report (to `--report` or stdout) carrying
//! `schema_version`. Curves go to CSV. Exit status is 0 on success, 1 for
//! input errors and 2 for numerical failures.

mod ingest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

pub use ingest::{ingest_csv, parse_csv};

use crate::constrained::{optimize_changepoints, DEFAULT_CHANGEPOINT_CELLS};
use crate::design::SampleSet;
use crate::error::{Error, Result};
use crate::inflection::{false_inflection_localization, monte_carlo_inflections, sign_change_locations, Scenario};
use crate::kernels::{build_extended_kernel, equivalent_spline_kernel, KernelSpec};
use crate::numeric::linspace;
use crate::pilot::{run_pilot, PilotOptions, DEFAULT_IOTA_SCALE};
use crate::smoother::{exact_sd_curve, gcv_bandwidth_default, gm_estimate, interior_grid};
use crate::spline::{default_lambda_candidates, gcv_lambda_with, SplineProblem};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "SHAPEFIT_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(name = "shapefit", version, about = "Shape-constrained smoothing and inflection diagnostics")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate an extended or spline-equivalent kernel.
    Kernel(KernelArgs),
    /// Fit a kernel or spline estimate to CSV data.
    Fit(FitArgs),
    /// Run the two-stage constrained estimator.
    Pilot(PilotArgs),
    /// Count sign changes of derivative estimates on synthetic data.
    Simulate(SimulateArgs),
}

/// A fixed value or `gcv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning {
    Gcv,
    Value(f64),
}

impl FromStr for Tuning {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("gcv") {
            return Ok(Tuning::Gcv);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Tuning::Value(v)),
            _ => Err(format!("expected a positive number or 'gcv', got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Outputs {
    /// Curve CSV path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report JSON path (stdout when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Long-format `series,t,value` CSV for plotting.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Derivative order of the extended kernel.
    #[arg(long, default_value_t = 0)]
    pub ell: usize,
    /// Tabulate the spline-equivalent kernel of this penalty order instead.
    #[arg(long)]
    pub spline_m: Option<usize>,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Kernel,
    Spline,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FitMethod::Spline)]
    pub method: FitMethod,
    /// Kernel method: derivative estimated. Spline method with
    /// `--changepoints`: derivative whose sign pattern is constrained.
    #[arg(long, default_value_t = 0)]
    pub ell: usize,
    #[arg(long, default_value = "gcv")]
    pub halfwidth: Tuning,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value = "gcv")]
    pub lambda: Tuning,
    /// Spline method: derivative written to the curve CSV.
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
    /// Spline method: fit with this many sign changes of `f^{(ell)}`,
    /// placed by grid search.
    #[arg(long)]
    pub changepoints: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CHANGEPOINT_CELLS)]
    pub changepoint_cells: usize,
    #[arg(long, default_value_t = 501)]
    pub grid_points: usize,
    /// Kernel method: evaluate near the ends, flagging those points.
    #[arg(long)]
    pub allow_boundary: bool,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Args)]
pub struct PilotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub ell: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_IOTA_SCALE)]
    pub iota_scale: f64,
    #[arg(long, default_value_t = 501)]
    pub grid_points: usize,
    /// Accepted for symmetry with `simulate`; the pipeline draws no random numbers.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also report the fraction of replicates with a sign change farther
    /// than this from every true inflection point.
    #[arg(long)]
    pub delta: Option<f64>,
    /// CSV of `replicate,location` for every detected sign change.
    #[arg(long)]
    pub locations: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parses arguments, runs the command, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(&config),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

/// Runs a parsed configuration, honouring `SHAPEFIT_THREADS`.
pub fn run(config: &RunConfig) -> i32 {
    let outcome = match thread_limit() {
        Ok(Some(threads)) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {threads} workers: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&config.command))),
        Ok(None) => dispatch(&config.command),
        Err(e) => Err(e),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::invalid(format!("{THREADS_VAR} must be a positive integer, got '{v}'"))),
        },
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Kernel(a) => kernel_command(a),
        Command::Fit(a) => fit_command(a),
        Command::Pilot(a) => pilot_command(a),
        Command::Simulate(a) => simulate_command(a),
    }
}

fn write_report(path: Option<&Path>, command: &str, body: Value) -> Result<()> {
    let mut report = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, body) {
        dst.extend(src);
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv output: {other:?}")),
    }
}

/// Long-format plot data: `(series, t, value)`.
struct PlotData(Vec<(String, f64, f64)>);

impl PlotData {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn series(&mut self, name: &str, ts: &[f64], values: &[f64]) {
        self.0.extend(ts.iter().zip(values).map(|(t, v)| (name.to_string(), *t, *v)));
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["series", "t", "value"]).map_err(csv_error)?;
        for (s, t, v) in &self.0 {
            w.write_record([s.clone(), t.to_string(), v.to_string()]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn kernel_command(a: &KernelArgs) -> Result<()> {
    if a.points < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    let kernel: KernelSpec = match a.spline_m {
        Some(0) => return Err(Error::invalid("spline penalty order must be at least 1")),
        Some(m) => equivalent_spline_kernel(m),
        None => build_extended_kernel(a.ell),
    };
    let (lo, hi) = kernel.support().unwrap_or((-8.0, 8.0));
    let s = linspace(lo, hi, a.points);
    let cols: Vec<Vec<f64>> = (0..3).map(|d| s.iter().map(|&x| kernel.evaluate(x, d)).collect()).collect();
    if let Some(path) = &a.outputs.output {
        write_csv(
            path,
            &["s", "value", "d1", "d2"],
            (0..s.len()).map(|i| vec![s[i], cols[0][i], cols[1][i], cols[2][i]]),
        )?;
    }
    if let Some(path) = &a.outputs.emit_plot_data {
        let mut plot = PlotData::new();
        for (name, c) in ["kernel", "d1", "d2"].iter().zip(&cols) {
            plot.series(name, &s, c);
        }
        plot.write(path)?;
    }
    let moment_count = match a.spline_m {
        Some(m) => 2 * m + 1,
        None => a.ell + 2,
    };
    let ell = kernel.ell();
    write_report(
        a.outputs.report.as_deref(),
        "kernel",
        json!({
            "family": if a.spline_m.is_some() { "spline_equivalent" } else { "extended" },
            "ell": ell,
            "m": a.spline_m,
            "support": kernel.support().map(|(l, h)| [l, h]),
            "moments": (0..moment_count).map(|j| kernel.moment(j)).collect::<Vec<_>>(),
            "norm": kernel.estimator_norm(ell),
            "derivative_norm": kernel.estimator_norm(ell + 1),
        }),
    )
}

fn fit_command(a: &FitArgs) -> Result<()> {
    if a.grid_points < 2 {
        return Err(Error::invalid("need at least two grid points"));
    }
    match a.method {
        FitMethod::Kernel => fit_kernel(a),
        FitMethod::Spline => fit_spline_command(a),
    }
}

fn fit_kernel(a: &FitArgs) -> Result<()> {
    let samples = ingest_csv(&a.input, 2)?;
    let (h, gcv) = match a.halfwidth {
        Tuning::Value(h) => (h, None),
        Tuning::Gcv => {
            let sel = gcv_bandwidth_default(&samples)?;
            (sel.value, Some(sel.score))
        }
    };
    if h >= 0.5 {
        return Err(Error::invalid(format!("halfwidth {h} must be below 1/2")));
    }
    let kernel = build_extended_kernel(a.ell);
    let grid = if a.allow_boundary {
        linspace(0.0, 1.0, a.grid_points)
    } else {
        let g = interior_grid(0.0, 1.0, h, 8);
        linspace(g[0], g[g.len() - 1], a.grid_points)
    };
    let curve = gm_estimate(&samples, &kernel, h, &grid, a.allow_boundary)?;
    let sd = exact_sd_curve(&samples, &kernel, h, &grid)?;
    if let Some(path) = &a.outputs.output {
        write_csv(
            path,
            &["t", "value", "sd"],
            (0..grid.len()).map(|i| vec![grid[i], curve.values[i], sd[i]]),
        )?;
    }
    if let Some(path) = &a.outputs.emit_plot_data {
        let mut plot = PlotData::new();
        plot.series("data", samples.t(), samples.y());
        plot.series("estimate", &grid, &curve.values);
        plot.write(path)?;
    }
    let crossings = sign_change_locations(&grid, &curve.values, None);
    write_report(
        a.outputs.report.as_deref(),
        "fit",
        json!({
            "method": "kernel",
            "n": samples.len(),
            "ell": a.ell,
            "halfwidth": h,
            "halfwidth_source": if gcv.is_some() { "gcv" } else { "fixed" },
            "gcv_score": gcv,
            "boundary_points": curve.boundary.iter().filter(|b| **b).count(),
            "sign_changes": crossings,
        }),
    )
}

fn fit_spline_command(a: &FitArgs) -> Result<()> {
    let samples = ingest_csv(&a.input, 2 * a.m)?;
    if a.deriv + 2 > 2 * a.m {
        return Err(Error::invalid(format!("derivative {} of an order-{} spline is not continuous", a.deriv, a.m)));
    }
    let problem = SplineProblem::new(&samples, a.m)?;
    let (lambda, gcv) = match a.lambda {
        Tuning::Value(l) => (l, None),
        Tuning::Gcv => {
            let sel = gcv_lambda_with(&problem, samples.y(), &default_lambda_candidates(&samples, a.m))?;
            (sel.value, Some(sel.score))
        }
    };
    let grid = linspace(0.0, 1.0, a.grid_points);
    let mut body = json!({
        "method": "spline",
        "n": samples.len(),
        "m": a.m,
        "lambda": lambda,
        "lambda_source": if gcv.is_some() { "gcv" } else { "fixed" },
        "gcv_score": gcv,
    });
    let (values, sd, ell_values): (Vec<f64>, Option<Vec<f64>>, Vec<f64>) = match a.changepoints {
        None => {
            let chol = problem.factor(lambda)?;
            let model = problem.fit(samples.y(), lambda)?;
            let sd = grid
                .iter()
                .map(|&t| {
                    problem
                        .green_weights(&chol, t, a.deriv)
                        .iter()
                        .zip(samples.sigma())
                        .map(|(w, s)| (w * s).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            body["hat_trace"] = json!(model.hat_trace());
            body["equivalent_halfwidth_at_half"] = json!(model.equivalent_halfwidth(&samples, 0.5)?);
            let values = grid.iter().map(|&t| model.evaluate(t, a.deriv)).collect();
            let ell_values = grid.iter().map(|&t| model.evaluate(t, a.ell)).collect();
            (values, Some(sd), ell_values)
        }
        Some(k) => {
            let (partition, fit) = optimize_changepoints(&samples, a.m, lambda, a.ell, k, a.changepoint_cells)?;
            body["ell"] = json!(a.ell);
            body["change_points"] = json!(partition.change_points());
            body["leading_sign"] = json!(partition.leading_sign());
            body["objective"] = json!(fit.primal_value());
            body["duality_gap"] = json!(fit.duality_gap());
            body["kkt_residual"] = json!(fit.kkt_residual());
            body["active_constraints"] = json!(fit.active_points().len());
            let values = grid.iter().map(|&t| fit.evaluate(t, a.deriv)).collect();
            let ell_values = grid.iter().map(|&t| fit.evaluate(t, a.ell)).collect();
            (values, None, ell_values)
        }
    };
    body["deriv"] = json!(a.deriv);
    body["sign_changes_of_derivative"] = json!({
        "order": a.ell,
        "locations": sign_change_locations(&grid, &ell_values, None),
    });
    if let Some(path) = &a.outputs.output {
        match &sd {
            Some(sd) => write_csv(
                path,
                &["t", "value", "sd"],
                (0..grid.len()).map(|i| vec![grid[i], values[i], sd[i]]),
            )?,
            None => write_csv(path, &["t", "value"], (0..grid.len()).map(|i| vec![grid[i], values[i]]))?,
        }
    }
    if let Some(path) = &a.outputs.emit_plot_data {
        let mut plot = PlotData::new();
        plot.series("data", samples.t(), samples.y());
        plot.series("fit", &grid, &values);
        plot.series("derivative", &grid, &ell_values);
        plot.write(path)?;
    }
    write_report(a.outputs.report.as_deref(), "fit", body)
}

#[derive(Serialize)]
struct StageSummary {
    h_gcv: f64,
    iota: f64,
    h_n: f64,
    crossings: Vec<f64>,
}

fn pilot_command(a: &PilotArgs) -> Result<()> {
    let samples: SampleSet = ingest_csv(&a.input, 2 * a.m)?;
    if a.grid_points < 2 {
        return Err(Error::invalid("need at least two grid points"));
    }
    let mut options = PilotOptions::new(a.ell, a.m);
    options.alpha = a.alpha;
    options.iota_scale = a.iota_scale;
    let run = run_pilot(&samples, &options)?;
    let grid = linspace(0.0, 1.0, a.grid_points);
    let fit = &run.second.fit;
    let values: Vec<f64> = grid.iter().map(|&t| fit.evaluate(t, 0)).collect();
    if let Some(path) = &a.outputs.output {
        write_csv(path, &["t", "value"], (0..grid.len()).map(|i| vec![grid[i], values[i]]))?;
    }
    if let Some(path) = &a.outputs.emit_plot_data {
        let mut plot = PlotData::new();
        plot.series("data", samples.t(), samples.y());
        plot.series("first_stage_ell", &run.first.curve_ell.grid, &run.first.curve_ell.values);
        plot.series("first_stage_ell_plus_1", &run.first.curve_ell_plus_1.grid, &run.first.curve_ell_plus_1.values);
        plot.series("final", &grid, &values);
        let deriv: Vec<f64> = grid.iter().map(|&t| fit.evaluate(t, a.ell)).collect();
        plot.series("final_ell", &grid, &deriv);
        plot.write(path)?;
    }
    write_report(
        a.outputs.report.as_deref(),
        "pilot",
        json!({
            "n": samples.len(),
            "ell": a.ell,
            "m": a.m,
            "alpha": a.alpha,
            "seed": a.seed,
            "first_stage": StageSummary {
                h_gcv: run.first.h_gcv,
                iota: run.first.iota,
                h_n: run.first.h_n,
                crossings: run.first.crossings.crossing_locations.clone(),
            },
            "intervals": run.intervals,
            "plan": run.plan,
            "second_stage": {
                "lambda_gcv": run.second.lambda,
                "final_crossings": run.second.final_crossings,
                "matches_k_hat": run.second.matches_k_hat,
                "objective": fit.primal_value(),
                "duality_gap": fit.duality_gap(),
                "kkt_residual": fit.kkt_residual(),
                "active_constraints": fit.active_points().len(),
            },
        }),
    )
}

fn simulate_command(a: &SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.scenario)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", a.scenario.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("scenario {}: {e}", a.scenario.display())))?;
    let report = monte_carlo_inflections(&scenario, a.replicates, a.seed)?;
    let mut body = serde_json::to_value(&report)?;
    if let Some(delta) = a.delta {
        let loc = false_inflection_localization(&scenario, a.replicates, delta, a.seed)?;
        body["localization"] = json!({ "delta": delta, "far_replicates": loc.far_replicates, "fraction": loc.fraction });
    }
    if let Some(path) = &a.locations {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["replicate", "location"]).map_err(csv_error)?;
        for (i, locs) in report.crossing_locations.iter().enumerate() {
            for x in locs {
                w.write_record([i.to_string(), x.to_string()]).map_err(csv_error)?;
            }
        }
        w.flush()?;
    }
    write_report(a.report.as_deref(), "simulate", body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuning_parses() {
        assert_eq!("gcv".parse::<Tuning>().unwrap(), Tuning::Gcv);
        assert_eq!("GCV".parse::<Tuning>().unwrap(), Tuning::Gcv);
        assert_eq!("0.1".parse::<Tuning>().unwrap(), Tuning::Value(0.1));
        assert!("-1".parse::<Tuning>().is_err());
        assert!("x".parse::<Tuning>().is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::invalid("x")), 1);
        assert_eq!(exit_code(&Error::numerical("x")), 2);
        assert_eq!(main_with_args(["shapefit", "fit"]), 1);
    }
}
