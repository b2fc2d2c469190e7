//! Monte Carlo measurement of sign changes in derivative estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expected_false_inflections, sign_change_locations, ExcessSetting, NormForm, DEFAULT_TOL_FRACTION};
use crate::design::{DesignInfo, LimitDistribution, SampleSet};
use crate::error::{Error, Result};
use crate::functions::{InflectionPoint, TruthFunction};
use crate::kernels::{build_extended_kernel, equivalent_spline_kernel};
use crate::numeric::{linspace, CompensatedSum};
use crate::smoother::{interior_grid, KernelSmoother, SmootherRow};
use crate::spline::SplineProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Method {
    /// Gap-weighted kernel estimate with a fixed halfwidth.
    Kernel { halfwidth: f64 },
    /// Derivative of the smoothing spline of order `m`.
    Spline { m: usize, lambda: f64 },
}

/// A synthetic regression problem `y_i = f(t_i) + σ ε_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub function: TruthFunction,
    pub n: usize,
    pub sigma: f64,
    pub ell: usize,
    pub method: Method,
    /// Sign changes are counted on this subinterval.
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    #[serde(default)]
    pub design: LimitDistribution,
    #[serde(default = "default_per_halfwidth")]
    pub grid_per_halfwidth: usize,
    #[serde(default = "default_tol_fraction")]
    pub tol_fraction: f64,
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_per_halfwidth() -> usize {
    8
}

fn default_tol_fraction() -> f64 {
    DEFAULT_TOL_FRACTION
}

impl Scenario {
    pub fn new(function: TruthFunction, n: usize, sigma: f64, ell: usize, method: Method) -> Self {
        Self {
            function,
            n,
            sigma,
            ell,
            method,
            interval: unit_interval(),
            design: LimitDistribution::Uniform,
            grid_per_halfwidth: default_per_halfwidth(),
            tol_fraction: default_tol_fraction(),
        }
    }

    pub fn on_interval(mut self, a: f64, b: f64) -> Self {
        self.interval = [a, b];
        self
    }

    fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::invalid(format!("interval [{a}, {b}] must lie inside [0, 1]")));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if self.grid_per_halfwidth == 0 || !(self.tol_fraction >= 0.0) {
            return Err(Error::invalid("grid density must be positive and tolerance nonnegative"));
        }
        match self.method {
            Method::Kernel { halfwidth } if !(halfwidth > 0.0 && halfwidth < 0.5) => Err(
                Error::invalid(format!("halfwidth must lie in (0, 1/2), got {halfwidth}")),
            ),
            Method::Spline { m, lambda } if m == 0 || !(lambda > 0.0) => {
                Err(Error::invalid("spline needs m ≥ 1 and λ > 0"))
            }
            Method::Spline { m, .. } if self.ell + 2 > 2 * m => Err(Error::invalid(format!(
                "derivative {} of a spline with m = {m} is not continuous",
                self.ell
            ))),
            _ if self.n < 4 => Err(Error::invalid("at least four observations required")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scenario: Scenario,
    pub replicates: usize,
    pub seed: u64,
    pub empirical_mean: f64,
    pub se: f64,
    /// `K + 2 Σ H(z_j)`.
    pub predicted: f64,
    pub predicted_excess: f64,
    /// The same prediction with the unsquared-norm argument.
    pub predicted_unsquared: f64,
    pub true_count: usize,
    pub true_inflections: Vec<InflectionPoint>,
    pub per_point_z: Vec<f64>,
    pub per_replicate_counts: Vec<usize>,
    /// Violated or unverifiable conditions of the prediction.
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub crossing_locations: Vec<Vec<f64>>,
}

struct Prepared {
    design: DesignInfo,
    mean: Vec<f64>,
    rows: Vec<SmootherRow>,
    grid: Vec<f64>,
    truth: Vec<InflectionPoint>,
    warnings: Vec<String>,
}

fn prepare(scenario: &Scenario) -> Result<Prepared> {
    scenario.validate()?;
    let design = DesignInfo::quantiles(scenario.n, scenario.design);
    let mean: Vec<f64> = design
        .points()
        .iter()
        .map(|&t| scenario.function.eval(t, 0))
        .collect();
    let [a, b] = scenario.interval;
    let per = scenario.grid_per_halfwidth;
    let mut warnings = Vec::new();
    let (grid, rows) = match scenario.method {
        Method::Kernel { halfwidth } => {
            let kernel = build_extended_kernel(scenario.ell);
            let grid = interior_grid(a, b, halfwidth, per);
            if grid.is_empty() {
                return Err(Error::invalid("no interior evaluation points for this halfwidth"));
            }
            if a < halfwidth || b > 1.0 - halfwidth {
                warnings.push(format!(
                    "counting interval truncated to [{:.4}, {:.4}] to keep kernel windows inside [0, 1]",
                    grid[0],
                    grid[grid.len() - 1]
                ));
            }
            let smoother = KernelSmoother::new(design.points(), design.gap_weights(), &kernel, halfwidth)?;
            let rows = grid.iter().map(|&t| smoother.row(t, 0)).collect();
            (grid, rows)
        }
        Method::Spline { m, lambda } => {
            let sigma = noise_weight(scenario.sigma);
            let samples = SampleSet::with_common_sigma(design.clone(), mean.clone(), sigma)?;
            let problem = SplineProblem::new(&samples, m)?;
            let chol = problem.factor(lambda)?;
            let h = spline_halfwidth(scenario, m, lambda, 0.5 * (a + b))?;
            let count = (((b - a) / (h / per as f64)).ceil() as usize + 1).max(2);
            let grid = linspace(a, b, count);
            let rows = grid
                .par_iter()
                .map(|&t| SmootherRow {
                    start: 0,
                    weights: problem.green_weights(&chol, t, scenario.ell),
                })
                .collect();
            (grid, rows)
        }
    };
    let truth = scenario.function.inflection_points(scenario.ell, a, b)?;
    check_hypotheses(scenario, &design, &truth, &mut warnings);
    Ok(Prepared {
        design,
        mean,
        rows,
        grid,
        truth,
        warnings,
    })
}

/// Noise-free scenarios weight the spline objective as if `σ = 1`.
fn noise_weight(sigma: f64) -> f64 {
    if sigma > 0.0 {
        sigma
    } else {
        1.0
    }
}

fn spline_halfwidth(scenario: &Scenario, m: usize, lambda: f64, t: f64) -> Result<f64> {
    let s = noise_weight(scenario.sigma);
    let density = scenario.design.density(t);
    if !(density > 0.0) {
        return Err(Error::invalid(format!("design density vanishes at {t}")));
    }
    Ok((lambda * s * s / (2.0 * density)).powf(1.0 / (2 * m) as f64))
}

fn check_hypotheses(scenario: &Scenario, design: &DesignInfo, truth: &[InflectionPoint], warnings: &mut Vec<String>) {
    let [a, b] = scenario.interval;
    let f = &scenario.function;
    let ell = scenario.ell;
    let scale = (0..=200)
        .map(|i| f.eval(a + (b - a) * i as f64 / 200.0, ell).abs())
        .fold(0.0, f64::max);
    for end in [a, b] {
        if f.eval(end, ell).abs() <= 1e-8 * scale {
            warnings.push(format!("derivative {ell} of f vanishes at the interval end {end}"));
        }
    }
    for p in truth {
        if p.slope.abs() <= 1e-8 * scale {
            warnings.push(format!("derivative {} of f vanishes at the inflection point {}", ell + 1, p.x));
        }
    }
    let dn = design.empirical_discrepancy();
    if dn >= (scenario.n as f64).powf(-0.5) {
        warnings.push(format!("design discrepancy {dn:.3e} is not below n^(-1/2)"));
    }
}

fn predict(scenario: &Scenario, prep: &Prepared, form: NormForm) -> Result<(f64, Vec<f64>)> {
    if prep.truth.iter().any(|p| p.slope == 0.0) {
        return Ok((f64::NAN, Vec::new()));
    }
    match scenario.method {
        Method::Kernel { halfwidth } => {
            let kernel = build_extended_kernel(scenario.ell);
            let setting = ExcessSetting::kernel(&kernel, scenario.n, halfwidth, scenario.sigma).with_form(form);
            let p = expected_false_inflections(&prep.truth, &prep.design, &setting)?;
            Ok((p.excess, p.z))
        }
        Method::Spline { m, lambda } => {
            let kernel = equivalent_spline_kernel(m);
            let mut excess = 0.0;
            let mut z = Vec::new();
            for p in &prep.truth {
                let setting = ExcessSetting {
                    kernel: &kernel,
                    ell: scenario.ell,
                    n: scenario.n,
                    halfwidth: spline_halfwidth(scenario, m, lambda, p.x)?,
                    sigma: scenario.sigma,
                    form,
                };
                let one = expected_false_inflections(std::slice::from_ref(p), &prep.design, &setting)?;
                excess += one.excess;
                z.extend(one.z);
            }
            Ok((excess, z))
        }
    }
}

/// Replicate `index` draws its noise from ChaCha stream `index` of `seed`.
fn replicate(scenario: &Scenario, prep: &Prepared, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let y: Vec<f64> = prep
        .mean
        .iter()
        .map(|f| {
            let e: f64 = StandardNormal.sample(&mut rng);
            f + scenario.sigma * e
        })
        .collect();
    let values: Vec<f64> = prep.rows.iter().map(|r| r.apply(&y)).collect();
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    sign_change_locations(&prep.grid, &values, Some(scenario.tol_fraction * peak))
}

fn run_replicates(scenario: &Scenario, prep: &Prepared, replicates: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| replicate(scenario, prep, seed, i))
        .collect()
}

/// Mean and standard error, accumulated in replicate order.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mut sum = CompensatedSum::new();
    values.iter().for_each(|v| sum.add(*v));
    let mean = sum.value() / r;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let mut ss = CompensatedSum::new();
    values.iter().for_each(|v| ss.add((v - mean).powi(2)));
    (mean, (ss.value() / (r - 1.0) / r).sqrt())
}

/// Simulates `replicates` data sets, counts sign changes of the estimated
/// `f^{(ℓ)}` on the scenario interval, and compares the mean count with
/// `K + 2 Σ H(z_j)`.
pub fn monte_carlo_inflections(scenario: &Scenario, replicates: usize, seed: u64) -> Result<SimulationReport> {
    if replicates == 0 {
        return Err(Error::invalid("at least one replicate required"));
    }
    let prep = prepare(scenario)?;
    let (excess, z) = predict(scenario, &prep, NormForm::Squared)?;
    let (excess_unsquared, _) = predict(scenario, &prep, NormForm::Unsquared)?;
    let locations = run_replicates(scenario, &prep, replicates, seed);
    let counts: Vec<usize> = locations.iter().map(Vec::len).collect();
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (empirical_mean, se) = mean_and_se(&as_f64);
    let k = prep.truth.len() as f64;
    Ok(SimulationReport {
        scenario: scenario.clone(),
        replicates,
        seed,
        empirical_mean,
        se,
        predicted: k + excess,
        predicted_excess: excess,
        predicted_unsquared: k + excess_unsquared,
        true_count: prep.truth.len(),
        true_inflections: prep.truth,
        per_point_z: z,
        per_replicate_counts: counts,
        warnings: prep.warnings,
        crossing_locations: locations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub replicates: usize,
    pub delta: f64,
    /// Replicates with a sign change farther than `delta` from every true
    /// inflection point.
    pub far_replicates: usize,
    pub fraction: f64,
    pub warnings: Vec<String>,
}

/// Fraction of replicates with a spurious sign change more than `delta`
/// away from all true inflection points.
pub fn false_inflection_localization(
    scenario: &Scenario,
    replicates: usize,
    delta: f64,
    seed: u64,
) -> Result<LocalizationReport> {
    if replicates == 0 || !(delta >= 0.0) {
        return Err(Error::invalid("need replicates > 0 and delta ≥ 0"));
    }
    let prep = prepare(scenario)?;
    let locations = run_replicates(scenario, &prep, replicates, seed);
    let far_replicates = locations
        .iter()
        .filter(|locs| {
            locs.iter()
                .any(|x| prep.truth.iter().all(|p| (x - p.x).abs() > delta))
        })
        .count();
    Ok(LocalizationReport {
        replicates,
        delta,
        far_replicates,
        fraction: far_replicates as f64 / replicates as f64,
        warnings: prep.warnings,
    })
}
