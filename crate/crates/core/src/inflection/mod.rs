//! Sign changes of derivative estimates and their expected number.
//!
//! An estimate of `f^{(ℓ)}` typically crosses zero near every true
//! `ℓ`-inflection point `x_j`, plus a random number of extra times nearby.
//! For a Gaussian error process with derivative standard deviation
//! `γ_n(x_j)`, the expected excess is `2 Σ_j H(z_j)` with
//! `z_j = |f^{(ℓ+1)}(x_j)| / γ_n(x_j)` and `H(z) = φ(z)/z + Φ(z) - 1`.

mod simulation;

pub use simulation::{
    false_inflection_localization, monte_carlo_inflections, LocalizationReport, Method, Scenario,
    SimulationReport,
};

use serde::{Deserialize, Serialize};

use crate::design::DesignInfo;
use crate::error::{Error, Result};
use crate::functions::InflectionPoint;
use crate::kernels::KernelSpec;
use crate::numeric::{integrate_adaptive, normal_cdf, normal_pdf, normal_sf};
use crate::smoother::DerivativeCurve;

/// Fraction of `max |values|` below which values count as zero.
pub const DEFAULT_TOL_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflectionReport {
    pub crossing_count: usize,
    pub crossing_locations: Vec<f64>,
    pub predicted_excess: f64,
    pub per_point_z: Vec<f64>,
}

/// Counts sign changes of `curve`. With `tol = None` values below
/// `1e-3 · max |values|` are treated as zero.
pub fn count_sign_changes(curve: &DerivativeCurve, tol: Option<f64>) -> InflectionReport {
    let crossing_locations = sign_change_locations(&curve.grid, &curve.values, tol);
    InflectionReport {
        crossing_count: crossing_locations.len(),
        crossing_locations,
        predicted_excess: 0.0,
        per_point_z: Vec::new(),
    }
}

/// Locations of strict sign changes of tabulated values.
///
/// Values with `|v| < tol` are set to zero first; a run of zeros between
/// opposite signs counts as one change, placed by linear interpolation
/// between the bracketing nonzero values.
pub fn sign_change_locations(grid: &[f64], values: &[f64], tol: Option<f64>) -> Vec<f64> {
    debug_assert_eq!(grid.len(), values.len());
    let tol = tol.unwrap_or_else(|| {
        DEFAULT_TOL_FRACTION * values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    });
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&t, &v) in grid.iter().zip(values) {
        if v.abs() < tol || v == 0.0 {
            continue;
        }
        if let Some((t0, v0)) = last {
            if (v0 < 0.0) != (v < 0.0) {
                out.push(t0 + (t - t0) * v0 / (v0 - v));
            }
        }
        last = Some((t, v));
    }
    out
}

/// `H(z) = φ(z)/z + Φ(z) - 1` for `z > 0`.
///
/// For `z ≥ 3` the difference is formed from the continued fraction of the
/// Mills ratio so the result keeps full relative precision far in the tail.
pub fn h_function(z: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::invalid(format!("H(z) requires z > 0, got {z}")));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z < 3.0 {
        return Ok(normal_pdf(z) / z - normal_sf(z));
    }
    // 1/R(z) = z + c with c = 1/(z + 2/(z + 3/(z + ...))), so
    // 1/z - R(z) = c / (z (z + c)).
    let mut tail = 0.0;
    for k in (2..=80).rev() {
        tail = k as f64 / (z + tail);
    }
    let c = 1.0 / (z + tail);
    Ok(normal_pdf(z) * c / (z * (z + c)))
}

/// How the derivative-kernel norm enters the argument of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormForm {
    /// `z² = n h^{2ℓ+3} f^{(ℓ+1)}² F′ / (σ² ‖κ^{(ℓ+1)}‖²)`: the signal to
    /// noise ratio of the derivative estimate.
    #[default]
    Squared,
    /// The norm enters unsquared and `F′` divides:
    /// `z² = n h^{2ℓ+3} f^{(ℓ+1)}² / (σ² ‖κ^{(ℓ+1)}‖ F′)`.
    Unsquared,
}

/// Estimator parameters entering the excess prediction.
#[derive(Debug, Clone, Copy)]
pub struct ExcessSetting<'a> {
    pub kernel: &'a KernelSpec,
    /// Order of the derivative whose sign changes are counted.
    pub ell: usize,
    pub n: usize,
    pub halfwidth: f64,
    pub sigma: f64,
    pub form: NormForm,
}

impl<'a> ExcessSetting<'a> {
    /// Kernel estimate of `f^{(ℓ)}` with `ℓ = kernel.ell()`.
    pub fn kernel(kernel: &'a KernelSpec, n: usize, halfwidth: f64, sigma: f64) -> Self {
        Self {
            kernel,
            ell: kernel.ell(),
            n,
            halfwidth,
            sigma,
            form: NormForm::Squared,
        }
    }

    pub fn with_form(mut self, form: NormForm) -> Self {
        self.form = form;
        self
    }

    /// Argument of `H` at a point with slope `f^{(ℓ+1)}` and density `F′`.
    pub fn argument(&self, slope: f64, density: f64) -> f64 {
        let norm = self.kernel.estimator_norm(self.ell + 1);
        let scale = self.n as f64 * self.halfwidth.powi(2 * self.ell as i32 + 3) * slope * slope;
        let s2 = self.sigma * self.sigma;
        match self.form {
            NormForm::Squared => (scale * density / (s2 * norm * norm)).sqrt(),
            NormForm::Unsquared => (scale / (s2 * norm * density)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcessPrediction {
    /// `2 Σ_j H(z_j)`.
    pub excess: f64,
    pub z: Vec<f64>,
}

/// Expected number of sign changes beyond the true ones.
pub fn expected_false_inflections(
    points: &[InflectionPoint],
    design: &DesignInfo,
    setting: &ExcessSetting<'_>,
) -> Result<ExcessPrediction> {
    if !(setting.halfwidth > 0.0) || setting.n == 0 || setting.sigma < 0.0 {
        return Err(Error::invalid("halfwidth and n must be positive, sigma nonnegative"));
    }
    let mut z = Vec::with_capacity(points.len());
    let mut excess = 0.0;
    for p in points {
        if p.slope == 0.0 || !p.slope.is_finite() {
            return Err(Error::invalid(format!(
                "slope at inflection point {} must be finite and nonzero",
                p.x
            )));
        }
        let density = design.design_density(p.x)?;
        let zj = setting.argument(p.slope, density);
        excess += 2.0 * h_function(zj)?;
        z.push(zj);
    }
    Ok(ExcessPrediction { excess, z })
}

type Profile = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pointwise moments of a differentiable Gaussian process `Z` on `[a, b]`.
pub struct ProcessStats {
    /// `m(s) = E Z(s)`.
    pub mean: Profile,
    /// `m′(s)`.
    pub mean_deriv: Profile,
    /// `σ(s)`, standard deviation of `Z(s)`.
    pub sd: Profile,
    /// `γ(s)`, standard deviation of `Z′(s)`.
    pub deriv_sd: Profile,
    /// `μ(s) = Corr[Z(s), Z′(s)]`.
    pub corr: Profile,
    pub interval: (f64, f64),
}

impl ProcessStats {
    /// Zero-mean stationary process with constant `σ` and `γ`.
    pub fn stationary(sd: f64, deriv_sd: f64, a: f64, b: f64) -> Self {
        Self {
            mean: Box::new(|_| 0.0),
            mean_deriv: Box::new(|_| 0.0),
            sd: Box::new(move |_| sd),
            deriv_sd: Box::new(move |_| deriv_sd),
            corr: Box::new(|_| 0.0),
            interval: (a, b),
        }
    }

    /// Expected zero crossings per unit length at `s`, or `None` where the
    /// moments are out of range.
    pub fn crossing_rate(&self, s: f64) -> Option<f64> {
        let sigma = (self.sd)(s);
        let gamma = (self.deriv_sd)(s);
        let mu = (self.corr)(s);
        if !(sigma > 0.0 && gamma > 0.0 && mu.abs() < 1.0) {
            return None;
        }
        let rho = (1.0 - mu * mu).sqrt();
        let m = (self.mean)(s);
        let eta = ((self.mean_deriv)(s) - gamma * mu * m / sigma) / (gamma * rho);
        Some(gamma * rho / sigma * normal_pdf(m / sigma) * crossing_factor(eta))
    }
}

/// `G(η) = E|η + N(0,1)| = 2φ(η) + η(2Φ(η) - 1)`.
pub fn crossing_factor(eta: f64) -> f64 {
    2.0 * normal_pdf(eta) + eta * (2.0 * normal_cdf(eta) - 1.0)
}

/// Expected number of zeros of the process on its interval,
/// `∫ (γρ/σ) φ(m/σ) G(η) ds` with `η = (m′ - γμm/σ)/(γρ)`.
pub fn cramer_leadbetter_count(stats: &ProcessStats) -> Result<f64> {
    let (a, b) = stats.interval;
    if !(a < b) {
        return Err(Error::invalid(format!("empty interval [{a}, {b}]")));
    }
    integrate_adaptive(
        |s| stats.crossing_rate(s).unwrap_or(f64::NAN),
        a,
        b,
        1e-14,
        1e-12,
    )
}
