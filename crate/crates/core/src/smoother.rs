//! Kernel estimates of `f^{(ℓ)}` with gap weights, their variance, and
//! bandwidth selection by generalized cross-validation.
//!
//! The estimator is
//!
//! ```text
//! f̂^{(ℓ)}(t) = h^{-(ℓ+1)} Σ_i y_i κ((t_i - t)/h) (t_{i+1} - t_{i-1})/2
//! ```
//!
//! with `t_0 := t_1`, `t_{n+1} := t_n`. Evaluation points whose window
//! `[t - h, t + h]` leaves `[0, 1]` are rejected unless explicitly allowed.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::SampleSet;
use crate::error::{Error, Result};
use crate::kernels::{build_extended_kernel, KernelSpec};
use crate::numeric::logspace;

const WINDOW_SLACK: f64 = 1e-12;

/// Estimated `f^{(ℓ)}` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub ell: usize,
    pub halfwidth: f64,
    /// `true` where the kernel window leaves `[0, 1]`.
    pub boundary: Vec<bool>,
}

impl DerivativeCurve {
    /// Linear interpolation of the curve at `t` (clamped to the grid range).
    pub fn value_at(&self, t: f64) -> f64 {
        crate::numeric::interpolate(&self.grid, &self.values, t)
    }
}

/// A linear smoother row: `estimate = Σ_k weights[k] · y[start + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherRow {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl SmootherRow {
    pub fn apply(&self, y: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&y[self.start..])
            .map(|(w, v)| w * v)
            .sum()
    }
}

fn window_exits(t: f64, h: f64) -> bool {
    t - h < -WINDOW_SLACK || t + h > 1.0 + WINDOW_SLACK
}

/// The gap-weighted kernel smoother over a fixed design.
#[derive(Debug, Clone)]
pub struct KernelSmoother<'a> {
    points: &'a [f64],
    gaps: Vec<f64>,
    kernel: &'a KernelSpec,
    halfwidth: f64,
}

impl<'a> KernelSmoother<'a> {
    pub fn new(points: &'a [f64], gaps: Vec<f64>, kernel: &'a KernelSpec, halfwidth: f64) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(Error::invalid(format!("halfwidth must be positive, got {halfwidth}")));
        }
        if kernel.support().is_none() {
            return Err(Error::invalid("kernel smoother needs a compactly supported kernel"));
        }
        Ok(Self {
            points,
            gaps,
            kernel,
            halfwidth,
        })
    }

    /// Weights of `f̂^{(ℓ + deriv)}(t)`, i.e. of the `deriv`-th derivative in
    /// `t` of the order-`ℓ` estimate.
    pub fn row(&self, t: f64, deriv: usize) -> SmootherRow {
        let h = self.halfwidth;
        let start = self.points.partition_point(|&p| p < t - h);
        let end = self.points.partition_point(|&p| p <= t + h);
        let scale = h.powi(-(self.kernel.ell() as i32 + 1 + deriv as i32));
        // d/dt κ((t_i - t)/h) = -κ'((t_i - t)/h)/h
        let sign = if deriv % 2 == 1 { -1.0 } else { 1.0 };
        let weights = (start..end)
            .map(|i| {
                sign * scale * self.kernel.evaluate((self.points[i] - t) / h, deriv) * self.gaps[i]
            })
            .collect();
        SmootherRow { start, weights }
    }
}

/// Kernel estimate of `f^{(ℓ)}` on `grid`, `ℓ = kernel.ell()`.
pub fn gm_estimate(
    samples: &SampleSet,
    kernel: &KernelSpec,
    h: f64,
    grid: &[f64],
    allow_boundary: bool,
) -> Result<DerivativeCurve> {
    gm_estimate_derivative(samples, kernel, h, grid, 0, allow_boundary)
}

/// Like [`gm_estimate`], but differentiates the estimate `deriv` times in `t`.
pub fn gm_estimate_derivative(
    samples: &SampleSet,
    kernel: &KernelSpec,
    h: f64,
    grid: &[f64],
    deriv: usize,
    allow_boundary: bool,
) -> Result<DerivativeCurve> {
    let gaps = samples.design().gap_weights();
    let smoother = KernelSmoother::new(samples.t(), gaps, kernel, h)?;
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "evaluation grid must be strictly increasing near {}",
            w[0]
        )));
    }
    let mut boundary = Vec::with_capacity(grid.len());
    for &t in grid {
        let exits = window_exits(t, h);
        if exits && !allow_boundary {
            return Err(Error::Boundary {
                t,
                lo: t - h,
                hi: t + h,
            });
        }
        boundary.push(exits);
    }
    let values = grid
        .iter()
        .map(|&t| smoother.row(t, deriv).apply(samples.y()))
        .collect();
    Ok(DerivativeCurve {
        grid: grid.to_vec(),
        values,
        ell: kernel.ell() + deriv,
        halfwidth: h,
        boundary,
    })
}

/// Interior evaluation grid over `[a, b] ∩ [h, 1 - h]` with `per_halfwidth`
/// points per halfwidth.
pub fn interior_grid(a: f64, b: f64, h: f64, per_halfwidth: usize) -> Vec<f64> {
    let lo = a.max(h);
    let hi = b.min(1.0 - h);
    if hi <= lo {
        return Vec::new();
    }
    let step = h / per_halfwidth as f64;
    let count = ((hi - lo) / step).ceil() as usize + 1;
    crate::numeric::linspace(lo, hi, count.max(2))
}

/// Limiting standard deviation of `f̂^{(ℓ)}(s)`:
/// `σ² ‖κ‖² / (n h^{2ℓ+1} F'(s))`, with `σ` the noise level of the design
/// point nearest `s`.
pub fn asymptotic_sd_curve(samples: &SampleSet, kernel: &KernelSpec, h: f64, grid: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len() as f64;
    let ell = kernel.ell();
    let norm = kernel.estimator_norm(ell);
    grid.iter()
        .map(|&s| {
            let density = samples.design().design_density(s)?;
            let sigma = nearest_sigma(samples, s);
            Ok((sigma * sigma * norm * norm / (n * h.powi(2 * ell as i32 + 1) * density)).sqrt())
        })
        .collect()
}

/// Exact finite-sample standard deviation `(Σ_i σ_i² w_i(s)²)^{1/2}` of the
/// estimator at each grid point.
pub fn exact_sd_curve(samples: &SampleSet, kernel: &KernelSpec, h: f64, grid: &[f64]) -> Result<Vec<f64>> {
    let gaps = samples.design().gap_weights();
    let smoother = KernelSmoother::new(samples.t(), gaps, kernel, h)?;
    Ok(grid
        .iter()
        .map(|&s| {
            let row = smoother.row(s, 0);
            row.weights
                .iter()
                .zip(&samples.sigma()[row.start..])
                .map(|(w, sd)| (w * sd).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

pub(crate) fn nearest_sigma(samples: &SampleSet, s: f64) -> f64 {
    let t = samples.t();
    let j = t.partition_point(|&p| p < s);
    let idx = if j == 0 {
        0
    } else if j >= t.len() {
        t.len() - 1
    } else if (t[j] - s) < (s - t[j - 1]) {
        j
    } else {
        j - 1
    };
    samples.sigma()[idx]
}

/// Outcome of a GCV search over a candidate grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcvSelection {
    /// Selected candidate.
    pub value: f64,
    /// Its GCV score.
    pub score: f64,
    /// `(candidate, score)`; `None` for degenerate candidates.
    pub scores: Vec<(f64, Option<f64>)>,
}

pub(crate) fn select_minimum(scores: Vec<(f64, Option<f64>)>) -> Result<GcvSelection> {
    let mut best: Option<(f64, f64)> = None;
    for &(c, s) in &scores {
        if let Some(s) = s {
            if best.map_or(true, |(_, b)| s < b) {
                best = Some((c, s));
            }
        }
    }
    let (value, score) = best.ok_or_else(|| Error::numerical("every GCV candidate is degenerate"))?;
    Ok(GcvSelection {
        value,
        score,
        scores,
    })
}

/// GCV score `n ‖(I - A)y‖² / tr(I - A)²` of the order-0 smoother at the
/// design points, or `None` when `tr(I - A)` vanishes.
///
/// Rows are renormalized to sum to one, which is the interior smoother up to
/// quadrature error and keeps boundary rows usable.
pub fn gcv_score_bandwidth(samples: &SampleSet, kernel: &KernelSpec, h: f64) -> Result<Option<f64>> {
    if kernel.ell() != 0 {
        return Err(Error::invalid("bandwidth GCV uses the order-0 kernel"));
    }
    let t = samples.t();
    let y = samples.y();
    let gaps = samples.design().gap_weights();
    let smoother = KernelSmoother::new(t, gaps, kernel, h)?;
    let n = t.len();
    let mut rss = 0.0;
    let mut trace = 0.0;
    for i in 0..n {
        let row = smoother.row(t[i], 0);
        let mass: f64 = row.weights.iter().sum();
        if mass <= 0.0 {
            return Ok(None);
        }
        let fit = row.apply(y) / mass;
        rss += (y[i] - fit).powi(2);
        trace += row.weights[i - row.start] / mass;
    }
    let resid_df = n as f64 - trace;
    if resid_df <= 1e-9 * n as f64 {
        return Ok(None);
    }
    Ok(Some(n as f64 * rss / (resid_df * resid_df)))
}

/// Bandwidth minimizing the GCV score over `candidates`.
pub fn gcv_bandwidth(samples: &SampleSet, kernel: &KernelSpec, candidates: &[f64]) -> Result<GcvSelection> {
    if candidates.is_empty() || candidates.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid("bandwidth candidates must be positive and nonempty"));
    }
    let scores = candidates
        .par_iter()
        .map(|&h| gcv_score_bandwidth(samples, kernel, h).map(|s| (h, s)))
        .collect::<Result<Vec<_>>>()?;
    select_minimum(scores)
}

/// Default halfwidth candidates: 30 log-spaced values in `[min(4/n, 0.1), 0.3]`.
pub fn default_bandwidth_candidates(n: usize) -> Vec<f64> {
    logspace((4.0 / n as f64).min(0.1), 0.3, 30)
}

/// Convenience: GCV bandwidth with the order-0 extended kernel.
pub fn gcv_bandwidth_default(samples: &SampleSet) -> Result<GcvSelection> {
    let k0 = build_extended_kernel(0);
    gcv_bandwidth(samples, &k0, &default_bandwidth_candidates(samples.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignInfo;

    fn samples(n: usize, f: impl Fn(f64) -> f64) -> SampleSet {
        let d = DesignInfo::regular(n);
        let y = d.points().iter().map(|&t| f(t)).collect();
        SampleSet::with_common_sigma(d, y, 1.0).unwrap()
    }

    #[test]
    fn reproduces_constants_lines_and_parabolas() {
        let k0 = build_extended_kernel(0);
        let k1 = build_extended_kernel(1);
        let k2 = build_extended_kernel(2);
        let grid = [0.3, 0.5, 0.7];
        let c = gm_estimate(&samples(400, |_| 3.0), &k0, 0.1, &grid, false).unwrap();
        assert!(c.values.iter().all(|v| (v - 3.0).abs() < 1e-3));
        let line = gm_estimate(&samples(1000, |t| t), &k1, 0.1, &grid, false).unwrap();
        assert!(line.values.iter().all(|v| (v - 1.0).abs() < 1e-2));
        let par = gm_estimate(&samples(1000, |t| t * t), &k2, 0.1, &grid, false).unwrap();
        assert!(par.values.iter().all(|v| (v - 2.0).abs() < 1e-2), "{:?}", par.values);
    }

    #[test]
    fn estimate_matches_brute_force_sum() {
        let s = samples(300, |t| (5.0 * t).sin());
        let k = build_extended_kernel(1);
        let h = 0.12;
        let t = s.t();
        let n = t.len();
        let at = 0.41;
        let mut brute = 0.0;
        for i in 0..n {
            let prev = if i == 0 { t[0] } else { t[i - 1] };
            let next = if i == n - 1 { t[n - 1] } else { t[i + 1] };
            brute += s.y()[i] * k.evaluate((t[i] - at) / h, 0) * (next - prev) / 2.0;
        }
        brute /= h * h;
        let est = gm_estimate(&s, &k, h, &[at], false).unwrap();
        assert!((est.values[0] - brute).abs() < 1e-12);
    }

    #[test]
    fn polynomial_reproduction_at_large_n() {
        for ell in 0..3 {
            let k = build_extended_kernel(ell);
            for j in 0..ell + 2 {
                let s = samples(10_000, |t| t.powi(j as i32));
                let at = 0.55;
                let est = gm_estimate(&s, &k, 0.1, &[at], false).unwrap().values[0];
                let truth = if j < ell {
                    0.0
                } else {
                    let falling: f64 = ((j - ell + 1)..=j).map(|v| v as f64).product();
                    falling * at.powi((j - ell) as i32)
                };
                assert!((est - truth).abs() < 1e-2, "ell={ell} j={j} est={est}");
            }
        }
    }

    #[test]
    fn reversal_symmetry_on_regular_design() {
        let n = 500;
        let s = samples(n, |t| (3.0 * t).exp() * (7.0 * t).cos());
        let mut y_rev = s.y().to_vec();
        y_rev.reverse();
        let rev = s.with_responses(y_rev).unwrap();
        for ell in 0..3 {
            let k = build_extended_kernel(ell);
            let grid = [0.2, 0.37, 0.5, 0.66];
            let mirrored: Vec<f64> = grid.iter().rev().map(|t| 1.0 - t).collect();
            let a = gm_estimate(&s, &k, 0.15, &grid, false).unwrap();
            let b = gm_estimate(&rev, &k, 0.15, &mirrored, false).unwrap();
            let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
            for (x, y) in a.values.iter().zip(b.values.iter().rev()) {
                assert!((x - sign * y).abs() < 1e-6 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn boundary_windows_are_rejected_or_flagged() {
        let s = samples(100, |t| t);
        let k = build_extended_kernel(0);
        assert!(matches!(
            gm_estimate(&s, &k, 0.2, &[0.1, 0.5], false),
            Err(Error::Boundary { .. })
        ));
        let c = gm_estimate(&s, &k, 0.2, &[0.1, 0.5], true).unwrap();
        assert_eq!(c.boundary, vec![true, false]);
    }

    #[test]
    fn asymptotic_variance_matches_finite_sum() {
        let s = samples(10_000, |_| 0.0);
        for ell in 0..3 {
            let k = build_extended_kernel(ell);
            let grid = [0.3, 0.5];
            let asym = asymptotic_sd_curve(&s, &k, 0.1, &grid).unwrap();
            let exact = exact_sd_curve(&s, &k, 0.1, &grid).unwrap();
            for (a, e) in asym.iter().zip(&exact) {
                assert!((a * a / (e * e) - 1.0).abs() < 0.05);
            }
        }
        let k0 = build_extended_kernel(0);
        let a = asymptotic_sd_curve(&s, &k0, 0.1, &[0.5]).unwrap()[0];
        let norm = k0.deriv_norm(0);
        assert!((a * a - norm * norm / (10_000.0 * 0.1)).abs() < 1e-15);
        let half = asymptotic_sd_curve(&samples(20_000, |_| 0.0), &k0, 0.1, &[0.5]).unwrap()[0];
        assert!((a * a / (half * half) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gcv_score_shift_invariant() {
        let s = samples(200, |t| (6.0 * t).sin());
        let shifted = s.with_responses(s.y().iter().map(|v| v + 5.0).collect()).unwrap();
        let k0 = build_extended_kernel(0);
        for h in [0.05, 0.1, 0.2] {
            let a = gcv_score_bandwidth(&s, &k0, h).unwrap().unwrap();
            let b = gcv_score_bandwidth(&shifted, &k0, h).unwrap().unwrap();
            assert!(((a - b) / a).abs() < 1e-6);
        }
    }

    #[test]
    fn gcv_rejects_derivative_kernels() {
        let s = samples(50, |t| t);
        assert!(gcv_bandwidth(&s, &build_extended_kernel(1), &[0.1]).is_err());
    }
}
