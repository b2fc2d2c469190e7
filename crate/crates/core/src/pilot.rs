//! Two-stage estimation of a piecewise `ℓ`-convex function.
//!
//! The first stage oversmooths kernel estimates of `f^{(ℓ)}` and
//! `f^{(ℓ+1)}` to locate the sign changes of `f^{(ℓ)}` and their
//! uncertainty. Overlapping uncertainty intervals are merged and turned into
//! sign constraints, and the second stage fits a constrained smoothing
//! spline at the GCV smoothing parameter.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constrained::{default_constraint_grid, region_constraints, ConeSolver, ConstrainedFit, QpOptions, Sign, SignRegion};
use crate::design::SampleSet;
use crate::error::{Error, Result};
use crate::inflection::{count_sign_changes, sign_change_locations, InflectionReport};
use crate::kernels::build_extended_kernel;
use crate::numeric::{linspace, two_sided_quantile};
use crate::smoother::{default_bandwidth_candidates, gcv_bandwidth, gm_estimate, interior_grid, nearest_sigma, DerivativeCurve};
use crate::spline::{default_lambda_candidates, gcv_lambda_with, SplineModel, SplineProblem};

/// Default multiplier `c` in `ι(n) = c · ln²(n) · n^{1/(2ℓ+3) - 1/(2m+1)}`.
pub const DEFAULT_IOTA_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotOptions {
    pub ell: usize,
    pub m: usize,
    pub alpha: f64,
    pub iota_scale: f64,
    pub grid_per_halfwidth: usize,
    /// Kernel GCV candidates; defaults to [`default_bandwidth_candidates`].
    pub bandwidth_candidates: Option<Vec<f64>>,
    /// Spline GCV candidates; defaults to [`default_lambda_candidates`].
    pub lambda_candidates: Option<Vec<f64>>,
    /// Constraint grid cells; defaults to `max(200, ⌈10√n⌉)`.
    pub constraint_cells: Option<usize>,
}

impl PilotOptions {
    pub fn new(ell: usize, m: usize) -> Self {
        Self {
            ell,
            m,
            alpha: 0.05,
            iota_scale: DEFAULT_IOTA_SCALE,
            grid_per_halfwidth: 8,
            bandwidth_candidates: None,
            lambda_candidates: None,
            constraint_cells: None,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.m < self.ell + 1 {
            return Err(Error::invalid(format!(
                "penalty order m = {} cannot constrain derivative {}",
                self.m,
                self.ell + 1
            )));
        }
        if n < 2 * self.m {
            return Err(Error::invalid(format!("need at least {} observations, got {n}", 2 * self.m)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.iota_scale > 0.0) || self.grid_per_halfwidth == 0 {
            return Err(Error::invalid("iota scale and grid density must be positive"));
        }
        Ok(())
    }
}

/// `ι(n) = scale · ln²(n) · n^{1/(2ℓ+3) - 1/(2m+1)}`.
pub fn iota(n: f64, ell: usize, m: usize, scale: f64) -> f64 {
    let exponent = 1.0 / (2 * ell + 3) as f64 - 1.0 / (2 * m + 1) as f64;
    scale * n.ln().powi(2) * n.powf(exponent)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstStage {
    pub curve_ell: DerivativeCurve,
    pub curve_ell_plus_1: DerivativeCurve,
    pub h_gcv: f64,
    pub iota: f64,
    pub h_n: f64,
    pub crossings: InflectionReport,
}

/// Kernel estimates of `f^{(ℓ)}` and `f^{(ℓ+1)}` at `h_n = ι(n) h_GCV`.
pub fn first_stage(samples: &SampleSet, options: &PilotOptions) -> Result<FirstStage> {
    let n = samples.len();
    options.validate(n)?;
    let candidates = options
        .bandwidth_candidates
        .clone()
        .unwrap_or_else(|| default_bandwidth_candidates(n));
    let h_gcv = gcv_bandwidth(samples, &build_extended_kernel(0), &candidates)?.value;
    let iota = iota(n as f64, options.ell, options.m, options.iota_scale);
    let h_n = iota * h_gcv;
    if h_n >= 0.25 {
        return Err(Error::invalid(format!(
            "first-stage halfwidth {h_n:.4} = {iota:.3} × {h_gcv:.4} is not below 1/4; more data or a smaller iota scale is needed"
        )));
    }
    if h_n <= samples.design().max_gap() {
        return Err(Error::invalid(format!(
            "first-stage halfwidth {h_n:.3e} does not exceed the largest design gap"
        )));
    }
    let grid = interior_grid(0.0, 1.0, h_n, options.grid_per_halfwidth);
    let curve_ell = gm_estimate(samples, &build_extended_kernel(options.ell), h_n, &grid, false)?;
    let curve_ell_plus_1 = gm_estimate(samples, &build_extended_kernel(options.ell + 1), h_n, &grid, false)?;
    let crossings = count_sign_changes(&curve_ell, None);
    Ok(FirstStage {
        curve_ell,
        curve_ell_plus_1,
        h_gcv,
        iota,
        h_n,
        crossings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyInterval {
    pub center: f64,
    /// `σ̂(x̂_j)`; infinite when the estimated slope vanishes.
    pub sd: f64,
    pub alpha: f64,
    /// Estimated `f^{(ℓ+1)}(x̂_j)`.
    pub slope: f64,
    pub lo: f64,
    pub hi: f64,
}

/// `x̂_j ± z_α σ̂(x̂_j)` with
/// `σ̂² = σ² ‖κ‖² / (F′ |f̂^{(ℓ+1)}(x̂_j)|² n h^{2ℓ+1})`, clipped to `[0, 1]`.
pub fn uncertainty_intervals(first: &FirstStage, samples: &SampleSet, alpha: f64) -> Result<Vec<UncertaintyInterval>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let ell = first.curve_ell.ell;
    let norm = build_extended_kernel(ell).estimator_norm(ell);
    let z = two_sided_quantile(alpha);
    let n = samples.len() as f64;
    let h = first.h_n;
    first
        .crossings
        .crossing_locations
        .iter()
        .map(|&x| {
            let slope = first.curve_ell_plus_1.value_at(x);
            let density = samples.design().design_density(x)?;
            let sigma = nearest_sigma(samples, x);
            let var = sigma * sigma * norm * norm / (density * slope * slope * n * h.powi(2 * ell as i32 + 1));
            let sd = var.sqrt();
            let (lo, hi) = if sd.is_finite() && sd > 0.0 {
                ((x - z * sd).max(0.0), (x + z * sd).min(1.0))
            } else {
                (0.0, 1.0)
            };
            Ok(UncertaintyInterval {
                center: x,
                sd: if sd.is_finite() { sd } else { f64::INFINITY },
                alpha,
                slope,
                lo,
                hi,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// Between clusters: `f^{(ℓ)}` keeps the pilot's sign.
    Outer,
    /// A single interval: `f^{(ℓ+1)}` keeps one sign.
    Isolated,
    /// An even number of overlapping intervals: `f^{(ℓ)}` keeps one sign.
    Even,
    /// An odd number of overlapping intervals: `f^{(ℓ+1)}` keeps one sign
    /// on a subregion holding an even number of sign changes of `f̂^{(ℓ+1)}`.
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanRegion {
    pub lo: f64,
    pub hi: f64,
    pub deriv: usize,
    pub sign: Sign,
    pub kind: RegionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Indices into the interval list.
    pub members: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    pub kind: RegionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintPlan {
    pub ell: usize,
    pub regions: Vec<PlanRegion>,
    pub clusters: Vec<Cluster>,
    /// Sign changes of `f^{(ℓ)}` implied by the plan.
    pub k_hat: usize,
    pub warnings: Vec<String>,
}

impl ConstraintPlan {
    /// A plan imposing nothing.
    pub fn unconstrained(ell: usize) -> Self {
        Self {
            ell,
            regions: Vec::new(),
            clusters: Vec::new(),
            k_hat: 0,
            warnings: Vec::new(),
        }
    }

    pub fn sign_regions(&self) -> Vec<SignRegion> {
        self.regions
            .iter()
            .map(|r| SignRegion {
                lo: r.lo,
                hi: r.hi,
                deriv: r.deriv,
                sign: r.sign.value(),
            })
            .collect()
    }
}

/// Sign of the largest-magnitude value of `curve` strictly inside `(lo, hi)`.
fn dominant_sign(curve: &DerivativeCurve, lo: f64, hi: f64, tol: f64) -> Option<Sign> {
    curve
        .grid
        .iter()
        .zip(&curve.values)
        .filter(|(t, v)| **t > lo && **t < hi && v.abs() >= tol)
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(_, v)| Sign::of(*v))
}

/// Shrinks `[lo, hi]` symmetrically until it holds an even number of the
/// given crossing locations.
fn even_subregion(lo: f64, hi: f64, crossings: &[f64]) -> (f64, f64) {
    let mut depths: Vec<f64> = crossings
        .iter()
        .filter(|&&x| x > lo && x < hi)
        .map(|&x| (x - lo).min(hi - x))
        .collect();
    depths.sort_by(f64::total_cmp);
    let mid = 0.5 * (lo + hi);
    let mut delta = 0.0;
    let mut inside = depths.len();
    let mut i = 0;
    while inside % 2 == 1 {
        delta = depths[i];
        while i < depths.len() && depths[i] <= delta {
            i += 1;
        }
        inside = depths.len() - i;
    }
    ((lo + delta).min(mid), (hi - delta).max(mid))
}

/// Merges transitively overlapping intervals and assigns sign constraints.
///
/// Outer regions carry the sign of `f̂^{(ℓ)}` left of the first crossing,
/// flipped across every cluster of odd size. A region whose observed sign
/// disagrees with that sequence is reported and left unconstrained.
pub fn resolve_overlaps(
    intervals: &[UncertaintyInterval],
    curve_ell: &DerivativeCurve,
    curve_ell_plus_1: &DerivativeCurve,
) -> ConstraintPlan {
    let ell = curve_ell.ell;
    // Sweeping in order of left end chains every overlap, including wide
    // intervals that reach back past earlier centers.
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| {
        intervals[a]
            .lo
            .total_cmp(&intervals[b].lo)
            .then(intervals[a].center.total_cmp(&intervals[b].center))
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for &i in &order {
        let iv = intervals[i];
        match clusters.last_mut() {
            Some(c) if iv.lo <= c.hi => {
                c.members.push(i);
                c.hi = c.hi.max(iv.hi);
                c.lo = c.lo.min(iv.lo);
            }
            _ => clusters.push(Cluster {
                members: vec![i],
                lo: iv.lo,
                hi: iv.hi,
                kind: RegionKind::Isolated,
            }),
        }
    }
    for c in &mut clusters {
        c.members.sort_by(|&a, &b| intervals[a].center.total_cmp(&intervals[b].center));
        c.kind = match c.members.len() {
            1 => RegionKind::Isolated,
            s if s % 2 == 0 => RegionKind::Even,
            _ => RegionKind::Odd,
        };
    }

    let peak = curve_ell.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tol = crate::inflection::DEFAULT_TOL_FRACTION * peak;
    let mut warnings = Vec::new();
    let first_edge = clusters.first().map_or(1.0, |c| c.lo);
    let left_sign = curve_ell
        .values
        .iter()
        .zip(&curve_ell.grid)
        .find(|(v, t)| v.abs() >= tol || **t >= first_edge)
        .filter(|(v, _)| v.abs() >= tol)
        .map(|(v, _)| Sign::of(*v));
    let Some(left_sign) = left_sign else {
        warnings.push("pilot estimate has no discernible sign; no constraints imposed".into());
        return ConstraintPlan {
            ell,
            regions: Vec::new(),
            clusters,
            k_hat: 0,
            warnings,
        };
    };

    let crossings_next = sign_change_locations(&curve_ell_plus_1.grid, &curve_ell_plus_1.values, None);
    let mut regions = Vec::new();
    let mut sign = left_sign;
    let mut k_hat = 0;
    let mut gap_lo = 0.0;
    for c in clusters.iter() {
        push_outer(&mut regions, &mut warnings, curve_ell, tol, gap_lo, c.lo, sign, ell);
        let flips = c.members.len() % 2 == 1;
        let after = if flips { sign.flip() } else { sign };
        match c.kind {
            RegionKind::Even => regions.push(PlanRegion {
                lo: c.lo,
                hi: c.hi,
                deriv: ell,
                sign,
                kind: RegionKind::Even,
            }),
            RegionKind::Isolated | RegionKind::Odd => {
                let (lo, hi) = if c.kind == RegionKind::Odd {
                    even_subregion(c.lo, c.hi, &crossings_next)
                } else {
                    (c.lo, c.hi)
                };
                // f^{(ℓ)} moves from `sign` to `after`, so f^{(ℓ+1)} has the sign of `after`.
                regions.push(PlanRegion {
                    lo,
                    hi,
                    deriv: ell + 1,
                    sign: after,
                    kind: c.kind,
                });
            }
            RegionKind::Outer => unreachable!("clusters are never outer regions"),
        }
        if flips {
            k_hat += 1;
        }
        sign = after;
        gap_lo = c.hi;
    }
    push_outer(&mut regions, &mut warnings, curve_ell, tol, gap_lo, 1.0, sign, ell);
    ConstraintPlan {
        ell,
        regions,
        clusters,
        k_hat,
        warnings,
    }
}

#[allow(clippy::too_many_arguments)]
fn push_outer(
    regions: &mut Vec<PlanRegion>,
    warnings: &mut Vec<String>,
    curve: &DerivativeCurve,
    tol: f64,
    lo: f64,
    hi: f64,
    sign: Sign,
    ell: usize,
) {
    if hi <= lo {
        return;
    }
    if let Some(seen) = dominant_sign(curve, lo, hi, tol) {
        if seen != sign {
            warnings.push(format!(
                "pilot sign on [{lo:.4}, {hi:.4}] contradicts the crossing parity; region left unconstrained"
            ));
            return;
        }
    }
    regions.push(PlanRegion {
        lo,
        hi,
        deriv: ell,
        sign,
        kind: RegionKind::Outer,
    });
}

#[derive(Debug, Clone)]
pub struct SecondStage {
    pub fit: ConstrainedFit,
    pub unconstrained: SplineModel,
    pub lambda: f64,
    /// Sign changes of the final `f̂^{(ℓ)}` on `[0, 1]`.
    pub final_crossings: Vec<f64>,
    pub matches_k_hat: bool,
}

/// Points used to count sign changes of the final fit.
pub const FINAL_COUNT_POINTS: usize = 2001;

/// Constrained spline at the GCV smoothing parameter.
pub fn second_stage(samples: &SampleSet, plan: &ConstraintPlan, options: &PilotOptions) -> Result<SecondStage> {
    options.validate(samples.len())?;
    let problem = Arc::new(SplineProblem::new(samples, options.m)?);
    let candidates = options
        .lambda_candidates
        .clone()
        .unwrap_or_else(|| default_lambda_candidates(samples, options.m));
    let lambda = gcv_lambda_with(&problem, samples.y(), &candidates)?.value;
    second_stage_at(problem, samples, plan, options, lambda)
}

/// Constrained spline at a given smoothing parameter.
pub fn second_stage_at(
    problem: Arc<SplineProblem>,
    samples: &SampleSet,
    plan: &ConstraintPlan,
    options: &PilotOptions,
    lambda: f64,
) -> Result<SecondStage> {
    let grid = match options.constraint_cells {
        Some(cells) => crate::constrained::constraint_grid(cells),
        None => default_constraint_grid(samples.len()),
    };
    let solver = ConeSolver::with_problem(problem, samples.y(), lambda)?;
    let points = region_constraints(&plan.sign_regions(), &grid);
    let unconstrained = solver.unconstrained_model();
    let fit = solver.fit(points, None, None, QpOptions::default())?;
    let ts = linspace(0.0, 1.0, FINAL_COUNT_POINTS);
    let values: Vec<f64> = ts.iter().map(|&t| fit.evaluate(t, plan.ell)).collect();
    let final_crossings = sign_change_locations(&ts, &values, None);
    let matches_k_hat = final_crossings.len() == plan.k_hat;
    Ok(SecondStage {
        fit,
        unconstrained,
        lambda,
        final_crossings,
        matches_k_hat,
    })
}

/// All stages of one pilot run.
#[derive(Debug, Clone)]
pub struct PilotRun {
    pub first: FirstStage,
    pub intervals: Vec<UncertaintyInterval>,
    pub plan: ConstraintPlan,
    pub second: SecondStage,
}

pub fn run_pilot(samples: &SampleSet, options: &PilotOptions) -> Result<PilotRun> {
    let first = first_stage(samples, options)?;
    let intervals = uncertainty_intervals(&first, samples, options.alpha)?;
    let plan = resolve_overlaps(&intervals, &first.curve_ell, &first.curve_ell_plus_1);
    let second = second_stage(samples, &plan, options)?;
    Ok(PilotRun {
        first,
        intervals,
        plan,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignInfo;
    use crate::spline::fit_spline;

    fn curve(ell: usize, f: impl Fn(f64) -> f64) -> DerivativeCurve {
        let grid = linspace(0.1, 0.9, 801);
        let values = grid.iter().map(|&t| f(t)).collect();
        DerivativeCurve {
            boundary: vec![false; 801],
            grid,
            values,
            ell,
            halfwidth: 0.1,
        }
    }

    fn interval(lo: f64, hi: f64) -> UncertaintyInterval {
        UncertaintyInterval {
            center: 0.5 * (lo + hi),
            sd: (hi - lo) / 4.0,
            alpha: 0.05,
            slope: 1.0,
            lo,
            hi,
        }
    }

    fn summary(plan: &ConstraintPlan) -> Vec<(f64, f64, usize, Sign, RegionKind)> {
        plan.regions.iter().map(|r| (r.lo, r.hi, r.deriv, r.sign, r.kind)).collect()
    }

    #[test]
    fn iota_exponents() {
        // 1/(2ℓ+3) = 1/(2m+1) when m = ℓ + 1.
        let n = 5000.0_f64;
        assert!((iota(n, 2, 3, 1.0) - n.ln().powi(2)).abs() < 1e-12);
        assert!((iota(std::f64::consts::E, 2, 3, 1.0) - 1.0).abs() < 1e-15);
        let ratio = |n: f64| iota(n, 1, 4, 1.0) / n.ln().powi(2);
        assert!(ratio(1e6) > ratio(1e4));
    }

    #[test]
    fn isolated_interval_constrains_the_next_derivative() {
        let c0 = curve(2, |t| t - 0.5);
        let c1 = curve(3, |_| 1.0);
        let plan = resolve_overlaps(&[interval(0.45, 0.55)], &c0, &c1);
        assert_eq!(plan.k_hat, 1);
        assert!(plan.warnings.is_empty());
        assert_eq!(
            summary(&plan),
            vec![
                (0.0, 0.45, 2, Sign::Negative, RegionKind::Outer),
                (0.45, 0.55, 3, Sign::Positive, RegionKind::Isolated),
                (0.55, 1.0, 2, Sign::Positive, RegionKind::Outer),
            ]
        );
    }

    #[test]
    fn even_overlap_keeps_one_sign() {
        let c0 = curve(2, |t| (t - 0.45) * (t - 0.55));
        let c1 = curve(3, |t| 2.0 * t - 1.0);
        let plan = resolve_overlaps(&[interval(0.4, 0.5), interval(0.48, 0.6)], &c0, &c1);
        assert_eq!(plan.k_hat, 0);
        assert_eq!(plan.clusters.len(), 1);
        assert_eq!(plan.clusters[0].kind, RegionKind::Even);
        assert_eq!(
            summary(&plan),
            vec![
                (0.0, 0.4, 2, Sign::Positive, RegionKind::Outer),
                (0.4, 0.6, 2, Sign::Positive, RegionKind::Even),
                (0.6, 1.0, 2, Sign::Positive, RegionKind::Outer),
            ]
        );
    }

    #[test]
    fn odd_overlap_shrinks_to_even_crossings() {
        let c0 = curve(2, |t| -(t - 0.45) * (t - 0.5) * (t - 0.55));
        let c1 = curve(3, |t| (t - 0.44) * (t - 0.5) * (t - 0.57));
        let ints = [interval(0.42, 0.48), interval(0.46, 0.54), interval(0.52, 0.58)];
        let plan = resolve_overlaps(&ints, &c0, &c1);
        assert_eq!(plan.k_hat, 1);
        let odd = plan.regions[1];
        assert_eq!(odd.kind, RegionKind::Odd);
        assert_eq!((odd.deriv, odd.sign), (3, Sign::Negative));
        assert!((odd.lo - 0.43).abs() < 2e-3 && (odd.hi - 0.57).abs() < 2e-3, "{odd:?}");
        let inside = sign_change_locations(&c1.grid, &c1.values, None)
            .into_iter()
            .filter(|&x| x > odd.lo && x < odd.hi)
            .count();
        assert_eq!(inside % 2, 0);
        assert_eq!(plan.regions[0].sign, Sign::Positive);
        assert_eq!(plan.regions[2].sign, Sign::Negative);
    }

    #[test]
    fn even_subregion_handles_ties_and_collapse() {
        assert_eq!(even_subregion(0.0, 1.0, &[0.3, 0.6]), (0.0, 1.0));
        assert_eq!(even_subregion(0.0, 1.0, &[0.5]), (0.5, 0.5));
        let (lo, hi) = even_subregion(0.0, 1.0, &[0.2, 0.8, 0.5]);
        assert!((lo - 0.2).abs() < 1e-15 && (hi - 0.8).abs() < 1e-15);
    }

    #[test]
    fn contradicting_outer_sign_is_dropped() {
        let c0 = curve(2, |t| 1.0 + t);
        let c1 = curve(3, |_| 1.0);
        let plan = resolve_overlaps(&[interval(0.45, 0.55)], &c0, &c1);
        assert_eq!(plan.warnings.len(), 1);
        assert_eq!(plan.regions.len(), 2);
        assert!(plan.regions.iter().all(|r| r.hi <= 0.55));
    }

    #[test]
    fn clusters_chain_transitively() {
        let c0 = curve(2, |t| t - 0.5);
        let c1 = curve(3, |_| 1.0);
        // The first and third intervals only meet through the second.
        let ints = [interval(0.3, 0.42), interval(0.4, 0.52), interval(0.5, 0.6), interval(0.7, 0.8)];
        let plan = resolve_overlaps(&ints, &c0, &c1);
        assert_eq!(plan.clusters.len(), 2);
        assert_eq!(plan.clusters[0].members, vec![0, 1, 2]);
        for w in plan.regions.windows(2) {
            assert!(w[0].hi <= w[1].lo + 1e-15, "regions overlap: {w:?}");
        }
    }

    #[test]
    fn whole_domain_interval_absorbs_earlier_clusters() {
        let c0 = curve(2, |t| t - 0.5);
        let c1 = curve(3, |_| 1.0);
        let mut wide = interval(0.0, 1.0);
        wide.center = 0.77;
        let ints = [interval(0.1, 0.15), interval(0.45, 0.55), wide];
        let plan = resolve_overlaps(&ints, &c0, &c1);
        assert_eq!(plan.clusters.len(), 1);
        assert_eq!(plan.clusters[0].members, vec![0, 1, 2]);
        assert_eq!(plan.regions.len(), 1);
        assert_eq!((plan.regions[0].lo, plan.regions[0].hi), (0.0, 1.0));
    }

    fn sine_samples(n: usize, sigma: f64, seed: u64) -> SampleSet {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = DesignInfo::regular(n);
        let y = d
            .points()
            .iter()
            .map(|&t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (2.0 * std::f64::consts::PI * t).sin() + sigma * e
            })
            .collect();
        SampleSet::with_common_sigma(d, y, sigma).unwrap()
    }

    #[test]
    fn interval_width_scales_with_slope_and_n() {
        let s = sine_samples(800, 0.1, 5);
        let opts = PilotOptions::new(2, 3);
        let mut first = first_stage(&s, &opts).unwrap();
        first.crossings.crossing_locations = vec![0.5];
        let base = uncertainty_intervals(&first, &s, 0.05).unwrap()[0];
        assert!((two_sided_quantile(0.05) - 1.959964).abs() < 1e-6);
        assert!(((base.hi - base.lo) - 2.0 * 1.959963984540054 * base.sd).abs() < 1e-12);

        let mut steeper = first.clone();
        steeper.curve_ell_plus_1.values.iter_mut().for_each(|v| *v *= 2.0);
        let s2 = uncertainty_intervals(&steeper, &s, 0.05).unwrap()[0];
        assert!((s2.sd - base.sd / 2.0).abs() < 1e-12 * base.sd);

        let big = sine_samples(3200, 0.1, 5);
        let mut first_big = first.clone();
        first_big.crossings.crossing_locations = vec![0.5];
        let s4 = uncertainty_intervals(&first_big, &big, 0.05).unwrap()[0];
        assert!((s4.sd - base.sd / 2.0).abs() < 1e-12 * base.sd);
    }

    #[test]
    fn flat_slope_gives_whole_domain() {
        let s = sine_samples(800, 0.1, 5);
        let mut first = first_stage(&s, &PilotOptions::new(2, 3)).unwrap();
        first.crossings.crossing_locations = vec![0.5];
        first.curve_ell_plus_1.values.iter_mut().for_each(|v| *v = 0.0);
        let iv = uncertainty_intervals(&first, &s, 0.05).unwrap()[0];
        assert_eq!((iv.lo, iv.hi), (0.0, 1.0));
        assert!(iv.sd.is_infinite());
    }

    #[test]
    fn first_stage_rejects_wide_halfwidths() {
        let s = sine_samples(300, 0.1, 1);
        let mut opts = PilotOptions::new(2, 3);
        opts.iota_scale = 5.0;
        assert!(matches!(first_stage(&s, &opts), Err(Error::InvalidInput(_))));
        assert!(first_stage(&s, &PilotOptions::new(2, 2)).is_err());
        let tiny = sine_samples(5, 0.1, 1);
        assert!(first_stage(&tiny, &PilotOptions::new(2, 3)).is_err());
    }

    #[test]
    fn empty_plan_reproduces_the_unconstrained_spline() {
        let d = DesignInfo::regular(200);
        let y = d.points().iter().map(|&t| (2.0 * t).exp() + 0.05 * (37.0 * t).sin()).collect();
        let s = SampleSet::with_common_sigma(d, y, 0.05).unwrap();
        let opts = PilotOptions::new(1, 2);
        let second = second_stage(&s, &ConstraintPlan::unconstrained(1), &opts).unwrap();
        let plain = fit_spline(&s, 2, second.lambda).unwrap();
        for (a, b) in second.fit.model().coefficients().iter().zip(plain.coefficients()) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let s = sine_samples(600, 0.1, 11);
        let opts = PilotOptions::new(2, 3);
        let a = run_pilot(&s, &opts).unwrap();
        let b = run_pilot(&s, &opts).unwrap();
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.intervals, b.intervals);
        assert_eq!(a.second.fit.model().coefficients(), b.second.fit.model().coefficients());
        assert_eq!(a.plan.k_hat, 1);
    }
}
