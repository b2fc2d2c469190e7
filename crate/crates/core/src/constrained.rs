//! Smoothing splines constrained to piecewise ℓ-convex cones.
//!
//! Sign constraints on `f^{(ℓ)}` (or any derivative) are imposed at the
//! points of a uniform grid. The quadratic program
//!
//! ```text
//! min VP(c) = ½ cᵀHc − gᵀc + C₀   subject to  A c ≥ 0
//! ```
//!
//! is solved through its dual, a bound-constrained problem in the
//! multipliers `μ ≥ 0` with `c(μ) = H⁻¹(g + Aᵀμ)`:
//!
//! ```text
//! VP*(μ) = ½ (g + Aᵀμ)ᵀ H⁻¹ (g + Aᵀμ) − C₀,   min VP = −min VP*.
//! ```
//!
//! The dual gradient `A c(μ)` is the vector of constraint values, so the
//! active-set iteration adds the most violated constraint and keeps a
//! Cholesky factor of the active block of `Q = A H⁻¹ Aᵀ`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandedCholesky;
use crate::bspline::BasisRow;
use crate::design::SampleSet;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, linspace};
use crate::precision::{DoubleDouble, Real};
use crate::spline::{Curve, SplineModel, SplineProblem};

/// Default number of candidate cells on `[0, 1]` for change-point search.
pub const DEFAULT_CHANGEPOINT_CELLS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn of(v: f64) -> Sign {
        if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }
}

/// `f^{(ℓ)}` has sign `leading_sign·(−1)^j` on `[x_j, x_{j+1})`, with
/// `x_0 = 0`, `x_{k+1} = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePartition {
    ell: usize,
    change_points: Vec<f64>,
    leading_sign: Sign,
}

impl ConePartition {
    pub fn new(ell: usize, change_points: Vec<f64>, leading_sign: Sign) -> Result<Self> {
        if ell == 0 {
            return Err(Error::invalid("cone derivative order must be at least 1"));
        }
        if change_points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid("change points must lie in [0, 1]"));
        }
        if change_points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("change points must be sorted"));
        }
        Ok(Self {
            ell,
            change_points,
            leading_sign,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn k(&self) -> usize {
        self.change_points.len()
    }

    pub fn change_points(&self) -> &[f64] {
        &self.change_points
    }

    pub fn leading_sign(&self) -> Sign {
        self.leading_sign
    }

    /// Required sign of `f^{(ℓ)}(t)`.
    pub fn sign_at(&self, t: f64) -> f64 {
        let j = self.change_points.iter().filter(|&&x| x <= t).count();
        let base = self.leading_sign.value();
        if j % 2 == 0 {
            base
        } else {
            -base
        }
    }
}

/// One pointwise constraint `sign · f^{(deriv)}(t) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPoint {
    pub t: f64,
    pub deriv: usize,
    pub sign: f64,
}

/// A closed interval on which `f^{(deriv)}` keeps one sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignRegion {
    pub lo: f64,
    pub hi: f64,
    pub deriv: usize,
    pub sign: f64,
}

/// Uniform constraint grid with `max(200, ⌈10√n⌉)` cells per unit interval.
pub fn default_constraint_grid(n: usize) -> Vec<f64> {
    let cells = ((10.0 * (n as f64).sqrt()).ceil() as usize).max(200);
    constraint_grid(cells)
}

pub fn constraint_grid(cells: usize) -> Vec<f64> {
    linspace(0.0, 1.0, cells.max(1) + 1)
}

/// Sign constraints of the cone at the grid points. When `f^{(ℓ)}` is
/// continuous (`ℓ ≤ 2m - 2`) it must vanish at each change point, so both
/// signs are imposed there as well.
pub fn partition_constraints(partition: &ConePartition, m: usize, grid: &[f64]) -> Vec<ConstraintPoint> {
    let mut out: Vec<ConstraintPoint> = grid
        .iter()
        .map(|&t| ConstraintPoint {
            t,
            deriv: partition.ell,
            sign: partition.sign_at(t),
        })
        .collect();
    if partition.ell + 2 <= 2 * m {
        for &x in &partition.change_points {
            for sign in [1.0, -1.0] {
                if !out.iter().any(|p| p.t == x && p.sign == sign) {
                    out.push(ConstraintPoint {
                        t: x,
                        deriv: partition.ell,
                        sign,
                    });
                }
            }
        }
    }
    out
}

/// Grid points inside each region; a region holding no grid point is
/// represented by its midpoint.
pub fn region_constraints(regions: &[SignRegion], grid: &[f64]) -> Vec<ConstraintPoint> {
    let mut out = Vec::new();
    for r in regions {
        let before = out.len();
        for &t in grid.iter().filter(|&&t| t >= r.lo && t <= r.hi) {
            out.push(ConstraintPoint {
                t,
                deriv: r.deriv,
                sign: r.sign,
            });
        }
        if out.len() == before {
            out.push(ConstraintPoint {
                t: 0.5 * (r.lo + r.hi),
                deriv: r.deriv,
                sign: r.sign,
            });
        }
    }
    out
}

/// Tuning of the active-set iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Violation tolerance relative to the largest unconstrained constraint value.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug)]
struct Column {
    /// Unit-norm basis row of `f^{(deriv)}(t)`.
    row: BasisRow,
    /// `H⁻¹ rowᵀ`.
    v: Vec<f64>,
}

/// Shared state for constrained solves at one `(design, λ, y)`: the factored
/// Hessian, the unconstrained solution and a cache of `H⁻¹aᵀ` columns.
pub struct ConeSolver {
    problem: Arc<SplineProblem>,
    lambda: f64,
    y: Vec<f64>,
    chol: BandedCholesky<DoubleDouble>,
    linear: Vec<f64>,
    unconstrained: Vec<f64>,
    unconstrained_value: f64,
    hat_trace: f64,
    columns: Mutex<HashMap<(usize, u64), Option<Arc<Column>>>>,
}

/// Raw solution of one constrained problem.
#[derive(Debug, Clone)]
pub struct QpOutcome {
    pub coefficients: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

impl ConeSolver {
    pub fn new(samples: &SampleSet, m: usize, lambda: f64) -> Result<Self> {
        let problem = Arc::new(SplineProblem::new(samples, m)?);
        Self::with_problem(problem, samples.y(), lambda)
    }

    pub fn with_problem(problem: Arc<SplineProblem>, y: &[f64], lambda: f64) -> Result<Self> {
        if y.len() != problem.n() {
            return Err(Error::invalid("response length does not match the design"));
        }
        let chol = problem.factor(lambda)?;
        let linear = problem.linear_term(y);
        let unconstrained = chol.solve_f64(&linear);
        let unconstrained_value = problem.objective(lambda, y, &unconstrained);
        let hat_trace = problem.hat_trace(&chol);
        Ok(Self {
            problem,
            lambda,
            y: y.to_vec(),
            chol,
            linear,
            unconstrained,
            unconstrained_value,
            hat_trace,
            columns: Mutex::new(HashMap::new()),
        })
    }

    pub fn problem(&self) -> &Arc<SplineProblem> {
        &self.problem
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn unconstrained_model(&self) -> SplineModel {
        SplineModel::from_coefficients(self.problem.clone(), self.lambda, self.unconstrained.clone(), self.hat_trace)
    }

    pub fn unconstrained_value(&self) -> f64 {
        self.unconstrained_value
    }

    fn column(&self, t: f64, deriv: usize) -> Option<Arc<Column>> {
        let key = (deriv, t.to_bits());
        if let Some(c) = self.columns.lock().expect("column cache poisoned").get(&key) {
            return c.clone();
        }
        let mut row = self.problem.basis().row(t, deriv);
        let norm = row.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let col = if norm > 0.0 {
            row.values.iter_mut().for_each(|v| *v /= norm);
            let mut rhs = vec![0.0; self.problem.basis().len()];
            for (k, v) in row.values.iter().enumerate() {
                rhs[row.first + k] = *v;
            }
            let v = self.chol.solve_f64(&rhs);
            Some(Arc::new(Column { row, v }))
        } else {
            None
        };
        self.columns
            .lock()
            .expect("column cache poisoned")
            .insert(key, col.clone());
        col
    }

    /// Fills the column cache for the given points in parallel.
    pub fn precompute(&self, points: &[ConstraintPoint]) {
        points.par_iter().for_each(|p| {
            self.column(p.t, p.deriv);
        });
    }

    /// Solves the constrained problem; `warm` is an optional nonnegative
    /// starting multiplier vector.
    pub fn solve(&self, points: &[ConstraintPoint], warm: Option<&[f64]>, options: QpOptions) -> Result<QpOutcome> {
        let cols: Vec<Option<Arc<Column>>> = points.iter().map(|p| self.column(p.t, p.deriv)).collect();
        let signs: Vec<f64> = points.iter().map(|p| p.sign).collect();
        let r = points.len();
        let c_u = &self.unconstrained;

        let value = |i: usize, c: &[f64]| -> f64 {
            match &cols[i] {
                Some(col) => signs[i] * col.row.dot(c),
                None => 0.0,
            }
        };
        let q_entry = |i: usize, j: usize| -> f64 {
            match (&cols[i], &cols[j]) {
                (Some(a), Some(b)) => signs[i] * signs[j] * a.row.dot(&b.v),
                _ => 0.0,
            }
        };
        let scale = (0..r).map(|i| value(i, c_u).abs()).fold(0.0, f64::max);
        let tol = options.tol * scale.max(1e-300);

        let mut mu = vec![0.0; r];
        let mut active: Vec<usize> = Vec::new();
        let mut chol = ActiveCholesky::default();
        if let Some(w) = warm {
            if w.len() != r || w.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::invalid("warm start must be a nonnegative vector over the constraints"));
            }
            for i in 0..r {
                if w[i] > 0.0 && cols[i].is_some() && chol.push(i, &active, &q_entry) {
                    active.push(i);
                    mu[i] = w[i];
                }
            }
        }

        let coefficients = |mu: &[f64]| -> Vec<f64> {
            let mut c = c_u.clone();
            for (i, &m) in mu.iter().enumerate() {
                if m != 0.0 {
                    if let Some(col) = &cols[i] {
                        let s = signs[i] * m;
                        for (ck, vk) in c.iter_mut().zip(&col.v) {
                            *ck += s * vk;
                        }
                    }
                }
            }
            c
        };

        let mut iterations = 0;
        let mut need_inner = !active.is_empty();
        let mut blocked: Vec<bool> = vec![false; r];
        loop {
            if !need_inner {
                let c = coefficients(&mu);
                let mut worst: Option<(usize, f64)> = None;
                for i in 0..r {
                    if mu[i] > 0.0 || blocked[i] || cols[i].is_none() {
                        continue;
                    }
                    let v = value(i, &c);
                    if v < -tol && worst.map_or(true, |(_, w)| v < w) {
                        worst = Some((i, v));
                    }
                }
                let Some((j, _)) = worst else { break };
                if !chol.push(j, &active, &q_entry) {
                    // Numerically dependent on the active rows.
                    blocked[j] = true;
                    continue;
                }
                active.push(j);
            }
            need_inner = false;
            // Inner loop: move toward the minimizer on the active face.
            loop {
                iterations += 1;
                if iterations > options.max_iterations {
                    return Err(Error::numerical(format!(
                        "constrained solve did not converge in {} iterations",
                        options.max_iterations
                    )));
                }
                let rhs: Vec<f64> = active.iter().map(|&i| -value(i, c_u)).collect();
                let z = chol.solve(&rhs);
                if z.iter().all(|&v| v > 0.0) {
                    for (&i, &v) in active.iter().zip(&z) {
                        mu[i] = v;
                    }
                    break;
                }
                let mut alpha = 1.0f64;
                for (&i, &v) in active.iter().zip(&z) {
                    if v <= 0.0 {
                        alpha = alpha.min(mu[i] / (mu[i] - v));
                    }
                }
                for (&i, &v) in active.iter().zip(&z) {
                    mu[i] += alpha * (v - mu[i]);
                }
                let keep: Vec<usize> = active
                    .iter()
                    .copied()
                    .filter(|&i| mu[i] > 1e-14 * (1.0 + mu[i].abs()) && mu[i] > 0.0)
                    .collect();
                for &i in &active {
                    if !keep.contains(&i) {
                        mu[i] = 0.0;
                    }
                }
                chol = ActiveCholesky::default();
                let mut rebuilt = Vec::with_capacity(keep.len());
                for i in keep {
                    if chol.push(i, &rebuilt, &q_entry) {
                        rebuilt.push(i);
                    } else {
                        mu[i] = 0.0;
                    }
                }
                active = rebuilt;
                if active.is_empty() {
                    break;
                }
            }
            blocked.iter_mut().for_each(|b| *b = false);
        }
        Ok(QpOutcome {
            coefficients: coefficients(&mu),
            multipliers: mu,
            iterations,
        })
    }

    /// Solves and packages the result with objective values and diagnostics.
    pub fn fit(
        &self,
        points: Vec<ConstraintPoint>,
        partition: Option<ConePartition>,
        warm: Option<&[f64]>,
        options: QpOptions,
    ) -> Result<ConstrainedFit> {
        let out = self.solve(&points, warm, options)?;
        self.package(points, partition, out)
    }

    fn package(&self, points: Vec<ConstraintPoint>, partition: Option<ConePartition>, out: QpOutcome) -> Result<ConstrainedFit> {
        let c = out.coefficients;
        let mu = out.multipliers;
        let primal_value = self.problem.objective(self.lambda, &self.y, &c);

        // VP*(μ) = ½ μᵀQμ + μᵀA c_u − VP(c_u), with μᵀQμ = μᵀA (c − c_u).
        let mut a_t_mu = vec![0.0; c.len()];
        let mut mu_a_u = 0.0;
        let mut mu_a_cu = 0.0;
        let diff: Vec<f64> = c.iter().zip(&self.unconstrained).map(|(a, b)| a - b).collect();
        let mut constraint_values = Vec::with_capacity(points.len());
        for (p, &m) in points.iter().zip(&mu) {
            match self.column(p.t, p.deriv) {
                Some(col) => {
                    constraint_values.push(p.sign * col.row.dot(&c));
                    if m != 0.0 {
                        mu_a_u += m * p.sign * col.row.dot(&diff);
                        mu_a_cu += m * p.sign * col.row.dot(&self.unconstrained);
                        for (k, v) in col.row.values.iter().enumerate() {
                            a_t_mu[col.row.first + k] += m * p.sign * v;
                        }
                    }
                }
                None => constraint_values.push(0.0),
            }
        }
        let dual_value = 0.5 * mu_a_u + mu_a_cu - self.unconstrained_value;

        // Stationarity H c − g − Aᵀμ = 0, with H c in double-double.
        let h = self.problem.hessian(self.lambda);
        let c_dd: Vec<DoubleDouble> = c.iter().map(|&v| DoubleDouble::from_f64(v)).collect();
        let hc = h.mul_vec(&c_dd);
        let mut resid: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..c.len() {
            let r = hc[k] - DoubleDouble::from_f64(self.linear[k]) - DoubleDouble::from_f64(a_t_mu[k]);
            resid = resid.max(r.to_f64().abs());
            scale = scale.max(self.linear[k].abs()).max(a_t_mu[k].abs());
        }
        let kkt_residual = resid / scale.max(1e-300);

        let model = SplineModel::from_coefficients(self.problem.clone(), self.lambda, c, self.hat_trace);
        Ok(ConstrainedFit {
            model,
            partition,
            constraints: points,
            multipliers: mu,
            constraint_values,
            primal_value,
            dual_value,
            kkt_residual,
            iterations: out.iterations,
        })
    }
}

/// Incrementally grown Cholesky factor of the active block of `Q`.
#[derive(Default)]
struct ActiveCholesky {
    rows: Vec<Vec<f64>>,
}

impl ActiveCholesky {
    /// Appends index `j`; returns false if its row is numerically dependent.
    fn push(&mut self, j: usize, active: &[usize], q: &impl Fn(usize, usize) -> f64) -> bool {
        let k = self.rows.len();
        debug_assert_eq!(k, active.len());
        let mut l = vec![0.0; k + 1];
        for (a, &i) in active.iter().enumerate() {
            let mut s = q(j, i);
            for b in 0..a {
                s -= l[b] * self.rows[a][b];
            }
            l[a] = s / self.rows[a][a];
        }
        let qjj = q(j, j);
        let d2 = qjj - l[..k].iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 1e-10 * qjj) {
            return false;
        }
        l[k] = d2.sqrt();
        self.rows.push(l);
        true
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.rows.len();
        let mut x = b.to_vec();
        for i in 0..k {
            let mut s = x[i];
            for j in 0..i {
                s -= self.rows[i][j] * x[j];
            }
            x[i] = s / self.rows[i][i];
        }
        for i in (0..k).rev() {
            let mut s = x[i];
            for j in (i + 1)..k {
                s -= self.rows[j][i] * x[j];
            }
            x[i] = s / self.rows[i][i];
        }
        x
    }
}

/// A constrained spline fit with its optimality certificate.
#[derive(Debug, Clone)]
pub struct ConstrainedFit {
    model: SplineModel,
    partition: Option<ConePartition>,
    constraints: Vec<ConstraintPoint>,
    multipliers: Vec<f64>,
    constraint_values: Vec<f64>,
    primal_value: f64,
    dual_value: f64,
    kkt_residual: f64,
    iterations: usize,
}

impl ConstrainedFit {
    pub fn model(&self) -> &SplineModel {
        &self.model
    }

    pub fn partition(&self) -> Option<&ConePartition> {
        self.partition.as_ref()
    }

    pub fn constraints(&self) -> &[ConstraintPoint] {
        &self.constraints
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// `sign · f^{(deriv)}(t)` at each constraint point, in the unit-row scaling.
    pub fn constraint_values(&self) -> &[f64] {
        &self.constraint_values
    }

    /// Objective of the constrained problem at the solution.
    pub fn primal_value(&self) -> f64 {
        self.primal_value
    }

    /// Dual objective `VP*(μ)` at the multipliers; equals `−primal_value`
    /// at the optimum.
    pub fn dual_value(&self) -> f64 {
        self.dual_value
    }

    pub fn duality_gap(&self) -> f64 {
        self.primal_value + self.dual_value
    }

    pub fn relative_gap(&self) -> f64 {
        self.duality_gap().abs() / (1.0 + self.primal_value.abs())
    }

    /// Scaled stationarity residual `‖Hc − g − Aᵀμ‖∞ / max(‖g‖∞, ‖Aᵀμ‖∞)`.
    pub fn kkt_residual(&self) -> f64 {
        self.kkt_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn active_points(&self) -> Vec<ConstraintPoint> {
        self.constraints
            .iter()
            .zip(&self.multipliers)
            .filter(|(_, &m)| m > 0.0)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Largest `μ_i · |value_i|` (complementary slackness).
    pub fn max_complementarity(&self) -> f64 {
        self.multipliers
            .iter()
            .zip(&self.constraint_values)
            .map(|(m, v)| (m * v).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_constraint_value(&self) -> f64 {
        self.constraint_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn evaluate(&self, t: f64, deriv: usize) -> f64 {
        self.model.evaluate(t, deriv)
    }
}

impl Curve for ConstrainedFit {
    fn eval(&self, t: f64, deriv: usize) -> f64 {
        self.model.evaluate(t, deriv)
    }
}

/// Spline fit restricted to the cone described by `partition`, with
/// constraints on the default grid.
pub fn fit_constrained(samples: &SampleSet, m: usize, lambda: f64, partition: &ConePartition) -> Result<ConstrainedFit> {
    fit_constrained_on_grid(samples, m, lambda, partition, &default_constraint_grid(samples.len()))
}

pub fn fit_constrained_on_grid(
    samples: &SampleSet,
    m: usize,
    lambda: f64,
    partition: &ConePartition,
    grid: &[f64],
) -> Result<ConstrainedFit> {
    if m < partition.ell() {
        return Err(Error::invalid(format!(
            "penalty order m = {m} must be at least the cone order {}",
            partition.ell()
        )));
    }
    let solver = ConeSolver::new(samples, m, lambda)?;
    solver.fit(partition_constraints(partition, m, grid), Some(partition.clone()), None, QpOptions::default())
}

/// Spline fit with sign constraints on arbitrary regions and derivatives.
pub fn fit_with_regions(samples: &SampleSet, m: usize, lambda: f64, regions: &[SignRegion], grid: &[f64]) -> Result<ConstrainedFit> {
    if let Some(r) = regions.iter().find(|r| r.deriv > m) {
        return Err(Error::invalid(format!(
            "cannot constrain derivative {} with penalty order {m}",
            r.deriv
        )));
    }
    let solver = ConeSolver::new(samples, m, lambda)?;
    solver.fit(region_constraints(regions, grid), None, None, QpOptions::default())
}

/// Value of the discretized dual objective at the fit's multipliers.
pub fn dual_value(fit: &ConstrainedFit) -> f64 {
    fit.dual_value()
}

/// Nondecreasing `k`-tuples from `candidates`, in lexicographic order.
fn ordered_tuples(candidates: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    if k == 0 {
        return vec![Vec::new()];
    }
    loop {
        out.push(idx.iter().map(|&i| candidates[i]).collect());
        // advance the last position that can still grow
        let mut p = k;
        while p > 0 && idx[p - 1] == candidates.len() - 1 {
            p -= 1;
        }
        if p == 0 {
            return out;
        }
        idx[p - 1] += 1;
        let v = idx[p - 1];
        for q in idx.iter_mut().skip(p) {
            *q = v;
        }
    }
}

/// Exhaustive search for `k` change points on a grid of `cells` candidate
/// cells, over both leading signs. Ties go to the lexicographically
/// smallest change points, then to the positive leading sign.
pub fn optimize_changepoints(
    samples: &SampleSet,
    m: usize,
    lambda: f64,
    ell: usize,
    k: usize,
    cells: usize,
) -> Result<(ConePartition, ConstrainedFit)> {
    optimize_changepoints_on_grid(samples, m, lambda, ell, k, cells, &default_constraint_grid(samples.len()))
}

pub fn optimize_changepoints_on_grid(
    samples: &SampleSet,
    m: usize,
    lambda: f64,
    ell: usize,
    k: usize,
    cells: usize,
    grid: &[f64],
) -> Result<(ConePartition, ConstrainedFit)> {
    if m < ell || ell == 0 {
        return Err(Error::invalid(format!("need 1 ≤ ℓ ≤ m, got ℓ = {ell}, m = {m}")));
    }
    if cells == 0 {
        return Err(Error::invalid("change-point grid needs at least one cell"));
    }
    let solver = ConeSolver::new(samples, m, lambda)?;
    let unsigned: Vec<ConstraintPoint> = grid
        .iter()
        .map(|&t| ConstraintPoint { t, deriv: ell, sign: 1.0 })
        .collect();
    solver.precompute(&unsigned);

    let candidates = linspace(0.0, 1.0, cells + 1);
    let mut partitions = Vec::new();
    for x in ordered_tuples(&candidates, k) {
        for sign in [Sign::Positive, Sign::Negative] {
            partitions.push(ConePartition::new(ell, x.clone(), sign)?);
        }
    }
    let values = partitions
        .par_iter()
        .map(|p| {
            let out = solver.solve(&partition_constraints(p, m, grid), None, QpOptions::default())?;
            Ok(samples_objective(&solver, &out.coefficients))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] - 1e-12 * (1.0 + values[best].abs()) {
            best = i;
        }
    }
    let partition = partitions.swap_remove(best);
    let fit = solver.fit(
        partition_constraints(&partition, m, grid),
        Some(partition.clone()),
        None,
        QpOptions::default(),
    )?;
    Ok((partition, fit))
}

fn samples_objective(solver: &ConeSolver, c: &[f64]) -> f64 {
    solver.problem.objective(solver.lambda, &solver.y, c)
}

/// `‖g‖²_V = (λ/2) ∫₀¹ |g^{(m)}|² + (1/n) Σ g(t_i)²/σ_i²`.
///
/// The penalty is integrated with Gauss–Legendre rules on the pieces between
/// design points, exact for splines with these knots and for polynomials.
pub fn v_norm<C: Curve + ?Sized>(curve: &C, samples: &SampleSet, m: usize, lambda: f64) -> f64 {
    let mut breaks = Vec::with_capacity(samples.len() + 2);
    breaks.push(0.0);
    breaks.extend(samples.t().iter().copied().filter(|&t| t > 0.0 && t < 1.0));
    breaks.push(1.0);
    breaks.dedup();
    let (xs, ws) = gauss_legendre(m + 3);
    let mut penalty = 0.0;
    for w in breaks.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[0] + w[1]);
        for (x, wt) in xs.iter().zip(&ws) {
            penalty += half * wt * curve.eval(mid + half * x, m).powi(2);
        }
    }
    let data: f64 = samples
        .t()
        .iter()
        .zip(samples.sigma())
        .map(|(&t, s)| (curve.eval(t, 0) / s).powi(2))
        .sum::<f64>()
        / samples.len() as f64;
    0.5 * lambda * penalty + data
}

/// True iff `sign · f^{(ℓ)} ≥ −tol` on a 1000-cell grid over `[0, 1]`.
pub fn cone_membership<C: Curve + ?Sized>(curve: &C, partition: &ConePartition, tol: f64) -> bool {
    constraint_grid(1000)
        .iter()
        .all(|&t| partition.sign_at(t) * curve.eval(t, partition.ell()) >= -tol)
}
