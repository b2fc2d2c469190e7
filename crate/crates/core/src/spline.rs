//! Unconstrained smoothing splines with quadratic loss.
//!
//! The fit minimizes
//!
//! ```text
//! (λ/2) ∫ |f^{(m)}|² + (1/n) Σ_i (y_i - f(t_i))² / σ_i²
//! ```
//!
//! over `W_{m,2}`. The minimizer is a natural spline of degree `2m - 1`
//! with knots at the design points, so the problem is solved exactly in a
//! B-spline basis with banded normal equations
//! `(λ Ω + (2/n) Bᵀ W B) c = (2/n) Bᵀ W y`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::banded::{BandedCholesky, BandedSymmetric};
use crate::bspline::{BasisRow, SplineBasis};
use crate::design::SampleSet;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numeric::{gauss_legendre, logspace};
use crate::precision::{DoubleDouble, Real};
use crate::smoother::{select_minimum, GcvSelection};

/// Anything with evaluable derivatives on `[0, 1]`.
pub trait Curve: Sync {
    fn eval(&self, t: f64, deriv: usize) -> f64;
}

impl<F: Fn(f64, usize) -> f64 + Sync> Curve for F {
    fn eval(&self, t: f64, deriv: usize) -> f64 {
        self(t, deriv)
    }
}

/// `a - b` as a curve.
pub struct Difference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: Curve + ?Sized, B: Curve + ?Sized> Curve for Difference<'_, A, B> {
    fn eval(&self, t: f64, deriv: usize) -> f64 {
        self.0.eval(t, deriv) - self.1.eval(t, deriv)
    }
}

type Dd = DoubleDouble;

/// Design-dependent pieces of the spline normal equations, reusable across
/// smoothing parameters and response vectors. Matrices are held in
/// double-double precision (see [`crate::precision`]).
#[derive(Debug, Clone)]
pub struct SplineProblem {
    basis: Arc<SplineBasis>,
    rows: Vec<BasisRow>,
    /// `1/σ_i²`
    weights: Vec<f64>,
    /// `∫ B_i^{(m)} B_j^{(m)}`
    penalty: BandedSymmetric<Dd>,
    /// `(2/n) Bᵀ W B`
    gram: BandedSymmetric<Dd>,
}

impl SplineProblem {
    pub fn new(samples: &SampleSet, m: usize) -> Result<Self> {
        let n = samples.len();
        if n <= m {
            return Err(Error::invalid(format!("spline of order m = {m} needs more than {m} points, got {n}")));
        }
        let basis = SplineBasis::new(samples.t(), m)?;
        let rows: Vec<BasisRow> = samples.t().iter().map(|&t| basis.row(t, 0)).collect();
        let weights: Vec<f64> = samples.sigma().iter().map(|s| 1.0 / (s * s)).collect();
        let bw = basis.degree();
        let size = basis.len();

        let mut gram = BandedSymmetric::<Dd>::zeros(size, bw);
        for (&t, w) in samples.t().iter().zip(&weights) {
            let (first, values) = basis.row_in::<Dd>(t, 0);
            let scale = Dd::from_f64(2.0 * w / n as f64);
            for (a, &va) in values.iter().enumerate() {
                for (b, &vb) in values.iter().enumerate().take(a + 1) {
                    gram.add(first + a, first + b, scale * va * vb);
                }
            }
        }

        // Exact Gauss–Legendre integration of products of degree m-1 pieces.
        let mut penalty = BandedSymmetric::<Dd>::zeros(size, bw);
        let (xs, ws) = gauss_legendre(m + 1);
        let breaks = basis.breakpoints();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, wt) in xs.iter().zip(&ws) {
                let (first, values) = basis.row_in::<Dd>(mid + half * x, m);
                let weight = Dd::from_f64(half * wt);
                for (i, &vi) in values.iter().enumerate() {
                    for (j, &vj) in values.iter().enumerate().take(i + 1) {
                        penalty.add(first + i, first + j, weight * vi * vj);
                    }
                }
            }
        }
        Ok(Self {
            basis: Arc::new(basis),
            rows,
            weights,
            penalty,
            gram,
        })
    }

    pub fn basis(&self) -> &Arc<SplineBasis> {
        &self.basis
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[BasisRow] {
        &self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn penalty_matrix(&self) -> &BandedSymmetric<DoubleDouble> {
        &self.penalty
    }

    /// `∫ |f^{(m)}|²` for coefficients `c`, integrated piecewise so the
    /// result stays nonnegative and free of cancellation.
    pub fn roughness(&self, c: &[f64]) -> f64 {
        let m = self.m();
        let (xs, ws) = gauss_legendre(m + 1);
        let mut acc = 0.0;
        for w in self.basis.breakpoints().windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[0] + w[1]);
            for (x, wt) in xs.iter().zip(&ws) {
                acc += half * wt * self.basis.evaluate(c, mid + half * x, m).powi(2);
            }
        }
        acc
    }

    /// `H = λ Ω + (2/n) Bᵀ W B`.
    pub fn hessian(&self, lambda: f64) -> BandedSymmetric<DoubleDouble> {
        self.gram.axpy(Dd::from_f64(lambda), &self.penalty)
    }

    pub fn factor(&self, lambda: f64) -> Result<BandedCholesky<DoubleDouble>> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("smoothing parameter must be positive, got {lambda}")));
        }
        self.hessian(lambda).cholesky()
    }

    /// `g = (2/n) Bᵀ W y`.
    pub fn linear_term(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        let mut g = vec![0.0; self.basis.len()];
        for ((row, w), yi) in self.rows.iter().zip(&self.weights).zip(y) {
            for (k, v) in row.values.iter().enumerate() {
                g[row.first + k] += 2.0 * w * yi * v / n;
            }
        }
        g
    }

    /// `(1/n) Σ w_i y_i²`, the constant of the objective.
    pub fn constant_term(&self, y: &[f64]) -> f64 {
        self.weights.iter().zip(y).map(|(w, v)| w * v * v).sum::<f64>() / self.n() as f64
    }

    /// Objective value of coefficient vector `c`.
    pub fn objective(&self, lambda: f64, y: &[f64], c: &[f64]) -> f64 {
        let pen = 0.5 * lambda * self.roughness(c);
        let data: f64 = self
            .rows
            .iter()
            .zip(&self.weights)
            .zip(y)
            .map(|((row, w), yi)| w * (yi - row.dot(c)).powi(2))
            .sum::<f64>()
            / self.n() as f64;
        pen + data
    }

    /// `tr A(λ)` from the band of `H⁻¹`.
    pub fn hat_trace(&self, chol: &BandedCholesky<DoubleDouble>) -> f64 {
        let z = chol.inverse_band();
        let n = self.n() as f64;
        let mut tr = 0.0;
        for (row, w) in self.rows.iter().zip(&self.weights) {
            let mut q = 0.0;
            for (a, va) in row.values.iter().enumerate() {
                for (b, vb) in row.values.iter().enumerate() {
                    q += va * vb * z.get(row.first + a, row.first + b).to_f64();
                }
            }
            tr += 2.0 * w * q / n;
        }
        tr
    }

    pub fn fit(&self, y: &[f64], lambda: f64) -> Result<SplineModel> {
        let chol = self.factor(lambda)?;
        let coefficients = chol.solve_f64(&self.linear_term(y));
        let hat_trace = self.hat_trace(&chol);
        Ok(SplineModel {
            lambda,
            coefficients,
            hat_trace,
            problem: Arc::new(self.clone()),
        })
    }

    /// GCV score `n Σ (r_i/σ̃_i)² / (n - tr A)²` with `σ̃_i = σ_i/σ_rms`.
    pub fn gcv_score(&self, y: &[f64], lambda: f64) -> Result<Option<f64>> {
        let chol = self.factor(lambda)?;
        let c = chol.solve_f64(&self.linear_term(y));
        let trace = self.hat_trace(&chol);
        let n = self.n() as f64;
        let mean_w = n / self.weights.iter().map(|w| 1.0 / w).sum::<f64>();
        let rss: f64 = self
            .rows
            .iter()
            .zip(&self.weights)
            .zip(y)
            .map(|((row, w), yi)| w / mean_w * (yi - row.dot(&c)).powi(2))
            .sum();
        let df = n - trace;
        if df <= 1e-9 * n {
            return Ok(None);
        }
        Ok(Some(n * rss / (df * df)))
    }

    /// Weights of the smoother row for `f̂^{(deriv)}(t)`: one band solve,
    /// then `w_i = (2/n)(1/σ_i²) b_iᵀ H⁻¹ b^{(deriv)}(t)`.
    pub fn green_weights(&self, chol: &BandedCholesky<DoubleDouble>, t: f64, deriv: usize) -> Vec<f64> {
        let row = self.basis.row(t, deriv);
        let mut rhs = vec![0.0; self.basis.len()];
        for (k, v) in row.values.iter().enumerate() {
            rhs[row.first + k] = *v;
        }
        let u = chol.solve_f64(&rhs);
        let n = self.n() as f64;
        self.rows
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| 2.0 * w * r.dot(&u) / n)
            .collect()
    }

    /// Dense hat matrix, column by column from unit-vector fits.
    pub fn hat_matrix(&self, lambda: f64) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.n();
        let chol = self.factor(lambda)?;
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let c = chol.solve_f64(&self.linear_term(&e));
            for (i, row) in self.rows.iter().enumerate() {
                a[(i, j)] = row.dot(&c);
            }
        }
        Ok(a)
    }
}

/// A fitted smoothing spline.
#[derive(Debug, Clone)]
pub struct SplineModel {
    lambda: f64,
    coefficients: Vec<f64>,
    hat_trace: f64,
    problem: Arc<SplineProblem>,
}

impl SplineModel {
    /// Wraps coefficients obtained elsewhere (e.g. a constrained solve).
    pub fn from_coefficients(problem: Arc<SplineProblem>, lambda: f64, coefficients: Vec<f64>, hat_trace: f64) -> Self {
        Self {
            lambda,
            coefficients,
            hat_trace,
            problem,
        }
    }

    pub fn m(&self) -> usize {
        self.problem.m()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Trace of the unconstrained hat matrix at this `λ`.
    pub fn hat_trace(&self) -> f64 {
        self.hat_trace
    }

    pub fn problem(&self) -> &Arc<SplineProblem> {
        &self.problem
    }

    pub fn evaluate(&self, t: f64, deriv: usize) -> f64 {
        self.problem.basis.evaluate(&self.coefficients, t, deriv)
    }

    pub fn fitted_values(&self) -> Vec<f64> {
        self.problem.rows.iter().map(|r| r.dot(&self.coefficients)).collect()
    }

    /// `∫ |f^{(m)}|²`.
    pub fn roughness(&self) -> f64 {
        self.problem.roughness(&self.coefficients)
    }

    /// The fitting objective at the stored coefficients.
    pub fn objective(&self, y: &[f64]) -> f64 {
        self.problem.objective(self.lambda, y, &self.coefficients)
    }

    /// Local halfwidth `h(t) = (λ σ(t)² / (2 F'(t)))^{1/2m}` of the
    /// equivalent kernel under this objective's normalization.
    pub fn equivalent_halfwidth(&self, samples: &SampleSet, t: f64) -> Result<f64> {
        let density = samples.design().design_density(t)?;
        let j = samples.t().partition_point(|&p| p < t).min(samples.len() - 1);
        let sigma = samples.sigma()[j];
        Ok((self.lambda * sigma * sigma / (2.0 * density)).powf(1.0 / (2 * self.m()) as f64))
    }
}

impl Curve for SplineModel {
    fn eval(&self, t: f64, deriv: usize) -> f64 {
        self.evaluate(t, deriv)
    }
}

/// Smoother row of the spline at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenRow {
    pub t: f64,
    pub deriv: usize,
    pub weights: Vec<f64>,
}

impl GreenRow {
    pub fn apply(&self, y: &[f64]) -> f64 {
        self.weights.iter().zip(y).map(|(w, v)| w * v).sum()
    }
}

pub fn fit_spline(samples: &SampleSet, m: usize, lambda: f64) -> Result<SplineModel> {
    SplineProblem::new(samples, m)?.fit(samples.y(), lambda)
}

/// Default `λ` candidates: equivalent halfwidths `2/n … 1/2`, 30 per
/// decade, mapped to `λ` for the sample's rms noise level.
pub fn default_lambda_candidates(samples: &SampleSet, m: usize) -> Vec<f64> {
    let n = samples.len() as f64;
    let s2 = samples.rms_sigma().powi(2);
    let lo = (2.0 / n).min(0.25);
    let hi = 0.5;
    let count = (30.0 * (hi / lo).log10()).ceil() as usize + 1;
    logspace(lo, hi, count.max(2))
        .into_iter()
        .map(|h| 2.0 * h.powi(2 * m as i32) / s2)
        .collect()
}

/// `λ` minimizing the GCV score over `candidates`.
pub fn gcv_lambda(samples: &SampleSet, m: usize, candidates: &[f64]) -> Result<GcvSelection> {
    let problem = SplineProblem::new(samples, m)?;
    gcv_lambda_with(&problem, samples.y(), candidates)
}

pub fn gcv_lambda_with(problem: &SplineProblem, y: &[f64], candidates: &[f64]) -> Result<GcvSelection> {
    if candidates.is_empty() || candidates.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::invalid("lambda candidates must be positive and nonempty"));
    }
    let scores = candidates
        .par_iter()
        .map(|&l| problem.gcv_score(y, l).map(|s| (l, s)))
        .collect::<Result<Vec<_>>>()?;
    select_minimum(scores)
}

/// Row of the linear smoother for `f̂^{(deriv)}(t)`.
pub fn green_row(model: &SplineModel, t: f64, deriv: usize) -> Result<GreenRow> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("green row requested at {t} outside [0, 1]")));
    }
    if deriv >= model.m() {
        return Err(Error::invalid(format!("derivative order {deriv} must be below m = {}", model.m())));
    }
    let chol = model.problem.factor(model.lambda)?;
    Ok(GreenRow {
        t,
        deriv,
        weights: model.problem.green_weights(&chol, t, deriv),
    })
}

/// Sup distance between the scaled smoother row `n h(t) g(t, t_i)` and the
/// equivalent kernel `κ((t_i - t)/h(t)) / F'(t)`.
pub fn equivalent_kernel_error(model: &SplineModel, samples: &SampleSet, kernel: &KernelSpec, t: f64) -> Result<f64> {
    if kernel.penalty_order() != Some(model.m()) {
        return Err(Error::invalid("kernel must be the spline-equivalent kernel of the same order"));
    }
    let h = model.equivalent_halfwidth(samples, t)?;
    if t < 6.0 * h || t > 1.0 - 6.0 * h {
        return Err(Error::invalid(format!(
            "t = {t} lies within six equivalent halfwidths ({h:.4}) of the boundary"
        )));
    }
    let density = samples.design().design_density(t)?;
    let row = green_row(model, t, 0)?;
    let n = samples.len() as f64;
    Ok(samples
        .t()
        .iter()
        .zip(&row.weights)
        .map(|(&ti, w)| (n * h * w - kernel.evaluate((ti - t) / h, 0) / density).abs())
        .fold(0.0, f64::max))
}

/// `λ` giving equivalent halfwidth `h` at design density `density` and
/// noise level `sigma`.
pub fn lambda_for_halfwidth(h: f64, m: usize, sigma: f64, density: f64) -> f64 {
    2.0 * density * h.powi(2 * m as i32) / (sigma * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignInfo;
    use crate::kernels::equivalent_spline_kernel;

    fn samples(n: usize, sigma: f64, f: impl Fn(f64) -> f64) -> SampleSet {
        let d = DesignInfo::regular(n);
        let y = d.points().iter().map(|&t| f(t)).collect();
        SampleSet::with_common_sigma(d, y, sigma).unwrap()
    }

    #[test]
    fn lines_are_fit_exactly() {
        let s = samples(30, 1.0, |t| 1.5 - 2.0 * t);
        for lambda in [1e-8, 1e-3, 10.0] {
            let fit = fit_spline(&s, 2, lambda).unwrap();
            for &t in &[0.0, 0.2, 0.5, 0.93, 1.0] {
                assert!((fit.evaluate(t, 0) - (1.5 - 2.0 * t)).abs() < 1e-8);
            }
            assert!(fit.roughness() < 1e-12);
        }
    }

    #[test]
    fn huge_lambda_gives_least_squares_line() {
        let s = samples(40, 1.0, |t| (4.0 * t).sin());
        let fit = fit_spline(&s, 2, 1e8).unwrap();
        let n = s.len() as f64;
        let tbar = s.t().iter().sum::<f64>() / n;
        let ybar = s.y().iter().sum::<f64>() / n;
        let sxy: f64 = s.t().iter().zip(s.y()).map(|(t, y)| (t - tbar) * (y - ybar)).sum();
        let sxx: f64 = s.t().iter().map(|t| (t - tbar).powi(2)).sum();
        let slope = sxy / sxx;
        for &t in s.t() {
            let line = ybar + slope * (t - tbar);
            assert!((fit.evaluate(t, 0) - line).abs() < 1e-4);
        }
    }

    #[test]
    fn tiny_lambda_interpolates() {
        let s = samples(20, 1.0, |t| (7.0 * t).cos() + t * t);
        let fit = fit_spline(&s, 2, 1e-10).unwrap();
        for (f, y) in fit.fitted_values().iter().zip(s.y()) {
            assert!((f - y).abs() < 1e-5);
        }
    }

    #[test]
    fn hat_matrix_symmetric_with_unit_spectrum() {
        for m in 1..=3 {
            let s = samples(60, 0.5, |t| t);
            let p = SplineProblem::new(&s, m).unwrap();
            let a = p.hat_matrix(1e-5).unwrap();
            assert!((&a - a.transpose()).abs().max() < 1e-9);
            let eig = nalgebra::SymmetricEigen::new(a.clone()).eigenvalues;
            assert!(eig.iter().all(|&e| e > -1e-9 && e < 1.0 + 1e-9));
            let trace_dense: f64 = a.diagonal().sum();
            let trace_band = p.hat_trace(&p.factor(1e-5).unwrap());
            assert!((trace_dense - trace_band).abs() < 1e-8);
        }
    }

    #[test]
    fn objective_matches_hat_quadratic_form() {
        let s = samples(50, 0.3, |t| (9.0 * t).sin());
        let p = SplineProblem::new(&s, 2).unwrap();
        let lambda = 1e-5;
        let fit = p.fit(s.y(), lambda).unwrap();
        // At the optimum, objective = (1/n) yᵀ W (I - A) y for symmetric A.
        let a = p.hat_matrix(lambda).unwrap();
        let y = nalgebra::DVector::from_column_slice(s.y());
        let resid = &y - &a * &y;
        let w = 1.0 / 0.09;
        let expected = w * y.dot(&resid) / s.len() as f64;
        let got = fit.objective(s.y());
        assert!(((got - expected) / expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = samples(80, 0.2, |t| (5.0 * t).sin());
        let fit = fit_spline(&s, 2, 1e-6).unwrap();
        let h = 1e-6;
        for &t in &[0.23, 0.511, 0.79] {
            for d in 0..2 {
                let fd = (fit.evaluate(t + h, d) - fit.evaluate(t - h, d)) / (2.0 * h);
                let exact = fit.evaluate(t, d + 1);
                assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn green_rows_match_unit_vector_fits_and_reproduce_polynomials() {
        let s = samples(40, 1.0, |t| t);
        let p = SplineProblem::new(&s, 2).unwrap();
        let model = p.fit(s.y(), 1e-5).unwrap();
        let row = green_row(&model, 0.37, 0).unwrap();
        let row1 = green_row(&model, 0.37, 1).unwrap();
        for j in [0usize, 7, 20, 39] {
            let mut e = vec![0.0; 40];
            e[j] = 1.0;
            let unit_fit = p.fit(&e, 1e-5).unwrap();
            assert!((unit_fit.evaluate(0.37, 0) - row.weights[j]).abs() < 1e-10);
            assert!((unit_fit.evaluate(0.37, 1) - row1.weights[j]).abs() < 1e-8);
        }
        assert!((row.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!((row1.apply(s.t()) - 1.0).abs() < 1e-6);
        assert!(green_row(&model, 0.5, 2).is_err());
    }

    #[test]
    fn green_weights_concentrate_like_the_kernel() {
        let s = samples(1000, 1.0, |t| t);
        let model = fit_spline(&s, 2, 1e-6).unwrap();
        let t = 0.5;
        let h = model.equivalent_halfwidth(&s, t).unwrap();
        let row = green_row(&model, t, 0).unwrap();
        let outside: f64 = s
            .t()
            .iter()
            .zip(&row.weights)
            .filter(|(ti, _)| (*ti - t).abs() >= 5.0 * h)
            .map(|(_, w)| w.abs())
            .sum();
        // |κ| mass beyond |s| = 5 for m = 2, by quadrature
        let k = equivalent_spline_kernel(2);
        let tail = 2.0 * crate::numeric::integrate_adaptive(|u| k.evaluate(u, 0).abs(), 5.0, 80.0, 1e-12, 1e-10).unwrap();
        assert!((outside - tail).abs() < 0.002, "outside {outside} kernel tail {tail}");
        let far: f64 = s
            .t()
            .iter()
            .zip(&row.weights)
            .filter(|(ti, _)| (*ti - t).abs() >= 7.0 * h)
            .map(|(_, w)| w.abs())
            .sum();
        assert!(far < 0.01);
    }

    #[test]
    fn gcv_invariant_to_null_space_shift() {
        let s = samples(80, 0.1, |t| (8.0 * t).sin());
        let shifted = s
            .with_responses(s.y().iter().zip(s.t()).map(|(y, t)| y + 3.0 - 2.0 * t).collect())
            .unwrap();
        let p = SplineProblem::new(&s, 2).unwrap();
        for lambda in [1e-7, 1e-5, 1e-3] {
            let a = p.gcv_score(s.y(), lambda).unwrap().unwrap();
            let b = p.gcv_score(shifted.y(), lambda).unwrap().unwrap();
            assert!(((a - b) / a).abs() < 1e-8);
        }
    }

    #[test]
    fn equivalent_kernel_error_is_small_at_center() {
        let n = 1000;
        let h = 0.03;
        let s = samples(n, 1.0, |_| 0.0);
        let model = fit_spline(&s, 2, lambda_for_halfwidth(h, 2, 1.0, 1.0)).unwrap();
        assert!((model.equivalent_halfwidth(&s, 0.5).unwrap() - h).abs() < 1e-12);
        let k = equivalent_spline_kernel(2);
        let e5 = equivalent_kernel_error(&model, &s, &k, 0.5).unwrap();
        let e3 = equivalent_kernel_error(&model, &s, &k, 0.3).unwrap();
        assert!(e5 < 0.05 * k.evaluate(0.0, 0));
        // Away from the boundary both errors are tiny; what remains is the
        // exponentially decaying reflection from the nearer end.
        assert!((e5 - e3).abs() < 2e-3 * k.evaluate(0.0, 0));
        let reflection = (-0.3 / (h * 2f64.sqrt())).exp() * k.evaluate(0.0, 0);
        assert!(e3 < 2.0 * reflection && e3 > 0.1 * reflection);
        assert!(equivalent_kernel_error(&model, &s, &k, 0.05).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = samples(3, 1.0, |t| t);
        assert!(fit_spline(&s, 3, 1.0).is_err());
        let s = samples(10, 1.0, |t| t);
        assert!(fit_spline(&s, 2, 0.0).is_err());
        let dup = SampleSet::with_common_sigma(
            DesignInfo::new(vec![0.1, 0.2, 0.2, 0.5], Default::default()).unwrap(),
            vec![1.0; 4],
            1.0,
        )
        .unwrap();
        assert!(fit_spline(&dup, 1, 1.0).is_err());
    }
}
