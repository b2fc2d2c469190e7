//! Kernels for derivative estimation.
//!
//! Two families are provided:
//!
//! * **Extended kernels** `κ(s) = p(s)(1 - s²)³` on `[-1, 1]`, zero outside.
//!   The polynomial `p` has degree `ℓ + 1` and is fixed by the moment
//!   conditions `∫ sʲ κ(s) ds = ℓ! δ_{jℓ}` for `0 ≤ j < ℓ + 2`. The cubed
//!   factor makes the zero extension `C²`.
//! * **Spline-equivalent kernels** solving `(-1)^m κ^{(2m)} + κ = δ` on the
//!   real line with decay at infinity, i.e. the inverse Fourier transform of
//!   `1 / (1 + ω^{2m})`. These are the limiting weight functions of a
//!   smoothing spline with penalty order `m`.
//!
//! All moments and derivative norms are computed in closed form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::numeric::factorial;

/// A kernel together with the derivative order it estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    ell: usize,
    form: KernelForm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    /// `κ(s) = p(s)(1 - s²)³` on `[-1, 1]`: monomial coefficients of `p`
    /// and of the expanded product (lowest degree first).
    Polynomial { base: Vec<f64>, coefficients: Vec<f64> },
    /// `κ(t) = Σ_k a_k exp(r_k |t|)` with `Re r_k < 0`, even in `t`.
    SplineEquivalent {
        m: usize,
        rates: Vec<Complex64>,
        amplitudes: Vec<Complex64>,
    },
}

/// Builds the minimal-degree `C²` extended kernel estimating `f^{(ell)}`.
pub fn build_extended_kernel(ell: usize) -> KernelSpec {
    let size = ell + 2;
    // ∫ s^k (1 - s²)³ ds over [-1, 1].
    let weight_moment = |k: usize| -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            let k = k as f64;
            2.0 * (1.0 / (k + 1.0) - 3.0 / (k + 3.0) + 3.0 / (k + 5.0) - 1.0 / (k + 7.0))
        }
    };
    let system = DMatrix::from_fn(size, size, |j, k| weight_moment(j + k));
    let mut rhs = DVector::zeros(size);
    rhs[ell] = factorial(ell);
    let p = system
        .lu()
        .solve(&rhs)
        .expect("Hankel moment matrix of a positive weight is nonsingular");

    const CUBE: [f64; 7] = [1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0];
    let mut coefficients = vec![0.0; size + CUBE.len() - 1];
    for (i, pi) in p.iter().enumerate() {
        for (j, cj) in CUBE.iter().enumerate() {
            coefficients[i + j] += pi * cj;
        }
    }
    let mut base: Vec<f64> = p.iter().copied().collect();
    // Parity of ℓ forces every other coefficient to vanish.
    for v in [&mut base, &mut coefficients] {
        for (k, c) in v.iter_mut().enumerate() {
            if k % 2 != ell % 2 {
                *c = 0.0;
            }
        }
    }
    KernelSpec {
        ell,
        form: KernelForm::Polynomial { base, coefficients },
    }
}

/// The equivalent kernel of a smoothing spline with penalty order `m`.
///
/// Poles of `1/(1 + ω^{2m})` in the upper half plane are
/// `ω_k = exp(iπ(2k+1)/2m)`; residues give
/// `κ(t) = -(i/2m) Σ_k ω_k exp(iω_k |t|)`.
pub fn equivalent_spline_kernel(m: usize) -> KernelSpec {
    assert!(m >= 1, "penalty order must be at least 1");
    let mf = m as f64;
    let mut rates = Vec::with_capacity(m);
    let mut amplitudes = Vec::with_capacity(m);
    for k in 0..m {
        let omega = Complex64::from_polar(1.0, PI * (2 * k + 1) as f64 / (2.0 * mf));
        rates.push(Complex64::i() * omega);
        amplitudes.push(-Complex64::i() * omega / (2.0 * mf));
    }
    KernelSpec {
        ell: 0,
        form: KernelForm::SplineEquivalent {
            m,
            rates,
            amplitudes,
        },
    }
}

impl KernelSpec {
    /// Derivative order this kernel estimates.
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    /// `Some((-1, 1))` for compact kernels, `None` for the spline-equivalent family.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.form {
            KernelForm::Polynomial { .. } => Some((-1.0, 1.0)),
            KernelForm::SplineEquivalent { .. } => None,
        }
    }

    /// Penalty order of a spline-equivalent kernel.
    pub fn penalty_order(&self) -> Option<usize> {
        match self.form {
            KernelForm::SplineEquivalent { m, .. } => Some(m),
            KernelForm::Polynomial { .. } => None,
        }
    }

    /// `κ^{(deriv)}(s)`. Compact kernels vanish outside `[-1, 1]`; past the
    /// second derivative the zero extension is only piecewise smooth, and
    /// the interior polynomial is differentiated.
    pub fn evaluate(&self, s: f64, deriv: usize) -> f64 {
        match &self.form {
            KernelForm::Polynomial { base, .. } => {
                if s.abs() > 1.0 {
                    return 0.0;
                }
                // Leibniz rule on p · (1 - s²)³ keeps the boundary zeros exact.
                const CUBE: [f64; 7] = [1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0];
                let mut binom = 1.0;
                let mut acc = 0.0;
                for i in 0..=deriv {
                    acc += binom
                        * poly_eval(&poly_derivative(base, i), s)
                        * poly_eval(&poly_derivative(&CUBE, deriv - i), s);
                    binom = binom * (deriv - i) as f64 / (i + 1) as f64;
                }
                acc
            }
            KernelForm::SplineEquivalent {
                rates, amplitudes, ..
            } => {
                let t = s.abs();
                let mut acc = Complex64::new(0.0, 0.0);
                for (r, a) in rates.iter().zip(amplitudes) {
                    acc += a * r.powu(deriv as u32) * (r * t).exp();
                }
                let sign = if s < 0.0 && deriv % 2 == 1 { -1.0 } else { 1.0 };
                sign * acc.re
            }
        }
    }

    /// `∫ sʲ κ(s) ds`, exact for both families.
    pub fn moment(&self, j: usize) -> f64 {
        match &self.form {
            KernelForm::Polynomial { coefficients, .. } => coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * monomial_integral(k + j))
                .sum(),
            KernelForm::SplineEquivalent {
                rates, amplitudes, ..
            } => {
                if j % 2 == 1 {
                    return 0.0;
                }
                // ∫_0^∞ t^j e^{rt} dt = j! / (-r)^{j+1}
                let half: Complex64 = rates
                    .iter()
                    .zip(amplitudes)
                    .map(|(r, a)| a * factorial(j) / (-r).powu(j as u32 + 1))
                    .sum();
                2.0 * half.re
            }
        }
    }

    /// `‖κ^{(order)}‖₂`, exact.
    pub fn deriv_norm(&self, order: usize) -> f64 {
        match &self.form {
            KernelForm::Polynomial { coefficients, .. } => {
                let d = poly_derivative(coefficients, order);
                let mut square = vec![0.0; 2 * d.len().max(1) - 1];
                for (i, a) in d.iter().enumerate() {
                    for (j, b) in d.iter().enumerate() {
                        square[i + j] += a * b;
                    }
                }
                let integral: f64 = square
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * monomial_integral(k))
                    .sum();
                integral.max(0.0).sqrt()
            }
            KernelForm::SplineEquivalent {
                rates, amplitudes, ..
            } => {
                let coeffs: Vec<Complex64> = rates
                    .iter()
                    .zip(amplitudes)
                    .map(|(r, a)| a * r.powu(order as u32))
                    .collect();
                let mut half = Complex64::new(0.0, 0.0);
                for (rk, ak) in rates.iter().zip(&coeffs) {
                    for (rl, al) in rates.iter().zip(&coeffs) {
                        half += ak * al.conj() / (-(rk + rl.conj()));
                    }
                }
                (2.0 * half.re).max(0.0).sqrt()
            }
        }
    }

    /// Norm of the weight function this kernel induces for `f^{(target)}`:
    /// the `(target - ℓ)`-th derivative of `κ`.
    pub fn estimator_norm(&self, target: usize) -> f64 {
        assert!(
            target >= self.ell,
            "kernel for order {} cannot estimate order {target}",
            self.ell
        );
        self.deriv_norm(target - self.ell)
    }

    /// The same kernel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> KernelSpec {
        let form = match &self.form {
            KernelForm::Polynomial { base, coefficients } => KernelForm::Polynomial {
                base: base.iter().map(|c| c * factor).collect(),
                coefficients: coefficients.iter().map(|c| c * factor).collect(),
            },
            KernelForm::SplineEquivalent {
                m,
                rates,
                amplitudes,
            } => KernelForm::SplineEquivalent {
                m: *m,
                rates: rates.clone(),
                amplitudes: amplitudes.iter().map(|a| a * factor).collect(),
            },
        };
        KernelSpec {
            ell: self.ell,
            form,
        }
    }
}

fn monomial_integral(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (k as f64 + 1.0)
    }
}

fn poly_derivative(coefficients: &[f64], order: usize) -> Vec<f64> {
    if order >= coefficients.len() {
        return vec![0.0];
    }
    coefficients[order..]
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i + order;
            let falling: f64 = ((k - order + 1)..=k).map(|v| v as f64).product();
            c * falling
        })
        .collect()
}

fn poly_eval(coefficients: &[f64], s: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gauss_legendre_integral, integrate_adaptive};

    #[test]
    fn ell_zero_is_scaled_triweight() {
        let k = build_extended_kernel(0);
        for &s in &[-0.9f64, -0.3, 0.0, 0.45, 0.99] {
            let expected = 35.0 / 32.0 * (1.0 - s * s).powi(3);
            assert!((k.evaluate(s, 0) - expected).abs() < 1e-14);
        }
        assert!((k.evaluate(0.0, 0) - 35.0 / 32.0).abs() < 1e-14);
        assert_eq!(k.evaluate(1.5, 0), 0.0);
        assert_eq!(k.evaluate(-1.5, 0), 0.0);
        assert!(k.evaluate(0.0, 1).abs() < 1e-15);
    }

    #[test]
    fn moment_conditions_hold() {
        for ell in 0..6 {
            let k = build_extended_kernel(ell);
            let KernelForm::Polynomial { coefficients, .. } = k.form() else { unreachable!() };
            for j in 0..ell + 2 {
                let target = if j == ell { factorial(ell) } else { 0.0 };
                // rounding scale of the monomial sum
                let scale: f64 = coefficients.iter().enumerate().map(|(i, c)| c.abs() * 2.0 / (i + j + 1) as f64).sum();
                assert!(
                    (k.moment(j) - target).abs() < 1e-13 * scale.max(1.0),
                    "ell={ell} j={j} got {}",
                    k.moment(j)
                );
                // Quadrature oracle, independent of the exact monomial sums.
                let q = gauss_legendre_integral(|s| s.powi(j as i32) * k.evaluate(s, 0), -1.0, 1.0, 20, 1);
                assert!((q - target).abs() < 1e-13 * scale.max(1.0));
            }
        }
        assert!((build_extended_kernel(2).moment(2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_triple_zero() {
        for ell in 0..5 {
            let k = build_extended_kernel(ell);
            for d in 0..3 {
                assert!(k.evaluate(1.0, d).abs() < 1e-12);
                assert!(k.evaluate(-1.0, d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_norms_match_quadrature() {
        let k0 = build_extended_kernel(0);
        // (35/32)² ∫(1-s²)⁶ ds = (35/32)² · 2 · 1024/3003
        let exact = (35.0f64 / 32.0).powi(2) * 2048.0 / 3003.0;
        assert!((k0.deriv_norm(0) - exact.sqrt()).abs() < 1e-13);
        for ell in 0..4 {
            let k = build_extended_kernel(ell);
            for order in 0..3 {
                let h = 1e-4;
                // finite-difference derivative of κ itself, then quadrature
                let base = |s: f64| k.evaluate(s, 0);
                let fd = |s: f64| -> f64 {
                    match order {
                        0 => base(s),
                        1 => (base(s + h) - base(s - h)) / (2.0 * h),
                        _ => (base(s + h) - 2.0 * base(s) + base(s - h)) / (h * h),
                    }
                };
                let q = gauss_legendre_integral(|s| fd(s).powi(2), -1.0, 1.0, 12, 40).sqrt();
                let exact = k.deriv_norm(order);
                assert!(((q - exact) / exact).abs() < 1e-4, "ell={ell} order={order}");
            }
        }
    }

    #[test]
    fn norm_is_homogeneous() {
        let k = build_extended_kernel(1);
        let k2 = k.scaled(2.0);
        assert!((k2.deriv_norm(1) - 2.0 * k.deriv_norm(1)).abs() < 1e-12);
        let e = equivalent_spline_kernel(2);
        assert!((e.scaled(2.0).deriv_norm(0) - 2.0 * e.deriv_norm(0)).abs() < 1e-12);
    }

    #[test]
    fn spline_equivalent_closed_forms() {
        let k1 = equivalent_spline_kernel(1);
        let k2 = equivalent_spline_kernel(2);
        for i in 0..=120 {
            let t = -6.0 + 0.1 * i as f64;
            assert!((k1.evaluate(t, 0) - 0.5 * (-t.abs()).exp()).abs() < 1e-14);
            let a = t.abs() / 2f64.sqrt();
            let closed = 0.5 * (-a).exp() * (a + PI / 4.0).sin();
            assert!((k2.evaluate(t, 0) - closed).abs() < 1e-14);
        }
        assert!((k1.evaluate(0.0, 0) - 0.5).abs() < 1e-15);
        assert!((k2.evaluate(0.0, 0) - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((k1.deriv_norm(0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn spline_equivalent_solves_ode_and_integrates_to_one() {
        for m in 1..=5 {
            let k = equivalent_spline_kernel(m);
            assert!((k.moment(0) - 1.0).abs() < 1e-12, "m={m}");
            let quad = 2.0 * integrate_adaptive(|t| k.evaluate(t, 0), 0.0, 150.0, 1e-13, 1e-13).unwrap();
            assert!((quad - 1.0).abs() < 1e-9, "m={m} quad={quad}");
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for i in 1..=100 {
                let t = if i % 2 == 0 { 0.07 * i as f64 } else { -0.07 * i as f64 };
                let residual = sign * k.evaluate(t, 2 * m) + k.evaluate(t, 0);
                assert!(residual.abs() < 1e-10, "m={m} t={t} residual={residual}");
            }
            // vanishing low moments beyond the zeroth
            for j in 1..2 * m {
                assert!(k.moment(j).abs() < 1e-10, "m={m} j={j}");
            }
        }
    }

    #[test]
    fn spline_equivalent_derivatives_match_finite_differences() {
        for m in 1..=4 {
            let k = equivalent_spline_kernel(m);
            let h = 1e-5;
            for d in 0..(2 * m - 1) {
                for &t in &[-2.3, -0.7, 0.4, 1.1, 3.0] {
                    let fd = (k.evaluate(t + h, d) - k.evaluate(t - h, d)) / (2.0 * h);
                    let exact = k.evaluate(t, d + 1);
                    assert!(
                        (fd - exact).abs() <= 1e-4 * exact.abs().max(1e-3),
                        "m={m} d={d} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn spline_equivalent_norms_match_quadrature() {
        for m in 1..=4 {
            let k = equivalent_spline_kernel(m);
            for order in 0..m {
                let q = 2.0
                    * integrate_adaptive(|t| k.evaluate(t, order).powi(2), 0.0, 80.0, 1e-14, 1e-12)
                        .unwrap();
                let exact = k.deriv_norm(order);
                assert!(((q.sqrt() - exact) / exact).abs() < 1e-8, "m={m} order={order}");
            }
        }
    }
}
