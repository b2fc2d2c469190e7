//! Symmetric positive definite band matrices: Cholesky factorization,
//! solves, and the band of the inverse.
//!
//! Storage is generic over the scalar so the spline normal equations can be
//! factored in double-double precision.

use crate::error::{Error, Result};
use crate::precision::Real;

/// Lower band of a symmetric matrix: `get(i, j)` for `i - bandwidth ≤ j ≤ i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetric<T = f64> {
    n: usize,
    bandwidth: usize,
    data: Vec<T>,
}

impl<T: Real> BandedSymmetric<T> {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![T::zero(); n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (i - j)
    }

    /// Entry `(i, j)` of the full symmetric matrix (zero outside the band).
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] = self.data[k] + v;
    }

    /// `self + alpha * other`, same shape.
    pub fn axpy(&self, alpha: T, other: &BandedSymmetric<T>) -> BandedSymmetric<T> {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bandwidth, other.bandwidth);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + alpha * b)
            .collect();
        BandedSymmetric {
            n: self.n,
            bandwidth: self.bandwidth,
            data,
        }
    }

    pub fn scaled(&self, alpha: T) -> BandedSymmetric<T> {
        BandedSymmetric {
            n: self.n,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|&v| v * alpha).collect(),
        }
    }

    /// Entrywise conversion to another scalar type.
    pub fn convert<U: Real>(&self) -> BandedSymmetric<U> {
        BandedSymmetric {
            n: self.n,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                out[i] = out[i] + a * x[j];
                if j != i {
                    out[j] = out[j] + a * x[i];
                }
            }
        }
        out
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.mul_vec(x)
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    /// Banded Cholesky `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<BandedCholesky<T>> {
        let bw = self.bandwidth;
        let mut l = self.clone();
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = l.data[l.idx(i, j)];
                for k in lo.max(j.saturating_sub(bw))..j {
                    sum = sum - l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                if i == j {
                    let pivot = sum.to_f64();
                    if !(pivot > 0.0) || !pivot.is_finite() {
                        return Err(Error::numerical(format!(
                            "band matrix not positive definite at pivot {i} ({pivot:e})"
                        )));
                    }
                    let k = l.idx(i, i);
                    l.data[k] = sum.sqrt();
                } else {
                    let k = l.idx(i, j);
                    l.data[k] = sum / l.data[l.idx(j, j)];
                }
            }
        }
        Ok(BandedCholesky { l })
    }
}

/// Cholesky factor stored in the same band layout.
#[derive(Debug, Clone)]
pub struct BandedCholesky<T = f64> {
    l: BandedSymmetric<T>,
}

impl<T: Real> BandedCholesky<T> {
    pub fn dim(&self) -> usize {
        self.l.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve with an `f64` right-hand side, rounding the result to `f64`.
    pub fn solve_f64(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<T> = b.iter().map(|&v| T::from_f64(v)).collect();
        self.solve_in_place(&mut x);
        x.into_iter().map(Real::to_f64).collect()
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let l = &self.l;
        let bw = l.bandwidth;
        let n = l.n;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s = s - l.data[l.idx(i, k)] * x[k];
            }
            x[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for k in (i + 1)..=hi {
                s = s - l.data[l.idx(k, i)] * x[k];
            }
            x[i] = s / l.data[l.idx(i, i)];
        }
    }

    /// Entries of `A⁻¹` inside the band (Takahashi recursion on the unit
    /// lower factor).
    pub fn inverse_band(&self) -> BandedSymmetric<T> {
        let l = &self.l;
        let n = l.n;
        let bw = l.bandwidth;
        let mut z = BandedSymmetric::zeros(n, bw);
        let unit = |k: usize, j: usize| l.data[l.idx(k, j)] / l.data[l.idx(j, j)];
        for j in (0..n).rev() {
            let hi = (j + bw).min(n - 1);
            for i in ((j + 1)..=hi).rev() {
                let mut s = T::zero();
                for k in (j + 1)..=hi {
                    s = s - unit(k, j) * z.get(i, k);
                }
                let idx = z.idx(i, j);
                z.data[idx] = s;
            }
            let d = l.data[l.idx(j, j)] * l.data[l.idx(j, j)];
            let mut s = T::one() / d;
            for k in (j + 1)..=hi {
                s = s - unit(k, j) * z.get(k, j);
            }
            let idx = z.idx(j, j);
            z.data[idx] = s;
        }
        z
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.l.n)
            .map(|i| 2.0 * self.l.data[self.l.idx(i, i)].to_f64().ln())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn random_spd(n: usize, bw: usize, seed: u64) -> BandedSymmetric {
        // diagonally dominant band matrix from a simple LCG
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = BandedSymmetric::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, next());
            }
            a.add(i, i, 2.0 * bw as f64 + 1.0 + next());
        }
        a
    }

    fn dense(a: &BandedSymmetric) -> DMatrix<f64> {
        DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
    }

    proptest! {
        #[test]
        fn solve_and_inverse_band_match_dense(n in 1usize..40, bw in 0usize..5, seed in 0u64..1000) {
            let a = random_spd(n, bw, seed);
            let chol = a.cholesky().unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = chol.solve(&b);
            let ax = a.mul_vec(&x);
            for (u, v) in ax.iter().zip(&b) {
                prop_assert!((u - v).abs() < 1e-10);
            }
            let inv = dense(&a).try_inverse().unwrap();
            let z = chol.inverse_band();
            for i in 0..n {
                for j in i.saturating_sub(bw)..=i {
                    prop_assert!((z.get(i, j) - inv[(i, j)]).abs() < 1e-10);
                }
            }
            let det = dense(&a).determinant();
            prop_assert!((chol.log_det() - det.ln()).abs() < 1e-8 * det.ln().abs().max(1.0));
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = BandedSymmetric::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        assert!(a.cholesky().is_err());
    }
}
