//! B-spline basis with knots at the design points and natural
//! (degree `m - 1`) extension past the end knots.

use crate::error::{Error, Result};
use crate::numeric::factorial;
use crate::precision::Real;

/// Basis of degree `2m - 1` splines with simple interior knots at
/// `t_2, …, t_{n-1}` and `2m`-fold end knots at `t_1`, `t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    m: usize,
    degree: usize,
    knots: Vec<f64>,
    n_basis: usize,
    lo: f64,
    hi: f64,
}

/// Nonzero entries of one basis row: `values[k]` belongs to basis `first + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    pub first: usize,
    pub values: Vec<f64>,
}

impl BasisRow {
    pub fn dot(&self, coefficients: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&coefficients[self.first..])
            .map(|(a, b)| a * b)
            .sum()
    }
}

impl SplineBasis {
    pub fn new(points: &[f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("penalty order m must be at least 1"));
        }
        if points.len() < 2 {
            return Err(Error::invalid("spline basis needs at least two knots"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("design points must be distinct and sorted"));
        }
        let degree = 2 * m - 1;
        let n = points.len();
        let mut knots = Vec::with_capacity(n + 2 * degree);
        knots.extend(std::iter::repeat(points[0]).take(degree + 1));
        knots.extend_from_slice(&points[1..n - 1]);
        knots.extend(std::iter::repeat(points[n - 1]).take(degree + 1));
        let n_basis = knots.len() - degree - 1;
        Ok(Self {
            m,
            degree,
            knots,
            n_basis,
            lo: points[0],
            hi: points[n - 1],
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.n_basis
    }

    pub fn is_empty(&self) -> bool {
        self.n_basis == 0
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Range covered by the knots.
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Distinct breakpoints inside `[lo, hi]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.knots.clone();
        b.dedup();
        b
    }

    fn find_span(&self, t: f64) -> usize {
        let p = self.degree;
        if t >= self.knots[self.n_basis] {
            return self.n_basis - 1;
        }
        if t <= self.knots[p] {
            return p;
        }
        // last index s with knots[s] <= t
        self.knots.partition_point(|&k| k <= t) - 1
    }

    /// All derivatives `0..=nd` of the `degree + 1` nonzero basis functions
    /// at `t` inside the knot range (NURBS Book A2.3).
    fn derivatives_at<T: Real>(&self, span: usize, t: f64, nd: usize) -> Vec<Vec<T>> {
        let p = self.degree;
        let u = &self.knots;
        let t = T::from_f64(t);
        let zero = T::zero();
        let mut ndu = vec![vec![zero; p + 1]; p + 1];
        let mut left = vec![zero; p + 1];
        let mut right = vec![zero; p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = t - T::from_f64(u[span + 1 - j]);
            right[j] = T::from_f64(u[span + j]) - t;
            let mut saved = zero;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![zero; p + 1]; nd + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let top = nd.min(p);
        let mut a = [vec![zero; p + 1], vec![zero; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for k in 1..=top {
                let mut d = zero;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2: usize = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let col = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][col];
                    d = d + a[s2][j] * ndu[col][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d = d + a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=top {
            for v in ders[k].iter_mut() {
                *v = *v * T::from_f64(factor);
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Row of `deriv`-th derivatives of all basis functions at `t`.
    ///
    /// Outside `[t_1, t_n]` the spline continues as the degree `m - 1`
    /// Taylor polynomial at the nearest end knot, which is the natural
    /// spline extension.
    pub fn row(&self, t: f64, deriv: usize) -> BasisRow {
        let (first, values) = self.row_in::<f64>(t, deriv);
        BasisRow { first, values }
    }

    /// [`row`](Self::row) evaluated in another scalar type.
    pub fn row_in<T: Real>(&self, t: f64, deriv: usize) -> (usize, Vec<T>) {
        let p = self.degree;
        if t < self.lo || t > self.hi {
            let edge = if t < self.lo { self.lo } else { self.hi };
            let span = self.find_span(edge);
            let first = span - p;
            if deriv >= self.m {
                return (first, vec![T::zero(); p + 1]);
            }
            let ders = self.derivatives_at::<T>(span, edge, self.m - 1);
            let dt = t - edge;
            let mut values = vec![T::zero(); p + 1];
            for r in deriv..self.m {
                let c = T::from_f64(dt.powi((r - deriv) as i32) / factorial(r - deriv));
                for (v, d) in values.iter_mut().zip(&ders[r]) {
                    *v = *v + c * *d;
                }
            }
            return (first, values);
        }
        let span = self.find_span(t);
        let first = span - p;
        if deriv > p {
            return (first, vec![T::zero(); p + 1]);
        }
        let mut ders = self.derivatives_at::<T>(span, t, deriv);
        (first, ders.swap_remove(deriv))
    }

    /// Value of the spline `Σ c_j B_j^{(deriv)}(t)`.
    pub fn evaluate(&self, coefficients: &[f64], t: f64, deriv: usize) -> f64 {
        self.row(t, deriv).dot(coefficients)
    }
}
