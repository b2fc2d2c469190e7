//! Known regression functions for simulation, with exact derivatives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::Curve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TruthFunction {
    /// `amplitude · sin(2π·frequency·t + phase)`.
    Sine {
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `Σ c_k t^k`.
    Polynomial { coefficients: Vec<f64> },
    /// `amplitude · exp(rate·t)`.
    Exponential { amplitude: f64, rate: f64 },
}

fn one() -> f64 {
    1.0
}

/// A zero of `f^{(ℓ)}` and the slope `f^{(ℓ+1)}` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflectionPoint {
    pub x: f64,
    pub slope: f64,
}

impl TruthFunction {
    pub fn sine() -> Self {
        TruthFunction::Sine {
            frequency: 1.0,
            amplitude: 1.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, t: f64, deriv: usize) -> f64 {
        match self {
            TruthFunction::Sine {
                frequency,
                amplitude,
                phase,
            } => {
                let w = 2.0 * PI * frequency;
                let arg = w * t + phase + 0.5 * PI * deriv as f64;
                amplitude * w.powi(deriv as i32) * arg.sin()
            }
            TruthFunction::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(deriv)
                .map(|(k, c)| {
                    let falling: f64 = ((k - deriv + 1)..=k).map(|v| v as f64).product();
                    c * falling * t.powi((k - deriv) as i32)
                })
                .sum(),
            TruthFunction::Exponential { amplitude, rate } => {
                amplitude * rate.powi(deriv as i32) * (rate * t).exp()
            }
        }
    }

    /// Zeros of `f^{(ℓ)}` in the open interval `(a, b)` where it changes
    /// sign, located by scanning 4000 cells and bisecting.
    pub fn inflection_points(&self, ell: usize, a: f64, b: f64) -> Result<Vec<InflectionPoint>> {
        if !(a < b) {
            return Err(Error::invalid(format!("empty interval [{a}, {b}]")));
        }
        let cells = 4000;
        let step = (b - a) / cells as f64;
        let f = |t: f64| self.eval(t, ell);
        let mut out = Vec::new();
        let mut x0 = a;
        let mut f0 = f(a);
        for i in 1..=cells {
            let x1 = if i == cells { b } else { a + step * i as f64 };
            let f1 = f(x1);
            if f0 == 0.0 && x0 > a {
                out.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        out.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
        Ok(out
            .into_iter()
            .map(|x| InflectionPoint {
                x,
                slope: self.eval(x, ell + 1),
            })
            .collect())
    }
}

impl Curve for TruthFunction {
    fn eval(&self, t: f64, deriv: usize) -> f64 {
        TruthFunction::eval(self, t, deriv)
    }
}
