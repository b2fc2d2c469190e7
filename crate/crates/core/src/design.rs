//! Design points, their limiting distribution, and observed samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The limiting design distribution `F` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LimitDistribution {
    /// `F(t) = t`.
    #[default]
    Uniform,
    /// `F(t) = t^exponent`, `exponent > 0`.
    Power { exponent: f64 },
}

impl LimitDistribution {
    pub fn cdf(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            LimitDistribution::Uniform => t,
            LimitDistribution::Power { exponent } => t.powf(exponent),
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        match *self {
            LimitDistribution::Uniform => 1.0,
            LimitDistribution::Power { exponent } => exponent * t.powf(exponent - 1.0),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match *self {
            LimitDistribution::Uniform => p,
            LimitDistribution::Power { exponent } => p.powf(1.0 / exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LimitDistribution::Uniform => Ok(()),
            LimitDistribution::Power { exponent } if exponent.is_finite() && exponent > 0.0 => {
                Ok(())
            }
            LimitDistribution::Power { exponent } => Err(Error::invalid(format!(
                "power design exponent must be positive, got {exponent}"
            ))),
        }
    }
}

/// Sorted design points in `[0, 1]` and their declared limit distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignInfo {
    points: Vec<f64>,
    limit: LimitDistribution,
}

impl DesignInfo {
    pub fn new(points: Vec<f64>, limit: LimitDistribution) -> Result<Self> {
        limit.validate()?;
        if points.is_empty() {
            return Err(Error::invalid("design needs at least one point"));
        }
        if let Some(bad) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::invalid(format!("design point {bad} outside [0, 1]")));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("design points must be sorted ascending"));
        }
        Ok(Self { points, limit })
    }

    /// Midpoint design `t_i = (i - 1/2)/n` with uniform limit.
    pub fn regular(n: usize) -> Self {
        Self::quantiles(n, LimitDistribution::Uniform)
    }

    /// `t_i = F⁻¹((i - 1/2)/n)`.
    pub fn quantiles(n: usize, limit: LimitDistribution) -> Self {
        assert!(n >= 1);
        let points = (0..n)
            .map(|i| limit.quantile((i as f64 + 0.5) / n as f64))
            .collect();
        Self { points, limit }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn limit(&self) -> LimitDistribution {
        self.limit
    }

    /// `sup_t |F_n(t) - F(t)|`, evaluated at both one-sided limits of every
    /// jump of the empirical distribution.
    pub fn empirical_discrepancy(&self) -> f64 {
        let n = self.points.len() as f64;
        let mut sup: f64 = 0.0;
        let mut i = 0;
        while i < self.points.len() {
            // Tied points form a single jump.
            let t = self.points[i];
            let mut j = i;
            while j + 1 < self.points.len() && self.points[j + 1] == t {
                j += 1;
            }
            let f = self.limit.cdf(t);
            sup = sup.max((f - i as f64 / n).abs());
            sup = sup.max(((j + 1) as f64 / n - f).abs());
            i = j + 1;
        }
        sup.max((1.0 - self.limit.cdf(1.0)).abs())
    }

    /// `F'(t)` from the declared limit distribution.
    pub fn design_density(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("design density requested at {t} outside [0, 1]")));
        }
        Ok(self.limit.density(t))
    }

    /// Largest gap between consecutive points, including the gaps to 0 and 1.
    pub fn max_gap(&self) -> f64 {
        let inner = self
            .points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        inner
            .max(self.points[0])
            .max(1.0 - self.points[self.points.len() - 1])
    }

    /// Quadrature weights `(t_{i+1} - t_{i-1})/2` with `t_0 := t_1` and
    /// `t_{n+1} := t_n`.
    pub fn gap_weights(&self) -> Vec<f64> {
        let t = &self.points;
        let n = t.len();
        (0..n)
            .map(|i| {
                let prev = if i == 0 { t[0] } else { t[i - 1] };
                let next = if i + 1 == n { t[n - 1] } else { t[i + 1] };
                0.5 * (next - prev)
            })
            .collect()
    }
}

/// Difference-based noise estimate `σ̂² = Σ (y_{i+1} - y_i)² / (2(n - 1))`
/// for responses ordered by design point.
pub fn rice_sigma(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::invalid("noise estimate needs at least two observations"));
    }
    let ss: f64 = y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok((ss / (2.0 * (y.len() - 1) as f64)).sqrt())
}

/// Observations `y_i = f(t_i) + ε_i` with per-point noise levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    design: DesignInfo,
    y: Vec<f64>,
    sigma: Vec<f64>,
}

impl SampleSet {
    pub fn new(design: DesignInfo, y: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if y.len() != design.len() {
            return Err(Error::invalid(format!(
                "{} responses for {} design points",
                y.len(),
                design.len()
            )));
        }
        if sigma.len() != y.len() {
            return Err(Error::invalid("one noise level per observation required"));
        }
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!("noise levels must be positive, got {s}")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("responses must be finite"));
        }
        Ok(Self { design, y, sigma })
    }

    pub fn with_common_sigma(design: DesignInfo, y: Vec<f64>, sigma: f64) -> Result<Self> {
        let n = y.len();
        Self::new(design, y, vec![sigma; n])
    }

    /// Uses [`rice_sigma`] for every observation.
    pub fn with_estimated_sigma(design: DesignInfo, y: Vec<f64>) -> Result<Self> {
        let s = rice_sigma(&y)?;
        if s <= 0.0 {
            return Err(Error::invalid(
                "noise level estimated as zero; supply sigma explicitly",
            ));
        }
        Self::with_common_sigma(design, y, s)
    }

    /// Same design and noise levels, new responses.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.design.clone(), y, self.sigma.clone())
    }

    pub fn design(&self) -> &DesignInfo {
        &self.design
    }

    pub fn t(&self) -> &[f64] {
        self.design.points()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Root mean square of the noise levels.
    pub fn rms_sigma(&self) -> f64 {
        (self.sigma.iter().map(|s| s * s).sum::<f64>() / self.sigma.len() as f64).sqrt()
    }

    pub fn rice_sigma(&self) -> Result<f64> {
        rice_sigma(&self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_design_discrepancy_is_half_over_n() {
        for n in [1usize, 2, 7, 100, 1000] {
            let d = DesignInfo::regular(n);
            assert!((d.empirical_discrepancy() * n as f64 - 0.5).abs() < 1e-12, "n={n}");
        }
        let d = DesignInfo::quantiles(50, LimitDistribution::Power { exponent: 2.0 });
        assert!((d.empirical_discrepancy() - 0.01).abs() < 1e-12);
        let single = DesignInfo::new(vec![0.5], LimitDistribution::Uniform).unwrap();
        assert!((single.empirical_discrepancy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discrepancy_matches_fine_grid_kolmogorov() {
        let pts = vec![0.05, 0.1, 0.1, 0.42, 0.43, 0.8, 0.97];
        let d = DesignInfo::new(pts.clone(), LimitDistribution::Uniform).unwrap();
        let n = pts.len() as f64;
        let mut brute: f64 = 0.0;
        for i in 0..=200_000 {
            let t = i as f64 / 200_000.0;
            let fn_t = pts.iter().filter(|&&p| p <= t).count() as f64 / n;
            brute = brute.max((fn_t - t).abs());
        }
        assert!((d.empirical_discrepancy() - brute).abs() < 1e-5);
    }

    #[test]
    fn densities() {
        let u = DesignInfo::regular(10);
        assert_eq!(u.design_density(0.3).unwrap(), 1.0);
        let p = DesignInfo::quantiles(10, LimitDistribution::Power { exponent: 2.0 });
        assert!((p.design_density(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.design_density(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(p.design_density(1.2).is_err());
    }

    #[test]
    fn rice_estimates() {
        assert_eq!(rice_sigma(&[2.0; 10]).unwrap(), 0.0);
        let a = 0.7;
        let alt: Vec<f64> = (0..101).map(|i| if i % 2 == 0 { a } else { -a }).collect();
        let s = rice_sigma(&alt).unwrap();
        assert!((s * s - 2.0 * a * a).abs() < 1e-12);
        assert!(rice_sigma(&[1.0]).is_err());
    }

    #[test]
    fn rice_estimate_on_pure_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let y: Vec<f64> = (0..10_000).map(|_| noise.sample(&mut rng)).collect();
        let s = rice_sigma(&y).unwrap();
        assert!((s / 0.3 - 1.0).abs() < 0.05);
    }

    #[test]
    fn validation() {
        assert!(DesignInfo::new(vec![0.2, 0.1], LimitDistribution::Uniform).is_err());
        assert!(DesignInfo::new(vec![0.2, 1.1], LimitDistribution::Uniform).is_err());
        let d = DesignInfo::regular(3);
        assert!(SampleSet::new(d.clone(), vec![1.0, 2.0], vec![1.0; 2]).is_err());
        assert!(SampleSet::with_common_sigma(d, vec![1.0; 3], 0.0).is_err());
    }
}
