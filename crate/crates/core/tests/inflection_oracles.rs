use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use shapefit::inflection::{
    cramer_leadbetter_count, false_inflection_localization, monte_carlo_inflections, Method, ProcessStats, Scenario,
};
use shapefit::numeric::linspace;
use shapefit::TruthFunction;

/// `Z(s) = a(s) X(s)` with `X` a random trigonometric sum plus a linear mean.
/// Crossings are counted on a fine grid and compared with the integral.
#[test]
fn crossing_integral_matches_simulated_process() {
    let freqs = [3.0, 7.0, 11.0, 16.0];
    let amps = [0.6, 0.5, 0.4, 0.3];
    let var: f64 = amps.iter().map(|a| a * a).sum();
    let dvar: f64 = amps.iter().zip(&freqs).map(|(a, w)| a * a * w * w).sum();
    let scale = |s: f64| 1.0 + s;
    let mean = |s: f64| 1.5 * (s - 0.4);

    let mut stats = ProcessStats::stationary(1.0, 1.0, 0.0, 1.0);
    stats.mean = Box::new(mean);
    stats.mean_deriv = Box::new(|_| 1.5);
    stats.sd = Box::new(move |s| scale(s) * var.sqrt());
    stats.deriv_sd = Box::new(move |s| (var + scale(s).powi(2) * dvar).sqrt());
    stats.corr = Box::new(move |s| scale(s) * var / ((scale(s) * var.sqrt()) * (var + scale(s).powi(2) * dvar).sqrt()));
    let predicted = cramer_leadbetter_count(&stats).unwrap();

    let grid = linspace(0.0, 1.0, 4001);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let reps = 4000;
    let mut counts = Vec::with_capacity(reps);
    for _ in 0..reps {
        let coef: Vec<(f64, f64)> = amps
            .iter()
            .map(|&a| {
                let c: f64 = StandardNormal.sample(&mut rng);
                let d: f64 = StandardNormal.sample(&mut rng);
                (a * c, a * d)
            })
            .collect();
        let z: Vec<f64> = grid
            .iter()
            .map(|&s| {
                let x: f64 = coef.iter().zip(&freqs).map(|((c, d), w)| c * (w * s).cos() + d * (w * s).sin()).sum();
                mean(s) + scale(s) * x
            })
            .collect();
        counts.push(z.windows(2).filter(|w| w[0] * w[1] < 0.0).count() as f64);
    }
    let avg = counts.iter().sum::<f64>() / reps as f64;
    let sd = (counts.iter().map(|c| (c - avg).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let se = sd / (reps as f64).sqrt();
    assert!((avg - predicted).abs() < 4.0 * se, "simulated {avg} ± {se}, predicted {predicted}");
}

fn sine_scenario(n: usize, sigma: f64) -> Scenario {
    Scenario::new(TruthFunction::sine(), n, sigma, 2, Method::Kernel { halfwidth: 0.1 }).on_interval(0.1, 0.9)
}

#[test]
fn smaller_noise_gives_fewer_spurious_sign_changes() {
    let noisy = monte_carlo_inflections(&sine_scenario(500, 0.06), 400, 3).unwrap();
    let quiet = monte_carlo_inflections(&sine_scenario(500, 0.03), 400, 3).unwrap();
    assert!(quiet.predicted_excess < noisy.predicted_excess);
    assert!(quiet.empirical_mean < noisy.empirical_mean);
}

#[test]
fn far_sign_changes_become_rarer_with_more_data() {
    let fractions: Vec<f64> = [250, 1000, 4000]
        .iter()
        .map(|&n| false_inflection_localization(&sine_scenario(n, 0.15), 400, 0.1, 5).unwrap().fraction)
        .collect();
    assert!(fractions.windows(2).all(|w| w[1] <= w[0]), "{fractions:?}");
    assert!(fractions[0] > fractions[2]);
}

#[test]
fn count_is_stable_across_tolerances() {
    let mut means = Vec::new();
    for tol in [1e-4, 1e-3] {
        let mut scenario = sine_scenario(500, 0.05);
        scenario.tol_fraction = tol;
        means.push(monte_carlo_inflections(&scenario, 300, 8).unwrap().empirical_mean);
    }
    assert!((means[0] - means[1]).abs() < 0.02, "{means:?}");
}

/// Near the inflection point the spline smoother behaves like its
/// equivalent kernel, so the same excess prediction applies.
#[test]
fn spline_excess_matches_prediction_near_the_inflection() {
    let h: f64 = 0.05;
    let sigma = 0.8;
    let lambda = shapefit::spline::lambda_for_halfwidth(h, 3, sigma, 1.0);
    let scenario =
        Scenario::new(TruthFunction::sine(), 400, sigma, 2, Method::Spline { m: 3, lambda }).on_interval(0.3, 0.7);
    let report = monte_carlo_inflections(&scenario, 2000, 4).unwrap();
    assert_eq!(report.true_count, 1);
    assert!(report.predicted_excess > 0.2, "{}", report.predicted_excess);
    assert!(
        (report.empirical_mean - report.predicted).abs() < 3.0 * report.se,
        "simulated {} ± {}, predicted {}",
        report.empirical_mean,
        report.se,
        report.predicted
    );
}
