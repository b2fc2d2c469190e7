//! Smoothing spline fit with GCV-selected penalty.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapefit::spline::default_lambda_candidates;
use shapefit::{fit_spline, gcv_lambda, DesignInfo, SampleSet};

fn main() -> shapefit::Result<()> {
    let n = 200;
    let design = DesignInfo::regular(n);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y = design.points().iter().map(|&t| (3.0 * t).exp() / 10.0 + noise.sample(&mut rng)).collect();
    let samples = SampleSet::with_estimated_sigma(design, y)?;

    let m = 2;
    let selection = gcv_lambda(&samples, m, &default_lambda_candidates(&samples, m))?;
    let model = fit_spline(&samples, m, selection.value)?;
    println!(
        "lambda {:.3e}, trace of hat matrix {:.2}, equivalent halfwidth at 0.5 {:.4}",
        model.lambda(),
        model.hat_trace(),
        model.equivalent_halfwidth(&samples, 0.5)?
    );
    for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
        println!("t = {t}: fit {:.4}, truth {:.4}", model.evaluate(t, 0), (3.0 * t).exp() / 10.0);
    }
    Ok(())
}
