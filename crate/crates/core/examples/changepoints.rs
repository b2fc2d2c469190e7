//! Locates the single inflection point of a noisy sine by searching
//! over change-point positions for the constrained spline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapefit::constrained::optimize_changepoints;
use shapefit::spline::default_lambda_candidates;
use shapefit::{gcv_lambda, DesignInfo, SampleSet};

fn main() -> shapefit::Result<()> {
    let n = 400;
    let design = DesignInfo::regular(n);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y = design
        .points()
        .iter()
        .map(|&t| (2.0 * std::f64::consts::PI * t).sin() + noise.sample(&mut rng))
        .collect();
    let samples = SampleSet::with_common_sigma(design, y, 0.05)?;

    let m = 3;
    let lambda = gcv_lambda(&samples, m, &default_lambda_candidates(&samples, m))?.value;
    let (partition, fit) = optimize_changepoints(&samples, m, lambda, 2, 1, 40)?;
    println!(
        "change point {:.4} (truth 0.5), leading sign {:?}, objective {:.6}",
        partition.change_points()[0],
        partition.leading_sign(),
        fit.primal_value()
    );
    Ok(())
}
