//! Convex smoothing spline compared with the unconstrained fit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapefit::constrained::{fit_constrained, ConePartition, Sign};
use shapefit::spline::default_lambda_candidates;
use shapefit::{fit_spline, gcv_lambda, DesignInfo, SampleSet};

fn main() -> shapefit::Result<()> {
    let n = 150;
    let design = DesignInfo::regular(n);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y = design.points().iter().map(|&t| (t - 0.4).powi(2) + noise.sample(&mut rng)).collect();
    let samples = SampleSet::with_common_sigma(design, y, 0.2)?;

    let m = 2;
    let lambda = gcv_lambda(&samples, m, &default_lambda_candidates(&samples, m))?.value;
    let free = fit_spline(&samples, m, lambda)?;
    let convex = fit_constrained(&samples, m, lambda, &ConePartition::new(2, vec![], Sign::Positive)?)?;
    println!(
        "duality gap {:.2e}, KKT residual {:.2e}, active constraints {}",
        convex.duality_gap(),
        convex.kkt_residual(),
        convex.multipliers().iter().filter(|&&w| w > 0.0).count()
    );
    for t in [0.05, 0.25, 0.5, 0.75, 0.95] {
        println!(
            "t = {t}: f'' unconstrained {:8.3}, convex {:8.3}",
            free.evaluate(t, 2),
            convex.evaluate(t, 2)
        );
    }
    Ok(())
}
