//! Kernel estimate of f'' from noisy samples of a sine, with GCV bandwidth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapefit::smoother::{gcv_bandwidth_default, gm_estimate, interior_grid};
use shapefit::{build_extended_kernel, DesignInfo, SampleSet};

fn main() -> shapefit::Result<()> {
    let n = 1000;
    let design = DesignInfo::regular(n);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y = design
        .points()
        .iter()
        .map(|&t| (2.0 * std::f64::consts::PI * t).sin() + noise.sample(&mut rng))
        .collect();
    let samples = SampleSet::with_common_sigma(design, y, 0.05)?;

    let h_gcv = gcv_bandwidth_default(&samples)?.value;
    let h = 6.0 * h_gcv;
    let kernel = build_extended_kernel(2);
    let curve = gm_estimate(&samples, &kernel, h, &interior_grid(0.0, 1.0, h, 4), false)?;
    println!("GCV halfwidth {h_gcv:.4}, using {h:.4} for the second derivative");
    for (t, v) in curve.grid.iter().zip(&curve.values).step_by(4) {
        let truth = -(2.0 * std::f64::consts::PI).powi(2) * (2.0 * std::f64::consts::PI * t).sin();
        println!("t = {t:.3}  estimate {v:9.3}  truth {truth:9.3}");
    }
    Ok(())
}
