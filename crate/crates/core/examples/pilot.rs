//! Two-stage fit: a kernel pilot locates candidate inflection regions and
//! the constrained spline enforces the implied sign pattern.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapefit::pilot::{run_pilot, PilotOptions};
use shapefit::{DesignInfo, SampleSet};

fn main() -> shapefit::Result<()> {
    let n = 2000;
    let design = DesignInfo::regular(n);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let y = design
        .points()
        .iter()
        .map(|&t| (2.0 * std::f64::consts::PI * t).sin() + noise.sample(&mut rng))
        .collect();
    let samples = SampleSet::with_common_sigma(design, y, 0.1)?;

    let run = run_pilot(&samples, &PilotOptions::new(2, 3))?;
    println!(
        "pilot halfwidth {:.4} (GCV {:.4}), {} candidate sign changes",
        run.first.h_n,
        run.first.h_gcv,
        run.intervals.len()
    );
    for iv in &run.intervals {
        println!("  {:.4} in [{:.4}, {:.4}]", iv.center, iv.lo, iv.hi);
    }
    for w in &run.plan.warnings {
        println!("  warning: {w}");
    }
    println!(
        "implied sign changes {}, final fit sign changes at {:?}",
        run.plan.k_hat, run.second.final_crossings
    );
    Ok(())
}
