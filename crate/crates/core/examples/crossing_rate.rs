//! Expected zero crossings of a Gaussian process with a linear mean.

use shapefit::inflection::{cramer_leadbetter_count, ProcessStats};

fn main() -> shapefit::Result<()> {
    let stationary = ProcessStats::stationary(1.0, 20.0, 0.0, 1.0);
    println!(
        "stationary, gamma/sigma = 20: {:.4} crossings (20/pi = {:.4})",
        cramer_leadbetter_count(&stationary)?,
        20.0 / std::f64::consts::PI
    );
    for slope in [1.0, 5.0, 20.0] {
        let mut stats = ProcessStats::stationary(1.0, 20.0, 0.0, 1.0);
        stats.mean = Box::new(move |s| slope * (s - 0.5));
        stats.mean_deriv = Box::new(move |_| slope);
        println!("mean slope {slope:>4}: {:.4} expected crossings", cramer_leadbetter_count(&stats)?);
    }
    Ok(())
}
