//! Monte Carlo count of sign changes in a kernel estimate of f'' against
//! the predicted number of spurious ones.

use shapefit::inflection::{false_inflection_localization, monte_carlo_inflections, Method, Scenario};
use shapefit::TruthFunction;

fn main() -> shapefit::Result<()> {
    for sigma in [0.02, 0.05, 0.1] {
        let scenario =
            Scenario::new(TruthFunction::sine(), 500, sigma, 2, Method::Kernel { halfwidth: 0.1 }).on_interval(0.1, 0.9);
        let report = monte_carlo_inflections(&scenario, 500, 1)?;
        println!(
            "sigma {sigma}: mean sign changes {:.3} ± {:.3}, predicted {:.3} (true count {})",
            report.empirical_mean, report.se, report.predicted, report.true_count
        );
    }
    let scenario =
        Scenario::new(TruthFunction::sine(), 2000, 0.05, 2, Method::Kernel { halfwidth: 0.1 }).on_interval(0.1, 0.9);
    let local = false_inflection_localization(&scenario, 300, 0.1, 2)?;
    println!(
        "replicates with a sign change farther than 0.1 from the true one: {}/{}",
        local.far_replicates, local.replicates
    );
    Ok(())
}
