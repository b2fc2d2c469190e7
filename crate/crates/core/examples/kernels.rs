//! Extended kernels and their moments, plus the spline-equivalent kernels.

use shapefit::{build_extended_kernel, equivalent_spline_kernel};

fn main() {
    for ell in 0..=3 {
        let k = build_extended_kernel(ell);
        let moments: Vec<String> = (0..ell + 3).map(|j| format!("{:+.4}", k.moment(j))).collect();
        println!(
            "ell = {ell}: kappa(0) = {:.4}, moments [{}], estimator norm {:.3}",
            k.evaluate(0.0, 0),
            moments.join(", "),
            k.estimator_norm(ell)
        );
    }
    for m in 1..=3 {
        let k = equivalent_spline_kernel(m);
        let values: Vec<String> = [0.0, 0.5, 1.0, 2.0, 4.0].iter().map(|&t| format!("{:.5}", k.evaluate(t, 0))).collect();
        println!("spline kernel m = {m} at t = 0, 0.5, 1, 2, 4: {}", values.join(" "));
    }
}
