//! Reads the bundled sine data and runs the `fit` command on it.

use std::path::Path;

use shapefit::cli::ingest_csv;

fn main() -> shapefit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sine.csv");
    let samples = ingest_csv(&path, 6)?;
    println!("{} rows, rms sigma {:.4}", samples.len(), samples.rms_sigma());

    let args = ["shapefit", "fit", "--input", path.to_str().unwrap(), "--method", "spline", "--changepoints", "1", "--ell", "2", "--m", "3"];
    let code = shapefit::cli::main_with_args(args);
    println!("exit code {code}");
    Ok(())
}
