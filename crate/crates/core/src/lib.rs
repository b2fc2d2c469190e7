//! Shape-constrained smoothing splines and inflection-point diagnostics.

pub mod banded;
pub mod bspline;
pub mod cli;
pub mod constrained;
pub mod design;
pub mod error;
pub mod functions;
pub mod inflection;
pub mod kernels;
pub mod numeric;
pub mod pilot;
pub mod precision;
pub mod smoother;
pub mod spline;

pub use design::{DesignInfo, LimitDistribution, SampleSet};
pub use error::{Error, Result};
pub use functions::{InflectionPoint, TruthFunction};
pub use kernels::{build_extended_kernel, equivalent_spline_kernel, KernelSpec};
pub use spline::{fit_spline, gcv_lambda, green_row, SplineModel, SplineProblem};
