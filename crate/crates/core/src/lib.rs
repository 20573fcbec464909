//! Spline single-index prediction.
//!
//! A regression function `m(x)` is approximated by `g(x'θ)` with a unit
//! direction `θ` (last coordinate positive) and a univariate link `g`. The
//! link is a cubic regression spline in the transformed index
//! `u = F_d(x'θ)`, and `θ` minimizes the profiled mean squared residual.
//!
//! ```no_run
//! use splinesip::estimator::{fit_sip, predict, FitConfig};
//! use splinesip::montecarlo::gen_example1;
//!
//! let data = gen_example1(100, 0.0, 0.3, 7).unwrap();
//! let fit = fit_sip(data.x(), data.y(), &FitConfig::default()).unwrap();
//! println!("theta = {:?}", fit.theta_original());
//! println!("m(0, 0) = {}", predict(&fit, &[0.0, 0.0]).unwrap());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod modelselect;
pub mod montecarlo;
pub mod numerics;
pub mod splines;
pub mod transform;

pub use data::Dataset;
pub use error::{Error, Result};
