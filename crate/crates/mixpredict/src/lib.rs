//! Binary classification from mixed predictor types.
//!
//! The pipeline combines, per observation, a scalar, a composition (positive
//! parts summing to one), and a discretized curve into one logistic
//! regression: the composition enters through isometric log-ratio
//! coordinates, the curve through its leading principal component scores,
//! and the fitted coefficients are mapped back to a composition and a curve
//! for interpretation.
//!
//! - [`simplex`]: compositions, log-ratio transforms, Aitchison geometry.
//! - [`fpca`]: grids, functional samples, covariance eigenbases, scores.
//! - [`glm`]: design matrices and the Newton logistic solver.
//! - [`mixmodel`]: the assembled pipeline, prediction, serialization.
//! - [`simulate`]: the Monte-Carlo validation study with known truth.

pub mod error;
pub mod fpca;
pub mod glm;
pub mod mixmodel;
pub mod simplex;
pub mod simulate;

pub use error::{Error, Result};
