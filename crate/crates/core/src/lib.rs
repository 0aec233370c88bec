//! Density ridge estimation under power transformations.
//!
//! The crate evaluates ridges of `f^q ∘ p` for the power family
//! `f^q(y) = y^q / q` (logarithm at `q = 0`), where `p` is a Gaussian kernel
//! density estimate or one of two closed-form test densities, and estimates
//! them from samples with subspace-constrained mean shift.

pub mod cloud;
pub mod datagen;
pub mod density;
pub mod error;
pub mod eval;
pub mod ridge;
pub mod scms;
pub mod spectral;
pub mod transform;
pub mod verify;

pub use cloud::{Point, PointCloud};
pub use density::{BimodalModel, DensityModel, KdeModel, UnimodalModel};
pub use error::{Error, Result};
pub use ridge::{GridBox, RidgeQuery, RidgeStatus};
pub use scms::{MethodKind, ScmsConfig, ScmsResult};
pub use transform::PowerTransform;
