//! Information-guided robotic palpation.
//!
//! A Gaussian-process model of tissue stiffness is refined by probing the
//! location of maximum Expected Improvement, while the probe's tool frame is
//! registered to a triangle-mesh model of the organ by alternating
//! closest-point correspondence and SVD rigid fits.
//!
//! The numerical core ([`geometry`], [`gp`], [`acquisition`]) is generic over
//! the scalar type through [`Real`]; the simulator and experiment runner work
//! in `f64`, and the aliases below name the `f64` instantiations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod care;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod gp;
mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Real;

/// 3D position (mm) or direction.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 2D location in the tool-frame x–y plane (mm).
pub type Point2 = nalgebra::Vector2<f64>;
pub type RigidTransform = geometry::RigidTransform<f64>;
pub type TriMesh = geometry::TriMesh<f64>;
pub type ClosestPointResult = geometry::ClosestPointResult<f64>;
pub type KernelParams = gp::KernelParams<f64>;
pub type TrainingSet = gp::TrainingSet<f64>;
pub type GpModel = gp::GpModel<f64>;
pub type Prediction = gp::Prediction<f64>;
pub type Incumbent = acquisition::Incumbent<f64>;
