//! Triangle meshes, rigid transforms and the SVD rigid point-set fit.

mod bvh;
mod closest;
mod fit;
mod mesh;
mod transform;

pub use closest::{closest_point_on_triangle, ClosestPointResult};
pub use fit::{rigid_fit_svd, rms_error};
pub use mesh::{RayHit, TriMesh};
pub use transform::{RigidTransform, TransformParams};
