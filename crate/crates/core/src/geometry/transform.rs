use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::Real;

/// Rigid transform `p ↦ R·p + t` mapping tool-frame points into the model frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<S: Real> {
    rotation: Matrix3<S>,
    translation: Vector3<S>,
}

/// Six-parameter description of a transform: translation in mm and extrinsic
/// X–Y–Z Euler angles in degrees (`R = Rz·Ry·Rx`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformParams {
    pub translation_mm: [f64; 3],
    pub rotation_deg: [f64; 3],
}

impl TransformParams {
    pub fn to_transform(&self) -> RigidTransform<f64> {
        let [tx, ty, tz] = self.translation_mm;
        let [rx, ry, rz] = self.rotation_deg;
        RigidTransform::from_euler_deg(tx, ty, tz, rx, ry, rz)
    }

    pub fn as_array(&self) -> [f64; 6] {
        let [tx, ty, tz] = self.translation_mm;
        let [rx, ry, rz] = self.rotation_deg;
        [tx, ty, tz, rx, ry, rz]
    }
}

impl From<&RigidTransform<f64>> for TransformParams {
    fn from(t: &RigidTransform<f64>) -> Self {
        let p = t.to_euler_deg();
        TransformParams {
            translation_mm: [p[0], p[1], p[2]],
            rotation_deg: [p[3], p[4], p[5]],
        }
    }
}

impl<S: Real> Default for RigidTransform<S> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<S: Real> RigidTransform<S> {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from a rotation matrix and translation.
    ///
    /// The rotation is not re-orthonormalized; callers pass matrices that are
    /// already proper rotations (for example the output of an SVD fit).
    pub fn from_parts(rotation: Matrix3<S>, translation: Vector3<S>) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    /// Translation `(tx, ty, tz)` in mm and rotation `Rz(θz)·Ry(θy)·Rx(θx)`
    /// with angles in degrees.
    pub fn from_euler_deg(tx: S, ty: S, tz: S, ax: S, ay: S, az: S) -> Self {
        let rotation = rot_z(deg_to_rad(az)) * rot_y(deg_to_rad(ay)) * rot_x(deg_to_rad(ax));
        RigidTransform {
            rotation,
            translation: Vector3::new(tx, ty, tz),
        }
    }

    /// Inverse of [`from_euler_deg`](Self::from_euler_deg):
    /// `[tx, ty, tz, θx, θy, θz]` with angles in degrees.
    pub fn to_euler_deg(&self) -> [S; 6] {
        let r = &self.rotation;
        let sy = -r[(2, 0)];
        let sy = sy.clamp(-S::one(), S::one());
        let ay = sy.asin();
        let cy = ay.cos();
        let (ax, az) = if cy.abs() > S::lit(1e-12) {
            (r[(2, 1)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(0, 0)]))
        } else {
            // Gimbal lock: only θx − θz (or θx + θz) is observable; report θz = 0.
            ((-r[(1, 2)]).atan2(r[(1, 1)]), S::zero())
        };
        let t = &self.translation;
        [
            t.x,
            t.y,
            t.z,
            rad_to_deg(ax),
            rad_to_deg(ay),
            rad_to_deg(az),
        ]
    }

    pub fn rotation(&self) -> &Matrix3<S> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<S> {
        &self.translation
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<S>) -> Vector3<S> {
        self.rotation * p + self.translation
    }

    /// Rotates a direction; the translation is not applied.
    #[inline]
    pub fn apply_vector(&self, v: &Vector3<S>) -> Vector3<S> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Largest displacement between the images of `points` under the two transforms.
    pub fn max_displacement(&self, other: &Self, points: &[Vector3<S>]) -> S {
        points.iter().fold(S::zero(), |acc, p| {
            acc.max((self.apply(p) - other.apply(p)).norm())
        })
    }

    /// Max-norm distance `max(|ΔR|, |Δt|)` over all matrix and vector entries.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        let dr = (self.rotation - other.rotation).amax();
        let dt = (self.translation - other.translation).amax();
        dr.max(dt)
    }
}

fn deg_to_rad<S: Real>(d: S) -> S {
    d * S::pi() / S::lit(180.0)
}

fn rad_to_deg<S: Real>(r: S) -> S {
    r * S::lit(180.0) / S::pi()
}

fn rot_x<S: Real>(a: S) -> Matrix3<S> {
    let (s, c) = a.sin_cos();
    let (o, z) = (S::one(), S::zero());
    Matrix3::new(o, z, z, z, c, -s, z, s, c)
}

fn rot_y<S: Real>(a: S) -> Matrix3<S> {
    let (s, c) = a.sin_cos();
    let (o, z) = (S::one(), S::zero());
    Matrix3::new(c, z, s, z, o, z, -s, z, c)
}

fn rot_z<S: Real>(a: S) -> Matrix3<S> {
    let (s, c) = a.sin_cos();
    let (o, z) = (S::one(), S::zero());
    Matrix3::new(c, -s, z, s, c, z, z, z, o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_parameters_give_identity() {
        let t = RigidTransform::<f64>::from_euler_deg(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(t.max_abs_diff(&RigidTransform::identity()), 0.0);
    }

    #[test]
    fn quarter_turn_about_z() {
        let t = RigidTransform::from_euler_deg(0.0, 0.0, 0.0, 0.0, 0.0, 90.0);
        let p = t.apply(&Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(p, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn table_transform_matches_elementary_rotations() {
        let t = RigidTransform::from_euler_deg(5.0, 10.0, -15.0, 11.46, -11.46, 5.73);
        let r = t.rotation();
        assert_relative_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);

        // Compose axis-angle rotations independently of the Euler helpers.
        let axis_rot = |axis: Vector3<f64>, deg: f64| {
            *nalgebra::Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(axis),
                deg.to_radians(),
            )
            .matrix()
        };
        let oracle = axis_rot(Vector3::z(), 5.73)
            * axis_rot(Vector3::y(), -11.46)
            * axis_rot(Vector3::x(), 11.46);
        assert_relative_eq!(*r, oracle, epsilon = 1e-14);
    }

    #[test]
    fn euler_round_trip_near_gimbal_lock() {
        let t = RigidTransform::from_euler_deg(1.0, 2.0, 3.0, 20.0, 90.0, 0.0);
        let p = t.to_euler_deg();
        let back = RigidTransform::from_euler_deg(p[0], p[1], p[2], p[3], p[4], p[5]);
        assert!(back.max_abs_diff(&t) < 1e-7);
    }

    fn arb_params() -> impl Strategy<Value = [f64; 6]> {
        (
            -50.0..50.0f64,
            -50.0..50.0f64,
            -50.0..50.0f64,
            -179.0..179.0f64,
            -89.0..89.0f64,
            -179.0..179.0f64,
        )
            .prop_map(|(a, b, c, d, e, f)| [a, b, c, d, e, f])
    }

    proptest! {
        #[test]
        fn compose_with_inverse_is_identity(p in arb_params()) {
            let t = RigidTransform::from_euler_deg(p[0], p[1], p[2], p[3], p[4], p[5]);
            prop_assert!(t.compose(&t.inverse()).max_abs_diff(&RigidTransform::identity()) < 1e-9);
            prop_assert!(t.inverse().compose(&t).max_abs_diff(&RigidTransform::identity()) < 1e-9);
        }

        #[test]
        fn euler_parameters_round_trip(p in arb_params()) {
            let t = RigidTransform::from_euler_deg(p[0], p[1], p[2], p[3], p[4], p[5]);
            let q = t.to_euler_deg();
            for (a, b) in p.iter().zip(q.iter()) {
                prop_assert!((a - b).abs() < 1e-8, "{p:?} vs {q:?}");
            }
        }
    }
}
