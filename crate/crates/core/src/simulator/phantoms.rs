//! Built-in synthetic phantoms.

use rand::Rng;

use super::{Artery, Bump, PhantomSpec};
use crate::{RigidTransform, TriMesh, Vec3};

/// Ground-truth registration used by the multimodal examples.
pub fn example_transform() -> RigidTransform {
    RigidTransform::from_euler_deg(5.0, 10.0, -15.0, 11.46, -11.46, 5.73)
}

/// Triangulated height field `z = height(x, y)` over a rectangle, wound so
/// that face normals point towards +z.
pub fn height_field(
    x_range: (f64, f64),
    y_range: (f64, f64),
    spacing: f64,
    height: impl Fn(f64, f64) -> f64,
) -> TriMesh {
    let nx = ((x_range.1 - x_range.0) / spacing).round() as usize + 1;
    let ny = ((y_range.1 - y_range.0) / spacing).round() as usize + 1;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = x_range.0 + i as f64 * spacing;
            let y = y_range.0 + j as f64 * spacing;
            vertices.push(Vec3::new(x, y, height(x, y)));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v00 = j * nx + i;
            let v10 = v00 + 1;
            let v01 = v00 + nx;
            let v11 = v01 + 1;
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    TriMesh::new(vertices, faces).expect("height field faces are valid")
}

/// Flat square in the z = 0 plane centred on the origin.
pub fn flat_square(size: f64) -> TriMesh {
    height_field((-size, size), (-size, size), size, |_, _| 0.0)
}

/// Curved organ-like surface in the model frame.
///
/// A broad asymmetric dome with a shoulder and a tilt, so that the patch
/// under the examples' ROI constrains all six registration parameters.
pub fn organ_surface() -> TriMesh {
    height_field((-40.0, 90.0), (-40.0, 90.0), 2.0, organ_height)
}

pub fn organ_height(x: f64, y: f64) -> f64 {
    let dome = 14.0
        * (-((x - 28.0).powi(2) / (2.0 * 20.0f64.powi(2))
            + (y - 30.0).powi(2) / (2.0 * 14.0f64.powi(2))))
        .exp();
    let shoulder = 6.0 * (-((x - 5.0).powi(2) + (y - 12.0).powi(2)) / (2.0 * 9.0f64.powi(2))).exp();
    dome + shoulder + 0.06 * x - 0.04 * y
}

/// Three stiff inclusions on a soft background.
pub fn example_one() -> PhantomSpec {
    PhantomSpec {
        mesh: organ_surface(),
        baseline_stiffness: 0.2,
        bumps: vec![
            Bump {
                center: [15.0, 20.0],
                amplitude: 0.6,
                radius: 3.0,
            },
            Bump {
                center: [36.0, 26.0],
                amplitude: 0.45,
                radius: 3.5,
            },
            Bump {
                center: [24.0, 42.0],
                amplitude: 0.35,
                radius: 2.5,
            },
        ],
        artery: None,
        true_transform: example_transform(),
    }
}

/// [`example_one`] with each inclusion centre shifted by up to `offset` mm per axis.
pub fn example_two<R: Rng + ?Sized>(offset: f64, rng: &mut R) -> PhantomSpec {
    let mut spec = example_one();
    perturb_bumps(&mut spec, offset, rng);
    spec
}

/// Shifts every bump centre by a uniform draw in `±offset` per axis.
pub fn perturb_bumps<R: Rng + ?Sized>(spec: &mut PhantomSpec, offset: f64, rng: &mut R) {
    if offset <= 0.0 {
        return;
    }
    for b in &mut spec.bumps {
        b.center[0] += rng.random_range(-offset..=offset);
        b.center[1] += rng.random_range(-offset..=offset);
    }
}

/// A narrow stiff vessel crossing the ROI.
pub fn artery_phantom() -> PhantomSpec {
    PhantomSpec {
        mesh: organ_surface(),
        baseline_stiffness: 0.2,
        bumps: vec![],
        artery: Some(Artery {
            polyline: vec![[8.0, 12.0], [20.0, 24.0], [30.0, 30.0], [44.0, 46.0]],
            half_width: 1.5,
            amplitude: 0.6,
        }),
        true_transform: example_transform(),
    }
}
