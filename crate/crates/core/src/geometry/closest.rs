use nalgebra::Vector3;

use crate::Real;

/// Nearest point on a mesh to a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPointResult<S: Real> {
    pub point: Vector3<S>,
    /// Outward unit normal of `face_index`.
    pub normal: Vector3<S>,
    pub face_index: usize,
    /// Barycentric coordinates of `point` on the face.
    pub barycentric: [S; 3],
    pub distance: S,
}

/// Closest point on the closed triangle `(a, b, c)` to `p`, with its
/// barycentric coordinates.
///
/// Classifies `p` against the Voronoi regions of the vertices, edges and face.
pub fn closest_point_on_triangle<S: Real>(
    p: &Vector3<S>,
    a: &Vector3<S>,
    b: &Vector3<S>,
    c: &Vector3<S>,
) -> (Vector3<S>, [S; 3]) {
    let zero = S::zero();
    let one = S::one();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= zero && d2 <= zero {
        return (*a, [one, zero, zero]);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= zero && d4 <= d3 {
        return (*b, [zero, one, zero]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [one - v, v, zero]);
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= zero && d5 <= d6 {
        return (*c, [zero, zero, one]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [one - w, zero, w]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [zero, one - w, w]);
    }

    let denom = one / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [one - v - w, v, w])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> [Vector3<f64>; 3] {
        [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn interior_projection() {
        let [a, b, c] = tri();
        let (q, bary) = closest_point_on_triangle(&Vector3::new(0.2, 0.2, 1.0), &a, &b, &c);
        assert_relative_eq!(q, Vector3::new(0.2, 0.2, 0.0), epsilon = 1e-15);
        assert_relative_eq!(bary[0] + bary[1] + bary[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn vertex_and_edge_regions() {
        let [a, b, c] = tri();
        let (q, _) = closest_point_on_triangle(&Vector3::new(-1.0, -1.0, 0.5), &a, &b, &c);
        assert_eq!(q, a);
        let (q, _) = closest_point_on_triangle(&Vector3::new(2.0, -0.5, 0.0), &a, &b, &c);
        assert_eq!(q, b);
        let (q, bary) = closest_point_on_triangle(&Vector3::new(0.5, -2.0, 0.0), &a, &b, &c);
        assert_relative_eq!(q, Vector3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(bary[2], 0.0);
        // beyond the hypotenuse
        let (q, _) = closest_point_on_triangle(&Vector3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert_relative_eq!(q, Vector3::new(0.5, 0.5, 0.0), epsilon = 1e-15);
    }
}
