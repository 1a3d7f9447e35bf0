use nalgebra::{Matrix3, Vector3};

use super::RigidTransform;
use crate::{Error, Real, Result};

/// Least-squares rigid transform taking `source[i]` onto `target[i]`
/// (Arun–Huang–Blostein SVD solution).
///
/// With `H = Σ (sᵢ − s̄)(tᵢ − t̄)ᵀ = U·Σ·Vᵀ` the rotation is `V·Uᵀ`. When that
/// product is a reflection, the column of `V` belonging to the smallest
/// singular value is negated, which always yields `det(R) = +1`.
pub fn rigid_fit_svd<S: Real>(
    source: &[Vector3<S>],
    target: &[Vector3<S>],
) -> Result<RigidTransform<S>> {
    if source.len() != target.len() {
        return Err(Error::InvalidInput(format!(
            "point lists differ in length: {} vs {}",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rigid fit needs at least 3 point pairs, got {}",
            source.len()
        )));
    }
    let n = S::from_usize(source.len()).unwrap();
    let sc = source.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let tc = target.iter().fold(Vector3::zeros(), |a, p| a + p) / n;

    let mut h = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        let ds = s - sc;
        h += ds * (t - tc).transpose();
        scatter += ds * ds.transpose();
    }

    // Rank of the centered source: collinear (rank ≤ 1) sets leave a rotation
    // about their common line undetermined.
    let spread = scatter.symmetric_eigenvalues();
    let largest = spread.amax();
    let second = {
        let mut v = [spread[0], spread[1], spread[2]];
        v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        v[1]
    };
    if !(largest > S::zero()) || second <= largest * S::lit(1e-12) {
        return Err(Error::DegenerateGeometry(
            "source points are coincident or collinear".into(),
        ));
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("svd computed with U");
    let mut v = svd.v_t.expect("svd computed with Vᵀ").transpose();
    let mut rotation = v * u.transpose();
    if rotation.determinant() < S::zero() {
        let smallest = svd.singular_values.imin();
        let mut col = v.column_mut(smallest);
        col.neg_mut();
        rotation = v * u.transpose();
    }
    let translation = tc - rotation * sc;
    Ok(RigidTransform::from_parts(rotation, translation))
}

/// Root-mean-square distance between the images of `points` under the
/// estimated and true transforms.
pub fn rms_error<S: Real>(
    estimate: &RigidTransform<S>,
    truth: &RigidTransform<S>,
    points: &[Vector3<S>],
) -> Result<S> {
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "rms error over an empty point set".into(),
        ));
    }
    let sum = points.iter().fold(S::zero(), |acc, p| {
        acc + (estimate.apply(p) - truth.apply(p)).norm_squared()
    });
    Ok((sum / S::from_usize(points.len()).unwrap()).sqrt())
}
