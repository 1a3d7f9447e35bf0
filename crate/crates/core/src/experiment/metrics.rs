//! Map-quality metrics against the ground-truth stiffness over the grid.

pub fn map_rmse(estimate: &[f64], truth: &[f64]) -> f64 {
    masked_rmse(estimate, truth, None)
}

/// Pearson correlation; 0 when either series has no variance.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Grid nodes whose ground truth reaches the 90th percentile (nearest rank).
pub fn top_decile_mask(truth: &[f64]) -> Vec<bool> {
    if truth.is_empty() {
        return Vec::new();
    }
    let mut sorted = truth.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.9 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let threshold = sorted[rank - 1];
    truth.iter().map(|&t| t >= threshold).collect()
}

pub fn top_decile_rmse(estimate: &[f64], truth: &[f64]) -> f64 {
    masked_rmse(estimate, truth, Some(&top_decile_mask(truth)))
}

fn masked_rmse(estimate: &[f64], truth: &[f64], mask: Option<&[bool]>) -> f64 {
    let (sum, count) = estimate
        .iter()
        .zip(truth)
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
        .fold((0.0, 0usize), |(s, c), (_, (e, t))| {
            (s + (e - t).powi(2), c + 1)
        });
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_anti_correlation() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson_correlation(&a, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
        assert!((pearson_correlation(&a, &[-1.0, -2.0, -3.0, -4.0]) + 1.0).abs() < 1e-15);
        assert_eq!(pearson_correlation(&a, &[1.0; 4]), 0.0);
    }

    #[test]
    fn decile_mask_selects_top_tenth() {
        let truth: Vec<f64> = (0..100).map(f64::from).collect();
        let mask = top_decile_mask(&truth);
        assert_eq!(mask.iter().filter(|m| **m).count(), 11);
        assert!(mask[89] && !mask[88]);
        let est: Vec<f64> = truth.iter().map(|t| t + 2.0).collect();
        assert!((top_decile_rmse(&est, &truth) - 2.0).abs() < 1e-12);
        assert!((map_rmse(&est, &truth) - 2.0).abs() < 1e-12);
    }
}
