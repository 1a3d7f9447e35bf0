//! Expected Improvement over a candidate grid, interleaved with periodic
//! pure-exploration picks.

use nalgebra::Vector2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::gp::{Prediction, TrainingSet};
use crate::{Error, Real, Result};

/// Best observation so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent<S: Real> {
    pub best_value: S,
    pub best_location: Vector2<S>,
}

impl<S: Real> Incumbent<S> {
    /// Maximum training output; the first one wins ties.
    pub fn from_training(training: &TrainingSet<S>) -> Self {
        let (best_location, best_value) = training
            .inputs()
            .iter()
            .zip(training.outputs())
            .fold(None, |best: Option<(Vector2<S>, S)>, (x, &y)| match best {
                Some((_, b)) if b >= y => best,
                _ => Some((*x, y)),
            })
            .expect("training sets are non-empty");
        Incumbent {
            best_value,
            best_location,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPolicy {
    /// Every `exploration_period`-th probe is a pure-exploration pick.
    pub exploration_period: usize,
    /// Exploration candidates need `std ≥ uncertainty_fraction · √σ_f`.
    pub uncertainty_fraction: f64,
    /// Seed of the exploration stream; derived from the experiment seed when absent.
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            exploration_period: 5,
            uncertainty_fraction: 0.9,
            rng_seed: None,
        }
    }
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.exploration_period == 0 {
            return Err(Error::InvalidInput(
                "exploration_period must be at least 1".into(),
            ));
        }
        if !(self.uncertainty_fraction > 0.0 && self.uncertainty_fraction <= 1.0) {
            return Err(Error::InvalidInput(
                "uncertainty_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Standard normal density.
fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via `erfc`, accurate in the lower tail.
fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `EI = (μ − Y⁺)·Φ(Z) + σ·φ(Z)` with `Z = (μ − Y⁺)/σ`; zero when `σ = 0`.
pub fn expected_improvement<S: Real>(mean: S, std: S, best: S) -> Result<S> {
    if std < S::zero() || !std.is_finite() {
        return Err(Error::InvalidInput(format!(
            "predictive standard deviation must be finite and non-negative, got {}",
            std.as_f64()
        )));
    }
    if std == S::zero() {
        return Ok(S::zero());
    }
    let (mu, sigma, best) = (mean.as_f64(), std.as_f64(), best.as_f64());
    let gap = mu - best;
    let z = gap / sigma;
    // σ·(zΦ(z) + φ(z)) avoids cancellation for z ≪ 0; the direct form is
    // exact for z ≥ 0, where EI tends to the gap itself.
    let ei = if z >= 0.0 {
        gap * normal_cdf(z) + sigma * normal_pdf(z)
    } else {
        sigma * (z * normal_cdf(z) + normal_pdf(z))
    };
    Ok(S::lit(ei.max(0.0)))
}

/// EI at every grid node.
pub fn expected_improvement_grid<S: Real>(prediction: &Prediction<S>, best: S) -> Vec<S> {
    (0..prediction.len())
        .into_par_iter()
        .map(|i| {
            expected_improvement(prediction.mean[i], prediction.std(i), best)
                .expect("clamped variances are non-negative")
        })
        .collect()
}

/// Chooses the next grid index to probe.
///
/// When `probe_count` is a positive multiple of the exploration period, a
/// uniformly random unvisited node whose predictive standard deviation is at
/// least `uncertainty_fraction · √σ_f` is returned (falling back to the
/// unvisited node of largest variance). Otherwise the unvisited node of
/// largest EI is returned, lowest index first on ties; if every unvisited EI
/// is zero the largest-variance node is used.
pub fn select_next<S: Real, R: Rng + ?Sized>(
    prediction: &Prediction<S>,
    grid: &[Vector2<S>],
    visited: &[bool],
    incumbent: &Incumbent<S>,
    probe_count: usize,
    policy: &SamplingPolicy,
    rng: &mut R,
) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("candidate grid is empty".into()));
    }
    if prediction.len() != grid.len() || visited.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "grid has {} nodes but prediction has {} and visited mask {}",
            grid.len(),
            prediction.len(),
            visited.len()
        )));
    }
    policy.validate()?;
    let unvisited: Vec<usize> = (0..grid.len()).filter(|&i| !visited[i]).collect();
    if unvisited.is_empty() {
        return Err(Error::ExplorationExhausted);
    }

    let max_variance = || {
        unvisited
            .iter()
            .copied()
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if prediction.variance[b] >= prediction.variance[i] => Some(b),
                _ => Some(i),
            })
            .expect("unvisited is non-empty")
    };

    if probe_count > 0 && probe_count.is_multiple_of(policy.exploration_period) {
        let threshold = S::lit(policy.uncertainty_fraction) * prediction.prior_variance.sqrt();
        let candidates: Vec<usize> = unvisited
            .iter()
            .copied()
            .filter(|&i| prediction.std(i) >= threshold)
            .collect();
        return Ok(if candidates.is_empty() {
            max_variance()
        } else {
            candidates[rng.random_range(0..candidates.len())]
        });
    }

    let ei: Vec<S> = unvisited
        .par_iter()
        .map(|&i| {
            expected_improvement(prediction.mean[i], prediction.std(i), incumbent.best_value)
                .expect("clamped variances are non-negative")
        })
        .collect();
    let (arg, best) =
        ei.iter().enumerate().fold(
            (0, ei[0]),
            |(bi, bv), (k, &v)| if v > bv { (k, v) } else { (bi, bv) },
        );
    if best > S::zero() {
        Ok(unvisited[arg])
    } else {
        Ok(max_variance())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prediction(mean: Vec<f64>, variance: Vec<f64>) -> Prediction<f64> {
        Prediction {
            mean,
            variance,
            prior_variance: 1.0,
        }
    }

    fn line_grid(n: usize) -> Vec<Vector2<f64>> {
        (0..n).map(|i| Vector2::new(i as f64, 0.0)).collect()
    }

    fn incumbent(v: f64) -> Incumbent<f64> {
        Incumbent {
            best_value: v,
            best_location: Vector2::zeros(),
        }
    }

    #[test]
    fn ei_closed_form_values() {
        assert_eq!(expected_improvement(5.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(expected_improvement(-5.0, 0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            expected_improvement(0.3, 1.0, 0.3).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            expected_improvement(2.0, 1e-6, 1.0).unwrap(),
            1.0,
            epsilon = 1e-6
        );
        assert!(expected_improvement(1.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn unique_maximum_is_selected() {
        let pr = prediction(vec![0.1, 0.2, 0.9, 0.3], vec![0.5; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let i = select_next(
            &pr,
            &line_grid(4),
            &[false; 4],
            &incumbent(0.5),
            3,
            &SamplingPolicy::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(i, 2);
    }

    #[test]
    fn visited_nodes_are_skipped() {
        let pr = prediction(vec![0.1, 0.2, 0.9, 0.3], vec![0.5; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let i = select_next(
            &pr,
            &line_grid(4),
            &[false, false, true, false],
            &incumbent(0.5),
            3,
            &SamplingPolicy::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(i, 3);
        let err = select_next(
            &pr,
            &line_grid(4),
            &[true; 4],
            &incumbent(0.5),
            3,
            &SamplingPolicy::default(),
            &mut rng,
        );
        assert!(matches!(err, Err(Error::ExplorationExhausted)));
    }

    #[test]
    fn zero_ei_falls_back_to_lowest_unvisited() {
        let pr = prediction(vec![0.0; 5], vec![0.0; 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let visited = [true, false, false, false, false];
        let i = select_next(
            &pr,
            &line_grid(5),
            &visited,
            &incumbent(1.0),
            3,
            &SamplingPolicy::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn exploration_step_picks_uncertain_nodes_reproducibly() {
        let variance = vec![0.1, 0.95, 0.2, 0.99, 0.5, 1.0, 0.3];
        let pr = prediction(vec![0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0], variance.clone());
        let grid = line_grid(7);
        let visited = [false; 7];
        let policy = SamplingPolicy::default();
        let pick = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            select_next(&pr, &grid, &visited, &incumbent(1.0), 5, &policy, &mut rng).unwrap()
        };
        for seed in 0..20 {
            let i = pick(seed);
            assert!(variance[i].sqrt() >= 0.9, "seed {seed} picked {i}");
            assert_eq!(i, pick(seed));
        }
        // Exploration also fires at later multiples, never at zero.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            select_next(&pr, &grid, &visited, &incumbent(1.0), 0, &policy, &mut rng).unwrap(),
            2
        );
    }

    #[test]
    fn exploration_without_uncertain_nodes_uses_max_variance() {
        let pr = prediction(vec![0.0; 3], vec![0.1, 0.4, 0.2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let i = select_next(
            &pr,
            &line_grid(3),
            &[false; 3],
            &incumbent(0.0),
            10,
            &SamplingPolicy::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let pr = prediction(vec![0.0; 3], vec![0.1; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(select_next(
            &pr,
            &line_grid(4),
            &[false; 4],
            &incumbent(0.0),
            1,
            &SamplingPolicy::default(),
            &mut rng
        )
        .is_err());
    }
}
