use palpation::acquisition::{expected_improvement, select_next, SamplingPolicy};
use palpation::gp::{gp_fit, gp_predict};
use palpation::simulator::{prediction_grid, Roi};
use palpation::{Error, Incumbent, KernelParams, Point2, TrainingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ei_without_uncertainty_is_zero() {
    for (mu, best) in [(0.0, 0.0), (1.0, 0.5), (-3.0, 2.0)] {
        assert_eq!(expected_improvement::<f64>(mu, 0.0, best).unwrap(), 0.0);
    }
}

#[test]
fn ei_at_the_incumbent_is_the_standard_normal_density() {
    let ei: f64 = expected_improvement(0.7, 1.0, 0.7).unwrap();
    assert!((ei - 0.398942).abs() <= 1e-6, "{ei}");
    let ei: f64 = expected_improvement(0.0, 2.5, 0.0).unwrap();
    assert!((ei - 2.5 / (2.0 * std::f64::consts::PI).sqrt()).abs() <= 1e-12);
}

#[test]
fn ei_matches_quadrature() {
    // E[max(f − Y⁺, 0)] for f ~ N(μ, σ²) by the trapezoid rule
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mu: f64 = rng.random_range(-2.0..2.0);
        let sigma: f64 = rng.random_range(0.05..2.0);
        let best: f64 = rng.random_range(-2.0..2.0);
        let n = 20_000;
        let (lo, hi) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
        let h = (hi - lo) / n as f64;
        let integral: f64 = (0..=n)
            .map(|i| {
                let f = lo + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let density = (-(f - mu).powi(2) / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                w * (f - best).max(0.0) * density * h
            })
            .sum();
        let ei = expected_improvement(mu, sigma, best).unwrap();
        assert!(
            (ei - integral).abs() <= 1e-5,
            "μ={mu} σ={sigma} Y⁺={best}: {ei} vs {integral}"
        );
    }
}

#[test]
fn ei_is_monotone_in_mean_and_std() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let mu: f64 = rng.random_range(-3.0..3.0);
        let sigma: f64 = rng.random_range(0.01..3.0);
        let best: f64 = rng.random_range(-3.0..3.0);
        let base = expected_improvement(mu, sigma, best).unwrap();
        let dmu: f64 = rng.random_range(1e-3..1.0);
        let dsigma: f64 = rng.random_range(1e-3..1.0);
        assert!(base >= 0.0);
        assert!(expected_improvement(mu + dmu, sigma, best).unwrap() >= base);
        assert!(expected_improvement(mu, sigma + dsigma, best).unwrap() >= base);
    }
}

#[test]
fn negative_std_is_rejected() {
    assert!(matches!(
        expected_improvement::<f64>(0.0, -1.0, 0.0),
        Err(Error::InvalidInput(_))
    ));
}

fn small_problem() -> (Vec<Point2>, palpation::Prediction, Incumbent) {
    let roi = Roi::new(0.0, 10.0, 0.0, 10.0, 1.0).unwrap();
    let grid = prediction_grid(&roi);
    let training = TrainingSet::new(
        vec![
            Point2::new(2.0, 2.0),
            Point2::new(8.0, 3.0),
            Point2::new(5.0, 8.0),
        ],
        vec![0.2, 0.6, 0.3],
    )
    .unwrap();
    let model = gp_fit(&training, &KernelParams::default()).unwrap();
    let prediction = gp_predict(&model, &grid);
    (grid, prediction, Incumbent::from_training(&training))
}

#[test]
fn exploitation_picks_the_best_unvisited_node() {
    let (grid, prediction, incumbent) = small_problem();
    let visited = vec![false; grid.len()];
    let policy = SamplingPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pick = select_next(
        &prediction,
        &grid,
        &visited,
        &incumbent,
        1,
        &policy,
        &mut rng,
    )
    .unwrap();
    let ei: Vec<f64> = (0..grid.len())
        .map(|i| {
            expected_improvement(prediction.mean[i], prediction.std(i), incumbent.best_value)
                .unwrap()
        })
        .collect();
    let best = ei.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(ei[pick], best);
    assert_eq!(pick, ei.iter().position(|&v| v == best).unwrap());
}

#[test]
fn exploration_step_picks_an_uncertain_unvisited_node() {
    let (grid, prediction, incumbent) = small_problem();
    let mut visited = vec![false; grid.len()];
    visited[0] = true;
    let policy = SamplingPolicy::default();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = select_next(
            &prediction,
            &grid,
            &visited,
            &incumbent,
            10,
            &policy,
            &mut rng,
        )
        .unwrap();
        assert!(!visited[pick]);
        assert!(prediction.std(pick) >= 0.9 * prediction.prior_variance.sqrt());
    }
}

#[test]
fn exhausted_grid_is_an_error() {
    let (grid, prediction, incumbent) = small_problem();
    let visited = vec![true; grid.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = select_next(
        &prediction,
        &grid,
        &visited,
        &incumbent,
        3,
        &SamplingPolicy::default(),
        &mut rng,
    );
    assert!(matches!(r, Err(Error::ExplorationExhausted)));
}

#[test]
fn ei_stays_monotone_far_above_the_incumbent() {
    let (mu, sigma, best) = (0.486516312101791, 0.028075964817301374, -2.231175055521129);
    let base: f64 = expected_improvement(mu, sigma, best).unwrap();
    assert_eq!(base, mu - best);
    assert!(expected_improvement(mu, sigma + 0.012756529487613164, best).unwrap() >= base);
}
