use nalgebra::DMatrix;
use palpation::gp::{gp_fit, gp_fit_with_offset, gp_predict, kernel_eval};
use palpation::{KernelParams, Point2, TrainingSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points on a jittered lattice so that no two are closer than about 1.5 mm.
fn spread_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
    let side = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|k| {
            let (i, j) = ((k % side) as f64, (k / side) as f64);
            Point2::new(
                3.0 * i + rng.random_range(-0.7..0.7),
                3.0 * j + rng.random_range(-0.7..0.7),
            )
        })
        .collect()
}

fn random_training(rng: &mut ChaCha8Rng, n: usize) -> TrainingSet {
    let x = spread_points(rng, n);
    let y = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    TrainingSet::new(x, y).unwrap()
}

#[test]
fn posterior_interpolates_training_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = KernelParams::new(1.0, 3.0, 1e-10).unwrap();
    for n in [1, 2, 5, 20, 60] {
        let training = random_training(&mut rng, n);
        let model = gp_fit(&training, &params).unwrap();
        let p = gp_predict(&model, training.inputs());
        for i in 0..n {
            assert!(
                (p.mean[i] - training.outputs()[i]).abs() <= 1e-6,
                "n={n} i={i}"
            );
            assert!(p.variance[i] <= 1e-6, "n={n} variance {}", p.variance[i]);
        }
    }
}

#[test]
fn single_point_posterior_by_hand() {
    let training = TrainingSet::new(vec![Point2::new(0.0, 0.0)], vec![2.0]).unwrap();
    let params = KernelParams::new(1.0, 1.0, 0.0).unwrap();
    let model = gp_fit_with_offset(&training, &params, 0.0).unwrap();
    let p = gp_predict(&model, &[Point2::new(1.0, 0.0)]);
    assert!((p.mean[0] - 2.0 * (-0.5f64).exp()).abs() <= 1e-9);
    assert!((p.variance[0] - (1.0 - (-1.0f64).exp())).abs() <= 1e-9);
}

#[test]
fn prediction_reverts_to_prior_far_away() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let training = random_training(&mut rng, 10);
    let params = KernelParams::new(0.5, 3.0, 1e-8).unwrap();
    let model = gp_fit(&training, &params).unwrap();
    let p = gp_predict(&model, &[Point2::new(500.0, -500.0)]);
    assert!((p.mean[0] - training.mean_output()).abs() <= 1e-12);
    assert!((p.variance[0] - 0.5).abs() <= 1e-12);
}

#[test]
fn cholesky_factor_reproduces_the_jittered_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let training = random_training(&mut rng, 30);
    let params = KernelParams::new(1.0, 3.0, 1e-8).unwrap();
    let model = gp_fit(&training, &params).unwrap();
    assert!(model.jitter() <= 1e-8);
    let x = training.inputs();
    let n = x.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        kernel_eval(&params, &x[i], &x[j]) + if i == j { model.jitter() } else { 0.0 }
    });
    let l = model.factor();
    assert!((&l * l.transpose() - k).amax() <= 1e-12);
}

#[test]
fn near_duplicate_inputs_still_factor() {
    for gap in [1e-7, 3e-9] {
        let x = vec![
            Point2::new(0.0, 0.0),
            Point2::new(gap, 0.0),
            Point2::new(2.0, 0.0),
        ];
        let training = TrainingSet::new(x, vec![0.1, 0.2, 0.3]).unwrap();
        let params = KernelParams::new(1.0, 3.0, 0.0).unwrap();
        let model = gp_fit(&training, &params).unwrap();
        assert!(model.jitter() <= 1e-4);
        let p = gp_predict(&model, &[Point2::new(1.0, 0.5)]);
        assert!(p.mean[0].is_finite() && p.variance[0].is_finite());
    }
}

fn queries(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|_| Point2::new(rng.random_range(-5.0..25.0), rng.random_range(-5.0..25.0)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_stays_within_prior_bounds(seed in any::<u64>(), n in 1usize..40, sigma_f in 0.05f64..4.0, ell in 0.5f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let training = random_training(&mut rng, n);
        let params = KernelParams::new(sigma_f, ell, 1e-8).unwrap();
        let model = gp_fit(&training, &params).unwrap();
        let p = gp_predict(&model, &queries(&mut rng, 200));
        for v in &p.variance {
            prop_assert!(*v >= 0.0 && *v <= sigma_f);
        }
    }

    #[test]
    fn training_order_does_not_matter(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let training = random_training(&mut rng, n);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled = TrainingSet::new(
            order.iter().map(|&i| training.inputs()[i]).collect(),
            order.iter().map(|&i| training.outputs()[i]).collect(),
        ).unwrap();
        let params = KernelParams::default();
        let q = queries(&mut rng, 50);
        let a = gp_predict(&gp_fit(&training, &params).unwrap(), &q);
        let b = gp_predict(&gp_fit(&shuffled, &params).unwrap(), &q);
        for i in 0..q.len() {
            prop_assert!((a.mean[i] - b.mean[i]).abs() <= 1e-8);
            prop_assert!((a.variance[i] - b.variance[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn extra_data_never_increases_variance(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full = random_training(&mut rng, n + 1);
        let fewer = TrainingSet::new(full.inputs()[..n].to_vec(), full.outputs()[..n].to_vec()).unwrap();
        let params = KernelParams::default();
        let q = queries(&mut rng, 100);
        let before = gp_predict(&gp_fit(&fewer, &params).unwrap(), &q);
        let after = gp_predict(&gp_fit(&full, &params).unwrap(), &q);
        for i in 0..q.len() {
            prop_assert!(after.variance[i] <= before.variance[i] + 1e-9);
        }
    }
}
