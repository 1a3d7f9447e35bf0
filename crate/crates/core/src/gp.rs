//! Gaussian-process regression of stiffness over tool-frame x–y locations.
//!
//! Squared-exponential kernel, zero-mean prior on outputs centered by their
//! training mean, exact solve through a Cholesky factor of `K + jitter·I`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Vector2};
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Largest diagonal jitter tried before giving up, relative to `sigma_f`.
const MAX_RELATIVE_JITTER: f64 = 1e-4;
/// Inputs closer than this are treated as the same location.
const DUPLICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams<S: Real> {
    /// Process variance.
    pub sigma_f: S,
    /// Length scale in mm.
    pub length_scale: S,
    /// Diagonal term added to the training covariance.
    pub jitter: S,
}

impl Default for KernelParams<f64> {
    fn default() -> Self {
        KernelParams {
            sigma_f: 1.0,
            length_scale: 3.0,
            jitter: 1e-8,
        }
    }
}

impl<S: Real> KernelParams<S> {
    pub fn new(sigma_f: S, length_scale: S, jitter: S) -> Result<Self> {
        let params = KernelParams {
            sigma_f,
            length_scale,
            jitter,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_f > S::zero() && self.sigma_f.is_finite()) {
            return Err(Error::InvalidInput("sigma_f must be positive".into()));
        }
        if !(self.length_scale > S::zero() && self.length_scale.is_finite()) {
            return Err(Error::InvalidInput("length_scale must be positive".into()));
        }
        if !(self.jitter >= S::zero() && self.jitter.is_finite()) {
            return Err(Error::InvalidInput("jitter must be non-negative".into()));
        }
        Ok(())
    }
}

/// `σ_f · exp(−‖xi − xj‖² / (2ℓ²))`.
#[inline]
pub fn kernel_eval<S: Real>(params: &KernelParams<S>, xi: &Vector2<S>, xj: &Vector2<S>) -> S {
    let d2 = (xi - xj).norm_squared();
    let l = params.length_scale;
    params.sigma_f * (-d2 / (S::lit(2.0) * l * l)).exp()
}

/// Probed locations and the stiffness observed at each.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<S: Real> {
    inputs: Vec<Vector2<S>>,
    outputs: Vec<S>,
}

impl<S: Real> TrainingSet<S> {
    /// Builds a training set, merging inputs that coincide (within 1e-9) into
    /// one input whose output is the mean of the merged outputs.
    pub fn new(inputs: Vec<Vector2<S>>, outputs: Vec<S>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::InvalidInput(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        if outputs.iter().any(|y| !y.is_finite())
            || inputs.iter().any(|x| !x.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidInput("training data must be finite".into()));
        }
        let tol = S::lit(DUPLICATE_TOLERANCE);
        let mut merged: Vec<(Vector2<S>, S, usize)> = Vec::with_capacity(inputs.len());
        for (x, y) in inputs.into_iter().zip(outputs) {
            match merged.iter_mut().find(|(m, _, _)| (m - x).norm() <= tol) {
                Some(entry) => {
                    entry.1 += y;
                    entry.2 += 1;
                }
                None => merged.push((x, y, 1)),
            }
        }
        let (inputs, outputs) = merged
            .into_iter()
            .map(|(x, sum, count)| (x, sum / S::from_usize(count).unwrap()))
            .unzip();
        Ok(TrainingSet { inputs, outputs })
    }

    pub fn inputs(&self) -> &[Vector2<S>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[S] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn mean_output(&self) -> S {
        self.outputs.iter().fold(S::zero(), |a, &y| a + y) / S::from_usize(self.len()).unwrap()
    }
}

/// Fitted GP, immutable after construction.
#[derive(Debug, Clone)]
pub struct GpModel<S: Real> {
    training: TrainingSet<S>,
    params: KernelParams<S>,
    offset: S,
    jitter: S,
    factor: Cholesky<S, Dyn>,
    alpha: DVector<S>,
}

/// Posterior mean and variance at a batch of query points.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<S: Real> {
    pub mean: Vec<S>,
    pub variance: Vec<S>,
    /// Prior variance `σ_f` of the model that produced the prediction.
    pub prior_variance: S,
}

impl<S: Real> Prediction<S> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn std(&self, i: usize) -> S {
        self.variance[i].sqrt()
    }
}

/// Fits the GP with outputs centered on their training mean.
pub fn gp_fit<S: Real>(training: &TrainingSet<S>, params: &KernelParams<S>) -> Result<GpModel<S>> {
    gp_fit_with_offset(training, params, training.mean_output())
}

/// Fits the GP using a fixed prior mean `offset` instead of the training mean.
///
/// If `K + jitter·I` is not numerically positive definite the jitter is
/// escalated tenfold per attempt, up to `1e-4·σ_f`.
pub fn gp_fit_with_offset<S: Real>(
    training: &TrainingSet<S>,
    params: &KernelParams<S>,
    offset: S,
) -> Result<GpModel<S>> {
    params.validate()?;
    let n = training.len();
    let x = training.inputs();
    let kernel = DMatrix::from_fn(n, n, |i, j| kernel_eval(params, &x[i], &x[j]));

    let max_jitter = params.sigma_f * S::lit(MAX_RELATIVE_JITTER);
    let mut jitter = params.jitter;
    let factor = loop {
        let mut k = kernel.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        if let Some(factor) = Cholesky::new(k) {
            break factor;
        }
        jitter = if jitter > S::zero() {
            jitter * S::lit(10.0)
        } else {
            params.sigma_f * S::lit(1e-12)
        };
        if jitter > max_jitter * S::lit(1.0 + 1e-9) {
            return Err(Error::Conditioning(format!(
                "covariance of {n} training points is not positive definite with jitter up to {:e}",
                max_jitter.as_f64()
            )));
        }
    };

    let centered = DVector::from_iterator(n, training.outputs().iter().map(|&y| y - offset));
    let alpha = factor.solve(&centered);
    Ok(GpModel {
        training: training.clone(),
        params: *params,
        offset,
        jitter,
        factor,
        alpha,
    })
}

impl<S: Real> GpModel<S> {
    pub fn training(&self) -> &TrainingSet<S> {
        &self.training
    }

    pub fn params(&self) -> &KernelParams<S> {
        &self.params
    }

    /// Prior mean added back to every prediction.
    pub fn offset(&self) -> S {
        self.offset
    }

    /// Jitter actually used in the factorization, after any escalation.
    pub fn jitter(&self) -> S {
        self.jitter
    }

    /// Lower-triangular `L` with `L·Lᵀ = K + jitter·I`.
    pub fn factor(&self) -> DMatrix<S> {
        self.factor.l()
    }

    pub fn predict(&self, queries: &[Vector2<S>]) -> Prediction<S> {
        gp_predict(self, queries)
    }
}

/// Posterior `μ = offset + K*·K⁻¹·(Y − offset)` and
/// `σ² = diag(K** − K*·K⁻¹·K*ᵀ)`, the variance clamped to `[0, σ_f]`.
pub fn gp_predict<S: Real>(model: &GpModel<S>, queries: &[Vector2<S>]) -> Prediction<S> {
    let n = model.training.len();
    let m = queries.len();
    let x = model.training.inputs();
    let params = &model.params;
    let cross = DMatrix::from_fn(n, m, |i, j| kernel_eval(params, &x[i], &queries[j]));

    let mean_shift = cross.tr_mul(&model.alpha);
    let v = model
        .factor
        .l_dirty()
        .solve_lower_triangular(&cross)
        .expect("cholesky factor has a non-zero diagonal");

    let mut mean = Vec::with_capacity(m);
    let mut variance = Vec::with_capacity(m);
    for j in 0..m {
        mean.push(model.offset + mean_shift[j]);
        let explained = v.column(j).norm_squared();
        variance.push(
            (params.sigma_f - explained)
                .max(S::zero())
                .min(params.sigma_f),
        );
    }
    Prediction {
        mean,
        variance,
        prior_variance: params.sigma_f,
    }
}
