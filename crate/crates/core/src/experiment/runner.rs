use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Strategy};
use super::metrics::{map_rmse, pearson_correlation, top_decile_rmse};
use crate::acquisition::{expected_improvement_grid, select_next};
use crate::care::{
    cmu_register, collect_sets, estimate_stiffness, CmuConfig, CompatibleSet, ProbeMeasurement,
    RegistrationResult, StiffnessSample,
};
use crate::geometry::{rms_error, TransformParams};
use crate::gp::gp_fit;
use crate::simulator::{initial_samples, phantoms, prediction_grid, probe, PhantomSpec, Roi};
use crate::{
    Error, GpModel, Incumbent, Point2, Prediction, Result, RigidTransform, TrainingSet, TriMesh,
};

// Independent random streams derived from the master seed.
const NOISE_STREAM: u64 = 1;
const EXPLORATION_STREAM: u64 = 2;
const REGISTRATION_STREAM: u64 = 3;
const PHANTOM_STREAM: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Summary of one experiment, mirroring a registration-results table row
/// plus map-quality metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub true_transform: TransformParams,
    pub estimated_transform: TransformParams,
    /// Estimated minus true translation, mm.
    pub translation_error_mm: [f64; 3],
    /// Estimated minus true Euler angles, degrees.
    pub rotation_error_deg: [f64; 3],
    /// RMS distance between estimated and true model-frame locations of every
    /// sensed position.
    pub rms_mm: f64,
    /// Probes including the initial set.
    pub probe_count: usize,
    pub stiffness_sets: usize,
    pub objective: f64,
    pub registration_iterations: usize,
    pub winning_seed: usize,
    pub map_rmse: f64,
    pub map_correlation: f64,
    pub top_decile_rmse: f64,
    /// Not written to `report.json`, which must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// One palpation: where it was aimed and what was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub target: Point2,
    /// Indices into [`ExperimentOutcome::measurements`].
    pub measurements: std::ops::Range<usize>,
}

/// Registration state after one probe cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub probe_count: usize,
    pub objective: f64,
    pub transform: RigidTransform,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub roi: Roi,
    pub grid: Vec<Point2>,
    pub ground_truth: Vec<f64>,
    pub prediction: Prediction,
    pub expected_improvement: Vec<f64>,
    pub model: GpModel,
    pub probes: Vec<ProbeRecord>,
    pub measurements: Vec<ProbeMeasurement>,
    pub depths: Vec<f64>,
    pub sets: Vec<CompatibleSet>,
    pub samples: Vec<StiffnessSample>,
    pub registration: RegistrationResult,
    pub history: Vec<CycleRecord>,
    pub true_transform: RigidTransform,
}

impl ExperimentOutcome {
    /// Stiffness of the set each measurement belongs to, if any.
    pub fn measurement_stiffness(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.measurements.len()];
        for s in &self.samples {
            for &m in &self.sets[s.set_index].members {
                out[m] = Some(s.stiffness);
            }
        }
        out
    }
}

/// Everything derived from the measurements collected so far.
struct ModelState {
    sets: Vec<CompatibleSet>,
    samples: Vec<StiffnessSample>,
    registration: RegistrationResult,
    model: GpModel,
    prediction: Prediction,
    incumbent: Incumbent,
}

fn update_models(
    measurements: &[ProbeMeasurement],
    mesh: &TriMesh,
    cmu: &CmuConfig,
    config: &ExperimentConfig,
    grid: &[Point2],
) -> Result<ModelState> {
    let sets = collect_sets(measurements, cmu);
    let samples: Vec<StiffnessSample> = sets
        .iter()
        .enumerate()
        .filter_map(|(i, s)| estimate_stiffness(s, i, measurements).ok())
        .collect();
    let registration = cmu_register(&sets, &samples, mesh, measurements, cmu)?;
    let (inputs, outputs) = samples
        .iter()
        .filter(|s| !s.degenerate)
        .map(|s| (s.location, s.stiffness))
        .unzip();
    let training = TrainingSet::new(inputs, outputs)?;
    let model = gp_fit(&training, &config.kernel)?;
    let prediction = model.predict(grid);
    let incumbent = Incumbent::from_training(&training);
    Ok(ModelState {
        sets,
        samples,
        registration,
        model,
        prediction,
        incumbent,
    })
}

/// Evenly spaced lattice of `count` targets covering the closed ROI,
/// `round(√count)` columns, rows filled in order.
pub fn uniform_lattice(roi: &Roi, count: usize) -> Vec<Point2> {
    if count == 0 {
        return Vec::new();
    }
    let nx = ((count as f64).sqrt().round() as usize).max(1);
    let ny = count.div_ceil(nx);
    let coord = |lo: f64, hi: f64, i: usize, n: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .take(count)
        .map(|(i, j)| {
            Point2::new(
                coord(roi.xmin, roi.xmax, i, nx),
                coord(roi.ymin, roi.ymax, j, ny),
            )
        })
        .collect()
}

/// Measurements gathered so far and the grid nodes already probed.
struct ProbeLog<'a> {
    phantom: &'a PhantomSpec,
    config: &'a ExperimentConfig,
    grid: &'a [Point2],
    measurements: Vec<ProbeMeasurement>,
    probes: Vec<ProbeRecord>,
    visited: Vec<bool>,
    rng: ChaCha8Rng,
}

impl ProbeLog<'_> {
    fn probe_at(&mut self, target: Point2) -> Result<()> {
        let c = self.config;
        let recorded = probe(self.phantom, &target, &c.probe, &c.noise, &mut self.rng)?;
        let start = self.measurements.len();
        self.measurements.extend(recorded);
        self.probes.push(ProbeRecord {
            target,
            measurements: start..self.measurements.len(),
        });
        for (v, g) in self.visited.iter_mut().zip(self.grid) {
            if (g - target).norm() <= 1e-9 {
                *v = true;
            }
        }
        Ok(())
    }
}

fn load_phantom(config: &ExperimentConfig) -> Result<PhantomSpec> {
    let mut phantom = PhantomSpec::load(&config.phantom)?;
    let mut rng = stream(config.seed, PHANTOM_STREAM);
    phantoms::perturb_bumps(&mut phantom, config.bump_perturbation_mm, &mut rng);
    Ok(phantom)
}

/// Runs the closed palpation loop described by `config`.
///
/// The initial set is probed first. Each cycle then regroups all measurements,
/// re-estimates stiffness, re-registers from scratch, refits the GP and picks
/// the next target (EI), until the budget is spent or every grid node has
/// been probed. The uniform strategy probes its fixed lattice and updates once.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    let phantom = load_phantom(config)?;
    let grid = prediction_grid(&config.roi);
    let ground_truth: Vec<f64> = grid
        .par_iter()
        .map(|p| phantom.stiffness_under(p))
        .collect::<Result<_>>()?;

    let noise_rng = stream(config.noise.rng_seed.unwrap_or(config.seed), NOISE_STREAM);
    let mut explore_rng = stream(
        config.policy.rng_seed.unwrap_or(config.seed),
        EXPLORATION_STREAM,
    );
    let cmu = config.cmu_with_seeds(&mut stream(config.seed, REGISTRATION_STREAM));

    let mut log = ProbeLog {
        phantom: &phantom,
        config,
        grid: &grid,
        measurements: Vec::new(),
        probes: Vec::new(),
        visited: vec![false; grid.len()],
        rng: noise_rng,
    };
    for target in initial_samples(&config.roi) {
        log.probe_at(target)?;
    }

    let mut history = Vec::new();
    let mut record = |state: &ModelState, probe_count: usize| {
        history.push(CycleRecord {
            cycle: history.len(),
            probe_count,
            objective: state.registration.objective,
            transform: state.registration.transform,
        });
    };

    let state = match config.strategy {
        Strategy::Uniform => {
            for target in uniform_lattice(&config.roi, config.budget) {
                log.probe_at(target)?;
            }
            let state = update_models(&log.measurements, &phantom.mesh, &cmu, config, &grid)?;
            record(&state, log.probes.len());
            state
        }
        Strategy::Ei => {
            let mut extra = 0;
            loop {
                let state = update_models(&log.measurements, &phantom.mesh, &cmu, config, &grid)?;
                record(&state, log.probes.len());
                if extra == config.budget {
                    break state;
                }
                let next = match select_next(
                    &state.prediction,
                    &grid,
                    &log.visited,
                    &state.incumbent,
                    extra,
                    &config.policy,
                    &mut explore_rng,
                ) {
                    Ok(i) => i,
                    Err(Error::ExplorationExhausted) => break state,
                    Err(e) => return Err(e),
                };
                log.probe_at(grid[next])?;
                extra += 1;
            }
        }
    };
    let ProbeLog {
        measurements,
        probes,
        ..
    } = log;

    let expected_improvement =
        expected_improvement_grid(&state.prediction, state.incumbent.best_value);
    let truth = phantom.true_transform;
    let estimate = state.registration.transform;
    let positions: Vec<_> = measurements.iter().map(|m| m.position).collect();
    let rms = rms_error(&estimate, &truth, &positions)?;
    let (est, tru) = (estimate.to_euler_deg(), truth.to_euler_deg());
    let report = ExperimentReport {
        strategy: config.strategy,
        seed: config.seed,
        true_transform: TransformParams::from(&truth),
        estimated_transform: TransformParams::from(&estimate),
        translation_error_mm: [est[0] - tru[0], est[1] - tru[1], est[2] - tru[2]],
        rotation_error_deg: [est[3] - tru[3], est[4] - tru[4], est[5] - tru[5]],
        rms_mm: rms,
        probe_count: probes.len(),
        stiffness_sets: state.samples.len(),
        objective: state.registration.objective,
        registration_iterations: state.registration.iterations,
        winning_seed: state.registration.seed_index,
        map_rmse: map_rmse(&state.prediction.mean, &ground_truth),
        map_correlation: pearson_correlation(&state.prediction.mean, &ground_truth),
        top_decile_rmse: top_decile_rmse(&state.prediction.mean, &ground_truth),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let depths = probes
        .iter()
        .flat_map(|p| (1..=p.measurements.len()).map(|k| config.probe.depth(k)))
        .collect();

    Ok(ExperimentOutcome {
        report,
        roi: config.roi,
        grid,
        ground_truth,
        prediction: state.prediction,
        expected_improvement,
        model: state.model,
        probes,
        measurements,
        depths,
        sets: state.sets,
        samples: state.samples,
        registration: state.registration,
        history,
        true_transform: truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub ei_map_rmse: f64,
    pub uniform_map_rmse: f64,
    pub ei_top_decile_rmse: f64,
    pub uniform_top_decile_rmse: f64,
    /// EI's top-decile RMSE is strictly lower.
    pub ei_wins: bool,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub ei: ExperimentOutcome,
    pub uniform: ExperimentOutcome,
    pub summary: ComparisonSummary,
}

/// Runs the same configuration once with EI and once with the uniform lattice.
pub fn compare_strategies(config: &ExperimentConfig) -> Result<Comparison> {
    let run = |strategy| {
        let mut c = config.clone();
        c.strategy = strategy;
        c.output_dir = config.output_dir.join(strategy.name());
        run_experiment(&c)
    };
    let ei = run(Strategy::Ei)?;
    let uniform = run(Strategy::Uniform)?;
    let summary = ComparisonSummary {
        ei_map_rmse: ei.report.map_rmse,
        uniform_map_rmse: uniform.report.map_rmse,
        ei_top_decile_rmse: ei.report.top_decile_rmse,
        uniform_top_decile_rmse: uniform.report.top_decile_rmse,
        ei_wins: ei.report.top_decile_rmse < uniform.report.top_decile_rmse,
    };
    Ok(Comparison {
        ei,
        uniform,
        summary,
    })
}

/// Ground-truth stiffness over the model-frame x–y bounding box of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMap {
    pub points: Vec<Point2>,
    pub values: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
}

pub fn ground_truth_map(phantom: &PhantomSpec, spacing: f64) -> Result<GroundTruthMap> {
    let (lo, hi) = phantom
        .mesh
        .bounding_box()
        .ok_or_else(|| Error::Config("phantom mesh has no vertices".into()))?;
    let roi = Roi::new(lo.x, hi.x, lo.y, hi.y, spacing)?;
    let points = prediction_grid(&roi);
    let values = points.iter().map(|p| phantom.true_stiffness(p)).collect();
    let (nx, ny) = roi.grid_shape();
    Ok(GroundTruthMap {
        points,
        values,
        nx,
        ny,
    })
}
