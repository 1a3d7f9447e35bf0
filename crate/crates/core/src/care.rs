//! Complementary model update: stiffness from compatible measurement sets and
//! registration of the tool frame to the organ mesh.
//!
//! Stiffness is estimated once per set from tool-frame data. Registration then
//! alternates closest-point correspondence with an SVD rigid fit, where each
//! target is the corresponding surface point pushed inward along the surface
//! normal by the reference measurement's deformation depth `F_β / c`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{rigid_fit_svd, TransformParams};
use crate::{Error, Point2, Result, RigidTransform, TriMesh, Vec3};

/// Stiffness floor; fitted slopes below it are clamped and flagged.
pub const MIN_STIFFNESS: f64 = 1e-6;

/// One sensed sample: tool-frame position, normal force magnitude and surface normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeMeasurement {
    pub position: Vec3,
    pub force: f64,
    pub sensed_normal: Vec3,
}

/// Measurements taken at effectively one surface location.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleSet {
    /// Indices into the measurement list, in arrival order.
    pub members: Vec<usize>,
    /// Lowest-force member (ties to the earliest).
    pub reference: usize,
    /// Tool-frame x–y of the reference member.
    pub location: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffnessSample {
    pub location: Point2,
    /// N/mm.
    pub stiffness: f64,
    pub set_index: usize,
    /// Set when the fitted slope fell below [`MIN_STIFFNESS`] and was clamped.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmuConfig {
    /// Largest distance (mm) from a set's axis for a measurement to join it.
    pub tangent_distance_threshold: f64,
    /// Largest angle (degrees) between a measurement normal and the set normal.
    pub normal_angle_threshold: f64,
    /// Smallest force difference (N) that makes two measurements a valid pair.
    pub min_force_difference: f64,
    pub max_iterations: usize,
    /// Stop when no reference point moves more than this (mm) in one iteration.
    pub convergence_tolerance: f64,
    /// Initial registration guesses.
    #[serde(default = "default_seeds")]
    pub seed_transforms: Vec<TransformParams>,
}

fn default_seeds() -> Vec<TransformParams> {
    vec![TransformParams {
        translation_mm: [0.0; 3],
        rotation_deg: [0.0; 3],
    }]
}

impl Default for CmuConfig {
    fn default() -> Self {
        CmuConfig {
            tangent_distance_threshold: 1.0,
            normal_angle_threshold: 10.0,
            min_force_difference: 0.05,
            max_iterations: 50,
            convergence_tolerance: 1e-3,
            seed_transforms: default_seeds(),
        }
    }
}

impl CmuConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (
                "tangent_distance_threshold",
                self.tangent_distance_threshold,
            ),
            ("normal_angle_threshold", self.normal_angle_threshold),
            ("min_force_difference", self.min_force_difference),
            ("convergence_tolerance", self.convergence_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.seed_transforms.is_empty() {
            return Err(Error::InvalidInput(
                "at least one seed transform is required".into(),
            ));
        }
        Ok(())
    }
}

/// Identity followed by `count` random perturbations of it, translations
/// uniform in `±max_translation` mm and rotations in `±max_rotation_deg` per axis.
pub fn seed_transforms<R: Rng + ?Sized>(
    count: usize,
    max_translation: f64,
    max_rotation_deg: f64,
    rng: &mut R,
) -> Vec<TransformParams> {
    let mut seeds = default_seeds();
    for _ in 0..count {
        let mut t = || rng.random_range(-max_translation..=max_translation);
        let translation_mm = [t(), t(), t()];
        let mut r = || rng.random_range(-max_rotation_deg..=max_rotation_deg);
        let rotation_deg = [r(), r(), r()];
        seeds.push(TransformParams {
            translation_mm,
            rotation_deg,
        });
    }
    seeds
}

/// Distance from `p` to the line through `anchor` along unit `axis`.
fn axis_distance(p: &Vec3, anchor: &Vec3, axis: &Vec3) -> f64 {
    let d = p - anchor;
    (d - axis * d.dot(axis)).norm()
}

fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Measurements gathered so far for one candidate set.
struct Group {
    members: Vec<usize>,
    position_sum: Vec3,
    normal_sum: Vec3,
}

impl Group {
    fn centroid(&self) -> Vec3 {
        self.position_sum / self.members.len() as f64
    }

    fn push(&mut self, k: usize, m: &ProbeMeasurement) {
        self.members.push(k);
        self.position_sum += m.position;
        self.normal_sum += m.sensed_normal;
    }
}

/// Groups measurements greedily in arrival order.
///
/// A measurement joins the first existing group it matches: within the
/// tangent distance of the line through the group's centroid along its mean
/// normal, normal within the angle threshold of that mean normal, and force
/// differing from at least one member by the minimum force difference.
/// Otherwise it founds a new group. Groups with fewer than two members are
/// dropped.
pub fn collect_sets(measurements: &[ProbeMeasurement], config: &CmuConfig) -> Vec<CompatibleSet> {
    let mut groups: Vec<Group> = Vec::new();
    for (k, m) in measurements.iter().enumerate() {
        let joined = groups.iter_mut().find(|g| {
            let axis = g.normal_sum.normalize();
            axis_distance(&m.position, &g.centroid(), &axis) <= config.tangent_distance_threshold
                && angle_deg(&m.sensed_normal, &axis) <= config.normal_angle_threshold
                && g.members.iter().any(|&j| {
                    (measurements[j].force - m.force).abs() >= config.min_force_difference
                })
        });
        match joined {
            Some(g) => g.push(k, m),
            None => {
                let mut g = Group {
                    members: Vec::new(),
                    position_sum: Vec3::zeros(),
                    normal_sum: Vec3::zeros(),
                };
                g.push(k, m);
                groups.push(g);
            }
        }
    }
    groups
        .into_iter()
        .map(|g| g.members)
        .filter(|g| g.len() >= 2)
        .map(|members| {
            let reference = *members
                .iter()
                .min_by(|&&a, &&b| {
                    measurements[a]
                        .force
                        .partial_cmp(&measurements[b].force)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                })
                .expect("sets have at least two members");
            let p = measurements[reference].position;
            CompatibleSet {
                members,
                reference,
                location: Point2::new(p.x, p.y),
            }
        })
        .collect()
}

/// Least-squares slope of force against depth for one set, where the depth of
/// a member is its distance from the reference (lowest-force) member.
pub fn estimate_stiffness(
    set: &CompatibleSet,
    set_index: usize,
    measurements: &[ProbeMeasurement],
) -> Result<StiffnessSample> {
    if set.members.len() < 2 {
        return Err(Error::DegenerateSet(format!(
            "set {set_index} has {} member(s)",
            set.members.len()
        )));
    }
    let origin = measurements[set.reference].position;
    let points: Vec<(f64, f64)> = set
        .members
        .iter()
        .map(|&j| {
            (
                (measurements[j].position - origin).norm(),
                measurements[j].force,
            )
        })
        .collect();
    let slope = fit_slope(&points)
        .ok_or_else(|| Error::DegenerateSet(format!("set {set_index} has no spread in depth")))?;
    let degenerate = !(slope >= MIN_STIFFNESS);
    Ok(StiffnessSample {
        location: set.location,
        stiffness: if degenerate { MIN_STIFFNESS } else { slope },
        set_index,
        degenerate,
    })
}

/// Ordinary least-squares slope of `y` on `x`; `None` when `x` has no spread.
fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    let scale = points
        .iter()
        .map(|p| p.0.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    if sxx <= (scale * 1e-12).powi(2) * n {
        return None;
    }
    Some(sxy / sxx)
}

/// One registration iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub transform: RigidTransform,
}

/// Outcome of iterating from one seed transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: RigidTransform,
    pub initial_objective: f64,
    /// Best iterate reached from this seed.
    pub transform: RigidTransform,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    /// Sum of squared residuals over the sets used.
    pub objective: f64,
    pub iterations: usize,
    /// Index of the winning seed in `seeds`.
    pub seed_index: usize,
    pub seeds: Vec<SeedOutcome>,
    /// Indices of the stiffness samples that entered the fit.
    pub used_samples: Vec<usize>,
}

/// Per-set inputs of the registration objective.
struct Anchor {
    source: Vec3,
    depth: f64,
}

/// Registers the tool frame to `mesh` from the reference points of the sets.
///
/// Samples flagged degenerate are left out. Each seed is iterated
/// independently; the seed with the smallest final objective wins (lowest
/// index on ties).
pub fn cmu_register(
    sets: &[CompatibleSet],
    samples: &[StiffnessSample],
    mesh: &TriMesh,
    measurements: &[ProbeMeasurement],
    config: &CmuConfig,
) -> Result<RegistrationResult> {
    config.validate()?;
    let used_samples: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.degenerate && s.stiffness.is_finite() && s.stiffness > 0.0)
        .map(|(i, _)| i)
        .collect();
    if used_samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "registration needs 3 sets with valid stiffness, have {}",
            used_samples.len()
        )));
    }
    let anchors: Vec<Anchor> = used_samples
        .iter()
        .map(|&i| {
            let s = &samples[i];
            let reference = &measurements[sets[s.set_index].reference];
            Anchor {
                source: reference.position,
                depth: reference.force / s.stiffness,
            }
        })
        .collect();

    let outcomes: Vec<SeedOutcome> = config
        .seed_transforms
        .par_iter()
        .map(|seed| iterate_seed(seed.to_transform(), &anchors, mesh, config))
        .collect::<Result<_>>()?;

    let seed_index = outcomes.iter().enumerate().fold(0, |best, (i, o)| {
        if o.objective < outcomes[best].objective {
            i
        } else {
            best
        }
    });
    let winner = &outcomes[seed_index];
    Ok(RegistrationResult {
        transform: winner.transform,
        objective: winner.objective,
        iterations: winner.iterations,
        seed_index,
        seeds: outcomes,
        used_samples,
    })
}

/// Targets `p_C − n_C·F_β/c` for the current transform and the objective
/// `Σ‖target − T·source‖²`.
fn correspond(t: &RigidTransform, anchors: &[Anchor], mesh: &TriMesh) -> Result<(Vec<Vec3>, f64)> {
    let mut objective = 0.0;
    let mut targets = Vec::with_capacity(anchors.len());
    for a in anchors {
        let mapped = t.apply(&a.source);
        let hit = mesh.closest_point(&mapped)?;
        let target = hit.point - hit.normal * a.depth;
        objective += (target - mapped).norm_squared();
        targets.push(target);
    }
    Ok((targets, objective))
}

fn iterate_seed(
    seed: RigidTransform,
    anchors: &[Anchor],
    mesh: &TriMesh,
    config: &CmuConfig,
) -> Result<SeedOutcome> {
    let sources: Vec<Vec3> = anchors.iter().map(|a| a.source).collect();
    let mut current = seed;
    let (mut targets, initial_objective) = correspond(&current, anchors, mesh)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: initial_objective,
        transform: current,
    }];
    let (mut best, mut best_objective) = (current, initial_objective);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let next = rigid_fit_svd(&sources, &targets)?;
        let step = next.max_displacement(&current, &sources);
        current = next;
        let (t, objective) = correspond(&current, anchors, mesh)?;
        targets = t;
        trace.push(TraceEntry {
            iteration: iterations,
            objective,
            transform: current,
        });
        if objective < best_objective {
            best = current;
            best_objective = objective;
        }
        if step < config.convergence_tolerance {
            converged = true;
            break;
        }
    }
    Ok(SeedOutcome {
        seed,
        initial_objective,
        transform: best,
        objective: best_objective,
        iterations,
        converged,
        trace,
    })
}
