//! Virtual organ and probing rig.
//!
//! A phantom is a surface mesh in the model frame, a parametric stiffness
//! field over model-frame x–y and the hidden tool-to-model transform. Probing
//! replays the contact / normal / zero-force / incremental-depth sequence of a
//! palpation robot against that ground truth.

pub mod phantoms;

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::care::ProbeMeasurement;
use crate::geometry::TransformParams;
use crate::{Error, Point2, Result, RigidTransform, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    /// Model-frame x–y, mm.
    pub center: [f64; 2],
    /// Peak stiffness above baseline, N/mm.
    pub amplitude: f64,
    /// Gaussian standard deviation, mm.
    pub radius: f64,
}

/// Stiff ridge along a polyline with a Gaussian cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artery {
    pub polyline: Vec<[f64; 2]>,
    pub half_width: f64,
    pub amplitude: f64,
}

/// Ground truth for one synthetic organ.
#[derive(Debug, Clone)]
pub struct PhantomSpec {
    pub mesh: TriMesh,
    pub baseline_stiffness: f64,
    pub bumps: Vec<Bump>,
    pub artery: Option<Artery>,
    /// Tool frame → model frame.
    pub true_transform: RigidTransform,
}

/// On-disk form of [`PhantomSpec`]; the mesh is referenced by path,
/// relative paths resolving against the document's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomDocument {
    pub mesh: PathBuf,
    pub baseline_stiffness: f64,
    #[serde(default)]
    pub bumps: Vec<Bump>,
    #[serde(default)]
    pub artery: Option<Artery>,
    pub true_transform: TransformParams,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("phantom: {m}")));
        if !(self.baseline_stiffness > 0.0 && self.baseline_stiffness.is_finite()) {
            return bad("baseline_stiffness must be positive");
        }
        for b in &self.bumps {
            if !(b.amplitude >= 0.0) || !(b.radius > 0.0) {
                return bad("bump amplitudes must be non-negative and radii positive");
            }
        }
        if let Some(a) = &self.artery {
            if a.polyline.len() < 2 {
                return bad("artery polyline needs at least 2 points");
            }
            if !(a.half_width > 0.0) || !(a.amplitude >= 0.0) {
                return bad("artery half_width must be positive and amplitude non-negative");
            }
        }
        if self.mesh.is_empty() {
            return bad("mesh has no faces");
        }
        Ok(())
    }

    /// Reads a phantom document and the mesh it references.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: PhantomDocument = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_document(&doc, base)
    }

    pub fn from_document(doc: &PhantomDocument, base_dir: &Path) -> Result<Self> {
        let mesh_path = base_dir.join(&doc.mesh);
        let spec = PhantomSpec {
            mesh: TriMesh::load(&mesh_path)?,
            baseline_stiffness: doc.baseline_stiffness,
            bumps: doc.bumps.clone(),
            artery: doc.artery.clone(),
            true_transform: doc.true_transform.to_transform(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_document(&self, mesh_path: impl Into<PathBuf>) -> PhantomDocument {
        PhantomDocument {
            mesh: mesh_path.into(),
            baseline_stiffness: self.baseline_stiffness,
            bumps: self.bumps.clone(),
            artery: self.artery.clone(),
            true_transform: TransformParams::from(&self.true_transform),
        }
    }

    /// Stiffness (N/mm) at a model-frame x–y location.
    pub fn true_stiffness(&self, q: &Point2) -> f64 {
        let bumps: f64 = self
            .bumps
            .iter()
            .map(|b| {
                let d2 = (q - Point2::from(b.center)).norm_squared();
                b.amplitude * (-d2 / (2.0 * b.radius * b.radius)).exp()
            })
            .sum();
        let artery = self.artery.as_ref().map_or(0.0, |a| {
            let d = polyline_distance(q, &a.polyline);
            if d <= 3.0 * a.half_width {
                a.amplitude * (-d * d / (2.0 * a.half_width * a.half_width)).exp()
            } else {
                0.0
            }
        });
        self.baseline_stiffness + bumps + artery
    }

    /// Where the tool-frame vertical line through `target` meets the surface:
    /// model-frame contact point and outward normal.
    pub fn surface_contact(&self, target: &Point2) -> Result<SurfaceContact> {
        let to_tool = self.true_transform.inverse();
        let top = self
            .mesh
            .vertices()
            .iter()
            .map(|v| to_tool.apply(v).z)
            .fold(f64::NEG_INFINITY, f64::max);
        let origin = self
            .true_transform
            .apply(&Vec3::new(target.x, target.y, top + 10.0));
        let direction = self.true_transform.apply_vector(&Vec3::new(0.0, 0.0, -1.0));
        let hit = self
            .mesh
            .raycast(&origin, &direction)
            .ok_or(Error::OutOfWorkspace {
                x: target.x,
                y: target.y,
            })?;
        let mut normal = self.mesh.face_normals()[hit.face_index];
        if normal.dot(&direction) > 0.0 {
            normal = -normal;
        }
        Ok(SurfaceContact {
            point: hit.point,
            normal,
            face_index: hit.face_index,
        })
    }

    /// Ground-truth stiffness under a tool-frame target.
    pub fn stiffness_under(&self, target: &Point2) -> Result<f64> {
        let c = self.surface_contact(target)?;
        Ok(self.true_stiffness(&Point2::new(c.point.x, c.point.y)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceContact {
    pub point: Vec3,
    pub normal: Vec3,
    pub face_index: usize,
}

fn polyline_distance(q: &Point2, polyline: &[[f64; 2]]) -> f64 {
    polyline
        .windows(2)
        .map(|w| {
            let a = Point2::from(w[0]);
            let b = Point2::from(w[1]);
            let ab = b - a;
            let len2 = ab.norm_squared();
            let t = if len2 > 0.0 {
                ((q - a).dot(&ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (q - (a + ab * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Per-axis position noise, mm.
    pub position_sigma: f64,
    /// Force noise, N.
    pub force_sigma: f64,
    /// Seed of the noise stream; derived from the experiment seed when absent.
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            position_sigma: 0.3,
            force_sigma: 0.1,
            rng_seed: None,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            position_sigma: 0.0,
            force_sigma: 0.0,
            rng_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position_sigma >= 0.0) || !(self.force_sigma >= 0.0) {
            return Err(Error::Config("noise sigmas must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Radius of the spherical end effector, mm.
    pub probe_radius: f64,
    /// Force used to establish first contact, N.
    pub contact_force: f64,
    pub depth_increment: f64,
    pub max_depth: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            probe_radius: 9.0,
            contact_force: 0.5,
            depth_increment: 0.3,
            max_depth: 3.0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.probe_radius,
            self.contact_force,
            self.depth_increment,
            self.max_depth,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !all_positive {
            return Err(Error::Config("probe parameters must be positive".into()));
        }
        let steps = self.max_depth / self.depth_increment;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::Config(
                "max_depth must be a whole multiple of depth_increment".into(),
            ));
        }
        Ok(())
    }

    /// Number of recorded depth increments per probe.
    pub fn steps(&self) -> usize {
        (self.max_depth / self.depth_increment).round() as usize
    }

    /// Commanded depth of the `k`-th recorded sample (1-based).
    pub fn depth(&self, k: usize) -> f64 {
        k as f64 * self.depth_increment
    }
}

/// Rectangular region of interest in tool-frame x–y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roi {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    /// Prediction grid spacing, mm.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    1.0
}

impl Roi {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, spacing: f64) -> Result<Self> {
        let roi = Roi {
            xmin,
            xmax,
            ymin,
            ymax,
            spacing,
        };
        roi.validate()?;
        Ok(roi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xmax > self.xmin) || !(self.ymax > self.ymin) {
            return Err(Error::Config(
                "ROI needs xmax > xmin and ymax > ymin".into(),
            ));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config("ROI grid spacing must be positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Node counts `(nx, ny)` of the prediction grid.
    pub fn grid_shape(&self) -> (usize, usize) {
        let count = |extent: f64| (extent / self.spacing + 1e-9).floor() as usize + 1;
        (count(self.xmax - self.xmin), count(self.ymax - self.ymin))
    }
}

/// The four ROI corners followed by a 5 × 3 interior lattice, row by row.
pub fn initial_samples(roi: &Roi) -> Vec<Point2> {
    let mut points = vec![
        Point2::new(roi.xmin, roi.ymin),
        Point2::new(roi.xmax, roi.ymin),
        Point2::new(roi.xmin, roi.ymax),
        Point2::new(roi.xmax, roi.ymax),
    ];
    let (w, h) = (roi.xmax - roi.xmin, roi.ymax - roi.ymin);
    for j in 1..=3 {
        for i in 1..=5 {
            points.push(Point2::new(
                roi.xmin + w * i as f64 / 6.0,
                roi.ymin + h * j as f64 / 4.0,
            ));
        }
    }
    points
}

/// Regular lattice at the ROI spacing, rows of increasing y, x fastest.
pub fn prediction_grid(roi: &Roi) -> Vec<Point2> {
    let (nx, ny) = roi.grid_shape();
    let mut grid = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            grid.push(Point2::new(
                roi.xmin + i as f64 * roi.spacing,
                roi.ymin + j as f64 * roi.spacing,
            ));
        }
    }
    grid
}

/// Simulates one palpation at a tool-frame target and returns the recorded
/// samples, positions in the tool frame.
///
/// 1. Descend along the tool's −z until the surface pushes back with the
///    contact force.
/// 2. Take the contact normal from the reaction force direction (the face
///    normal, since the surface is frictionless).
/// 3. Back off and re-approach along the normal to the zero-force point; the
///    ball centre sits one probe radius outside the contact.
/// 4. Press in along the normal in equal increments, recording position and force.
pub fn probe<R: Rng + ?Sized>(
    spec: &PhantomSpec,
    target: &Point2,
    config: &ProbeConfig,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<ProbeMeasurement>> {
    let contact = spec.surface_contact(target)?;
    let stiffness = spec.true_stiffness(&Point2::new(contact.point.x, contact.point.y));
    let normal = contact.normal;

    let zero_force_centre = contact.point + normal * config.probe_radius;
    let contact_point = zero_force_centre - normal * config.probe_radius;

    let to_tool = spec.true_transform.inverse();
    let sensed_normal = to_tool.apply_vector(&normal);
    let position_noise = gaussian(noise.position_sigma);
    let force_noise = gaussian(noise.force_sigma);

    let mut samples = Vec::with_capacity(config.steps());
    for k in 1..=config.steps() {
        let depth = config.depth(k);
        let mut position = to_tool.apply(&(contact_point - normal * depth));
        let mut force = stiffness * depth;
        if let Some(n) = &position_noise {
            position += Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        }
        if let Some(n) = &force_noise {
            force += n.sample(rng);
        }
        samples.push(ProbeMeasurement {
            position,
            force: force.max(0.0),
            sensed_normal,
        });
    }
    Ok(samples)
}

fn gaussian(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite positive sigma"))
}
