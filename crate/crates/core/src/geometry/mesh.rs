use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::bvh::Bvh;
use super::closest::{closest_point_on_triangle, ClosestPointResult};
use crate::{Error, Real, Result};

/// Triangle mesh with outward face normals derived from vertex winding.
#[derive(Debug, Clone)]
pub struct TriMesh<S: Real> {
    vertices: Vec<Vector3<S>>,
    faces: Vec<[usize; 3]>,
    face_normals: Vec<Vector3<S>>,
    bvh: Bvh<S>,
}

/// Intersection of a ray with a mesh face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<S: Real> {
    /// Ray parameter: `point = origin + t·direction`.
    pub t: S,
    pub point: Vector3<S>,
    pub face_index: usize,
}

/// JSON mesh document: zero-based triangle indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDocument {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl<S: Real> TriMesh<S> {
    /// Validates indices and recomputes unit face normals from the winding.
    pub fn new(vertices: Vec<Vector3<S>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mut face_normals = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!(
                    "face {fi} references vertex {bad} but the mesh has {} vertices",
                    vertices.len()
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidInput(format!(
                    "face {fi} repeats a vertex: {f:?}"
                )));
            }
            let n = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
            let len = n.norm();
            if len <= S::zero() || !len.is_finite() {
                return Err(Error::DegenerateGeometry(format!(
                    "face {fi} has zero area"
                )));
            }
            face_normals.push(n / len);
        }
        let bvh = Bvh::build(&vertices, &faces);
        Ok(TriMesh {
            vertices,
            faces,
            face_normals,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Vector3<S>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vector3<S>] {
        &self.face_normals
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vector3<S>; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0]],
            self.vertices[f[1]],
            self.vertices[f[2]],
        ]
    }

    /// Axis-aligned bounds of the vertices, `None` for a vertex-less mesh.
    pub fn bounding_box(&self) -> Option<(Vector3<S>, Vector3<S>)> {
        let first = *self.vertices.first()?;
        Some(
            self.vertices
                .iter()
                .fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))),
        )
    }

    pub fn surface_area(&self) -> S {
        (0..self.faces.len()).fold(S::zero(), |acc, f| {
            let [a, b, c] = self.triangle(f);
            acc + (b - a).cross(&(c - a)).norm() * S::lit(0.5)
        })
    }

    /// Nearest point on the union of all closed faces. Equidistant faces
    /// resolve to the lowest face index.
    pub fn closest_point(&self, query: &Vector3<S>) -> Result<ClosestPointResult<S>> {
        if self.faces.is_empty() {
            return Err(Error::InvalidInput(
                "closest point query on an empty mesh".into(),
            ));
        }
        let (face, _) = self
            .bvh
            .nearest(query, |f| {
                let [a, b, c] = self.triangle(f);
                let (p, _) = closest_point_on_triangle(query, &a, &b, &c);
                (query - p).norm_squared()
            })
            .expect("non-empty mesh has a nearest face");
        let [a, b, c] = self.triangle(face);
        let (point, barycentric) = closest_point_on_triangle(query, &a, &b, &c);
        Ok(ClosestPointResult {
            point,
            normal: self.face_normals[face],
            face_index: face,
            barycentric,
            distance: (query - point).norm(),
        })
    }

    /// First intersection (smallest `t ≥ 0`) of the ray with any face, both
    /// sides counted. Faces hit at the same `t` resolve to the lowest index.
    pub fn raycast(&self, origin: &Vector3<S>, direction: &Vector3<S>) -> Option<RayHit<S>> {
        let eps = S::lit(1e-12);
        let mut best: Option<RayHit<S>> = None;
        for (fi, _) in self.faces.iter().enumerate() {
            let [a, b, c] = self.triangle(fi);
            let e1 = b - a;
            let e2 = c - a;
            let h = direction.cross(&e2);
            let det = e1.dot(&h);
            if det.abs() < eps {
                continue;
            }
            let inv = S::one() / det;
            let s = origin - a;
            let u = s.dot(&h) * inv;
            if u < -eps || u > S::one() + eps {
                continue;
            }
            let q = s.cross(&e1);
            let v = direction.dot(&q) * inv;
            if v < -eps || u + v > S::one() + eps {
                continue;
            }
            let t = e2.dot(&q) * inv;
            if t < S::zero() {
                continue;
            }
            if best.is_none_or(|b| t < b.t) {
                best = Some(RayHit {
                    t,
                    point: origin + direction * t,
                    face_index: fi,
                });
            }
        }
        best
    }

    /// Parses ASCII OBJ text: `v` and triangular `f` records (1-based or
    /// negative relative indices). Other record types are ignored; polygons
    /// with more than three vertices are rejected.
    pub fn from_obj_str(text: &str, source: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("v") => {
                    let coords: Vec<f64> = tokens
                        .take(3)
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| parse_err(line_no, format!("bad vertex coordinate: {e}")))?;
                    if coords.len() != 3 {
                        return Err(parse_err(line_no, "vertex needs 3 coordinates".into()));
                    }
                    vertices.push(Vector3::new(
                        S::lit(coords[0]),
                        S::lit(coords[1]),
                        S::lit(coords[2]),
                    ));
                }
                Some("f") => {
                    let refs: Vec<&str> = tokens.collect();
                    if refs.len() != 3 {
                        return Err(parse_err(
                            line_no,
                            format!(
                                "only triangular faces are supported, found {} vertices",
                                refs.len()
                            ),
                        ));
                    }
                    let mut face = [0usize; 3];
                    for (slot, r) in face.iter_mut().zip(&refs) {
                        let idx: i64 = r.split('/').next().unwrap_or("").parse().map_err(|e| {
                            parse_err(line_no, format!("bad face index {r:?}: {e}"))
                        })?;
                        let resolved = match idx {
                            0 => None,
                            i if i > 0 => Some(i as usize - 1),
                            i => (vertices.len() as i64 + i).try_into().ok(),
                        };
                        *slot = resolved.filter(|&v| v < vertices.len()).ok_or_else(|| {
                            parse_err(line_no, format!("face index {idx} out of range"))
                        })?;
                    }
                    faces.push(face);
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x.as_f64(), v.y.as_f64(), v.z.as_f64());
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    pub fn from_json_str(text: &str, source: &Path) -> Result<Self> {
        let doc: MeshDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let vertices = doc
            .vertices
            .iter()
            .map(|v| Vector3::new(S::lit(v[0]), S::lit(v[1]), S::lit(v[2])))
            .collect();
        Self::new(vertices, doc.faces)
    }

    pub fn to_json_string(&self) -> String {
        let doc = MeshDocument {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v.x.as_f64(), v.y.as_f64(), v.z.as_f64()])
                .collect(),
            faces: self.faces.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("mesh document serializes")
    }

    /// Loads a mesh, choosing the JSON reader for `.json` files and OBJ otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if is_json(path) {
            Self::from_json_str(&text, path)
        } else {
            Self::from_obj_str(&text, path)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if is_json(path) {
            self.to_json_string()
        } else {
            self.to_obj_string()
        };
        std::fs::write(path, text).map_err(|e| Error::io(PathBuf::from(path), e))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_triangle() -> TriMesh<f64> {
        TriMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn closest_point_above_face() {
        let m = unit_triangle();
        let r = m.closest_point(&Vector3::new(0.2, 0.2, 1.0)).unwrap();
        assert_relative_eq!(r.point, Vector3::new(0.2, 0.2, 0.0), epsilon = 1e-15);
        assert_relative_eq!(r.distance, 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.normal, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn closest_point_at_vertex_and_beyond_edge() {
        let m = unit_triangle();
        let r = m.closest_point(&Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(r.distance, 0.0);
        let r = m.closest_point(&Vector3::new(0.5, -3.0, 4.0)).unwrap();
        assert_relative_eq!(r.point, Vector3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(r.distance, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn equidistant_faces_pick_lowest_index() {
        // Two coplanar squares halves sharing the diagonal; a query above the
        // shared edge is equidistant from both.
        let m = TriMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 2, 3], [0, 1, 2]],
        )
        .unwrap();
        let r = m.closest_point(&Vector3::new(0.5, 0.5, 2.0)).unwrap();
        assert_eq!(r.face_index, 0);
    }

    #[test]
    fn empty_mesh_query_is_rejected() {
        let m = TriMesh::<f64>::new(vec![], vec![]).unwrap();
        assert!(matches!(
            m.closest_point(&Vector3::zeros()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn invalid_faces_are_rejected() {
        let v: Vec<Vector3<f64>> = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 1]]),
            Err(Error::InvalidInput(_))
        ));
        let collinear: Vec<Vector3<f64>> = vec![Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0];
        assert!(matches!(
            TriMesh::new(collinear, vec![[0, 1, 2]]),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn obj_parsing() {
        let text = "# unit square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\nf -4 -2 -1\n";
        let m = TriMesh::<f64>::from_obj_str(text, Path::new("sq.obj")).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert_relative_eq!(m.surface_area(), 1.0);
        for n in m.face_normals() {
            assert_relative_eq!(*n, Vector3::z());
        }

        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = TriMesh::<f64>::from_obj_str(quad, Path::new("q.obj")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");

        let oob = "v 0 0 0\nf 1 2 3\n";
        assert!(TriMesh::<f64>::from_obj_str(oob, Path::new("o.obj")).is_err());
    }

    #[test]
    fn normals_follow_winding_not_file() {
        let text = "v 0 0 0\nv 0 1 0\nv 1 0 0\nvn 0 0 1\nf 1//1 2//1 3//1\n";
        let m = TriMesh::<f64>::from_obj_str(text, Path::new("w.obj")).unwrap();
        assert_relative_eq!(m.face_normals()[0], -Vector3::z());
    }

    #[test]
    fn raycast_hits_nearest_face() {
        let m = TriMesh::new(
            vec![
                Vector3::new(-1.0, -1.0, 0.0),
                Vector3::new(3.0, -1.0, 0.0),
                Vector3::new(-1.0, 3.0, 0.0),
                Vector3::new(-1.0, -1.0, 2.0),
                Vector3::new(3.0, -1.0, 2.0),
                Vector3::new(-1.0, 3.0, 2.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let hit = m
            .raycast(&Vector3::new(0.0, 0.0, 10.0), &Vector3::new(0.0, 0.0, -1.0))
            .unwrap();
        assert_eq!(hit.face_index, 1);
        assert_relative_eq!(hit.point.z, 2.0);
        assert!(m
            .raycast(&Vector3::new(5.0, 5.0, 10.0), &Vector3::new(0.0, 0.0, -1.0))
            .is_none());
    }

    #[test]
    fn json_round_trip() {
        let m = unit_triangle();
        let back = TriMesh::<f64>::from_json_str(&m.to_json_string(), Path::new("m.json")).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.faces(), m.faces());
    }
}
