use nalgebra::Vector3;

use crate::Real;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node<S: Real> {
    min: Vector3<S>,
    max: Vector3<S>,
    // Inner nodes: `left` and `right` child indices. Leaves: `start..start + count`
    // into `order`, with `count > 0`.
    left: usize,
    right: usize,
    start: usize,
    count: usize,
}

/// Axis-aligned bounding-volume hierarchy over the faces of a mesh.
#[derive(Debug, Clone)]
pub(crate) struct Bvh<S: Real> {
    nodes: Vec<Node<S>>,
    order: Vec<usize>,
}

impl<S: Real> Bvh<S> {
    pub(crate) fn build(vertices: &[Vector3<S>], faces: &[[usize; 3]]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..faces.len()).collect(),
        };
        if faces.is_empty() {
            return bvh;
        }
        let centroids: Vec<Vector3<S>> = faces
            .iter()
            .map(|f| (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / S::lit(3.0))
            .collect();
        bvh.build_node(vertices, faces, &centroids, 0, faces.len());
        bvh
    }

    fn build_node(
        &mut self,
        vertices: &[Vector3<S>],
        faces: &[[usize; 3]],
        centroids: &[Vector3<S>],
        start: usize,
        end: usize,
    ) -> usize {
        let (min, max) = bounds(
            self.order[start..end]
                .iter()
                .flat_map(|&f| faces[f].iter().map(|&v| vertices[v])),
        );
        let index = self.nodes.len();
        self.nodes.push(Node {
            min,
            max,
            left: 0,
            right: 0,
            start,
            count: end - start,
        });
        if end - start <= LEAF_SIZE {
            return index;
        }

        let (cmin, cmax) = bounds(self.order[start..end].iter().map(|&f| centroids[f]));
        let extent = cmax - cmin;
        let axis = extent.imax();
        let mid = start + (end - start) / 2;
        self.order[start..end].sort_by(|&a, &b| {
            centroids[a][axis]
                .partial_cmp(&centroids[b][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let left = self.build_node(vertices, faces, centroids, start, mid);
        let right = self.build_node(vertices, faces, centroids, mid, end);
        let node = &mut self.nodes[index];
        node.left = left;
        node.right = right;
        node.count = 0;
        index
    }

    /// Finds the face minimizing `face_dist2(face)`, visiting only faces whose
    /// bounding box could hold a closer point. Ties go to the lowest face index.
    pub(crate) fn nearest<F>(&self, query: &Vector3<S>, mut face_dist2: F) -> Option<(usize, S)>
    where
        F: FnMut(usize) -> S,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, S)> = None;
        let mut stack = vec![(0usize, box_dist2(query, &self.nodes[0]))];
        while let Some((ni, lower)) = stack.pop() {
            if let Some((_, bd)) = best {
                // Boxes are exact vertex bounds; the slack absorbs rounding in the
                // per-face distance so equal-distance faces still get visited.
                if lower > bd + bd * S::lit(1e-12) + S::lit(1e-300) {
                    continue;
                }
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                for &f in &self.order[node.start..node.start + node.count] {
                    let d = face_dist2(f);
                    best = match best {
                        Some((bf, bd)) if bd < d || (bd == d && bf < f) => Some((bf, bd)),
                        _ => Some((f, d)),
                    };
                }
            } else {
                let dl = box_dist2(query, &self.nodes[node.left]);
                let dr = box_dist2(query, &self.nodes[node.right]);
                if dl <= dr {
                    stack.push((node.right, dr));
                    stack.push((node.left, dl));
                } else {
                    stack.push((node.left, dl));
                    stack.push((node.right, dr));
                }
            }
        }
        best
    }
}

fn bounds<S: Real>(points: impl Iterator<Item = Vector3<S>>) -> (Vector3<S>, Vector3<S>) {
    let mut min = Vector3::repeat(S::max_value().unwrap());
    let mut max = Vector3::repeat(S::min_value().unwrap());
    for p in points {
        min = min.inf(&p);
        max = max.sup(&p);
    }
    (min, max)
}

fn box_dist2<S: Real>(q: &Vector3<S>, node: &Node<S>) -> S {
    let mut d2 = S::zero();
    for k in 0..3 {
        let v = q[k];
        let gap = if v < node.min[k] {
            node.min[k] - v
        } else if v > node.max[k] {
            v - node.max[k]
        } else {
            S::zero()
        };
        d2 += gap * gap;
    }
    d2
}
