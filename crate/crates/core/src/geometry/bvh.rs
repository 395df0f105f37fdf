//! Triangle bounding-volume hierarchy with closest-point and hierarchical
//! generalized-winding-number queries.

use std::f64::consts::PI;

use super::mesh::{Aabb, TriMesh};
use super::Vec3;

const LEAF_TRIANGLES: usize = 6;

/// Nodes whose bounding sphere radius times this factor is smaller than the
/// query distance are approximated by their dipole term.
const FAR_FIELD_RATIO: f64 = 2.5;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Area-weighted centroid of the triangles below this node.
    centroid: Vec3,
    /// Radius of a sphere around `centroid` enclosing every triangle vertex.
    radius: f64,
    /// Sum of area-weighted outward normals.
    area_normal: Vec3,
    kind: NodeKind,
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { start: u32, end: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub(crate) struct TriangleBvh {
    tris: Vec<[Vec3; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub(crate) fn new(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangles().len()).map(|t| mesh.triangle(t)).collect();
        let mut bvh = TriangleBvh {
            order: (0..tris.len() as u32).collect(),
            tris,
            nodes: Vec::new(),
        };
        if !bvh.tris.is_empty() {
            let centroids: Vec<Vec3> = bvh
                .tris
                .iter()
                .map(|[a, b, c]| (a + b + c) / 3.0)
                .collect();
            bvh.build(0, bvh.tris.len(), &centroids);
        }
        bvh
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[Vec3]) -> u32 {
        let mut bounds = Aabb::empty();
        let mut area_normal = Vec3::zeros();
        let mut weighted = Vec3::zeros();
        let mut area_sum = 0.0;
        let mut cbounds = Aabb::empty();
        for &t in &self.order[start..end] {
            let [a, b, c] = &self.tris[t as usize];
            bounds.grow(a);
            bounds.grow(b);
            bounds.grow(c);
            let n = 0.5 * (b - a).cross(&(c - a));
            let area = n.norm();
            area_normal += n;
            weighted += area * centroids[t as usize];
            area_sum += area;
            cbounds.grow(&centroids[t as usize]);
        }
        let centroid = if area_sum > 0.0 {
            weighted / area_sum
        } else {
            bounds.center()
        };
        let mut radius: f64 = 0.0;
        for &t in &self.order[start..end] {
            for v in &self.tris[t as usize] {
                radius = radius.max((v - centroid).norm());
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            bounds,
            centroid,
            radius,
            area_normal,
            kind: NodeKind::Leaf {
                start: start as u32,
                end: end as u32,
            },
        });
        if end - start > LEAF_TRIANGLES {
            let axis = cbounds.extent().imax();
            let mid = (start + end) / 2;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
            });
            let left = self.build(start, mid, centroids);
            let right = self.build(mid, end, centroids);
            self.nodes[id as usize].kind = NodeKind::Inner { left, right };
        }
        id
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Squared distance to the closest point on any triangle.
    pub(crate) fn closest_distance_squared(&self, q: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.bounds.distance_squared(q) >= best {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &t in &self.order[start as usize..end as usize] {
                        let [a, b, c] = &self.tris[t as usize];
                        best = best.min((closest_point_on_triangle(q, a, b, c) - q).norm_squared());
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left as usize].bounds.distance_squared(q);
                    let dr = self.nodes[right as usize].bounds.distance_squared(q);
                    // push the farther child first so the nearer is explored first
                    if dl < dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// Generalized winding number; exact near the query, dipole far field.
    pub(crate) fn winding_number(&self, q: &Vec3) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            let d = node.centroid - q;
            let dist = d.norm();
            if dist > FAR_FIELD_RATIO * node.radius {
                total += node.area_normal.dot(&d) / (dist * dist * dist);
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &t in &self.order[start as usize..end as usize] {
                        let [a, b, c] = &self.tris[t as usize];
                        total += solid_angle(q, a, b, c);
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        total / (4.0 * PI)
    }
}

/// Signed solid angle subtended by triangle `abc` at `q`
/// (Van Oosterom & Strackee).
pub(crate) fn solid_angle(q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let a = a - q;
    let b = b - q;
    let c = c - q;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let det = a.dot(&b.cross(&c));
    let denom = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
    2.0 * det.atan2(denom)
}

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub(crate) fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + v * ab;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + w * ac;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
