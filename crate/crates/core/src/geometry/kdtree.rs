use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

/// Static kd-tree over a point set.
///
/// The tree is implicit: `order` is permuted so that for every subrange
/// `[lo, hi)` larger than a leaf, the median slot `mid` holds the splitting
/// point and `axes[mid]` its split axis. Points left of `mid` have a
/// coordinate `<=` the split value, points right of it `>=`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    order: Vec<u32>,
    axes: Vec<u8>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.points().to_vec())
    }

    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let n = points.len();
        let mut index = SpatialIndex {
            points,
            order: (0..n as u32).collect(),
            axes: vec![0; n],
        };
        index.build_range(0, n);
        Ok(index)
    }

    fn build_range(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[lo..hi] {
            let p = &self.points[i as usize];
            min = min.inf(p);
            max = max.sup(p);
        }
        let axis = (max - min).imax();
        let mid = (lo + hi) / 2;
        let points = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a as usize][axis].total_cmp(&points[b as usize][axis])
        });
        self.axes[mid] = axis as u8;
        self.build_range(lo, mid);
        self.build_range(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Vec3 {
        &self.points[i]
    }

    /// Indices of all points with `‖p − center‖ <= radius`, ascending.
    pub fn ball_query(&self, center: &Vec3, radius: f64) -> Result<Vec<usize>> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        let mut out = Vec::new();
        self.ball_into(center, radius, &mut out);
        Ok(out)
    }

    /// Unchecked variant used on hot paths; `out` is cleared first.
    pub(crate) fn ball_into(&self, center: &Vec3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        self.ball_rec(0, self.points.len(), center, radius * radius, out);
        out.sort_unstable();
    }

    fn ball_rec(&self, lo: usize, hi: usize, q: &Vec3, r2: f64, out: &mut Vec<usize>) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                if (self.points[i as usize] - q).norm_squared() <= r2 {
                    out.push(i as usize);
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let pi = self.order[mid] as usize;
        let p = &self.points[pi];
        if (p - q).norm_squared() <= r2 {
            out.push(pi);
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.ball_rec(near.0, near.1, q, r2, out);
        if diff * diff <= r2 {
            self.ball_rec(far.0, far.1, q, r2, out);
        }
    }

    /// Nearest point as `(index, distance)`. Ties resolve to the smallest index.
    pub fn nearest(&self, q: &Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, self.points.len(), q, &mut best);
        (best.0, best.1.sqrt())
    }

    fn consider(&self, i: usize, q: &Vec3, best: &mut (usize, f64)) {
        let d2 = (self.points[i] - q).norm_squared();
        if d2 < best.1 || (d2 == best.1 && i < best.0) {
            *best = (i, d2);
        }
    }

    fn nearest_rec(&self, lo: usize, hi: usize, q: &Vec3, best: &mut (usize, f64)) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                self.consider(i as usize, q, best);
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let pi = self.order[mid] as usize;
        self.consider(pi, q, best);
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - self.points[pi][axis];
        let (near, far) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(near.0, near.1, q, best);
        // `<=` keeps exact ties reachable for the smallest-index rule
        if diff * diff <= best.1 {
            self.nearest_rec(far.0, far.1, q, best);
        }
    }

    /// Distance from `q` to the nearest indexed point.
    pub fn nearest_distance(&self, q: &Vec3) -> f64 {
        self.nearest(q).1
    }
}
