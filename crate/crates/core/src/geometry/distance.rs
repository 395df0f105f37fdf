use super::mesh::Aabb;
use super::{MeshSdf, PointCloud, SpatialIndex, TriMesh, Vec3};
use crate::error::{Error, Result};

/// Symmetric mean nearest-neighbor distance (linear, not squared):
/// `0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|)`.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let ia = SpatialIndex::build(a)?;
    let ib = SpatialIndex::build(b)?;
    let one_way = |from: &PointCloud, to: &SpatialIndex| {
        from.points().iter().map(|p| to.nearest_distance(p)).sum::<f64>() / from.len() as f64
    };
    Ok(0.5 * (one_way(a, &ib) + one_way(b, &ia)))
}

/// Occupancy of a `D³` grid of voxel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    resolution: usize,
    bounds: Aabb,
    bits: Vec<u64>,
}

impl VoxelGrid {
    pub fn new(resolution: usize, bounds: Aabb) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid(format!("voxel resolution must be >= 2, got {resolution}")));
        }
        if !(0..3).all(|k| bounds.min[k] < bounds.max[k]) {
            return Err(Error::invalid("voxel bounds must satisfy min < max on every axis"));
        }
        let cells = resolution * resolution * resolution;
        Ok(VoxelGrid {
            resolution,
            bounds,
            bits: vec![0; cells.div_ceil(64)],
        })
    }

    /// Rasterizes the interior of `mesh` (winding number > 0.5 at centers).
    pub fn occupancy(mesh: &TriMesh, resolution: usize, bounds: Aabb) -> Result<Self> {
        let sdf = MeshSdf::new(mesh)?;
        let mut grid = VoxelGrid::new(resolution, bounds)?;
        let mb = mesh.bounds();
        for cell in 0..grid.cell_count() {
            let c = grid.center(cell);
            // winding number of a closed mesh is 0 outside its bounding box
            if mb.distance_squared(&c) > 0.0 {
                continue;
            }
            if sdf.is_inside(&c) {
                grid.set(cell);
            }
        }
        Ok(grid)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn center(&self, cell: usize) -> Vec3 {
        let d = self.resolution;
        let (i, j, k) = (cell % d, (cell / d) % d, cell / (d * d));
        let step = self.bounds.extent() / d as f64;
        Vec3::new(
            self.bounds.min.x + (i as f64 + 0.5) * step.x,
            self.bounds.min.y + (j as f64 + 0.5) * step.y,
            self.bounds.min.z + (k as f64 + 0.5) * step.z,
        )
    }

    pub fn set(&mut self, cell: usize) {
        self.bits[cell / 64] |= 1 << (cell % 64);
    }

    pub fn get(&self, cell: usize) -> bool {
        self.bits[cell / 64] >> (cell % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn combine(&self, other: &VoxelGrid, op: impl Fn(u64, u64) -> u64) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| op(*a, *b).count_ones() as usize)
            .sum()
    }
}

/// Shared bounds for comparing two meshes: union of their boxes, padded by
/// 5% of the extent on every side.
pub fn iou_bounds(a: &TriMesh, b: &TriMesh) -> Aabb {
    let u = a.bounds().union(&b.bounds());
    let pad = 0.05 * u.extent();
    Aabb {
        min: u.min - pad,
        max: u.max + pad,
    }
}

/// Volumetric IoU of two watertight meshes on a `D³` grid.
pub fn voxel_iou(a: &TriMesh, b: &TriMesh, resolution: usize) -> Result<f64> {
    a.require_triangles()?;
    b.require_triangles()?;
    let bounds = iou_bounds(a, b);
    let ga = VoxelGrid::occupancy(a, resolution, bounds)?;
    let gb = VoxelGrid::occupancy(b, resolution, bounds)?;
    let union = ga.combine(&gb, |x, y| x | y);
    if union == 0 {
        return Ok(0.0);
    }
    Ok(ga.combine(&gb, |x, y| x & y) as f64 / union as f64)
}
