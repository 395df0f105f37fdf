use super::bvh::TriangleBvh;
use super::{TriMesh, Vec3};
use crate::error::Result;

/// Signed distance queries against a fixed mesh. Negative inside, where
/// "inside" means generalized winding number above one half.
#[derive(Debug, Clone)]
pub struct MeshSdf {
    bvh: TriangleBvh,
}

impl MeshSdf {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        mesh.require_triangles()?;
        let bvh = TriangleBvh::new(mesh);
        debug_assert!(!bvh.is_empty());
        Ok(MeshSdf { bvh })
    }

    pub fn unsigned_distance(&self, p: &Vec3) -> f64 {
        self.bvh.closest_distance_squared(p).sqrt()
    }

    pub fn winding_number(&self, p: &Vec3) -> f64 {
        self.bvh.winding_number(p)
    }

    pub fn is_inside(&self, p: &Vec3) -> bool {
        self.winding_number(p) > 0.5
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let d = self.unsigned_distance(p);
        if d > 0.0 && self.is_inside(p) {
            -d
        } else {
            d
        }
    }
}

/// One-shot signed distance; build a [`MeshSdf`] for repeated queries.
pub fn signed_distance(mesh: &TriMesh, p: &Vec3) -> Result<f64> {
    Ok(MeshSdf::new(mesh)?.signed_distance(p))
}
