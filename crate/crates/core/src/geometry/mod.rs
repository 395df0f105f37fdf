//! Meshes, point clouds, proximity queries, signed distance and the
//! distance-based metrics shared by the rest of the crate. All lengths are
//! millimeters.

mod bvh;
mod distance;
mod kdtree;
mod mesh;
mod sdf;

pub use distance::{chamfer_distance, iou_bounds, voxel_iou, VoxelGrid};
pub use kdtree::SpatialIndex;
pub use mesh::{Aabb, PointCloud, TriMesh};
pub use sdf::{signed_distance, MeshSdf};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
