//! Fixed-geometry capsule hand: pose parameters to joints, region keypoints
//! and surface samples, with analytic derivatives.
//!
//! Frame order of the bundled description: wrist, thumb (CMC, MCP, IP),
//! then index, middle, ring and pinky (MCP, PIP, DIP). Joints 16..21 are the
//! fingertips in the same digit order.

mod description;
mod kinematics;
pub mod pose;
mod surface;

pub use description::{Bone, Digit, HandDescription, RegionAnchor, Segment, Tip};
pub use kinematics::{
    evaluate_with_derivatives, forward_kinematics, rotation_matrix, rotation_with_jacobian, Frame,
    FrameAccumulator, FrameDerivative, HandState, KinematicDerivatives,
};
pub use pose::HandPose;
pub use surface::{place_anchors, surface_anchors, surface_samples, SurfaceAnchor, MIN_DENSITY};

use crate::geometry::Vec3;

pub const NUM_FRAMES: usize = 16;
pub const NUM_ARTICULATED: usize = 15;
pub const NUM_TIPS: usize = 5;
pub const NUM_JOINTS: usize = 21;
pub const NUM_REGIONS: usize = 22;
pub const POSE_DIM: usize = 51;

/// A joint's axis-angle vector paired with its twist axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointRotation {
    pub rotation: Vec3,
    pub twist_axis: Vec3,
}

impl JointRotation {
    /// Rotation component about the twist axis.
    pub fn twist(&self) -> f64 {
        self.rotation.dot(&self.twist_axis)
    }
}

/// The 15 articulated joint rotations with their twist axes.
pub fn joint_rotations(pose: &HandPose, desc: &HandDescription) -> Vec<JointRotation> {
    (0..NUM_ARTICULATED)
        .map(|j| JointRotation {
            rotation: pose.joint(j),
            twist_axis: desc.twist_axis(j + 1),
        })
        .collect()
}
