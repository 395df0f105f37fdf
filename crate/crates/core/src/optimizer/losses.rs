use std::f64::consts::FRAC_PI_2;

use crate::hand_model::pose::joint_param;
use crate::hand_model::{joint_rotations, HandDescription, HandPose, POSE_DIM};

/// Joint regularizer: squared twist about each bone axis plus squared excess
/// of each joint angle beyond π/2. Gradient is nonzero only on joint
/// parameters.
pub fn regularizer_lr(pose: &HandPose, desc: &HandDescription) -> (f64, [f64; POSE_DIM]) {
    let mut value = 0.0;
    let mut grad = [0.0; POSE_DIM];
    for (j, jr) in joint_rotations(pose, desc).iter().enumerate() {
        let twist = jr.twist();
        value += twist * twist;
        let mut g = jr.twist_axis * (2.0 * twist);
        let angle = jr.rotation.norm();
        let excess = angle - FRAC_PI_2;
        if excess > 0.0 {
            value += excess * excess;
            g += jr.rotation * (2.0 * excess / angle);
        }
        grad[joint_param(j)..joint_param(j) + 3].copy_from_slice(g.as_slice());
    }
    (value, grad)
}

/// Squared distance of the pose vector from the initial estimate.
pub fn deviation_lo(pose: &HandPose, initial: &HandPose) -> (f64, [f64; POSE_DIM]) {
    let mut value = 0.0;
    let mut grad = [0.0; POSE_DIM];
    for (i, (a, b)) in pose.as_slice().iter().zip(initial.as_slice()).enumerate() {
        let d = a - b;
        value += d * d;
        grad[i] = 2.0 * d;
    }
    (value, grad)
}
