use super::pose::{GLOBAL_ROTATION, TRANSLATION};
use super::{HandDescription, HandPose, NUM_FRAMES, NUM_REGIONS, POSE_DIM};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// Rigid transform of one bone frame in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Frame {
    pub fn apply(&self, local: &Vec3) -> Vec3 {
        self.rotation * local + self.translation
    }
}

/// Posed hand: 16 frames, 21 joints (frames then tips), 22 region keypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct HandState {
    pub frames: Vec<Frame>,
    pub joints: Vec<Vec3>,
    pub keypoints: Vec<Vec3>,
}

impl HandState {
    pub fn point(&self, frame: usize, local: &Vec3) -> Vec3 {
        self.frames[frame].apply(local)
    }
}

fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues coefficients `A = sin θ / θ`, `B = (1 − cos θ) / θ²` and their
/// derivatives with respect to `s = θ²`.
fn rodrigues_coefficients(s: f64) -> (f64, f64, f64, f64) {
    if s < 1e-2 {
        let a = 1.0 - s / 6.0 + s * s / 120.0 - s * s * s / 5040.0;
        let da = -1.0 / 6.0 + s / 60.0 - s * s / 1680.0 + s * s * s / 90720.0;
        let b = 0.5 - s / 24.0 + s * s / 720.0 - s * s * s / 40320.0;
        let db = -1.0 / 24.0 + s / 360.0 - s * s / 13440.0 + s * s * s / 907200.0;
        (a, da, b, db)
    } else {
        let t = s.sqrt();
        let (sin, cos) = t.sin_cos();
        let a = sin / t;
        let b = (1.0 - cos) / s;
        let da = (t * cos - sin) / (2.0 * s * t);
        let db = (t * sin - 2.0 * (1.0 - cos)) / (2.0 * s * s);
        (a, da, b, db)
    }
}

/// Rotation matrix of an axis-angle vector.
pub fn rotation_matrix(r: &Vec3) -> Mat3 {
    let (a, _, b, _) = rodrigues_coefficients(r.norm_squared());
    let k = skew(r);
    Mat3::identity() + a * k + b * k * k
}

/// Rotation matrix and its partial derivatives with respect to each
/// axis-angle component.
pub fn rotation_with_jacobian(r: &Vec3) -> (Mat3, [Mat3; 3]) {
    let (a, da, b, db) = rodrigues_coefficients(r.norm_squared());
    let k = skew(r);
    let k2 = k * k;
    let rot = Mat3::identity() + a * k + b * k2;
    let jac = [0, 1, 2].map(|i| {
        let e = skew(&Vec3::ith(i, 1.0));
        let ds = 2.0 * r[i];
        da * ds * k + a * e + db * ds * k2 + b * (e * k + k * e)
    });
    (rot, jac)
}

fn local_rotation(pose: &HandPose, frame: usize) -> Vec3 {
    if frame == 0 {
        pose.global_rotation()
    } else {
        pose.joint(frame - 1)
    }
}

pub fn forward_kinematics(desc: &HandDescription, pose: &HandPose) -> Result<HandState> {
    pose.require_finite()?;
    let mut frames: Vec<Frame> = Vec::with_capacity(NUM_FRAMES);
    for b in 0..NUM_FRAMES {
        let local = rotation_matrix(&local_rotation(pose, b));
        let frame = match desc.parent(b) {
            None => Frame {
                rotation: local,
                translation: pose.translation(),
            },
            Some(p) => {
                let parent = frames[p];
                Frame {
                    rotation: parent.rotation * local,
                    translation: parent.apply(&desc.offset(b)),
                }
            }
        };
        frames.push(frame);
    }
    Ok(assemble_state(desc, frames))
}

fn assemble_state(desc: &HandDescription, frames: Vec<Frame>) -> HandState {
    let mut joints: Vec<Vec3> = frames.iter().map(|f| f.translation).collect();
    joints.extend(
        desc.tips
            .iter()
            .map(|t| frames[t.parent].apply(&Vec3::from(t.offset_mm))),
    );
    let keypoints = (0..NUM_REGIONS)
        .map(|r| {
            let (bone, off) = desc.region_anchor(r);
            frames[bone].apply(&off)
        })
        .collect();
    HandState {
        frames,
        joints,
        keypoints,
    }
}

/// Derivative of a frame's rotation and translation with respect to one
/// pose parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDerivative {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl FrameDerivative {
    const ZERO: FrameDerivative = FrameDerivative {
        rotation: Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        translation: Vec3::new(0.0, 0.0, 0.0),
    };

    /// Derivative of a point rigidly attached at `local`.
    pub fn apply(&self, local: &Vec3) -> Vec3 {
        self.rotation * local + self.translation
    }
}

/// Frame derivatives for a set of pose parameters.
#[derive(Debug, Clone)]
pub struct KinematicDerivatives {
    params: Vec<usize>,
    /// `frames[slot][bone]` for `params[slot]`.
    frames: Vec<Vec<FrameDerivative>>,
    /// `keypoints[slot][region]`.
    pub keypoints: Vec<Vec<Vec3>>,
    /// `joints[slot][joint]`.
    pub joints: Vec<Vec<Vec3>>,
}

impl KinematicDerivatives {
    pub fn params(&self) -> &[usize] {
        &self.params
    }

    pub fn frame(&self, slot: usize, bone: usize) -> &FrameDerivative {
        &self.frames[slot][bone]
    }

    /// Derivative of an arbitrary attached point (surface anchor, sensor).
    pub fn point(&self, slot: usize, bone: usize, local: &Vec3) -> Vec3 {
        self.frames[slot][bone].apply(local)
    }

    /// Chain rule: given per-frame accumulators `Σ g aᵀ` and `Σ g` for
    /// world-space gradients `g` on points attached at local offsets `a`,
    /// returns the gradient with respect to each listed parameter.
    pub fn pull_back(&self, accumulators: &[FrameAccumulator]) -> Vec<f64> {
        self.frames
            .iter()
            .map(|per_bone| {
                per_bone
                    .iter()
                    .zip(accumulators)
                    .map(|(d, acc)| d.rotation.component_mul(&acc.outer).sum() + d.translation.dot(&acc.sum))
                    .sum()
            })
            .collect()
    }
}

/// Per-frame gradient accumulator for [`KinematicDerivatives::pull_back`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAccumulator {
    pub outer: Mat3,
    pub sum: Vec3,
}

impl Default for FrameAccumulator {
    fn default() -> Self {
        FrameAccumulator {
            outer: Mat3::zeros(),
            sum: Vec3::zeros(),
        }
    }
}

impl FrameAccumulator {
    pub fn add(&mut self, grad: &Vec3, local: &Vec3) {
        self.outer += grad * local.transpose();
        self.sum += grad;
    }
}

/// Forward kinematics plus derivatives of every frame, keypoint and joint
/// with respect to each parameter in `wrt`.
pub fn evaluate_with_derivatives(
    desc: &HandDescription,
    pose: &HandPose,
    wrt: &[usize],
) -> Result<(HandState, KinematicDerivatives)> {
    if let Some(&bad) = wrt.iter().find(|&&i| i >= POSE_DIM) {
        return Err(Error::invalid(format!("parameter index {bad} >= {POSE_DIM}")));
    }
    let state = forward_kinematics(desc, pose)?;
    let locals: Vec<(Mat3, [Mat3; 3])> = (0..NUM_FRAMES)
        .map(|b| rotation_with_jacobian(&local_rotation(pose, b)))
        .collect();

    let mut frames = Vec::with_capacity(wrt.len());
    for &param in wrt {
        // frame owning this parameter and the component within its axis-angle
        let (owner, component) = if TRANSLATION.contains(&param) {
            (0, None)
        } else if GLOBAL_ROTATION.contains(&param) {
            (0, Some(param - GLOBAL_ROTATION.start))
        } else {
            let j = (param - 6) / 3;
            (j + 1, Some((param - 6) % 3))
        };
        let mut d = vec![FrameDerivative::ZERO; NUM_FRAMES];
        for b in 0..NUM_FRAMES {
            let (local_rot, local_jac) = &locals[b];
            let own = if b == owner { component.map(|c| local_jac[c]) } else { None };
            d[b] = match desc.parent(b) {
                None => FrameDerivative {
                    rotation: own.unwrap_or_else(Mat3::zeros),
                    translation: if component.is_none() && owner == 0 {
                        Vec3::ith(param - TRANSLATION.start, 1.0)
                    } else {
                        Vec3::zeros()
                    },
                },
                Some(p) => {
                    if !desc.descends_from(b, owner) {
                        continue;
                    }
                    let dp = d[p];
                    let parent_rot = state.frames[p].rotation;
                    let mut rot = dp.rotation * local_rot;
                    if let Some(j) = own {
                        rot += parent_rot * j;
                    }
                    FrameDerivative {
                        rotation: rot,
                        translation: dp.rotation * desc.offset(b) + dp.translation,
                    }
                }
            };
        }
        frames.push(d);
    }

    let keypoints = frames
        .iter()
        .map(|d| {
            (0..NUM_REGIONS)
                .map(|r| {
                    let (bone, off) = desc.region_anchor(r);
                    d[bone].apply(&off)
                })
                .collect()
        })
        .collect();
    let joints = frames
        .iter()
        .map(|d| {
            let mut j: Vec<Vec3> = d.iter().map(|f| f.translation).collect();
            j.extend(desc.tips.iter().map(|t| d[t.parent].apply(&Vec3::from(t.offset_mm))));
            j
        })
        .collect();

    Ok((
        state,
        KinematicDerivatives {
            params: wrt.to_vec(),
            frames,
            keypoints,
            joints,
        },
    ))
}
