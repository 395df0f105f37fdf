use std::f64::consts::FRAC_PI_2;

use nalgebra::{Unit, UnitQuaternion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SceneSpec;
use crate::error::{Error, Result};
use crate::geometry::{MeshSdf, TriMesh, Vec3};
use crate::hand_model::{
    forward_kinematics, surface_anchors, HandDescription, HandPose, SurfaceAnchor, NUM_FRAMES,
    NUM_REGIONS,
};
use crate::optimizer::DEFAULT_SURFACE_DENSITY;
use crate::tactile::{SensorLayout, TactileFrame};

/// Minimum number of regions whose keypoint must sit within
/// [`CONTACT_BAND_MM`] of the surface.
pub const MIN_CONTACT_REGIONS: usize = 6;
pub const CONTACT_BAND_MM: f64 = 2.0;
/// Surface clearance at which palm placement and each flexion stop.
pub const GRASP_CLEARANCE_MM: f64 = 0.5;
pub const TACTILE_FULL_SCALE: f64 = 1.0;
pub const TACTILE_RANGE_MM: f64 = 3.0;

const FLEX_SCAN_STEPS: usize = 24;
const BISECTION_STEPS: usize = 30;

/// Digit chains flexed in this order, proximal to distal.
const CHAINS: [[usize; 3]; 5] = [[4, 5, 6], [7, 8, 9], [10, 11, 12], [13, 14, 15], [1, 2, 3]];

/// Hand-local point placed on the approach line through the object center,
/// just below the middle metacarpal head.
const PALM_TARGET: [f64; 2] = [3.0, 62.0];

struct Clearance<'a> {
    desc: &'a HandDescription,
    sdf: MeshSdf,
    anchors: Vec<SurfaceAnchor>,
}

impl Clearance<'_> {
    /// Minimum signed distance over anchors whose frame passes `keep`.
    fn min_over(&self, pose: &HandPose, keep: impl Fn(usize) -> bool) -> Result<f64> {
        let state = forward_kinematics(self.desc, pose)?;
        let mut best = f64::INFINITY;
        for a in self.anchors.iter().filter(|a| keep(a.frame)) {
            best = best.min(self.sdf.signed_distance(&state.point(a.frame, &a.local)));
        }
        Ok(best)
    }
}

/// Rotation taking hand-local −z (palm normal) onto `approach`, then rolled
/// about it.
fn palm_rotation(approach: &Vec3, roll: f64) -> UnitQuaternion<f64> {
    let a = approach.normalize();
    let base = UnitQuaternion::rotation_between(&-Vec3::z(), &a)
        .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI));
    UnitQuaternion::from_axis_angle(&Unit::new_normalize(a), roll) * base
}

/// Procedural wrap grasp: the palm advances along the approach direction
/// until it clears the surface by [`GRASP_CLEARANCE_MM`], then every joint
/// flexes in turn (scan, then bisection on the first blocked interval) until
/// the bones it carries reach the same clearance or the joint hits π/2.
pub fn synthesize_grasp(object: &TriMesh, desc: &HandDescription, spec: &SceneSpec) -> Result<HandPose> {
    let bounds = object.bounds();
    let center = bounds.center();
    let extent = object.vertices().iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
    if extent > desc.reach_mm {
        return Err(Error::GraspSynthesisFailed(format!(
            "object extends {extent:.1} mm from its center, beyond the {:.1} mm reach bound",
            desc.reach_mm
        )));
    }
    let (approach, roll) = spec.approach_and_roll();
    let rot = palm_rotation(&approach, roll);
    let probe = Clearance {
        desc,
        sdf: MeshSdf::new(object)?,
        anchors: surface_anchors(desc, DEFAULT_SURFACE_DENSITY)?,
    };

    let mut pose = HandPose::zeros();
    pose.set_global_rotation(&rot.scaled_axis());
    let place = |pose: &mut HandPose, standoff: f64| {
        let local = Vec3::new(PALM_TARGET[0], PALM_TARGET[1], -standoff);
        pose.set_translation(&(center - rot * local));
    };

    // palm standoff: far enough is clear, zero is deep inside
    let (mut lo, mut hi) = (0.0, extent + 40.0);
    place(&mut pose, hi);
    if probe.min_over(&pose, |_| true)? < GRASP_CLEARANCE_MM {
        return Err(Error::GraspSynthesisFailed("hand cannot clear the object along the approach".into()));
    }
    for _ in 0..BISECTION_STEPS + 10 {
        let mid = 0.5 * (lo + hi);
        place(&mut pose, mid);
        if probe.min_over(&pose, |_| true)? >= GRASP_CLEARANCE_MM {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    place(&mut pose, hi);

    for chain in CHAINS {
        for &bone in &chain {
            let axis = desc.flex_axis(bone);
            let carried = |f: usize| f != 0 && desc.descends_from(f, bone);
            let clear_at = |pose: &mut HandPose, phi: f64| -> Result<f64> {
                pose.set_joint(bone - 1, &(axis * phi));
                probe.min_over(pose, carried)
            };
            if clear_at(&mut pose, 0.0)? < GRASP_CLEARANCE_MM {
                continue;
            }
            let step = FRAC_PI_2 / FLEX_SCAN_STEPS as f64;
            let mut angle = FRAC_PI_2;
            for k in 1..=FLEX_SCAN_STEPS {
                let phi = k as f64 * step;
                if clear_at(&mut pose, phi)? < GRASP_CLEARANCE_MM {
                    let (mut good, mut bad) = (phi - step, phi);
                    for _ in 0..BISECTION_STEPS {
                        let mid = 0.5 * (good + bad);
                        if clear_at(&mut pose, mid)? >= GRASP_CLEARANCE_MM {
                            good = mid;
                        } else {
                            bad = mid;
                        }
                    }
                    angle = good;
                    break;
                }
            }
            pose.set_joint(bone - 1, &(axis * angle));
        }
    }

    let contacts = contact_regions(&pose, desc, &probe.sdf)?;
    if contacts.len() < MIN_CONTACT_REGIONS {
        return Err(Error::GraspSynthesisFailed(format!(
            "only {} regions within {CONTACT_BAND_MM} mm of the surface, need {MIN_CONTACT_REGIONS}",
            contacts.len()
        )));
    }
    Ok(pose)
}

/// Regions whose keypoint has |signed distance| ≤ [`CONTACT_BAND_MM`].
pub fn contact_regions(pose: &HandPose, desc: &HandDescription, sdf: &MeshSdf) -> Result<Vec<usize>> {
    let state = forward_kinematics(desc, pose)?;
    Ok((0..NUM_REGIONS)
        .filter(|&r| sdf.signed_distance(&state.keypoints[r]).abs() <= CONTACT_BAND_MM)
        .collect())
}

/// Linear proximity model: full scale at the surface (or inside), falling to
/// zero at [`TACTILE_RANGE_MM`].
pub fn synthesize_tactile(
    gt: &HandPose,
    object: &TriMesh,
    desc: &HandDescription,
    layout: &SensorLayout,
) -> Result<TactileFrame> {
    let sdf = MeshSdf::new(object)?;
    let state = forward_kinematics(desc, gt)?;
    let readings = layout
        .world_positions(&state)
        .iter()
        .map(|p| {
            let d = sdf.signed_distance(p).max(0.0);
            TACTILE_FULL_SCALE * (1.0 - d / TACTILE_RANGE_MM).clamp(0.0, 1.0)
        })
        .collect();
    TactileFrame::new(readings)
}

/// Gaussian noise levels per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    pub translation_mm: f64,
    pub rotation_rad: f64,
    pub joint_rad: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            translation_mm: 2.0,
            rotation_rad: 0.12,
            joint_rad: 0.1,
        }
    }
}

impl NoiseSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        if [self.translation_mm, self.rotation_rad, self.joint_rad]
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::invalid("noise levels must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Adds independent Gaussian noise to translation, global rotation and
/// every joint parameter, drawn in that order from a ChaCha8 stream.
pub fn perturb(gt: &HandPose, noise: &NoiseSpec, seed: u64) -> Result<HandPose> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = gt.clone();
    let groups = [
        (0..3, noise.translation_mm),
        (3..6, noise.rotation_rad),
        (6..6 + 3 * (NUM_FRAMES - 1), noise.joint_rad),
    ];
    for (range, sigma) in groups {
        let dist = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        for i in range {
            out.as_mut_slice()[i] += dist.sample(&mut rng);
        }
    }
    Ok(out)
}
