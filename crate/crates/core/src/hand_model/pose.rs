use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NUM_ARTICULATED, POSE_DIM};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Pose vector layout: `[translation mm (3) | global axis-angle (3) | 15 joint
/// axis-angles (45)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseFile", into = "PoseFile")]
pub struct HandPose {
    theta: [f64; POSE_DIM],
}

#[derive(Serialize, Deserialize)]
struct PoseFile {
    theta: Vec<f64>,
}

impl TryFrom<PoseFile> for HandPose {
    type Error = Error;
    fn try_from(f: PoseFile) -> Result<Self> {
        HandPose::from_slice(&f.theta)
    }
}

impl From<HandPose> for PoseFile {
    fn from(p: HandPose) -> Self {
        PoseFile {
            theta: p.theta.to_vec(),
        }
    }
}

pub const TRANSLATION: std::ops::Range<usize> = 0..3;
pub const GLOBAL_ROTATION: std::ops::Range<usize> = 3..6;
pub const JOINTS: std::ops::Range<usize> = 6..POSE_DIM;

/// First parameter index of articulated joint `j` (0-based, frame `j + 1`).
pub const fn joint_param(j: usize) -> usize {
    6 + 3 * j
}

impl Default for HandPose {
    fn default() -> Self {
        HandPose::zeros()
    }
}

impl HandPose {
    pub fn zeros() -> Self {
        HandPose {
            theta: [0.0; POSE_DIM],
        }
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        if theta.len() != POSE_DIM {
            return Err(Error::LengthMismatch {
                expected: POSE_DIM,
                actual: theta.len(),
            });
        }
        let mut p = HandPose::zeros();
        p.theta.copy_from_slice(theta);
        Ok(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    pub(crate) fn require_finite(&self) -> Result<()> {
        match self.theta.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::NonFinite(format!("pose parameter {i}"))),
        }
    }

    fn vec3(&self, start: usize) -> Vec3 {
        Vec3::new(self.theta[start], self.theta[start + 1], self.theta[start + 2])
    }

    fn set_vec3(&mut self, start: usize, v: &Vec3) {
        self.theta[start..start + 3].copy_from_slice(v.as_slice());
    }

    pub fn translation(&self) -> Vec3 {
        self.vec3(TRANSLATION.start)
    }

    pub fn set_translation(&mut self, t: &Vec3) {
        self.set_vec3(TRANSLATION.start, t);
    }

    pub fn global_rotation(&self) -> Vec3 {
        self.vec3(GLOBAL_ROTATION.start)
    }

    pub fn set_global_rotation(&mut self, r: &Vec3) {
        self.set_vec3(GLOBAL_ROTATION.start, r);
    }

    /// Axis-angle of articulated joint `j` in `0..15`.
    pub fn joint(&self, j: usize) -> Vec3 {
        assert!(j < NUM_ARTICULATED);
        self.vec3(joint_param(j))
    }

    pub fn set_joint(&mut self, j: usize, r: &Vec3) {
        assert!(j < NUM_ARTICULATED);
        self.set_vec3(joint_param(j), r);
    }

    /// Copy with every axis-angle wrapped to norm `<= π` (same rotation).
    pub fn canonicalized(&self) -> HandPose {
        let mut out = self.clone();
        for start in (GLOBAL_ROTATION.start..POSE_DIM).step_by(3) {
            let r = out.vec3(start);
            let angle = r.norm();
            if angle > PI {
                let wrapped = angle.rem_euclid(2.0 * PI);
                let wrapped = if wrapped > PI { wrapped - 2.0 * PI } else { wrapped };
                out.set_vec3(start, &(r * (wrapped / angle)));
            }
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pose serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
