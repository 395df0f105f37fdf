use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NUM_FRAMES, NUM_REGIONS, NUM_TIPS};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const DEFAULT_HAND_JSON: &str = include_str!("../../data/hand_default.json");

/// Which digit a region or bone belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Digit {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
    Palm,
}

impl Digit {
    pub const ALL: [Digit; 6] = [
        Digit::Thumb,
        Digit::Index,
        Digit::Middle,
        Digit::Ring,
        Digit::Pinky,
        Digit::Palm,
    ];

    /// Number of contact regions on this digit.
    pub fn region_count(self) -> usize {
        match self {
            Digit::Thumb => 2,
            Digit::Palm => 8,
            _ => 3,
        }
    }
}

/// One articulated frame. `offset_mm` is the joint origin in the parent
/// frame; `radius_mm` is the radius of the capsule joining the parent joint
/// to this one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bone {
    #[serde(default)]
    pub name: String,
    pub parent: Option<usize>,
    pub offset_mm: [f64; 3],
    pub radius_mm: f64,
    pub twist_axis: [f64; 3],
    /// Flexion axis in the local frame; used only by grasp synthesis.
    #[serde(default)]
    pub flex_axis: Option<[f64; 3]>,
    #[serde(default = "palm")]
    pub digit: Digit,
}

fn palm() -> Digit {
    Digit::Palm
}

/// Non-articulated end effector (fingertip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tip {
    #[serde(default)]
    pub name: String,
    pub parent: usize,
    pub offset_mm: [f64; 3],
    pub radius_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAnchor {
    pub bone: usize,
    pub offset_mm: [f64; 3],
    pub digit_label: Digit,
}

/// A capsule rigidly attached to `frame`, from the frame origin to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub frame: usize,
    pub end: Vec3,
    pub radius: f64,
}

/// Fixed-geometry skeletal hand: 16 frames (wrist plus three per digit),
/// five tips, 22 contact regions.
///
/// Frames must be listed parent-first. Joint positions are reported in frame
/// order followed by the tips, giving 21 joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandDescription {
    pub id: String,
    /// Largest object bounding radius the grasp generator accepts.
    pub reach_mm: f64,
    pub bones: Vec<Bone>,
    pub tips: Vec<Tip>,
    pub regions: Vec<RegionAnchor>,
}

impl Default for HandDescription {
    fn default() -> Self {
        HandDescription::from_json_str(DEFAULT_HAND_JSON).expect("bundled hand description is valid")
    }
}

impl HandDescription {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut desc: HandDescription = serde_json::from_str(text)?;
        desc.validate()?;
        Ok(desc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("description serializes")
    }

    /// Checks structural invariants and normalizes axes in place.
    pub fn validate(&mut self) -> Result<()> {
        if self.bones.len() != NUM_FRAMES {
            return Err(Error::invalid(format!(
                "hand needs {NUM_FRAMES} bones, got {}",
                self.bones.len()
            )));
        }
        if self.tips.len() != NUM_TIPS {
            return Err(Error::invalid(format!("hand needs {NUM_TIPS} tips, got {}", self.tips.len())));
        }
        if self.regions.len() != NUM_REGIONS {
            return Err(Error::invalid(format!(
                "hand needs {NUM_REGIONS} regions, got {}",
                self.regions.len()
            )));
        }
        if self.bones[0].parent.is_some() {
            return Err(Error::invalid("bone 0 must be the root (wrist)"));
        }
        for (i, b) in self.bones.iter_mut().enumerate() {
            if i > 0 {
                match b.parent {
                    Some(p) if p < i => {}
                    _ => {
                        return Err(Error::invalid(format!(
                            "bone {i}: parent must precede it (acyclic, rooted at wrist)"
                        )))
                    }
                }
            }
            if !(b.radius_mm >= 0.0 && b.radius_mm.is_finite()) {
                return Err(Error::invalid(format!("bone {i}: bad radius")));
            }
            b.twist_axis = unit(b.twist_axis, &format!("bone {i} twist_axis"))?;
            if let Some(f) = b.flex_axis {
                b.flex_axis = Some(unit(f, &format!("bone {i} flex_axis"))?);
            }
        }
        for (i, t) in self.tips.iter().enumerate() {
            if t.parent >= NUM_FRAMES {
                return Err(Error::invalid(format!("tip {i}: parent out of range")));
            }
        }
        for d in Digit::ALL {
            let count = self.regions.iter().filter(|r| r.digit_label == d).count();
            if count != d.region_count() {
                return Err(Error::invalid(format!(
                    "digit {d:?} needs {} regions, got {count}",
                    d.region_count()
                )));
            }
        }
        if let Some(i) = self.regions.iter().position(|r| r.bone >= NUM_FRAMES) {
            return Err(Error::invalid(format!("region {i}: bone out of range")));
        }
        if !(self.reach_mm > 0.0) {
            return Err(Error::invalid("reach_mm must be positive"));
        }
        Ok(())
    }

    pub fn parent(&self, bone: usize) -> Option<usize> {
        self.bones[bone].parent
    }

    pub fn offset(&self, bone: usize) -> Vec3 {
        Vec3::from(self.bones[bone].offset_mm)
    }

    pub fn twist_axis(&self, bone: usize) -> Vec3 {
        Vec3::from(self.bones[bone].twist_axis)
    }

    /// Flexion axis, falling back to twist × palm normal.
    pub fn flex_axis(&self, bone: usize) -> Vec3 {
        match self.bones[bone].flex_axis {
            Some(f) => Vec3::from(f),
            None => self.twist_axis(bone).cross(&-Vec3::z()).normalize(),
        }
    }

    pub fn region_anchor(&self, region: usize) -> (usize, Vec3) {
        let r = &self.regions[region];
        (r.bone, Vec3::from(r.offset_mm))
    }

    /// True when `bone` equals `ancestor` or lies below it.
    pub fn descends_from(&self, mut bone: usize, ancestor: usize) -> bool {
        loop {
            if bone == ancestor {
                return true;
            }
            match self.bones[bone].parent {
                Some(p) => bone = p,
                None => return false,
            }
        }
    }

    /// Capsules: one per non-root bone (attached to its parent) followed by
    /// one per tip.
    pub fn segments(&self) -> Vec<Segment> {
        let bones = self.bones.iter().skip(1).map(|b| Segment {
            frame: b.parent.expect("validated"),
            end: Vec3::from(b.offset_mm),
            radius: b.radius_mm,
        });
        let tips = self.tips.iter().map(|t| Segment {
            frame: t.parent,
            end: Vec3::from(t.offset_mm),
            radius: t.radius_mm,
        });
        bones.chain(tips).collect()
    }

    /// Frames of each digit in proximal-to-distal order.
    pub fn digit_chain(&self, digit: Digit) -> Vec<usize> {
        (1..NUM_FRAMES).filter(|&b| self.bones[b].digit == digit).collect()
    }

    /// Regions attached to `bone`.
    pub fn regions_on(&self, bone: usize) -> Vec<usize> {
        (0..NUM_REGIONS).filter(|&r| self.regions[r].bone == bone).collect()
    }
}

fn unit(v: [f64; 3], what: &str) -> Result<[f64; 3]> {
    let v = Vec3::from(v);
    let n = v.norm();
    if !n.is_finite() || (n - 1.0).abs() > 1e-3 {
        return Err(Error::invalid(format!("{what} must be unit length (norm {n})")));
    }
    // leave already-normalized axes bit-identical so JSON round trips are exact
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok([v.x, v.y, v.z]);
    }
    let u = v / n;
    Ok([u.x, u.y, u.z])
}
