//! Evaluation suite: joint error, penetration depth, contact masks and their
//! IoU, and the contact-constraint loss over labelled SDF samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chamfer_distance, MeshSdf, PointCloud, SpatialIndex, TriMesh, Vec3};
use crate::hand_model::NUM_JOINTS;

pub const CONTACT_THRESHOLD_MM: f64 = 3.0;
pub const CONTACT_LABEL_DISTANCE_MM: f64 = 3.0;

/// Mean Euclidean distance over the 21 joints.
pub fn mpjpe(pred: &[Vec3], gt: &[Vec3]) -> Result<f64> {
    for len in [pred.len(), gt.len()] {
        if len != NUM_JOINTS {
            return Err(Error::LengthMismatch {
                expected: NUM_JOINTS,
                actual: len,
            });
        }
    }
    Ok(pred.iter().zip(gt).map(|(a, b)| (a - b).norm()).sum::<f64>() / NUM_JOINTS as f64)
}

/// Deepest hand sample inside the object; 0 when none is inside.
pub fn penetration_depth(hand_surface: &PointCloud, object: &TriMesh) -> Result<f64> {
    penetration_depth_with(hand_surface, &MeshSdf::new(object)?)
}

pub fn penetration_depth_with(hand_surface: &PointCloud, sdf: &MeshSdf) -> Result<f64> {
    if hand_surface.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(hand_surface
        .points()
        .iter()
        .map(|p| (-sdf.signed_distance(p)).max(0.0))
        .fold(0.0, f64::max))
}

/// Per-object-vertex contact flags against a hand sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMask {
    pub flags: Vec<bool>,
    pub threshold: f64,
}

impl ContactMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mask serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Flags object vertices strictly closer than `threshold` to some hand sample.
pub fn contact_mask(object: &TriMesh, hand_surface: &PointCloud, threshold: f64) -> Result<ContactMask> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("contact threshold must be > 0"));
    }
    let index = SpatialIndex::build(hand_surface)?;
    let flags = object
        .vertices()
        .iter()
        .map(|v| index.nearest_distance(v) < threshold)
        .collect();
    Ok(ContactMask { flags, threshold })
}

/// |a ∧ b| / |a ∨ b|, with two empty masks counting as full agreement.
pub fn contact_iou(a: &ContactMask, b: &ContactMask) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.flags.iter().zip(&b.flags) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Positions with signed distance values and binary contact labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfSampleSet {
    pub positions: Vec<Vec3>,
    pub values: Vec<f64>,
    pub contacts: Vec<bool>,
}

impl SdfSampleSet {
    pub fn new(positions: Vec<Vec3>, values: Vec<f64>, contacts: Vec<bool>) -> Result<Self> {
        for len in [values.len(), contacts.len()] {
            if len != positions.len() {
                return Err(Error::LengthMismatch {
                    expected: positions.len(),
                    actual: len,
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sdf sample values".into()));
        }
        Ok(SdfSampleSet {
            positions,
            values,
            contacts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintConvention {
    #[default]
    Absolute,
    Signed,
}

/// Sum of signed-distance values over samples labelled in contact.
pub fn contact_constraint_loss(samples: &SdfSampleSet, convention: ConstraintConvention) -> f64 {
    samples
        .values
        .iter()
        .zip(&samples.contacts)
        .filter(|(_, &c)| c)
        .map(|(&s, _)| match convention {
            ConstraintConvention::Absolute => s.abs(),
            ConstraintConvention::Signed => s,
        })
        .sum()
}

/// Labels a sample 1 when an active sensor lies strictly within `l_c`.
pub fn label_contacts(samples: &[Vec3], active_sensors: &PointCloud, l_c: f64) -> Result<Vec<bool>> {
    if !(l_c > 0.0) {
        return Err(Error::invalid("l_c must be > 0"));
    }
    if active_sensors.is_empty() {
        return Ok(vec![false; samples.len()]);
    }
    let index = SpatialIndex::build(active_sensors)?;
    Ok(samples.iter().map(|p| index.nearest_distance(p) < l_c).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mpjpe_mm: f64,
    pub pd_mm: f64,
    pub ciou: f64,
    pub cd_mm: Option<f64>,
    pub iou: Option<f64>,
}

/// One CSV row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scene_id: String,
    pub frame: String,
    pub mpjpe_mm: f64,
    pub pd_mm: f64,
    pub ciou: f64,
    pub cd_mm: Option<f64>,
    pub iou: Option<f64>,
}

impl MetricsRow {
    pub fn new(scene_id: impl Into<String>, frame: impl Into<String>, r: &MetricsReport) -> Self {
        MetricsRow {
            scene_id: scene_id.into(),
            frame: frame.into(),
            mpjpe_mm: r.mpjpe_mm,
            pd_mm: r.pd_mm,
            ciou: r.ciou,
            cd_mm: r.cd_mm,
            iou: r.iou,
        }
    }
}

/// Precomputed object-side state for evaluating many poses on one scene.
pub struct Evaluator<'a> {
    object: &'a TriMesh,
    sdf: MeshSdf,
    gt_joints: Vec<Vec3>,
    gt_surface: PointCloud,
    gt_mask: ContactMask,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        object: &'a TriMesh,
        gt_joints: Vec<Vec3>,
        gt_surface: PointCloud,
        gt_mask: Option<ContactMask>,
    ) -> Result<Self> {
        let gt_mask = match gt_mask {
            Some(m) if m.len() != object.vertices().len() => {
                return Err(Error::LengthMismatch {
                    expected: object.vertices().len(),
                    actual: m.len(),
                })
            }
            Some(m) => m,
            None => contact_mask(object, &gt_surface, CONTACT_THRESHOLD_MM)?,
        };
        Ok(Evaluator {
            object,
            sdf: MeshSdf::new(object)?,
            gt_joints,
            gt_surface,
            gt_mask,
        })
    }

    pub fn gt_mask(&self) -> &ContactMask {
        &self.gt_mask
    }

    /// `cd_mm` is the chamfer distance between predicted and ground-truth
    /// hand samples; `iou` is left empty because the object is given.
    pub fn evaluate(&self, joints: &[Vec3], surface: &PointCloud) -> Result<MetricsReport> {
        let mask = contact_mask(self.object, surface, self.gt_mask.threshold)?;
        Ok(MetricsReport {
            mpjpe_mm: mpjpe(joints, &self.gt_joints)?,
            pd_mm: penetration_depth_with(surface, &self.sdf)?,
            ciou: contact_iou(&mask, &self.gt_mask)?,
            cd_mm: Some(chamfer_distance(surface, &self.gt_surface)?),
            iou: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::{make_object, ObjectKind};
    use nalgebra::{Isometry3, Translation3, UnitQuaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn joints(f: impl Fn(usize) -> Vec3) -> Vec<Vec3> {
        (0..NUM_JOINTS).map(f).collect()
    }

    #[test]
    fn mpjpe_examples() {
        let gt = joints(|i| Vec3::new(i as f64, 2.0 * i as f64, -1.0));
        assert_eq!(mpjpe(&gt, &gt).unwrap(), 0.0);
        let mut one = gt.clone();
        one[7] += Vec3::new(3.0, 4.0, 0.0);
        assert!((mpjpe(&one, &gt).unwrap() - 5.0 / 21.0).abs() < 1e-12);
        let shifted: Vec<Vec3> = gt.iter().map(|p| p + Vec3::x()).collect();
        assert!((mpjpe(&shifted, &gt).unwrap() - 1.0).abs() < 1e-12);
        assert!(mpjpe(&gt[..20], &gt).is_err());
    }

    #[test]
    fn penetration_examples() {
        let sphere = make_object(&ObjectKind::Sphere { radius: 20.0 }, 4).unwrap();
        let outside = PointCloud::new(vec![Vec3::new(30.0, 0.0, 0.0), Vec3::new(0.0, -25.0, 0.0)]).unwrap();
        assert_eq!(penetration_depth(&outside, &sphere).unwrap(), 0.0);
        let center = PointCloud::new(vec![Vec3::zeros(), Vec3::new(30.0, 0.0, 0.0)]).unwrap();
        let pd = penetration_depth(&center, &sphere).unwrap();
        assert!((pd - 20.0).abs() < 0.2, "{pd}");

        let cube = make_object(&ObjectKind::Box { size: [20.0, 20.0, 20.0] }, 2).unwrap();
        let one = PointCloud::new(vec![Vec3::new(8.0, 0.0, 0.0), Vec3::new(15.0, 0.0, 0.0)]).unwrap();
        assert!((penetration_depth(&one, &cube).unwrap() - 2.0).abs() < 1e-9);
        assert!(penetration_depth(&PointCloud::new(vec![]).unwrap(), &cube).is_err());
    }

    #[test]
    fn mask_examples() {
        let cube = make_object(&ObjectKind::Box { size: [20.0, 20.0, 20.0] }, 1).unwrap();
        let corner = Vec3::new(10.0, 10.0, 10.0);
        let far = PointCloud::new(vec![Vec3::new(500.0, 0.0, 0.0)]).unwrap();
        assert_eq!(contact_mask(&cube, &far, 3.0).unwrap().count(), 0);

        let i = cube.vertices().iter().position(|v| *v == corner).unwrap();
        let close = PointCloud::new(vec![corner + Vec3::new(2.0, 0.0, 0.0)]).unwrap();
        assert!(contact_mask(&cube, &close, 3.0).unwrap().flags[i]);
        let exact = PointCloud::new(vec![corner + Vec3::new(0.0, 3.0, 0.0)]).unwrap();
        assert!(!contact_mask(&cube, &exact, 3.0).unwrap().flags[i]);
    }

    fn mask(bits: &[u8]) -> ContactMask {
        ContactMask {
            flags: bits.iter().map(|&b| b == 1).collect(),
            threshold: 3.0,
        }
    }

    #[test]
    fn iou_examples() {
        let a = mask(&[1, 1, 0, 0]);
        assert_eq!(contact_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(contact_iou(&a, &mask(&[0, 0, 1, 1])).unwrap(), 0.0);
        assert_eq!(contact_iou(&mask(&[1, 0, 0, 0]), &mask(&[1, 1, 0, 0])).unwrap(), 0.5);
        assert_eq!(contact_iou(&mask(&[0, 0]), &mask(&[0, 0])).unwrap(), 1.0);
        assert!(contact_iou(&a, &mask(&[1])).is_err());
    }

    #[test]
    fn constraint_loss_examples() {
        let p = vec![Vec3::zeros(); 3];
        let none = SdfSampleSet::new(p.clone(), vec![1.0, 2.0, 3.0], vec![false; 3]).unwrap();
        assert_eq!(contact_constraint_loss(&none, ConstraintConvention::Absolute), 0.0);
        let zero = SdfSampleSet::new(p.clone(), vec![0.0, 2.0, 3.0], vec![true, false, false]).unwrap();
        assert_eq!(contact_constraint_loss(&zero, ConstraintConvention::Absolute), 0.0);
        let pm = SdfSampleSet::new(p.clone(), vec![0.5, -0.5, 9.0], vec![true, true, false]).unwrap();
        assert_eq!(contact_constraint_loss(&pm, ConstraintConvention::Absolute), 1.0);
        assert_eq!(contact_constraint_loss(&pm, ConstraintConvention::Signed), 0.0);
        assert!(SdfSampleSet::new(p.clone(), vec![f64::NAN; 3], vec![true; 3]).is_err());
        assert!(SdfSampleSet::new(p, vec![0.0; 2], vec![true; 3]).is_err());
    }

    #[test]
    fn label_examples() {
        let samples = [Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0)];
        let empty = PointCloud::new(vec![]).unwrap();
        assert_eq!(label_contacts(&samples, &empty, 3.0).unwrap(), vec![false, false]);
        let near = PointCloud::new(vec![Vec3::new(2.0, 0.0, 0.0)]).unwrap();
        assert_eq!(label_contacts(&samples, &near, 3.0).unwrap(), vec![true, false]);
        let exact = PointCloud::new(vec![Vec3::new(0.0, 3.0, 0.0)]).unwrap();
        assert_eq!(label_contacts(&samples, &exact, 3.0).unwrap(), vec![false, false]);
        assert!(label_contacts(&samples, &near, 0.0).is_err());
    }

    #[test]
    fn rigid_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obj = make_object(&ObjectKind::Sphere { radius: 15.0 }, 2).unwrap();
        let hand: Vec<Vec3> = (0..40)
            .map(|_| Vec3::new(rng.random_range(-18.0..18.0), rng.random_range(-18.0..18.0), rng.random_range(-18.0..18.0)))
            .collect();
        let hand = PointCloud::new(hand).unwrap();
        let iso = Isometry3::from_parts(
            Translation3::new(12.0, -40.0, 7.0),
            UnitQuaternion::from_euler_angles(0.4, -1.1, 2.0),
        );
        let (obj2, hand2) = (obj.transformed(&iso), hand.transformed(&iso));
        let pd1 = penetration_depth(&hand, &obj).unwrap();
        let pd2 = penetration_depth(&hand2, &obj2).unwrap();
        assert!((pd1 - pd2).abs() < 1e-9);
        let m1 = contact_mask(&obj, &hand, 3.0).unwrap();
        let m2 = contact_mask(&obj2, &hand2, 3.0).unwrap();
        assert_eq!(m1, m2);
        let j1 = &hand.points()[..21];
        let j2 = &hand2.points()[..21];
        let g1 = &hand.points()[19..40];
        let g2 = &hand2.points()[19..40];
        assert!((mpjpe(j1, g1).unwrap() - mpjpe(j2, g2).unwrap()).abs() < 1e-9);
    }
}
