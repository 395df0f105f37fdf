//! Deterministic synthetic grasp scenes: convex object, contact-satisfying
//! ground-truth pose, tactile frame, contact mask and a perturbed initial
//! pose, all a pure function of the [`SceneSpec`].

mod grasp;
mod objects;

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use grasp::{
    contact_regions, perturb, synthesize_grasp, synthesize_tactile, NoiseSpec, CONTACT_BAND_MM,
    GRASP_CLEARANCE_MM, MIN_CONTACT_REGIONS, TACTILE_FULL_SCALE, TACTILE_RANGE_MM,
};
pub use objects::{make_object, ObjectKind, MAX_LEVEL};

use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};
use crate::hand_model::{forward_kinematics, surface_samples, HandDescription, HandPose};
use crate::metrics::{contact_mask, ContactMask, CONTACT_THRESHOLD_MM};
use crate::optimizer::DEFAULT_SURFACE_DENSITY;
use crate::tactile::{SensorLayout, TactileFrame};

/// Stream offsets so the approach draw and the perturbation draw never share
/// a generator state.
const APPROACH_STREAM: u64 = 0x5eed_a770;
const NOISE_STREAM: u64 = 0x5eed_0015;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub object: ObjectKind,
    pub level: u32,
    /// Direction the palm moves toward the object; drawn from the seed when
    /// absent.
    pub approach: Option<[f64; 3]>,
    /// Roll of the hand about the approach direction, radians; drawn from
    /// the seed when absent.
    pub roll: Option<f64>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            object: ObjectKind::Sphere { radius: 40.0 },
            level: 5,
            approach: None,
            roll: None,
            noise: NoiseSpec::default(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.level > MAX_LEVEL {
            return Err(Error::invalid(format!("level must be <= {MAX_LEVEL}")));
        }
        if let Some(a) = self.approach {
            let n = Vec3::from(a).norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::invalid("approach direction must be non-zero"));
            }
        }
        if let Some(r) = self.roll {
            if !r.is_finite() {
                return Err(Error::invalid("roll must be finite"));
            }
        }
        Ok(())
    }

    /// Approach direction (unit) and roll, filling unset values from the seed.
    pub fn approach_and_roll(&self) -> (Vec3, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ APPROACH_STREAM);
        // uniform direction on the sphere
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let drawn = Vec3::new((1.0 - z * z).sqrt() * phi.cos(), (1.0 - z * z).sqrt() * phi.sin(), z);
        let drawn_roll: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let a = self.approach.map(|a| Vec3::from(a).normalize()).unwrap_or(drawn);
        (a, self.roll.unwrap_or(drawn_roll))
    }

    pub fn noise_seed(&self) -> u64 {
        self.seed ^ NOISE_STREAM
    }
}

/// A generated scene with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub spec: SceneSpec,
    pub object: TriMesh,
    pub gt_pose: HandPose,
    pub init_pose: HandPose,
    /// Absent when a scene is loaded without its tactile file.
    pub tactile: Option<TactileFrame>,
    pub gt_mask: ContactMask,
}

impl Scene {
    pub fn generate(id: impl Into<String>, spec: &SceneSpec, desc: &HandDescription, layout: &SensorLayout) -> Result<Self> {
        spec.validate()?;
        layout.check_against(desc)?;
        let object = make_object(&spec.object, spec.level)?;
        let gt_pose = synthesize_grasp(&object, desc, spec)?;
        let init_pose = perturb(&gt_pose, &spec.noise, spec.noise_seed())?;
        let tactile = synthesize_tactile(&gt_pose, &object, desc, layout)?;
        let state = forward_kinematics(desc, &gt_pose)?;
        let gt_mask = contact_mask(&object, &surface_samples(desc, &state, DEFAULT_SURFACE_DENSITY)?, CONTACT_THRESHOLD_MM)?;
        Ok(Scene {
            id: id.into(),
            spec: spec.clone(),
            object,
            gt_pose,
            init_pose,
            tactile: Some(tactile),
            gt_mask,
        })
    }

    /// Writes the scene files and its manifest into `dir`, returning the
    /// manifest path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest::standard(&self.id, &self.spec);
        let write = |name: &str, text: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        self.object.save_obj(&dir.join(&manifest.object))?;
        write(&manifest.gt_pose, self.gt_pose.to_json())?;
        write(&manifest.init_pose, self.init_pose.to_json())?;
        if let Some(t) = &self.tactile {
            write(&manifest.tactile, t.to_json())?;
        }
        write(&manifest.contact_mask, self.gt_mask.to_json())?;
        let path = dir.join(MANIFEST_FILE);
        write(MANIFEST_FILE, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }

    /// Loads a scene from its manifest. A missing tactile file is not an
    /// error; the scene then carries no tactile frame.
    pub fn load(manifest_path: &Path) -> Result<(Self, Manifest)> {
        let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let object = TriMesh::load_obj(&dir.join(&manifest.object))?;
        let gt_pose = HandPose::load(&dir.join(&manifest.gt_pose))?;
        let init_pose = HandPose::load(&dir.join(&manifest.init_pose))?;
        let tactile_path = dir.join(&manifest.tactile);
        let tactile = if tactile_path.exists() {
            Some(TactileFrame::load(&tactile_path)?)
        } else {
            None
        };
        let mask_path = dir.join(&manifest.contact_mask);
        let mask_text = fs::read_to_string(&mask_path).map_err(|e| Error::io(&mask_path, e))?;
        let gt_mask = ContactMask::from_json_str(&mask_text).map_err(|e| Error::Parse {
            path: mask_path.clone(),
            message: e.to_string(),
        })?;
        if gt_mask.len() != object.vertices().len() {
            return Err(Error::LengthMismatch {
                expected: object.vertices().len(),
                actual: gt_mask.len(),
            });
        }
        Ok((
            Scene {
                id: manifest.id.clone(),
                spec: manifest.spec.clone(),
                object,
                gt_pose,
                init_pose,
                tactile,
                gt_mask,
            },
            manifest,
        ))
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INDEX_FILE: &str = "index.json";

/// Per-scene manifest; file names are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    pub spec: SceneSpec,
    pub object: String,
    pub gt_pose: String,
    pub init_pose: String,
    pub tactile: String,
    pub contact_mask: String,
    /// Custom hand description; the bundled one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<String>,
    /// Custom sensor layout; the bundled one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
}

impl Manifest {
    /// Manifest with the default file names.
    pub fn standard(id: &str, spec: &SceneSpec) -> Self {
        Manifest {
            id: id.to_string(),
            spec: spec.clone(),
            object: "mesh.obj".into(),
            gt_pose: "gt.json".into(),
            init_pose: "init.json".into(),
            tactile: "tactile.json".into(),
            contact_mask: "mask.json".into(),
            hand: None,
            layout: None,
        }
    }
}

/// Scene index: manifest paths relative to the index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneIndex {
    pub scenes: Vec<String>,
}

impl SceneIndex {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Absolute manifest paths.
    pub fn manifests(&self, index_path: &Path) -> Vec<PathBuf> {
        let dir = index_path.parent().unwrap_or(Path::new("."));
        self.scenes.iter().map(|s| dir.join(s)).collect()
    }
}

/// Directory name of scene `i`.
pub fn scene_id(i: usize) -> String {
    format!("scene_{i:04}")
}
