//! Scene-level pipeline shared by the subcommands: load, refine, score.

use std::path::Path;

use log::warn;
use serde::Serialize;

use super::config::RunSettings;
use crate::error::Result;
use crate::hand_model::{forward_kinematics, surface_samples, HandDescription, HandPose};
use crate::metrics::{mpjpe, Evaluator, MetricsReport};
use crate::optimizer::{ForceAwareOptimizer, ForceSource, OptimConfig, OptimResult};
use crate::scenegen::{Manifest, Scene};
use crate::tactile::{region_average, SensorLayout};

/// A loaded scene with the hand model and sensor layout it refers to.
pub struct SceneContext {
    pub scene: Scene,
    pub manifest: Manifest,
    pub desc: HandDescription,
    pub layout: SensorLayout,
}

impl SceneContext {
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let (scene, manifest) = Scene::load(manifest_path)?;
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let desc = match &manifest.hand {
            Some(p) => HandDescription::load(&dir.join(p))?,
            None => HandDescription::default(),
        };
        let layout = match &manifest.layout {
            Some(p) => SensorLayout::load(&dir.join(p))?,
            None => SensorLayout::default(),
        };
        layout.check_against(&desc)?;
        Ok(SceneContext {
            scene,
            manifest,
            desc,
            layout,
        })
    }

    /// Context for an in-memory scene with the bundled hand and layout.
    pub fn from_scene(scene: Scene) -> Self {
        SceneContext {
            manifest: Manifest::standard(&scene.id, &scene.spec),
            scene,
            desc: HandDescription::default(),
            layout: SensorLayout::default(),
        }
    }

    /// Tactile region forces, or the fixed fallback when requested or when
    /// the scene has no tactile frame.
    pub fn force_source(&self, fixed: bool) -> Result<ForceSource> {
        match (&self.scene.tactile, fixed) {
            (Some(frame), false) => Ok(ForceSource::Tactile(region_average(frame, &self.layout)?)),
            (None, false) => {
                warn!("scene {}: no tactile frame, using fixed-force mode", self.scene.id);
                Ok(ForceSource::fixed_default())
            }
            (_, true) => Ok(ForceSource::fixed_default()),
        }
    }

    pub fn optimize(&self, settings: &RunSettings) -> Result<OptimResult> {
        self.optimize_from(&self.scene.init_pose, &settings.optim, settings.fixed_force)
    }

    pub fn optimize_from(&self, initial: &HandPose, cfg: &OptimConfig, fixed: bool) -> Result<OptimResult> {
        let forces = self.force_source(fixed)?;
        ForceAwareOptimizer::new(&self.desc, &self.scene.object, forces, cfg.clone())?
            .with_layout(&self.layout)
            .run(initial)
    }

    pub fn evaluator(&self) -> Result<Evaluator<'_>> {
        let gt = forward_kinematics(&self.desc, &self.scene.gt_pose)?;
        let surface = surface_samples(&self.desc, &gt, crate::optimizer::DEFAULT_SURFACE_DENSITY)?;
        Evaluator::new(&self.scene.object, gt.joints, surface, Some(self.scene.gt_mask.clone()))
    }

    pub fn evaluate(&self, evaluator: &Evaluator<'_>, pose: &HandPose) -> Result<MetricsReport> {
        let state = forward_kinematics(&self.desc, pose)?;
        let surface = surface_samples(&self.desc, &state, crate::optimizer::DEFAULT_SURFACE_DENSITY)?;
        evaluator.evaluate(&state.joints, &surface)
    }

    /// Joint error of `pose` against the initial pose.
    pub fn mpjpe_to_initial(&self, pose: &HandPose) -> Result<f64> {
        let a = forward_kinematics(&self.desc, pose)?;
        let b = forward_kinematics(&self.desc, &self.scene.init_pose)?;
        mpjpe(&a.joints, &b.joints)
    }
}

/// The ablation variants, in output order.
pub fn ablation_variants(base: &OptimConfig) -> Vec<(&'static str, OptimConfig, bool)> {
    let with = |f: fn(&mut OptimConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    vec![
        ("full", base.clone(), false),
        ("no_barrier", with(|c| c.disable_barrier = true), false),
        ("no_relative", with(|c| c.disable_relative = true), false),
        ("no_Lr", with(|c| c.disable_lr = true), false),
        ("no_Lo", with(|c| c.disable_lo = true), false),
        ("fixed_force", base.clone(), true),
    ]
}

/// Final metrics of one variant on one scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSample {
    pub scene_id: String,
    pub config: String,
    pub mpjpe_mm: f64,
    pub mpjpe_to_init_mm: f64,
    pub pd_mm: f64,
    pub ciou: f64,
    pub status: String,
}

/// Median summary of one variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub config: String,
    pub scenes: usize,
    pub median_mpjpe_mm: f64,
    pub median_mpjpe_to_init_mm: f64,
    pub median_pd_mm: f64,
    pub median_ciou: f64,
}

/// Runs every variant on one scene. Also returns the initial-pose metrics.
pub fn ablate_scene(ctx: &SceneContext, base: &OptimConfig) -> Result<(MetricsReport, Vec<AblationSample>)> {
    let evaluator = ctx.evaluator()?;
    let init = ctx.evaluate(&evaluator, &ctx.scene.init_pose)?;
    let mut out = Vec::new();
    for (name, cfg, fixed) in ablation_variants(base) {
        let result = ctx.optimize_from(&ctx.scene.init_pose, &cfg, fixed)?;
        let m = ctx.evaluate(&evaluator, &result.theta_final)?;
        out.push(AblationSample {
            scene_id: ctx.scene.id.clone(),
            config: name.to_string(),
            mpjpe_mm: m.mpjpe_mm,
            mpjpe_to_init_mm: ctx.mpjpe_to_initial(&result.theta_final)?,
            pd_mm: m.pd_mm,
            ciou: m.ciou,
            status: serde_json::to_value(result.status)?.as_str().unwrap_or_default().to_string(),
        });
    }
    Ok((init, out))
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-variant medians over `samples`, in variant order.
pub fn summarize(samples: &[AblationSample]) -> Vec<AblationRow> {
    ablation_variants(&OptimConfig::default())
        .into_iter()
        .map(|(name, _, _)| {
            let rows: Vec<&AblationSample> = samples.iter().filter(|s| s.config == name).collect();
            let col = |f: fn(&AblationSample) -> f64| median(&rows.iter().map(|s| f(s)).collect::<Vec<_>>());
            AblationRow {
                config: name.to_string(),
                scenes: rows.len(),
                median_mpjpe_mm: col(|s| s.mpjpe_mm),
                median_mpjpe_to_init_mm: col(|s| s.mpjpe_to_init_mm),
                median_pd_mm: col(|s| s.pd_mm),
                median_ciou: col(|s| s.ciou),
            }
        })
        .collect()
}
