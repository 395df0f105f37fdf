//! Force-aware hand-pose refinement: minimize contact energy plus joint
//! regularizer plus deviation from the initial pose with Adam.

mod adam;
mod losses;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use losses::{deviation_lo, regularizer_lr};

use crate::dffield::{
    establish_pairs, evaluate_energy, nearest_regions, DfFieldConfig, EnergyBreakdown, EnergyTerms, PairMode,
    PointPair, SurfaceBinding,
};
use crate::error::{Error, Result};
use crate::geometry::{SpatialIndex, TriMesh, Vec3};
use crate::hand_model::{
    evaluate_with_derivatives, forward_kinematics, place_anchors, surface_anchors, FrameAccumulator,
    HandDescription, HandPose, HandState, SurfaceAnchor, NUM_FRAMES, NUM_REGIONS, POSE_DIM,
};
use crate::tactile::{fixed_force, RegionForces, SensorLayout, FIXED_FORCE_PROXIMITY_MM, FIXED_FORCE_VALUE};

/// Default number of samples per capsule for the all-surface pairing mode
/// and the surface metrics.
pub const DEFAULT_SURFACE_DENSITY: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub w_energy: f64,
    pub w_lr: f64,
    pub w_lo: f64,
    pub disable_barrier: bool,
    pub disable_relative: bool,
    pub disable_lr: bool,
    pub disable_lo: bool,
    /// Pairs (and κ) are rebuilt every this many iterations.
    pub repair_every: usize,
    /// Samples per capsule in all-surface pairing mode.
    pub surface_density: usize,
    pub dffield: DfFieldConfig,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            iterations: 100,
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            w_energy: 1.0,
            w_lr: 1.0,
            w_lo: 1.0,
            disable_barrier: false,
            disable_relative: false,
            disable_lr: false,
            disable_lo: false,
            repair_every: 1,
            surface_density: DEFAULT_SURFACE_DENSITY,
            dffield: DfFieldConfig::default(),
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::invalid("adam moments must lie in [0, 1) and epsilon > 0"));
        }
        if [self.w_energy, self.w_lr, self.w_lo].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("term weights must be >= 0"));
        }
        if self.repair_every == 0 {
            return Err(Error::invalid("repair_every must be >= 1"));
        }
        self.dffield.validate()
    }

    pub fn energy_terms(&self) -> EnergyTerms {
        EnergyTerms {
            relative: !self.disable_relative,
            barrier: !self.disable_barrier,
        }
    }
}

/// Where region forces come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceSource {
    /// Measured region means, held constant.
    Tactile(RegionForces),
    /// Tactile-free mode: `value` on regions whose keypoint is within
    /// `proximity` of the object, re-evaluated at every re-pairing.
    Fixed { value: f64, proximity: f64 },
}

impl ForceSource {
    pub fn fixed_default() -> Self {
        ForceSource::Fixed {
            value: FIXED_FORCE_VALUE,
            proximity: FIXED_FORCE_PROXIMITY_MM,
        }
    }
}

/// Frozen pair topology and the forces it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<PointPair>,
    pub forces: RegionForces,
}

/// Objective value, its gradient over all 51 parameters, and its parts.
#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: [f64; POSE_DIM],
    pub energy: EnergyBreakdown,
    pub lr: f64,
    pub lo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimStatus {
    Completed,
    AbortedNan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    #[serde(rename = "E_rel")]
    pub e_rel: f64,
    #[serde(rename = "E_bar")]
    pub e_bar: f64,
    #[serde(rename = "Lr")]
    pub lr: f64,
    #[serde(rename = "Lo")]
    pub lo: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub theta_init: HandPose,
    pub theta_final: HandPose,
    pub trace: Vec<TraceEntry>,
    pub wall_ms: f64,
    pub status: OptimStatus,
    /// Diagnostic naming the failing term when aborted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

impl OptimResult {
    /// Serialized as `{theta_init: [..], theta_final: [..], trace, wall_ms, status}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Flat<'a> {
            theta_init: &'a [f64],
            theta_final: &'a [f64],
            trace: &'a [TraceEntry],
            wall_ms: f64,
            status: OptimStatus,
            #[serde(skip_serializing_if = "Option::is_none")]
            abort_reason: &'a Option<String>,
        }
        serde_json::to_string_pretty(&Flat {
            theta_init: self.theta_init.as_slice(),
            theta_final: self.theta_final.as_slice(),
            trace: &self.trace,
            wall_ms: self.wall_ms,
            status: self.status,
            abort_reason: &self.abort_reason,
        })
        .expect("result serializes")
    }
}

/// Everything the objective needs besides the pose: hand model, fixed object,
/// force source and configuration.
pub struct ForceAwareOptimizer<'a> {
    desc: &'a HandDescription,
    object: &'a TriMesh,
    index: SpatialIndex,
    forces: ForceSource,
    layout: Option<&'a SensorLayout>,
    anchors: Vec<SurfaceAnchor>,
    cfg: OptimConfig,
}

impl<'a> ForceAwareOptimizer<'a> {
    pub fn new(desc: &'a HandDescription, object: &'a TriMesh, forces: ForceSource, cfg: OptimConfig) -> Result<Self> {
        cfg.validate()?;
        if let ForceSource::Tactile(f) = &forces {
            if f.0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("region forces must be finite and >= 0"));
            }
        }
        let index = SpatialIndex::from_points(object.vertices().to_vec())?;
        let anchors = match cfg.dffield.pair_mode {
            PairMode::Keypoints => Vec::new(),
            PairMode::AllSurface => surface_anchors(desc, cfg.surface_density)?,
        };
        Ok(ForceAwareOptimizer {
            desc,
            object,
            index,
            forces,
            layout: None,
            anchors,
            cfg,
        })
    }

    /// Sensor layout used to assign surface samples to regions in
    /// all-surface mode (nearest sensor). Without it samples take the region
    /// of the nearest keypoint.
    pub fn with_layout(mut self, layout: &'a SensorLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn config(&self) -> &OptimConfig {
        &self.cfg
    }

    pub fn object_index(&self) -> &SpatialIndex {
        &self.index
    }

    fn region_forces(&self, state: &HandState) -> RegionForces {
        match &self.forces {
            ForceSource::Tactile(f) => f.clone(),
            ForceSource::Fixed { value, proximity } => fixed_force(state, &self.index, *value, *proximity),
        }
    }

    /// Builds pairs and κ at `pose`.
    pub fn establish(&self, pose: &HandPose) -> Result<Pairing> {
        let state = forward_kinematics(self.desc, pose)?;
        let forces = self.region_forces(&state);
        let pairs = match self.cfg.dffield.pair_mode {
            PairMode::Keypoints => establish_pairs(&state, None, &self.index, &forces, &self.cfg.dffield)?,
            PairMode::AllSurface => {
                let points = place_anchors(&self.anchors, &state);
                let regions = match self.layout {
                    Some(layout) => {
                        let sites = layout.world_positions(&state);
                        let site_regions: Vec<usize> = layout.sensors.iter().map(|s| s.region).collect();
                        nearest_regions(&points, &sites, &site_regions)?
                    }
                    None => {
                        let ids: Vec<usize> = (0..NUM_REGIONS).collect();
                        nearest_regions(&points, &state.keypoints, &ids)?
                    }
                };
                establish_pairs(
                    &state,
                    Some(SurfaceBinding {
                        points: &points,
                        regions: &regions,
                    }),
                    &self.index,
                    &forces,
                    &self.cfg.dffield,
                )?
            }
        };
        Ok(Pairing { pairs, forces })
    }

    /// Objective and gradient at `pose` with the pairing held fixed.
    pub fn objective(&self, pose: &HandPose, initial: &HandPose, pairing: &Pairing) -> Result<ObjectiveValue> {
        let cfg = &self.cfg;
        let all: Vec<usize> = (0..POSE_DIM).collect();
        let (state, derivs) = evaluate_with_derivatives(self.desc, pose, &all)?;

        // hand-side points with their frame attachment
        let (points, attach): (Vec<Vec3>, Vec<(usize, Vec3)>) = match cfg.dffield.pair_mode {
            PairMode::Keypoints => (
                state.keypoints.clone(),
                (0..NUM_REGIONS).map(|r| self.desc.region_anchor(r)).collect(),
            ),
            PairMode::AllSurface => (
                place_anchors(&self.anchors, &state),
                self.anchors.iter().map(|a| (a.frame, a.local)).collect(),
            ),
        };
        let terms = cfg.energy_terms();
        let use_energy = terms.relative || terms.barrier;
        let (energy, point_grads) = if use_energy {
            evaluate_energy(&pairing.pairs, &points, self.object.vertices(), &cfg.dffield, terms)
        } else {
            (EnergyBreakdown {
                pair_count: pairing.pairs.len(),
                ..Default::default()
            }, vec![Vec3::zeros(); points.len()])
        };
        if !energy.total.is_finite() {
            return Err(Error::NonFinite("contact energy E".into()));
        }

        let mut gradient = [0.0; POSE_DIM];
        if use_energy && cfg.w_energy > 0.0 {
            let mut acc = [FrameAccumulator::default(); NUM_FRAMES];
            for (g, (frame, local)) in point_grads.iter().zip(&attach) {
                if *g != Vec3::zeros() {
                    acc[*frame].add(&(g * cfg.w_energy), local);
                }
            }
            for (dst, src) in gradient.iter_mut().zip(derivs.pull_back(&acc)) {
                *dst += src;
            }
        }

        let mut value = cfg.w_energy * energy.total;
        let mut lr = 0.0;
        if !cfg.disable_lr {
            let (v, g) = regularizer_lr(pose, self.desc);
            if !v.is_finite() {
                return Err(Error::NonFinite("regularizer L_r".into()));
            }
            lr = v;
            value += cfg.w_lr * v;
            for (dst, src) in gradient.iter_mut().zip(g) {
                *dst += cfg.w_lr * src;
            }
        }
        let mut lo = 0.0;
        if !cfg.disable_lo {
            let (v, g) = deviation_lo(pose, initial);
            if !v.is_finite() {
                return Err(Error::NonFinite("deviation L_o".into()));
            }
            lo = v;
            value += cfg.w_lo * v;
            for (dst, src) in gradient.iter_mut().zip(g) {
                *dst += cfg.w_lo * src;
            }
        }
        if let Some(i) = gradient.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("objective gradient (parameter {i})")));
        }
        Ok(ObjectiveValue {
            value,
            gradient,
            energy,
            lr,
            lo,
        })
    }

    /// Runs Adam from `initial` for the configured number of iterations.
    pub fn run(&self, initial: &HandPose) -> Result<OptimResult> {
        initial.require_finite()?;
        let cfg = &self.cfg;
        let start = Instant::now();
        let mut adam = Adam::new(POSE_DIM, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
        let mut pose = initial.clone();
        let mut trace = Vec::with_capacity(cfg.iterations);
        let mut status = OptimStatus::Completed;
        let mut abort_reason = None;
        let mut pairing = self.establish(&pose)?;

        for iter in 0..cfg.iterations {
            if iter > 0 && iter % cfg.repair_every == 0 {
                pairing = self.establish(&pose)?;
            }
            let eval = match self.objective(&pose, initial, &pairing) {
                Ok(e) => e,
                Err(Error::NonFinite(term)) => {
                    status = OptimStatus::AbortedNan;
                    abort_reason = Some(format!("non-finite {term} at iteration {iter}"));
                    break;
                }
                Err(e) => return Err(e),
            };
            trace.push(TraceEntry {
                iter,
                e_rel: eval.energy.relative,
                e_bar: eval.energy.barrier,
                lr: eval.lr,
                lo: eval.lo,
                total: eval.value,
            });
            let previous = pose.clone();
            adam.step(pose.as_mut_slice(), &eval.gradient);
            if !pose.is_finite() {
                pose = previous;
                status = OptimStatus::AbortedNan;
                abort_reason = Some(format!("non-finite pose after step {iter}"));
                break;
            }
        }

        Ok(OptimResult {
            theta_init: initial.clone(),
            theta_final: pose,
            trace,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            status,
            abort_reason,
        })
    }
}

/// Convenience wrapper: refine `initial` against `object`.
pub fn optimize(
    desc: &HandDescription,
    initial: &HandPose,
    object: &TriMesh,
    forces: ForceSource,
    cfg: &OptimConfig,
) -> Result<OptimResult> {
    ForceAwareOptimizer::new(desc, object, forces, cfg.clone())?.run(initial)
}
