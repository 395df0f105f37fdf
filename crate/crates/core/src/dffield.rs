//! Force-aware contact field: hand/object point pairs carrying a stiffness
//! estimate, the attractive relative potential `κ l²`, the log barrier, and
//! gradients with respect to the hand-side points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SpatialIndex, Vec3};
use crate::hand_model::{HandState, NUM_REGIONS};
use crate::tactile::RegionForces;

/// Which hand points take part in pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    /// The 22 region keypoints.
    Keypoints,
    /// Every hand surface sample, each carrying the force of its nearest
    /// sensor's region.
    AllSurface,
}

impl std::str::FromStr for PairMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keypoints" => Ok(PairMode::Keypoints),
            "all-surface" | "all_surface" | "all_surface_points" => Ok(PairMode::AllSurface),
            other => Err(Error::invalid(format!("unknown pair mode {other:?}"))),
        }
    }
}

/// How κ = force / distance enters the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMode {
    /// κ is a per-evaluation constant, re-estimated when pairs are rebuilt.
    Frozen,
    /// κ is differentiated through its distance dependence.
    Differentiated,
}

impl std::str::FromStr for KappaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozen" => Ok(KappaMode::Frozen),
            "differentiated" => Ok(KappaMode::Differentiated),
            other => Err(Error::invalid(format!("unknown kappa mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfFieldConfig {
    /// Barrier activation distance l̂ (mm).
    pub barrier_threshold: f64,
    /// Ball-query pairing radius R (mm).
    pub query_radius: f64,
    pub pair_mode: PairMode,
    /// Lower clamp on distances used by κ and the barrier log (mm).
    pub distance_floor: f64,
    pub kappa_mode: KappaMode,
}

impl Default for DfFieldConfig {
    fn default() -> Self {
        DfFieldConfig {
            barrier_threshold: 2.0,
            query_radius: 5.0,
            pair_mode: PairMode::Keypoints,
            distance_floor: 0.1,
            kappa_mode: KappaMode::Frozen,
        }
    }
}

impl DfFieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.barrier_threshold > 0.0) {
            return Err(Error::invalid("barrier threshold must be > 0"));
        }
        if !(self.query_radius > 0.0) {
            return Err(Error::invalid("query radius must be > 0"));
        }
        if !(self.distance_floor > 0.0 && self.distance_floor < self.barrier_threshold) {
            return Err(Error::invalid("distance floor must lie in (0, barrier threshold)"));
        }
        Ok(())
    }
}

/// A hand point paired with an object vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub region: usize,
    /// Keypoint index (keypoint mode) or surface sample index.
    pub hand_point: usize,
    pub vertex: usize,
    /// Distance at pairing time (mm).
    pub distance: f64,
    /// Region force the stiffness was derived from.
    pub force: f64,
    pub kappa: f64,
}

/// Hand surface samples and the region each one draws its force from.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceBinding<'a> {
    pub points: &'a [Vec3],
    pub regions: &'a [usize],
}

/// Region of the nearest sensor for every sample.
pub fn nearest_regions(samples: &[Vec3], sites: &[Vec3], site_regions: &[usize]) -> Result<Vec<usize>> {
    if sites.len() != site_regions.len() {
        return Err(Error::LengthMismatch {
            expected: sites.len(),
            actual: site_regions.len(),
        });
    }
    let index = SpatialIndex::from_points(sites.to_vec())?;
    Ok(samples.iter().map(|p| site_regions[index.nearest(p).0]).collect())
}

/// Builds pairs between hand points and every object vertex within the
/// query radius (closed ball). A vertex may pair with several hand points.
pub fn establish_pairs(
    state: &HandState,
    surface: Option<SurfaceBinding<'_>>,
    object: &SpatialIndex,
    forces: &RegionForces,
    cfg: &DfFieldConfig,
) -> Result<Vec<PointPair>> {
    let regions_kp: Vec<usize> = (0..NUM_REGIONS).collect();
    let (points, regions): (&[Vec3], &[usize]) = match cfg.pair_mode {
        PairMode::Keypoints => (&state.keypoints, &regions_kp),
        PairMode::AllSurface => {
            let s = surface.ok_or_else(|| Error::invalid("all-surface pairing needs surface samples"))?;
            if s.points.len() != s.regions.len() {
                return Err(Error::LengthMismatch {
                    expected: s.points.len(),
                    actual: s.regions.len(),
                });
            }
            (s.points, s.regions)
        }
    };
    let mut pairs = Vec::new();
    let mut hits = Vec::new();
    for (h, (p, &region)) in points.iter().zip(regions).enumerate() {
        object.ball_into(p, cfg.query_radius, &mut hits);
        let force = forces.get(region);
        for &v in &hits {
            let l = (p - object.point(v)).norm();
            pairs.push(PointPair {
                region,
                hand_point: h,
                vertex: v,
                distance: l,
                force,
                kappa: kappa(force, l, cfg.distance_floor)?,
            });
        }
    }
    Ok(pairs)
}

/// Stiffness estimate `force / max(l, floor)`.
pub fn kappa(force: f64, l: f64, floor: f64) -> Result<f64> {
    if !(force >= 0.0) {
        return Err(Error::invalid(format!("force must be >= 0, got {force}")));
    }
    if !(floor > 0.0) {
        return Err(Error::invalid("distance floor must be > 0"));
    }
    Ok(force / l.max(floor))
}

/// `κ l²`.
pub fn relative_energy(kappa: f64, l: f64) -> f64 {
    kappa * l * l
}

/// `−e^{−κ} (l − l̂)² ln(l / l̂)` for `0 < l < l̂`, zero beyond.
pub fn barrier_energy(kappa: f64, l: f64, l_hat: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::invalid(format!("barrier distance must be > 0, got {l}")));
    }
    if !(l_hat > 0.0) {
        return Err(Error::invalid("barrier threshold must be > 0"));
    }
    Ok(barrier_unchecked(kappa, l, l_hat))
}

fn barrier_unchecked(kappa: f64, l: f64, l_hat: f64) -> f64 {
    if l >= l_hat {
        return 0.0;
    }
    let d = l - l_hat;
    -(-kappa).exp() * d * d * (l / l_hat).ln()
}

/// `∂B/∂l` at fixed κ.
pub fn barrier_derivative(kappa: f64, l: f64, l_hat: f64) -> f64 {
    if l >= l_hat || l <= 0.0 {
        return 0.0;
    }
    let d = l - l_hat;
    -(-kappa).exp() * (2.0 * d * (l / l_hat).ln() + d * d / l)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairEnergy {
    pub relative: f64,
    pub barrier: f64,
}

/// Summed energies. Serializes as `{relative, barrier, total, pair_count}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub relative: f64,
    pub barrier: f64,
    pub total: f64,
    pub pair_count: usize,
    #[serde(skip)]
    pub per_pair: Vec<PairEnergy>,
}

/// Which energy terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyTerms {
    pub relative: bool,
    pub barrier: bool,
}

impl Default for EnergyTerms {
    fn default() -> Self {
        EnergyTerms {
            relative: true,
            barrier: true,
        }
    }
}

fn pair_energy(pair: &PointPair, l: f64, cfg: &DfFieldConfig, terms: EnergyTerms) -> (PairEnergy, f64) {
    let floor = cfg.distance_floor;
    let l_hat = cfg.barrier_threshold;
    let lb = l.max(floor);
    let k = match cfg.kappa_mode {
        KappaMode::Frozen => pair.kappa,
        KappaMode::Differentiated => pair.force / lb,
    };
    let mut e = PairEnergy::default();
    let mut de_dl = 0.0;
    if terms.relative {
        e.relative = relative_energy(k, l);
        de_dl += match cfg.kappa_mode {
            KappaMode::Differentiated if l > floor => pair.force,
            _ => 2.0 * k * l,
        };
    }
    if terms.barrier {
        e.barrier = barrier_unchecked(k, lb, l_hat);
        if l > floor {
            de_dl += barrier_derivative(k, lb, l_hat);
            if cfg.kappa_mode == KappaMode::Differentiated {
                // ∂B/∂κ · dκ/dl = (−B)(−force / l²)
                de_dl += e.barrier * pair.force / (l * l);
            }
        }
    }
    (e, de_dl)
}

/// Energy of `pairs` using the distances stored at pairing time.
pub fn total_energy(pairs: &[PointPair], cfg: &DfFieldConfig) -> EnergyBreakdown {
    total_energy_with(pairs, cfg, EnergyTerms::default())
}

pub fn total_energy_with(pairs: &[PointPair], cfg: &DfFieldConfig, terms: EnergyTerms) -> EnergyBreakdown {
    let per_pair: Vec<PairEnergy> = pairs
        .iter()
        .map(|p| pair_energy(p, p.distance, cfg, terms).0)
        .collect();
    summarize(per_pair)
}

fn summarize(per_pair: Vec<PairEnergy>) -> EnergyBreakdown {
    let relative: f64 = per_pair.iter().map(|e| e.relative).sum();
    let barrier: f64 = per_pair.iter().map(|e| e.barrier).sum();
    EnergyBreakdown {
        relative,
        barrier,
        total: relative + barrier,
        pair_count: per_pair.len(),
        per_pair,
    }
}

/// Energy and its gradient with respect to each hand point, recomputing
/// distances from the given positions with the pair topology held fixed.
pub fn evaluate_energy(
    pairs: &[PointPair],
    hand_points: &[Vec3],
    object_points: &[Vec3],
    cfg: &DfFieldConfig,
    terms: EnergyTerms,
) -> (EnergyBreakdown, Vec<Vec3>) {
    let mut grads = vec![Vec3::zeros(); hand_points.len()];
    let mut per_pair = Vec::with_capacity(pairs.len());
    for p in pairs {
        let diff = hand_points[p.hand_point] - object_points[p.vertex];
        let l = diff.norm();
        let (e, de_dl) = pair_energy(p, l, cfg, terms);
        per_pair.push(e);
        if l > 0.0 {
            grads[p.hand_point] += diff * (de_dl / l);
        }
    }
    (summarize(per_pair), grads)
}

/// Gradient of the total energy with respect to each hand point.
pub fn energy_gradient(
    pairs: &[PointPair],
    hand_points: &[Vec3],
    object_points: &[Vec3],
    cfg: &DfFieldConfig,
) -> Vec<Vec3> {
    evaluate_energy(pairs, hand_points, object_points, cfg, EnergyTerms::default()).1
}
