//! Tactile sensor layouts, per-frame readings and their aggregation into the
//! 22 region forces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SpatialIndex, Vec3};
use crate::hand_model::{HandDescription, HandState, NUM_FRAMES, NUM_REGIONS};

const DEFAULT_LAYOUT_JSON: &str = include_str!("../data/layout_default.json");

/// Default force assigned to regions near the object when no tactile data is
/// available.
pub const FIXED_FORCE_VALUE: f64 = 0.5;
/// Keypoint-to-object proximity (mm) that activates the fixed force.
pub const FIXED_FORCE_PROXIMITY_MM: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub region: usize,
    pub bone: usize,
    pub offset_mm: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    pub sensors: Vec<Sensor>,
}

impl Default for SensorLayout {
    fn default() -> Self {
        SensorLayout::from_json_str(DEFAULT_LAYOUT_JSON).expect("bundled layout is valid")
    }
}

impl SensorLayout {
    pub fn new(sensors: Vec<Sensor>) -> Result<Self> {
        let layout = SensorLayout { sensors };
        layout.validate()?;
        Ok(layout)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let layout: SensorLayout = serde_json::from_str(text)?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::invalid("sensor layout has no sensors"));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            if s.region >= NUM_REGIONS {
                return Err(Error::invalid(format!("sensor {i}: region {} >= {NUM_REGIONS}", s.region)));
            }
            if s.bone >= NUM_FRAMES {
                return Err(Error::invalid(format!("sensor {i}: bone {} >= {NUM_FRAMES}", s.bone)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    /// World positions of every sensor.
    pub fn world_positions(&self, state: &HandState) -> Vec<Vec3> {
        self.sensors
            .iter()
            .map(|s| state.point(s.bone, &Vec3::from(s.offset_mm)))
            .collect()
    }

    /// Checks that every sensor bone exists in `desc`.
    pub fn check_against(&self, desc: &HandDescription) -> Result<()> {
        match self.sensors.iter().position(|s| s.bone >= desc.bones.len()) {
            None => Ok(()),
            Some(i) => Err(Error::invalid(format!("sensor {i}: bone not in hand description"))),
        }
    }
}

/// One reading per sensor, non-negative, in normalized force units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileFrame {
    pub readings: Vec<f64>,
}

impl TactileFrame {
    pub fn new(readings: Vec<f64>) -> Result<Self> {
        if let Some(i) = readings.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid(format!("reading {i} must be finite and >= 0")));
        }
        Ok(TactileFrame { readings })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: TactileFrame = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        TactileFrame::new(raw.readings)
    }

    /// One frame per CSV row.
    pub fn load_csv_sequence(path: &Path) -> Result<Vec<Self>> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })?;
        let mut frames = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })?;
            let readings = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    path: path.into(),
                    message: format!("row {}: {e}", row + 1),
                })?;
            frames.push(TactileFrame::new(readings)?);
        }
        Ok(frames)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame serializes")
    }

    fn check(&self, layout: &SensorLayout) -> Result<()> {
        if self.readings.len() != layout.len() {
            return Err(Error::LengthMismatch {
                expected: layout.len(),
                actual: self.readings.len(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        TactileFrame::new(self.readings.iter().map(|r| r * c).collect())
    }
}

/// Mean force per hand region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionForces(pub [f64; NUM_REGIONS]);

impl Default for RegionForces {
    fn default() -> Self {
        RegionForces([0.0; NUM_REGIONS])
    }
}

impl RegionForces {
    pub fn get(&self, region: usize) -> f64 {
        self.0[region]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&f| f > 0.0).count()
    }
}

/// Arithmetic mean of the readings in each region; regions with no sensors
/// get 0.
pub fn region_average(frame: &TactileFrame, layout: &SensorLayout) -> Result<RegionForces> {
    frame.check(layout)?;
    let mut sum = [0.0; NUM_REGIONS];
    let mut count = [0usize; NUM_REGIONS];
    for (s, r) in layout.sensors.iter().zip(&frame.readings) {
        sum[s.region] += r;
        count[s.region] += 1;
    }
    let mut out = [0.0; NUM_REGIONS];
    for j in 0..NUM_REGIONS {
        if count[j] > 0 {
            out[j] = sum[j] / count[j] as f64;
        }
    }
    Ok(RegionForces(out))
}

/// `force_value` for every region whose keypoint has an object point within
/// `proximity` (closed), 0 elsewhere.
pub fn fixed_force(state: &HandState, object: &SpatialIndex, force_value: f64, proximity: f64) -> RegionForces {
    let mut out = [0.0; NUM_REGIONS];
    for (j, k) in state.keypoints.iter().enumerate() {
        if object.nearest_distance(k) <= proximity {
            out[j] = force_value;
        }
    }
    RegionForces(out)
}

/// World positions of sensors reading strictly above `activation_threshold`.
pub fn active_sensor_positions(
    frame: &TactileFrame,
    layout: &SensorLayout,
    state: &HandState,
    activation_threshold: f64,
) -> Result<PointCloud> {
    frame.check(layout)?;
    if !(activation_threshold >= 0.0) {
        return Err(Error::invalid("activation threshold must be >= 0"));
    }
    let points = layout
        .sensors
        .iter()
        .zip(&frame.readings)
        .filter(|(_, &r)| r > activation_threshold)
        .map(|(s, _)| state.point(s.bone, &Vec3::from(s.offset_mm)))
        .collect();
    PointCloud::new(points)
}
