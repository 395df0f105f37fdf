//! Force-aware hand-object contact field and tactile-driven hand pose
//! refinement, with a synthetic scene generator and grasp metrics.
//!
//! Lengths are millimeters and angles radians throughout.

pub mod cli;
pub mod dffield;
pub mod error;
pub mod geometry;
pub mod hand_model;
pub mod metrics;
pub mod optimizer;
pub mod scenegen;
pub mod tactile;

pub use error::{Error, Result};

use serde::Serialize;

/// The published hyperparameters as resolved from the defaults of each
/// module.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefaultsSnapshot {
    pub barrier_threshold_mm: f64,
    pub query_radius_mm: f64,
    pub contact_label_distance_mm: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub contact_threshold_mm: f64,
    pub fixed_force_value: f64,
    pub fixed_force_proximity_mm: f64,
}

impl DefaultsSnapshot {
    pub fn current() -> Self {
        let cfg = optimizer::OptimConfig::default();
        DefaultsSnapshot {
            barrier_threshold_mm: cfg.dffield.barrier_threshold,
            query_radius_mm: cfg.dffield.query_radius,
            contact_label_distance_mm: metrics::CONTACT_LABEL_DISTANCE_MM,
            iterations: cfg.iterations,
            learning_rate: cfg.learning_rate,
            contact_threshold_mm: metrics::CONTACT_THRESHOLD_MM,
            fixed_force_value: tactile::FIXED_FORCE_VALUE,
            fixed_force_proximity_mm: tactile::FIXED_FORCE_PROXIMITY_MM,
        }
    }
}
