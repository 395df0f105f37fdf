//! Flat `key = value` run configuration; `#` starts a comment.

use std::path::Path;
use std::str::FromStr;

use crate::dffield::{KappaMode, PairMode};
use crate::error::{Error, Result};
use crate::optimizer::OptimConfig;

/// Optimizer settings plus the force-source switch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSettings {
    pub optim: OptimConfig,
    pub fixed_force: bool,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value for {key}: {value:?}")))
}

impl RunSettings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let o = &mut self.optim;
        match key {
            "iterations" => o.iterations = parse(key, value)?,
            "learning_rate" | "lr" => o.learning_rate = parse(key, value)?,
            "beta1" => o.beta1 = parse(key, value)?,
            "beta2" => o.beta2 = parse(key, value)?,
            "epsilon" => o.epsilon = parse(key, value)?,
            "w_energy" => o.w_energy = parse(key, value)?,
            "w_lr" => o.w_lr = parse(key, value)?,
            "w_lo" => o.w_lo = parse(key, value)?,
            "disable_barrier" => o.disable_barrier = parse(key, value)?,
            "disable_relative" => o.disable_relative = parse(key, value)?,
            "disable_lr" => o.disable_lr = parse(key, value)?,
            "disable_lo" => o.disable_lo = parse(key, value)?,
            "repair_every" => o.repair_every = parse(key, value)?,
            "surface_density" => o.surface_density = parse(key, value)?,
            "barrier_threshold" => o.dffield.barrier_threshold = parse(key, value)?,
            "query_radius" => o.dffield.query_radius = parse(key, value)?,
            "distance_floor" => o.dffield.distance_floor = parse(key, value)?,
            "pair_mode" => o.dffield.pair_mode = PairMode::from_str(value)?,
            "kappa_mode" => o.dffield.kappa_mode = KappaMode::from_str(value)?,
            "fixed_force" => self.fixed_force = parse(key, value)?,
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: expected key = value", n + 1),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: {e}", n + 1),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text, path)
    }
}
