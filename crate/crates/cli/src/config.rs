//! Flat `key = value` run configuration.
//!
//! Keys carry a section prefix (`vessel.length = 150`). Blank lines and
//! `#` comments are ignored; unknown and repeated keys are errors. The
//! `MAGWAKE_SEED` environment variable overrides `seed`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

pub const SEED_ENV: &str = "MAGWAKE_SEED";

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed for noise, initialisation, batches and sweep draws"),
    ("vessel.length", "hull length (m)"),
    ("vessel.beam_coeff", "hull amplitude coefficient"),
    ("vessel.speed", "vessel speed (m/s)"),
    ("vessel.track_angle_deg", "angle between vessel and sensor tracks (deg)"),
    ("vessel.hull", "wigley | parabolic | prolate"),
    ("vessel.hull_ratio", "draft as a fraction of length"),
    ("env.depth", "sea depth (m)"),
    ("env.field_strength", "geomagnetic field strength (T)"),
    ("env.dip_deg", "geomagnetic dip below horizontal (deg)"),
    ("env.declination_deg", "geomagnetic declination (deg)"),
    ("sensor.speed", "sensor ground speed (m/s)"),
    ("sensor.sample_rate", "sampling rate (Hz)"),
    ("sensor.altitude", "sensor altitude (m)"),
    ("sensor.x0", "start position astern of the vessel (m)"),
    ("sensor.y0", "start lateral offset (m)"),
    ("sensor.samples", "samples per series"),
    ("quad.nodes", "Gauss-Legendre nodes over the angle domain"),
    ("quad.clip", "angle clipped from each end of the domain (rad)"),
    (
        "noise.snr_db",
        "SNR of the simulated series (dB); omit for a clean series",
    ),
    ("map.x_min", "map window, along track (m)"),
    ("map.x_max", "map window, along track (m)"),
    ("map.x_count", "map columns"),
    ("map.y_min", "map window, across track (m)"),
    ("map.y_max", "map window, across track (m)"),
    ("map.y_count", "map rows"),
    (
        "map.altitude",
        "map height above the surface (m); defaults to sensor.altitude",
    ),
    ("map.time", "map snapshot time (s)"),
    ("dataset.profile", "desk | full"),
    ("dataset.snr_db", "SNR of training series (dB)"),
    ("train.iterations", "optimiser steps"),
    ("train.batch", "mini-batch size"),
    ("train.lr", "Adam learning rate"),
    ("train.loss", "drnn | pirnn"),
    ("train.n_mc", "Monte Carlo angles for the physics loss"),
    ("train.alpha_filter", "none | below15 | above15"),
    ("sweep.draws", "random scenarios per sweep point"),
    ("sweep.angles_deg", "comma-separated |track angle| values (deg)"),
    ("sweep.speeds", "comma-separated vessel speeds (m/s)"),
    ("sweep.depths", "comma-separated sea depths (m)"),
    (
        "sweep.lengths",
        "comma-separated ground-truth lengths for the scatter (m)",
    ),
    ("sweep.per_length", "scatter scenarios per length"),
    ("sweep.snr_db", "SNR of sweep series (dB); defaults to dataset.snr_db"),
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, (String, usize)>,
    seed_override: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(known, _)| *known == k) {
                return Err(CliError::config(format!("line {}: unknown key `{k}`", n + 1)));
            }
            if values.insert(k.to_string(), (v.to_string(), n + 1)).is_some() {
                return Err(CliError::config(format!("line {}: key `{k}` given twice", n + 1)));
            }
        }
        Ok(Self {
            values,
            seed_override: None,
        })
    }

    /// Reads `path` (or starts empty) and applies the environment override.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        cfg.seed_override = std::env::var(SEED_ENV).ok();
        Ok(cfg)
    }

    fn raw(&self, key: &str) -> Option<(&str, Option<usize>)> {
        debug_assert!(KEYS.iter().any(|(k, _)| *k == key), "undeclared key {key}");
        if key == "seed" {
            if let Some(s) = &self.seed_override {
                return Some((s.as_str(), None));
            }
        }
        self.values.get(key).map(|(v, n)| (v.as_str(), Some(*n)))
    }

    fn convert<T: FromStr>(key: &str, v: &str, line: Option<usize>) -> Result<T, CliError> {
        v.parse().map_err(|_| {
            let at = line.map_or_else(|| SEED_ENV.to_string(), |n| format!("line {n}"));
            CliError::config(format!("{at}: invalid value `{v}` for `{key}`"))
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key).map(|(v, n)| Self::convert(key, v, n)).transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    /// Comma-separated list.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((v, n)) => {
                let out: Vec<f64> = v
                    .split(',')
                    .map(|s| Self::convert::<f64>(key, s.trim(), n))
                    .collect::<Result<_, _>>()?;
                if out.is_empty() {
                    return Err(CliError::config(format!("`{key}` must list at least one value")));
                }
                Ok(out)
            }
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.or("seed", 0)
    }
}
