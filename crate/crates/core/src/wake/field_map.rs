//! Normalised `‖H‖` over a horizontal plane in the vessel frame.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::QuadratureConfig;
use crate::emfield::{CVec3, EnvParams, HarmonicSet};
use crate::error::{Error, Result};
use crate::hydro::{HullModel, KochinMethod, SpectralPoint, VesselParams};

/// `count` evenly spaced values on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::domain(format!("bad grid axis [{min}, {max}] x {count}")));
        }
        Ok(Self { min, max, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + i as f64 * h).collect()
    }
}

/// Field magnitudes on a grid, row-major in `y`, scaled so the largest is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest magnitude before normalisation (A/m).
    pub peak: f64,
}

impl FieldMap {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    /// `x,y,value` rows with a header line.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                writeln!(w, "{x},{y},{}", self.at(ix, iy))?;
            }
        }
        Ok(())
    }

    /// Half-angle of the visible wake wedge, in degrees. In every column with
    /// `x > 0` the outermost local maximum of `|y|` above half the column
    /// peak is the edge ridge; the wedge boundary is where the field falls
    /// outward to half the ridge value. Returns the median boundary angle
    /// over columns whose boundary lies inside the map.
    pub fn wedge_half_angle(&self) -> Option<f64> {
        let ny = self.ys.len();
        let mut angles = Vec::new();
        for (ix, &x) in self.xs.iter().enumerate() {
            if x <= 0.0 {
                continue;
            }
            let col: Vec<f64> = (0..ny).map(|iy| self.at(ix, iy)).collect();
            let peak = col.iter().copied().fold(0.0, f64::max);
            if peak <= 0.0 {
                continue;
            }
            // Walk each half-column outward from the axis.
            for outward in [1isize, -1] {
                let idx: Vec<usize> = if outward > 0 {
                    (0..ny).filter(|&i| self.ys[i] >= 0.0).collect()
                } else {
                    (0..ny).rev().filter(|&i| self.ys[i] <= 0.0).collect()
                };
                let ridge = (1..idx.len().saturating_sub(1)).rev().find(|&j| {
                    let v = col[idx[j]];
                    v >= col[idx[j - 1]] && v >= col[idx[j + 1]] && v >= 0.5 * peak
                });
                let Some(r) = ridge else { continue };
                let half = 0.5 * col[idx[r]];
                if let Some(j) = (r + 1..idx.len()).find(|&j| col[idx[j]] < half) {
                    let (a, b) = (idx[j - 1], idx[j]);
                    let f = (col[a] - half) / (col[a] - col[b]);
                    let y = self.ys[a] + f * (self.ys[b] - self.ys[a]);
                    angles.push((y.abs() / x).atan().to_degrees());
                }
            }
        }
        if angles.is_empty() {
            return None;
        }
        angles.sort_by(f64::total_cmp);
        Some(angles[angles.len() / 2])
    }
}

struct MapNode {
    coeff: CVec3,
    k: f64,
    cos: f64,
    sin: f64,
    omega: f64,
}

/// `‖Re ∫ (V_s/2π) h_a(θ) e^{-β_a z} A κ e^{-i(ω_0 t + k x cos θ + k y sin θ)} dθ‖`
/// at height `altitude`, vessel at the origin moving towards `−x`.
#[allow(clippy::too_many_arguments)]
pub fn wake_field_2d(
    vessel: &VesselParams,
    env: &EnvParams,
    hull: HullModel,
    kochin: &KochinMethod,
    altitude: f64,
    t: f64,
    xs: GridAxis,
    ys: GridAxis,
    quad: &QuadratureConfig,
) -> Result<FieldMap> {
    vessel.validate()?;
    env.validate()?;
    if !(altitude > 0.0) {
        return Err(Error::domain(format!("map altitude must be positive, got {altitude}")));
    }
    let rule = quad.rule()?;
    let mut nodes = Vec::with_capacity(rule.len());
    for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let sp = match SpectralPoint::solve(theta, vessel, hull, env.depth, env.gravity, kochin) {
            Ok(sp) => sp,
            Err(Error::NoPropagatingWave { .. }) => continue,
            Err(e) => return Err(e),
        };
        let h = HarmonicSet::solve(theta, sp.wavenumber, sp.frequency, env)?.air_field(altitude);
        let s = sp.source_strength() * (w * vessel.speed / (2.0 * PI));
        let (sin, cos) = theta.sin_cos();
        nodes.push(MapNode {
            coeff: [h[0] * s, h[1] * s, h[2] * s],
            k: sp.wavenumber,
            cos,
            sin,
            omega: sp.frequency,
        });
    }
    let xv = xs.values();
    let yv = ys.values();
    let mut values: Vec<f64> = yv
        .par_iter()
        .flat_map_iter(|&y| {
            let nodes = &nodes;
            xv.iter().map(move |&x| {
                let mut acc = [0.0; 3];
                for n in nodes {
                    let ph = Complex64::from_polar(1.0, -(n.omega * t + n.k * (x * n.cos + y * n.sin)));
                    for i in 0..3 {
                        acc[i] += (n.coeff[i] * ph).re;
                    }
                }
                (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt()
            })
        })
        .collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(FieldMap {
        xs: xv,
        ys: yv,
        values,
        peak,
    })
}
