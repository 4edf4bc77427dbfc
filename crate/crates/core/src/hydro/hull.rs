use std::fmt;
use std::str::FromStr;

use super::VesselParams;
use crate::error::{Error, Result};

/// Centre-plane hull forms `y = S(x, z)` over `x ∈ [−L/2, L/2]`,
/// `z ∈ [−h, 0]` (z is depth below the waterline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HullModel {
    Wigley,
    Parabolic,
    ProlateSpheroid,
}

impl HullModel {
    pub const ALL: [HullModel; 3] = [HullModel::Wigley, HullModel::Parabolic, HullModel::ProlateSpheroid];

    fn check(&self, p: &VesselParams, x: f64, z: f64) -> Result<()> {
        let half = 0.5 * p.length;
        let slack = 1e-12 * p.length.max(p.draft);
        if !(x.abs() <= half + slack) || !(z <= slack && z >= -p.draft - slack) {
            return Err(Error::domain(format!(
                "hull point ({x}, {z}) outside [-{half}, {half}] x [-{}, 0]",
                p.draft
            )));
        }
        Ok(())
    }

    /// Hull half-breadth `S(x, z)`.
    pub fn offset(&self, p: &VesselParams, x: f64, z: f64) -> Result<f64> {
        self.check(p, x, z)?;
        let u = 2.0 * x / p.length;
        let v = z / p.draft;
        let long = (1.0 - u * u).max(0.0);
        Ok(match self {
            HullModel::Wigley => p.beam_coeff * long * (1.0 - v * v).max(0.0),
            HullModel::Parabolic => p.beam_coeff * long,
            HullModel::ProlateSpheroid => {
                let r = p.beam_coeff * long - v * v;
                if r > 0.0 {
                    r.sqrt()
                } else {
                    0.0
                }
            }
        })
    }

    /// `∂S/∂x`, analytically.
    pub fn slope(&self, p: &VesselParams, x: f64, z: f64) -> Result<f64> {
        self.check(p, x, z)?;
        let l2 = p.length * p.length;
        let v = z / p.draft;
        let d_long = -8.0 * x / l2;
        Ok(match self {
            HullModel::Wigley => p.beam_coeff * d_long * (1.0 - v * v),
            HullModel::Parabolic => p.beam_coeff * d_long,
            HullModel::ProlateSpheroid => {
                let u = 2.0 * x / p.length;
                let r = p.beam_coeff * (1.0 - u * u) - v * v;
                if r > 0.0 {
                    0.5 * p.beam_coeff * d_long / r.sqrt()
                } else {
                    0.0
                }
            }
        })
    }

    /// The depth weighting `w(s)`, `s = z/h ∈ [−1, 0]`, for hulls whose slope
    /// factorises as `(−8 S_0 x / L²) · w(z/h)`.
    pub(crate) fn depth_profile(&self) -> Option<DepthProfile> {
        match self {
            HullModel::Wigley => Some(DepthProfile::Quadratic),
            HullModel::Parabolic => Some(DepthProfile::Uniform),
            HullModel::ProlateSpheroid => None,
        }
    }
}

/// Depth weighting of a separable hull slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DepthProfile {
    /// `w(s) = 1`
    Uniform,
    /// `w(s) = 1 − s²`
    Quadratic,
}

impl fmt::Display for HullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HullModel::Wigley => "wigley",
            HullModel::Parabolic => "parabolic",
            HullModel::ProlateSpheroid => "prolate",
        })
    }
}

impl FromStr for HullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wigley" => Ok(HullModel::Wigley),
            "parabolic" => Ok(HullModel::Parabolic),
            "prolate" | "prolate_spheroid" | "prolatespheroid" => Ok(HullModel::ProlateSpheroid),
            other => Err(Error::config(format!("unknown hull model '{other}'"))),
        }
    }
}
