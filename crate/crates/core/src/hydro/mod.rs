//! Hydrodynamics of the far-field (Kelvin) wake in water of finite depth.
//!
//! Everything here is a pure function of immutable inputs. Quantities that
//! grow or decay like `e^{±k d}` are carried in scaled form: the spectral
//! amplitude is stored as `A e^{k d}` and the Kochin function as
//! `κ e^{-k d}`, so their product (the physically meaningful source
//! strength) stays finite for any `k d`.

mod dispersion;
mod hull;
mod kochin;
mod potential;

pub use dispersion::{amplitude, amplitude_scaled, dispersion_residual, solve_dispersion};
pub use hull::HullModel;
pub use kochin::{
    bracket, bracket_derivative, kochin_closed_form_scaled, kochin_parabolic, kochin_parabolic_scaled,
    kochin_parabolic_scaled_dlength, KochinMethod, KochinRule,
};
pub use potential::{depth_ratio, velocity, velocity_potential};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Standard gravity used unless an environment overrides it (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Draft-to-length ratio used when a vessel is built from its length alone.
pub const DEFAULT_HULL_RATIO: f64 = 0.05;

/// The unknowns of the estimation problem: hull length, draft, hull
/// amplitude coefficient, speed, and sensor-track angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselParams {
    /// Hull length `L_s` (m).
    pub length: f64,
    /// Draft `h_s` (m).
    pub draft: f64,
    /// Hull amplitude coefficient `S_0`. Kept as an opaque positive scale.
    pub beam_coeff: f64,
    /// Vessel speed `V_s` (m/s).
    pub speed: f64,
    /// Angle of the sensor track relative to the vessel track (rad).
    pub track_angle: f64,
}

impl VesselParams {
    pub fn new(length: f64, draft: f64, beam_coeff: f64, speed: f64, track_angle: f64) -> Result<Self> {
        let p = Self {
            length,
            draft,
            beam_coeff,
            speed,
            track_angle,
        };
        p.validate()?;
        Ok(p)
    }

    /// Vessel whose draft is a fixed fraction `hull_ratio` of its length.
    pub fn with_hull_ratio(
        length: f64,
        hull_ratio: f64,
        beam_coeff: f64,
        speed: f64,
        track_angle: f64,
    ) -> Result<Self> {
        if !(hull_ratio > 0.0 && hull_ratio.is_finite()) {
            return Err(Error::domain(format!("hull ratio must be positive, got {hull_ratio}")));
        }
        Self::new(length, hull_ratio * length, beam_coeff, speed, track_angle)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("length", self.length), ("draft", self.draft), ("speed", self.speed)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("vessel {name} must be positive, got {v}")));
            }
        }
        // S_0 = 0 is a legitimate degenerate hull (no wake at all).
        if !(self.beam_coeff >= 0.0 && self.beam_coeff.is_finite()) {
            return Err(Error::domain(format!(
                "hull amplitude must be non-negative, got {}",
                self.beam_coeff
            )));
        }
        if !(self.track_angle.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::domain(format!(
                "track angle must satisfy |alpha| < pi/2, got {}",
                self.track_angle
            )));
        }
        Ok(())
    }

    /// Draft divided by length.
    pub fn hull_ratio(&self) -> f64 {
        self.draft / self.length
    }
}

/// One plane-wave component of the Kelvin wake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    /// Wavefront angle θ (rad).
    pub theta: f64,
    /// Wavenumber `k_0` (1/m).
    pub wavenumber: f64,
    /// Encounter frequency `ω_0 = k_0 V_s cos θ` (rad/s).
    pub frequency: f64,
    /// Sea depth the point was solved for (m).
    pub depth: f64,
    /// `A(θ) e^{k_0 d}`.
    pub amplitude_scaled: f64,
    /// `κ(θ) e^{-k_0 d}`.
    pub kochin_scaled: Complex64,
}

impl SpectralPoint {
    /// Solves the dispersion relation at `theta` and evaluates the spectral
    /// amplitude and Kochin function for `vessel`.
    pub fn solve(
        theta: f64,
        vessel: &VesselParams,
        hull: HullModel,
        depth: f64,
        gravity: f64,
        kochin: &KochinMethod,
    ) -> Result<Self> {
        let k = solve_dispersion(theta, vessel.speed, depth, gravity)?;
        let omega = k * vessel.speed * theta.cos();
        let amplitude_scaled = amplitude_scaled(theta, k, omega, vessel.speed, depth, gravity)?;
        let kochin_scaled = kochin.evaluate_scaled(theta, hull, vessel, depth, k)?;
        Ok(Self {
            theta,
            wavenumber: k,
            frequency: omega,
            depth,
            amplitude_scaled,
            kochin_scaled,
        })
    }

    /// `A(θ)`; underflows to zero for very large `k d`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude_scaled * (-self.wavenumber * self.depth).exp()
    }

    /// `κ(θ)`; overflows for very large `k d`.
    pub fn kochin(&self) -> Complex64 {
        self.kochin_scaled * (self.wavenumber * self.depth).exp()
    }

    /// `Ã(θ) = A(θ) κ(θ)`, computed from the scaled factors.
    pub fn source_strength(&self) -> Complex64 {
        self.kochin_scaled * self.amplitude_scaled
    }

    /// Relative dispersion residual of this point.
    pub fn dispersion_residual(&self, speed: f64, gravity: f64) -> f64 {
        dispersion_residual(self.wavenumber, self.theta, speed, self.depth, gravity)
    }
}
