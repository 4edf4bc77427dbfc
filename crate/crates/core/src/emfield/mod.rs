//! Magnetic field induced by a single Kelvin wave component in a three-layer
//! medium (air over conducting water over a conducting seabed).
//!
//! Each component is carried as `h(θ, z)`; horizontal derivatives act as
//! `∂/∂x → i k cos θ`, `∂/∂y → i k sin θ`, which is the convention under
//! which the forced-solution directions `(i cos θ, i sin θ, ±1)` are
//! divergence-free. Layer terms and their vertical dependence:
//!
//! ```text
//! air     z > 0      h_a e^{-β_a z}
//! water  −d < z ≤ 0  h_w+ e^{β_w z} + h_w− e^{-β_w z} + ĥ_w+ e^{k z} + ĥ_w− e^{-k z}
//! seabed  z ≤ −d     h_b e^{β_b (z + d)}
//! ```
//!
//! Coefficients of the growing-downward terms are stored referenced to the
//! seabed (multiplied by `e^{β_w d}` or `e^{k d}`) so nothing overflows for
//! large `k d`. See [`HarmonicSet`] for how the near-cancelling free and forced
//! water waves are represented.

mod harmonics;
pub mod linalg;

pub use harmonics::{
    air_seabed_harmonics, forced_harmonics, solve_fluid_xy, solve_fluid_z, FluidXY, FluidZ, ForcedHarmonics,
    HarmonicSet,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hydro::GRAVITY;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability (N/A²).
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// A complex 3-vector `(x, y, z)`.
pub type CVec3 = [Complex64; 3];

/// Electrical constants of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub permittivity: f64,
    pub permeability: f64,
    pub conductivity: f64,
}

impl Medium {
    pub fn new(relative_permittivity: f64, conductivity: f64) -> Self {
        Self {
            permittivity: relative_permittivity * EPSILON_0,
            permeability: MU_0,
            conductivity,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.permittivity > 0.0 && self.permeability > 0.0 && self.conductivity >= 0.0)
            || !(self.permittivity.is_finite() && self.permeability.is_finite() && self.conductivity.is_finite())
        {
            return Err(Error::domain(format!(
                "{name}: need permittivity, permeability > 0 and conductivity >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Sea depth, layer constants, geomagnetic field and gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    /// Sea depth `d` (m).
    pub depth: f64,
    pub air: Medium,
    pub water: Medium,
    pub seabed: Medium,
    /// Geomagnetic field `(x, y, z)` in tesla, `z` pointing up.
    pub geomagnetic: [f64; 3],
    pub gravity: f64,
}

impl EnvParams {
    /// Default field strength (T).
    pub const FIELD_STRENGTH: f64 = 5e-5;
    /// Default dip below the horizontal (degrees).
    pub const DIP_DEG: f64 = 60.0;
    /// Default declination (degrees).
    pub const DECLINATION_DEG: f64 = 0.0;

    /// Seawater over a wet sediment bed at the given depth, under a
    /// mid-latitude geomagnetic field.
    pub fn with_depth(depth: f64) -> Self {
        Self {
            depth,
            air: Medium::new(1.0, 0.0),
            water: Medium::new(81.0, 5.0),
            seabed: Medium::new(10.0, 0.025),
            geomagnetic: geomagnetic_vector(Self::FIELD_STRENGTH, Self::DIP_DEG, Self::DECLINATION_DEG),
            gravity: GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return Err(Error::domain(format!("sea depth must be positive, got {}", self.depth)));
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::domain(format!("gravity must be positive, got {}", self.gravity)));
        }
        self.air.validate("air")?;
        self.water.validate("water")?;
        self.seabed.validate("seabed")?;
        let b = self.geomagnetic;
        let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("geomagnetic field must be non-zero"));
        }
        Ok(())
    }
}

impl Default for EnvParams {
    fn default() -> Self {
        Self::with_depth(500.0)
    }
}

/// Geomagnetic vector from magnitude (T), dip below horizontal and
/// declination east of the x-axis (degrees). `z` is up, so positive dip gives
/// a negative vertical component.
pub fn geomagnetic_vector(magnitude: f64, dip_deg: f64, declination_deg: f64) -> [f64; 3] {
    let (sd, cd) = dip_deg.to_radians().sin_cos();
    let (sa, ca) = declination_deg.to_radians().sin_cos();
    [magnitude * cd * ca, magnitude * cd * sa, -magnitude * sd]
}

/// Vertical wavenumbers `β` of the three layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerConstants {
    pub air: Complex64,
    pub water: Complex64,
    pub seabed: Complex64,
    /// `k² − β_w² = ε_w μ_w ω² + i σ_w μ_w ω`, formed without cancellation.
    pub water_gap: Complex64,
    /// `β_w − k = −(k² − β_w²)/(β_w + k)`.
    pub water_shift: Complex64,
}

/// Square root with `Re ≥ 0`, and `Im ≤ 0` when the real part vanishes.
fn decaying_sqrt(z: Complex64) -> Complex64 {
    let mut s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im > 0.0) {
        s = -s;
    }
    s
}

fn gap(omega: f64, m: &Medium) -> Complex64 {
    Complex64::new(
        m.permittivity * m.permeability * omega * omega,
        m.conductivity * m.permeability * omega,
    )
}

fn beta(k: f64, omega: f64, m: &Medium) -> Complex64 {
    decaying_sqrt(Complex64::new(k * k, 0.0) - gap(omega, m))
}

/// `β² = k² − ε μ ω² − i σ μ ω` per layer, on the decaying branch.
pub fn propagation_constants(k: f64, omega: f64, env: &EnvParams) -> LayerConstants {
    let water = beta(k, omega, &env.water);
    let water_gap = gap(omega, &env.water);
    LayerConstants {
        air: beta(k, omega, &env.air),
        water,
        seabed: beta(k, omega, &env.seabed),
        water_gap,
        water_shift: -water_gap / (water + k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_field_components() {
        let b = EnvParams::default().geomagnetic;
        assert!((b[0] - 2.5e-5).abs() < 1e-18);
        assert_eq!(b[1], 0.0);
        assert!((b[2] + 4.330_127_018_922_193e-5).abs() < 1e-18);
    }

    #[test]
    fn validation() {
        assert!(EnvParams::default().validate().is_ok());
        assert!(EnvParams::with_depth(0.0).validate().is_err());
        let e = EnvParams {
            geomagnetic: [0.0; 3],
            ..EnvParams::default()
        };
        assert!(e.validate().is_err());
        let mut e = EnvParams::default();
        e.water.conductivity = -1.0;
        assert!(e.validate().is_err());
    }

    #[test]
    fn air_is_quasi_static() {
        let env = EnvParams::default();
        let (k, omega) = (0.1, 1.0);
        let lc = propagation_constants(k, omega, &env);
        assert!((lc.air - k).norm() / k < 1e-9);
        assert_eq!(lc.air.im, 0.0);
    }

    #[test]
    fn water_constant_matches_direct_arithmetic() {
        let env = EnvParams::default();
        let lc = propagation_constants(0.1, 1.0, &env);
        let want_sq = Complex64::new(0.01 - 81.0 * EPSILON_0 * MU_0, -5.0 * MU_0);
        assert!((lc.water * lc.water - want_sq).norm() < 1e-16);
        assert!(lc.water.re > 0.0 && lc.water.im < 0.0);
    }

    #[test]
    fn shift_matches_direct_difference() {
        let env = EnvParams::default();
        let lc = propagation_constants(0.3, 1.7, &env);
        let direct = lc.water - 0.3;
        assert!((lc.water_shift - direct).norm() < 1e-9 * direct.norm());
        assert!((0.09 - lc.water * lc.water - lc.water_gap).norm() < 1e-15);
    }

    #[test]
    fn conductivity_ordering() {
        let env = EnvParams::default();
        let lc = propagation_constants(0.05, 0.7, &env);
        assert!(lc.seabed.im.abs() < lc.water.im.abs());
    }

    #[test]
    fn branch_tie_break() {
        let s = decaying_sqrt(Complex64::new(-4.0, 0.0));
        assert_eq!(s, Complex64::new(0.0, -2.0));
        let s = decaying_sqrt(Complex64::new(-4.0, -0.0));
        assert_eq!(s.re, 0.0);
        assert!(s.im < 0.0);
    }
}
