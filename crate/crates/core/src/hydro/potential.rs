//! Velocity potential of a single Kelvin wave component and the fluid
//! velocity it induces. Diagnostics only; the wake integral never needs them.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::SpectralPoint;
use crate::error::{Error, Result};

/// `cosh(k (z + d)) / cosh(k d)` for `−d ≤ z ≤ 0`, without overflow.
pub fn depth_ratio(k: f64, z: f64, depth: f64) -> f64 {
    (k * z).exp() * (1.0 + (-2.0 * k * (z + depth)).exp()) / (1.0 + (-2.0 * k * depth).exp())
}

/// `sinh(k (z + d)) / cosh(k d)`.
fn depth_ratio_sinh(k: f64, z: f64, depth: f64) -> f64 {
    (k * z).exp() * -(-2.0 * k * (z + depth)).exp_m1() / (1.0 + (-2.0 * k * depth).exp())
}

fn check_column(z: f64, depth: f64) -> Result<()> {
    if !(z <= 0.0 && z >= -depth) {
        return Err(Error::domain(format!("z = {z} outside the water column [-{depth}, 0]")));
    }
    Ok(())
}

/// Common factor `(V_s/2π) A κ g / ω_0 · e^{-i(ω_0 t + k x cos θ + k y sin θ)}`.
fn carrier(sp: &SpectralPoint, speed: f64, gravity: f64, x: f64, y: f64, t: f64) -> Complex64 {
    let k = sp.wavenumber;
    let (s, c) = sp.theta.sin_cos();
    let phase = sp.frequency * t + k * x * c + k * y * s;
    sp.source_strength() * (speed / (2.0 * PI) * gravity / sp.frequency) * Complex64::from_polar(1.0, -phase)
}

/// The complex potential `φ(x, y, z, t)` of the component `sp` for a vessel at
/// `speed`. The hull source intensity carries its `V_s/2π` factor here.
pub fn velocity_potential(
    sp: &SpectralPoint,
    speed: f64,
    gravity: f64,
    x: f64,
    y: f64,
    z: f64,
    t: f64,
) -> Result<Complex64> {
    check_column(z, sp.depth)?;
    Ok(carrier(sp, speed, gravity, x, y, t) * depth_ratio(sp.wavenumber, z, sp.depth))
}

/// `∇φ`, differentiated analytically.
pub fn velocity(
    sp: &SpectralPoint,
    speed: f64,
    gravity: f64,
    x: f64,
    y: f64,
    z: f64,
    t: f64,
) -> Result<[Complex64; 3]> {
    check_column(z, sp.depth)?;
    let k = sp.wavenumber;
    let (s, c) = sp.theta.sin_cos();
    let base = carrier(sp, speed, gravity, x, y, t);
    let horizontal = base * depth_ratio(k, z, sp.depth);
    let minus_ik = Complex64::new(0.0, -k);
    Ok([
        horizontal * minus_ik * c,
        horizontal * minus_ik * s,
        base * (k * depth_ratio_sinh(k, z, sp.depth)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::{HullModel, KochinMethod, VesselParams, GRAVITY};

    fn point() -> (SpectralPoint, VesselParams) {
        let v = VesselParams::with_hull_ratio(120.0, 0.05, 1500.0, 6.0, 0.0).unwrap();
        let sp = SpectralPoint::solve(0.35, &v, HullModel::Wigley, 40.0, GRAVITY, &KochinMethod::default()).unwrap();
        (sp, v)
    }

    #[test]
    fn surface_and_bottom_ratios() {
        assert_eq!(depth_ratio(0.3, 0.0, 50.0), 1.0);
        let (k, d) = (0.07f64, 30.0);
        let want = 1.0 / (k * d).cosh();
        assert!((depth_ratio(k, -d, d) - want).abs() < 1e-15 * want);
        // Still finite where cosh(k d) alone overflows.
        assert!(depth_ratio(2.0, -5.0, 3000.0).is_finite());
    }

    #[test]
    fn outside_water_column_is_rejected() {
        let (sp, v) = point();
        assert!(velocity_potential(&sp, v.speed, GRAVITY, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(velocity(&sp, v.speed, GRAVITY, 0.0, 0.0, -41.0, 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (sp, v) = point();
        let (x, y, z, t) = (13.0, -7.0, -11.0, 0.4);
        let phi = |x: f64, y: f64, z: f64| velocity_potential(&sp, v.speed, GRAVITY, x, y, z, t).unwrap();
        let h = 1e-4;
        let fd = [
            (phi(x + h, y, z) - phi(x - h, y, z)) / (2.0 * h),
            (phi(x, y + h, z) - phi(x, y - h, z)) / (2.0 * h),
            (phi(x, y, z + h) - phi(x, y, z - h)) / (2.0 * h),
        ];
        let an = velocity(&sp, v.speed, GRAVITY, x, y, z, t).unwrap();
        for i in 0..3 {
            assert!(
                (an[i] - fd[i]).norm() < 1e-6 * an[i].norm(),
                "component {i}: {} vs {}",
                an[i],
                fd[i]
            );
        }
    }
}
