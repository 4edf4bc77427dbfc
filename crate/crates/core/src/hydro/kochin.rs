//! Kochin function of the thin-ship source sheet:
//!
//! ```text
//! κ(θ) = ∬ ∂S/∂x'(x', z') cosh(k (z' + d)) e^{-i k x' cos θ} dx' dz'
//! ```
//!
//! over the centre plane `x' ∈ [−L/2, L/2]`, `z' ∈ [−h, 0]`. All routines
//! return `κ e^{-k d}`; `cosh(k(z'+d)) e^{-k d} = (e^{k z'} + e^{-k(z' + 2d)})/2`
//! never overflows.

use num_complex::Complex64;

use super::hull::DepthProfile;
use super::{HullModel, VesselParams};
use crate::error::Result;
use crate::quadrature::GaussLegendre;

/// Below this `|δ|` the bracket is summed from its Taylor series.
const BRACKET_SERIES_LIMIT: f64 = 0.1;
/// Below this `|k h|` depth integrals are summed from their Taylor series.
const DEPTH_SERIES_LIMIT: f64 = 2.0;

/// `cos(δ/2)/δ − 2 sin(δ/2)/δ²`, the longitudinal factor of a parabolic
/// waterline. Tends to `−δ/12` as `δ → 0`.
pub fn bracket(delta: f64) -> f64 {
    if delta.abs() < BRACKET_SERIES_LIMIT {
        // Σ_{m≥1} (−1)^m 2m δ^{2m−1} / (4^m (2m+1)!)
        let d2 = delta * delta;
        let mut sum = 0.0;
        let mut pow = delta; // δ^{2m-1}
        let mut fact = 6.0; // (2m+1)!
        let mut four = 4.0;
        for m in 1..8 {
            let mf = m as f64;
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            sum += sign * 2.0 * mf * pow / (four * fact);
            pow *= d2;
            fact *= (2.0 * mf + 2.0) * (2.0 * mf + 3.0);
            four *= 4.0;
        }
        sum
    } else {
        let half = 0.5 * delta;
        half.cos() / delta - 2.0 * half.sin() / (delta * delta)
    }
}

/// `d/dδ` of [`bracket`].
pub fn bracket_derivative(delta: f64) -> f64 {
    if delta.abs() < BRACKET_SERIES_LIMIT {
        // Σ_{m≥1} (−1)^m 2m(2m−1) δ^{2m−2} / (4^m (2m+1)!)
        let d2 = delta * delta;
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 6.0;
        let mut four = 4.0;
        for m in 1..8 {
            let mf = m as f64;
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            sum += sign * 2.0 * mf * (2.0 * mf - 1.0) * pow / (four * fact);
            pow *= d2;
            fact *= (2.0 * mf + 2.0) * (2.0 * mf + 3.0);
            four *= 4.0;
        }
        sum
    } else {
        let half = 0.5 * delta;
        let (s, c) = half.sin_cos();
        -s / (2.0 * delta) - 2.0 * c / (delta * delta) + 4.0 * s / delta.powi(3)
    }
}

/// x'-integral of `−8 S_0 x'/L² e^{-i k x' cos θ}` over the hull length.
fn longitudinal_factor(beam_coeff: f64, delta: f64) -> Complex64 {
    Complex64::new(0.0, -8.0 * beam_coeff * bracket(delta))
}

/// `J(y) = ∫_{−1}^{0} w(s) e^{y s} ds` by Taylor series (any sign of `y`).
fn profile_laplace_series(profile: DepthProfile, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // (−y)^n / n!
    for n in 0..40 {
        let nf = n as f64;
        let moment = match profile {
            DepthProfile::Uniform => 1.0 / (nf + 1.0),
            DepthProfile::Quadratic => 2.0 / ((nf + 1.0) * (nf + 3.0)),
        };
        sum += term * moment;
        term *= -y / (nf + 1.0);
    }
    sum
}

/// `e^{-kd} ∫_{−h}^{0} w(z/h) cosh(k(z + d)) dz`.
pub(crate) fn depth_factor_scaled(profile: DepthProfile, k: f64, draft: f64, depth: f64) -> f64 {
    let y = k * draft;
    let e2 = (-2.0 * k * depth).exp();
    let (up, down) = if y < DEPTH_SERIES_LIMIT {
        (
            profile_laplace_series(profile, y),
            e2 * profile_laplace_series(profile, -y),
        )
    } else {
        // down-going part carries e^{y − 2kd}; y < kd keeps it bounded.
        let ey = (y - 2.0 * k * depth).exp();
        match profile {
            DepthProfile::Uniform => (-(-y).exp_m1() / y, (ey - e2) / y),
            DepthProfile::Quadratic => {
                let (y2, y3) = (y * y, y * y * y);
                (
                    1.0 / y - 2.0 / y3 + (-y).exp() * (2.0 / y2 + 2.0 / y3),
                    e2 * (-1.0 / y + 2.0 / y3) + ey * (2.0 / y2 - 2.0 / y3),
                )
            }
        }
    };
    0.5 * draft * (up + down)
}

/// Closed-form `κ e^{-kd}` for hulls whose slope separates in x and z
/// (Wigley and parabolic). `None` for the prolate spheroid.
pub fn kochin_closed_form_scaled(
    theta: f64,
    hull: HullModel,
    p: &VesselParams,
    depth: f64,
    k: f64,
) -> Option<Complex64> {
    let profile = hull.depth_profile()?;
    let delta = k * p.length * theta.cos();
    Some(longitudinal_factor(p.beam_coeff, delta) * depth_factor_scaled(profile, k, p.draft, depth))
}

/// Parabolic-hull Kochin function, scaled by `e^{-kd}`:
/// `−8 i S_0 [cos(δ/2)/δ − 2 sin(δ/2)/δ²] · e^{-kd} (sinh(kd) − sinh(k(d − h)))/k`.
pub fn kochin_parabolic_scaled(theta: f64, p: &VesselParams, depth: f64, k: f64) -> Complex64 {
    let delta = k * p.length * theta.cos();
    longitudinal_factor(p.beam_coeff, delta) * depth_factor_scaled(DepthProfile::Uniform, k, p.draft, depth)
}

/// Parabolic-hull Kochin function without scaling. Overflows past `k d ≈ 700`.
pub fn kochin_parabolic(theta: f64, p: &VesselParams, depth: f64, k: f64) -> Complex64 {
    kochin_parabolic_scaled(theta, p, depth, k) * (k * depth).exp()
}

/// `∂/∂L` of [`kochin_parabolic_scaled`] with the draft tied to the length
/// through the fixed ratio `h/L`.
pub fn kochin_parabolic_scaled_dlength(theta: f64, p: &VesselParams, depth: f64, k: f64) -> Complex64 {
    let ratio = p.hull_ratio();
    let delta = k * p.length * theta.cos();
    let z = depth_factor_scaled(DepthProfile::Uniform, k, p.draft, depth);
    // d/dh of e^{-kd}(sinh kd − sinh k(d−h))/k = e^{-kd} cosh(k(d − h))
    let dz_dh = 0.5 * ((-k * p.draft).exp() + (-k * (2.0 * depth - p.draft)).exp());
    let dx_dl = Complex64::new(0.0, -8.0 * p.beam_coeff * bracket_derivative(delta) * delta / p.length);
    dx_dl * z + longitudinal_factor(p.beam_coeff, delta) * (dz_dh * ratio)
}

/// Tensor-product Gauss–Legendre rule over the hull centre plane.
#[derive(Debug, Clone, PartialEq)]
pub struct KochinRule {
    along: GaussLegendre,
    depth: GaussLegendre,
}

impl KochinRule {
    pub const DEFAULT_ALONG: usize = 64;
    pub const DEFAULT_DEPTH: usize = 32;

    pub fn new(along: usize, depth: usize) -> Result<Self> {
        Ok(Self {
            along: GaussLegendre::new(along)?,
            depth: GaussLegendre::new(depth)?,
        })
    }

    pub fn node_counts(&self) -> (usize, usize) {
        (self.along.len(), self.depth.len())
    }

    /// `κ e^{-kd}` by quadrature. Accurate while `δ = k L cos θ` stays well
    /// below the number of longitudinal nodes.
    pub fn evaluate_scaled(
        &self,
        theta: f64,
        hull: HullModel,
        p: &VesselParams,
        depth: f64,
        k: f64,
    ) -> Result<Complex64> {
        let q = k * theta.cos();
        let half = 0.5 * p.length;
        let phases: Vec<(f64, f64, Complex64)> = self
            .along
            .mapped(-half, half)
            .map(|(x, w)| (x, w, Complex64::from_polar(1.0, -q * x)))
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (z, wz) in self.depth.mapped(-p.draft, 0.0) {
            let cosh_scaled = 0.5 * ((k * z).exp() + (-k * (z + 2.0 * depth)).exp());
            let mut row = Complex64::new(0.0, 0.0);
            for &(x, wx, phase) in &phases {
                row += phase * (wx * hull.slope(p, x, z)?);
            }
            total += row * (wz * cosh_scaled);
        }
        Ok(total)
    }
}

impl Default for KochinRule {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ALONG, Self::DEFAULT_DEPTH).expect("default node counts are valid")
    }
}

/// How the Kochin function is evaluated inside the wake integral.
#[derive(Debug, Clone, PartialEq)]
pub enum KochinMethod {
    /// Closed form for separable hulls, quadrature for the rest.
    ClosedForm { fallback: KochinRule },
    /// Always integrate numerically.
    Quadrature(KochinRule),
}

impl Default for KochinMethod {
    fn default() -> Self {
        KochinMethod::ClosedForm {
            fallback: KochinRule::default(),
        }
    }
}

impl KochinMethod {
    pub fn evaluate_scaled(
        &self,
        theta: f64,
        hull: HullModel,
        p: &VesselParams,
        depth: f64,
        k: f64,
    ) -> Result<Complex64> {
        match self {
            KochinMethod::ClosedForm { fallback } => match kochin_closed_form_scaled(theta, hull, p, depth, k) {
                Some(v) => Ok(v),
                None => fallback.evaluate_scaled(theta, hull, p, depth, k),
            },
            KochinMethod::Quadrature(rule) => rule.evaluate_scaled(theta, hull, p, depth, k),
        }
    }
}
