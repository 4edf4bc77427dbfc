//! Magnetic wake seen by an airborne sensor: the θ-integral of the spectral
//! field, evaluated either on a deterministic Gauss–Legendre rule or on Monte
//! Carlo draws, plus 2D field maps and noise injection.
//!
//! For a sensor starting at `(x_0, y_0, h_0)` and flying at `V_0` along angle
//! `α` relative to the vessel track, sample `t` is
//!
//! ```text
//! H(t) = Re ∫ (V_s/2π) h_a(θ) e^{-β_a h_0} A(θ) κ(θ) e^{-i(ω_1 t + ω_2 t + ω_3)} dθ
//! ω_1 = ω_0 − k V_s cos θ           (zero on the dispersion curve)
//! ω_2 = k V_0 cos(θ − α)
//! ω_3 = k (x_0 cos θ + y_0 sin θ)
//! ```
//!
//! Everything θ-dependent is collected once per node into a [`WakeSpectrum`];
//! each time sample is then a single complex sum.

mod field_map;
mod monte_carlo;
mod noise;

pub use field_map::{wake_field_2d, FieldMap, GridAxis};
pub use monte_carlo::{mc_integral, mc_nodes};
pub use noise::{add_noise, add_noise_detailed, realized_snr_db};

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::emfield::{CVec3, EnvParams, HarmonicSet};
use crate::error::{Error, Result};
use crate::hydro::{HullModel, KochinMethod, SpectralPoint, VesselParams};
use crate::quadrature::CompositeRule;

/// Airborne scan kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    /// Sensor ground speed `V_0` (m/s).
    pub speed: f64,
    /// Sampling rate `f_0` (Hz).
    pub sample_rate: f64,
    /// Altitude `h_0` above the sea surface (m).
    pub altitude: f64,
    /// Start position `x_0` (m), positive astern of the vessel.
    pub x0: f64,
    /// Start position `y_0` (m).
    pub y0: f64,
    /// Number of samples `K`.
    pub samples: usize,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            speed: 20.0,
            sample_rate: 10.0,
            altitude: 50.0,
            x0: 1000.0,
            y0: 200.0,
            samples: 15,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("speed", self.speed),
            ("sample rate", self.sample_rate),
            ("altitude", self.altitude),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("sensor {name} must be positive, got {v}")));
            }
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::domain("sensor start position must be finite"));
        }
        if self.samples < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {}", self.samples)));
        }
        Ok(())
    }

    /// Also checks that the sensor outruns the vessel.
    pub fn validate_for(&self, vessel: &VesselParams) -> Result<()> {
        self.validate()?;
        if !(self.speed > vessel.speed) {
            return Err(Error::domain(format!(
                "sensor speed {} must exceed vessel speed {}",
                self.speed, vessel.speed
            )));
        }
        Ok(())
    }

    /// Sample instants `k / f_0`, `k = 0..K`.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples).map(move |i| i as f64 / self.sample_rate)
    }
}

/// θ-integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Total Gauss–Legendre nodes (16-point panels).
    pub nodes: usize,
    /// The θ-domain is `[−π/2 + clip, π/2 − clip]`.
    pub clip: f64,
    /// Monte Carlo draws for the physics-informed loss.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 2048,
            clip: 1e-3,
            mc_samples: 256,
            seed: 0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(Error::config(format!(
                "quadrature needs at least 8 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.clip > 0.0 && self.clip < 0.1) {
            return Err(Error::config(format!(
                "angle clip must lie in (0, 0.1), got {}",
                self.clip
            )));
        }
        if self.mc_samples < 1 {
            return Err(Error::config("Monte Carlo sample count must be at least 1"));
        }
        Ok(())
    }

    /// `(lo, hi)` of the clipped θ-domain.
    pub fn domain(&self) -> (f64, f64) {
        (-FRAC_PI_2 + self.clip, FRAC_PI_2 - self.clip)
    }

    pub fn rule(&self) -> Result<CompositeRule> {
        self.validate()?;
        let (lo, hi) = self.domain();
        CompositeRule::with_total_nodes(lo, hi, self.nodes)
    }
}

/// Everything needed to synthesise a sensor track.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub vessel: VesselParams,
    pub env: EnvParams,
    pub sensor: SensorParams,
    pub hull: HullModel,
    pub kochin: KochinMethod,
}

impl Scenario {
    pub fn new(vessel: VesselParams, env: EnvParams, sensor: SensorParams, hull: HullModel) -> Self {
        Self {
            vessel,
            env,
            sensor,
            hull,
            kochin: KochinMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.vessel.validate()?;
        self.env.validate()?;
        self.sensor.validate_for(&self.vessel)
    }
}

/// Where a series came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Clean,
    Noisy { snr_db: f64 },
}

/// `K` magnitudes `‖H(k/f_0)‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeSeries {
    pub samples: Vec<f64>,
    pub t_start: f64,
    pub sample_rate: f64,
    pub provenance: Provenance,
}

impl WakeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of the squared samples.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

/// One θ-node of the wake integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNode {
    pub theta: f64,
    pub weight: f64,
    pub wavenumber: f64,
    /// `ω_0 = k V_s cos θ`.
    pub omega0: f64,
    /// `ω_0 − k V_s cos θ`, recomputed from the solved wavenumber.
    pub omega1: f64,
    /// `weight · (V_s/2π) h_a e^{-β_a h_0} A e^{-i ω_3}`; the wake
    /// coefficient without the Kochin factor.
    pub carrier: CVec3,
    /// `κ e^{-k d}`, paired with the `e^{k d}` carried by `A` in `carrier`.
    pub kochin_scaled: Complex64,
    /// `ω_1 + ω_2`: phase advance per second.
    pub rate: f64,
}

impl SpectralNode {
    /// Full wake coefficient `carrier · κ`.
    pub fn coefficient(&self) -> CVec3 {
        let k = self.kochin_scaled;
        [self.carrier[0] * k, self.carrier[1] * k, self.carrier[2] * k]
    }
}

/// Per-node wake coefficients for a scenario on a given θ rule.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeSpectrum {
    pub nodes: Vec<SpectralNode>,
}

/// Solves one spectral node. `Ok(None)` for an angle with no propagating wave.
fn solve_node(theta: f64, weight: f64, sc: &Scenario) -> Result<Option<SpectralNode>> {
    let v = &sc.vessel;
    let sp = match SpectralPoint::solve(theta, v, sc.hull, sc.env.depth, sc.env.gravity, &sc.kochin) {
        Ok(sp) => sp,
        Err(Error::NoPropagatingWave { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let k = sp.wavenumber;
    let set = HarmonicSet::solve(theta, k, sp.frequency, &sc.env)?;
    let h = set.air_field(sc.sensor.altitude);
    let (s, c) = theta.sin_cos();
    let omega1 = sp.frequency - k * v.speed * c;
    let omega2 = k * sc.sensor.speed * (theta - v.track_angle).cos();
    let omega3 = k * (sc.sensor.x0 * c + sc.sensor.y0 * s);
    let scale = Complex64::from_polar(weight * v.speed / (2.0 * PI) * sp.amplitude_scaled, -omega3);
    Ok(Some(SpectralNode {
        theta,
        weight,
        wavenumber: k,
        omega0: sp.frequency,
        omega1,
        carrier: [h[0] * scale, h[1] * scale, h[2] * scale],
        kochin_scaled: sp.kochin_scaled,
        rate: omega1 + omega2,
    }))
}

impl WakeSpectrum {
    pub fn build(thetas: &[f64], weights: &[f64], sc: &Scenario) -> Result<Self> {
        if thetas.len() != weights.len() {
            return Err(Error::Shape {
                expected: thetas.len(),
                found: weights.len(),
            });
        }
        let mut nodes = Vec::with_capacity(thetas.len());
        for (&t, &w) in thetas.iter().zip(weights) {
            if let Some(n) = solve_node(t, w, sc)? {
                nodes.push(n);
            }
        }
        Ok(Self { nodes })
    }

    /// On the deterministic rule of `quad`.
    pub fn deterministic(sc: &Scenario, quad: &QuadratureConfig) -> Result<Self> {
        let rule = quad.rule()?;
        Self::build(&rule.nodes, &rule.weights, sc)
    }

    /// `H(t) = Re Σ coefficient · e^{-i rate t}`.
    pub fn field(&self, t: f64) -> [f64; 3] {
        field_from(self.nodes.iter().map(|n| (n.coefficient(), n.rate)), t)
    }

    /// `‖H(t)‖` at every sensor instant.
    pub fn magnitudes(&self, sensor: &SensorParams) -> Vec<f64> {
        let coeffs: Vec<(CVec3, f64)> = self.nodes.iter().map(|n| (n.coefficient(), n.rate)).collect();
        sensor
            .times()
            .map(|t| {
                let h = field_from(coeffs.iter().copied(), t);
                (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt()
            })
            .collect()
    }

    /// Largest `|ω_1| / ω_0` over all nodes.
    pub fn max_dispersion_defect(&self) -> f64 {
        self.nodes.iter().map(|n| n.omega1.abs() / n.omega0).fold(0.0, f64::max)
    }
}

pub(crate) fn field_from(terms: impl Iterator<Item = (CVec3, f64)>, t: f64) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for (c, rate) in terms {
        let ph = Complex64::from_polar(1.0, -rate * t);
        for i in 0..3 {
            acc[i] += (c[i] * ph).re;
        }
    }
    acc
}

/// The θ-integrand `G(θ, t) F(θ)` at a single angle.
pub fn spectral_integrand(theta: f64, t: f64, sc: &Scenario) -> Result<CVec3> {
    Ok(match solve_node(theta, 1.0, sc)? {
        Some(n) => {
            let ph = Complex64::from_polar(1.0, -n.rate * t);
            let c = n.coefficient();
            [c[0] * ph, c[1] * ph, c[2] * ph]
        }
        None => [Complex64::new(0.0, 0.0); 3],
    })
}

/// Clean sensor series on the deterministic rule.
pub fn sensor_series(sc: &Scenario, quad: &QuadratureConfig) -> Result<WakeSeries> {
    sc.validate()?;
    let spectrum = WakeSpectrum::deterministic(sc, quad)?;
    Ok(WakeSeries {
        samples: spectrum.magnitudes(&sc.sensor),
        t_start: 0.0,
        sample_rate: sc.sensor.sample_rate,
        provenance: Provenance::Clean,
    })
}

/// [`sensor_series`] plus a node-doubling check; logs a warning and returns
/// the relative change when doubling shifts the series by more than `1e-4`.
pub fn sensor_series_checked(sc: &Scenario, quad: &QuadratureConfig) -> Result<(WakeSeries, f64)> {
    let coarse = sensor_series(sc, quad)?;
    let fine_cfg = QuadratureConfig {
        nodes: 2 * quad.nodes,
        ..*quad
    };
    let fine = sensor_series(sc, &fine_cfg)?;
    let scale = fine.samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let shift = coarse
        .samples
        .iter()
        .zip(&fine.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let rel = if scale > 0.0 { shift / scale } else { 0.0 };
    if rel > 1e-4 {
        log::warn!("wake quadrature not converged: doubling nodes shifts the series by {rel:.2e} relative");
    }
    Ok((coarse, rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::DEFAULT_HULL_RATIO;

    pub(crate) fn scenario(length: f64, speed: f64, alpha_deg: f64, depth: f64, s0: f64) -> Scenario {
        let v = VesselParams::with_hull_ratio(length, DEFAULT_HULL_RATIO, s0, speed, alpha_deg.to_radians()).unwrap();
        Scenario::new(
            v,
            EnvParams::with_depth(depth),
            SensorParams::default(),
            HullModel::Wigley,
        )
    }

    fn norm(h: &CVec3) -> f64 {
        h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            nodes: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            clip: 0.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            mc_samples: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let s = SensorParams {
            samples: 1,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        let slow = SensorParams {
            speed: 5.0,
            ..Default::default()
        };
        assert!(slow.validate_for(&sc.vessel).is_err());
    }

    #[test]
    fn dispersion_identity_holds_at_every_node() {
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        let spec = WakeSpectrum::deterministic(&sc, &QuadratureConfig::default()).unwrap();
        assert_eq!(spec.nodes.len(), 2048);
        assert!(spec.max_dispersion_defect() < 1e-10);
    }

    #[test]
    fn zero_phase_at_origin() {
        let mut sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        sc.sensor.x0 = 0.0;
        sc.sensor.y0 = 0.0;
        let n = solve_node(0.3, 1.0, &sc).unwrap().unwrap();
        let set = HarmonicSet::solve(0.3, n.wavenumber, n.omega0, &sc.env).unwrap();
        let h = set.air_field(sc.sensor.altitude);
        let sp = SpectralPoint::solve(0.3, &sc.vessel, sc.hull, sc.env.depth, sc.env.gravity, &sc.kochin).unwrap();
        let pref = sc.vessel.speed / (2.0 * PI) * sp.amplitude_scaled;
        let got = spectral_integrand(0.3, 0.0, &sc).unwrap();
        for i in 0..3 {
            let want = h[i] * pref * sp.kochin_scaled;
            assert!((got[i] - want).norm() <= 1e-15 * want.norm());
        }
    }

    #[test]
    fn phase_rate_is_linear_in_sensor_speed() {
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        let mut fast = sc.clone();
        fast.sensor.speed *= 2.0;
        let theta = 0.4;
        let dt = 1.0 / sc.sensor.sample_rate;
        let advance = |s: &Scenario| {
            let a = spectral_integrand(theta, 0.0, s).unwrap()[2];
            let b = spectral_integrand(theta, dt, s).unwrap()[2];
            -(b / a).arg()
        };
        let n = solve_node(theta, 1.0, &sc).unwrap().unwrap();
        let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
        let expect = n.rate * dt;
        assert!((wrap(advance(&sc) - expect)).abs() < 1e-9);
        assert!((wrap(advance(&fast) - 2.0 * expect)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_hull_gives_zero_series() {
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 0.0);
        let s = sensor_series(&sc, &QuadratureConfig::default()).unwrap();
        assert!(s.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn series_scales_with_geomagnetic_field() {
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        let mut sc3 = sc.clone();
        sc3.env.geomagnetic = sc.env.geomagnetic.map(|b| 3.0 * b);
        let a = sensor_series(&sc, &QuadratureConfig::default()).unwrap();
        let b = sensor_series(&sc3, &QuadratureConfig::default()).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((y - 3.0 * x).abs() <= 1e-13 * y.abs());
        }
    }

    #[test]
    fn node_doubling_converges_on_interior_point() {
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        let (s, rel) = sensor_series_checked(&sc, &QuadratureConfig::default()).unwrap();
        assert_eq!(s.len(), 15);
        assert!(rel < 1e-4, "{rel}");
    }

    /// Adaptive Simpson on a complex 3-vector, independent of the batched
    /// spectrum code path.
    fn adaptive(f: &dyn Fn(f64) -> CVec3, a: f64, b: f64, tol: f64) -> CVec3 {
        fn simpson(fa: &CVec3, fm: &CVec3, fb: &CVec3, h: f64) -> CVec3 {
            let mut out = [Complex64::new(0.0, 0.0); 3];
            for i in 0..3 {
                out[i] = (fa[i] + 4.0 * fm[i] + fb[i]) * (h / 6.0);
            }
            out
        }
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> CVec3,
            a: f64,
            b: f64,
            fa: CVec3,
            fm: CVec3,
            fb: CVec3,
            whole: CVec3,
            tol: f64,
            depth: u32,
        ) -> CVec3 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = simpson(&fa, &flm, &fm, m - a);
            let right = simpson(&fm, &frm, &fb, b - m);
            let mut err = 0.0f64;
            let mut sum = [Complex64::new(0.0, 0.0); 3];
            for i in 0..3 {
                sum[i] = left[i] + right[i];
                err = err.max((sum[i] - whole[i]).norm());
            }
            if depth > 40 || err <= 15.0 * tol {
                for i in 0..3 {
                    sum[i] += (sum[i] - whole[i]) / 15.0;
                }
                return sum;
            }
            let l = rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1);
            let r = rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
            [l[0] + r[0], l[1] + r[1], l[2] + r[2]]
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = simpson(&fa, &fm, &fb, b - a);
        rec(f, a, b, fa, fm, fb, whole, tol, 0)
    }

    #[test]
    fn matches_adaptive_quadrature_oracle() {
        let sc = scenario(150.0, 8.0, 10.0, 500.0, 2000.0);
        let quad = QuadratureConfig::default();
        let series = sensor_series(&sc, &quad).unwrap();
        let (lo, hi) = quad.domain();
        for (i, t) in sc.sensor.times().enumerate().step_by(7) {
            let f = |th: f64| spectral_integrand(th, t, &sc).unwrap();
            // Scale for the absolute tolerance: peak integrand magnitude.
            let peak = (0..200)
                .map(|j| norm(&f(lo + (hi - lo) * j as f64 / 199.0)))
                .fold(0.0, f64::max);
            let v = adaptive(&f, lo, hi, 1e-9 * peak);
            let oracle = (v[0].re.powi(2) + v[1].re.powi(2) + v[2].re.powi(2)).sqrt();
            let got = series.samples[i];
            assert!((got - oracle).abs() < 1e-4 * oracle, "t = {t}: {got} vs {oracle}");
        }
    }
}
