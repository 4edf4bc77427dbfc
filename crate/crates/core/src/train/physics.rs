//! Forward-model head of the physics-informed loss: predicted sensor
//! magnitudes for an estimated parameter vector, and their sensitivities.

use crate::dataset::NormalizationSpec;
use crate::emfield::{CVec3, EnvParams};
use crate::error::{Error, Result};
use crate::hydro::{kochin_parabolic_scaled_dlength, HullModel, VesselParams, DEFAULT_HULL_RATIO};
use crate::wake::{field_from, mc_nodes, Scenario, SensorParams, SpectralNode, WakeSpectrum};

/// Fixed physics shared by every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsContext {
    /// Template environment; depth comes from each sample.
    pub env: EnvParams,
    pub sensor: SensorParams,
    pub hull: HullModel,
    pub hull_ratio: f64,
    pub clip: f64,
    /// Estimates are clamped into these bounds before evaluation.
    pub bounds: NormalizationSpec,
}

impl Default for PhysicsContext {
    fn default() -> Self {
        Self {
            env: EnvParams::default(),
            sensor: SensorParams::default(),
            hull: HullModel::Wigley,
            hull_ratio: DEFAULT_HULL_RATIO,
            clip: 1e-3,
            bounds: NormalizationSpec::default(),
        }
    }
}

/// How `∂/∂L_s` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthDerivative {
    #[default]
    FiniteDifference,
    /// Closed-form derivative of the Kochin function; parabolic hull only.
    Analytic,
}

/// Relative finite-difference step, as a fraction of each parameter's span.
pub const FD_STEP: f64 = 1e-4;

impl PhysicsContext {
    fn scenario(&self, p: &[f64; 4], depth: f64) -> Result<Scenario> {
        let vessel = VesselParams::with_hull_ratio(p[0], self.hull_ratio, p[1], p[2], p[3])?;
        Ok(Scenario::new(
            vessel,
            EnvParams { depth, ..self.env },
            self.sensor,
            self.hull,
        ))
    }

    fn spectrum(&self, p: &[f64; 4], depth: f64, thetas: &[f64], weights: &[f64]) -> Result<WakeSpectrum> {
        let sc = self.scenario(p, depth)?;
        sc.validate()?;
        WakeSpectrum::build(thetas, weights, &sc)
    }
}

fn magnitudes(terms: &[(CVec3, f64)], sensor: &SensorParams) -> Vec<f64> {
    sensor
        .times()
        .map(|t| {
            let h = field_from(terms.iter().copied(), t);
            (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt()
        })
        .collect()
}

fn terms(nodes: &[SpectralNode]) -> Vec<(CVec3, f64)> {
    nodes.iter().map(|n| (n.coefficient(), n.rate)).collect()
}

/// Predicted magnitudes at the `K` sensor instants for physical parameters
/// `p = (L_s, S_0, V_s, α)`, clamped into the context bounds, using `n_mc`
/// Monte Carlo angles drawn from `seed` and shared across instants.
pub fn physics_head(p: &[f64; 4], depth: f64, ctx: &PhysicsContext, n_mc: usize, seed: u64) -> Result<Vec<f64>> {
    let (p, _) = ctx.bounds.clamp(p);
    let (thetas, weights) = mc_nodes(n_mc, ctx.clip, seed)?;
    let spec = ctx.spectrum(&p, depth, &thetas, &weights)?;
    Ok(magnitudes(&terms(&spec.nodes), &ctx.sensor))
}

/// Predicted magnitudes and their sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadJacobian {
    pub values: Vec<f64>,
    /// `jacobian[k][j] = ∂ values[k] / ∂ p[j]`; zero for clamped components.
    pub jacobian: Vec<[f64; 4]>,
    /// Components left untouched by the clamp.
    pub inside: [bool; 4],
}

fn central(plus: &[f64], minus: &[f64], h: f64) -> Vec<f64> {
    plus.iter().zip(minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// [`physics_head`] plus `∂/∂(L_s, S_0, V_s, α)`. `S_0` is exact (the field is
/// linear in it); `V_s` and `α` use central differences with step
/// [`FD_STEP`] times the parameter span, on the same angle draw; `L_s` uses
/// either.
pub fn physics_head_gradient(
    p: &[f64; 4],
    depth: f64,
    ctx: &PhysicsContext,
    n_mc: usize,
    seed: u64,
    length: LengthDerivative,
) -> Result<HeadJacobian> {
    let (p, inside) = ctx.bounds.clamp(p);
    let steps: Vec<f64> = (0..4).map(|j| FD_STEP * ctx.bounds.span(j)).collect();
    for (j, &h) in steps.iter().enumerate() {
        if !(h > 0.0) || p[j] + h == p[j] || p[j] - h == p[j] {
            return Err(Error::config(format!(
                "finite-difference step underflows for component {j}"
            )));
        }
    }
    let (thetas, weights) = mc_nodes(n_mc, ctx.clip, seed)?;
    let spec = ctx.spectrum(&p, depth, &thetas, &weights)?;
    let base = terms(&spec.nodes);
    let values = magnitudes(&base, &ctx.sensor);
    let k = values.len();
    let mut cols: [Vec<f64>; 4] = Default::default();

    // L_s: only the Kochin factor depends on the length.
    cols[0] = match length {
        LengthDerivative::FiniteDifference => {
            let h = steps[0];
            let with_length = |len: f64| -> Result<Vec<f64>> {
                let v = VesselParams::with_hull_ratio(len, ctx.hull_ratio, p[1], p[2], p[3])?;
                let kochin = crate::hydro::KochinMethod::default();
                let t: Result<Vec<(CVec3, f64)>> = spec
                    .nodes
                    .iter()
                    .map(|n| {
                        let kap = kochin.evaluate_scaled(n.theta, ctx.hull, &v, depth, n.wavenumber)?;
                        Ok(([n.carrier[0] * kap, n.carrier[1] * kap, n.carrier[2] * kap], n.rate))
                    })
                    .collect();
                Ok(magnitudes(&t?, &ctx.sensor))
            };
            central(&with_length(p[0] + h)?, &with_length(p[0] - h)?, h)
        }
        LengthDerivative::Analytic => {
            if ctx.hull != HullModel::Parabolic {
                return Err(Error::config("analytic length derivative needs the parabolic hull"));
            }
            let v = VesselParams::with_hull_ratio(p[0], ctx.hull_ratio, p[1], p[2], p[3])?;
            let d: Vec<(CVec3, f64)> = spec
                .nodes
                .iter()
                .map(|n| {
                    let dk = kochin_parabolic_scaled_dlength(n.theta, &v, depth, n.wavenumber);
                    ([n.carrier[0] * dk, n.carrier[1] * dk, n.carrier[2] * dk], n.rate)
                })
                .collect();
            ctx.sensor
                .times()
                .zip(&values)
                .map(|(t, &m)| {
                    if m == 0.0 {
                        return 0.0;
                    }
                    let h = field_from(base.iter().copied(), t);
                    let dh = field_from(d.iter().copied(), t);
                    (h[0] * dh[0] + h[1] * dh[1] + h[2] * dh[2]) / m
                })
                .collect()
        }
    };

    cols[1] = values.iter().map(|v| if p[1] > 0.0 { v / p[1] } else { 0.0 }).collect();

    let h = steps[2];
    let at_speed = |s: f64| -> Result<Vec<f64>> {
        let mut q = p;
        q[2] = s;
        let sp = ctx.spectrum(&q, depth, &thetas, &weights)?;
        Ok(magnitudes(&terms(&sp.nodes), &ctx.sensor))
    };
    cols[2] = central(&at_speed(p[2] + h)?, &at_speed(p[2] - h)?, h);

    // α enters only through the phase rate.
    let h = steps[3];
    let at_angle = |a: f64| -> Vec<f64> {
        let t: Vec<(CVec3, f64)> = spec
            .nodes
            .iter()
            .map(|n| {
                let rate = n.omega1 + n.wavenumber * ctx.sensor.speed * (n.theta - a).cos();
                (n.coefficient(), rate)
            })
            .collect();
        magnitudes(&t, &ctx.sensor)
    };
    cols[3] = central(&at_angle(p[3] + h), &at_angle(p[3] - h), h);

    let jacobian = (0..k)
        .map(|i| {
            let mut row = [0.0; 4];
            for j in 0..4 {
                if inside[j] {
                    row[j] = cols[j][i];
                }
            }
            row
        })
        .collect();
    Ok(HeadJacobian {
        values,
        jacobian,
        inside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wake::{sensor_series, QuadratureConfig};

    const P: [f64; 4] = [150.0, 2000.0, 8.0, 0.17];

    #[test]
    fn large_sample_matches_deterministic_series() {
        let ctx = PhysicsContext::default();
        let reference = sensor_series(&ctx.scenario(&P, 500.0).unwrap(), &QuadratureConfig::default()).unwrap();
        let scale = reference.samples.iter().fold(0.0, |m: f64, v| m.max(*v));
        let mut errs = Vec::new();
        for n in [4096usize, 65536] {
            let got = physics_head(&P, 500.0, &ctx, n, 1).unwrap();
            let e = got
                .iter()
                .zip(&reference.samples)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale;
            errs.push(e);
        }
        assert!(errs[1] < 0.05, "{errs:?}");
        assert!(errs[1] < errs[0], "{errs:?}");
    }

    #[test]
    fn zero_hull_amplitude_and_determinism() {
        let mut ctx = PhysicsContext::default();
        ctx.bounds.lo[1] = 0.0;
        let mut p = P;
        p[1] = 0.0;
        assert!(physics_head(&p, 500.0, &ctx, 64, 0).unwrap().iter().all(|&v| v == 0.0));
        let ctx = PhysicsContext::default();
        assert_eq!(
            physics_head(&P, 500.0, &ctx, 64, 3).unwrap(),
            physics_head(&P, 500.0, &ctx, 64, 3).unwrap()
        );
    }

    #[test]
    fn amplitude_sensitivity_is_exact() {
        let ctx = PhysicsContext::default();
        let j = physics_head_gradient(&P, 500.0, &ctx, 128, 2, LengthDerivative::FiniteDifference).unwrap();
        for (row, v) in j.jacobian.iter().zip(&j.values) {
            assert_eq!(row[1], v / P[1]);
        }
    }

    #[test]
    fn analytic_length_derivative_matches_differences() {
        let ctx = PhysicsContext {
            hull: HullModel::Parabolic,
            ..Default::default()
        };
        let fd = physics_head_gradient(&P, 500.0, &ctx, 256, 4, LengthDerivative::FiniteDifference).unwrap();
        let an = physics_head_gradient(&P, 500.0, &ctx, 256, 4, LengthDerivative::Analytic).unwrap();
        let scale = an.jacobian.iter().fold(0.0f64, |m, r| m.max(r[0].abs()));
        for (a, f) in an.jacobian.iter().zip(&fd.jacobian) {
            assert!((a[0] - f[0]).abs() <= 1e-3 * scale, "{} vs {}", a[0], f[0]);
        }
        assert!(
            physics_head_gradient(&P, 500.0, &PhysicsContext::default(), 8, 0, LengthDerivative::Analytic).is_err()
        );
    }

    #[test]
    fn sensitivities_are_stable_under_step_halving() {
        // Same draw, halved steps: no sign flips on a smooth point.
        let ctx = PhysicsContext::default();
        let a = physics_head_gradient(&P, 500.0, &ctx, 256, 5, LengthDerivative::FiniteDifference).unwrap();
        let mut half = ctx.clone();
        for i in 0..4 {
            let s = 0.25 * (half.bounds.hi[i] - half.bounds.lo[i]);
            half.bounds.lo[i] = P[i] - s;
            half.bounds.hi[i] = P[i] + s;
        }
        // Halving the span, centred on P, halves the step.
        let b = physics_head_gradient(&P, 500.0, &half, 256, 5, LengthDerivative::FiniteDifference).unwrap();
        for j in [0, 2, 3] {
            let scale = a.jacobian.iter().fold(0.0f64, |m, r| m.max(r[j].abs()));
            for (ra, rb) in a.jacobian.iter().zip(&b.jacobian) {
                if ra[j].abs() > 1e-2 * scale {
                    assert_eq!(ra[j].signum(), rb[j].signum(), "{j}: {} vs {}", ra[j], rb[j]);
                }
                assert!((ra[j] - rb[j]).abs() < 1e-3 * scale, "{j}: {} vs {}", ra[j], rb[j]);
            }
        }
    }

    #[test]
    fn clamped_components_have_zero_sensitivity() {
        let ctx = PhysicsContext::default();
        let p = [500.0, 2000.0, 8.0, 0.1];
        let j = physics_head_gradient(&p, 500.0, &ctx, 64, 0, LengthDerivative::FiniteDifference).unwrap();
        assert_eq!(j.inside, [false, true, true, true]);
        assert!(j.jacobian.iter().all(|r| r[0] == 0.0));
        let clamped = physics_head(&[330.0, 2000.0, 8.0, 0.1], 500.0, &ctx, 64, 0).unwrap();
        assert_eq!(j.values, clamped);
    }
}
