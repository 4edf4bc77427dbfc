//! Boundary-value solution for one spectral component.
//!
//! Inside the water the free waves nearly cancel the forced ones (`β_w ≈ k`
//! because seawater is a weak conductor at gravity-wave frequencies), and the
//! air field is their small remainder. The unknowns are therefore the *net*
//! amplitudes `u = h^{w+} + ĥ^{w+}` and `v = h^{w−} + ĥ^{w−}`, and the water
//! field is written
//!
//! ```text
//! h(z) = u e^{β_w z} + v e^{-β_w z} + ĥ^{w+}(e^{k z} − e^{β_w z}) + ĥ^{w−}(e^{-k z} − e^{-β_w z})
//! ```
//!
//! with the differences evaluated through `expm1((β_w − k) z)`. The interface
//! matrices are the usual ones; only the right-hand sides change form.

use num_complex::Complex64;

use super::linalg::{self, Solved};
use super::{propagation_constants, CVec3, EnvParams, LayerConstants};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn scale(v: &CVec3, s: Complex64) -> CVec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

fn add(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm3(v: &CVec3) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt()
}

/// `e^w − 1` without cancellation for small `|w|`.
fn expm1(w: Complex64) -> Complex64 {
    let half = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * w.im.cos() - 2.0 * half * half, w.re.exp() * w.im.sin())
}

/// Particular solution driven by the wave's fluid velocity through `B_E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedHarmonics {
    /// `ĥ^{w+}`, multiplying `e^{k z}`.
    pub upper: CVec3,
    /// `ĥ^{w−} e^{k d}`: the `e^{-k z}` term's value at the seabed.
    pub lower_at_bed: CVec3,
    /// `e^{-k d}`.
    pub decay: f64,
}

impl ForcedHarmonics {
    /// `ĥ^{w−}` itself.
    pub fn lower(&self) -> CVec3 {
        scale(&self.lower_at_bed, self.decay.into())
    }

    /// `ĥ^{w+} e^{-k d}`.
    pub fn upper_at_bed(&self) -> CVec3 {
        scale(&self.upper, self.decay.into())
    }
}

/// `ĥ^{w±} = k σ_w / (2 (k² − β_w²)) · e^{±k d}/cosh(k d) · (B_E · p∓) p±`
/// with `p± = (i cos θ, i sin θ, ±1)`.
///
/// `e^{±k d}/cosh(k d)` are the two halves of the `cosh(k (z + d))/cosh(k d)`
/// depth profile of the driving flow, so the `−` branch carries `e^{-k d}`.
pub fn forced_harmonics(theta: f64, k: f64, env: &EnvParams, lc: &LayerConstants) -> Result<ForcedHarmonics> {
    let gap = lc.water_gap;
    if gap.norm() == 0.0 || !gap.norm().is_finite() {
        return Err(Error::Singular(format!("k^2 = beta_w^2 at k = {k}")));
    }
    let pref = k * env.water.conductivity / (2.0 * gap);
    let (s, c) = theta.sin_cos();
    let b = env.geomagnetic;
    let horiz = I * (b[0] * c + b[1] * s);
    let decay = (-k * env.depth).exp();
    let e2 = decay * decay;
    let up = pref * (horiz - b[2]) * (2.0 / (1.0 + e2));
    let down = pref * (horiz + b[2]) * (2.0 * decay / (1.0 + e2));
    Ok(ForcedHarmonics {
        upper: [up * I * c, up * I * s, up],
        lower_at_bed: [down * I * c, down * I * s, -down],
        decay,
    })
}

/// Exponential factors shared by both interface systems.
#[derive(Debug, Clone, Copy)]
struct Exps {
    /// `e^{-β_w d}`
    ew: Complex64,
    /// `β_w − k`
    shift: Complex64,
    /// `e^{-(β_w − k) d} − 1`
    em_down: Complex64,
    /// `e^{(β_w − k) d} − 1`
    em_up: Complex64,
}

impl Exps {
    fn new(depth: f64, lc: &LayerConstants) -> Self {
        let shift = lc.water_shift;
        Self {
            ew: (-lc.water * depth).exp(),
            shift,
            em_down: expm1(-shift * depth),
            em_up: expm1(shift * depth),
        }
    }

    /// Forced part of the water field at `z = −d` (component `i`).
    fn forced_at_bed(&self, forced: &ForcedHarmonics, i: usize) -> Complex64 {
        -forced.upper_at_bed()[i] * self.em_down - forced.lower_at_bed[i] * self.em_up
    }
}

/// z-components of the water waves, as net amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidZ {
    /// `h_z^{w+} + ĥ_z^{w+}`.
    pub net_upper: Complex64,
    /// `(h_z^{w−} + ĥ_z^{w−}) e^{β_w d}`.
    pub net_lower_at_bed: Complex64,
    pub cond: f64,
    pub residual: f64,
}

impl FluidZ {
    /// `h_z^{w+}`.
    pub fn upper(&self, forced: &ForcedHarmonics) -> Complex64 {
        self.net_upper - forced.upper[2]
    }

    /// `h_z^{w−} e^{β_w d}`.
    pub fn lower_at_bed(&self, forced: &ForcedHarmonics, lc: &LayerConstants, depth: f64) -> Complex64 {
        self.net_lower_at_bed - forced.lower_at_bed[2] * (lc.water_shift * depth).exp()
    }
}

/// The 2×2 interface system in the net unknowns `(u, v e^{β_w d})`.
///
/// Row 1 is continuity of `μ h_z` and `∂h_z/∂z` at `z = −d` with the seabed
/// eliminated; row 2 the same at `z = 0` with the air eliminated.
pub fn fluid_z_system(
    env: &EnvParams,
    lc: &LayerConstants,
    forced: &ForcedHarmonics,
) -> ([[Complex64; 2]; 2], [Complex64; 2]) {
    let (ba, bw, bb) = (lc.air, lc.water, lc.seabed);
    let mu_a = env.water.permeability / env.air.permeability;
    let mu_b = env.water.permeability / env.seabed.permeability;
    let x = Exps::new(env.depth, lc);
    let m = [
        [x.ew * (bw / bb - mu_b), -(bw / bb + mu_b)],
        [bw / ba + mu_a, -x.ew * (bw / ba - mu_a)],
    ];
    let bed_value = x.forced_at_bed(forced, 2);
    let bed_slope = forced_slope_at_bed(forced, &x, bw);
    let rhs = [
        mu_b * bed_value - bed_slope / bb,
        x.shift / ba * (forced.upper[2] - forced.lower()[2]),
    ];
    (m, rhs)
}

/// Forced part of `∂h_z/∂z` at `z = −d`.
fn forced_slope_at_bed(forced: &ForcedHarmonics, x: &Exps, bw: Complex64) -> Complex64 {
    forced.upper_at_bed()[2] * (-x.shift - bw * x.em_down) + forced.lower_at_bed[2] * (x.shift + bw * x.em_up)
}

pub fn solve_fluid_z(env: &EnvParams, lc: &LayerConstants, forced: &ForcedHarmonics) -> Result<FluidZ> {
    let (m, rhs) = fluid_z_system(env, lc, forced);
    let Solved { x, cond, residual } = linalg::solve(&m, &rhs)?;
    Ok(FluidZ {
        net_upper: x[0],
        net_lower_at_bed: x[1],
        cond,
        residual,
    })
}

/// Air and seabed amplitudes from the water solution. The z-components follow
/// from continuity of `∂h_z/∂z`; tangential components from zero divergence in
/// each layer.
pub fn air_seabed_harmonics(
    theta: f64,
    k: f64,
    depth: f64,
    lc: &LayerConstants,
    fz: &FluidZ,
    forced: &ForcedHarmonics,
) -> Result<(CVec3, CVec3)> {
    let (ba, bw, bb) = (lc.air, lc.water, lc.seabed);
    if ba.norm() == 0.0 || bb.norm() == 0.0 {
        return Err(Error::Singular("zero vertical wavenumber in air or seabed".into()));
    }
    let x = Exps::new(depth, lc);
    let surface_slope =
        bw * (fz.net_upper - fz.net_lower_at_bed * x.ew) - x.shift * (forced.upper[2] - forced.lower()[2]);
    let hz_a = -surface_slope / ba;
    let bed_slope = bw * (fz.net_upper * x.ew - fz.net_lower_at_bed) + forced_slope_at_bed(forced, &x, bw);
    let hz_b = bed_slope / bb;
    let (s, c) = theta.sin_cos();
    let ra = -I * ba / k;
    let rb = I * bb / k;
    Ok((
        [ra * c * hz_a, ra * s * hz_a, hz_a],
        [rb * c * hz_b, rb * s * hz_b, hz_b],
    ))
}

/// Tangential components of the water waves, as net amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidXY {
    /// `(u_x, u_y)`.
    pub net_upper: [Complex64; 2],
    /// `(v_x, v_y) e^{β_w d}`.
    pub net_lower_at_bed: [Complex64; 2],
    pub cond: f64,
    pub residual: f64,
}

/// Tangential continuity at `z = 0` (rows 1, 2) and `z = −d` (rows 3, 4) in
/// the unknowns `(u_x, v_x e^{β_w d}, u_y, v_y e^{β_w d})`.
pub fn fluid_xy_system(
    depth: f64,
    lc: &LayerConstants,
    air: &CVec3,
    seabed: &CVec3,
    forced: &ForcedHarmonics,
) -> ([[Complex64; 4]; 4], [Complex64; 4]) {
    let one = Complex64::new(1.0, 0.0);
    let x = Exps::new(depth, lc);
    let ew = x.ew;
    let m = [
        [one, ew, ZERO, ZERO],
        [ZERO, ZERO, one, ew],
        [ew, one, ZERO, ZERO],
        [ZERO, ZERO, ew, one],
    ];
    let rhs = [
        air[0],
        air[1],
        seabed[0] - x.forced_at_bed(forced, 0),
        seabed[1] - x.forced_at_bed(forced, 1),
    ];
    (m, rhs)
}

pub fn solve_fluid_xy(
    depth: f64,
    lc: &LayerConstants,
    air: &CVec3,
    seabed: &CVec3,
    forced: &ForcedHarmonics,
) -> Result<FluidXY> {
    let (m, rhs) = fluid_xy_system(depth, lc, air, seabed, forced);
    let Solved { x, cond, residual } = linalg::solve(&m, &rhs)?;
    Ok(FluidXY {
        net_upper: [x[0], x[2]],
        net_lower_at_bed: [x[1], x[3]],
        cond,
        residual,
    })
}

/// Every coefficient of `h(θ, z)` for one spectral component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSet {
    pub theta: f64,
    pub wavenumber: f64,
    pub depth: f64,
    pub layers: LayerConstants,
    pub forced: ForcedHarmonics,
    /// `u = h^{w+} + ĥ^{w+}`.
    pub net_upper: CVec3,
    /// `v e^{β_w d}` with `v = h^{w−} + ĥ^{w−}`.
    pub net_lower_at_bed: CVec3,
    pub air: CVec3,
    pub seabed: CVec3,
    /// Largest condition number of the two boundary systems.
    pub cond: f64,
    /// Largest relative residual of the two boundary systems.
    pub residual: f64,
}

impl HarmonicSet {
    pub fn solve(theta: f64, k: f64, omega: f64, env: &EnvParams) -> Result<Self> {
        let lc = propagation_constants(k, omega, env);
        let forced = forced_harmonics(theta, k, env, &lc)?;
        let fz = solve_fluid_z(env, &lc, &forced)?;
        let (air, seabed) = air_seabed_harmonics(theta, k, env.depth, &lc, &fz, &forced)?;
        let fxy = solve_fluid_xy(env.depth, &lc, &air, &seabed, &forced)?;
        Ok(Self {
            theta,
            wavenumber: k,
            depth: env.depth,
            layers: lc,
            forced,
            net_upper: [fxy.net_upper[0], fxy.net_upper[1], fz.net_upper],
            net_lower_at_bed: [fxy.net_lower_at_bed[0], fxy.net_lower_at_bed[1], fz.net_lower_at_bed],
            air,
            seabed,
            cond: fz.cond.max(fxy.cond),
            residual: fz.residual.max(fxy.residual),
        })
    }

    /// `h^{w+}`, the free upward-decaying wave in the conventional split.
    pub fn water_upper(&self) -> CVec3 {
        sub(&self.net_upper, &self.forced.upper)
    }

    /// `h^{w−} e^{β_w d}`.
    pub fn water_lower_at_bed(&self) -> CVec3 {
        let f = scale(&self.forced.lower_at_bed, (self.layers.water_shift * self.depth).exp());
        sub(&self.net_lower_at_bed, &f)
    }

    /// `h_a e^{-β_a z}` for `z > 0`; the only term the airborne sensor sees.
    pub fn air_field(&self, altitude: f64) -> CVec3 {
        scale(&self.air, (-self.layers.air * altitude).exp())
    }

    /// Water field evaluated at any `z` (used for one-sided interface limits).
    pub fn water_field(&self, z: f64) -> CVec3 {
        let k = self.wavenumber;
        let bw = self.layers.water;
        let shift = self.layers.water_shift;
        let below = z + self.depth;
        let free = add(
            &scale(&self.net_upper, (bw * z).exp()),
            &scale(&self.net_lower_at_bed, (-bw * below).exp()),
        );
        let up = -(k * z).exp() * expm1(shift * z);
        // ĥ^{w−} is referenced to the seabed, the free wave it pairs with is not.
        let down = -(-k * below).exp() * expm1(-shift * z);
        add(
            &free,
            &add(&scale(&self.forced.upper, up), &scale(&self.forced.lower_at_bed, down)),
        )
    }

    /// Seabed field continued to any `z`.
    pub fn seabed_field(&self, z: f64) -> CVec3 {
        scale(&self.seabed, (self.layers.seabed * (z + self.depth)).exp())
    }

    /// `h(θ, z)`: air for `z > 0`, water for `−d < z ≤ 0`, seabed for `z ≤ −d`.
    pub fn assemble_h(&self, z: f64) -> CVec3 {
        if z > 0.0 {
            self.air_field(z)
        } else if z > -self.depth {
            self.water_field(z)
        } else {
            self.seabed_field(z)
        }
    }

    /// Relative divergence `|i k cos θ h_x + i k sin θ h_y + ∂h_z/∂z|` of the
    /// layer containing `z`, each exponential term differentiated analytically
    /// and normalised by `k` times its own magnitude. In the water the forced
    /// `e^{±k z}` parts are divergence-free by construction, so the check runs
    /// on the two `e^{±β_w z}` groups.
    pub fn divergence_residual(&self, z: f64) -> f64 {
        let k = self.wavenumber;
        let (s, c) = self.theta.sin_cos();
        let horiz = |v: &CVec3| I * k * (c * v[0] + s * v[1]);
        let ratio = |num: Complex64, den: f64| if den == 0.0 { 0.0 } else { num.norm() / den };
        if z > 0.0 {
            let v = self.air_field(z);
            ratio(horiz(&v) - self.layers.air * v[2], k * norm3(&v))
        } else if z > -self.depth {
            let (bw, shift) = (self.layers.water, self.layers.water_shift);
            let u = &self.net_upper;
            let fu = self.forced.upper[2];
            let up = ratio(horiz(u) + bw * u[2] - shift * fu, k * norm3(u) + (shift * fu).norm());
            let v = &self.net_lower_at_bed;
            let fv = self.forced.lower_at_bed[2] * (shift * self.depth).exp();
            let down = ratio(horiz(v) - bw * v[2] + shift * fv, k * norm3(v) + (shift * fv).norm());
            up.max(down)
        } else {
            let v = self.seabed_field(z);
            ratio(horiz(&v) + self.layers.seabed * v[2], k * norm3(&v))
        }
    }
}
