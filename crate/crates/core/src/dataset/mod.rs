//! Training data: grid enumeration over vessel and sea parameters, sample
//! synthesis (noisy sensor magnitudes plus depth as input, vessel parameters
//! as target), target normalisation and persistence.

mod io;

pub use io::{load_dataset, save_dataset, write_csv};

use rayon::prelude::*;

use crate::emfield::EnvParams;
use crate::error::{Error, Result};
use crate::hydro::{HullModel, VesselParams, DEFAULT_HULL_RATIO};
use crate::seed::{derive_seed, mix64};
use crate::wake::{add_noise, sensor_series, Provenance, QuadratureConfig, Scenario, SensorParams};

/// `count` evenly spaced values on `[min, max]`; a single value `min` when
/// `count == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Interval {
    pub const fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config(format!("{name}: sample count must be at least 1")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || (self.count > 1 && !(self.min < self.max)) {
            return Err(Error::config(format!(
                "{name}: need min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else if i + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Parameter grid. Angles are in radians; the sign of `α` is drawn per tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub beam_coeff: Interval,
    pub speed: Interval,
    pub track_angle_abs: Interval,
    pub length: Interval,
    pub depth: Interval,
    pub sensor: SensorParams,
    pub hull_ratio: f64,
}

/// Largest `|α|` on the grid (19°).
pub fn max_track_angle() -> f64 {
    19f64.to_radians()
}

impl ParamGrid {
    /// The full grid: 5 × 10 × 10 × 150 × 9 tuples.
    pub fn full() -> Self {
        Self::with_counts([5, 10, 10, 150, 9])
    }

    /// Reduced desk-scale grid: 2 × 4 × 4 × 16 × 3 tuples.
    pub fn desk() -> Self {
        Self::with_counts([2, 4, 4, 16, 3])
    }

    /// Same bounds with per-parameter counts `(S_0, V_s, |α|, L_s, d)`.
    pub fn with_counts(c: [usize; 5]) -> Self {
        Self {
            beam_coeff: Interval::new(500.0, 5000.0, c[0]),
            speed: Interval::new(1.0, 10.0, c[1]),
            track_angle_abs: Interval::new(0.0, max_track_angle(), c[2]),
            length: Interval::new(30.0, 330.0, c[3]),
            depth: Interval::new(100.0, 3000.0, c[4]),
            sensor: SensorParams::default(),
            hull_ratio: DEFAULT_HULL_RATIO,
        }
    }

    pub fn intervals(&self) -> [(&'static str, Interval); 5] {
        [
            ("beam_coeff", self.beam_coeff),
            ("speed", self.speed),
            ("track_angle", self.track_angle_abs),
            ("length", self.length),
            ("depth", self.depth),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, iv) in self.intervals() {
            iv.validate(name)?;
        }
        self.sensor.validate()?;
        if !(self.hull_ratio > 0.0) {
            return Err(Error::config("hull ratio must be positive"));
        }
        Ok(())
    }

    /// Number of tuples.
    pub fn size(&self) -> usize {
        self.intervals().iter().map(|(_, iv)| iv.count).product()
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTuple {
    /// Indices into `(S_0, V_s, |α|, L_s, d)`.
    pub index: [u32; 5],
    pub beam_coeff: f64,
    pub speed: f64,
    /// Signed track angle (rad).
    pub track_angle: f64,
    pub length: f64,
    pub depth: f64,
}

impl GridTuple {
    pub fn vessel(&self, hull_ratio: f64) -> Result<VesselParams> {
        VesselParams::with_hull_ratio(self.length, hull_ratio, self.beam_coeff, self.speed, self.track_angle)
    }

    /// Target vector `(L_s, S_0, V_s, α)`.
    pub fn target(&self) -> [f64; 4] {
        [self.length, self.beam_coeff, self.speed, self.track_angle]
    }

    /// Stable 64-bit key of the grid index.
    pub fn key(&self) -> u64 {
        self.index
            .iter()
            .fold(0x6d61_6777_616b_6531u64, |h, &i| mix64(h ^ u64::from(i)))
    }
}

/// Cartesian product in lexicographic index order `(S_0, V_s, |α|, L_s, d)`.
/// Each tuple's `α` sign is drawn from `seed` and its grid index.
pub fn enumerate_grid(grid: &ParamGrid, seed: u64) -> Result<Vec<GridTuple>> {
    grid.validate()?;
    let ivs = grid.intervals().map(|(_, iv)| iv);
    let mut out = Vec::with_capacity(grid.size());
    for a in 0..ivs[0].count {
        for b in 0..ivs[1].count {
            for c in 0..ivs[2].count {
                for l in 0..ivs[3].count {
                    for d in 0..ivs[4].count {
                        let index = [a, b, c, l, d].map(|i| i as u32);
                        let mut t = GridTuple {
                            index,
                            beam_coeff: ivs[0].value(a),
                            speed: ivs[1].value(b),
                            track_angle: ivs[2].value(c),
                            length: ivs[3].value(l),
                            depth: ivs[4].value(d),
                        };
                        if derive_seed(seed, t.key()) & 1 == 1 {
                            t.track_angle = -t.track_angle;
                        }
                        out.push(t);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-output affine bounds for `(L_s, S_0, V_s, α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationSpec {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        let a = max_track_angle();
        Self {
            lo: [30.0, 500.0, 1.0, -a],
            hi: [330.0, 5000.0, 10.0, a],
        }
    }
}

impl NormalizationSpec {
    pub fn from_grid(grid: &ParamGrid) -> Self {
        Self {
            lo: [
                grid.length.min,
                grid.beam_coeff.min,
                grid.speed.min,
                -grid.track_angle_abs.max,
            ],
            hi: [
                grid.length.max,
                grid.beam_coeff.max,
                grid.speed.max,
                grid.track_angle_abs.max,
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            if !(self.lo[i] < self.hi[i]) {
                return Err(Error::config(format!(
                    "normalisation bound {i}: need lo < hi, got [{}, {}]",
                    self.lo[i], self.hi[i]
                )));
            }
        }
        Ok(())
    }

    pub fn span(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Maps into `[0, 1]^4`, clamping (with a warning) values outside the
    /// bounds.
    pub fn normalize(&self, y: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            let v = if y[i] < self.lo[i] || y[i] > self.hi[i] {
                log::warn!(
                    "target component {i} = {} outside [{}, {}], clamped",
                    y[i],
                    self.lo[i],
                    self.hi[i]
                );
                y[i].clamp(self.lo[i], self.hi[i])
            } else {
                y[i]
            };
            out[i] = (v - self.lo[i]) / self.span(i);
        }
        out
    }

    pub fn denormalize(&self, u: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = self.lo[i] + u[i] * self.span(i);
        }
        out
    }

    /// Clamps physical values into the bounds; the mask marks components
    /// left untouched.
    pub fn clamp(&self, y: &[f64; 4]) -> ([f64; 4], [bool; 4]) {
        let mut out = *y;
        let mut inside = [true; 4];
        for i in 0..4 {
            if !(y[i] >= self.lo[i] && y[i] <= self.hi[i]) {
                out[i] = if y[i] < self.lo[i] { self.lo[i] } else { self.hi[i] };
                inside[i] = false;
            }
        }
        (out, inside)
    }
}

/// Provenance of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleMeta {
    /// Seed of the injected noise.
    pub seed: u64,
    pub index: [u32; 5],
    pub noisy: bool,
}

/// `x = (‖H‖ samples, d)`, `y = (L_s, S_0, V_s, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub x: Vec<f64>,
    pub y: [f64; 4],
    pub meta: SampleMeta,
}

impl TrainingSample {
    /// Number of wake samples.
    pub fn k(&self) -> usize {
        self.x.len() - 1
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.x[..self.k()]
    }

    pub fn depth(&self) -> f64 {
        self.x[self.k()]
    }

    pub fn validate(&self, k: usize, norm: &NormalizationSpec) -> Result<()> {
        if self.x.len() != k + 1 {
            return Err(Error::Shape {
                expected: k + 1,
                found: self.x.len(),
            });
        }
        if self.x.iter().any(|v| !v.is_finite()) || self.magnitudes().iter().any(|&v| v < 0.0) {
            return Err(Error::Format(
                "sample magnitudes must be finite and non-negative".into(),
            ));
        }
        for i in 0..4 {
            let tol = 1e-9 * norm.span(i);
            if !(self.y[i] >= norm.lo[i] - tol && self.y[i] <= norm.hi[i] + tol) {
                return Err(Error::Format(format!(
                    "target component {i} = {} outside bounds",
                    self.y[i]
                )));
            }
        }
        Ok(())
    }
}

/// Everything fixed across samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Template environment; its depth is replaced per tuple.
    pub env: EnvParams,
    pub sensor: SensorParams,
    pub quad: QuadratureConfig,
    pub hull: HullModel,
    pub hull_ratio: f64,
    /// `+∞` keeps samples clean.
    pub snr_db: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            env: EnvParams::default(),
            sensor: SensorParams::default(),
            quad: QuadratureConfig::default(),
            hull: HullModel::Wigley,
            hull_ratio: DEFAULT_HULL_RATIO,
            snr_db: -10.0,
        }
    }
}

impl SampleConfig {
    pub fn scenario(&self, vessel: VesselParams, depth: f64) -> Scenario {
        Scenario::new(vessel, EnvParams { depth, ..self.env }, self.sensor, self.hull)
    }
}

/// Synthesises one sample: clean sensor series, noise, then layout.
pub fn build_sample(t: &GridTuple, cfg: &SampleConfig, noise_seed: u64) -> Result<TrainingSample> {
    let vessel = t.vessel(cfg.hull_ratio)?;
    let clean = sensor_series(&cfg.scenario(vessel, t.depth), &cfg.quad)?;
    let series = add_noise(&clean, cfg.snr_db, noise_seed)?;
    let mut x = series.samples;
    x.push(t.depth);
    Ok(TrainingSample {
        x,
        y: t.target(),
        meta: SampleMeta {
            seed: noise_seed,
            index: t.index,
            noisy: matches!(series.provenance, Provenance::Noisy { .. }),
        },
    })
}

/// A built dataset with the settings needed to reproduce or interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub k: usize,
    pub norm: NormalizationSpec,
    pub sensor: SensorParams,
    pub hull: HullModel,
    pub snr_db: f64,
    pub seed: u64,
    pub samples: Vec<TrainingSample>,
}

/// A tuple that could not be synthesised.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub tuple: GridTuple,
    pub reason: String,
}

/// Builds every grid sample in parallel. Order follows the grid; physics
/// failures are reported instead of aborting.
pub fn build_dataset(grid: &ParamGrid, cfg: &SampleConfig, seed: u64) -> Result<(Dataset, Vec<Skipped>)> {
    let tuples = enumerate_grid(grid, seed)?;
    let results: Vec<Result<TrainingSample>> = tuples
        .par_iter()
        .map(|t| build_sample(t, cfg, derive_seed(seed, t.key())))
        .collect();
    let mut samples = Vec::with_capacity(tuples.len());
    let mut skipped = Vec::new();
    for (t, r) in tuples.into_iter().zip(results) {
        match r {
            Ok(s) => samples.push(s),
            Err(e) if e.is_physics() => {
                log::warn!("skipping tuple {:?}: {e}", t.index);
                skipped.push(Skipped {
                    tuple: t,
                    reason: e.to_string(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((
        Dataset {
            k: cfg.sensor.samples,
            norm: NormalizationSpec::from_grid(grid),
            sensor: cfg.sensor,
            hull: cfg.hull,
            snr_db: cfg.snr_db,
            seed,
            samples,
        },
        skipped,
    ))
}

/// Deterministic 90/10 split on the grid index: roughly one tuple in ten is
/// held out.
pub fn is_held_out(index: &[u32; 5]) -> bool {
    let key = index
        .iter()
        .fold(0x7370_6c69_7431_3031u64, |h, &i| mix64(h ^ u64::from(i)));
    mix64(key).is_multiple_of(10)
}

impl Dataset {
    /// `(train, test)` sample indices.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.samples.len()).partition(|&i| !is_held_out(&self.samples[i].meta.index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::CompositeRule;
    use crate::wake::spectral_integrand;

    #[test]
    fn grid_sizes() {
        assert_eq!(ParamGrid::full().size(), 675_000);
        assert_eq!(ParamGrid::desk().size(), 1536);
        let g = ParamGrid::full();
        assert_eq!(g.sensor.speed, 20.0);
        assert_eq!(g.sensor.sample_rate, 10.0);
        assert_eq!(g.sensor.altitude, 50.0);
        assert_eq!(Interval::new(20.0, 99.0, 1).values(), vec![20.0]);
    }

    #[test]
    fn toy_grid_is_lexicographic() {
        let mut g = ParamGrid::with_counts([1, 2, 1, 2, 1]);
        g.track_angle_abs = Interval::new(0.1, 0.1, 1);
        let t = enumerate_grid(&g, 0).unwrap();
        assert_eq!(t.len(), 4);
        let idx: Vec<[u32; 5]> = t.iter().map(|t| t.index).collect();
        assert_eq!(
            idx,
            vec![[0, 0, 0, 0, 0], [0, 0, 0, 1, 0], [0, 1, 0, 0, 0], [0, 1, 0, 1, 0]]
        );
        assert_eq!((t[1].speed, t[1].length), (1.0, 330.0));
        assert!(t.iter().all(|t| (t.track_angle.abs() - 0.1).abs() < 1e-15));
    }

    #[test]
    fn enumeration_is_a_bijection_and_signs_vary() {
        let t = enumerate_grid(&ParamGrid::desk(), 4).unwrap();
        let mut idx: Vec<_> = t.iter().map(|t| t.index).collect();
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), 1536);
        let neg = t.iter().filter(|t| t.track_angle < 0.0).count();
        assert!(neg > 500 && neg < 1000, "{neg}");
        assert!(t.iter().all(|t| t.track_angle.abs() <= max_track_angle() + 1e-15));
    }

    #[test]
    fn zero_count_is_config_error() {
        let g = ParamGrid::with_counts([0, 1, 1, 1, 1]);
        assert!(matches!(enumerate_grid(&g, 0), Err(Error::Config(_))));
    }

    #[test]
    fn normalisation_endpoints_and_round_trip() {
        let n = NormalizationSpec::default();
        assert_eq!(n.normalize(&n.lo), [0.0; 4]);
        assert_eq!(n.normalize(&n.hi), [1.0; 4]);
        assert_eq!(n.normalize(&[180.0, 500.0, 1.0, 0.0])[0], 0.5);
        let y = [123.4, 777.0, 3.3, -0.2];
        let back = n.denormalize(&n.normalize(&y));
        for i in 0..4 {
            assert!((back[i] - y[i]).abs() <= 4.0 * f64::EPSILON * y[i].abs().max(1.0));
        }
        assert_eq!(n.normalize(&[1000.0, 500.0, 1.0, 0.0])[0], 1.0);
        let bad = NormalizationSpec {
            lo: [1.0; 4],
            hi: [1.0; 4],
        };
        assert!(bad.validate().is_err());
        let (c, inside) = n.clamp(&[10.0, 600.0, 20.0, 0.0]);
        assert_eq!(c, [30.0, 600.0, 10.0, 0.0]);
        assert_eq!(inside, [false, true, false, true]);
    }

    #[test]
    fn split_is_roughly_ninety_ten() {
        let t = enumerate_grid(&ParamGrid::with_counts([5, 10, 10, 20, 9]), 0).unwrap();
        let held = t.iter().filter(|t| is_held_out(&t.index)).count() as f64 / t.len() as f64;
        assert!((held - 0.1).abs() < 0.01, "{held}");
    }

    fn tuple() -> GridTuple {
        GridTuple {
            index: [1, 2, 3, 4, 5],
            beam_coeff: 2000.0,
            speed: 8.0,
            track_angle: -0.15,
            length: 150.0,
            depth: 500.0,
        }
    }

    #[test]
    fn sample_layout_and_determinism() {
        let cfg = SampleConfig::default();
        let s = build_sample(&tuple(), &cfg, 42).unwrap();
        assert_eq!(s.x.len(), 16);
        assert_eq!(s.x[15], 500.0);
        assert_eq!(s.y, [150.0, 2000.0, 8.0, -0.15]);
        assert!(s.meta.noisy);
        assert_eq!(s, build_sample(&tuple(), &cfg, 42).unwrap());
        s.validate(15, &NormalizationSpec::default()).unwrap();
        assert!(s.validate(14, &NormalizationSpec::default()).is_err());
    }

    #[test]
    fn clean_sample_matches_recomputation() {
        let cfg = SampleConfig {
            snr_db: f64::INFINITY,
            ..Default::default()
        };
        let t = tuple();
        let s = build_sample(&t, &cfg, 0).unwrap();
        assert!(!s.meta.noisy);
        // Independent summation of the pointwise integrand on the same rule.
        let sc = cfg.scenario(t.vessel(cfg.hull_ratio).unwrap(), t.depth);
        let (lo, hi) = cfg.quad.domain();
        let rule = CompositeRule::with_total_nodes(lo, hi, cfg.quad.nodes).unwrap();
        for (i, time) in cfg.sensor.times().enumerate() {
            let mut h = [0.0; 3];
            for (&th, &w) in rule.nodes.iter().zip(&rule.weights) {
                let v = spectral_integrand(th, time, &sc).unwrap();
                for c in 0..3 {
                    h[c] += w * v[c].re;
                }
            }
            let m = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
            assert!((s.x[i] - m).abs() <= 1e-10 * m, "{} vs {m}", s.x[i]);
        }
    }
}
