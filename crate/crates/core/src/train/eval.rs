//! Length-error metrics, convergence detection and the evaluation sweeps.
//!
//! Sweep scenarios are drawn off-grid: the swept quantity and speed are
//! fixed, everything else is uniform over the training bounds. Each draw is
//! seeded from `(seed, sweep point, draw)`, so tables do not depend on the
//! thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::HistoryRow;
use crate::dataset::{build_sample, max_track_angle, GridTuple, NormalizationSpec, SampleConfig, TrainingSample};
use crate::error::{Error, Result};
use crate::neural::Checkpoint;
use crate::seed::derive_seed;

/// Mean length error over a set of estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthError {
    /// Mean `|L̂ − L| / L`, percent.
    pub l1_pct: f64,
    /// Mean `((L̂ − L) / span)²` in normalised units.
    pub sq: f64,
    pub count: usize,
}

impl LengthError {
    pub fn of(estimates: &[[f64; 4]], truth: &[[f64; 4]], norm: &NormalizationSpec) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::domain("no estimates to evaluate"));
        }
        if estimates.len() != truth.len() {
            return Err(Error::Shape {
                expected: truth.len(),
                found: estimates.len(),
            });
        }
        let n = estimates.len() as f64;
        let (l1, sq) = estimates.iter().zip(truth).fold((0.0, 0.0), |(l1, sq), (e, t)| {
            let d = e[0] - t[0];
            (l1 + d.abs() / t[0], sq + (d / norm.span(0)).powi(2))
        });
        Ok(Self {
            l1_pct: 100.0 * l1 / n,
            sq: sq / n,
            count: estimates.len(),
        })
    }
}

/// Denormalised estimates for `samples`, in input order.
pub fn predict(ck: &Checkpoint, samples: &[&TrainingSample]) -> Result<Vec<[f64; 4]>> {
    samples.par_iter().map(|s| ck.predict(&s.x)).collect()
}

pub fn eval_length_error(ck: &Checkpoint, samples: &[&TrainingSample]) -> Result<LengthError> {
    let est = predict(ck, samples)?;
    let truth: Vec<[f64; 4]> = samples.iter().map(|s| s.y).collect();
    LengthError::of(&est, &truth, &ck.norm)
}

/// First index at which the trailing `window`-mean of `errors` falls below
/// twice its own minimum.
pub fn first_crossing(errors: &[f64], window: usize) -> Option<usize> {
    if errors.is_empty() || window == 0 {
        return None;
    }
    let mut smooth = Vec::with_capacity(errors.len());
    let mut acc = 0.0;
    for (i, e) in errors.iter().enumerate() {
        acc += e;
        if i >= window {
            acc -= errors[i - window];
        }
        smooth.push(acc / (i + 1).min(window) as f64);
    }
    let floor = smooth.iter().copied().fold(f64::INFINITY, f64::min);
    smooth.iter().position(|&s| s < 2.0 * floor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Random scenarios per sweep point.
    pub draws: usize,
    /// Synthesis settings, including noise.
    pub sample: SampleConfig,
    /// Bounds the free parameters are drawn from.
    pub bounds: NormalizationSpec,
    /// Depth range for draws that do not fix depth.
    pub depth: (f64, f64),
    /// `|α|` cap for the length scatter (rad).
    pub scatter_max_angle: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            draws: 100,
            sample: SampleConfig::default(),
            bounds: NormalizationSpec::default(),
            depth: (100.0, 3000.0),
            scatter_max_angle: 15f64.to_radians(),
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::config("sweep draws must be at least 1"));
        }
        if !(self.depth.0 > 0.0 && self.depth.1 >= self.depth.0) {
            return Err(Error::config("sweep depth range must be positive and ordered"));
        }
        self.bounds.validate()
    }
}

/// Parameters a draw may fix; the rest are sampled.
#[derive(Debug, Clone, Copy, Default)]
struct Fixed {
    length: Option<f64>,
    speed: Option<f64>,
    angle_abs: Option<f64>,
    max_angle: Option<f64>,
    depth: Option<f64>,
}

fn draw(cfg: &SweepConfig, fixed: Fixed, seed: u64) -> Result<TrainingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &cfg.bounds;
    let mut uniform = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let length = fixed.length.unwrap_or_else(|| uniform(b.lo[0], b.hi[0]));
    let beam_coeff = uniform(b.lo[1], b.hi[1]);
    let speed = fixed.speed.unwrap_or_else(|| uniform(b.lo[2], b.hi[2]));
    let cap = fixed.max_angle.unwrap_or(max_track_angle());
    let angle_abs = fixed.angle_abs.unwrap_or_else(|| uniform(0.0, cap));
    let depth = fixed.depth.unwrap_or_else(|| uniform(cfg.depth.0, cfg.depth.1));
    let sign = if uniform(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
    let t = GridTuple {
        index: [0; 5],
        beam_coeff,
        speed,
        track_angle: sign * angle_abs,
        length,
        depth,
    };
    build_sample(&t, &cfg.sample, derive_seed(seed, 1))
}

/// One sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Swept quantity: `|α|` in degrees or depth in metres.
    pub value: f64,
    pub speed: f64,
    pub error: LengthError,
}

fn sweep(ck: &Checkpoint, cfg: &SweepConfig, points: Vec<(f64, f64, Fixed)>) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    points
        .iter()
        .enumerate()
        .map(|(p, &(value, speed, fixed))| {
            let base = derive_seed(cfg.seed, p as u64);
            let samples: Vec<TrainingSample> = (0..cfg.draws)
                .into_par_iter()
                .map(|j| draw(cfg, fixed, derive_seed(base, j as u64)))
                .collect::<Result<_>>()?;
            let refs: Vec<&TrainingSample> = samples.iter().collect();
            Ok(SweepRow {
                value,
                speed,
                error: eval_length_error(ck, &refs)?,
            })
        })
        .collect()
}

/// Length error against `|α|` (rad) at each speed. Rows are ordered by angle,
/// then speed; `value` is in degrees.
pub fn angle_sweep(ck: &Checkpoint, angles: &[f64], speeds: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let points = angles
        .iter()
        .flat_map(|&a| {
            speeds.iter().map(move |&v| {
                let fixed = Fixed {
                    speed: Some(v),
                    angle_abs: Some(a.abs()),
                    ..Fixed::default()
                };
                (a.abs().to_degrees(), v, fixed)
            })
        })
        .collect();
    sweep(ck, cfg, points)
}

/// Length error against depth at each speed, `|α|` drawn over the full range.
pub fn depth_sweep(ck: &Checkpoint, depths: &[f64], speeds: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let points = depths
        .iter()
        .flat_map(|&d| {
            speeds.iter().map(move |&v| {
                let fixed = Fixed {
                    speed: Some(v),
                    depth: Some(d),
                    ..Fixed::default()
                };
                (d, v, fixed)
            })
        })
        .collect();
    sweep(ck, cfg, points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRow {
    pub length: f64,
    pub estimate: f64,
    pub speed: f64,
    /// Signed track angle (rad).
    pub track_angle: f64,
    pub depth: f64,
}

/// `per_length` random scenarios per ground-truth length, `|α|` below the
/// scatter cap.
pub fn length_scatter(
    ck: &Checkpoint,
    lengths: &[f64],
    per_length: usize,
    cfg: &SweepConfig,
) -> Result<Vec<ScatterRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(lengths.len() * per_length);
    for (p, &l) in lengths.iter().enumerate() {
        let base = derive_seed(cfg.seed ^ 0x5ca7, p as u64);
        let fixed = Fixed {
            length: Some(l),
            max_angle: Some(cfg.scatter_max_angle),
            ..Fixed::default()
        };
        let samples: Vec<TrainingSample> = (0..per_length)
            .into_par_iter()
            .map(|j| draw(cfg, fixed, derive_seed(base, j as u64)))
            .collect::<Result<_>>()?;
        let refs: Vec<&TrainingSample> = samples.iter().collect();
        for (s, e) in samples.iter().zip(predict(ck, &refs)?) {
            rows.push(ScatterRow {
                length: l,
                estimate: e[0],
                speed: s.y[2],
                track_angle: s.y[3],
                depth: s.depth(),
            });
        }
    }
    Ok(rows)
}

/// Columns `<value_name>,speed,mean_error_pct,mean_sq_error,count`.
pub fn write_sweep_csv(mut w: impl Write, value_name: &str, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{value_name},speed,mean_error_pct,mean_sq_error,count")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.value, r.speed, r.error.l1_pct, r.error.sq, r.error.count
        )?;
    }
    Ok(())
}

/// Columns `length,estimate,speed,track_angle_deg,depth`.
pub fn write_scatter_csv(mut w: impl Write, rows: &[ScatterRow]) -> Result<()> {
    writeln!(w, "length,estimate,speed,track_angle_deg,depth")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.length,
            r.estimate,
            r.speed,
            r.track_angle.to_degrees(),
            r.depth
        )?;
    }
    Ok(())
}

/// Columns `iteration,loss,length_error_pct,length_error_sq`.
pub fn write_history_csv(mut w: impl Write, rows: &[HistoryRow]) -> Result<()> {
    writeln!(w, "iteration,loss,length_error_pct,length_error_sq")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.iteration, r.loss, r.length_error_pct, r.length_error_sq
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_error_arithmetic() {
        let norm = NormalizationSpec::default();
        let truth = [[90.0, 1000.0, 5.0, 0.0], [360.0, 1000.0, 5.0, 0.0]];
        let est = [[180.0, 0.0, 0.0, 0.0]; 2];
        let e = LengthError::of(&est, &truth, &norm).unwrap();
        assert!((e.l1_pct - 75.0).abs() < 1e-12);
        let span = norm.span(0);
        let sq = ((90.0 / span).powi(2) + (180.0 / span).powi(2)) / 2.0;
        assert!((e.sq - sq).abs() < 1e-15);
        assert_eq!(LengthError::of(&truth, &truth, &norm).unwrap().l1_pct, 0.0);
        assert!(LengthError::of(&[], &[], &norm).is_err());
    }

    #[test]
    fn length_error_matches_recomputation() {
        let norm = NormalizationSpec::default();
        let truth: Vec<[f64; 4]> = (0..10).map(|i| [40.0 + 29.0 * i as f64, 0.0, 0.0, 0.0]).collect();
        let est: Vec<[f64; 4]> = (0..10)
            .map(|i| [55.0 + 23.0 * i as f64 + (i % 3) as f64, 0.0, 0.0, 0.0])
            .collect();
        let mut l1 = 0.0;
        for i in 0..10 {
            l1 += ((est[i][0] - truth[i][0]) / truth[i][0]).abs();
        }
        let e = LengthError::of(&est, &truth, &norm).unwrap();
        assert!((e.l1_pct - 10.0 * l1).abs() < 1e-12);
    }

    #[test]
    fn crossing_of_a_decay() {
        let errs: Vec<f64> = (0..1000).map(|i| 1.0 + 100.0 * (-(i as f64) / 100.0).exp()).collect();
        let c = first_crossing(&errs, 1).unwrap();
        // 1 + 100 e^{-i/100} < 2 · min ⇔ i > 100 ln(100 / (1 + 2·100 e^{-9.99}) ) ≈ 460.
        let floor = errs[999];
        let expect = (100.0 * (100.0 / (2.0 * floor - 1.0)).ln()).ceil() as usize;
        assert_eq!(c, expect);
        assert!(first_crossing(&errs, 50).unwrap() > c);
        assert_eq!(first_crossing(&[], 5), None);
    }

    fn checkpoint() -> Checkpoint {
        use crate::neural::{AdamState, InputScaler, NetPlan, ResidualNet};
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let mut x: Vec<f64> = (0..15)
                    .map(|k| 1e-9 * (1.0 + ((i * k) % 7) as f64) * 10f64.powi(-i))
                    .collect();
                x.push(100.0 + 300.0 * i as f64);
                x
            })
            .collect();
        let scaler = InputScaler::fit(rows.iter().map(|r| r.as_slice()), 15, 100.0, 2900.0).unwrap();
        let net = ResidualNet::init(NetPlan::reference(16), 1).unwrap();
        Checkpoint {
            adam: AdamState::new(net.param_count(), AdamState::DEFAULT_LR),
            net,
            scaler,
            norm: NormalizationSpec::default(),
            seed: 1,
        }
    }

    #[test]
    fn sweeps_have_one_finite_row_per_point_and_repeat() {
        let ck = checkpoint();
        let cfg = SweepConfig {
            draws: 3,
            seed: 4,
            ..SweepConfig::default()
        };
        let angles: Vec<f64> = [0.0, 8.0, 18.0].iter().map(|d: &f64| d.to_radians()).collect();
        let a = angle_sweep(&ck, &angles, &[2.0, 5.0, 8.0], &cfg).unwrap();
        assert_eq!(a.len(), 9);
        assert!(a.iter().all(|r| r.error.l1_pct.is_finite() && r.error.count == 3));
        assert_eq!((a[3].value.round(), a[3].speed), (8.0, 2.0));
        assert_eq!(a, angle_sweep(&ck, &angles, &[2.0, 5.0, 8.0], &cfg).unwrap());
        let d = depth_sweep(&ck, &[100.0, 3000.0], &[5.0], &cfg).unwrap();
        assert_eq!(d.len(), 2);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, "depth", &d).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn scatter_has_ten_rows_per_length_below_the_angle_cap() {
        let ck = checkpoint();
        let cfg = SweepConfig::default();
        let rows = length_scatter(&ck, &[60.0, 200.0], 10, &cfg).unwrap();
        assert_eq!(rows.len(), 20);
        assert_eq!(rows.iter().filter(|r| r.length == 60.0).count(), 10);
        assert!(rows
            .iter()
            .all(|r| r.track_angle.abs() <= cfg.scatter_max_angle && r.estimate.is_finite()));
    }
}
