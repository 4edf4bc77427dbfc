//! Network input features.
//!
//! Magnitudes span hundreds of decades across the grid and slow vessels
//! underflow to exact zeros, so a plain per-feature log standardisation is
//! dominated by the zeros and flattens everything else. Each series is split
//! into a level, `log10(rms)` clipped below at [`InputScaler::LEVEL_FLOOR`],
//! and a shape, `log10(m / rms + floor)` centred over the series. Both are
//! standardised on the training set and summed per sample instant: the mean
//! over instants recovers the level, the deviations recover the shape. Depth
//! is mapped affinely to `[0, 1]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InputScaler {
    pub k: usize,
    /// Shape floor as a fraction of the series RMS.
    pub floor: f64,
    pub level_mean: f64,
    pub level_std: f64,
    pub shape_mean: Vec<f64>,
    /// Pooled over instants, so relative shape is preserved.
    pub shape_std: f64,
    pub depth_lo: f64,
    pub depth_span: f64,
}

struct Split {
    level: f64,
    shape: Vec<f64>,
}

fn nonzero_or_one(s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

impl InputScaler {
    pub const DEFAULT_FLOOR: f64 = 0.05;
    /// Lowest series level kept, `log10` of the RMS magnitude. Anything
    /// quieter is indistinguishable from no signal.
    pub const LEVEL_FLOOR: f64 = -40.0;

    fn split(x: &[f64], k: usize, floor: f64) -> Split {
        let m = &x[..k];
        let rms = (m.iter().map(|v| v * v).sum::<f64>() / k as f64).sqrt();
        let level = if rms > 0.0 {
            rms.log10().max(Self::LEVEL_FLOOR)
        } else {
            Self::LEVEL_FLOOR
        };
        let mut shape: Vec<f64> = if rms > 0.0 {
            m.iter().map(|v| (v / rms + floor).log10()).collect()
        } else {
            vec![floor.log10(); k]
        };
        let c = shape.iter().sum::<f64>() / k as f64;
        shape.iter_mut().for_each(|s| *s -= c);
        Split { level, shape }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.k + 1 {
            return Err(Error::Shape {
                expected: self.k + 1,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Fits the standardisation to `rows` of `K + 1` raw inputs.
    pub fn fit<'a>(
        rows: impl IntoIterator<Item = &'a [f64]>,
        k: usize,
        depth_lo: f64,
        depth_span: f64,
    ) -> Result<Self> {
        if !(depth_span > 0.0) {
            return Err(Error::config("depth span must be positive"));
        }
        if k == 0 {
            return Err(Error::config("input scaling needs at least one magnitude"));
        }
        let mut splits = Vec::new();
        for x in rows {
            if x.len() != k + 1 {
                return Err(Error::Shape {
                    expected: k + 1,
                    found: x.len(),
                });
            }
            splits.push(Self::split(x, k, Self::DEFAULT_FLOOR));
        }
        if splits.is_empty() {
            return Err(Error::config("cannot fit input scaling to an empty set"));
        }
        let n = splits.len() as f64;
        let level_mean = splits.iter().map(|s| s.level).sum::<f64>() / n;
        let level_var = splits.iter().map(|s| (s.level - level_mean).powi(2)).sum::<f64>() / n;
        let mut shape_mean = vec![0.0; k];
        for s in &splits {
            shape_mean.iter_mut().zip(&s.shape).for_each(|(m, v)| *m += v / n);
        }
        let shape_var = splits
            .iter()
            .flat_map(|s| s.shape.iter().zip(&shape_mean).map(|(v, m)| (v - m).powi(2)))
            .sum::<f64>()
            / (n * k as f64);
        Ok(Self {
            k,
            floor: Self::DEFAULT_FLOOR,
            level_mean,
            level_std: nonzero_or_one(level_var.sqrt()),
            shape_mean,
            shape_std: nonzero_or_one(shape_var.sqrt()),
            depth_lo,
            depth_span,
        })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let s = Self::split(x, self.k, self.floor);
        let level = (s.level - self.level_mean) / self.level_std;
        let mut out: Vec<f64> = s
            .shape
            .iter()
            .zip(&self.shape_mean)
            .map(|(v, m)| level + (v - m) / self.shape_std)
            .collect();
        out.push((x[self.k] - self.depth_lo) / self.depth_span);
        Ok(out)
    }
}
