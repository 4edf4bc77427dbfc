//! Binary dataset container and CSV export.

use std::io::Write;
use std::path::Path;

use super::{Dataset, NormalizationSpec, SampleMeta, TrainingSample};
use crate::codec::{join_floats, write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::hydro::HullModel;
use crate::wake::SensorParams;

const MAGIC: &str = "MAGWAKE1";
const VERSION: u32 = 1;

pub(crate) fn encode(ds: &Dataset) -> Vec<u8> {
    let mut e = Encoder::new(MAGIC);
    e.header("version", VERSION);
    e.header("k", ds.k);
    e.header("count", ds.samples.len());
    e.header("hull", ds.hull);
    e.header("snr_db", format!("{:?}", ds.snr_db));
    e.header("seed", ds.seed);
    e.header("norm_lo", join_floats(&ds.norm.lo));
    e.header("norm_hi", join_floats(&ds.norm.hi));
    let s = &ds.sensor;
    e.header("sensor", join_floats(&[s.speed, s.sample_rate, s.altitude, s.x0, s.y0]));
    e.end_header();
    for smp in &ds.samples {
        e.f64s(&smp.x);
        e.f64s(&smp.y);
        e.u64(smp.meta.seed);
        for &i in &smp.meta.index {
            e.u32(i);
        }
        e.u8(u8::from(smp.meta.noisy));
    }
    e.finish()
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    if let Some(s) = ds.samples.iter().find(|s| s.x.len() != ds.k + 1) {
        return Err(Error::Shape {
            expected: ds.k + 1,
            found: s.x.len(),
        });
    }
    write_atomic(path, &encode(ds))
}

fn four(v: Vec<f64>, key: &str) -> Result<[f64; 4]> {
    v.try_into().map_err(|_| Error::Format(format!("{key} needs 4 values")))
}

pub(crate) fn decode(bytes: &[u8], expected_k: Option<usize>) -> Result<Dataset> {
    let mut d = Decoder::new(bytes, MAGIC)?;
    let version: u32 = d.parse("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let k: usize = d.parse("k")?;
    if let Some(want) = expected_k {
        if want != k {
            return Err(Error::Shape {
                expected: want,
                found: k,
            });
        }
    }
    let count: usize = d.parse("count")?;
    let hull: HullModel = d.parse("hull")?;
    let snr_db: f64 = d.parse("snr_db")?;
    let seed: u64 = d.parse("seed")?;
    let norm = NormalizationSpec {
        lo: four(d.floats("norm_lo")?, "norm_lo")?,
        hi: four(d.floats("norm_hi")?, "norm_hi")?,
    };
    norm.validate().map_err(|e| Error::Format(e.to_string()))?;
    let s = d.floats("sensor")?;
    if s.len() != 5 {
        return Err(Error::Format("sensor needs 5 values".into()));
    }
    let sensor = SensorParams {
        speed: s[0],
        sample_rate: s[1],
        altitude: s[2],
        x0: s[3],
        y0: s[4],
        samples: k,
    };
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let x = d.f64s(k + 1)?;
        let y = four(d.f64s(4)?, "target")?;
        let seed = d.u64()?;
        let mut index = [0u32; 5];
        for i in index.iter_mut() {
            *i = d.u32()?;
        }
        let noisy = match d.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("bad noise flag {b}"))),
        };
        let smp = TrainingSample {
            x,
            y,
            meta: SampleMeta { seed, index, noisy },
        };
        smp.validate(k, &norm)?;
        samples.push(smp);
    }
    d.finish()?;
    Ok(Dataset {
        k,
        norm,
        sensor,
        hull,
        snr_db,
        seed,
        samples,
    })
}

/// Loads a dataset; with `expected_k` set, a different sample count is a
/// shape error.
pub fn load_dataset(path: &Path, expected_k: Option<usize>) -> Result<Dataset> {
    decode(&std::fs::read(path)?, expected_k)
}

/// One row per sample: targets, depth, series summary and split.
pub fn write_csv(mut w: impl Write, ds: &Dataset) -> Result<()> {
    writeln!(w, "length,beam_coeff,speed,track_angle_deg,depth,mean_h,max_h,held_out")?;
    for s in &ds.samples {
        let m = s.magnitudes();
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        let max = m.iter().copied().fold(0.0, f64::max);
        writeln!(
            w,
            "{},{},{},{},{},{:e},{:e},{}",
            s.y[0],
            s.y[1],
            s.y[2],
            s.y[3].to_degrees(),
            s.depth(),
            mean,
            max,
            u8::from(super::is_held_out(&s.meta.index))
        )?;
    }
    Ok(())
}
