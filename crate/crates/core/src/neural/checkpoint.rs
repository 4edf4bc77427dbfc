//! Network checkpoints: plan, seed, optimiser step, input scaling and target
//! bounds in the header; parameters and Adam moments in the body.

use std::path::Path;

use super::{AdamState, InputScaler, NetPlan, ResidualNet};
use crate::codec::{join_floats, write_atomic, Decoder, Encoder};
use crate::dataset::NormalizationSpec;
use crate::error::{Error, Result};

const MAGIC: &str = "MWNET1";

/// Everything needed to resume training or run inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: ResidualNet,
    pub adam: AdamState,
    pub scaler: InputScaler,
    pub norm: NormalizationSpec,
    pub seed: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new(MAGIC);
        e.header("plan", self.net.plan().describe());
        e.header("seed", self.seed);
        e.header("step", self.adam.t);
        e.header("params", self.net.param_count());
        e.header(
            "adam",
            join_floats(&[self.adam.lr, self.adam.beta1, self.adam.beta2, self.adam.eps]),
        );
        let s = &self.scaler;
        e.header("scaler_k", s.k);
        e.header("scaler_floor", format!("{:?}", s.floor));
        e.header("scaler_level", join_floats(&[s.level_mean, s.level_std]));
        e.header("scaler_shape_mean", join_floats(&s.shape_mean));
        e.header("scaler_shape_std", format!("{:?}", s.shape_std));
        e.header("scaler_depth", join_floats(&[s.depth_lo, s.depth_span]));
        e.header("norm_lo", join_floats(&self.norm.lo));
        e.header("norm_hi", join_floats(&self.norm.hi));
        e.end_header();
        e.f64s(self.net.params());
        e.f64s(&self.adam.m);
        e.f64s(&self.adam.v);
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut d = Decoder::new(bytes, MAGIC)?;
        let plan = NetPlan::parse(d.get("plan")?)?;
        let seed: u64 = d.parse("seed")?;
        let step: u64 = d.parse("step")?;
        let n: usize = d.parse("params")?;
        let mut net = ResidualNet::zeros(plan)?;
        if n != net.param_count() {
            return Err(Error::Shape {
                expected: net.param_count(),
                found: n,
            });
        }
        let hyper = d.floats("adam")?;
        if hyper.len() != 4 {
            return Err(Error::Format("adam needs 4 values".into()));
        }
        let k: usize = d.parse("scaler_k")?;
        let depth = d.floats("scaler_depth")?;
        let level = d.floats("scaler_level")?;
        if level.len() != 2 || depth.len() != 2 {
            return Err(Error::Format("scaler_level and scaler_depth need 2 values".into()));
        }
        let scaler = InputScaler {
            k,
            floor: d.parse("scaler_floor")?,
            level_mean: level[0],
            level_std: level[1],
            shape_mean: d.floats("scaler_shape_mean")?,
            shape_std: d.parse("scaler_shape_std")?,
            depth_lo: *depth.first().ok_or_else(|| Error::Format("scaler_depth".into()))?,
            depth_span: *depth.get(1).ok_or_else(|| Error::Format("scaler_depth".into()))?,
        };
        if scaler.shape_mean.len() != k || k + 1 != net.plan().input {
            return Err(Error::Shape {
                expected: net.plan().input,
                found: k + 1,
            });
        }
        let four = |v: Vec<f64>| -> Result<[f64; 4]> {
            v.try_into().map_err(|_| Error::Format("bounds need 4 values".into()))
        };
        let norm = NormalizationSpec {
            lo: four(d.floats("norm_lo")?)?,
            hi: four(d.floats("norm_hi")?)?,
        };
        net.params_mut().copy_from_slice(&d.f64s(n)?);
        let mut adam = AdamState::new(n, hyper[0]);
        adam.beta1 = hyper[1];
        adam.beta2 = hyper[2];
        adam.eps = hyper[3];
        adam.t = step;
        adam.m = d.f64s(n)?;
        adam.v = d.f64s(n)?;
        d.finish()?;
        Ok(Self {
            net,
            adam,
            scaler,
            norm,
            seed,
        })
    }

    /// Denormalised `(L_s, S_0, V_s, α)` estimate for one raw input.
    pub fn predict(&self, x: &[f64]) -> Result<[f64; 4]> {
        let out = self.net.forward(&self.scaler.transform(x)?)?;
        let u: [f64; 4] = out.try_into().map_err(|v: Vec<f64>| Error::Shape {
            expected: 4,
            found: v.len(),
        })?;
        Ok(self.norm.denormalize(&u))
    }
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_atomic(path, &ck.to_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_crc() {
        let net = ResidualNet::init(NetPlan::reference(5), 5).unwrap();
        let mut adam = AdamState::new(net.param_count(), 5e-4);
        adam.t = 17;
        adam.m[3] = 0.25;
        let ck = Checkpoint {
            scaler: InputScaler::fit([[1.0, 2.0, 3.0, 4.0, 5.0].as_slice()], 4, 100.0, 2900.0).unwrap(),
            net,
            adam,
            norm: NormalizationSpec::default(),
            seed: 99,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.ck");
        save_checkpoint(&p, &ck).unwrap();
        let back = load_checkpoint(&p).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.adam.t, 17);
        let mut bytes = ck.to_bytes();
        let n = bytes.len();
        bytes[n - 10] ^= 4;
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::Checksum { .. })));
    }
}
