//! Dense residual network with hand-written reverse mode.
//!
//! Layout: input → FC 64 → FC 64 → linear 64→128 → 5 residual blocks
//! (128 → 128 → 256 → 128, ReLU on every layer, identity skip) → linear
//! 128→64 → FC 64 → FC 64 → linear output 4. Weights are stored `(in, out)`
//! row-major in one flat vector, each followed by its bias.

mod adam;
mod checkpoint;
mod scaler;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use scaler::InputScaler;

use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Layer widths of a [`ResidualNet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetPlan {
    pub input: usize,
    /// Fully connected ReLU layers before the blocks.
    pub stem: Vec<usize>,
    /// Residual stream width.
    pub width: usize,
    pub blocks: usize,
    /// Middle width inside each block.
    pub hidden: usize,
    /// Fully connected ReLU layers after the blocks.
    pub head: Vec<usize>,
    pub output: usize,
}

impl NetPlan {
    /// The reference architecture for `input` features.
    pub fn reference(input: usize) -> Self {
        Self {
            input,
            stem: vec![64, 64],
            width: 128,
            blocks: 5,
            hidden: 256,
            head: vec![64, 64],
            output: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.input, self.width, self.hidden, self.output];
        if all.contains(&0) || self.stem.contains(&0) || self.head.contains(&0) {
            return Err(Error::config("network layer widths must be positive"));
        }
        Ok(())
    }

    /// Compact text form, e.g. `16|64,64|128x5/256|64,64|4`.
    pub fn describe(&self) -> String {
        let j = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "{}|{}|{}x{}/{}|{}|{}",
            self.input,
            j(&self.stem),
            self.width,
            self.blocks,
            self.hidden,
            j(&self.head),
            self.output
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad network plan {s:?}"));
        let list = |p: &str| -> Result<Vec<usize>> {
            if p.is_empty() {
                return Ok(Vec::new());
            }
            p.split(',').map(|x| x.parse().map_err(|_| bad())).collect()
        };
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 5 {
            return Err(bad());
        }
        let (wb, hidden) = parts[2].split_once('/').ok_or_else(bad)?;
        let (width, blocks) = wb.split_once('x').ok_or_else(bad)?;
        let plan = Self {
            input: parts[0].parse().map_err(|_| bad())?,
            stem: list(parts[1])?,
            width: width.parse().map_err(|_| bad())?,
            blocks: blocks.parse().map_err(|_| bad())?,
            hidden: hidden.parse().map_err(|_| bad())?,
            head: list(parts[3])?,
            output: parts[4].parse().map_err(|_| bad())?,
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dense {
    input: usize,
    output: usize,
    offset: usize,
    relu: bool,
}

impl Dense {
    fn len(&self) -> usize {
        (self.input + 1) * self.output
    }

    fn weights<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape(
            (self.input, self.output),
            &p[self.offset..self.offset + self.input * self.output],
        )
        .expect("layer slice")
    }

    fn bias<'a>(&self, p: &'a [f64]) -> ArrayView1<'a, f64> {
        let s = self.offset + self.input * self.output;
        ArrayView1::from(&p[s..s + self.output])
    }

    fn grads<'a>(&self, g: &'a mut [f64]) -> (ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>) {
        let (w, b) = g[self.offset..self.offset + self.len()].split_at_mut(self.input * self.output);
        (
            ArrayViewMut2::from_shape((self.input, self.output), w).expect("layer slice"),
            ArrayViewMut1::from(b),
        )
    }

    fn forward(&self, p: &[f64], x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights(p));
        z += &self.bias(p);
        if self.relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(
        &self,
        p: &[f64],
        grad: &mut [f64],
        x: &Array2<f64>,
        y: &Array2<f64>,
        mut g: Array2<f64>,
    ) -> Array2<f64> {
        if self.relu {
            g.zip_mut_with(y, |gi, &yi| {
                if yi <= 0.0 {
                    *gi = 0.0;
                }
            });
        }
        let (mut gw, mut gb) = self.grads(grad);
        gw += &x.t().dot(&g);
        gb += &g.sum_axis(Axis(0));
        g.dot(&self.weights(p).t())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Dense(Dense),
    Block([Dense; 3]),
}

/// Recorded activations of one batch forward pass: `(input, output)` of
/// every dense layer in execution order.
#[derive(Debug, Clone)]
pub struct Tape {
    layers: Vec<(Array2<f64>, Array2<f64>)>,
    param_count: usize,
}

impl Tape {
    /// Network output for the recorded batch.
    pub fn output(&self) -> &Array2<f64> {
        &self.layers.last().expect("non-empty tape").1
    }
}

/// Residual MLP with a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualNet {
    plan: NetPlan,
    stages: Vec<Stage>,
    params: Vec<f64>,
}

impl ResidualNet {
    /// Zero-initialised network.
    pub fn zeros(plan: NetPlan) -> Result<Self> {
        plan.validate()?;
        let mut offset = 0;
        let mut dense = |input: usize, output: usize, relu: bool| {
            let d = Dense {
                input,
                output,
                offset,
                relu,
            };
            offset += d.len();
            d
        };
        let mut stages = Vec::new();
        let mut prev = plan.input;
        for &w in &plan.stem {
            stages.push(Stage::Dense(dense(prev, w, true)));
            prev = w;
        }
        stages.push(Stage::Dense(dense(prev, plan.width, false)));
        for _ in 0..plan.blocks {
            stages.push(Stage::Block([
                dense(plan.width, plan.width, true),
                dense(plan.width, plan.hidden, true),
                dense(plan.hidden, plan.width, true),
            ]));
        }
        prev = plan.width;
        if let Some(&first) = plan.head.first() {
            stages.push(Stage::Dense(dense(prev, first, false)));
            prev = first;
        }
        for &w in &plan.head {
            stages.push(Stage::Dense(dense(prev, w, true)));
            prev = w;
        }
        stages.push(Stage::Dense(dense(prev, plan.output, false)));
        Ok(Self {
            plan,
            stages,
            params: vec![0.0; offset],
        })
    }

    /// He-uniform weights `U(±√(6/fan_in))` and zero biases, except that the
    /// last layer of each residual branch and the output layer are scaled by
    /// [`Self::DAMPED_INIT`] and the output bias sits at the centre of the
    /// normalised range. Undamped, the ReLU branches compound through the
    /// blocks and the initial outputs land far outside `[0, 1]`.
    pub fn init(plan: NetPlan, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(plan)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut damped: Vec<usize> = net
            .stages
            .iter()
            .filter_map(|s| match s {
                Stage::Block(b) => Some(b[2].offset),
                _ => None,
            })
            .collect();
        let last = *net.dense_layers().last().expect("plan has an output layer");
        damped.push(last.offset);
        for d in net.dense_layers() {
            let scale = if damped.contains(&d.offset) {
                Self::DAMPED_INIT
            } else {
                1.0
            };
            let a = scale * (6.0 / d.input as f64).sqrt();
            for w in &mut net.params[d.offset..d.offset + d.input * d.output] {
                *w = rng.random_range(-a..a);
            }
        }
        let bias = last.offset + last.input * last.output;
        net.params[bias..bias + last.output].fill(0.5);
        Ok(net)
    }

    /// Init scale of residual-branch outputs and the output layer.
    pub const DAMPED_INIT: f64 = 0.1;

    fn dense_layers(&self) -> Vec<Dense> {
        let mut out = Vec::new();
        for s in &self.stages {
            match s {
                Stage::Dense(d) => out.push(*d),
                Stage::Block(b) => out.extend_from_slice(b),
            }
        }
        out
    }

    pub fn plan(&self) -> &NetPlan {
        &self.plan
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// `(weight_range, bias_range)` of every dense layer in execution order.
    pub fn layer_ranges(&self) -> Vec<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        self.dense_layers()
            .iter()
            .map(|d| {
                let w = d.offset..d.offset + d.input * d.output;
                (w.clone(), w.end..w.end + d.output)
            })
            .collect()
    }

    /// Zeros every weight and bias inside the residual blocks.
    pub fn zero_blocks(&mut self) {
        let blocks: Vec<Dense> = self
            .stages
            .iter()
            .filter_map(|s| match s {
                Stage::Block(b) => Some(b.to_vec()),
                _ => None,
            })
            .flatten()
            .collect();
        for d in blocks {
            self.params[d.offset..d.offset + d.len()].fill(0.0);
        }
    }

    /// Applies everything before the first block. Exposed for testing the
    /// residual stream.
    pub fn forward_until_blocks(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = x.clone();
        for s in &self.stages {
            match s {
                Stage::Dense(d) => a = d.forward(&self.params, &a),
                Stage::Block(_) => break,
            }
        }
        a
    }

    /// Forward pass over a batch (one row per sample), recording a tape.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<Tape> {
        if x.ncols() != self.plan.input {
            return Err(Error::Shape {
                expected: self.plan.input,
                found: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("network input must be finite"));
        }
        let p = &self.params;
        let mut layers = Vec::new();
        let mut a = x.clone();
        for s in &self.stages {
            match s {
                Stage::Dense(d) => {
                    let y = d.forward(p, &a);
                    layers.push((a, y.clone()));
                    a = y;
                }
                Stage::Block(b) => {
                    let mut h = a.clone();
                    for d in b {
                        let y = d.forward(p, &h);
                        layers.push((h, y.clone()));
                        h = y;
                    }
                    a = a + h;
                }
            }
        }
        // The last dense output is the network output only when the final
        // stage is dense, which the plan guarantees.
        Ok(Tape {
            layers,
            param_count: self.params.len(),
        })
    }

    /// Output for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).map_err(|e| Error::domain(e.to_string()))?;
        Ok(self.forward_batch(&x)?.output().row(0).to_vec())
    }

    /// Reverse pass: given `∂loss/∂output` per batch row, returns the
    /// parameter gradient and `∂loss/∂input`.
    pub fn backward(&self, tape: &Tape, d_out: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        if tape.param_count != self.params.len() || tape.layers.len() != self.dense_layers().len() {
            return Err(Error::Shape {
                expected: self.dense_layers().len(),
                found: tape.layers.len(),
            });
        }
        if d_out.dim() != tape.output().dim() {
            return Err(Error::Shape {
                expected: tape.output().ncols(),
                found: d_out.ncols(),
            });
        }
        let p = &self.params;
        let mut grad = vec![0.0; p.len()];
        let mut g = d_out.clone();
        let mut li = tape.layers.len();
        for s in self.stages.iter().rev() {
            match s {
                Stage::Dense(d) => {
                    li -= 1;
                    let (x, y) = &tape.layers[li];
                    g = d.backward(p, &mut grad, x, y, g);
                }
                Stage::Block(b) => {
                    let mut h = g.clone();
                    for d in b.iter().rev() {
                        li -= 1;
                        let (x, y) = &tape.layers[li];
                        h = d.backward(p, &mut grad, x, y, h);
                    }
                    g += &h;
                }
            }
        }
        Ok((grad, g))
    }
}
