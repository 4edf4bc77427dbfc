//! Losses, the mini-batch training loop, and evaluation.
//!
//! The data loss compares normalised outputs with normalised targets. The
//! physics loss feeds the denormalised, clamped estimate through the forward
//! model and compares predicted with observed magnitudes; its gradient is the
//! physics-head Jacobian composed with reverse mode through the network.
//!
//! Observed magnitudes span hundreds of decades across the grid, so the
//! physics residual is taken between `ln(m + f)` values, `f` a small fraction
//! of the observed series RMS. A common rescaling of observations and field
//! leaves it unchanged.

mod eval;
mod physics;

pub use eval::{
    angle_sweep, depth_sweep, eval_length_error, first_crossing, length_scatter, predict, write_history_csv,
    write_scatter_csv, write_sweep_csv, LengthError, ScatterRow, SweepConfig, SweepRow,
};
pub use physics::{physics_head, physics_head_gradient, HeadJacobian, LengthDerivative, PhysicsContext, FD_STEP};

use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Dataset, NormalizationSpec, TrainingSample};
use crate::error::{Error, Result};
use crate::neural::{AdamState, Checkpoint, InputScaler, NetPlan, ResidualNet};
use crate::seed::derive_seed;

/// Which samples a run trains on, by `|α|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AlphaFilter {
    #[default]
    None,
    /// `|α| <` threshold (rad).
    Below(f64),
    /// `|α| ≥` threshold (rad).
    Above(f64),
}

impl AlphaFilter {
    pub fn below_15() -> Self {
        Self::Below(15f64.to_radians())
    }

    pub fn above_15() -> Self {
        Self::Above(15f64.to_radians())
    }

    pub fn accepts(&self, alpha: f64) -> bool {
        match *self {
            Self::None => true,
            Self::Below(t) => alpha.abs() < t,
            Self::Above(t) => alpha.abs() >= t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Drnn,
    /// Physics-informed loss with `n_mc` Monte Carlo angles.
    Pirnn {
        n_mc: usize,
    },
}

impl LossKind {
    pub fn validate(&self) -> Result<()> {
        if let Self::Pirnn { n_mc } = *self {
            if n_mc < 8 {
                return Err(Error::config(format!(
                    "physics loss needs at least 8 Monte Carlo angles, got {n_mc}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    pub loss: LossKind,
    pub filter: AlphaFilter,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 3000,
            batch: 256,
            lr: AdamState::DEFAULT_LR,
            seed: 0,
            loss: LossKind::Drnn,
            filter: AlphaFilter::None,
        }
    }
}

/// Loss contribution of a sample whose forward model failed.
pub const PHYSICS_PENALTY: f64 = 1e6;

/// Network-ready view of a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Scaled inputs, one row per sample.
    pub inputs: Array2<f64>,
    /// Physical targets `(L_s, S_0, V_s, α)`.
    pub targets: Vec<[f64; 4]>,
    /// Raw observed magnitudes.
    pub observed: Vec<Vec<f64>>,
    pub depths: Vec<f64>,
}

impl Batch {
    pub fn new(samples: &[&TrainingSample], scaler: &InputScaler) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("batch must not be empty"));
        }
        let width = scaler.k + 1;
        let mut inputs = Array2::zeros((samples.len(), width));
        for (i, s) in samples.iter().enumerate() {
            let row = scaler.transform(&s.x)?;
            inputs.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        }
        Ok(Self {
            inputs,
            targets: samples.iter().map(|s| s.y).collect(),
            observed: samples.iter().map(|s| s.magnitudes().to_vec()).collect(),
            depths: samples.iter().map(|s| s.depth()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

fn output_row(out: &Array2<f64>, i: usize) -> [f64; 4] {
    [out[[i, 0]], out[[i, 1]], out[[i, 2]], out[[i, 3]]]
}

/// Mean `‖normalize(y) − ŷ‖²` and its gradient with respect to the outputs.
fn drnn_terms(out: &Array2<f64>, batch: &Batch, norm: &NormalizationSpec) -> (f64, Array2<f64>) {
    let n = batch.len() as f64;
    let mut grad = Array2::zeros(out.dim());
    let mut loss = 0.0;
    for (i, y) in batch.targets.iter().enumerate() {
        let t = norm.normalize(y);
        for j in 0..4 {
            let d = out[[i, j]] - t[j];
            loss += d * d;
            grad[[i, j]] = 2.0 * d / n;
        }
    }
    (loss / n, grad)
}

/// Data loss of `net` on `batch`.
pub fn loss_drnn(net: &ResidualNet, batch: &Batch, norm: &NormalizationSpec) -> Result<f64> {
    let tape = net.forward_batch(&batch.inputs)?;
    Ok(drnn_terms(tape.output(), batch, norm).0)
}

/// Floor added to magnitudes inside the physics residual, as a fraction of
/// the observed series RMS.
pub const RESIDUAL_FLOOR: f64 = 0.05;

/// Absolute floor of the physics residual, matching the quietest series
/// level the input features resolve.
fn residual_floor(observed: &[f64]) -> f64 {
    let rms = (observed.iter().map(|v| v * v).sum::<f64>() / observed.len() as f64).sqrt();
    (RESIDUAL_FLOOR * rms).max(10f64.powf(InputScaler::LEVEL_FLOOR))
}

/// Per-sample physics residual `Σ_k (ln(obs_k + f) − ln(pred_k + f))²`.
pub fn physics_residual(observed: &[f64], predicted: &[f64]) -> f64 {
    let f = residual_floor(observed);
    observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| ((o + f).ln() - (p + f).ln()).powi(2))
        .sum()
}

/// Weight of the penalty on outputs outside the unit box. The physics
/// residual is flat there (estimates are clamped), so without it an output
/// that leaves the box never returns.
pub const BOUND_PENALTY: f64 = 1.0;

/// `BOUND_PENALTY · Σ_j dist(u_j, [0, 1])²` and its gradient.
fn bound_penalty(u: &[f64; 4]) -> (f64, [f64; 4]) {
    let mut loss = 0.0;
    let mut grad = [0.0; 4];
    for j in 0..4 {
        let excess = u[j].min(0.0) + (u[j] - 1.0).max(0.0);
        loss += BOUND_PENALTY * excess * excess;
        grad[j] = 2.0 * BOUND_PENALTY * excess;
    }
    (loss, grad)
}

struct PhysicsTerm {
    loss: f64,
    /// `∂loss/∂(normalised output)`.
    grad: [f64; 4],
}

fn pirnn_sample(
    u: [f64; 4],
    observed: &[f64],
    depth: f64,
    ctx: &PhysicsContext,
    n_mc: usize,
    seed: u64,
    want_grad: bool,
) -> PhysicsTerm {
    let p = ctx.bounds.denormalize(&u);
    let eval = if want_grad {
        physics_head_gradient(&p, depth, ctx, n_mc, seed, LengthDerivative::FiniteDifference)
    } else {
        physics_head(&p, depth, ctx, n_mc, seed).map(|values| HeadJacobian {
            jacobian: Vec::new(),
            values,
            inside: [true; 4],
        })
    };
    let head = match eval {
        Ok(h) => h,
        Err(e) => {
            log::warn!("physics head failed at {p:?}, depth {depth}: {e}");
            let (loss, grad) = bound_penalty(&u);
            return PhysicsTerm {
                loss: PHYSICS_PENALTY + loss,
                grad,
            };
        }
    };
    let f = residual_floor(observed);
    let (mut loss, mut grad) = bound_penalty(&u);
    for (k, (&o, &m)) in observed.iter().zip(&head.values).enumerate() {
        let r = (o + f).ln() - (m + f).ln();
        loss += r * r;
        if want_grad {
            let dm = -2.0 * r / (m + f);
            for j in 0..4 {
                grad[j] += dm * head.jacobian[k][j] * ctx.bounds.span(j);
            }
        }
    }
    PhysicsTerm { loss, grad }
}

fn pirnn_terms(
    out: &Array2<f64>,
    batch: &Batch,
    ctx: &PhysicsContext,
    n_mc: usize,
    seed: u64,
    want_grad: bool,
) -> (f64, Array2<f64>) {
    let terms: Vec<PhysicsTerm> = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            pirnn_sample(
                output_row(out, i),
                &batch.observed[i],
                batch.depths[i],
                ctx,
                n_mc,
                seed,
                want_grad,
            )
        })
        .collect();
    let n = batch.len() as f64;
    let mut grad = Array2::zeros(out.dim());
    let mut loss = 0.0;
    for (i, t) in terms.iter().enumerate() {
        loss += t.loss;
        for j in 0..4 {
            grad[[i, j]] = t.grad[j] / n;
        }
    }
    (loss / n, grad)
}

/// Physics loss of `net` on `batch`, with the angle draw fixed by `seed`.
pub fn loss_pirnn(net: &ResidualNet, batch: &Batch, ctx: &PhysicsContext, n_mc: usize, seed: u64) -> Result<f64> {
    LossKind::Pirnn { n_mc }.validate()?;
    let tape = net.forward_batch(&batch.inputs)?;
    Ok(pirnn_terms(tape.output(), batch, ctx, n_mc, seed, false).0)
}

/// Loss and `∂loss/∂τ` for either loss kind. The data loss ignores `seed`.
pub fn loss_and_gradient(
    net: &ResidualNet,
    batch: &Batch,
    kind: LossKind,
    ctx: &PhysicsContext,
    seed: u64,
) -> Result<(f64, Vec<f64>, Array2<f64>)> {
    kind.validate()?;
    let tape = net.forward_batch(&batch.inputs)?;
    let (loss, d_out) = match kind {
        LossKind::Drnn => drnn_terms(tape.output(), batch, &ctx.bounds),
        LossKind::Pirnn { n_mc } => pirnn_terms(tape.output(), batch, ctx, n_mc, seed, true),
    };
    let (grad, _) = net.backward(&tape, &d_out)?;
    Ok((loss, grad, tape.output().clone()))
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub iteration: u64,
    pub loss: f64,
    /// Mean `|L̂ − L| / L` on the mini-batch, percent.
    pub length_error_pct: f64,
    /// Mean `((L̂ − L) / span)²` on the mini-batch.
    pub length_error_sq: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Last state with finite loss and gradient.
    pub checkpoint: Checkpoint,
    pub history: Vec<HistoryRow>,
    /// Iteration whose loss or gradient went non-finite.
    pub diverged: Option<u64>,
}

/// Indices of `ds` the configuration trains on: the training split filtered
/// by `|α|`.
pub fn training_indices(ds: &Dataset, filter: AlphaFilter) -> Vec<usize> {
    let (train, _) = ds.split();
    train
        .into_iter()
        .filter(|&i| filter.accepts(ds.samples[i].y[3]))
        .collect()
}

/// Fresh checkpoint: initialised network and input scaling fitted to `train`.
pub fn initial_checkpoint(ds: &Dataset, train: &[usize], cfg: &TrainConfig) -> Result<Checkpoint> {
    let (depth_lo, depth_span) = depth_range(ds);
    let scaler = InputScaler::fit(
        train.iter().map(|&i| ds.samples[i].x.as_slice()),
        ds.k,
        depth_lo,
        depth_span,
    )?;
    let net = ResidualNet::init(NetPlan::reference(ds.k + 1), cfg.seed)?;
    let adam = AdamState::new(net.param_count(), cfg.lr);
    Ok(Checkpoint {
        net,
        adam,
        scaler,
        norm: ds.norm,
        seed: cfg.seed,
    })
}

/// Depth range of the set, the origin and span of the affine depth input.
fn depth_range(ds: &Dataset) -> (f64, f64) {
    let (lo, hi) = ds
        .samples
        .iter()
        .map(|s| s.depth())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let span = hi - lo;
    (lo, if span > 0.0 { span } else { 1.0 })
}

fn batch_errors(out: &Array2<f64>, batch: &Batch, norm: &NormalizationSpec) -> (f64, f64) {
    let n = batch.len() as f64;
    let mut l1 = 0.0;
    let mut sq = 0.0;
    for (i, y) in batch.targets.iter().enumerate() {
        let l = norm.lo[0] + out[[i, 0]] * norm.span(0);
        l1 += (l - y[0]).abs() / y[0];
        sq += ((l - y[0]) / norm.span(0)).powi(2);
    }
    (100.0 * l1 / n, sq / n)
}

/// Runs `cfg.iterations` Adam steps from `start`. Iterations are numbered
/// from the checkpoint's step counter, and batch and angle draws are derived
/// from `(seed, iteration)`, so a resumed run continues the same sequence.
pub fn train_from(
    start: Checkpoint,
    ds: &Dataset,
    train: &[usize],
    cfg: &TrainConfig,
    ctx: &PhysicsContext,
) -> Result<TrainOutcome> {
    cfg.loss.validate()?;
    if train.is_empty() {
        return Err(Error::config("no training samples after filtering"));
    }
    if cfg.batch == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let ctx = PhysicsContext {
        bounds: start.norm,
        ..ctx.clone()
    };
    let mut ck = start;
    ck.adam.lr = cfg.lr;
    let mut history = Vec::with_capacity(cfg.iterations);
    let take = cfg.batch.min(train.len());
    for _ in 0..cfg.iterations {
        let it = ck.adam.t;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2 * it));
        let picked: Vec<&TrainingSample> = sample(&mut rng, train.len(), take)
            .into_iter()
            .map(|j| &ds.samples[train[j]])
            .collect();
        let batch = Batch::new(&picked, &ck.scaler)?;
        let (loss, grad, out) = loss_and_gradient(&ck.net, &batch, cfg.loss, &ctx, derive_seed(cfg.seed, 2 * it + 1))?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            log::error!("non-finite loss or gradient at iteration {it}");
            return Ok(TrainOutcome {
                checkpoint: ck,
                history,
                diverged: Some(it),
            });
        }
        let (l1, sq) = batch_errors(&out, &batch, &ck.norm);
        history.push(HistoryRow {
            iteration: it,
            loss,
            length_error_pct: l1,
            length_error_sq: sq,
        });
        let Checkpoint { net, adam, .. } = &mut ck;
        adam.step(net.params_mut(), &grad)?;
        if it.is_multiple_of(100) {
            log::info!("iteration {it}: loss {loss:.4e}, length error {l1:.2}%");
        }
    }
    Ok(TrainOutcome {
        checkpoint: ck,
        history,
        diverged: None,
    })
}

/// Trains a fresh network on the filtered training split of `ds`.
pub fn train(ds: &Dataset, cfg: &TrainConfig, ctx: &PhysicsContext) -> Result<TrainOutcome> {
    let idx = training_indices(ds, cfg.filter);
    if idx.is_empty() {
        return Err(Error::config("no training samples after filtering"));
    }
    let start = initial_checkpoint(ds, &idx, cfg)?;
    train_from(start, ds, &idx, cfg, ctx)
}
