//! Teacher-forced NLL training and gradient verification.

mod gradcheck;

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gradcheck::{gradient_check, synthetic_example, GradCheckReport, TensorCheck};

use crate::config::{GateMode, TrainConfig};
use crate::corpus::StoryExample;
use crate::error::{Error, Result};
use crate::numerics::rng::{self, Stream};
use crate::numerics::{clip_global_norm, AdamConfig, AdamState, Scalar, Tensor};
use crate::seq2seq::Network;

/// Mean of `-log softmax(logits)[target]` over positions whose mask is
/// true. `logits` is `[T, V]`.
pub fn nll_loss<T: Scalar>(logits: &Tensor<T>, targets: &[usize], mask: &[bool]) -> Result<f64> {
    if logits.shape().len() != 2 || logits.rows() != targets.len() || targets.len() != mask.len() {
        return Err(Error::LengthMismatch(format!(
            "logits {:?}, {} targets, {} mask entries",
            logits.shape(),
            targets.len(),
            mask.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, (&t, &keep)) in targets.iter().zip(mask).enumerate() {
        if !keep {
            continue;
        }
        let row: Vec<f64> = logits.row_slice(r).iter().map(|x| x.as_f64()).collect();
        if t >= row.len() {
            return Err(Error::LengthMismatch(format!("target id {t} outside vocabulary of {}", row.len())));
        }
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        total += lse - row[t];
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyInput("every target position is padding".into()));
    }
    Ok(total / count as f64)
}

/// Gate mode used outside training.
pub const INFERENCE_GATE: GateMode = GateMode::HardSt;

/// Mean per-token NLL in evaluation mode (hard gate, no dropout).
pub fn evaluate_nll(net: &Network<f32>, examples: &[StoryExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sums = examples
        .par_iter()
        .map(|ex| {
            let mut f = net.forward();
            let loss = f.example_nll(ex, INFERENCE_GATE, None)?;
            Ok((f.g.value(loss).data()[0].as_f64(), ex.predicted_len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (nll, tokens) = sums.iter().fold((0.0, 0), |(a, n), &(x, k)| (a + x, n + k));
    Ok(nll / tokens as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    pub seconds: f64,
    pub param_count: usize,
    /// Epoch whose parameters the network holds after training.
    pub best_epoch: usize,
    pub best_val_nll: Option<f64>,
    pub stopped_early: bool,
}

/// Mini-batches of example indices for one epoch. Examples are shuffled,
/// grouped by target length, cut into batches, and the batches shuffled.
pub fn make_batches(examples: &[StoryExample], batch: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut rng = rng::keyed(seed, Stream::Batching, &[epoch as u64]);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| examples[i].target_tokens.len());
    let mut batches: Vec<Vec<usize>> = order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect();
    batches.shuffle(&mut rng);
    batches
}

struct ExampleGrad {
    nll: f64,
    tokens: usize,
    grads: Vec<Tensor<f32>>,
}

fn example_grad(net: &Network<f32>, ex: &StoryExample, mode: GateMode, seed: u64, keys: [u64; 2]) -> Result<ExampleGrad> {
    let mut dropout = rng::keyed(seed, Stream::Dropout, &keys);
    let rng: Option<&mut dyn rand::RngCore> = if net.config.dropout > 0.0 {
        Some(&mut dropout)
    } else {
        None
    };
    let mut f = net.forward();
    let loss = f.example_nll(ex, mode, rng)?;
    let nll = f.g.value(loss).data()[0].as_f64();
    let mut grads = f.g.backward(loss)?;
    let grads = f
        .p
        .vars()
        .iter()
        .zip(net.params.tensors())
        .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect();
    Ok(ExampleGrad {
        nll,
        tokens: ex.predicted_len(),
        grads,
    })
}

/// Gradient of the batch's mean per-token NLL, summed per example in
/// parallel and reduced in batch order so results do not depend on
/// scheduling. Returns the summed NLL, token count and gradients.
pub fn batch_gradient(
    net: &Network<f32>,
    examples: &[StoryExample],
    batch: &[usize],
    epoch: usize,
) -> Result<(f64, usize, Vec<Tensor<f32>>)> {
    let mode = net.config.gate_mode;
    let seed = net.config.seed;
    let parts = batch
        .par_iter()
        .map(|&i| example_grad(net, &examples[i], mode, seed, [epoch as u64, i as u64]))
        .collect::<Result<Vec<_>>>()?;
    let tokens: usize = parts.iter().map(|p| p.tokens).sum();
    let mut iter = parts.into_iter();
    let first = iter.next().ok_or(Error::EmptyDataset)?;
    let mut nll = first.nll;
    let mut grads = first.grads;
    for p in iter {
        nll += p.nll;
        for (g, x) in grads.iter_mut().zip(&p.grads) {
            g.add_assign(x);
        }
    }
    let inv = 1.0 / tokens as f32;
    for g in &mut grads {
        g.scale_assign(inv);
    }
    Ok((nll, tokens, grads))
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFiniteValue(_) => Error::DivergedLoss { epoch },
        other => other,
    }
}

/// Trains `net` in place. `on_epoch` sees every epoch's log, the current
/// network and whether this epoch is the best so far; callers persist
/// logs and checkpoints from there. With a validation set, `net` ends up
/// holding the best-validation parameters.
pub fn train(
    net: &mut Network<f32>,
    train_set: &[StoryExample],
    val_set: &[StoryExample],
    mut on_epoch: impl FnMut(&EpochLog, &Network<f32>, bool) -> Result<()>,
) -> Result<TrainReport> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cfg: TrainConfig = net.config.clone();
    cfg.validate()?;
    let started = Instant::now();
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        net.params.tensors(),
    );
    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, Vec<Tensor<f32>>)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.epochs {
        let t0 = Instant::now();
        let mut nll = 0.0;
        let mut tokens = 0;
        for batch in make_batches(train_set, cfg.batch, cfg.seed, epoch) {
            let (sum, n, mut grads) = batch_gradient(net, train_set, &batch, epoch).map_err(diverged(epoch))?;
            nll += sum;
            tokens += n;
            let norm = clip_global_norm(&mut grads, cfg.clip_norm);
            if !norm.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            adam.step(net.params.tensors_mut(), &grads)?;
        }
        let train_nll = nll / tokens as f64;
        if !train_nll.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        let val_nll = if val_set.is_empty() {
            None
        } else {
            Some(evaluate_nll(net, val_set).map_err(diverged(epoch))?)
        };
        let log = EpochLog {
            epoch,
            train_nll,
            val_nll,
            seconds: t0.elapsed().as_secs_f64(),
        };
        let improved = match (val_nll, &best) {
            (Some(v), Some((b, _, _))) => v < *b,
            (Some(_), None) => true,
            (None, _) => true,
        };
        if improved {
            since_best = 0;
            if let Some(v) = val_nll {
                best = Some((v, epoch, net.params.tensors().to_vec()));
            }
        } else {
            since_best += 1;
        }
        log::info!(
            "epoch {epoch}: train_nll {train_nll:.4}{}",
            val_nll.map(|v| format!(" val_nll {v:.4}")).unwrap_or_default()
        );
        on_epoch(&log, net, improved)?;
        epochs.push(log);
        if cfg.patience > 0 && since_best >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    let (best_epoch, best_val_nll) = match best {
        Some((v, e, tensors)) => {
            net.params.tensors_mut().clone_from_slice(&tensors);
            (e, Some(v))
        }
        None => (epochs.len(), None),
    };
    Ok(TrainReport {
        epochs,
        seconds: started.elapsed().as_secs_f64(),
        param_count: net.params.numel(),
        best_epoch,
        best_val_nll,
        stopped_early,
    })
}
