use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::config::{GateMode, TrainConfig};
use crate::corpus::vocab::{END, SPECIALS, START};
use crate::corpus::{CharArcScores, StoryExample, PADDING_CHARACTER};
use crate::error::{Error, Result};
use crate::numerics::fd::{relative_error, STEP};
use crate::numerics::rng::{self, Stream};
use crate::seq2seq::Network;

#[derive(Clone, Debug, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub numel: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub max_rel_error: f64,
    pub seconds: f64,
}

fn loss(net: &Network<f64>, ex: &StoryExample) -> Result<f64> {
    let mut f = net.forward();
    let l = f.example_nll(ex, GateMode::Soft, None)?;
    Ok(f.g.value(l).data()[0])
}

/// Compares the analytic gradient of one example's summed NLL with central
/// differences for every entry of every parameter tensor, at 64-bit, with
/// the soft gate and without dropout.
pub fn gradient_check(net: &Network<f64>, ex: &StoryExample) -> Result<GradCheckReport> {
    let started = Instant::now();
    let analytic: Vec<_> = {
        let mut f = net.forward();
        let l = f.example_nll(ex, GateMode::Soft, None)?;
        let mut grads = f.g.backward(l)?;
        f.p.vars()
            .iter()
            .zip(net.params.tensors())
            .map(|(&v, t)| grads.take(v).unwrap_or_else(|| crate::numerics::Tensor::zeros(t.shape())))
            .collect()
    };
    let mut probe = net.clone();
    let mut tensors = Vec::with_capacity(analytic.len());
    for (k, a) in analytic.iter().enumerate() {
        let mut max_rel: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for i in 0..a.numel() {
            let x = probe.params.tensors()[k].data()[i];
            probe.params.tensors_mut()[k].data_mut()[i] = x + STEP;
            let up = loss(&probe, ex)?;
            probe.params.tensors_mut()[k].data_mut()[i] = x - STEP;
            let down = loss(&probe, ex)?;
            probe.params.tensors_mut()[k].data_mut()[i] = x;
            let numeric = (up - down) / (2.0 * STEP);
            let g = a.data()[i];
            max_rel = max_rel.max(relative_error(g, numeric));
            max_abs = max_abs.max((g - numeric).abs());
        }
        tensors.push(TensorCheck {
            name: net.params.names()[k].clone(),
            numel: a.numel(),
            max_rel_error: max_rel,
            max_abs_error: max_abs,
        });
    }
    let max_rel_error = tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        tensors,
        max_rel_error,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// A random example over a vocabulary of `vocab_size` ids with
/// `characters` real characters (the rest padding).
pub fn synthetic_example(cfg: &TrainConfig, vocab_size: usize, characters: usize, seed: u64) -> Result<StoryExample> {
    if vocab_size <= SPECIALS.len() {
        return Err(Error::InvalidConfig("vocabulary must exceed the special tokens".into()));
    }
    if characters == 0 || characters > cfg.max_chars {
        return Err(Error::InvalidConfig(format!("characters must lie in 1..={}", cfg.max_chars)));
    }
    let mut r = rng::keyed(seed, Stream::Sampling, &[vocab_size as u64]);
    let mut words = |n: usize| -> Vec<usize> { (0..n).map(|_| r.random_range(SPECIALS.len()..vocab_size)).collect() };
    let context = words(4);
    let input = words(3);
    let target = [vec![START], words(3), vec![END]].concat();
    let mut scores = Vec::with_capacity(cfg.max_chars);
    for c in 0..cfg.max_chars {
        if c < characters {
            let mut s = CharArcScores::zeros(&format!("c{c}"));
            s.plutchik.iter_mut().for_each(|x| *x = [0.0, 2.0 / 3.0, 1.0][r.random_range(0..3)]);
            s.maslow.iter_mut().for_each(|x| *x = f32::from(r.random_bool(0.4)));
            s.reiss.iter_mut().for_each(|x| *x = f32::from(r.random_bool(0.2)));
            scores.push(s);
        } else {
            scores.push(CharArcScores::zeros(PADDING_CHARACTER));
        }
    }
    Ok(StoryExample {
        story_id: "synthetic".into(),
        context_tokens: context,
        input_tokens: input,
        target_tokens: target,
        char_scores: scores,
    })
}
