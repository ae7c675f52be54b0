//! Character-conditioned Plutchik classifier and the emotion-control
//! accuracy built on it.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::labels::PLUTCHIK_SIZE;
use crate::corpus::{tokenize, Vocabulary};
use crate::error::{Error, Result};
use crate::interface::checkpoint::{encode_container, read_tensors, split_container, tensor_entries, TensorEntry};
use crate::numerics::rng::{self, Stream};
use crate::numerics::{argmax, clip_global_norm, AdamConfig, AdamState, Graph, Init, ParamStore, Tensor, Var};

/// Anything that maps (character, sentence) to 8 Plutchik probabilities.
pub trait PlutchikPredictor: Send + Sync {
    fn predict(&self, character: &str, sentence: &str) -> Result<Vec<f64>>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcerConfig {
    pub emb_dim: usize,
    pub hidden: usize,
    pub dense: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub min_count: usize,
}

impl Default for AcerConfig {
    fn default() -> Self {
        Self {
            emb_dim: 64,
            hidden: 128,
            dense: 64,
            epochs: 20,
            lr: 1e-3,
            batch_size: 16,
            seed: 0,
            min_count: 1,
        }
    }
}

impl AcerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.emb_dim == 0 || self.hidden == 0 || self.dense == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("classifier sizes must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig("classifier lr must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// One labeled (character, sentence) pair; `target` is multi-hot over the
/// Plutchik states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcerPair {
    pub character: String,
    pub sentence: String,
    pub target: Vec<f32>,
}

/// Tensor order inside the store.
const NAMES: [&str; 11] = [
    "embedding",
    "fwd.w_ih",
    "fwd.w_hh",
    "fwd.b",
    "bwd.w_ih",
    "bwd.w_hh",
    "bwd.b",
    "dense1.w",
    "dense1.b",
    "dense2.w",
    "dense2.b",
];

/// Embedding, one bidirectional LSTM layer, a ReLU dense layer and 8
/// independent sigmoid outputs over `character tokens ‖ sentence tokens`.
#[derive(Clone, Debug)]
pub struct AcerClassifier {
    pub config: AcerConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore<f32>,
}

fn shapes(cfg: &AcerConfig, vocab: usize) -> [(Vec<usize>, Init); 11] {
    let (e, h, d) = (cfg.emb_dim, cfg.hidden, cfg.dense);
    [
        (vec![vocab, e], Init::Glorot),
        (vec![e, 4 * h], Init::Glorot),
        (vec![h, 4 * h], Init::Glorot),
        (vec![1, 4 * h], Init::ForgetBias),
        (vec![e, 4 * h], Init::Glorot),
        (vec![h, 4 * h], Init::Glorot),
        (vec![1, 4 * h], Init::ForgetBias),
        (vec![2 * h, d], Init::Glorot),
        (vec![1, d], Init::Zeros),
        (vec![d, PLUTCHIK_SIZE], Init::Glorot),
        (vec![1, PLUTCHIK_SIZE], Init::Zeros),
    ]
}

fn input_ids(vocab: &Vocabulary, character: &str, sentence: &str) -> Vec<usize> {
    let mut toks = tokenize(character);
    toks.extend(tokenize(sentence));
    vocab.encode(&toks)
}

impl AcerClassifier {
    pub fn new(config: AcerConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let mut r = rng::stream(config.seed, Stream::Init);
        let mut params = ParamStore::new();
        for (name, (shape, init)) in NAMES.iter().zip(shapes(&config, vocab.len())) {
            params.register(name, &shape, init, &mut r)?;
        }
        Ok(Self { config, vocab, params })
    }

    fn check_layout(&self) -> Result<()> {
        let expected = shapes(&self.config, self.vocab.len());
        let ok = self.params.len() == NAMES.len()
            && self
                .params
                .iter()
                .zip(NAMES.iter().zip(&expected))
                .all(|((_, n, t), (name, (shape, _)))| n == *name && t.shape() == shape.as_slice());
        if ok {
            Ok(())
        } else {
            Err(Error::Checkpoint("classifier tensors do not match its config".into()))
        }
    }

    /// Logits `[1, 8]` for `ids`, built on `g` with bound parameters `p`.
    fn logits(&self, g: &mut Graph<'_, f32>, p: &[Var], ids: &[usize]) -> Result<Var> {
        if ids.is_empty() {
            return Err(Error::EmptyInput("classifier input has no tokens".into()));
        }
        let h = self.config.hidden;
        let x = g.embedding(p[0], ids)?;
        let mut finals = Vec::with_capacity(2);
        for (dir, reverse) in [(1, false), (4, true)] {
            let xw = g.matmul(x, p[dir])?;
            let xw = g.add_row(xw, p[dir + 2])?;
            let mut hs = g.constant(Tensor::zeros(&[1, h]));
            let mut cs = g.constant(Tensor::zeros(&[1, h]));
            let order: Vec<usize> = if reverse {
                (0..ids.len()).rev().collect()
            } else {
                (0..ids.len()).collect()
            };
            for t in order {
                let xt = g.slice_rows(xw, t, 1)?;
                let hw = g.matmul(hs, p[dir + 1])?;
                let gates = g.add(xt, hw)?;
                let i = g.slice_cols(gates, 0, h)?;
                let f = g.slice_cols(gates, h, h)?;
                let c_hat = g.slice_cols(gates, 2 * h, h)?;
                let o = g.slice_cols(gates, 3 * h, h)?;
                let (i, f, o) = (g.sigmoid(i)?, g.sigmoid(f)?, g.sigmoid(o)?);
                let c_hat = g.tanh(c_hat)?;
                let keep = g.mul(f, cs)?;
                let write = g.mul(i, c_hat)?;
                cs = g.add(keep, write)?;
                let tc = g.tanh(cs)?;
                hs = g.mul(o, tc)?;
            }
            finals.push(hs);
        }
        let enc = g.concat_cols(&finals)?;
        let z = g.matmul(enc, p[7])?;
        let z = g.add_row(z, p[8])?;
        let z = g.relu(z)?;
        let z = g.matmul(z, p[9])?;
        g.add_row(z, p[10])
    }

    pub fn probabilities(&self, character: &str, sentence: &str) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let ids = input_ids(&self.vocab, character, sentence);
        let z = self.logits(&mut g, p.vars(), &ids)?;
        let probs = g.sigmoid(z)?;
        Ok(g.value(probs).to_f64_vec())
    }

    /// Summed BCE and its gradients for one pair.
    fn pair_grad(&self, pair: &AcerPair) -> Result<(f64, Vec<Tensor<f32>>)> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let ids = input_ids(&self.vocab, &pair.character, &pair.sentence);
        let z = self.logits(&mut g, p.vars(), &ids)?;
        let loss = g.bce_with_logits(z, Tensor::row(pair.target.clone()))?;
        let value = f64::from(g.value(loss).data()[0]);
        let mut grads = g.backward(loss)?;
        let out = p
            .vars()
            .iter()
            .zip(self.params.tensors())
            .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect();
        Ok((value, out))
    }

    /// Trains on `pairs`, building the vocabulary from them. Returns the
    /// classifier and the mean BCE per pair of every epoch.
    pub fn train(config: AcerConfig, pairs: &[AcerPair]) -> Result<(Self, Vec<f64>)> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(p) = pairs.iter().find(|p| p.target.len() != PLUTCHIK_SIZE) {
            return Err(Error::ShapeMismatch(format!("target of `{}` has {} entries", p.character, p.target.len())));
        }
        let mut counts = HashMap::new();
        for p in pairs {
            for t in tokenize(&p.character).into_iter().chain(tokenize(&p.sentence)) {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let vocab = Vocabulary::from_counts(&counts, config.min_count);
        let mut clf = Self::new(config, vocab)?;
        let mut adam = AdamState::new(
            AdamConfig {
                lr: clf.config.lr,
                ..AdamConfig::default()
            },
            clf.params.tensors(),
        );
        let mut history = Vec::with_capacity(clf.config.epochs);
        for epoch in 0..clf.config.epochs {
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.shuffle(&mut rng::keyed(clf.config.seed, Stream::Batching, &[epoch as u64]));
            let mut total = 0.0;
            for batch in order.chunks(clf.config.batch_size) {
                let parts = batch
                    .par_iter()
                    .map(|&i| clf.pair_grad(&pairs[i]))
                    .collect::<Result<Vec<_>>>()?;
                let mut iter = parts.into_iter();
                let (mut loss, mut grads) = iter.next().expect("chunks are nonempty");
                for (l, gs) in iter {
                    loss += l;
                    grads.iter_mut().zip(&gs).for_each(|(a, b)| a.add_assign(b));
                }
                if !loss.is_finite() {
                    return Err(Error::DivergedLoss { epoch });
                }
                let inv = 1.0 / batch.len() as f32;
                grads.iter_mut().for_each(|g| g.scale_assign(inv));
                clip_global_norm(&mut grads, 5.0);
                adam.step(clf.params.tensors_mut(), &grads)?;
                total += loss;
            }
            history.push(total / pairs.len() as f64);
        }
        Ok((clf, history))
    }

    /// Fraction of correct thresholded decisions, per state.
    pub fn per_state_accuracy(&self, pairs: &[AcerPair]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let preds = pairs
            .par_iter()
            .map(|p| self.probabilities(&p.character, &p.sentence))
            .collect::<Result<Vec<_>>>()?;
        let mut hits = [0usize; PLUTCHIK_SIZE];
        for (p, pair) in preds.iter().zip(pairs) {
            for s in 0..PLUTCHIK_SIZE {
                hits[s] += usize::from((p[s] >= 0.5) == (pair.target[s] >= 0.5));
            }
        }
        Ok(hits.iter().map(|&h| h as f64 / pairs.len() as f64).collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = AcerHeader {
            format: ACER_FORMAT.to_string(),
            version: 1,
            config: self.config.clone(),
            vocab: self.vocab.tokens().to_vec(),
            params: tensor_entries(&self.params),
        };
        encode_container(&header, &self.params)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (head, payload) = split_container(bytes)?;
        let h: AcerHeader =
            serde_json::from_slice(head).map_err(|e| Error::Checkpoint(format!("bad classifier header: {e}")))?;
        if h.format != ACER_FORMAT || h.version != 1 {
            return Err(Error::Checkpoint(format!("unsupported classifier `{}` version {}", h.format, h.version)));
        }
        let clf = Self {
            config: h.config,
            vocab: Vocabulary::from_tokens(h.vocab)?,
            params: read_tensors(&h.params, payload)?,
        };
        clf.check_layout()?;
        Ok(clf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

const ACER_FORMAT: &str = "SOCP-ACER";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcerHeader {
    format: String,
    version: u32,
    config: AcerConfig,
    vocab: Vec<String>,
    params: Vec<TensorEntry>,
}

impl PlutchikPredictor for AcerClassifier {
    fn predict(&self, character: &str, sentence: &str) -> Result<Vec<f64>> {
        self.probabilities(character, sentence)
    }
}

/// How a prediction is matched against a multi-state target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum MatchRule {
    /// Hit iff the most probable state is one of the target states.
    #[default]
    ArgmaxInTarget,
    /// Hit iff any of the `k` most probable states is a target state.
    TopK { k: usize },
    /// Hit iff the Jaccard overlap of predicted states (probability at
    /// least 0.5) and target states reaches `threshold`.
    Jaccard { threshold: f64 },
}

/// One generated sentence and the Plutchik vector asked of a character.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcerItem {
    pub character: String,
    pub sentence: String,
    pub target: Vec<f32>,
}

fn is_hit(probs: &[f64], target: &[f32], rule: MatchRule) -> bool {
    let wanted = |s: usize| target[s] > 0.0;
    match rule {
        MatchRule::ArgmaxInTarget => wanted(argmax(probs)),
        MatchRule::TopK { k } => {
            let mut idx: Vec<usize> = (0..probs.len()).collect();
            idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
            idx.into_iter().take(k).any(wanted)
        }
        MatchRule::Jaccard { threshold } => {
            let predicted = |s: usize| probs[s] >= 0.5;
            let inter = (0..probs.len()).filter(|&s| predicted(s) && wanted(s)).count();
            let union = (0..probs.len()).filter(|&s| predicted(s) || wanted(s)).count();
            inter as f64 / union as f64 >= threshold
        }
    }
}

/// Hits over evaluable items: non-padding characters whose target has at
/// least one positive state. Returns `(accuracy, evaluated items)`.
pub fn acer_score(items: &[AcerItem], clf: &dyn PlutchikPredictor, rule: MatchRule) -> Result<(f64, usize)> {
    let evaluable: Vec<&AcerItem> = items
        .iter()
        .filter(|i| i.character != crate::corpus::PADDING_CHARACTER && i.target.iter().any(|&x| x > 0.0))
        .collect();
    if evaluable.is_empty() {
        return Err(Error::NoEvaluablePairs);
    }
    let hits = evaluable
        .par_iter()
        .map(|i| {
            let probs = clf.predict(&i.character, &i.sentence)?;
            if probs.len() != i.target.len() {
                return Err(Error::ShapeMismatch(format!("{} probabilities for {} states", probs.len(), i.target.len())));
            }
            Ok(usize::from(is_hit(&probs, &i.target, rule)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok((hits as f64 / evaluable.len() as f64, evaluable.len()))
}
