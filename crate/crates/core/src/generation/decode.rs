use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::request::{Decode, ValidRequest, GENERATED_SENTENCES};
use crate::corpus::examples::{build_context, encode_sentence};
use crate::corpus::vocab::{END, PAD, START};
use crate::corpus::{CharArcScores, MAX_SENTENCE_TOKENS, PADDING_CHARACTER};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numerics::argmax;
use crate::numerics::rng::{self, Stream};
use crate::seq2seq::{AttentionTrace, Network};
use crate::training::INFERENCE_GATE;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSentence {
    /// Emitted ids, ending with the end marker.
    pub ids: Vec<usize>,
    /// One entry per emitted id.
    pub trace: AttentionTrace,
}

impl GeneratedSentence {
    /// Ids without the end marker.
    pub fn words(&self) -> &[usize] {
        match self.ids.last() {
            Some(&END) => &self.ids[..self.ids.len() - 1],
            _ => &self.ids,
        }
    }
}

/// Chooses the next id from `logits`. `PAD` and `START` are never emitted
/// and the end marker is barred at step 0 so no sentence comes out empty.
fn choose(logits: &[f64], step: usize, decode: Decode, rng: &mut dyn RngCore) -> usize {
    let banned = |i: usize| i == PAD || i == START || (step == 0 && i == END);
    match decode {
        Decode::Greedy => {
            let masked: Vec<f64> = logits
                .iter()
                .enumerate()
                .map(|(i, &x)| if banned(i) { f64::NEG_INFINITY } else { x })
                .collect();
            argmax(&masked)
        }
        Decode::Sample { temperature } => {
            let max = logits
                .iter()
                .enumerate()
                .filter(|(i, _)| !banned(*i))
                .map(|(_, &x)| x)
                .fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logits
                .iter()
                .enumerate()
                .map(|(i, &x)| if banned(i) { 0.0 } else { ((x - max) / temperature).exp() })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut last = 0;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    last = i;
                    if u < w {
                        return i;
                    }
                    u -= w;
                }
            }
            last
        }
    }
}

/// Decodes one sentence from the start marker until the end marker. After
/// `max_len` words the end marker is forced.
pub fn generate_sentence(
    net: &Network<f32>,
    context: &[usize],
    input: &[usize],
    char_scores: &[CharArcScores],
    decode: Decode,
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Result<GeneratedSentence> {
    let mut f = net.forward();
    let enc = f.encode(context, input)?;
    let pmr = f.pmr(char_scores)?;
    let mut state = f.initial_state(&enc);
    let mut prev = START;
    let mut ids = Vec::new();
    let mut trace = AttentionTrace::default();
    for step in 0..=max_len {
        let out = f.step(prev, state, &enc, &pmr, INFERENCE_GATE, None)?;
        state = out.state;
        trace.steps.push(out.trace);
        let next = if step == max_len {
            END
        } else {
            let logits = f.g.value(out.logits).to_f64_vec();
            choose(&logits, step, decode, rng)
        };
        ids.push(next);
        if next == END {
            break;
        }
        prev = next;
    }
    Ok(GeneratedSentence { ids, trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedStory {
    /// The input sentence verbatim, then the generated ones.
    pub sentences: Vec<String>,
    pub generated: Vec<GeneratedSentence>,
    /// Character names in slot order, padded.
    pub slots: Vec<String>,
}

impl GeneratedStory {
    /// Selected character name per emitted token, per generated sentence.
    pub fn selected_characters(&self) -> Vec<Vec<String>> {
        self.generated
            .iter()
            .map(|s| s.trace.steps.iter().map(|t| self.slots[t.selected].clone()).collect())
            .collect()
    }
}

/// Slot scores for generated sentence `k` (0-based): real characters take
/// their arc entry, the rest are padding.
pub fn request_scores(req: &ValidRequest, k: usize, max_chars: usize) -> Vec<CharArcScores> {
    (0..max_chars)
        .map(|c| match req.characters.get(c) {
            Some(name) => CharArcScores {
                character: name.clone(),
                plutchik: req.plutchik[c][k].clone(),
                maslow: req.maslow.clone(),
                reiss: req.reiss.clone(),
            },
            None => CharArcScores::padding(),
        })
        .collect()
}

/// Generates one sentence per entry of `scores`, each conditioned on the
/// first sentence and everything generated so far. Returns the text of
/// every sentence (input first) and the generated details.
pub fn rollout(
    model: &Model,
    first_sentence: &str,
    scores: &[Vec<CharArcScores>],
    decode: Decode,
    seed: u64,
    max_len: usize,
) -> Result<(Vec<String>, Vec<GeneratedSentence>)> {
    let mut encoded = vec![encode_sentence(first_sentence, &model.vocab)];
    let mut sentences = vec![first_sentence.to_string()];
    let mut generated = Vec::with_capacity(scores.len());
    for (k, slot_scores) in scores.iter().enumerate() {
        let context = build_context(&encoded[..k]);
        let mut r = rng::keyed(seed, Stream::Sampling, &[k as u64]);
        let s = generate_sentence(&model.net, &context, &encoded[k], slot_scores, decode, max_len, &mut r)?;
        sentences.push(detokenize(&model.vocab.decode(s.words())));
        let mut ids = s.words().to_vec();
        ids.truncate(MAX_SENTENCE_TOKENS);
        encoded.push(ids);
        generated.push(s);
    }
    Ok((sentences, generated))
}

/// Rolls out the remaining sentences, each conditioned on what came before
/// it, including earlier generated sentences.
pub fn generate_story(model: Option<&Model>, req: &ValidRequest) -> Result<GeneratedStory> {
    let model = model.ok_or(Error::ModelNotLoaded)?;
    let max_chars = model.net.config.max_chars;
    if req.characters.len() > max_chars {
        return Err(Error::InvalidRequest {
            field: "characters".into(),
            reason: format!("model supports at most {max_chars} characters"),
        });
    }
    if req.plutchik.iter().any(|arc| arc.len() != GENERATED_SENTENCES) {
        return Err(Error::ArcLengthMismatch {
            field: "plutchik_arcs".into(),
            reason: format!("expected {GENERATED_SENTENCES} entries per character"),
        });
    }
    let scores: Vec<Vec<CharArcScores>> =
        (0..GENERATED_SENTENCES).map(|k| request_scores(req, k, max_chars)).collect();
    let (sentences, generated) = rollout(model, &req.first_sentence, &scores, req.decode, req.seed, req.max_len)?;
    let slots = (0..max_chars)
        .map(|c| req.characters.get(c).cloned().unwrap_or_else(|| PADDING_CHARACTER.to_string()))
        .collect();
    Ok(GeneratedStory {
        sentences,
        generated,
        slots,
    })
}

const ATTACHED: [&str; 6] = [".", ",", "!", "?", ";", ":"];

/// Joins tokens with spaces, reattaches punctuation to the preceding word
/// and capitalizes the first character.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for t in tokens {
        let t = t.as_ref();
        if !out.is_empty() && !ATTACHED.contains(&t) {
            out.push(' ');
        }
        out.push_str(t);
    }
    let mut chars = out.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => out,
    }
}

/// Trace matrices of one sentence, rows are emitted tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionExport {
    /// `tokens × max_chars` character-gate probabilities.
    pub char_gate: Vec<Vec<f64>>,
    /// `tokens × 32` state attention, columns in `slot_labels` order.
    pub psy_attention: Vec<Vec<f64>>,
    pub slot_labels: Vec<String>,
    pub selected_characters: Vec<String>,
    pub tokens: Vec<String>,
}

pub fn export_attention(trace: &AttentionTrace, slot_labels: &[String], slots: &[String], tokens: Vec<String>) -> AttentionExport {
    AttentionExport {
        char_gate: trace.steps.iter().map(|s| s.char_gate.clone()).collect(),
        psy_attention: trace.steps.iter().map(|s| s.psy_attention.clone()).collect(),
        slot_labels: slot_labels.to_vec(),
        selected_characters: trace.steps.iter().map(|s| slots[s.selected].clone()).collect(),
        tokens,
    }
}

/// Body of a successful generation response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub story: Vec<String>,
    pub traces: Vec<AttentionExport>,
    pub seed: u64,
}

impl GenerationResponse {
    pub fn new(model: &Model, story: &GeneratedStory, seed: u64) -> Self {
        let slot_labels = model.labels.slot_labels();
        let traces = story
            .generated
            .iter()
            .map(|s| export_attention(&s.trace, &slot_labels, &story.slots, model.vocab.decode(&s.ids)))
            .collect();
        Self {
            story: story.sentences.clone(),
            traces,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrainConfig;
    use crate::corpus::{PsychLabelSpace, Vocabulary};
    use crate::generation::GenerationRequest;

    fn model() -> Model {
        let words = ["jervis", "has", "been", "single", "for", "a", "long", "time", ".", "she", "said", "yes"];
        let vocab = Vocabulary::from_tokens(
            crate::corpus::vocab::SPECIALS.iter().chain(&words).map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let cfg = TrainConfig {
            emb_dim: 6,
            hidden: 5,
            enc_layers: 1,
            dropout: 0.0,
            ..TrainConfig::default()
        };
        let net = Network::new(cfg, vocab.len()).unwrap();
        Model::new(net, vocab, PsychLabelSpace::default())
    }

    fn request(decode: Option<serde_json::Value>) -> ValidRequest {
        let mut r: GenerationRequest = serde_json::from_str(
            r#"{"first_sentence": "Jervis has been single for a long time.",
                "characters": ["Jervis", "Girlfriend"],
                "plutchik_arcs": [["sadness", "anticipation", "joy", "joy", "joy"],
                                  ["none", "none", "joy", "joy", "joy"]],
                "maslow": ["love"], "reiss": ["contact", "romance"], "seed": 7}"#,
        )
        .unwrap();
        r.decode = decode;
        r.validate(&PsychLabelSpace::default(), 3).unwrap()
    }

    #[test]
    fn detokenize_attaches_punctuation() {
        assert_eq!(detokenize(&["she", "said", "yes", ",", "twice", "!"]), "She said yes, twice!");
        assert_eq!(detokenize::<&str>(&[]), "");
    }

    #[test]
    fn story_has_five_sentences_and_keeps_input() {
        let m = model();
        let req = request(None);
        let story = generate_story(Some(&m), &req).unwrap();
        assert_eq!(story.sentences.len(), 5);
        assert_eq!(story.sentences[0], req.first_sentence);
        for s in &story.generated {
            assert_eq!(s.trace.len(), s.ids.len());
            assert_eq!(*s.ids.last().unwrap(), END);
            assert!(s.ids.len() >= 2 && s.ids.len() <= req.max_len + 1);
            for t in &s.trace.steps {
                assert!((t.psy_attention.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                assert_eq!(t.char_gate[2], 0.0);
            }
        }
    }

    #[test]
    fn greedy_is_repeatable_and_cold_sampling_matches_it() {
        // Spread the output biases so logit gaps dwarf a cold temperature.
        let mut m = model();
        let b = m.net.params.by_name_mut("out.b").unwrap().data_mut();
        let n = b.len();
        for (i, x) in b.iter_mut().enumerate() {
            *x = ((i * 7) % n) as f32;
        }
        let greedy = generate_story(Some(&m), &request(None)).unwrap();
        assert_eq!(greedy, generate_story(Some(&m), &request(None)).unwrap());
        for seed in 0..20 {
            let mut req = request(Some(serde_json::json!({"mode": "sample", "temperature": 1e-4})));
            req.seed = seed;
            let cold = generate_story(Some(&m), &req).unwrap();
            assert_eq!(cold.sentences, greedy.sentences);
        }
    }

    #[test]
    fn missing_model_is_reported() {
        assert!(matches!(generate_story(None, &request(None)), Err(Error::ModelNotLoaded)));
    }

    #[test]
    fn masked_slot_scores_are_inert() {
        let m = model();
        let req = request(None);
        let ctx: Vec<usize> = vec![];
        let input = encode_sentence(&req.first_sentence, &m.vocab);
        let run = |scores: &[CharArcScores]| {
            let mut r = rng::stream(0, Stream::Sampling);
            generate_sentence(&m.net, &ctx, &input, scores, Decode::Greedy, 25, &mut r).unwrap()
        };
        let base = request_scores(&req, 0, 3);
        let mut noisy = base.clone();
        noisy[2].plutchik = vec![0.9; 8];
        noisy[2].reiss[4] = 1.0;
        assert_eq!(run(&base), run(&noisy));
    }

    #[test]
    fn export_round_trips_through_json() {
        let m = model();
        let story = generate_story(Some(&m), &request(None)).unwrap();
        let resp = GenerationResponse::new(&m, &story, 7);
        let t = &resp.traces[0];
        assert_eq!(t.psy_attention[0].len(), 32);
        assert_eq!(t.char_gate.len(), t.tokens.len());
        let back: GenerationResponse = serde_json::from_str(&serde_json::to_string(&resp).unwrap()).unwrap();
        for (x, y) in resp.traces.iter().zip(&back.traces) {
            for (rx, ry) in x.psy_attention.iter().zip(&y.psy_attention) {
                for (a, b) in rx.iter().zip(ry) {
                    assert!((a - b).abs() <= 1e-9);
                }
            }
        }
    }
}
