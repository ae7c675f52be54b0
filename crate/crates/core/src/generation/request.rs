//! Wire format of a generation request and its validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::labels::{Indicator, PsychLabelSpace, MASLOW_SIZE, PLUTCHIK_SIZE, REISS_SIZE};
use crate::corpus::{tokenize, PADDING_CHARACTER, MAX_SENTENCE_TOKENS};
use crate::error::{Error, Result};

/// Sentences generated after the input sentence.
pub const GENERATED_SENTENCES: usize = 4;
pub const DEFAULT_MAX_LEN: usize = MAX_SENTENCE_TOKENS;

/// One sentence of a Plutchik arc: an explicit 8-vector, a single label
/// (`"joy"`, or `"none"` for no emotion) or a list of labels at score 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArcEntry {
    Scores(Vec<f64>),
    Label(String),
    Labels(Vec<String>),
}

/// Story-level needs: label names or a multi-hot vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NeedSpec {
    Hot(Vec<f64>),
    Names(Vec<String>),
}

impl Default for NeedSpec {
    fn default() -> Self {
        NeedSpec::Names(Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRequest {
    pub first_sentence: String,
    pub characters: Vec<String>,
    /// One arc per character, in `characters` order.
    pub plutchik_arcs: Vec<Vec<ArcEntry>>,
    #[serde(default)]
    pub maslow: NeedSpec,
    #[serde(default)]
    pub reiss: NeedSpec,
    /// `"greedy"`, `"sample"`, or `{"mode": "sample", "temperature": t}`.
    #[serde(default)]
    pub decode: Option<Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decode {
    Greedy,
    Sample { temperature: f64 },
}

impl Decode {
    pub fn parse(v: Option<&Value>) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidRequest {
            field: "decode".into(),
            reason: reason.into(),
        };
        let (mode, temperature) = match v {
            None | Some(Value::Null) => return Ok(Decode::Greedy),
            Some(Value::String(s)) => (s.as_str(), None),
            Some(Value::Object(o)) => {
                let mode = o.get("mode").and_then(Value::as_str).ok_or_else(|| bad("missing `mode`"))?;
                if let Some(k) = o.keys().find(|k| *k != "mode" && *k != "temperature") {
                    return Err(bad(&format!("unknown field `{k}`")));
                }
                let t = match o.get("temperature") {
                    None => None,
                    Some(t) => Some(t.as_f64().ok_or_else(|| bad("temperature must be a number"))?),
                };
                (mode, t)
            }
            Some(_) => return Err(bad("expected a string or an object")),
        };
        match mode {
            "greedy" => Ok(Decode::Greedy),
            "sample" => {
                let temperature = temperature.unwrap_or(1.0);
                if !(temperature.is_finite() && temperature > 0.0) {
                    return Err(Error::InvalidRequest {
                        field: "decode.temperature".into(),
                        reason: "temperature must be positive".into(),
                    });
                }
                Ok(Decode::Sample { temperature })
            }
            other => Err(Error::UnknownDecodeMode(other.to_string())),
        }
    }
}

/// A request checked against a label space and a model's character limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidRequest {
    pub first_sentence: String,
    pub characters: Vec<String>,
    /// `plutchik[c][k]` is character `c`'s vector for sentence `k + 2`.
    pub plutchik: Vec<Vec<Vec<f32>>>,
    pub maslow: Vec<f32>,
    pub reiss: Vec<f32>,
    pub decode: Decode,
    pub seed: u64,
    pub max_len: usize,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidRequest {
        field: field.into(),
        reason: reason.into(),
    }
}

fn unit_interval(field: &str, xs: &[f64]) -> Result<Vec<f32>> {
    if let Some(x) = xs.iter().find(|x| !(x.is_finite() && (0.0..=1.0).contains(*x))) {
        return Err(invalid(field, format!("score {x} outside [0, 1]")));
    }
    Ok(xs.iter().map(|&x| x as f32).collect())
}

fn label_vector<S: AsRef<str>>(labels: &PsychLabelSpace, which: Indicator, field: &str, names: &[S]) -> Result<Vec<f32>> {
    let mut v = vec![0.0; labels.labels(which).len()];
    for n in names {
        let n = n.as_ref();
        if which == Indicator::Plutchik && n.trim().eq_ignore_ascii_case(PADDING_CHARACTER) {
            continue;
        }
        let i = labels.index_of(which, n).map_err(|_| Error::UnknownLabelAt {
            field: field.to_string(),
            name: n.to_string(),
        })?;
        v[i] = 1.0;
    }
    Ok(v)
}

fn needs(labels: &PsychLabelSpace, which: Indicator, field: &str, spec: &NeedSpec, size: usize) -> Result<Vec<f32>> {
    match spec {
        NeedSpec::Names(names) => label_vector(labels, which, field, names),
        NeedSpec::Hot(v) if v.len() == size => unit_interval(field, v),
        NeedSpec::Hot(v) => Err(invalid(field, format!("{} values, expected {size}", v.len()))),
    }
}

impl GenerationRequest {
    pub fn validate(&self, labels: &PsychLabelSpace, max_chars: usize) -> Result<ValidRequest> {
        if tokenize(&self.first_sentence).is_empty() {
            return Err(invalid("first_sentence", "sentence has no tokens"));
        }
        if self.characters.is_empty() || self.characters.len() > max_chars {
            return Err(invalid("characters", format!("expected 1..={max_chars} characters")));
        }
        for (i, c) in self.characters.iter().enumerate() {
            if c.trim().is_empty() || c == PADDING_CHARACTER {
                return Err(invalid(format!("characters[{i}]"), format!("`{c}` is not a usable name")));
            }
            if self.characters[..i].contains(c) {
                return Err(invalid(format!("characters[{i}]"), format!("duplicate character `{c}`")));
            }
        }
        if self.plutchik_arcs.len() != self.characters.len() {
            return Err(Error::ArcLengthMismatch {
                field: "plutchik_arcs".into(),
                reason: format!("{} arcs for {} characters", self.plutchik_arcs.len(), self.characters.len()),
            });
        }
        let first_len = self.plutchik_arcs[0].len();
        let mut plutchik = Vec::with_capacity(self.characters.len());
        for (c, arc) in self.plutchik_arcs.iter().enumerate() {
            let field = format!("plutchik_arcs[{c}]");
            if arc.len() != GENERATED_SENTENCES && arc.len() != GENERATED_SENTENCES + 1 {
                return Err(Error::ArcLengthMismatch {
                    field,
                    reason: format!("{} entries, expected 4 or 5", arc.len()),
                });
            }
            if arc.len() != first_len {
                return Err(Error::ArcLengthMismatch {
                    field,
                    reason: format!("{} entries, first arc has {first_len}", arc.len()),
                });
            }
            let skip = arc.len() - GENERATED_SENTENCES;
            let mut rows = Vec::with_capacity(GENERATED_SENTENCES);
            for (k, entry) in arc.iter().enumerate() {
                let field = format!("plutchik_arcs[{c}][{k}]");
                let row = match entry {
                    ArcEntry::Scores(v) if v.len() == PLUTCHIK_SIZE => unit_interval(&field, v)?,
                    ArcEntry::Scores(v) => {
                        return Err(invalid(field, format!("{} scores, expected {PLUTCHIK_SIZE}", v.len())))
                    }
                    ArcEntry::Label(l) => label_vector(labels, Indicator::Plutchik, &field, std::slice::from_ref(l))?,
                    ArcEntry::Labels(ls) => label_vector(labels, Indicator::Plutchik, &field, ls)?,
                };
                if k >= skip {
                    rows.push(row);
                }
            }
            plutchik.push(rows);
        }
        let maslow = needs(labels, Indicator::Maslow, "maslow", &self.maslow, MASLOW_SIZE)?;
        let reiss = needs(labels, Indicator::Reiss, "reiss", &self.reiss, REISS_SIZE)?;
        if self.max_len == 0 || self.max_len > 4 * MAX_SENTENCE_TOKENS {
            return Err(invalid("max_len", format!("expected 1..={}", 4 * MAX_SENTENCE_TOKENS)));
        }
        Ok(ValidRequest {
            first_sentence: self.first_sentence.clone(),
            characters: self.characters.clone(),
            plutchik,
            maslow,
            reiss,
            decode: Decode::parse(self.decode.as_ref())?,
            seed: self.seed,
            max_len: self.max_len,
        })
    }
}
