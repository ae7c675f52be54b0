//! Single-file checkpoints: an 8-byte little-endian header length, a JSON
//! header, then every tensor as row-major little-endian `f32` in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{PsychLabelSpace, Vocabulary};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numerics::{ParamStore, Tensor};
use crate::seq2seq::Network;

pub const FORMAT: &str = "SOCP-CKPT";
pub const VERSION: u32 = 1;
const DTYPE: &str = "f32";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    pub labels: PsychLabelSpace,
    pub vocab: Vec<String>,
    pub params: Vec<TensorEntry>,
}

/// Header length prefix, header bytes, then the payload.
pub fn encode_container<H: Serialize>(header: &H, params: &ParamStore<f32>) -> Result<Vec<u8>> {
    let head = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(8 + head.len() + 4 * params.numel());
    out.extend_from_slice(&(head.len() as u64).to_le_bytes());
    out.extend_from_slice(&head);
    for t in params.tensors() {
        for x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

/// Splits `bytes` into the header JSON and the payload.
pub fn split_container(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let prefix: [u8; 8] = bytes.get(..8).ok_or_else(|| bad("file shorter than the header prefix"))?.try_into().unwrap();
    let len = usize::try_from(u64::from_le_bytes(prefix)).map_err(|_| bad("header length overflows"))?;
    let end = 8usize.checked_add(len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
    Ok((&bytes[8..end], &bytes[end..]))
}

/// Rebuilds named tensors from `entries` over `payload`, which must be
/// exactly as long as the entries require.
pub fn read_tensors(entries: &[TensorEntry], payload: &[u8]) -> Result<ParamStore<f32>> {
    let expected: usize = entries.iter().map(|e| e.shape.iter().product::<usize>() * 4).sum();
    if payload.len() != expected {
        return Err(Error::Checkpoint(format!(
            "payload holds {} bytes, header describes {expected}",
            payload.len()
        )));
    }
    let mut store = ParamStore::new();
    let mut at = 0;
    for e in entries {
        if e.dtype != DTYPE {
            return Err(Error::Checkpoint(format!("tensor `{}` has unsupported dtype `{}`", e.name, e.dtype)));
        }
        let n: usize = e.shape.iter().product();
        let data = payload[at..at + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        at += 4 * n;
        store
            .insert(&e.name, Tensor::new(e.shape.clone(), data)?)
            .map_err(|_| Error::Checkpoint(format!("duplicate tensor `{}`", e.name)))?;
    }
    Ok(store)
}

pub fn tensor_entries(params: &ParamStore<f32>) -> Vec<TensorEntry> {
    params
        .iter()
        .map(|(_, name, t)| TensorEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            dtype: DTYPE.to_string(),
        })
        .collect()
}

impl Model {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            format: FORMAT.to_string(),
            version: VERSION,
            config: self.net.config.clone(),
            labels: self.labels.clone(),
            vocab: self.vocab.tokens().to_vec(),
            params: tensor_entries(&self.net.params),
        };
        encode_container(&header, &self.net.params)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (head, payload) = split_container(bytes)?;
        let header: Header =
            serde_json::from_slice(head).map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint `{}` version {}",
                header.format, header.version
            )));
        }
        header.labels.validate()?;
        let vocab = Vocabulary::from_tokens(header.vocab)?;
        let params = read_tensors(&header.params, payload)?;
        let net = Network::from_params(header.config, vocab.len(), params)?;
        Ok(Model::new(net, vocab, header.labels))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::SPECIALS;

    fn model(cfg: TrainConfig) -> Model {
        let vocab =
            Vocabulary::from_tokens(SPECIALS.iter().chain(&["a", "b", "."]).map(|s| s.to_string()).collect()).unwrap();
        Model::new(Network::new(cfg, vocab.len()).unwrap(), vocab, PsychLabelSpace::default())
    }

    fn micro() -> TrainConfig {
        TrainConfig {
            emb_dim: 4,
            hidden: 3,
            enc_layers: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
        let m = model(micro());
        m.save(&p1).unwrap();
        Model::load(&p1).unwrap().save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn payload_length_matches_shapes() {
        let m = model(micro());
        let bytes = m.to_bytes().unwrap();
        let (head, payload) = split_container(&bytes).unwrap();
        let h: Header = serde_json::from_slice(head).unwrap();
        let n: usize = h.params.iter().map(|e| e.shape.iter().product::<usize>()).sum();
        assert_eq!(payload.len(), 4 * n);
        assert_eq!(h.format, "SOCP-CKPT");
    }

    #[test]
    fn truncation_is_rejected() {
        let bytes = model(micro()).to_bytes().unwrap();
        assert!(matches!(Model::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Checkpoint(_))));
        assert!(matches!(Model::from_bytes(&bytes[..5]), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn per_indicator_layout_round_trips() {
        let cfg = TrainConfig {
            pmr_projection: crate::config::PmrProjection::PerIndicator,
            ..micro()
        };
        let m = model(cfg);
        let back = Model::from_bytes(&m.to_bytes().unwrap()).unwrap();
        assert_eq!(back.net.params.names(), m.net.params.names());
        assert_eq!(back.net.params.tensors(), m.net.params.tensors());
    }
}
