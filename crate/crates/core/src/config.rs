use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How previous sentences reach the decoder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// One encoder over `context ‖ sentence`.
    Merged,
    /// Separate context and sentence encoders, final states concatenated.
    #[default]
    Independent,
}

/// Character selection during training. Inference always selects hard.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Gate-weighted mixture of the characters' rows.
    #[default]
    Soft,
    /// Argmax character forward, soft mixture backward.
    HardSt,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmrProjection {
    /// One projection shared by all 32 state slots.
    #[default]
    Unified,
    /// One projection per indicator (Plutchik, Maslow, Reiss).
    PerIndicator,
}

/// Model shape and optimization settings. The JSON form of this struct is
/// the config file format and is embedded in every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub emb_dim: usize,
    pub hidden: usize,
    pub enc_layers: usize,
    pub dropout: f64,
    pub batch: usize,
    pub lr: f64,
    pub epochs: usize,
    pub max_chars: usize,
    pub context_mode: ContextMode,
    pub gate_mode: GateMode,
    pub pmr_projection: PmrProjection,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub min_count: usize,
    pub clip_norm: f64,
    /// Forces the psychological context to zero (plain attentive seq2seq).
    pub ablate_pmr: bool,
    pub split_ratio: f64,
    pub pretrained_vectors: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            emb_dim: 300,
            hidden: 256,
            enc_layers: 2,
            dropout: 0.2,
            batch: 8,
            lr: 3e-4,
            epochs: 30,
            max_chars: 3,
            context_mode: ContextMode::default(),
            gate_mode: GateMode::default(),
            pmr_projection: PmrProjection::default(),
            seed: 0,
            patience: 5,
            min_count: 1,
            clip_norm: 5.0,
            ablate_pmr: false,
            split_ratio: 0.8,
            pretrained_vectors: None,
        }
    }
}

impl TrainConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.emb_dim == 0 || self.hidden == 0 || self.enc_layers == 0 {
            return bad("emb_dim, hidden and enc_layers must be positive");
        }
        if self.batch == 0 || self.max_chars == 0 {
            return bad("batch and max_chars must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        // lr = 0 is allowed so a run can be used as a no-op baseline.
        if !self.lr.is_finite() || self.lr < 0.0 {
            return bad("lr must be finite and non-negative");
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return bad("clip_norm must be positive");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio <= 1.0) {
            return bad("split_ratio must lie in (0, 1]");
        }
        Ok(())
    }
}
