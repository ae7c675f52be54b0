use serde::{Deserialize, Serialize};

/// What the decoder attended to while producing one token.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    /// Character-gate distribution over the character slots.
    pub char_gate: Vec<f64>,
    /// Attention over the 32 state slots of the selected character.
    pub psy_attention: Vec<f64>,
    /// Attention over encoder token states.
    pub enc_attention: Vec<f64>,
    /// Index of the argmax character.
    pub selected: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    pub steps: Vec<StepTrace>,
}

impl AttentionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
