use crate::corpus::{PsychLabelSpace, Vocabulary};
use crate::seq2seq::Network;

/// A trained network together with the vocabularies its ids refer to.
#[derive(Clone, Debug)]
pub struct Model {
    pub net: Network<f32>,
    pub vocab: Vocabulary,
    pub labels: PsychLabelSpace,
}

impl Model {
    pub fn new(net: Network<f32>, vocab: Vocabulary, labels: PsychLabelSpace) -> Self {
        Self { net, vocab, labels }
    }
}
