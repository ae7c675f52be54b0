//! Shared fixtures and the scalar reference model used by integration and
//! acceptance tests.
#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use socp::corpus::{build_vocab, make_all_examples, parse_corpus, PsychLabelSpace, RawStory, StoryExample, Vocabulary};
use socp::seq2seq::Network;
use socp::{Model, TrainConfig};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn ten_stories() -> Vec<RawStory> {
    parse_corpus(&fixture("ten_stories.jsonl"), &PsychLabelSpace::default()).unwrap()
}

pub fn ten_story_examples(max_chars: usize) -> (Vocabulary, Vec<StoryExample>) {
    let stories = ten_stories();
    let vocab = build_vocab(&stories, 1).unwrap();
    let examples = make_all_examples(&stories, &PsychLabelSpace::default(), &vocab, max_chars).unwrap();
    (vocab, examples)
}

pub fn micro_config() -> TrainConfig {
    TrainConfig::from_file(&fixture("micro_config.json")).unwrap()
}

/// An untrained model over the ten-story vocabulary.
pub fn micro_model() -> Model {
    let (vocab, _) = ten_story_examples(3);
    let net = Network::new(micro_config(), vocab.len()).unwrap();
    Model::new(net, vocab, PsychLabelSpace::default())
}
