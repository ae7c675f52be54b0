//! Story corpus ingestion, label aggregation and example construction.

pub mod aggregate;
pub mod examples;
pub mod labels;
pub mod raw;
pub mod stats;
pub mod vocab;

pub use aggregate::{aggregate_plutchik, cap_characters, encode_needs, sentence_scores, CharArcScores};
pub use examples::{augment_corpus, make_all_examples, make_examples, split, StoryExample};
pub use labels::{Indicator, PsychLabelSpace, SLOT_COUNT};
pub use raw::{parse_corpus, parse_corpus_str, write_corpus, Annotation, RawStory};
pub use stats::{character_histogram, CharacterHistogram};
pub use vocab::{build_vocab, tokenize, Vocabulary};

/// Reserved name for an absent character slot.
pub const PADDING_CHARACTER: &str = "none";
/// Characters kept per story.
pub const MAX_CHARS: usize = 3;
pub const MAX_SENTENCE_TOKENS: usize = 25;
pub const MAX_CONTEXT_TOKENS: usize = 100;
