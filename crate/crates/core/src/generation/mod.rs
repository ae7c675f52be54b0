//! Story rollout under per-character arcs and attention export.

pub mod decode;
pub mod request;

pub use decode::{
    detokenize, export_attention, generate_sentence, generate_story, request_scores, rollout, AttentionExport, GeneratedSentence,
    GeneratedStory, GenerationResponse,
};
pub use request::{ArcEntry, Decode, GenerationRequest, NeedSpec, ValidRequest, DEFAULT_MAX_LEN, GENERATED_SENTENCES};
