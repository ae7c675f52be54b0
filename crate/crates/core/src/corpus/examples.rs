use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::aggregate::{cap_characters, sentence_scores, CharArcScores};
use super::labels::PsychLabelSpace;
use super::raw::{Annotation, RawStory, MAX_WORKERS, SENTENCES_PER_STORY};
use super::vocab::{tokenize, Vocabulary, END, START};
use super::{MAX_CONTEXT_TOKENS, MAX_SENTENCE_TOKENS};
use crate::error::{Error, Result};
use crate::evaluation::acer::PlutchikPredictor;
use crate::numerics::rng::{self, Stream};

/// One (context, sentence) -> next-sentence training pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoryExample {
    pub story_id: String,
    pub context_tokens: Vec<usize>,
    pub input_tokens: Vec<usize>,
    /// Next sentence wrapped in start and end markers.
    pub target_tokens: Vec<usize>,
    /// Scores of the capped characters for the target sentence.
    pub char_scores: Vec<CharArcScores>,
}

impl StoryExample {
    /// Number of predicted positions (target length minus the start marker).
    pub fn predicted_len(&self) -> usize {
        self.target_tokens.len().saturating_sub(1)
    }
}

/// Sentence ids, truncated to the maximum sentence length.
pub fn encode_sentence(text: &str, vocab: &Vocabulary) -> Vec<usize> {
    let mut ids = vocab.encode(&tokenize(text));
    ids.truncate(MAX_SENTENCE_TOKENS);
    ids
}

/// Joins sentence ids into a context, keeping only the most recent tokens.
pub fn build_context(sentences: &[Vec<usize>]) -> Vec<usize> {
    let all: Vec<usize> = sentences.iter().flatten().copied().collect();
    let skip = all.len().saturating_sub(MAX_CONTEXT_TOKENS);
    all[skip..].to_vec()
}

/// The four consecutive-sentence examples of a story.
pub fn make_examples(
    story: &RawStory,
    labels: &PsychLabelSpace,
    vocab: &Vocabulary,
    max_chars: usize,
) -> Result<Vec<StoryExample>> {
    let capped = cap_characters(story, max_chars);
    let encoded: Vec<Vec<usize>> = story.sentences.iter().map(|s| encode_sentence(s, vocab)).collect();
    (1..SENTENCES_PER_STORY)
        .map(|k| {
            let mut target = Vec::with_capacity(encoded[k].len() + 2);
            target.push(START);
            target.extend_from_slice(&encoded[k]);
            target.push(END);
            Ok(StoryExample {
                story_id: story.story_id.clone(),
                context_tokens: build_context(&encoded[..k - 1]),
                input_tokens: encoded[k - 1].clone(),
                target_tokens: target,
                char_scores: sentence_scores(story, &capped, k + 1, labels)?,
            })
        })
        .collect()
}

pub fn make_all_examples(
    stories: &[RawStory],
    labels: &PsychLabelSpace,
    vocab: &Vocabulary,
    max_chars: usize,
) -> Result<Vec<StoryExample>> {
    let mut out = Vec::with_capacity(stories.len() * 4);
    for s in stories {
        out.extend(make_examples(s, labels, vocab, max_chars)?);
    }
    Ok(out)
}

/// Splits items at story granularity: every item of a story lands on the
/// same side. `ratio` of the stories (rounded) go to the first half.
pub fn split_by_story<T>(items: Vec<T>, story_of: impl Fn(&T) -> &str, ratio: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for it in &items {
        let id = story_of(it);
        if seen.insert(id.to_string()) {
            order.push(id.to_string());
        }
    }
    order.shuffle(&mut rng::stream(seed, Stream::Split));
    let n_train = (ratio * order.len() as f64).round() as usize;
    let train_ids: HashSet<&String> = order[..n_train.min(order.len())].iter().collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for it in items {
        if train_ids.contains(&story_of(&it).to_string()) {
            train.push(it);
        } else {
            test.push(it);
        }
    }
    (train, test)
}

/// 80/20-style split of examples by story.
pub fn split(examples: Vec<StoryExample>, ratio: f64, seed: u64) -> (Vec<StoryExample>, Vec<StoryExample>) {
    split_by_story(examples, |e| e.story_id.as_str(), ratio, seed)
}

/// Probability at or above which a predicted Plutchik state is kept.
pub const AUGMENT_THRESHOLD: f64 = 0.5;

/// Labels every (sentence, character) pair of unannotated stories with the
/// classifier's Plutchik prediction. Kept states are recorded as a
/// unanimous three-worker vote; Maslow and Reiss stay empty.
pub fn augment_corpus(
    unlabeled: &[RawStory],
    classifier: Option<&dyn PlutchikPredictor>,
    labels: &PsychLabelSpace,
) -> Result<Vec<RawStory>> {
    let clf = classifier.ok_or(Error::ClassifierUnavailable)?;
    let mut cache: HashMap<(String, String), Vec<String>> = HashMap::new();
    unlabeled
        .iter()
        .map(|story| {
            let mut annotations = Vec::with_capacity(SENTENCES_PER_STORY * story.characters.len());
            for (i, sentence) in story.sentences.iter().enumerate() {
                for character in &story.characters {
                    let key = (character.clone(), sentence.clone());
                    let kept = match cache.get(&key) {
                        Some(k) => k.clone(),
                        None => {
                            let probs = clf.predict(character, sentence)?;
                            let k: Vec<String> = probs
                                .iter()
                                .zip(&labels.plutchik_labels)
                                .filter(|(&p, _)| p >= AUGMENT_THRESHOLD)
                                .map(|(_, l)| l.clone())
                                .collect();
                            cache.insert(key, k.clone());
                            k
                        }
                    };
                    annotations.push(Annotation {
                        sentence: i + 1,
                        character: character.clone(),
                        workers_plutchik: vec![kept; MAX_WORKERS],
                        maslow: vec![],
                        reiss: vec![],
                    });
                }
            }
            Ok(RawStory {
                story_id: story.story_id.clone(),
                sentences: story.sentences.clone(),
                characters: story.characters.clone(),
                annotations,
            })
        })
        .collect()
}
