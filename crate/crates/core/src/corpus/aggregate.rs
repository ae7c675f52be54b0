use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::labels::{Indicator, PsychLabelSpace, MASLOW_SIZE, PLUTCHIK_SIZE, REISS_SIZE};
use super::raw::{RawStory, MAX_WORKERS};
use super::PADDING_CHARACTER;
use crate::error::Result;

/// Minimum number of workers that must agree on a Plutchik state.
pub const AGREEMENT_THRESHOLD: usize = 2;

/// Psychological scores of one character for one sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharArcScores {
    pub character: String,
    pub plutchik: Vec<f32>,
    pub maslow: Vec<f32>,
    pub reiss: Vec<f32>,
}

impl CharArcScores {
    pub fn padding() -> Self {
        Self::zeros(PADDING_CHARACTER)
    }

    pub fn zeros(character: &str) -> Self {
        Self {
            character: character.to_string(),
            plutchik: vec![0.0; PLUTCHIK_SIZE],
            maslow: vec![0.0; MASLOW_SIZE],
            reiss: vec![0.0; REISS_SIZE],
        }
    }

    pub fn is_padding(&self) -> bool {
        self.character == PADDING_CHARACTER
    }

    /// Scores laid out over the 32 state slots.
    pub fn slots(&self) -> Vec<f32> {
        self.plutchik
            .iter()
            .chain(&self.maslow)
            .chain(&self.reiss)
            .copied()
            .collect()
    }
}

/// Plutchik scores from up to three worker label-sets: a state scores
/// `count / 3` when at least two workers marked it and 0 otherwise.
pub fn aggregate_plutchik<S: AsRef<str>>(worker_sets: &[Vec<S>], labels: &PsychLabelSpace) -> Result<Vec<f32>> {
    let mut counts = [0usize; PLUTCHIK_SIZE];
    for set in worker_sets {
        let mut marked = BTreeSet::new();
        for name in set {
            marked.insert(labels.index_of(Indicator::Plutchik, name.as_ref())?);
        }
        for i in marked {
            counts[i] += 1;
        }
    }
    Ok(counts
        .iter()
        .map(|&c| {
            if c >= AGREEMENT_THRESHOLD {
                c as f32 / MAX_WORKERS as f32
            } else {
                0.0
            }
        })
        .collect())
}

/// Multi-hot Maslow and Reiss vectors.
pub fn encode_needs<S: AsRef<str>>(
    maslow: &[S],
    reiss: &[S],
    labels: &PsychLabelSpace,
) -> Result<(Vec<f32>, Vec<f32>)> {
    Ok((
        labels.multi_hot(Indicator::Maslow, maslow)?,
        labels.multi_hot(Indicator::Reiss, reiss)?,
    ))
}

/// The `max_chars` characters with the most annotated sentences, in
/// declaration order, padded with the padding character. Ties go to the
/// character declared first.
pub fn cap_characters(story: &RawStory, max_chars: usize) -> Vec<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for a in &story.annotations {
        *counts.entry(a.character.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(usize, &String)> = story.characters.iter().enumerate().collect();
    ranked.sort_by_key(|&(pos, name)| (std::cmp::Reverse(counts.get(name.as_str()).copied().unwrap_or(0)), pos));
    let mut keep: Vec<(usize, &String)> = ranked.into_iter().take(max_chars).collect();
    keep.sort_by_key(|&(pos, _)| pos);
    let mut out: Vec<String> = keep.into_iter().map(|(_, n)| n.clone()).collect();
    out.resize(max_chars, PADDING_CHARACTER.to_string());
    out
}

/// Scores of each capped character for one 1-based sentence. Characters
/// without an annotation row for that sentence get zero scores.
pub fn sentence_scores(
    story: &RawStory,
    capped: &[String],
    sentence: usize,
    labels: &PsychLabelSpace,
) -> Result<Vec<CharArcScores>> {
    capped
        .iter()
        .map(|name| {
            if name == PADDING_CHARACTER {
                return Ok(CharArcScores::padding());
            }
            match story.annotation(sentence, name) {
                None => Ok(CharArcScores::zeros(name)),
                Some(a) => {
                    let plutchik = aggregate_plutchik(&a.workers_plutchik, labels)?;
                    let (maslow, reiss) = encode_needs(&a.maslow, &a.reiss, labels)?;
                    Ok(CharArcScores {
                        character: name.clone(),
                        plutchik,
                        maslow,
                        reiss,
                    })
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::raw::Annotation;

    fn labels() -> PsychLabelSpace {
        PsychLabelSpace::default()
    }

    fn sets(xs: &[&[&str]]) -> Vec<Vec<String>> {
        xs.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn unanimous_state_scores_one_and_minority_is_dropped() {
        let v = aggregate_plutchik(&sets(&[&["joy", "trust"], &["joy"], &["joy"]]), &labels()).unwrap();
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn no_marks_gives_zero_vector() {
        let v = aggregate_plutchik(&sets(&[&[], &[], &[]]), &labels()).unwrap();
        assert_eq!(v, vec![0.0; 8]);
        let v = aggregate_plutchik::<String>(&[], &labels()).unwrap();
        assert_eq!(v, vec![0.0; 8]);
    }

    #[test]
    fn two_of_three_scores_two_thirds() {
        let v = aggregate_plutchik(&sets(&[&["joy", "sadness"], &["joy", "sadness"], &[]]), &labels()).unwrap();
        let l = labels();
        let sad = l.index_of(Indicator::Plutchik, "sadness").unwrap();
        assert_eq!(v[0], 2.0 / 3.0);
        assert_eq!(v[sad], 2.0 / 3.0);
        assert_eq!(v.iter().filter(|&&x| x > 0.0).count(), 2);
    }

    #[test]
    fn repeated_label_within_one_worker_counts_once() {
        let v = aggregate_plutchik(&sets(&[&["joy", "joy"], &[], &[]]), &labels()).unwrap();
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn needs_are_multi_hot() {
        let l = labels();
        let (m, r) = encode_needs(&["love"], &["contact", "romance"], &l).unwrap();
        assert_eq!(m[l.index_of(Indicator::Maslow, "love").unwrap()], 1.0);
        assert_eq!(m.iter().sum::<f32>(), 1.0);
        assert_eq!(r[l.index_of(Indicator::Reiss, "contact").unwrap()], 1.0);
        assert_eq!(r[l.index_of(Indicator::Reiss, "romance").unwrap()], 1.0);
        assert_eq!(r.iter().sum::<f32>(), 2.0);

        let (m, _) = encode_needs(&["esteem", "love"], &[], &l).unwrap();
        assert_eq!(m.iter().sum::<f32>(), 2.0);

        let (m, r) = encode_needs::<&str>(&[], &[], &l).unwrap();
        assert!(m.iter().chain(&r).all(|&x| x == 0.0));
    }

    fn story_with(characters: &[&str], counts: &[usize]) -> RawStory {
        let mut annotations = Vec::new();
        for (c, &n) in characters.iter().zip(counts) {
            for s in 1..=n {
                annotations.push(Annotation {
                    sentence: s,
                    character: c.to_string(),
                    workers_plutchik: vec![],
                    maslow: vec![],
                    reiss: vec![],
                });
            }
        }
        RawStory {
            story_id: "t".into(),
            sentences: vec![String::new(); 5],
            characters: characters.iter().map(|s| s.to_string()).collect(),
            annotations,
        }
    }

    #[test]
    fn capping_pads_small_casts() {
        let s = story_with(&["Jervis", "Girlfriend"], &[5, 3]);
        assert_eq!(cap_characters(&s, 3), vec!["Jervis", "Girlfriend", "none"]);
        let s = story_with(&[], &[]);
        assert_eq!(cap_characters(&s, 3), vec!["none"; 3]);
    }

    #[test]
    fn capping_keeps_most_annotated() {
        let s = story_with(&["a", "b", "c", "d"], &[1, 5, 2, 4]);
        assert_eq!(cap_characters(&s, 3), vec!["b", "c", "d"]);
    }

    #[test]
    fn capping_breaks_ties_by_declaration() {
        let s = story_with(&["a", "b", "c", "d"], &[2, 2, 2, 2]);
        assert_eq!(cap_characters(&s, 3), vec!["a", "b", "c"]);
    }

    #[test]
    fn missing_rows_give_zero_scores() {
        let s = story_with(&["a"], &[1]);
        let capped = cap_characters(&s, 3);
        let scores = sentence_scores(&s, &capped, 4, &labels()).unwrap();
        assert_eq!(scores[0].character, "a");
        assert!(scores[0].slots().iter().all(|&x| x == 0.0));
        assert!(scores[1].is_padding() && scores[2].is_padding());
    }
}
