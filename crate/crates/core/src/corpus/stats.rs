use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::raw::RawStory;

/// How many (story, sentence) cells have exactly k annotated characters.
/// Sentences without any annotation row are not counted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CharacterHistogram {
    pub counts: BTreeMap<usize, usize>,
}

impl CharacterHistogram {
    /// Σ k·count_k, the number of annotation rows the histogram covers.
    pub fn total_rows(&self) -> usize {
        self.counts.iter().map(|(k, n)| k * n).sum()
    }

    pub fn get(&self, k: usize) -> usize {
        self.counts.get(&k).copied().unwrap_or(0)
    }
}

pub fn character_histogram(stories: &[RawStory]) -> CharacterHistogram {
    let mut counts = BTreeMap::new();
    for story in stories {
        let mut per_sentence: HashMap<usize, usize> = HashMap::new();
        for a in &story.annotations {
            *per_sentence.entry(a.sentence).or_default() += 1;
        }
        for k in per_sentence.into_values() {
            *counts.entry(k).or_default() += 1;
        }
    }
    CharacterHistogram { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::raw::Annotation;

    fn row(sentence: usize, character: &str) -> Annotation {
        Annotation {
            sentence,
            character: character.into(),
            workers_plutchik: vec![],
            maslow: vec![],
            reiss: vec![],
        }
    }

    #[test]
    fn counts_characters_per_sentence() {
        let story = RawStory {
            story_id: "h".into(),
            sentences: vec![String::new(); 5],
            characters: vec!["a".into(), "b".into()],
            annotations: vec![row(1, "a"), row(1, "b"), row(2, "a"), row(4, "b")],
        };
        let h = character_histogram(&[story]);
        assert_eq!(h.get(1), 2);
        assert_eq!(h.get(2), 1);
        assert_eq!(h.get(3), 0);
        assert_eq!(h.total_rows(), 4);
    }
}
