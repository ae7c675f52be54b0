use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labels::{Indicator, PsychLabelSpace};
use crate::error::{Error, Result};

pub const SENTENCES_PER_STORY: usize = 5;
pub const MAX_DECLARED_CHARACTERS: usize = 6;
pub const MAX_WORKERS: usize = 3;

/// One annotation row: the labels a character received in one sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// 1-based sentence number.
    pub sentence: usize,
    pub character: String,
    #[serde(default)]
    pub workers_plutchik: Vec<Vec<String>>,
    #[serde(default)]
    pub maslow: Vec<String>,
    #[serde(default)]
    pub reiss: Vec<String>,
}

/// A five-sentence story with its per-sentence character annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStory {
    pub story_id: String,
    pub sentences: Vec<String>,
    pub characters: Vec<String>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl RawStory {
    pub fn annotation(&self, sentence: usize, character: &str) -> Option<&Annotation> {
        self.annotations
            .iter()
            .find(|a| a.sentence == sentence && a.character == character)
    }

    /// Checks the structural invariants against `labels`. `line` is used
    /// for error reporting only.
    pub fn validate(&self, labels: &PsychLabelSpace, line: usize) -> Result<()> {
        let malformed = |reason: String| Error::MalformedRecord { line, reason };
        if self.sentences.len() != SENTENCES_PER_STORY {
            return Err(Error::WrongSentenceCount {
                story_id: self.story_id.clone(),
                found: self.sentences.len(),
            });
        }
        if self.characters.is_empty() || self.characters.len() > MAX_DECLARED_CHARACTERS {
            return Err(malformed(format!(
                "{} characters declared, expected 1..={MAX_DECLARED_CHARACTERS}",
                self.characters.len()
            )));
        }
        let declared: HashSet<&str> = self.characters.iter().map(String::as_str).collect();
        if declared.len() != self.characters.len() {
            return Err(malformed("duplicate character names".into()));
        }
        if declared.contains(super::PADDING_CHARACTER) {
            return Err(malformed(format!(
                "`{}` is reserved for padding",
                super::PADDING_CHARACTER
            )));
        }
        let mut seen = HashSet::new();
        for a in &self.annotations {
            if !declared.contains(a.character.as_str()) {
                return Err(malformed(format!("annotation for undeclared character `{}`", a.character)));
            }
            if !(1..=SENTENCES_PER_STORY).contains(&a.sentence) {
                return Err(malformed(format!("sentence index {} out of range", a.sentence)));
            }
            if !seen.insert((a.sentence, a.character.as_str())) {
                return Err(malformed(format!(
                    "duplicate annotation for `{}` in sentence {}",
                    a.character, a.sentence
                )));
            }
            if a.workers_plutchik.len() > MAX_WORKERS {
                return Err(malformed(format!(
                    "{} Plutchik workers, at most {MAX_WORKERS}",
                    a.workers_plutchik.len()
                )));
            }
            for name in a.workers_plutchik.iter().flatten() {
                labels.index_of(Indicator::Plutchik, name)?;
            }
            for name in &a.maslow {
                labels.index_of(Indicator::Maslow, name)?;
            }
            for name in &a.reiss {
                labels.index_of(Indicator::Reiss, name)?;
            }
        }
        Ok(())
    }
}

/// Parses one JSONL record. `line` is 1-based.
pub fn parse_record(text: &str, labels: &PsychLabelSpace, line: usize) -> Result<RawStory> {
    let story: RawStory = serde_json::from_str(text).map_err(|e| Error::MalformedRecord {
        line,
        reason: e.to_string(),
    })?;
    story.validate(labels, line)?;
    Ok(story)
}

/// Parses a whole corpus held in memory. Blank lines are skipped.
pub fn parse_corpus_str(text: &str, labels: &PsychLabelSpace) -> Result<Vec<RawStory>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_record(l, labels, i + 1))
        .collect()
}

/// Reads a canonical corpus file, one story per line.
pub fn parse_corpus(path: &Path, labels: &PsychLabelSpace) -> Result<Vec<RawStory>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut stories = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        stories.push(parse_record(&line, labels, i + 1)?);
    }
    Ok(stories)
}

/// Writes stories back out in the canonical format.
pub fn write_corpus(path: &Path, stories: &[RawStory]) -> Result<()> {
    let mut out = String::new();
    for s in stories {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
