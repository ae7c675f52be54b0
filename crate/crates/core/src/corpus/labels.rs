use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLUTCHIK_SIZE: usize = 8;
pub const MASLOW_SIZE: usize = 5;
pub const REISS_SIZE: usize = 19;
pub const SLOT_COUNT: usize = PLUTCHIK_SIZE + MASLOW_SIZE + REISS_SIZE;

/// Plutchik's wheel, in the order every score vector indexes against.
pub const PLUTCHIK: [&str; PLUTCHIK_SIZE] = [
    "joy",
    "trust",
    "fear",
    "surprise",
    "sadness",
    "disgust",
    "anger",
    "anticipation",
];

/// Maslow categories as labelled in the annotated story corpus.
pub const MASLOW: [&str; MASLOW_SIZE] = ["physiological", "stability", "love", "esteem", "spiritual growth"];

/// Reiss motives as labelled in the annotated story corpus.
pub const REISS: [&str; REISS_SIZE] = [
    "status",
    "approval",
    "tranquility",
    "competition",
    "health",
    "family",
    "romance",
    "food",
    "indep",
    "power",
    "order",
    "curiosity",
    "serenity",
    "honor",
    "belonging",
    "contact",
    "savings",
    "idealism",
    "rest",
];

/// The three ordered label vocabularies. Persisted with every checkpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsychLabelSpace {
    pub plutchik_labels: Vec<String>,
    pub maslow_labels: Vec<String>,
    pub reiss_labels: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Indicator {
    Plutchik,
    Maslow,
    Reiss,
}

impl Default for PsychLabelSpace {
    fn default() -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            plutchik_labels: own(&PLUTCHIK),
            maslow_labels: own(&MASLOW),
            reiss_labels: own(&REISS),
        }
    }
}

impl PsychLabelSpace {
    pub fn new(plutchik: Vec<String>, maslow: Vec<String>, reiss: Vec<String>) -> Result<Self> {
        let space = Self {
            plutchik_labels: plutchik,
            maslow_labels: maslow,
            reiss_labels: reiss,
        };
        space.validate()?;
        Ok(space)
    }

    /// Reads a label inventory (the JSON form of this type) and validates it.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let space: Self = serde_json::from_str(&text)?;
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, xs: &[String], want: usize| -> Result<()> {
            if xs.len() != want {
                return Err(Error::InvalidConfig(format!(
                    "{name} has {} labels, expected {want}",
                    xs.len()
                )));
            }
            let unique: HashSet<&String> = xs.iter().collect();
            if unique.len() != xs.len() {
                return Err(Error::InvalidConfig(format!("{name} labels are not unique")));
            }
            Ok(())
        };
        check("plutchik", &self.plutchik_labels, PLUTCHIK_SIZE)?;
        check("maslow", &self.maslow_labels, MASLOW_SIZE)?;
        check("reiss", &self.reiss_labels, REISS_SIZE)
    }

    pub fn labels(&self, which: Indicator) -> &[String] {
        match which {
            Indicator::Plutchik => &self.plutchik_labels,
            Indicator::Maslow => &self.maslow_labels,
            Indicator::Reiss => &self.reiss_labels,
        }
    }

    /// Position of `name` (case-insensitive) within an indicator.
    pub fn index_of(&self, which: Indicator, name: &str) -> Result<usize> {
        let key = normalize(name);
        self.labels(which)
            .iter()
            .position(|l| *l == key)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Multi-hot vector over one indicator.
    pub fn multi_hot<S: AsRef<str>>(&self, which: Indicator, names: &[S]) -> Result<Vec<f32>> {
        let mut v = vec![0.0; self.labels(which).len()];
        for n in names {
            v[self.index_of(which, n.as_ref())?] = 1.0;
        }
        Ok(v)
    }

    /// The 32 state slots: Plutchik, then Maslow, then Reiss.
    pub fn slot_labels(&self) -> Vec<String> {
        self.plutchik_labels
            .iter()
            .chain(&self.maslow_labels)
            .chain(&self.reiss_labels)
            .cloned()
            .collect()
    }
}

pub(crate) fn normalize(name: &str) -> String {
    name.trim().to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_space_is_valid() {
        let s = PsychLabelSpace::default();
        s.validate().unwrap();
        assert_eq!(s.slot_labels().len(), SLOT_COUNT);
        assert_eq!(SLOT_COUNT, 32);
    }

    #[test]
    fn slot_order_is_plutchik_maslow_reiss() {
        let s = PsychLabelSpace::default();
        let slots = s.slot_labels();
        assert_eq!(slots[0], s.plutchik_labels[0]);
        assert_eq!(slots[8], s.maslow_labels[0]);
        assert_eq!(slots[13], s.reiss_labels[0]);
    }

    #[test]
    fn wrong_sizes_are_rejected() {
        let mut s = PsychLabelSpace::default();
        s.reiss_labels.pop();
        assert!(s.validate().is_err());
        let mut s = PsychLabelSpace::default();
        s.maslow_labels[1] = s.maslow_labels[0].clone();
        assert!(s.validate().is_err());
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let s = PsychLabelSpace::default();
        assert_eq!(s.index_of(Indicator::Plutchik, "Joy").unwrap(), 0);
        assert!(matches!(s.index_of(Indicator::Reiss, "wealth"), Err(Error::UnknownLabel(_))));
    }
}
