//! Corpus-level BLEU, ROUGE and a dictionary-free METEOR variant over
//! tokenized sentences.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped overlap and candidate total of `n`-grams.
fn clipped<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> (usize, usize) {
    let cand = ngrams(candidate, n);
    let refs = ngrams(reference, n);
    let hits = cand.iter().map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0))).sum();
    (hits, cand.values().sum())
}

fn check_pairs<A, B>(candidates: &[A], references: &[B]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidate sentences".into()));
    }
    if candidates.len() != references.len() {
        return Err(Error::LengthMismatch(format!(
            "{} candidates for {} references",
            candidates.len(),
            references.len()
        )));
    }
    Ok(())
}

/// Corpus-level modified `n`-gram precision: clipped counts summed over all
/// pairs, divided by the candidates' `n`-gram total.
pub fn modified_precision<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], n: usize) -> Result<f64> {
    check_pairs(candidates, references)?;
    let (hits, total) = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| clipped(c, r, n))
        .fold((0, 0), |(h, t), (a, b)| (h + a, t + b));
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

/// Corpus BLEU-`n`: geometric mean of the modified 1..=n precisions times
/// the brevity penalty. Unsmoothed, so any zero precision gives 0.
pub fn bleu<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], n: usize) -> Result<f64> {
    check_pairs(candidates, references)?;
    if n == 0 {
        return Err(Error::InvalidRequest {
            field: "n".into(),
            reason: "BLEU order must be at least 1".into(),
        });
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let p = modified_precision(candidates, references, k)?;
        if p == 0.0 {
            return Ok(0.0);
        }
        log_sum += p.ln();
    }
    let c: usize = candidates.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    // exp(0) keeps identical corpora at exactly 1.
    Ok(bp * (log_sum / n as f64).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

fn f1(hits: usize, cand: usize, reference: usize) -> f64 {
    if hits == 0 {
        return 0.0;
    }
    let p = hits as f64 / cand as f64;
    let r = hits as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x.as_ref() == y.as_ref() { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

fn rouge_pair<S: AsRef<str>>(c: &[S], r: &[S], variant: RougeVariant) -> f64 {
    match variant {
        RougeVariant::One | RougeVariant::Two => {
            let n = if variant == RougeVariant::One { 1 } else { 2 };
            let (hits, total) = clipped(c, r, n);
            let ref_total = r.len().saturating_sub(n - 1);
            f1(hits, total, ref_total)
        }
        RougeVariant::L => f1(lcs_len(c, r), c.len(), r.len()),
    }
}

/// Mean per-pair F1 of n-gram overlap (1, 2) or longest common subsequence.
pub fn rouge<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], variant: RougeVariant) -> Result<f64> {
    check_pairs(candidates, references)?;
    let total: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| rouge_pair(c, r, variant))
        .sum();
    Ok(total / candidates.len() as f64)
}

/// Strips one common English suffix, keeping at least three characters.
pub fn stem(word: &str) -> &str {
    for suffix in ["ing", "ed", "es", "ly", "s"] {
        if let Some(base) = word.strip_suffix(suffix) {
            if base.chars().count() >= 3 {
                return base;
            }
        }
    }
    word
}

/// Weight of recall in the METEOR harmonic mean.
pub const METEOR_RECALL_WEIGHT: f64 = 9.0;
pub const METEOR_GAMMA: f64 = 0.5;
pub const METEOR_BETA: f64 = 3.0;

/// Unigram alignment: exact matches first, then stem matches, each
/// reference token used once, candidate tokens taken left to right.
/// Returns `align[i] = Some(j)` when candidate `i` maps to reference `j`.
fn align<S: AsRef<str>>(c: &[S], r: &[S]) -> Vec<Option<usize>> {
    let mut align = vec![None; c.len()];
    let mut used = vec![false; r.len()];
    let stages: [fn(&str) -> &str; 2] = [|w| w, stem];
    for key in stages {
        for (i, w) in c.iter().enumerate() {
            if align[i].is_some() {
                continue;
            }
            let k = key(w.as_ref());
            if let Some(j) = (0..r.len()).find(|&j| !used[j] && key(r[j].as_ref()) == k) {
                used[j] = true;
                align[i] = Some(j);
            }
        }
    }
    align
}

/// Matches and chunks of an alignment. A chunk is a maximal run of
/// candidate-adjacent matches that are also reference-adjacent.
fn matches_and_chunks(align: &[Option<usize>]) -> (usize, usize) {
    let mut matches = 0;
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for a in align {
        match (a, prev) {
            (Some(j), Some(p)) if *j == p + 1 => matches += 1,
            (Some(_), _) => {
                matches += 1;
                chunks += 1;
            }
            (None, _) => {}
        }
        prev = *a;
    }
    (matches, chunks)
}

pub fn meteor_pair<S: AsRef<str>>(c: &[S], r: &[S]) -> f64 {
    let (m, chunks) = matches_and_chunks(&align(c, r));
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / c.len() as f64;
    let rec = m as f64 / r.len() as f64;
    let fmean = (1.0 + METEOR_RECALL_WEIGHT) * p * rec / (rec + METEOR_RECALL_WEIGHT * p);
    let penalty = METEOR_GAMMA * (chunks as f64 / m as f64).powf(METEOR_BETA);
    fmean * (1.0 - penalty)
}

/// Mean per-pair meteor-lite: exact and stem matches only, no synonyms.
/// Not comparable with reference METEOR implementations.
pub fn meteor_lite<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>]) -> Result<f64> {
    check_pairs(candidates, references)?;
    let total: f64 = candidates.iter().zip(references).map(|(c, r)| meteor_pair(c, r)).sum();
    Ok(total / candidates.len() as f64)
}
