//! Per-character psychological state representation.
//!
//! Each character becomes a `[32, H]` matrix whose row `s` is the projected,
//! score-scaled embedding of state `s`. Rows are kept per state so the
//! decoder can attend over individual states; summing them gives the
//! single collapsed vector per character.

use crate::corpus::labels::{PsychLabelSpace, MASLOW_SIZE, PLUTCHIK_SIZE, REISS_SIZE, SLOT_COUNT};
use crate::corpus::CharArcScores;
use crate::error::{Error, Result};
use crate::numerics::{Graph, Scalar, Tensor, Var};

/// Graph handles of the projection weights.
#[derive(Clone, Debug)]
pub enum PmrWeights {
    Unified { w: Var, b: Var },
    /// Plutchik, Maslow and Reiss blocks each have their own projection.
    PerIndicator { w: [Var; 3], b: [Var; 3] },
}

#[derive(Clone, Debug)]
pub struct PmrRepr {
    /// One `[32, H]` matrix per character slot.
    pub rows: Vec<Var>,
    /// All characters flattened, `[C, 32·H]`.
    pub stacked: Var,
    /// True for padding slots.
    pub padding: Vec<bool>,
}

/// Builds every character's state rows. `tables` holds the Plutchik,
/// Maslow and Reiss state embeddings (`[8, E]`, `[5, E]`, `[19, E]`).
pub fn pmr_encode<T: Scalar>(
    g: &mut Graph<'_, T>,
    tables: [Var; 3],
    weights: &PmrWeights,
    scores: &[CharArcScores],
) -> Result<PmrRepr> {
    if scores.is_empty() {
        return Err(Error::ShapeMismatch("pmr_encode: no character slots".into()));
    }
    let sizes = [PLUTCHIK_SIZE, MASLOW_SIZE, REISS_SIZE];
    for (t, &n) in tables.iter().zip(&sizes) {
        if g.shape(*t)[0] != n {
            return Err(Error::ShapeMismatch(format!(
                "state table has {} rows, expected {n}",
                g.shape(*t)[0]
            )));
        }
    }
    // Projected state embeddings, independent of the scores: [32, H].
    // (s ⊙ V) W = s ⊙ (V W) row-wise, so the projection is shared.
    let (projected, bias) = match weights {
        PmrWeights::Unified { w, b } => {
            let all = g.concat_rows(&tables)?;
            (g.matmul(all, *w)?, Bias::Shared(*b))
        }
        PmrWeights::PerIndicator { w, b } => {
            let blocks = tables
                .iter()
                .zip(w)
                .map(|(&t, &w)| g.matmul(t, w))
                .collect::<Result<Vec<_>>>()?;
            (g.concat_rows(&blocks)?, Bias::PerBlock(*b))
        }
    };
    let hidden = g.shape(projected)[1];

    let mut rows = Vec::with_capacity(scores.len());
    let mut flat = Vec::with_capacity(scores.len());
    for c in scores {
        let slots = c.slots();
        if slots.len() != SLOT_COUNT {
            return Err(Error::ShapeMismatch(format!("{} score slots, expected {SLOT_COUNT}", slots.len())));
        }
        let mut scale = Vec::with_capacity(SLOT_COUNT * hidden);
        for &s in &slots {
            scale.extend(std::iter::repeat_n(T::lit(f64::from(s)), hidden));
        }
        let scaled = g.mul_const(projected, Tensor::new(vec![SLOT_COUNT, hidden], scale)?)?;
        let r = match bias {
            Bias::Shared(b) => g.add_row(scaled, b)?,
            Bias::PerBlock(b) => {
                let mut parts = Vec::with_capacity(3);
                let mut start = 0;
                for (&n, &b) in sizes.iter().zip(&b) {
                    let block = g.slice_rows(scaled, start, n)?;
                    parts.push(g.add_row(block, b)?);
                    start += n;
                }
                g.concat_rows(&parts)?
            }
        };
        flat.push(g.reshape(r, &[1, SLOT_COUNT * hidden])?);
        rows.push(r);
    }
    let stacked = g.concat_rows(&flat)?;
    Ok(PmrRepr {
        rows,
        stacked,
        padding: scores.iter().map(CharArcScores::is_padding).collect(),
    })
}

#[derive(Clone, Copy)]
enum Bias {
    Shared(Var),
    PerBlock([Var; 3]),
}

/// Names of the 32 state slots, in row order.
pub fn state_slot_labels(labels: &PsychLabelSpace) -> Vec<String> {
    labels.slot_labels()
}
