use serde::{Deserialize, Serialize};

use super::acer::{acer_score, AcerItem, MatchRule, PlutchikPredictor};
use super::metrics::{bleu, meteor_lite, rouge, RougeVariant};
use crate::corpus::tokenize;
use crate::error::{Error, Result};

/// Scores of one evaluation run. Absent entries were not requested.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu_4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_l: Option<f64>,
    /// Dictionary-free variant; see `metrics::meteor_lite`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meteor_lite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acer: Option<f64>,
    pub pairs: usize,
    pub acer_pairs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Bleu,
    Rouge,
    Meteor,
    Acer,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Bleu, Metric::Rouge, Metric::Meteor, Metric::Acer];

    /// Parses a comma-separated list such as `bleu,rouge,meteor,acer`.
    pub fn parse_list(list: &str) -> Result<Vec<Metric>> {
        let mut out = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let m = match name.to_ascii_lowercase().as_str() {
                "bleu" => Metric::Bleu,
                "rouge" => Metric::Rouge,
                "meteor" | "meteor_lite" | "meteor-lite" => Metric::Meteor,
                "acer" => Metric::Acer,
                _ => {
                    return Err(Error::InvalidRequest {
                        field: "metrics".into(),
                        reason: format!("unknown metric `{name}`"),
                    })
                }
            };
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidRequest {
                field: "metrics".into(),
                reason: "no metrics requested".into(),
            });
        }
        Ok(out)
    }
}

/// Scores candidate sentences against references. `acer` supplies the
/// classifier and items when ACER is requested.
pub fn evaluate(
    candidates: &[String],
    references: &[String],
    metrics: &[Metric],
    acer: Option<(&dyn PlutchikPredictor, &[AcerItem], MatchRule)>,
) -> Result<MetricReport> {
    let c: Vec<Vec<String>> = candidates.iter().map(|s| tokenize(s)).collect();
    let r: Vec<Vec<String>> = references.iter().map(|s| tokenize(s)).collect();
    let mut report = MetricReport {
        pairs: c.len(),
        ..MetricReport::default()
    };
    for m in metrics {
        match m {
            Metric::Bleu => {
                report.bleu_1 = Some(bleu(&c, &r, 1)?);
                report.bleu_2 = Some(bleu(&c, &r, 2)?);
                report.bleu_3 = Some(bleu(&c, &r, 3)?);
                report.bleu_4 = Some(bleu(&c, &r, 4)?);
            }
            Metric::Rouge => {
                report.rouge_1 = Some(rouge(&c, &r, RougeVariant::One)?);
                report.rouge_2 = Some(rouge(&c, &r, RougeVariant::Two)?);
                report.rouge_l = Some(rouge(&c, &r, RougeVariant::L)?);
            }
            Metric::Meteor => report.meteor_lite = Some(meteor_lite(&c, &r)?),
            Metric::Acer => {
                let (clf, items, rule) = acer.ok_or(Error::ClassifierUnavailable)?;
                let (score, n) = acer_score(items, clf, rule)?;
                report.acer = Some(score);
                report.acer_pairs = n;
            }
        }
    }
    Ok(report)
}
