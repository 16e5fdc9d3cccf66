//! Attachment scores and segmentation precision/recall/F1.
//!
//! Corpus figures are micro-averaged: counts are summed over sentences and
//! the ratios taken once at the end.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::align::{normalized_text, sentence_spans, CharSpan};
use crate::conllu::{Document, Sentence};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("tokenizations differ at token {position} (gold {gold:?}, predicted {pred:?}); use a parse diff instead")]
    TokenizationMismatch {
        position: usize,
        gold: Option<String>,
        pred: Option<String>,
    },
    #[error("span coverage differs at character {offset}")]
    CoverageDiffers { offset: usize },
    #[error("sentence counts differ: gold {gold}, predicted {pred}")]
    SentenceCount { gold: usize, pred: usize },
    #[error("sentence {index} ({sent_id}): {source}")]
    Sentence {
        index: usize,
        sent_id: String,
        source: Box<EvalError>,
    },
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttachmentReport {
    pub token_total: usize,
    pub head_correct: usize,
    pub head_and_label_correct: usize,
    pub uas: f64,
    pub las: f64,
}

impl AttachmentReport {
    pub fn from_counts(token_total: usize, head_correct: usize, head_and_label_correct: usize) -> Self {
        AttachmentReport {
            token_total,
            head_correct,
            head_and_label_correct,
            uas: ratio(head_correct, token_total),
            las: ratio(head_and_label_correct, token_total),
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self::from_counts(
            self.token_total + other.token_total,
            self.head_correct + other.head_correct,
            self.head_and_label_correct + other.head_and_label_correct,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegReport {
    pub gold_spans: usize,
    pub pred_spans: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SegReport {
    pub fn from_counts(gold_spans: usize, pred_spans: usize, matched: usize) -> Self {
        let precision = ratio(matched, pred_spans);
        let recall = ratio(matched, gold_spans);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        SegReport {
            gold_spans,
            pred_spans,
            matched,
            precision,
            recall,
            f1,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self::from_counts(
            self.gold_spans + other.gold_spans,
            self.pred_spans + other.pred_spans,
            self.matched + other.matched,
        )
    }
}

/// UAS/LAS for two parses of the same tokenization. Punctuation counts;
/// labels compare as full case-sensitive strings.
pub fn attachment_scores(gold: &Sentence, pred: &Sentence) -> Result<AttachmentReport, EvalError> {
    let n = gold.len().max(pred.len());
    if let Some(i) = (0..n).find(|&i| gold.tokens.get(i).map(|t| &t.form) != pred.tokens.get(i).map(|t| &t.form)) {
        return Err(EvalError::TokenizationMismatch {
            position: i + 1,
            gold: gold.tokens.get(i).map(|t| t.form.clone()),
            pred: pred.tokens.get(i).map(|t| t.form.clone()),
        });
    }
    let (mut head, mut both) = (0, 0);
    for (g, p) in gold.tokens.iter().zip(&pred.tokens) {
        if g.head == p.head {
            head += 1;
            if g.deprel == p.deprel {
                both += 1;
            }
        }
    }
    Ok(AttachmentReport::from_counts(gold.len(), head, both))
}

fn coverage(spans: &[CharSpan]) -> Vec<bool> {
    let len = spans.iter().map(|s| s.end).max().unwrap_or(0);
    let mut covered = vec![false; len];
    for s in spans {
        for c in &mut covered[s.start..s.end] {
            *c = true;
        }
    }
    covered
}

/// Span-level P/R/F1. A predicted span counts iff the identical span is in
/// gold. Both sides must cover the same characters.
pub fn segmentation_prf(gold: &[CharSpan], pred: &[CharSpan]) -> Result<SegReport, EvalError> {
    let (gc, pc) = (coverage(gold), coverage(pred));
    if gc != pc {
        let offset = (0..gc.len().max(pc.len()))
            .find(|&i| gc.get(i).copied().unwrap_or(false) != pc.get(i).copied().unwrap_or(false))
            .unwrap_or(0);
        return Err(EvalError::CoverageDiffers { offset });
    }
    let gold_set: HashSet<CharSpan> = gold.iter().copied().collect();
    let pred_set: HashSet<CharSpan> = pred.iter().copied().collect();
    let matched = pred_set.intersection(&gold_set).count();
    Ok(SegReport::from_counts(gold_set.len(), pred_set.len(), matched))
}

/// Segmentation P/R/F1 between two sentences over the whitespace-normalized
/// character sequence.
pub fn segmentation_prf_sentences(gold: &Sentence, pred: &Sentence) -> Result<SegReport, EvalError> {
    let (gt, pt): (Vec<char>, Vec<char>) = (
        normalized_text(gold).chars().collect(),
        normalized_text(pred).chars().collect(),
    );
    if gt != pt {
        let offset = gt
            .iter()
            .zip(&pt)
            .position(|(a, b)| a != b)
            .unwrap_or(gt.len().min(pt.len()));
        return Err(EvalError::CoverageDiffers { offset });
    }
    segmentation_prf(&sentence_spans(gold), &sentence_spans(pred))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Attachment,
    Segmentation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceEval {
    pub index: usize,
    pub sent_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attachment: Option<AttachmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub mode: EvalMode,
    pub sentences: Vec<SentenceEval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attachment: Option<AttachmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegReport>,
}

pub fn percent(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

impl CorpusReport {
    /// True when every score is perfect.
    pub fn is_perfect(&self) -> bool {
        let att = self
            .attachment
            .is_none_or(|a| a.head_and_label_correct == a.token_total);
        let seg = self
            .segmentation
            .is_none_or(|s| s.matched == s.gold_spans && s.matched == s.pred_spans);
        att && seg
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(a) = &self.attachment {
            let _ = writeln!(out, "UAS {}", percent(a.uas));
            let _ = writeln!(out, "LAS {}", percent(a.las));
            let _ = writeln!(
                out,
                "tokens {} head-correct {} head-and-label-correct {}",
                a.token_total, a.head_correct, a.head_and_label_correct
            );
        }
        if let Some(s) = &self.segmentation {
            let _ = writeln!(out, "P {}", percent(s.precision));
            let _ = writeln!(out, "R {}", percent(s.recall));
            let _ = writeln!(out, "F1 {}", percent(s.f1));
            let _ = writeln!(
                out,
                "gold-spans {} pred-spans {} matched {}",
                s.gold_spans, s.pred_spans, s.matched
            );
        }
        out
    }

    /// Structured report: per-sentence objects plus the corpus summary.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default() + "\n"
    }
}

pub fn corpus_eval(
    gold: &Document,
    pred: &Document,
    mode: EvalMode,
    exec: Execution,
) -> Result<CorpusReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let per_sentence = map_indexed(&gold.sentences, exec, |i, g| {
        let p = &pred.sentences[i];
        let wrap = |e: EvalError| EvalError::Sentence {
            index: i,
            sent_id: g.sent_id().unwrap_or("-").to_owned(),
            source: Box::new(e),
        };
        let mut eval = SentenceEval {
            index: i,
            sent_id: g.sent_id().map(str::to_owned),
            attachment: None,
            segmentation: None,
        };
        match mode {
            EvalMode::Attachment => eval.attachment = Some(attachment_scores(g, p).map_err(wrap)?),
            EvalMode::Segmentation => {
                eval.segmentation = Some(segmentation_prf_sentences(g, p).map_err(wrap)?)
            }
        }
        Ok(eval)
    });
    let sentences = per_sentence.into_iter().collect::<Result<Vec<_>, _>>()?;

    let (attachment, segmentation) = match mode {
        EvalMode::Attachment => (
            Some(
                sentences
                    .iter()
                    .filter_map(|s| s.attachment)
                    .fold(AttachmentReport::from_counts(0, 0, 0), |a, b| a.merge(&b)),
            ),
            None,
        ),
        EvalMode::Segmentation => (
            None,
            Some(
                sentences
                    .iter()
                    .filter_map(|s| s.segmentation)
                    .fold(SegReport::from_counts(0, 0, 0), |a, b| a.merge(&b)),
            ),
        ),
    };
    Ok(CorpusReport {
        mode,
        sentences,
        attachment,
        segmentation,
    })
}
