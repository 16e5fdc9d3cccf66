//! Structural comparison of two parses of the same text.
//!
//! Token edits come from the two boundary sets: a shared boundary is a cut,
//! and each region between consecutive cuts becomes one edit. Dependency
//! edges are compared only for dependents with the same span on both sides;
//! heads are compared by span, so a head that was merged on one side but
//! not on the other counts as different.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::align::{normalized_text, sentence_spans, CharSpan};
use crate::conllu::Sentence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("character sequences differ at offset {offset}")]
    CharacterSequenceDiffers { offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Identical,
    /// Several left tokens correspond to one right token.
    Merge,
    /// One left token corresponds to several right tokens.
    Split,
    Divergent,
}

impl EditKind {
    fn mirrored(self) -> Self {
        match self {
            EditKind::Merge => EditKind::Split,
            EditKind::Split => EditKind::Merge,
            k => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenAlignmentEdit {
    pub kind: EditKind,
    pub left_ids: Vec<usize>,
    pub right_ids: Vec<usize>,
    pub span: CharSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadRef {
    Root,
    Unset,
    Span(CharSpan),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    Both,
    HeadOnly,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeComparison {
    pub dependent_span: CharSpan,
    pub left_id: usize,
    pub right_id: usize,
    pub left_head_span: HeadRef,
    pub right_head_span: HeadRef,
    pub left_label: Option<String>,
    pub right_label: Option<String>,
    pub agreement: Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DiffSummary {
    pub identical: usize,
    pub merge: usize,
    pub split: usize,
    pub divergent: usize,
    pub both: usize,
    pub head_only: usize,
    pub neither: usize,
    /// Tokens without an identically-spanned counterpart, per side.
    pub incomparable_left: usize,
    pub incomparable_right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiff {
    pub edits: Vec<TokenAlignmentEdit>,
    pub edges: Vec<EdgeComparison>,
    pub summary: DiffSummary,
}

impl ParseDiff {
    /// No segmentation differences and no edge disagreements.
    pub fn is_clean(&self) -> bool {
        let s = &self.summary;
        s.merge + s.split + s.divergent + s.head_only + s.neither == 0
    }

    /// The diff with left and right exchanged.
    pub fn mirrored(&self) -> ParseDiff {
        let s = self.summary;
        ParseDiff {
            edits: self
                .edits
                .iter()
                .map(|e| TokenAlignmentEdit {
                    kind: e.kind.mirrored(),
                    left_ids: e.right_ids.clone(),
                    right_ids: e.left_ids.clone(),
                    span: e.span,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeComparison {
                    dependent_span: e.dependent_span,
                    left_id: e.right_id,
                    right_id: e.left_id,
                    left_head_span: e.right_head_span,
                    right_head_span: e.left_head_span,
                    left_label: e.right_label.clone(),
                    right_label: e.left_label.clone(),
                    agreement: e.agreement,
                })
                .collect(),
            summary: DiffSummary {
                merge: s.split,
                split: s.merge,
                incomparable_left: s.incomparable_right,
                incomparable_right: s.incomparable_left,
                ..s
            },
        }
    }
}

fn head_ref(s: &Sentence, spans: &[CharSpan], id: usize) -> HeadRef {
    match s.token(id).and_then(|t| t.head) {
        None => HeadRef::Unset,
        Some(0) => HeadRef::Root,
        Some(h) => spans.get(h - 1).map_or(HeadRef::Unset, |sp| HeadRef::Span(*sp)),
    }
}

/// Region index for each token: the region containing its first character.
fn assign(spans: &[CharSpan], cuts: &[usize]) -> Vec<Vec<usize>> {
    let regions = cuts.len().saturating_sub(1);
    let mut out = vec![Vec::new(); regions];
    if regions == 0 {
        return out;
    }
    for (i, sp) in spans.iter().enumerate() {
        let r = cuts
            .partition_point(|&c| c <= sp.start)
            .saturating_sub(1)
            .min(regions - 1);
        out[r].push(i + 1);
    }
    out
}

pub fn diff_parses(a: &Sentence, b: &Sentence) -> Result<ParseDiff, DiffError> {
    let (at, bt): (Vec<char>, Vec<char>) = (
        normalized_text(a).chars().collect(),
        normalized_text(b).chars().collect(),
    );
    if at != bt {
        let offset = at
            .iter()
            .zip(&bt)
            .position(|(x, y)| x != y)
            .unwrap_or(at.len().min(bt.len()));
        return Err(DiffError::CharacterSequenceDiffers { offset });
    }
    let total = at.len();
    let (a_spans, b_spans) = (sentence_spans(a), sentence_spans(b));
    let bounds = |spans: &[CharSpan]| -> BTreeSet<usize> { spans.iter().map(|s| s.end).collect() };
    let shared: BTreeSet<usize> = bounds(&a_spans)
        .intersection(&bounds(&b_spans))
        .copied()
        .chain([0, total])
        .collect();
    let cuts: Vec<usize> = shared.into_iter().collect();

    let (a_regions, b_regions) = (assign(&a_spans, &cuts), assign(&b_spans, &cuts));
    let mut summary = DiffSummary::default();
    let mut edits = Vec::new();
    let mut edges = Vec::new();
    for (r, (left_ids, right_ids)) in a_regions.into_iter().zip(b_regions).enumerate() {
        let kind = match (left_ids.len(), right_ids.len()) {
            (1, 1) => EditKind::Identical,
            (_, 1) => EditKind::Merge,
            (1, _) => EditKind::Split,
            _ => EditKind::Divergent,
        };
        match kind {
            EditKind::Identical => summary.identical += 1,
            EditKind::Merge => summary.merge += 1,
            EditKind::Split => summary.split += 1,
            EditKind::Divergent => summary.divergent += 1,
        }
        let span = CharSpan::new(cuts[r], cuts[r + 1]);
        if kind == EditKind::Identical {
            let (l, rt) = (left_ids[0], right_ids[0]);
            let (lh, rh) = (head_ref(a, &a_spans, l), head_ref(b, &b_spans, rt));
            let left_label = a.token(l).and_then(|t| t.deprel.clone());
            let right_label = b.token(rt).and_then(|t| t.deprel.clone());
            let agreement = match (lh == rh, left_label == right_label) {
                (true, true) => Agreement::Both,
                (true, false) => Agreement::HeadOnly,
                (false, _) => Agreement::Neither,
            };
            match agreement {
                Agreement::Both => summary.both += 1,
                Agreement::HeadOnly => summary.head_only += 1,
                Agreement::Neither => summary.neither += 1,
            }
            edges.push(EdgeComparison {
                dependent_span: span,
                left_id: l,
                right_id: rt,
                left_head_span: lh,
                right_head_span: rh,
                left_label,
                right_label,
                agreement,
            });
        } else {
            summary.incomparable_left += left_ids.len();
            summary.incomparable_right += right_ids.len();
        }
        edits.push(TokenAlignmentEdit {
            kind,
            left_ids,
            right_ids,
            span,
        });
    }
    Ok(ParseDiff {
        edits,
        edges,
        summary,
    })
}

fn head_text(h: &HeadRef, text: &[char]) -> String {
    match h {
        HeadRef::Root => "ROOT".to_owned(),
        HeadRef::Unset => "_".to_owned(),
        HeadRef::Span(s) => text[s.start..s.end].iter().collect(),
    }
}

/// Human-readable rendering: non-identical edits, disagreeing edges, and a
/// summary line.
pub fn render_text(diff: &ParseDiff, a: &Sentence, b: &Sentence) -> String {
    let text: Vec<char> = normalized_text(a).chars().collect();
    let forms = |s: &Sentence, ids: &[usize]| -> String {
        ids.iter()
            .filter_map(|&i| s.token(i))
            .map(|t| t.form.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    for e in diff.edits.iter().filter(|e| e.kind != EditKind::Identical) {
        let kind = match e.kind {
            EditKind::Merge => "merge",
            EditKind::Split => "split",
            EditKind::Divergent => "divergent",
            EditKind::Identical => unreachable!(),
        };
        let _ = writeln!(
            out,
            "{kind:<9} {} {} | {}",
            e.span,
            forms(a, &e.left_ids),
            forms(b, &e.right_ids)
        );
    }
    for e in diff.edges.iter().filter(|e| e.agreement != Agreement::Both) {
        let dep: String = text[e.dependent_span.start..e.dependent_span.end].iter().collect();
        let agreement = match e.agreement {
            Agreement::HeadOnly => "head-only",
            _ => "neither",
        };
        let _ = writeln!(
            out,
            "edge      {} {dep}: {} <-{}- | {} <-{}- [{agreement}]",
            e.dependent_span,
            head_text(&e.left_head_span, &text),
            e.left_label.as_deref().unwrap_or("_"),
            head_text(&e.right_head_span, &text),
            e.right_label.as_deref().unwrap_or("_"),
        );
    }
    let s = &diff.summary;
    let _ = writeln!(
        out,
        "summary   identical={} merge={} split={} divergent={} both={} head-only={} neither={} incomparable={}/{}",
        s.identical,
        s.merge,
        s.split,
        s.divergent,
        s.both,
        s.head_only,
        s.neither,
        s.incomparable_left,
        s.incomparable_right
    );
    out
}
