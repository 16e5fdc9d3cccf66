//! Character-level alignment of a fine tokenization against a coarser one.
//!
//! Offsets count Unicode scalar values. Alignment works on the
//! whitespace-normalized character sequence: every whitespace character,
//! whether inside a form or implied by `SpaceAfter`, is dropped before
//! boundaries are compared.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::conllu::Sentence;

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

/// Spans of each token in the raw sentence text, where one space follows
/// every token whose MISC lacks `SpaceAfter=No`.
pub fn char_index(s: &Sentence) -> Vec<CharSpan> {
    let mut offset = 0;
    s.tokens
        .iter()
        .map(|t| {
            let start = offset;
            offset += t.form.chars().count();
            let span = CharSpan::new(start, offset);
            if t.space_after() {
                offset += 1;
            }
            span
        })
        .collect()
}

/// The raw sentence text implied by forms and `SpaceAfter`. No trailing
/// space is emitted after the last token.
pub fn sentence_text(s: &Sentence) -> String {
    let mut text = String::new();
    for (i, t) in s.tokens.iter().enumerate() {
        text.push_str(&t.form);
        if t.space_after() && i + 1 < s.tokens.len() {
            text.push(' ');
        }
    }
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlignOptions {
    /// Apply NFC to both sides before comparing.
    pub nfc: bool,
}

/// A form with whitespace removed (and optionally NFC-normalized).
pub fn normalize_form(form: &str, opts: AlignOptions) -> String {
    let stripped = form.chars().filter(|c| !c.is_whitespace());
    if opts.nfc {
        stripped.nfc().collect()
    } else {
        stripped.collect()
    }
}

/// Whitespace-normalized text of a whole sentence.
pub fn normalized_text(s: &Sentence) -> String {
    s.forms()
        .map(|f| normalize_form(f, AlignOptions::default()))
        .collect()
}

/// Spans over the whitespace-normalized character sequence. Consecutive and
/// gap-free; a whitespace-only form yields an empty span.
pub fn normalized_spans<'a>(
    forms: impl IntoIterator<Item = &'a str>,
    opts: AlignOptions,
) -> Vec<CharSpan> {
    let mut offset = 0;
    forms
        .into_iter()
        .map(|f| {
            let start = offset;
            offset += normalize_form(f, opts).chars().count();
            CharSpan::new(start, offset)
        })
        .collect()
}

pub fn sentence_spans(s: &Sentence) -> Vec<CharSpan> {
    normalized_spans(s.forms(), AlignOptions::default())
}

/// A run of fine tokens `first..=last` (1-based ids) forming one coarse token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeGroup {
    pub first: usize,
    pub last: usize,
    pub coarse_form: String,
}

impl MergeGroup {
    pub fn singleton(id: usize, form: impl Into<String>) -> Self {
        MergeGroup {
            first: id,
            last: id,
            coarse_form: form.into(),
        }
    }

    pub fn size(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_singleton(&self) -> bool {
        self.first == self.last
    }

    pub fn contains(&self, id: usize) -> bool {
        (self.first..=self.last).contains(&id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchKind {
    BoundarySplitsFineToken,
    CharacterSequenceDiffers,
    LeftoverCoarseTokens,
    LeftoverFineTokens,
}

impl fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MismatchKind::BoundarySplitsFineToken => "boundary-splits-fine-token",
            MismatchKind::CharacterSequenceDiffers => "character-sequence-differs",
            MismatchKind::LeftoverCoarseTokens => "leftover-coarse-tokens",
            MismatchKind::LeftoverFineTokens => "leftover-fine-tokens",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    /// Character offset in the normalized sequence.
    pub position: usize,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind, self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignStatus {
    Aligned,
    Mismatch(Mismatch),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentResult {
    /// Covers every fine token exactly once, in order. On mismatch this is
    /// the all-singleton cover.
    pub groups: Vec<MergeGroup>,
    pub status: AlignStatus,
}

impl AlignmentResult {
    pub fn is_aligned(&self) -> bool {
        self.status == AlignStatus::Aligned
    }
}

/// Aligns `fine` against `coarse_forms`. The result is aligned iff both
/// sides have the same normalized character sequence and every coarse
/// boundary is also a fine boundary.
pub fn align_tokenizations<S: AsRef<str>>(
    fine: &Sentence,
    coarse_forms: &[S],
    opts: AlignOptions,
) -> AlignmentResult {
    let fine_norm: Vec<String> = fine.forms().map(|f| normalize_form(f, opts)).collect();
    let coarse_norm: Vec<String> = coarse_forms
        .iter()
        .map(|f| normalize_form(f.as_ref(), opts))
        .collect();

    match find_mismatch(&fine_norm, &coarse_norm) {
        Some(m) => AlignmentResult {
            groups: fine
                .tokens
                .iter()
                .enumerate()
                .map(|(i, t)| MergeGroup::singleton(i + 1, t.form.clone()))
                .collect(),
            status: AlignStatus::Mismatch(m),
        },
        None => AlignmentResult {
            groups: build_groups(&fine_norm, &coarse_norm, coarse_forms),
            status: AlignStatus::Aligned,
        },
    }
}

fn ends(tokens: &[String]) -> Vec<usize> {
    tokens
        .iter()
        .scan(0, |acc, t| {
            *acc += t.chars().count();
            Some(*acc)
        })
        .collect()
}

fn find_mismatch(fine: &[String], coarse: &[String]) -> Option<Mismatch> {
    let mismatch = |kind, position| Some(Mismatch { kind, position });
    if coarse.is_empty() && !fine.is_empty() {
        return mismatch(MismatchKind::LeftoverFineTokens, 0);
    }
    if fine.is_empty() && !coarse.is_empty() {
        return mismatch(MismatchKind::LeftoverCoarseTokens, 0);
    }

    let fine_chars: Vec<char> = fine.iter().flat_map(|t| t.chars()).collect();
    let coarse_chars: Vec<char> = coarse.iter().flat_map(|t| t.chars()).collect();
    let common = fine_chars.len().min(coarse_chars.len());
    let differs = (0..common).find(|&i| fine_chars[i] != coarse_chars[i]);

    let fine_bounds: BTreeSet<usize> = ends(fine).into_iter().chain([0]).collect();
    let coarse_ends = ends(coarse);
    let limit = differs.unwrap_or(common);
    let mut prev = 0;
    for &end in &coarse_ends {
        if end > limit {
            break;
        }
        if end == prev {
            // An empty coarse token cannot stand for any fine material.
            return mismatch(MismatchKind::CharacterSequenceDiffers, end);
        }
        if !fine_bounds.contains(&end) {
            return mismatch(MismatchKind::BoundarySplitsFineToken, end);
        }
        prev = end;
    }
    if let Some(pos) = differs {
        return mismatch(MismatchKind::CharacterSequenceDiffers, pos);
    }
    if coarse_chars.len() > fine_chars.len() {
        return mismatch(MismatchKind::LeftoverCoarseTokens, fine_chars.len());
    }
    if fine_chars.len() > coarse_chars.len() {
        return mismatch(MismatchKind::LeftoverFineTokens, coarse_chars.len());
    }
    // Empty coarse tokens at the very end were not reached by the loop.
    if coarse_ends.windows(2).any(|w| w[0] == w[1]) || coarse_ends.first() == Some(&0) {
        return mismatch(MismatchKind::CharacterSequenceDiffers, coarse_chars.len());
    }
    None
}

fn build_groups<S: AsRef<str>>(
    fine: &[String],
    coarse: &[String],
    coarse_forms: &[S],
) -> Vec<MergeGroup> {
    let fine_ends = ends(fine);
    let mut groups: Vec<MergeGroup> = Vec::with_capacity(coarse_forms.len());
    let mut cursor = 0;
    for (coarse_end, form) in ends(coarse).into_iter().zip(coarse_forms) {
        let first = cursor;
        while cursor < fine_ends.len() && fine_ends[cursor] <= coarse_end {
            cursor += 1;
        }
        groups.push(MergeGroup {
            first: first + 1,
            last: cursor,
            coarse_form: form.as_ref().to_owned(),
        });
    }
    // Zero-width fine tokens left after the final boundary join the last group.
    if let Some(last) = groups.last_mut() {
        last.last = fine_ends.len();
    }
    groups
}

/// Errors for the segmented-sentence text format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentedError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("line {line}: carriage return found; only LF line endings are accepted")]
    CarriageReturn { line: usize },
    #[error("line {line}: empty token (tokens are separated by single spaces)")]
    EmptyToken { line: usize },
    #[error("line {line}: empty sentence")]
    EmptySentence { line: usize },
}

/// Parses the segmented-sentence format: one sentence per line, tokens
/// separated by single ASCII spaces. A final LF is optional.
pub fn parse_segmented(bytes: &[u8]) -> Result<Vec<Vec<String>>, SegmentedError> {
    let text = std::str::from_utf8(bytes).map_err(|e| SegmentedError::Encoding {
        offset: e.valid_up_to(),
    })?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let line_no = i + 1;
            if line.contains('\r') {
                return Err(SegmentedError::CarriageReturn { line: line_no });
            }
            if line.is_empty() {
                return Err(SegmentedError::EmptySentence { line: line_no });
            }
            line.split(' ')
                .map(|t| {
                    if t.is_empty() {
                        Err(SegmentedError::EmptyToken { line: line_no })
                    } else {
                        Ok(t.to_owned())
                    }
                })
                .collect()
        })
        .collect()
}

pub fn serialize_segmented(sentences: &[Vec<String>]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.join(" "));
        out.push('\n');
    }
    out
}

/// The forms of each sentence, in segmented-file shape.
pub fn segmentation_of(doc: &crate::conllu::Document) -> Vec<Vec<String>> {
    doc.sentences
        .iter()
        .map(|s| s.forms().map(str::to_owned).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{FieldList, Token};

    fn sentence(forms: &[&str], no_space: bool) -> Sentence {
        Sentence::new(
            forms
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let mut t = Token::new(i + 1, *f);
                    if no_space {
                        t.misc = Some(FieldList::parse("SpaceAfter=No"));
                    }
                    t
                })
                .collect(),
        )
    }

    #[test]
    fn char_index_counts_scalar_values() {
        let s = sentence(&["中山", "南", "路"], true);
        assert_eq!(
            char_index(&s),
            vec![CharSpan::new(0, 2), CharSpan::new(2, 3), CharSpan::new(3, 4)]
        );
        assert_eq!(char_index(&sentence(&["人"], true)), vec![CharSpan::new(0, 1)]);
    }

    #[test]
    fn char_index_interposes_spaces() {
        let s = sentence(&["Hello", "World"], false);
        assert_eq!(
            char_index(&s),
            vec![CharSpan::new(0, 5), CharSpan::new(6, 11)]
        );
        assert_eq!(sentence_text(&s), "Hello World");
    }

    #[test]
    fn merge_into_single_coarse_token() {
        let s = sentence(&["中山", "南", "路"], true);
        let r = align_tokenizations(&s, &["中山南路"], AlignOptions::default());
        assert!(r.is_aligned());
        assert_eq!(
            r.groups,
            vec![MergeGroup {
                first: 1,
                last: 3,
                coarse_form: "中山南路".into()
            }]
        );
    }

    #[test]
    fn identity_tokenization_is_all_singletons() {
        let s = sentence(&["中山", "南", "路"], true);
        let r = align_tokenizations(&s, &["中山", "南", "路"], AlignOptions::default());
        assert!(r.is_aligned());
        assert!(r.groups.iter().all(MergeGroup::is_singleton));
        assert_eq!(r.groups.len(), 3);
    }

    #[test]
    fn coarse_boundary_inside_fine_token() {
        let s = sentence(&["天文", "台"], true);
        let r = align_tokenizations(&s, &["天", "文台"], AlignOptions::default());
        assert_eq!(
            r.status,
            AlignStatus::Mismatch(Mismatch {
                kind: MismatchKind::BoundarySplitsFineToken,
                position: 1
            })
        );
        assert_eq!(r.groups.len(), 2);
    }

    #[test]
    fn mismatch_kinds() {
        let s = sentence(&["天文", "台"], true);
        let st = |coarse: &[&str]| align_tokenizations(&s, coarse, AlignOptions::default()).status;
        assert_eq!(
            st(&["天文", "合"]),
            AlignStatus::Mismatch(Mismatch {
                kind: MismatchKind::CharacterSequenceDiffers,
                position: 2
            })
        );
        assert_eq!(
            st(&["天文", "台", "上"]),
            AlignStatus::Mismatch(Mismatch {
                kind: MismatchKind::LeftoverCoarseTokens,
                position: 3
            })
        );
        assert_eq!(
            st(&["天文"]),
            AlignStatus::Mismatch(Mismatch {
                kind: MismatchKind::LeftoverFineTokens,
                position: 2
            })
        );
        assert_eq!(
            st(&[]),
            AlignStatus::Mismatch(Mismatch {
                kind: MismatchKind::LeftoverFineTokens,
                position: 0
            })
        );
        assert_eq!(
            st(&["天文", "", "台"]),
            AlignStatus::Mismatch(Mismatch {
                kind: MismatchKind::CharacterSequenceDiffers,
                position: 2
            })
        );
    }

    #[test]
    fn whitespace_is_ignored_for_matching() {
        let s = sentence(&["New", "York", "市"], false);
        let r = align_tokenizations(&s, &["NewYork", "市"], AlignOptions::default());
        assert!(r.is_aligned());
        assert_eq!((r.groups[0].first, r.groups[0].last), (1, 2));
    }

    #[test]
    fn nfc_option() {
        // U+0041 U+030A vs U+00C5
        let s = sentence(&["A\u{30A}", "b"], true);
        let strict = align_tokenizations(&s, &["\u{C5}b"], AlignOptions::default());
        assert!(!strict.is_aligned());
        let nfc = align_tokenizations(&s, &["\u{C5}b"], AlignOptions { nfc: true });
        assert!(nfc.is_aligned());
    }

    #[test]
    fn segmented_format() {
        let parsed = parse_segmented("中山南路 很 长\n天文台\n".as_bytes()).unwrap();
        assert_eq!(parsed, vec![vec!["中山南路", "很", "长"], vec!["天文台"]]);
        assert_eq!(serialize_segmented(&parsed), "中山南路 很 长\n天文台\n");
        assert_eq!(
            parse_segmented(b"a  b\n"),
            Err(SegmentedError::EmptyToken { line: 1 })
        );
        assert_eq!(
            parse_segmented(b"a\n\nb\n"),
            Err(SegmentedError::EmptySentence { line: 2 })
        );
        assert_eq!(parse_segmented(b""), Ok(vec![]));
    }
}
