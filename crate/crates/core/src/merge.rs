//! Word-boundary conversion: fuse runs of fine tokens into coarse tokens
//! when the dependency structure allows it, then re-head and re-index.
//!
//! A run of tokens may be fused only if exactly one member attaches outside
//! the run; that member supplies HEAD, DEPREL and FEATS of the fused token.
//! Runs listed in [`MergePolicy::lexicon_override`] are fused even with
//! several external attachments.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::align::{
    align_tokenizations, normalize_form, sentence_spans, sentence_text, AlignOptions, AlignStatus,
    CharSpan, MergeGroup,
};
use crate::conllu::{validate_sentence, Document, FieldList, Sentence, SpecialKind, Token};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("xpos delimiter must be non-empty and free of tabs and newlines")]
    InvalidDelimiter,
    #[error("merge groups do not cover the sentence: {0}")]
    InvalidCover(String),
    #[error("sentence {sent_id}: conversion rejected ({reasons})", sent_id = .log.sent_id, reasons = .log.reason_list())]
    SentenceRejected { log: Box<ConversionLog> },
    #[error("upos map has {found} entries for {expected} groups")]
    UposMapLength { expected: usize, found: usize },
    #[error("sentence counts differ: gold {gold}, segmented {segmented}, predicted {predicted}")]
    SentenceCount {
        gold: usize,
        segmented: usize,
        predicted: usize,
    },
}

/// Separator placed between member XPOS tags of a fused token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XposDelimiter(String);

impl XposDelimiter {
    pub fn new(delimiter: impl Into<String>) -> Result<Self, MergeError> {
        let d = delimiter.into();
        if d.is_empty() || d.contains(['\t', '\n', '\r']) {
            return Err(MergeError::InvalidDelimiter);
        }
        Ok(XposDelimiter(d))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for XposDelimiter {
    fn default() -> Self {
        XposDelimiter("+".to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnIllegal {
    /// Keep the offending run as its original tokens.
    #[default]
    RejectGroup,
    /// Leave the whole sentence unconverted.
    RejectSentence,
}

/// Which member supplies UPOS when no predicted tag is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UposFallback {
    #[default]
    HeadToken,
    FirstToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MergePolicy {
    pub on_illegal: OnIllegal,
    /// Surface forms (whitespace removed) that may fuse despite several
    /// external heads.
    pub lexicon_override: BTreeSet<String>,
    pub upos_fallback: UposFallback,
    pub xpos_delimiter: XposDelimiter,
    pub align: AlignOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Legal,
    Illegal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Legality {
    pub verdict: Verdict,
    /// Members whose head lies outside the group (head 0 counts as outside).
    pub external_head_members: Vec<usize>,
    pub reason: Option<String>,
    /// Legal only because of the lexicon override.
    pub overridden: bool,
}

impl Legality {
    pub fn is_legal(&self) -> bool {
        self.verdict == Verdict::Legal
    }

    fn illegal(external_head_members: Vec<usize>, reason: impl Into<String>) -> Self {
        Legality {
            verdict: Verdict::Illegal,
            external_head_members,
            reason: Some(reason.into()),
            overridden: false,
        }
    }
}

fn group_key(s: &Sentence, g: &MergeGroup) -> String {
    (g.first..=g.last)
        .filter_map(|id| s.token(id))
        .map(|t| normalize_form(&t.form, AlignOptions::default()))
        .collect()
}

fn touches_special_rows(s: &Sentence, g: &MergeGroup) -> bool {
    s.special.iter().any(|row| {
        let (a, b) = row.id_bounds();
        match row.kind {
            SpecialKind::MultiwordRange => a <= g.last && b >= g.first,
            SpecialKind::EmptyNode => a >= g.first && a < g.last,
        }
    })
}

/// Decides whether a contiguous group may be fused.
pub fn check_legality(s: &Sentence, g: &MergeGroup, policy: &MergePolicy) -> Legality {
    if g.is_singleton() {
        return Legality {
            verdict: Verdict::Legal,
            external_head_members: vec![g.first],
            reason: None,
            overridden: false,
        };
    }
    let members = || (g.first..=g.last).filter_map(|id| s.token(id));
    let external: Vec<usize> = members()
        .filter(|t| matches!(t.head, Some(h) if !g.contains(h)))
        .map(|t| t.id)
        .collect();

    if touches_special_rows(s, g) {
        return Legality::illegal(external, "unsupported node type");
    }
    if members().any(|t| t.head.is_none()) {
        return Legality::illegal(external, "unannotated head");
    }
    match external.len() {
        1 => Legality {
            verdict: Verdict::Legal,
            external_head_members: external,
            reason: None,
            overridden: false,
        },
        0 => Legality::illegal(external, "no external head"),
        _ if policy.lexicon_override.contains(&group_key(s, g)) => Legality {
            verdict: Verdict::Legal,
            external_head_members: external,
            reason: None,
            overridden: true,
        },
        _ => {
            let ids: Vec<String> = external.iter().map(usize::to_string).collect();
            Legality::illegal(
                external,
                format!("multiple external heads ({})", ids.join(",")),
            )
        }
    }
}

/// Picks the member whose attachment the fused token inherits: the leftmost
/// external-head member whose head chain never re-enters the group. Such a
/// member always exists in a well-formed tree, and choosing it keeps the
/// contracted graph acyclic.
fn head_member(s: &Sentence, g: &MergeGroup, external: &[usize]) -> usize {
    let leaves_for_good = |member: usize| {
        let mut cur = s.token(member).and_then(|t| t.head);
        let mut steps = 0;
        while let Some(h) = cur {
            if h == 0 {
                return true;
            }
            if g.contains(h) || steps > s.len() {
                return false;
            }
            cur = s.token(h).and_then(|t| t.head);
            steps += 1;
        }
        false
    };
    external
        .iter()
        .copied()
        .find(|&m| leaves_for_good(m))
        .or_else(|| external.first().copied())
        .unwrap_or(g.first)
}

/// Letter outside the CJK scripts. Digits and punctuation never count.
pub fn is_foreign_char(c: char) -> bool {
    c.is_alphabetic() && !is_cjk(c)
}

pub fn is_foreign_word(form: &str) -> bool {
    form.chars().any(is_foreign_char)
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x1100..=0x11FF       // Hangul Jamo
        | 0x2E80..=0x2FDF     // CJK radicals, Kangxi radicals
        | 0x3000..=0x303F     // CJK symbols and punctuation
        | 0x3040..=0x30FF     // Hiragana, Katakana
        | 0x3100..=0x312F     // Bopomofo
        | 0x3130..=0x318F     // Hangul compatibility Jamo
        | 0x3190..=0x31FF     // Kanbun, Bopomofo ext., CJK strokes, Katakana ext.
        | 0x3200..=0x33FF     // enclosed CJK, CJK compatibility
        | 0x3400..=0x4DBF     // extension A
        | 0x4E00..=0x9FFF     // unified ideographs
        | 0xA960..=0xA97F     // Hangul Jamo ext. A
        | 0xAC00..=0xD7FF     // Hangul syllables, Jamo ext. B
        | 0xF900..=0xFAFF     // compatibility ideographs
        | 0xFE30..=0xFE4F     // CJK compatibility forms
        | 0x20000..=0x3FFFF   // supplementary ideographic planes
    )
}

/// Whether a space survives between two adjacent members.
fn keeps_space(left: &Token, right: &Token) -> bool {
    left.space_after() && (is_foreign_word(&left.form) || is_foreign_word(&right.form))
}

fn members<'a>(s: &'a Sentence, g: &MergeGroup) -> Vec<&'a Token> {
    (g.first..=g.last).filter_map(|id| s.token(id)).collect()
}

/// Builds the fused token for a legal group. The returned token keeps the
/// group's first id and its head in the input sentence's numbering;
/// [`apply_merges`] renumbers.
pub fn fuse_group(
    s: &Sentence,
    g: &MergeGroup,
    upos_for_group: Option<&str>,
    policy: &MergePolicy,
) -> Token {
    let legality = check_legality(s, g, policy);
    let head_id = head_member(s, g, &legality.external_head_members);
    fuse_with_head(s, g, head_id, upos_for_group, policy)
}

fn fuse_with_head(
    s: &Sentence,
    g: &MergeGroup,
    head_id: usize,
    upos_for_group: Option<&str>,
    policy: &MergePolicy,
) -> Token {
    let members = members(s, g);
    let head_tok = s.token(head_id).unwrap_or(members[0]);

    let mut form = String::new();
    let mut lemma = String::new();
    for (i, tok) in members.iter().enumerate() {
        if i > 0 && keeps_space(members[i - 1], tok) {
            form.push(' ');
            lemma.push(' ');
        }
        form.push_str(&tok.form);
        lemma.push_str(tok.lemma.as_deref().unwrap_or(&tok.form));
    }
    let lemma = members.iter().any(|t| t.lemma.is_some()).then_some(lemma);

    let xpos = members.iter().any(|t| t.xpos.is_some()).then(|| {
        members
            .iter()
            .map(|t| t.xpos.as_deref().unwrap_or("_"))
            .collect::<Vec<_>>()
            .join(policy.xpos_delimiter.as_str())
    });

    let fallback = match policy.upos_fallback {
        UposFallback::HeadToken => head_tok,
        UposFallback::FirstToken => members[0],
    };
    let upos = upos_for_group
        .map(str::to_owned)
        .or_else(|| fallback.upos.clone());

    let last = members[members.len() - 1];
    let misc = (!last.space_after()).then(|| FieldList::parse("SpaceAfter=No"));

    Token {
        id: g.first,
        form,
        lemma,
        upos,
        xpos,
        feats: head_tok.feats.clone(),
        head: head_tok.head,
        deprel: head_tok.deprel.clone(),
        deps: None,
        misc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConversionStatus {
    Converted,
    AlignmentMismatch,
    SentenceRejected,
    InvalidInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub first: usize,
    pub last: usize,
    pub reason: String,
}

/// Per-sentence record of what the conversion did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConversionLog {
    pub sent_id: String,
    pub status: ConversionStatus,
    /// `(first, last)` input ids of each fused group.
    pub merged: Vec<(usize, usize)>,
    pub rejected: Vec<Rejection>,
    /// Non-fatal remarks: predicted-UPOS fallbacks, override head choices,
    /// alignment mismatches, invalid input trees.
    pub notes: Vec<String>,
    pub tokens_before: usize,
    pub tokens_after: usize,
}

impl ConversionLog {
    fn new(sent_id: &str, tokens: usize) -> Self {
        ConversionLog {
            sent_id: sent_id.to_owned(),
            status: ConversionStatus::Converted,
            merged: Vec::new(),
            rejected: Vec::new(),
            notes: Vec::new(),
            tokens_before: tokens,
            tokens_after: tokens,
        }
    }

    pub fn reason_list(&self) -> String {
        let items: Vec<String> = self
            .rejected
            .iter()
            .map(|r| format!("{}-{}:{}", r.first, r.last, r.reason))
            .chain(self.notes.iter().cloned())
            .collect();
        if items.is_empty() {
            "_".to_owned()
        } else {
            items.join("; ")
        }
    }

    /// `sent_id TAB merged TAB rejected TAB reason-list`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.sent_id,
            self.merged.len(),
            self.rejected.len(),
            self.reason_list()
        )
    }
}

impl fmt::Display for ConversionLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Renders logs in the line-oriented log format, one line per sentence.
pub fn format_logs(logs: &[ConversionLog]) -> String {
    logs.iter().map(|l| l.to_line() + "\n").collect()
}

fn check_cover(s: &Sentence, groups: &[MergeGroup]) -> Result<(), MergeError> {
    let mut next = 1;
    for g in groups {
        if g.first != next || g.last < g.first {
            return Err(MergeError::InvalidCover(format!(
                "group {}-{} where {} was expected",
                g.first, g.last, next
            )));
        }
        next = g.last + 1;
    }
    if next != s.len() + 1 {
        return Err(MergeError::InvalidCover(format!(
            "groups end at {} but the sentence has {} tokens",
            next - 1,
            s.len()
        )));
    }
    Ok(())
}

/// Fuses the legal groups of `s` and renumbers. `upos_map`, when given,
/// has one optional predicted tag per group.
pub fn apply_merges(
    s: &Sentence,
    groups: &[MergeGroup],
    upos_map: Option<&[Option<String>]>,
    policy: &MergePolicy,
) -> Result<(Sentence, ConversionLog), MergeError> {
    check_cover(s, groups)?;
    if let Some(map) = upos_map {
        if map.len() != groups.len() {
            return Err(MergeError::UposMapLength {
                expected: groups.len(),
                found: map.len(),
            });
        }
    }
    let mut log = ConversionLog::new(s.sent_id().unwrap_or_default(), s.len());

    let mut direct = Vec::new();
    let mut overridden = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        if g.is_singleton() {
            continue;
        }
        let legality = check_legality(s, g, policy);
        if !legality.is_legal() {
            log.rejected.push(Rejection {
                first: g.first,
                last: g.last,
                reason: legality.reason.unwrap_or_default(),
            });
            continue;
        }
        let upos = upos_map.and_then(|m| m[gi].as_deref());
        if legality.overridden {
            overridden.push((g.clone(), upos));
        } else {
            direct.push((g.clone(), upos, legality.external_head_members[0]));
        }
    }

    if !log.rejected.is_empty() && policy.on_illegal == OnIllegal::RejectSentence {
        log.status = ConversionStatus::SentenceRejected;
        return Err(MergeError::SentenceRejected { log: Box::new(log) });
    }

    // Groups with a single external head contract together; overridden
    // groups follow one at a time so each head choice sees the current tree.
    let fused: Vec<(MergeGroup, Token)> = direct
        .iter()
        .map(|(g, upos, head)| (g.clone(), fuse_with_head(s, g, *head, *upos, policy)))
        .collect();
    let (mut current, mut id_map) = contract(s, &fused);
    for (g, _, _) in &direct {
        log.merged.push((g.first, g.last));
    }

    for (g, upos) in overridden {
        let local = MergeGroup {
            first: id_map[g.first],
            last: id_map[g.last],
            coarse_form: g.coarse_form.clone(),
        };
        let legality = check_legality(&current, &local, policy);
        let head = head_member(&current, &local, &legality.external_head_members);
        let token = fuse_with_head(&current, &local, head, upos, policy);
        let (next, step_map) = contract(&current, &[(local.clone(), token)]);
        for v in id_map.iter_mut() {
            *v = step_map[*v];
        }
        current = next;
        log.merged.push((g.first, g.last));
        log.notes.push(format!(
            "{}-{}:override head from member {}",
            g.first,
            g.last,
            head - local.first + g.first
        ));
    }
    log.merged.sort_unstable();

    update_text_comment(s, &mut current);
    log.tokens_after = current.len();
    Ok((current, log))
}

/// Replaces the merged runs by their fused tokens and renumbers everything.
/// Returns the new sentence and the old-id to new-id table (index 0 maps
/// the root).
fn contract(s: &Sentence, fused: &[(MergeGroup, Token)]) -> (Sentence, Vec<usize>) {
    let by_first: HashMap<usize, &(MergeGroup, Token)> =
        fused.iter().map(|entry| (entry.0.first, entry)).collect();
    let mut merged_member = vec![false; s.len() + 1];
    for (g, _) in fused {
        merged_member[g.first..=g.last].fill(true);
    }

    let mut map = vec![0; s.len() + 1];
    let mut tokens = Vec::with_capacity(s.len());
    let mut id = 1;
    while id <= s.len() {
        let new_id = tokens.len() + 1;
        if let Some((g, tok)) = by_first.get(&id) {
            map[g.first..=g.last].fill(new_id);
            tokens.push(tok.clone());
            id = g.last + 1;
        } else {
            map[id] = new_id;
            tokens.push(s.tokens[id - 1].clone());
            id += 1;
        }
    }
    for (i, t) in tokens.iter_mut().enumerate() {
        t.id = i + 1;
        t.head = t.head.map(|h| map.get(h).copied().unwrap_or(h));
        t.deps = t
            .deps
            .take()
            .and_then(|d| remap_deps(&d, &map, &merged_member));
    }

    let special = s
        .special
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.position = map[row.position];
            let mut cols: Vec<String> = row.line.split('\t').map(str::to_owned).collect();
            cols[0] = match row.kind {
                SpecialKind::MultiwordRange => {
                    let (a, b) = row.id_bounds();
                    format!("{}-{}", map[a], map[b])
                }
                SpecialKind::EmptyNode => {
                    let (k, _) = row.id_bounds();
                    let minor = cols[0].split_once('.').map(|x| x.1).unwrap_or("1");
                    format!("{}.{minor}", map[k])
                }
            };
            if cols.len() > 8 && cols[8] != "_" {
                cols[8] = remap_deps(&cols[8], &map, &merged_member).unwrap_or_else(|| "_".into());
            }
            row.line = cols.join("\t");
            row
        })
        .collect();

    let out = Sentence {
        comments: s.comments.clone(),
        tokens,
        special,
    };
    (out, map)
}

/// Remaps `head:rel` pairs. `None` (unset) when any pair points into a merged
/// run or cannot be read.
fn remap_deps(deps: &str, map: &[usize], merged_member: &[bool]) -> Option<String> {
    let mut out = Vec::new();
    for item in deps.split('|') {
        let (head, rel) = item.split_once(':')?;
        let (major, minor) = match head.split_once('.') {
            Some((a, b)) => (a, Some(b)),
            None => (head, None),
        };
        let major: usize = major.parse().ok()?;
        if minor.is_none() && *merged_member.get(major)? {
            return None;
        }
        let new_major = *map.get(major)?;
        out.push(match minor {
            Some(m) => format!("{new_major}.{m}:{rel}"),
            None => format!("{new_major}:{rel}"),
        });
    }
    Some(out.join("|"))
}

fn update_text_comment(original: &Sentence, converted: &mut Sentence) {
    let before = sentence_text(original);
    let after = sentence_text(converted);
    if before == after {
        return;
    }
    for c in converted.comments.iter_mut() {
        let is_text = c
            .strip_prefix('#')
            .and_then(|b| b.trim_start().split_once('='))
            .is_some_and(|(k, v)| k.trim_end() == "text" && v.trim() == before);
        if is_text {
            *c = format!("# text = {after}");
        }
    }
}

/// Predicted UPOS keyed by normalized character span.
fn predicted_tags(pred: &Sentence) -> HashMap<CharSpan, &str> {
    sentence_spans(pred)
        .into_iter()
        .zip(&pred.tokens)
        .filter_map(|(span, t)| Some((span, t.upos.as_deref()?)))
        .collect()
}

/// Converts one sentence: align, look up predicted tags, check, fuse.
/// Sentences that cannot be converted come back unchanged with the reason
/// in the log.
pub fn convert_sentence(
    gold: &Sentence,
    coarse_forms: &[String],
    predicted: &Sentence,
    policy: &MergePolicy,
) -> (Sentence, ConversionLog) {
    let mut log = ConversionLog::new(gold.sent_id().unwrap_or_default(), gold.len());
    let violations = validate_sentence(gold);
    if !violations.is_empty() {
        log.status = ConversionStatus::InvalidInput;
        log.notes
            .push(format!("invalid input tree: {}", violations[0]));
        return (gold.clone(), log);
    }

    let alignment = align_tokenizations(gold, coarse_forms, policy.align);
    if let AlignStatus::Mismatch(m) = alignment.status {
        log.status = ConversionStatus::AlignmentMismatch;
        log.notes.push(format!("alignment mismatch: {m}"));
        return (gold.clone(), log);
    }

    let spans = sentence_spans(gold);
    let tags = predicted_tags(predicted);
    let mut fallbacks = Vec::new();
    let upos_map: Vec<Option<String>> = alignment
        .groups
        .iter()
        .map(|g| {
            let span = CharSpan::new(spans[g.first - 1].start, spans[g.last - 1].end);
            let tag = tags.get(&span).map(|t| (*t).to_owned());
            if tag.is_none() && !g.is_singleton() {
                fallbacks.push(format!("{}-{}:upos fallback", g.first, g.last));
            }
            tag
        })
        .collect();

    match apply_merges(gold, &alignment.groups, Some(&upos_map), policy) {
        Ok((converted, mut merged_log)) => {
            // Fallback notes only matter for groups that were actually fused.
            let fused: BTreeSet<String> = merged_log
                .merged
                .iter()
                .map(|(a, b)| format!("{a}-{b}:"))
                .collect();
            merged_log.notes.extend(
                fallbacks
                    .into_iter()
                    .filter(|n| fused.iter().any(|p| n.starts_with(p.as_str()))),
            );
            (converted, merged_log)
        }
        Err(MergeError::SentenceRejected { log }) => (gold.clone(), *log),
        Err(other) => {
            log.status = ConversionStatus::SentenceRejected;
            log.notes.push(other.to_string());
            (gold.clone(), log)
        }
    }
}

/// Converts a whole treebank. Inputs are paired by sentence position.
pub fn convert_corpus(
    gold: &Document,
    segmented: &[Vec<String>],
    predicted: &Document,
    policy: &MergePolicy,
    exec: Execution,
) -> Result<(Document, Vec<ConversionLog>), MergeError> {
    if gold.len() != segmented.len() || gold.len() != predicted.len() {
        return Err(MergeError::SentenceCount {
            gold: gold.len(),
            segmented: segmented.len(),
            predicted: predicted.len(),
        });
    }
    let results = map_indexed(&gold.sentences, exec, |i, s| {
        let (out, mut log) = convert_sentence(s, &segmented[i], &predicted.sentences[i], policy);
        if log.sent_id.is_empty() {
            log.sent_id = i.to_string();
        }
        (out, log)
    });
    let (sentences, logs) = results.into_iter().unzip();
    Ok((Document::new(gold.source_name.clone(), sentences), logs))
}
