//! CoNLL-U reading, writing and tree validation.
//!
//! The reader keeps every field verbatim so that an unmodified document
//! serializes back to the exact input bytes. Multiword-token ranges (`3-4`)
//! and empty nodes (`3.1`) are kept as opaque rows anchored between regular
//! tokens.

use std::fmt;

use thiserror::Error;

const UNSET: &str = "_";

/// Errors raised while reading CoNLL-U text. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("line {line}: carriage return found; only LF line endings are accepted")]
    CarriageReturn { line: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
    #[error("line {line}: sentence is not terminated by a blank line")]
    Unterminated { line: usize },
}

/// An ordered `|`-separated list such as FEATS or MISC.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FieldList(pub Vec<String>);

impl FieldList {
    pub fn parse(raw: &str) -> Self {
        FieldList(raw.split('|').map(str::to_owned).collect())
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Value of the first `key=value` item with the given key.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.items().find_map(|item| {
            let (k, v) = item.split_once('=')?;
            (k == key).then_some(v)
        })
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for FieldList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("|"))
    }
}

/// One regular token row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    /// Always set; a literal `_` form is an underscore, not an unset marker.
    pub form: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub xpos: Option<String>,
    pub feats: Option<FieldList>,
    /// `Some(0)` marks the root.
    pub head: Option<usize>,
    pub deprel: Option<String>,
    pub deps: Option<String>,
    pub misc: Option<FieldList>,
}

impl Token {
    /// A token with only ID and FORM set.
    pub fn new(id: usize, form: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: None,
            upos: None,
            xpos: None,
            feats: None,
            head: None,
            deprel: None,
            deps: None,
            misc: None,
        }
    }

    /// False iff MISC carries `SpaceAfter=No`.
    pub fn space_after(&self) -> bool {
        !matches!(
            self.misc.as_ref().and_then(|m| m.get("SpaceAfter")),
            Some("No")
        )
    }

    fn write_line(&self, out: &mut String) {
        use std::fmt::Write;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            opt_str(&self.lemma),
            opt_str(&self.upos),
            opt_str(&self.xpos),
            opt_list(&self.feats),
            self.head
                .map(|h| h.to_string())
                .unwrap_or_else(|| UNSET.to_owned()),
            opt_str(&self.deprel),
            opt_str(&self.deps),
            opt_list(&self.misc),
        );
    }
}

fn opt_str(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or(UNSET)
}

fn opt_list(v: &Option<FieldList>) -> String {
    v.as_ref()
        .map(|l| l.to_string())
        .unwrap_or_else(|| UNSET.to_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialKind {
    /// `a-b` multiword-token range.
    MultiwordRange,
    /// `k.m` empty node.
    EmptyNode,
}

/// A row that is not a regular token, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialRow {
    pub kind: SpecialKind,
    /// Number of regular tokens that precede this row.
    pub position: usize,
    pub line: String,
}

impl SpecialRow {
    /// Token ids named in the ID column: `(a, b)` for a range, `(k, k)` for
    /// an empty node `k.m`.
    pub fn id_bounds(&self) -> (usize, usize) {
        let id = self.line.split('\t').next().unwrap_or_default();
        match self.kind {
            SpecialKind::MultiwordRange => {
                let (a, b) = id.split_once('-').unwrap_or((id, id));
                (a.parse().unwrap_or(0), b.parse().unwrap_or(0))
            }
            SpecialKind::EmptyNode => {
                let k = id.split('.').next().unwrap_or_default();
                let k = k.parse().unwrap_or(0);
                (k, k)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    /// Comment lines including their leading `#`.
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
    pub special: Vec<SpecialRow>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            comments: Vec::new(),
            tokens,
            special: Vec::new(),
        }
    }

    /// Value of the `# sent_id = ...` comment, if any.
    pub fn sent_id(&self) -> Option<&str> {
        self.comment_value("sent_id")
    }

    /// Value of a `# key = value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let body = c.strip_prefix('#')?.trim_start();
            let (k, v) = body.split_once('=')?;
            (k.trim_end() == key).then(|| v.trim())
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    fn write_to(&self, out: &mut String) {
        for c in &self.comments {
            out.push_str(c);
            out.push('\n');
        }
        let mut special = self.special.iter().peekable();
        for pos in 0..=self.tokens.len() {
            while let Some(row) = special.next_if(|r| r.position <= pos) {
                out.push_str(&row.line);
                out.push('\n');
            }
            if let Some(tok) = self.tokens.get(pos) {
                tok.write_line(out);
            }
        }
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub sentences: Vec<Sentence>,
    pub source_name: String,
}

impl Document {
    pub fn new(source_name: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Document {
            sentences,
            source_name: source_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Parses a CoNLL-U document from raw bytes.
pub fn parse_document(bytes: &[u8], source_name: &str) -> Result<Document, ConlluError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConlluError::Encoding {
        offset: e.valid_up_to(),
    })?;
    parse_str(text, source_name)
}

pub fn parse_str(text: &str, source_name: &str) -> Result<Document, ConlluError> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    let mut lines = text.split('\n').enumerate().peekable();
    let mut last_line = 0;

    while let Some((idx, line)) = lines.next() {
        let lineno = idx + 1;
        // The segment after the final LF is empty; anything else there is an
        // unterminated line.
        if lines.peek().is_none() {
            if !line.is_empty() {
                return Err(ConlluError::Unterminated { line: lineno });
            }
            break;
        }
        last_line = lineno;
        if line.contains('\r') {
            return Err(ConlluError::CarriageReturn { line: lineno });
        }
        if line.is_empty() {
            if current.tokens.is_empty() {
                let message = if current.comments.is_empty() {
                    "unexpected blank line"
                } else {
                    "sentence has comments but no tokens"
                };
                return Err(ConlluError::Structure {
                    line: lineno,
                    message: message.into(),
                });
            }
            sentences.push(std::mem::take(&mut current));
        } else if line.starts_with('#') {
            if !current.tokens.is_empty() || !current.special.is_empty() {
                return Err(ConlluError::Structure {
                    line: lineno,
                    message: "comment line after token lines".into(),
                });
            }
            current.comments.push(line.to_owned());
        } else {
            parse_row(line, lineno, &mut current)?;
        }
    }

    if !current.tokens.is_empty() || !current.comments.is_empty() || !current.special.is_empty() {
        return Err(ConlluError::Unterminated { line: last_line });
    }

    Ok(Document::new(source_name, sentences))
}

fn parse_row(line: &str, lineno: usize, sentence: &mut Sentence) -> Result<(), ConlluError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 10 {
        return Err(ConlluError::Malformed {
            line: lineno,
            message: format!("expected 10 tab-separated fields, found {}", fields.len()),
        });
    }
    if let Some(i) = fields.iter().position(|f| f.is_empty()) {
        return Err(ConlluError::Malformed {
            line: lineno,
            message: format!("field {} is empty", i + 1),
        });
    }

    let id = fields[0];
    let position = sentence.tokens.len();
    if let Some((a, b)) = id.split_once('-') {
        let (a, b) = (
            parse_index(a, lineno, "range start")?,
            parse_index(b, lineno, "range end")?,
        );
        if a == 0 || b <= a || a != position + 1 {
            return Err(ConlluError::Structure {
                line: lineno,
                message: format!("multiword range {id} does not start at the next token id"),
            });
        }
        sentence.special.push(SpecialRow {
            kind: SpecialKind::MultiwordRange,
            position,
            line: line.to_owned(),
        });
        return Ok(());
    }
    if let Some((k, m)) = id.split_once('.') {
        let k = parse_index(k, lineno, "empty node")?;
        let m = parse_index(m, lineno, "empty node")?;
        if k != position || m == 0 {
            return Err(ConlluError::Structure {
                line: lineno,
                message: format!("empty node {id} is out of order"),
            });
        }
        sentence.special.push(SpecialRow {
            kind: SpecialKind::EmptyNode,
            position,
            line: line.to_owned(),
        });
        return Ok(());
    }

    let id = parse_index(id, lineno, "token id")?;
    if id != position + 1 {
        let message = if id <= position {
            format!("duplicate token id {id}")
        } else {
            format!("token id {id} is not contiguous; expected {}", position + 1)
        };
        return Err(ConlluError::Structure {
            line: lineno,
            message,
        });
    }
    let head = match fields[6] {
        UNSET => None,
        raw => Some(parse_index(raw, lineno, "head")?),
    };
    let opt = |f: &str| (f != UNSET).then(|| f.to_owned());
    let list = |f: &str| (f != UNSET).then(|| FieldList::parse(f));
    sentence.tokens.push(Token {
        id,
        form: fields[1].to_owned(),
        lemma: opt(fields[2]),
        upos: opt(fields[3]),
        xpos: opt(fields[4]),
        feats: list(fields[5]),
        head,
        deprel: opt(fields[7]),
        deps: opt(fields[8]),
        misc: list(fields[9]),
    });
    Ok(())
}

/// Canonical decimal: no sign, no leading zeros.
fn parse_index(raw: &str, line: usize, what: &str) -> Result<usize, ConlluError> {
    let canonical = !raw.is_empty()
        && raw.bytes().all(|b| b.is_ascii_digit())
        && (raw == "0" || !raw.starts_with('0'));
    canonical
        .then(|| raw.parse().ok())
        .flatten()
        .ok_or_else(|| ConlluError::Malformed {
            line,
            message: format!("invalid {what} `{raw}`"),
        })
}

/// Serializes a document. For a document read by [`parse_document`] and not
/// modified since, the output equals the input bytes.
pub fn serialize_document(doc: &Document) -> String {
    let mut out = String::new();
    for s in &doc.sentences {
        s.write_to(&mut out);
    }
    out
}

pub fn serialize_sentence(s: &Sentence) -> String {
    let mut out = String::new();
    s.write_to(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    IdOutOfOrder { expected: usize },
    EmptyForm,
    UnsetHead,
    HeadOutOfRange { head: usize },
    SelfLoop,
    NoRoot,
    MultipleRoots,
    /// Token ids along the cycle, starting and ending at the smallest id.
    Cycle { path: Vec<usize> },
    /// Head chain never reaches the root.
    Detached,
}

/// A tree-level problem. `id` is `None` for sentence-wide rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub id: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::IdOutOfOrder { expected } => write!(f, "id out of order (expected {expected})"),
            Rule::EmptyForm => f.write_str("empty form"),
            Rule::UnsetHead => f.write_str("unset head"),
            Rule::HeadOutOfRange { head } => write!(f, "head {head} out of range"),
            Rule::SelfLoop => f.write_str("self loop"),
            Rule::NoRoot => f.write_str("no root"),
            Rule::MultipleRoots => f.write_str("multiple roots"),
            Rule::Cycle { path } => {
                let ids: Vec<String> = path.iter().map(usize::to_string).collect();
                write!(f, "cycle through {}", ids.join("→"))
            }
            Rule::Detached => f.write_str("not connected to root"),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.id {
            Some(id) => write!(f, "token {id}: {}", self.rule),
            None => write!(f, "sentence: {}", self.rule),
        }
    }
}

/// Checks single-root, in-range heads, acyclicity and connectedness.
/// An empty result means the sentence is a well-formed tree.
pub fn validate_sentence(s: &Sentence) -> Vec<Violation> {
    let n = s.tokens.len();
    let mut out = Vec::new();
    let push = |out: &mut Vec<Violation>, id, rule| out.push(Violation { id, rule });

    for (i, tok) in s.tokens.iter().enumerate() {
        if tok.id != i + 1 {
            push(&mut out, Some(tok.id), Rule::IdOutOfOrder { expected: i + 1 });
        }
        if tok.form.is_empty() {
            push(&mut out, Some(i + 1), Rule::EmptyForm);
        }
    }

    // next[i] = Some(j) for a usable edge i -> j (0-based), None otherwise.
    let mut next: Vec<Option<usize>> = vec![None; n];
    let mut broken = vec![false; n];
    let mut roots = 0;
    let mut all_set = true;
    for (i, tok) in s.tokens.iter().enumerate() {
        let id = i + 1;
        match tok.head {
            None => {
                all_set = false;
                broken[i] = true;
                push(&mut out, Some(id), Rule::UnsetHead);
            }
            Some(0) => {
                roots += 1;
                if roots > 1 {
                    push(&mut out, Some(id), Rule::MultipleRoots);
                }
            }
            Some(h) if h > n => {
                broken[i] = true;
                push(&mut out, Some(id), Rule::HeadOutOfRange { head: h });
            }
            Some(h) if h == id => {
                broken[i] = true;
                push(&mut out, Some(id), Rule::SelfLoop);
            }
            Some(h) => next[i] = Some(h - 1),
        }
    }
    if roots == 0 && all_set && n > 0 {
        push(&mut out, None, Rule::NoRoot);
    }

    // 0 = unvisited, 1 = on current walk, 2 = reaches root, 3 = does not.
    let mut state = vec![0u8; n];
    let mut on_cycle = vec![false; n];
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        let outcome = loop {
            match state[cur] {
                2 => break 2,
                3 => break 3,
                1 => {
                    let from = path.iter().position(|&p| p == cur).unwrap_or(0);
                    let cycle = &path[from..];
                    for &c in cycle {
                        on_cycle[c] = true;
                    }
                    let min_at = cycle
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, &c)| c)
                        .map(|(k, _)| k)
                        .unwrap_or(0);
                    let mut ids: Vec<usize> = cycle[min_at..]
                        .iter()
                        .chain(&cycle[..min_at])
                        .map(|c| c + 1)
                        .collect();
                    ids.push(ids[0]);
                    push(&mut out, Some(ids[0]), Rule::Cycle { path: ids });
                    break 3;
                }
                _ => {}
            }
            state[cur] = 1;
            path.push(cur);
            match next[cur] {
                Some(h) => cur = h,
                None if broken[cur] => break 3,
                None => break 2,
            }
        };
        for p in path {
            state[p] = outcome;
        }
    }
    for i in 0..n {
        if state[i] == 3 && !on_cycle[i] && !broken[i] {
            push(&mut out, Some(i + 1), Rule::Detached);
        }
    }
    out
}
