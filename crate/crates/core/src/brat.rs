//! brat standoff export: one `.txt` and one `.ann` file per sentence.
//!
//! Entities are tokens typed by UPOS, relations are dependency edges typed
//! by DEPREL (`Arg1` head, `Arg2` dependent) and the root token carries a
//! `Root` attribute. Offsets are character offsets into the `.txt` file.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::align::{char_index, sentence_text};
use crate::conllu::{Document, Sentence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratDocument {
    pub text: String,
    pub ann: String,
}

fn entity_type(upos: Option<&str>) -> &str {
    upos.unwrap_or("Token")
}

pub fn to_brat(s: &Sentence) -> BratDocument {
    let spans = char_index(s);
    let mut ann = String::new();
    for (t, sp) in s.tokens.iter().zip(&spans) {
        let _ = writeln!(
            ann,
            "T{}\t{} {} {}\t{}",
            t.id,
            entity_type(t.upos.as_deref()),
            sp.start,
            sp.end,
            t.form
        );
    }
    let mut rel = 0;
    let mut attr = 0;
    for t in &s.tokens {
        match t.head {
            Some(0) => {
                attr += 1;
                let _ = writeln!(ann, "A{attr}\tRoot T{}", t.id);
            }
            Some(h) if h <= s.len() => {
                rel += 1;
                let _ = writeln!(
                    ann,
                    "R{rel}\t{} Arg1:T{h} Arg2:T{}",
                    t.deprel.as_deref().unwrap_or("dep"),
                    t.id
                );
            }
            _ => {}
        }
    }
    BratDocument {
        text: sentence_text(s) + "\n",
        ann,
    }
}

/// Zero-padded file stem for sentence `index` of `total`.
pub fn file_stem(index: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(4);
    format!("{index:0width$}")
}

/// A minimal `annotation.conf` declaring every type used in the document.
pub fn annotation_conf(doc: &Document) -> String {
    let mut entities = BTreeSet::new();
    let mut relations = BTreeSet::new();
    for t in doc.sentences.iter().flat_map(|s| &s.tokens) {
        entities.insert(entity_type(t.upos.as_deref()).to_owned());
        if matches!(t.head, Some(h) if h > 0) {
            relations.insert(t.deprel.clone().unwrap_or_else(|| "dep".into()));
        }
    }
    let mut out = String::from("[entities]\n");
    for e in &entities {
        let _ = writeln!(out, "{e}");
    }
    out.push_str("\n[relations]\n");
    let all: Vec<&str> = entities.iter().map(String::as_str).collect();
    let args = all.join("|");
    for r in &relations {
        let _ = writeln!(out, "{r}\tArg1:{args}, Arg2:{args}");
    }
    out.push_str("\n[events]\n\n[attributes]\n");
    let _ = writeln!(out, "Root\tArg:{args}");
    out
}
