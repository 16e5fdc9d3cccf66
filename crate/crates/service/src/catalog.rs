//! Scheme catalog: several segmentations of one treebank, loaded once and
//! checked to be sentence-by-sentence comparable.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;
use wbtree::align::normalized_text;
use wbtree::conllu::{parse_document, ConlluError, Document};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("scheme {scheme}: {source}")]
    Parse {
        scheme: String,
        #[source]
        source: ConlluError,
    },
    #[error("duplicate scheme id {0:?}")]
    DuplicateScheme(String),
    #[error("catalog has no schemes")]
    Empty,
    #[error("scheme {scheme} has {found} sentences, {reference} has {expected}")]
    SentenceCount {
        scheme: String,
        found: usize,
        reference: String,
        expected: usize,
    },
    #[error("scheme {scheme}, sentence {index}: text differs from {reference} at character {offset}")]
    TextMismatch {
        scheme: String,
        reference: String,
        index: usize,
        offset: usize,
    },
}

/// One line of the catalog config: a scheme id and the file it comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSource {
    pub id: String,
    pub path: PathBuf,
}

/// Parses `id=path` lines. Blank lines and lines starting with `#` are
/// skipped; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<Vec<SchemeSource>, CatalogError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| CatalogError::Config {
            line: i + 1,
            message: message.to_owned(),
        };
        let (id, path) = line.split_once('=').ok_or_else(|| err("expected id=path"))?;
        let (id, path) = (id.trim(), path.trim());
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(err("scheme id must be a non-empty word"));
        }
        if path.is_empty() {
            return Err(err("missing path"));
        }
        out.push(SchemeSource {
            id: id.to_owned(),
            path: base.join(path),
        });
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<SchemeSource>, CatalogError> {
    let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[derive(Debug, Clone)]
pub struct Scheme {
    pub id: String,
    /// Where the document came from.
    pub provenance: String,
    pub doc: Document,
}

/// Immutable after construction; shared read-only between request handlers.
#[derive(Debug, Clone)]
pub struct SchemeCatalog {
    schemes: Vec<Scheme>,
}

impl SchemeCatalog {
    /// Checks the catalog invariants: unique ids, equal sentence counts and
    /// equal normalized text for every sentence index.
    pub fn new(schemes: Vec<Scheme>) -> Result<Self, CatalogError> {
        let mut seen = BTreeSet::new();
        for s in &schemes {
            if !seen.insert(s.id.as_str()) {
                return Err(CatalogError::DuplicateScheme(s.id.clone()));
            }
        }
        let reference = schemes.first().ok_or(CatalogError::Empty)?;
        let texts: Vec<Vec<char>> = reference
            .doc
            .sentences
            .iter()
            .map(|s| normalized_text(s).chars().collect())
            .collect();
        for other in &schemes[1..] {
            if other.doc.len() != reference.doc.len() {
                return Err(CatalogError::SentenceCount {
                    scheme: other.id.clone(),
                    found: other.doc.len(),
                    reference: reference.id.clone(),
                    expected: reference.doc.len(),
                });
            }
            for (index, (s, expected)) in other.doc.sentences.iter().zip(&texts).enumerate() {
                let got: Vec<char> = normalized_text(s).chars().collect();
                if &got != expected {
                    let offset = got
                        .iter()
                        .zip(expected)
                        .position(|(a, b)| a != b)
                        .unwrap_or(got.len().min(expected.len()));
                    return Err(CatalogError::TextMismatch {
                        scheme: other.id.clone(),
                        reference: reference.id.clone(),
                        index,
                        offset,
                    });
                }
            }
        }
        Ok(SchemeCatalog { schemes })
    }

    pub fn schemes(&self) -> &[Scheme] {
        &self.schemes
    }

    pub fn get(&self, id: &str) -> Option<&Scheme> {
        self.schemes.iter().find(|s| s.id == id)
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }

    /// Sentences per scheme (identical for all schemes).
    pub fn sentence_count(&self) -> usize {
        self.schemes.first().map_or(0, |s| s.doc.len())
    }
}

/// Reads and parses every source, then validates the catalog.
pub fn load_catalog(sources: &[SchemeSource]) -> Result<SchemeCatalog, CatalogError> {
    let mut schemes = Vec::with_capacity(sources.len());
    for src in sources {
        let bytes = fs::read(&src.path).map_err(|source| CatalogError::Io {
            path: src.path.clone(),
            source,
        })?;
        let provenance = src.path.display().to_string();
        let doc = parse_document(&bytes, &provenance).map_err(|source| CatalogError::Parse {
            scheme: src.id.clone(),
            source,
        })?;
        schemes.push(Scheme {
            id: src.id.clone(),
            provenance,
            doc,
        });
    }
    SchemeCatalog::new(schemes)
}
