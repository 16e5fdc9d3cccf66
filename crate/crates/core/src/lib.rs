//! Word-boundary conversion toolkit for CoNLL-U dependency treebanks.
//!
//! A fine-grained treebank (morpheme-level segmentation, as in Chinese GSD)
//! is turned into a coarser segmentation by fusing runs of adjacent tokens,
//! but only where the dependency tree allows it. The crate also scores
//! parses and segmentations and computes span-aligned diffs between two
//! parses of the same text.
//!
//! - [`conllu`]: lossless CoNLL-U reader/writer and tree validation
//! - [`align`]: character alignment of two tokenizations
//! - [`merge`]: legality checks, token fusion, corpus conversion
//! - [`eval`]: UAS/LAS and segmentation P/R/F1
//! - [`diff`]: structural diffs for side-by-side inspection
//! - [`brat`]: brat standoff export
//! - [`par`]: sequential or rayon-backed per-sentence execution

pub mod align;
pub mod brat;
pub mod conllu;
pub mod diff;
pub mod eval;
pub mod merge;
pub mod par;

pub use align::{align_tokenizations, char_index, AlignOptions, AlignmentResult, CharSpan, MergeGroup};
pub use conllu::{parse_document, serialize_document, validate_sentence, Document, Sentence, Token};
pub use diff::{diff_parses, ParseDiff};
pub use eval::{attachment_scores, corpus_eval, segmentation_prf, AttachmentReport, EvalMode, SegReport};
pub use merge::{apply_merges, check_legality, convert_corpus, fuse_group, ConversionLog, MergePolicy};
pub use par::Execution;
