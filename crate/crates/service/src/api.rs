//! JSON endpoints. All handlers only read the shared catalog.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use wbtree::align::{char_index, normalized_text, sentence_spans, sentence_text, CharSpan};
use wbtree::conllu::Sentence;
use wbtree::diff::{diff_parses, ParseDiff};
use wbtree::eval::{corpus_eval, AttachmentReport, EvalMode, SegReport};
use wbtree::Execution;

use crate::catalog::{Scheme, SchemeCatalog};

pub type Shared = Arc<SchemeCatalog>;
type Params = Query<HashMap<String, String>>;

const DEFAULT_LIMIT: usize = 50;
const MAX_LIMIT: usize = 1000;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match &self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(ErrorBody { error: message })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn required<'a>(q: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    q.get(key)
        .map(String::as_str)
        .ok_or_else(|| ApiError::BadRequest(format!("missing query parameter {key:?}")))
}

fn number(q: &HashMap<String, String>, key: &str, default: Option<usize>) -> Result<usize, ApiError> {
    match (q.get(key), default) {
        (Some(v), _) => v
            .parse()
            .map_err(|_| ApiError::BadRequest(format!("{key} must be a non-negative integer, got {v:?}"))),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(ApiError::BadRequest(format!("missing query parameter {key:?}"))),
    }
}

fn scheme<'a>(cat: &'a SchemeCatalog, id: &str) -> Result<&'a Scheme, ApiError> {
    cat.get(id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown scheme {id:?}")))
}

fn sentence(s: &Scheme, index: usize) -> Result<&Sentence, ApiError> {
    s.doc.sentences.get(index).ok_or_else(|| {
        ApiError::NotFound(format!(
            "sentence {index} out of range (scheme {} has {})",
            s.id,
            s.doc.len()
        ))
    })
}

#[derive(Serialize)]
pub struct SchemeInfo {
    pub id: String,
    pub sentence_count: usize,
    pub provenance: String,
}

#[derive(Serialize)]
pub struct SchemesResponse {
    pub schemes: Vec<SchemeInfo>,
}

pub async fn schemes(State(cat): State<Shared>) -> Json<SchemesResponse> {
    Json(SchemesResponse {
        schemes: cat
            .schemes()
            .iter()
            .map(|s| SchemeInfo {
                id: s.id.clone(),
                sentence_count: s.doc.len(),
                provenance: s.provenance.clone(),
            })
            .collect(),
    })
}

#[derive(Serialize)]
pub struct SentenceSummary {
    pub index: usize,
    pub sent_id: Option<String>,
    pub text: String,
}

#[derive(Serialize)]
pub struct SentencesResponse {
    pub scheme: String,
    pub offset: usize,
    pub total: usize,
    pub sentences: Vec<SentenceSummary>,
}

pub async fn sentences(State(cat): State<Shared>, Query(q): Params) -> ApiResult<SentencesResponse> {
    let s = scheme(&cat, required(&q, "scheme")?)?;
    let offset = number(&q, "offset", Some(0))?;
    let limit = number(&q, "limit", Some(DEFAULT_LIMIT))?.min(MAX_LIMIT);
    let sentences = s
        .doc
        .sentences
        .iter()
        .enumerate()
        .skip(offset)
        .take(limit)
        .map(|(index, sent)| SentenceSummary {
            index,
            sent_id: sent.sent_id().map(str::to_owned),
            text: sentence_text(sent),
        })
        .collect();
    Ok(Json(SentencesResponse {
        scheme: s.id.clone(),
        offset,
        total: s.doc.len(),
        sentences,
    }))
}

#[derive(Serialize)]
pub struct TokenView {
    pub id: usize,
    pub form: String,
    /// Span in the whitespace-normalized text; these tile `normalized_text`
    /// and are the spans diffs refer to.
    pub span: CharSpan,
    /// Span in the surface `text`.
    pub surface_span: CharSpan,
    pub upos: Option<String>,
    pub xpos: Option<String>,
}

#[derive(Serialize)]
pub struct EdgeView {
    pub dependent: usize,
    /// 0 for the root, null when unannotated.
    pub head: Option<usize>,
    pub deprel: Option<String>,
}

#[derive(Serialize)]
pub struct ParseResponse {
    pub scheme: String,
    pub index: usize,
    pub sent_id: Option<String>,
    pub text: String,
    pub normalized_text: String,
    pub tokens: Vec<TokenView>,
    pub edges: Vec<EdgeView>,
}

pub fn parse_view(s: &Scheme, index: usize, sent: &Sentence) -> ParseResponse {
    let norm = sentence_spans(sent);
    let surface = char_index(sent);
    ParseResponse {
        scheme: s.id.clone(),
        index,
        sent_id: sent.sent_id().map(str::to_owned),
        text: sentence_text(sent),
        normalized_text: normalized_text(sent),
        tokens: sent
            .tokens
            .iter()
            .zip(norm.iter().zip(&surface))
            .map(|(t, (span, surface_span))| TokenView {
                id: t.id,
                form: t.form.clone(),
                span: *span,
                surface_span: *surface_span,
                upos: t.upos.clone(),
                xpos: t.xpos.clone(),
            })
            .collect(),
        edges: sent
            .tokens
            .iter()
            .map(|t| EdgeView {
                dependent: t.id,
                head: t.head,
                deprel: t.deprel.clone(),
            })
            .collect(),
    }
}

pub async fn parse(State(cat): State<Shared>, Query(q): Params) -> ApiResult<ParseResponse> {
    let s = scheme(&cat, required(&q, "scheme")?)?;
    let index = number(&q, "sent", None)?;
    Ok(Json(parse_view(s, index, sentence(s, index)?)))
}

#[derive(Serialize)]
pub struct DiffResponse {
    pub left: String,
    pub right: String,
    pub index: usize,
    pub sent_id: Option<String>,
    #[serde(flatten)]
    pub diff: ParseDiff,
}

pub async fn diff(State(cat): State<Shared>, Query(q): Params) -> ApiResult<DiffResponse> {
    let left = scheme(&cat, required(&q, "left")?)?;
    let right = scheme(&cat, required(&q, "right")?)?;
    let index = number(&q, "sent", None)?;
    let (a, b) = (sentence(left, index)?, sentence(right, index)?);
    let diff = diff_parses(a, b).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(DiffResponse {
        left: left.id.clone(),
        right: right.id.clone(),
        index,
        sent_id: a.sent_id().map(str::to_owned),
        diff,
    }))
}

#[derive(Serialize)]
pub struct EvalResponse {
    pub left: String,
    pub right: String,
    pub segmentation: SegReport,
    /// Only when both schemes tokenize every sentence identically.
    pub attachment: Option<AttachmentReport>,
}

fn same_tokenization(a: &Scheme, b: &Scheme) -> bool {
    a.doc
        .sentences
        .iter()
        .zip(&b.doc.sentences)
        .all(|(x, y)| x.forms().eq(y.forms()))
}

pub fn eval_view(left: &Scheme, right: &Scheme) -> Result<EvalResponse, ApiError> {
    let internal = |e: wbtree::eval::EvalError| ApiError::Internal(e.to_string());
    let seg = corpus_eval(&left.doc, &right.doc, EvalMode::Segmentation, Execution::Parallel)
        .map_err(internal)?;
    let attachment = if same_tokenization(left, right) {
        corpus_eval(&left.doc, &right.doc, EvalMode::Attachment, Execution::Parallel)
            .map_err(internal)?
            .attachment
    } else {
        None
    };
    Ok(EvalResponse {
        left: left.id.clone(),
        right: right.id.clone(),
        segmentation: seg
            .segmentation
            .ok_or_else(|| ApiError::Internal("no segmentation report".into()))?,
        attachment,
    })
}

pub async fn eval(State(cat): State<Shared>, Query(q): Params) -> ApiResult<EvalResponse> {
    let left = required(&q, "left")?.to_owned();
    let right = required(&q, "right")?.to_owned();
    scheme(&cat, &left)?;
    scheme(&cat, &right)?;
    // Whole-corpus scoring is CPU-bound; keep it off the async workers.
    tokio::task::spawn_blocking(move || {
        let (l, r) = (scheme(&cat, &left)?, scheme(&cat, &right)?);
        eval_view(l, r)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
    .map(Json)
}

pub async fn not_found() -> ApiError {
    ApiError::NotFound("no such endpoint".into())
}
