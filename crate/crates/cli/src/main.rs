//! `wbtree`: convert, validate, score and compare CoNLL-U treebanks.
//!
//! Exit status: 0 success, 1 findings (violations, imperfect scores,
//! differences), 2 unreadable or malformed input.

mod output;

use std::collections::BTreeSet;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use wbtree::align::{parse_segmented, AlignOptions};
use wbtree::brat::{annotation_conf, file_stem, to_brat};
use wbtree::conllu::{parse_document, serialize_document, validate_sentence, Document};
use wbtree::diff::{diff_parses, render_text};
use wbtree::eval::{corpus_eval, EvalMode};
use wbtree::merge::{convert_corpus, format_logs, MergePolicy, OnIllegal, UposFallback, XposDelimiter};
use wbtree::Execution;

use output::Staged;

#[derive(Parser)]
#[command(name = "wbtree", version, about = "Word-boundary conversion and comparison for CoNLL-U treebanks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every sentence is a well-formed dependency tree.
    Validate {
        /// CoNLL-U files to check.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Merge gold tokens to follow a coarser segmentation.
    Convert {
        #[arg(long)]
        gold: PathBuf,
        /// Segmented sentences, one per line, tokens separated by spaces.
        #[arg(long)]
        seg: PathBuf,
        /// CoNLL-U with predicted FORM and UPOS for the coarse tokens.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Conversion log (default: OUT with `.log` appended).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = IllegalArg::RejectGroup)]
        on_illegal: IllegalArg,
        /// Word list of groups allowed to merge despite several external heads.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FallbackArg::Head)]
        upos_fallback: FallbackArg,
        #[arg(long, default_value = "+")]
        xpos_delimiter: String,
        /// NFC-normalize forms before aligning.
        #[arg(long)]
        nfc: bool,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Score a prediction against gold.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Also write the structured report (per sentence plus summary).
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Compare two parses of the same text sentence by sentence.
    Diff {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Only this sentence (0-based).
        #[arg(long)]
        sent: Option<usize>,
        /// Print the structured diff instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Write brat standoff files, one .txt/.ann pair per sentence.
    ExportBrat {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Serve the HTTP API over the schemes listed in a config file.
    Serve {
        /// Lines of `id=path`; relative paths resolve against the file.
        #[arg(long, env = "WBTREE_CONFIG")]
        config: PathBuf,
        #[arg(long, env = "WBTREE_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Directory with the built viewer.
        #[arg(long, env = "WBTREE_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IllegalArg {
    RejectGroup,
    RejectSentence,
}

#[derive(Clone, Copy, ValueEnum)]
enum FallbackArg {
    Head,
    First,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Attachment,
    Segmentation,
}

#[derive(clap::Args)]
struct ExecArgs {
    /// Process sentences on one thread.
    #[arg(long)]
    sequential: bool,
}

impl ExecArgs {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Document> {
    let name = path.display().to_string();
    parse_document(&read(path)?, &name).with_context(|| name)
}

fn read_lexicon(path: &Path) -> Result<BTreeSet<String>> {
    let text = String::from_utf8(read(path)?)
        .with_context(|| format!("{}: not valid UTF-8", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().collect::<String>())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn label(doc: &Document, i: usize) -> String {
    match doc.sentences[i].sent_id() {
        Some(id) => format!("sentence {i} ({id})"),
        None => format!("sentence {i}"),
    }
}

fn validate(files: &[PathBuf]) -> Result<ExitCode> {
    let docs = files.iter().map(|f| load(f)).collect::<Result<Vec<_>>>()?;
    let mut bad_sentences = 0;
    let mut total = 0;
    for (path, doc) in files.iter().zip(&docs) {
        for (i, s) in doc.sentences.iter().enumerate() {
            let violations = validate_sentence(s);
            if !violations.is_empty() {
                bad_sentences += 1;
            }
            for v in violations {
                println!("{}: {}: {v}", path.display(), label(doc, i));
            }
        }
        total += doc.len();
    }
    if bad_sentences > 0 {
        eprintln!("wbtree: {bad_sentences} of {total} sentences are not well-formed trees");
        return Ok(ExitCode::from(1));
    }
    println!("{total} sentences ok");
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn convert(
    gold: &Path,
    seg: &Path,
    pred: &Path,
    out: &Path,
    log: Option<&Path>,
    policy: MergePolicy,
    exec: Execution,
) -> Result<ExitCode> {
    let gold_doc = load(gold)?;
    let pred_doc = load(pred)?;
    let segmented =
        parse_segmented(&read(seg)?).with_context(|| seg.display().to_string())?;
    let (converted, logs) = convert_corpus(&gold_doc, &segmented, &pred_doc, &policy, exec)?;

    let log_path = log.map_or_else(|| output::with_suffix(out, ".log"), Path::to_owned);
    let mut staged = Staged::default();
    staged.add(out, serialize_document(&converted))?;
    staged.add(&log_path, format_logs(&logs))?;
    staged.commit()?;

    let merged: usize = logs.iter().map(|l| l.merged.len()).sum();
    let rejected: usize = logs.iter().map(|l| l.rejected.len()).sum();
    println!(
        "{} sentences, {merged} groups merged, {rejected} rejected, log in {}",
        logs.len(),
        log_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn eval(gold: &Path, pred: &Path, mode: EvalMode, json: Option<&Path>, exec: Execution) -> Result<ExitCode> {
    let report = corpus_eval(&load(gold)?, &load(pred)?, mode, exec)?;
    if let Some(path) = json {
        let mut staged = Staged::default();
        staged.add(path, report.to_json())?;
        staged.commit()?;
    }
    print!("{}", report.to_text());
    if report.is_perfect() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn diff(left: &Path, right: &Path, sent: Option<usize>, json: bool) -> Result<ExitCode> {
    let (a, b) = (load(left)?, load(right)?);
    if a.len() != b.len() {
        bail!("sentence counts differ: {} has {}, {} has {}", left.display(), a.len(), right.display(), b.len());
    }
    let indices: Vec<usize> = match sent {
        Some(i) if i >= a.len() => bail!("sentence {i} out of range ({} sentences)", a.len()),
        Some(i) => vec![i],
        None => (0..a.len()).collect(),
    };
    let mut diffs = Vec::with_capacity(indices.len());
    for &i in &indices {
        let d = diff_parses(&a.sentences[i], &b.sentences[i]).with_context(|| label(&a, i))?;
        diffs.push((i, d));
    }
    let mut differing = 0;
    let mut text = String::new();
    for (i, d) in &diffs {
        if !d.is_clean() {
            differing += 1;
        }
        if !json {
            text.push_str(&format!("# {}\n", label(&a, *i)));
            text.push_str(&render_text(d, &a.sentences[*i], &b.sentences[*i]));
        }
    }
    if json {
        let all: Vec<serde_json::Value> = diffs
            .iter()
            .map(|(i, d)| serde_json::json!({ "index": i, "sent_id": a.sentences[*i].sent_id(), "diff": d }))
            .collect();
        text = serde_json::to_string_pretty(&all)? + "\n";
    }
    print!("{text}");
    if differing > 0 {
        eprintln!("wbtree: {differing} of {} sentences differ", diffs.len());
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn export_brat(scheme: &Path, outdir: &Path) -> Result<ExitCode> {
    let doc = load(scheme)?;
    let mut staged = Staged::default();
    for (i, s) in doc.sentences.iter().enumerate() {
        let stem = file_stem(i, doc.len());
        let b = to_brat(s);
        staged.add(&outdir.join(format!("{stem}.txt")), b.text)?;
        staged.add(&outdir.join(format!("{stem}.ann")), b.ann)?;
    }
    staged.add(&outdir.join("annotation.conf"), annotation_conf(&doc))?;
    fs::create_dir_all(outdir).with_context(|| format!("cannot create {}", outdir.display()))?;
    staged.commit()?;
    println!("{} sentences written to {}", doc.len(), outdir.display());
    Ok(ExitCode::SUCCESS)
}

fn serve(config: &Path, bind: SocketAddr, static_dir: Option<PathBuf>) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let sources = wbtree_service::read_config(config)?;
    let catalog = wbtree_service::load_catalog(&sources)?;
    if let Some(dir) = &static_dir {
        if !dir.is_dir() {
            bail!("static directory {} does not exist", dir.display());
        }
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(wbtree_service::serve(catalog, bind, static_dir))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { files } => validate(&files),
        Command::Convert {
            gold,
            seg,
            pred,
            out,
            log,
            on_illegal,
            lexicon,
            upos_fallback,
            xpos_delimiter,
            nfc,
            exec,
        } => {
            let policy = MergePolicy {
                on_illegal: match on_illegal {
                    IllegalArg::RejectGroup => OnIllegal::RejectGroup,
                    IllegalArg::RejectSentence => OnIllegal::RejectSentence,
                },
                lexicon_override: match &lexicon {
                    Some(p) => read_lexicon(p)?,
                    None => BTreeSet::new(),
                },
                upos_fallback: match upos_fallback {
                    FallbackArg::Head => UposFallback::HeadToken,
                    FallbackArg::First => UposFallback::FirstToken,
                },
                xpos_delimiter: XposDelimiter::new(xpos_delimiter)?,
                align: AlignOptions { nfc },
            };
            convert(&gold, &seg, &pred, &out, log.as_deref(), policy, exec.execution())
        }
        Command::Eval {
            gold,
            pred,
            mode,
            json,
            exec,
        } => {
            let mode = match mode {
                ModeArg::Attachment => EvalMode::Attachment,
                ModeArg::Segmentation => EvalMode::Segmentation,
            };
            eval(&gold, &pred, mode, json.as_deref(), exec.execution())
        }
        Command::Diff {
            left,
            right,
            sent,
            json,
        } => diff(&left, &right, sent, json),
        Command::ExportBrat { scheme, outdir } => export_brat(&scheme, &outdir),
        Command::Serve {
            config,
            bind,
            static_dir,
        } => serve(&config, bind, static_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wbtree: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
