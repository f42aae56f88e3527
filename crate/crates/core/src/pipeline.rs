//! File-level pipeline steps behind the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{parse_corpus, AnnotatedParagraph, CorpusError};
use crate::dsl::{ActionProgram, Skeleton};
use crate::embedding::{EmbeddingError, EmbeddingProvider, VectorTable};
use crate::eval::{report, EvalReport};
use crate::generator::{format_dataset, generate_dataset, parse_dataset, parse_templates, with_gold_answers, GenError, Template};
use crate::interpreter::execute;
use crate::par;
use crate::projection::{
    build_pool, fill_arguments, format_model, format_pool, parse_model, parse_pool, project_skeleton, skeleton_accuracy, train_classifier,
    Mode, Models, ProjError, TrainConfig, TrainReport,
};

/// Failure classes of the pipeline; each renders as a one-line diagnostic.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("io error: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("format error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn in_file(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

fn gen_err(path: &Path, e: GenError) -> PipelineError {
    match e {
        GenError::Format { .. } => PipelineError::Format(in_file(path, e)),
        _ => PipelineError::Validation(in_file(path, e)),
    }
}

fn proj_err(path: &Path, e: ProjError) -> PipelineError {
    match e {
        ProjError::Format { .. } | ProjError::Dsl(_) => PipelineError::Format(in_file(path, e)),
        ProjError::DimensionMismatch { .. } | ProjError::SingleClass | ProjError::MissingModel(_) => {
            PipelineError::ModelMismatch(in_file(path, e))
        }
        _ => PipelineError::Validation(in_file(path, e)),
    }
}

pub fn read_templates(path: &Path) -> Result<Vec<Template>> {
    parse_templates(&read(path)?).map_err(|e| gen_err(path, e))
}

pub fn read_corpus(path: &Path) -> Result<Vec<AnnotatedParagraph>> {
    parse_corpus(&read(path)?).map_err(|e| match e {
        CorpusError::Format { .. } => PipelineError::Format(in_file(path, e)),
        _ => PipelineError::Validation(in_file(path, e)),
    })
}

pub fn read_vectors(path: &Path) -> Result<VectorTable> {
    VectorTable::parse(&read(path)?).map_err(|e| match e {
        EmbeddingError::Format { .. } => PipelineError::Format(in_file(path, e)),
        _ => PipelineError::Validation(in_file(path, e)),
    })
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub templates: PathBuf,
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub answers: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateSummary {
    pub written: usize,
    pub dropped: usize,
}

pub fn cmd_generate(opts: &GenerateOptions) -> Result<GenerateSummary> {
    let templates = read_templates(&opts.templates)?;
    let corpus = read_corpus(&opts.corpus)?;
    let mut data = generate_dataset(&templates, &corpus, opts.n, opts.seed).map_err(|e| gen_err(&opts.templates, e))?;
    let mut dropped = 0;
    if opts.answers {
        (data, dropped) = with_gold_answers(data, &corpus);
    }
    write(&opts.out, &format_dataset(&data))?;
    Ok(GenerateSummary { written: data.len(), dropped })
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub data: PathBuf,
    pub vectors: PathBuf,
    pub model: PathBuf,
    pub config: TrainConfig,
    /// Fraction of the dataset, taken from its end, kept out of training.
    pub holdout: Option<f64>,
    pub pool_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub train_n: usize,
    pub holdout_n: usize,
    pub accuracy: Option<f64>,
    pub report: TrainReport,
}

pub fn cmd_train(opts: &TrainOptions) -> Result<TrainSummary> {
    let data = parse_dataset(&read(&opts.data)?).map_err(|e| gen_err(&opts.data, e))?;
    let table = read_vectors(&opts.vectors)?;
    let holdout_n = match opts.holdout {
        Some(h) if !(0.0..1.0).contains(&h) => {
            return Err(PipelineError::Validation(format!("holdout fraction {h} is outside [0, 1)")));
        }
        Some(h) => (data.len() as f64 * h).round() as usize,
        None => 0,
    };
    let (train, test) = data.split_at(data.len() - holdout_n.min(data.len()));
    let (model, report) = train_classifier(train, &table, &opts.config).map_err(|e| proj_err(&opts.data, e))?;
    write(&opts.model, &format_model(&model))?;
    if let Some(pool_path) = &opts.pool_out {
        let pool = build_pool(train, &table).map_err(|e| proj_err(&opts.data, e))?;
        write(pool_path, &format_pool(&pool))?;
    }
    let accuracy = if test.is_empty() { None } else { Some(skeleton_accuracy(&model, test, &table).map_err(|e| proj_err(&opts.data, e))?) };
    Ok(TrainSummary { train_n: train.len(), holdout_n: test.len(), accuracy, report })
}

#[derive(Debug, Clone)]
pub struct ProjectOptions {
    pub model: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub vectors: PathBuf,
    pub questions: PathBuf,
    pub out: PathBuf,
    pub mode: Mode,
    /// Defaults to the shipped template bank.
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectSummary {
    pub n: usize,
    /// Lines written as a bare skeleton because arguments were not recovered.
    pub unfilled: usize,
}

/// Projects one question; when arguments cannot be recovered the bare
/// skeleton is returned with `false`.
pub fn project_line(question: &str, mode: Mode, models: &Models) -> std::result::Result<(ActionProgram, bool), ProjError> {
    let skeleton: Skeleton = project_skeleton(question, mode, models)?;
    match fill_arguments(&skeleton, question, models.templates) {
        Ok(p) => Ok((p, true)),
        Err(_) => Ok((skeleton.program().clone(), false)),
    }
}

pub fn cmd_project(opts: &ProjectOptions) -> Result<ProjectSummary> {
    let table = read_vectors(&opts.vectors)?;
    let templates = match &opts.templates {
        Some(p) => read_templates(p)?,
        None => crate::fixtures::templates(),
    };
    let (classifier, pool) = match opts.mode {
        Mode::Classifier => {
            let path = opts.model.as_deref().ok_or_else(|| PipelineError::Validation("classifier mode needs --model".into()))?;
            let m = parse_model(&read(path)?).map_err(|e| proj_err(path, e))?;
            if m.dim() != table.dimension() {
                return Err(PipelineError::ModelMismatch(format!(
                    "{}: model dimension {} but vectors have {}",
                    path.display(),
                    m.dim(),
                    table.dimension()
                )));
            }
            (Some(m), None)
        }
        Mode::Cosine => {
            let path = opts.pool.as_deref().ok_or_else(|| PipelineError::Validation("cosine mode needs --pool".into()))?;
            let p = parse_pool(&read(path)?, Some(&table)).map_err(|e| proj_err(path, e))?;
            if p.dim() != table.dimension() {
                return Err(PipelineError::ModelMismatch(format!("{}: pool vectors do not match the vector file", path.display())));
            }
            (None, Some(p))
        }
    };
    let models = Models { provider: &table, templates: &templates, pool: pool.as_ref(), classifier: classifier.as_ref() };
    let input = read(&opts.questions)?;
    let lines: Vec<&str> = input.lines().filter(|l| !l.trim().is_empty()).collect();
    let results = par::map(&lines, |line| {
        let (question, para) = match line.split_once('\t') {
            Some((q, p)) => (q, Some(p)),
            None => (*line, None),
        };
        project_line(question, opts.mode, &models).map(|(p, full)| (p, full, para))
    });
    let mut out = String::new();
    let mut unfilled = 0;
    for r in results {
        let (program, full, para) = r.map_err(|e| proj_err(&opts.questions, e))?;
        unfilled += usize::from(!full);
        match para {
            Some(p) => writeln!(out, "{program}\t{p}"),
            None => writeln!(out, "{program}"),
        }
        .expect("writing to a string");
    }
    write(&opts.out, &out)?;
    Ok(ProjectSummary { n: lines.len(), unfilled })
}

#[derive(Debug, Clone)]
pub struct AnswerOptions {
    pub programs: PathBuf,
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnswerSummary {
    pub n: usize,
    pub errors: usize,
}

/// Program and paragraph id from `program \t paragraph` or a dataset line.
fn program_fields(line: &str) -> std::result::Result<(ActionProgram, &str), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let (program, para) = match fields.as_slice() {
        [p, id] => (*p, *id),
        [_, p, id, _] => (*p, *id),
        _ => return Err(format!("expected 2 or 4 tab-separated fields, found {}", fields.len())),
    };
    Ok((ActionProgram::parse(program).map_err(|e| e.to_string())?, para))
}

pub fn cmd_answer(opts: &AnswerOptions) -> Result<AnswerSummary> {
    let corpus = read_corpus(&opts.corpus)?;
    let by_id: BTreeMap<&str, &AnnotatedParagraph> = corpus.iter().map(|p| (p.id(), p)).collect();
    let input = read(&opts.programs)?;
    let lines: Vec<&str> = input.lines().filter(|l| !l.trim().is_empty()).collect();
    let results = par::map(&lines, |line| {
        let (program, para_id) = program_fields(line)?;
        let para = by_id.get(para_id).ok_or_else(|| format!("unknown paragraph `{para_id}`"))?;
        execute(&program, para).map_err(|e| e.to_string())
    });
    let mut out = String::new();
    let mut trace = String::new();
    let mut errors = 0;
    for (id, r) in results.iter().enumerate() {
        match r {
            Ok((answer, t)) => {
                let _ = writeln!(out, "{id}\t{answer}");
                let _ = write!(trace, "# {id}\n{}", t.dump());
            }
            Err(e) => {
                errors += 1;
                let _ = writeln!(out, "{id}\t");
                let _ = writeln!(trace, "# {id}\terror: {e}");
            }
        }
    }
    write(&opts.out, &out)?;
    if let Some(p) = &opts.trace {
        write(p, &trace)?;
    }
    Ok(AnswerSummary { n: lines.len(), errors })
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub pred: PathBuf,
    pub gold: PathBuf,
    pub by_skeleton: bool,
}

/// Gold entries keyed by id: from `id \t answer` lines, or from a dataset
/// file where the id is the line index and the skeleton is known.
fn read_gold(path: &Path) -> Result<Vec<(String, String, String)>> {
    let input = read(path)?;
    let mut out = Vec::new();
    for (i, line) in input.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [id, answer] => out.push((id.to_string(), answer.to_string(), "*".to_string())),
            [_, program, _, answer] => {
                let p = ActionProgram::parse(program).map_err(|e| PipelineError::Format(in_file(path, format!("line {}: {e}", i + 1))))?;
                out.push((i.to_string(), answer.to_string(), p.skeleton().label().to_string()));
            }
            _ => return Err(PipelineError::Format(in_file(path, format!("line {}: expected 2 or 4 fields", i + 1)))),
        }
    }
    Ok(out)
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let input = read(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in input.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (id, answer) =
            line.split_once('\t').ok_or_else(|| PipelineError::Format(in_file(path, format!("line {}: expected `id\\tanswer`", i + 1))))?;
        if out.insert(id.to_string(), answer.to_string()).is_some() {
            return Err(PipelineError::Format(in_file(path, format!("line {}: duplicate id `{id}`", i + 1))));
        }
    }
    Ok(out)
}

/// Missing predictions count as the empty error sentinel.
pub fn cmd_eval(opts: &EvalOptions) -> Result<EvalReport> {
    let gold = read_gold(&opts.gold)?;
    let pred = read_predictions(&opts.pred)?;
    let items: Vec<(&str, &str, &str)> =
        gold.iter().map(|(id, g, sk)| (pred.get(id).map_or("", String::as_str), g.as_str(), sk.as_str())).collect();
    report(items).map_err(|e| PipelineError::Validation(in_file(&opts.gold, e)))
}

/// Report text as printed by `eval`.
pub fn format_report(r: &EvalReport, by_skeleton: bool) -> String {
    let mut s = r.to_string();
    if by_skeleton {
        s.push_str(&r.breakdown());
    }
    s
}
