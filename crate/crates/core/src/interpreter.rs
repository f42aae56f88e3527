//! Symbolic executor for action programs over annotated paragraphs.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::corpus::{AnnotatedParagraph, CharSpan, Date, Mention, MentionKind, Quantity};
use crate::dsl::{Action, ActionProgram, DslError, NodePath};
use crate::text::{content_tokens, tokenize};

/// Minimum fraction of phrase content tokens a find match must cover.
pub const FIND_THRESHOLD: f64 = 0.5;
/// Minimum fraction of filter phrase content tokens a sentence must contain.
pub const FILTER_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("empty result at node {0}")]
    EmptyResult(NodePath),
    #[error("no date available at node {0}")]
    DateUnavailable(NodePath),
    #[error("no number available at node {0}")]
    NumberUnavailable(NodePath),
    #[error("missing argument at node {0}")]
    MissingArgument(NodePath),
    #[error("program rejected: {0}")]
    IllTyped(#[from] DslError),
}

/// Failure of a single node operation, before a node path is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    EmptyResult,
    DateUnavailable,
    NumberUnavailable,
}

impl Failure {
    pub fn at(self, node: NodePath) -> ExecError {
        match self {
            Failure::EmptyResult => ExecError::EmptyResult(node),
            Failure::DateUnavailable => ExecError::DateUnavailable(node),
            Failure::NumberUnavailable => ExecError::NumberUnavailable(node),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMention {
    pub mention: Mention,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatedMention {
    pub date: Date,
    pub date_span: CharSpan,
    pub source: Mention,
    pub score: f64,
}

/// Which operation produced a mention set; decides how a root set renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttnOrigin {
    Plain,
    Extremum,
    DateComparison,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecValue {
    PAttn { items: Vec<ScoredMention>, origin: AttnOrigin },
    DateSet(Vec<DatedMention>),
    Count(usize),
    Number(Quantity),
    Span { text: String, span: CharSpan },
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        s.chars().take(n).chain("...".chars()).collect()
    }
}

impl ExecValue {
    /// One-line summary used in traces.
    pub fn summary(&self) -> String {
        match self {
            ExecValue::PAttn { items, .. } => {
                let shown: Vec<String> =
                    items.iter().take(3).map(|s| format!("{}@{:.2}", truncate(&s.mention.surface, 30), s.score)).collect();
                format!("PATTN[{}] {}", items.len(), shown.join("; "))
            }
            ExecValue::DateSet(ds) => {
                let shown: Vec<String> = ds.iter().take(3).map(|d| format!("{}@{:.2}", d.date, d.score)).collect();
                format!("DATESET[{}] {}", ds.len(), shown.join("; "))
            }
            ExecValue::Count(n) => format!("COUNT {n}"),
            ExecValue::Number(q) => format!("NUMBER {}", render_quantity(q)),
            ExecValue::Span { text, span } => format!("SPAN {span} {}", truncate(text, 40)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerKind {
    Span,
    Number,
    DateSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub kind: AnswerKind,
    pub text: String,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub path: NodePath,
    pub action: &'static str,
    pub inputs: Vec<String>,
    pub output: ExecValue,
}

/// One entry per program node, in pre-order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecTrace {
    pub entries: Vec<TraceEntry>,
}

impl ExecTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `<node-path>\t<action>\t<output summary>` per node.
    pub fn dump(&self) -> String {
        self.entries.iter().map(|e| format!("{}\t{}\t{}\n", e.path, e.action, e.output.summary())).collect()
    }
}

fn sort_scored(items: &mut [ScoredMention]) {
    items.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.mention.span.start.cmp(&b.mention.span.start))
            .then(a.mention.span.end.cmp(&b.mention.span.end))
            .then(a.mention.kind.cmp(&b.mention.kind))
    });
}

fn token_set(text: &str) -> HashSet<String> {
    tokenize(text).into_iter().collect()
}

fn sentence_tokens(para: &AnnotatedParagraph) -> Vec<HashSet<String>> {
    (0..para.sentences().len()).map(|i| token_set(para.sentence_text(i).unwrap_or_default())).collect()
}

/// Score of every mention: the fraction of the phrase's content tokens found
/// among the tokens of the mention surface and its sentence.
pub fn exec_find(phrase: &str, para: &AnnotatedParagraph) -> Result<Vec<ScoredMention>, Failure> {
    let wanted = content_tokens(phrase);
    if wanted.is_empty() {
        return Err(Failure::EmptyResult);
    }
    let sentences = sentence_tokens(para);
    let mut out = Vec::new();
    for m in para.mentions() {
        let mut pool = token_set(&m.surface);
        if let Some(s) = para.sentence_of(m.span) {
            pool.extend(sentences[s].iter().cloned());
        }
        let matched = wanted.iter().filter(|t| pool.contains(*t)).count();
        // integer form of matched / total >= 0.5
        if 2 * matched >= wanted.len() && matched > 0 {
            out.push(ScoredMention { mention: m.clone(), score: matched as f64 / wanted.len() as f64 });
        }
    }
    if out.is_empty() {
        return Err(Failure::EmptyResult);
    }
    sort_scored(&mut out);
    Ok(out)
}

/// Keeps mentions whose sentence holds at least half of the phrase's
/// content tokens.
pub fn exec_filter(phrase: &str, input: &[ScoredMention], para: &AnnotatedParagraph) -> Result<Vec<ScoredMention>, Failure> {
    let wanted = content_tokens(phrase);
    let sentences = sentence_tokens(para);
    let out: Vec<ScoredMention> = input
        .iter()
        .filter(|s| {
            let Some(i) = para.sentence_of(s.mention.span) else { return false };
            let matched = wanted.iter().filter(|t| sentences[i].contains(*t)).count();
            !wanted.is_empty() && 2 * matched >= wanted.len()
        })
        .cloned()
        .collect();
    if out.is_empty() {
        return Err(Failure::EmptyResult);
    }
    Ok(out)
}

/// Role a relocate phrase asks for: `who` means the agent, anything else
/// names the role by its first content token.
pub fn relocate_role(phrase: &str) -> Option<String> {
    let tokens = tokenize(phrase);
    match tokens.first().map(String::as_str) {
        Some("who" | "whom" | "whose") => Some("agent".to_string()),
        _ => content_tokens(phrase).into_iter().next(),
    }
}

pub fn exec_relocate(phrase: &str, input: &[ScoredMention], para: &AnnotatedParagraph) -> Result<Vec<ScoredMention>, Failure> {
    let role = relocate_role(phrase).ok_or(Failure::EmptyResult)?;
    let mut by_span: BTreeMap<(usize, usize), ScoredMention> = BTreeMap::new();
    for s in input {
        let Some(link) = s.mention.link.as_ref().filter(|l| l.role == role) else { continue };
        let target = para
            .mentions()
            .iter()
            .find(|m| m.span == link.span)
            .cloned()
            .or_else(|| para.slice(link.span).map(|t| Mention::new(link.span, t, MentionKind::Name)));
        let Some(target) = target else { continue };
        let entry = by_span.entry((link.span.start, link.span.end)).or_insert(ScoredMention { mention: target, score: s.score });
        entry.score = entry.score.max(s.score);
    }
    let mut out: Vec<ScoredMention> = by_span.into_values().collect();
    if out.is_empty() {
        return Err(Failure::EmptyResult);
    }
    sort_scored(&mut out);
    Ok(out)
}

pub fn exec_count(input: &[ScoredMention]) -> usize {
    input.len()
}

fn extremum(input: &[ScoredMention], want_max: bool) -> Result<Vec<ScoredMention>, Failure> {
    let mut best: Option<(&ScoredMention, f64)> = None;
    for s in input {
        let Some(q) = &s.mention.number else { continue };
        let better = match best {
            None => true,
            Some((b, v)) => {
                let earlier = s.mention.span.start < b.mention.span.start;
                if want_max {
                    q.value > v || (q.value == v && earlier)
                } else {
                    q.value < v || (q.value == v && earlier)
                }
            }
        };
        if better {
            best = Some((s, q.value));
        }
    }
    best.map(|(s, _)| vec![s.clone()]).ok_or(Failure::NumberUnavailable)
}

pub fn exec_max(input: &[ScoredMention]) -> Result<Vec<ScoredMention>, Failure> {
    extremum(input, true)
}

pub fn exec_min(input: &[ScoredMention]) -> Result<Vec<ScoredMention>, Failure> {
    extremum(input, false)
}

/// Number carried by the top-ranked numeric mention.
pub fn exec_find_num(input: &[ScoredMention]) -> Result<Quantity, Failure> {
    input.iter().find_map(|s| s.mention.number.clone()).ok_or(Failure::NumberUnavailable)
}

pub fn exec_find_date(phrase: &str, para: &AnnotatedParagraph) -> Result<Vec<DatedMention>, Failure> {
    let found = exec_find(phrase, para)?;
    let mut out = Vec::new();
    for s in &found {
        let mut seen: Vec<(Date, CharSpan)> = Vec::new();
        let mut push = |date: Date, span: CharSpan| {
            if !seen.contains(&(date, span)) {
                seen.push((date, span));
            }
        };
        for d in &s.mention.dates {
            push(*d, s.mention.span);
        }
        if let Some(si) = para.sentence_of(s.mention.span) {
            let sentence = para.sentences()[si];
            for m in para.mentions().iter().filter(|m| m.kind == MentionKind::Date && sentence.contains(&m.span)) {
                for d in &m.dates {
                    push(*d, m.span);
                }
            }
        }
        out.extend(seen.into_iter().map(|(date, date_span)| DatedMention { date, date_span, source: s.mention.clone(), score: s.score }));
    }
    if out.is_empty() {
        return Err(Failure::DateUnavailable);
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.source.span.start.cmp(&b.source.span.start))
            .then(a.source.span.end.cmp(&b.source.span.end))
            .then(a.date_span.start.cmp(&b.date_span.start))
    });
    Ok(out)
}

fn years_quantity(years: i64) -> Quantity {
    Quantity::new(years as f64, Some("years"))
}

pub fn exec_year_difference(a: &[DatedMention], b: &[DatedMention]) -> Result<Quantity, Failure> {
    let (ta, tb) = (a.first().ok_or(Failure::DateUnavailable)?, b.first().ok_or(Failure::DateUnavailable)?);
    Ok(years_quantity((i64::from(ta.date.year) - i64::from(tb.date.year)).abs()))
}

pub fn exec_year_diff_single_event(a: &[DatedMention]) -> Result<Quantity, Failure> {
    let years: std::collections::BTreeSet<i32> = a.iter().map(|d| d.date.year).collect();
    match (years.first(), years.last()) {
        (Some(lo), Some(hi)) if years.len() >= 2 => Ok(years_quantity(i64::from(*hi) - i64::from(*lo))),
        _ => Err(Failure::DateUnavailable),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateOrder {
    Lesser,
    Greater,
}

/// Source mentions of the side whose top date is earlier (`Lesser`) or
/// later (`Greater`). Equal dates select side `a`.
pub fn exec_compare_date(a: &[DatedMention], b: &[DatedMention], order: DateOrder) -> Result<Vec<ScoredMention>, Failure> {
    let (ta, tb) = (a.first().ok_or(Failure::DateUnavailable)?, b.first().ok_or(Failure::DateUnavailable)?);
    let (ka, kb) = (ta.date.sort_key(), tb.date.sort_key());
    let pick_b = match order {
        DateOrder::Lesser => kb < ka,
        DateOrder::Greater => kb > ka,
    };
    let side = if pick_b { b } else { a };
    let mut out: Vec<ScoredMention> = Vec::new();
    for d in side {
        match out.iter_mut().find(|s| s.mention.span == d.source.span && s.mention.kind == d.source.kind) {
            Some(s) => s.score = s.score.max(d.score),
            None => out.push(ScoredMention { mention: d.source.clone(), score: d.score }),
        }
    }
    sort_scored(&mut out);
    Ok(out)
}

pub fn exec_find_span(input: &[ScoredMention]) -> Result<(String, CharSpan), Failure> {
    input.first().map(|s| (s.mention.surface.clone(), s.mention.span)).ok_or(Failure::EmptyResult)
}

const UNIT_FORMS: [(&str, &str); 4] = [("yard", "yards"), ("point", "points"), ("year", "years"), ("percent", "percent")];

/// Singular form for a value of exactly one, plural otherwise; unknown
/// units are kept as written.
pub fn inflect_unit(unit: &str, value: f64) -> String {
    let lower = unit.to_lowercase();
    match UNIT_FORMS.iter().find(|(s, p)| *s == lower || *p == lower) {
        Some((s, p)) => if value == 1.0 { s } else { p }.to_string(),
        None => unit.to_string(),
    }
}

pub fn format_number(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        let s = format!("{value:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn render_quantity(q: &Quantity) -> String {
    match &q.unit {
        Some(u) => format!("{} {}", format_number(q.value), inflect_unit(u, q.value)),
        None => format_number(q.value),
    }
}

pub fn render_answer(value: &ExecValue) -> Option<Answer> {
    let (kind, text) = match value {
        ExecValue::Count(n) => (AnswerKind::Number, n.to_string()),
        ExecValue::Number(q) => (AnswerKind::Number, render_quantity(q)),
        ExecValue::Span { text, .. } => (AnswerKind::Span, text.clone()),
        ExecValue::PAttn { items, origin } => {
            let top = items.first()?;
            match (origin, &top.mention.number) {
                (AttnOrigin::Extremum, Some(q)) => (AnswerKind::Number, render_quantity(q)),
                (AttnOrigin::DateComparison, _) => (AnswerKind::DateSpan, top.mention.surface.clone()),
                _ => (AnswerKind::Span, top.mention.surface.clone()),
            }
        }
        ExecValue::DateSet(_) => return None,
    };
    (!text.is_empty()).then_some(Answer { kind, text })
}

fn pattn(value: &ExecValue) -> &[ScoredMention] {
    match value {
        ExecValue::PAttn { items, .. } => items,
        _ => unreachable!("type-checked program"),
    }
}

fn dateset(value: &ExecValue) -> &[DatedMention] {
    match value {
        ExecValue::DateSet(ds) => ds,
        _ => unreachable!("type-checked program"),
    }
}

fn eval_node(
    node: &ActionProgram,
    path: NodePath,
    para: &AnnotatedParagraph,
    outputs: &mut Vec<(NodePath, &'static str, Vec<String>, ExecValue)>,
) -> Result<ExecValue, ExecError> {
    let slot = outputs.len();
    outputs.push((path.clone(), node.action().name(), Vec::new(), ExecValue::Count(0)));
    let mut inputs = Vec::with_capacity(node.children().len());
    for (i, child) in node.children().iter().enumerate() {
        inputs.push(eval_node(child, path.child(i), para, outputs)?);
    }
    let arg = || node.argument().ok_or_else(|| ExecError::MissingArgument(path.clone()));
    let fail = |f: Failure| f.at(path.clone());
    let plain = |items| ExecValue::PAttn { items, origin: AttnOrigin::Plain };
    let value = match node.action() {
        Action::Find => plain(exec_find(arg()?, para).map_err(fail)?),
        Action::FindDate => ExecValue::DateSet(exec_find_date(arg()?, para).map_err(fail)?),
        Action::Filter => plain(exec_filter(arg()?, pattn(&inputs[0]), para).map_err(fail)?),
        Action::Relocate => plain(exec_relocate(arg()?, pattn(&inputs[0]), para).map_err(fail)?),
        Action::Count => ExecValue::Count(exec_count(pattn(&inputs[0]))),
        Action::Max => ExecValue::PAttn { items: exec_max(pattn(&inputs[0])).map_err(fail)?, origin: AttnOrigin::Extremum },
        Action::Min => ExecValue::PAttn { items: exec_min(pattn(&inputs[0])).map_err(fail)?, origin: AttnOrigin::Extremum },
        Action::FindNum => ExecValue::Number(exec_find_num(pattn(&inputs[0])).map_err(fail)?),
        Action::FindSpan => {
            let (text, span) = exec_find_span(pattn(&inputs[0])).map_err(fail)?;
            ExecValue::Span { text, span }
        }
        Action::YearDifference => ExecValue::Number(exec_year_difference(dateset(&inputs[0]), dateset(&inputs[1])).map_err(fail)?),
        Action::YearDiffSingleEvent => ExecValue::Number(exec_year_diff_single_event(dateset(&inputs[0])).map_err(fail)?),
        Action::CompareDateLesserThan | Action::CompareDateGreaterThan => {
            let order = if node.action() == Action::CompareDateLesserThan { DateOrder::Lesser } else { DateOrder::Greater };
            let items = exec_compare_date(dateset(&inputs[0]), dateset(&inputs[1]), order).map_err(fail)?;
            ExecValue::PAttn { items, origin: AttnOrigin::DateComparison }
        }
    };
    outputs[slot].2 = inputs.iter().map(ExecValue::summary).collect();
    outputs[slot].3 = value.clone();
    Ok(value)
}

/// Evaluates the program bottom-up against the paragraph and renders the
/// root value.
pub fn execute(program: &ActionProgram, para: &AnnotatedParagraph) -> Result<(Answer, ExecTrace), ExecError> {
    program.type_check()?;
    let mut outputs = Vec::with_capacity(program.node_count());
    let root = eval_node(program, NodePath::root(), para, &mut outputs)?;
    let answer = render_answer(&root).ok_or(ExecError::EmptyResult(NodePath::root()))?;
    let entries = outputs.into_iter().map(|(path, action, inputs, output)| TraceEntry { path, action, inputs, output }).collect();
    Ok((answer, ExecTrace { entries }))
}

/// Answer text only, with execution errors mapped to `None`.
pub fn answer_text(program: &ActionProgram, para: &AnnotatedParagraph) -> Option<String> {
    execute(program, para).ok().map(|(a, _)| a.text)
}
