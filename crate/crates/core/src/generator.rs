//! Template bank and synthetic dataset generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{catalog, AnnotatedParagraph, Mention, MentionKind};
use crate::dsl::{skeletonize, ActionProgram, DslError, NodePath, Skeleton};
use crate::interpreter::execute;
use crate::par;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("template {id}: invalid skeleton: {source}")]
    InvalidSkeleton { id: String, source: DslError },
    #[error("template {id}: unknown slot <{kind}:{index}>")]
    UnknownSlotReference { id: String, kind: MentionKind, index: usize },
    #[error("no {0} mention available")]
    SlotUnfillable(MentionKind),
    #[error("gave up after {0} failed attempts")]
    ExhaustedAfterRetries(usize),
    #[error("example count must be at least 1")]
    InvalidCount,
    #[error("no template can be instantiated on any paragraph")]
    NothingInstantiable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotRef {
    pub kind: MentionKind,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Slot(SlotRef),
}

/// Splits text with `<kind:i>` markers into literals and slots.
pub fn parse_segments(text: &str) -> Result<Vec<Segment>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        let close = rest[open..].find('>').ok_or_else(|| format!("unterminated slot in `{text}`"))? + open;
        let inner = &rest[open + 1..close];
        let (kind, index) = inner.split_once(':').ok_or_else(|| format!("malformed slot `<{inner}>`"))?;
        let kind: MentionKind = kind.trim().parse()?;
        let index: usize = index.trim().parse().map_err(|_| format!("malformed slot index `<{inner}>`"))?;
        if index == 0 {
            return Err(format!("slot indices start at 1 in `<{inner}>`"));
        }
        if open > 0 {
            out.push(Segment::Literal(rest[..open].to_string()));
        }
        out.push(Segment::Slot(SlotRef { kind, index }));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        out.push(Segment::Literal(rest.to_string()));
    }
    Ok(out)
}

/// Replaces every slot by its fill.
pub fn substitute(segments: &[Segment], fills: &BTreeMap<usize, String>) -> String {
    segments
        .iter()
        .map(|s| match s {
            Segment::Literal(t) => t.as_str(),
            Segment::Slot(r) => fills.get(&r.index).map_or("", String::as_str),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Template {
    pub id: String,
    pub prefix: String,
    pub pattern: String,
    pub skeleton: Skeleton,
    pub args: BTreeMap<NodePath, String>,
    segments: Vec<Segment>,
    arg_segments: BTreeMap<NodePath, Vec<Segment>>,
    slots: Vec<SlotRef>,
}

impl Template {
    pub fn new(
        id: &str,
        prefix: &str,
        pattern: &str,
        skeleton: &str,
        args: impl IntoIterator<Item = (NodePath, String)>,
    ) -> Result<Self, GenError> {
        let fmt_err = |reason: String| GenError::Format { line: 0, reason: format!("template {id}: {reason}") };
        let invalid = |source| GenError::InvalidSkeleton { id: id.to_string(), source };
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(fmt_err("invalid id".into()));
        }
        let prefix = prefix.trim().to_string();
        if prefix.is_empty() || !pattern.to_lowercase().starts_with(&prefix.to_lowercase()) {
            return Err(fmt_err(format!("pattern does not begin with prefix `{prefix}`")));
        }
        let segments = parse_segments(pattern).map_err(fmt_err)?;
        if segments.windows(2).any(|w| matches!(w, [Segment::Slot(_), Segment::Slot(_)])) {
            return Err(fmt_err("adjacent slots cannot be aligned".into()));
        }
        let mut slots: Vec<SlotRef> = segments.iter().filter_map(|s| if let Segment::Slot(r) = s { Some(*r) } else { None }).collect();
        slots.sort_by_key(|s| s.index);
        if slots.iter().enumerate().any(|(i, s)| s.index != i + 1) {
            return Err(fmt_err("slot indices must be 1..S, each exactly once".into()));
        }

        let skeleton = Skeleton::parse(skeleton).map_err(invalid)?;
        skeleton.program().type_check().map_err(invalid)?;
        let args: BTreeMap<NodePath, String> = args.into_iter().collect();
        let mut arg_segments = BTreeMap::new();
        for (path, text) in &args {
            let node = skeleton.program().get(path).ok_or_else(|| invalid(DslError::NoSuchNode(path.clone())))?;
            if !node.action().takes_argument() {
                return Err(invalid(DslError::UnexpectedArgument(format!("{} at {path}", node.action()))));
            }
            let segs = parse_segments(text).map_err(fmt_err)?;
            for s in &segs {
                if let Segment::Slot(r) = s {
                    if !slots.contains(r) {
                        return Err(GenError::UnknownSlotReference { id: id.to_string(), kind: r.kind, index: r.index });
                    }
                }
            }
            arg_segments.insert(path.clone(), segs);
        }
        for (path, node) in skeleton.program().nodes() {
            if node.action().takes_argument() && !args.contains_key(&path) {
                return Err(fmt_err(format!("no argument pattern for node {path}")));
            }
        }
        Ok(Template { id: id.to_string(), prefix, pattern: pattern.to_string(), skeleton, args, segments, arg_segments, slots })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Slots in index order.
    pub fn slots(&self) -> &[SlotRef] {
        &self.slots
    }

    pub fn prefix_tokens(&self) -> Vec<String> {
        crate::text::tokenize(&self.prefix)
    }

    /// The skeleton with every argument pattern filled from `fills`.
    pub fn build_program(&self, fills: &BTreeMap<usize, String>) -> Result<ActionProgram, DslError> {
        let mut program = self.skeleton.program().clone();
        for (path, segs) in &self.arg_segments {
            program.set_argument(path, Some(substitute(segs, fills)))?;
        }
        Ok(program)
    }

    /// Slots needed per mention kind.
    fn demand(&self) -> BTreeMap<MentionKind, usize> {
        let mut d = BTreeMap::new();
        for s in &self.slots {
            *d.entry(s.kind).or_insert(0) += 1;
        }
        d
    }

    /// Whether every slot can get a distinct filler from the paragraph.
    pub fn is_instantiable(&self, para: &AnnotatedParagraph) -> bool {
        let cat = catalog(para);
        self.demand().into_iter().all(|(kind, need)| fillers(cat.get(kind)).len() >= need)
    }
}

fn usable_surface(s: &str) -> bool {
    !s.trim().is_empty() && !s.contains(['<', '>', '(', ')', '\t', '\n'])
}

/// Mentions with usable and pairwise distinct surfaces, first occurrence kept.
fn fillers<'a>(mentions: &[&'a Mention]) -> Vec<&'a Mention> {
    let mut seen = BTreeSet::new();
    mentions.iter().copied().filter(|m| usable_surface(&m.surface) && seen.insert(m.surface.as_str())).collect()
}

/// Parses the template file format.
pub fn parse_templates(input: &str) -> Result<Vec<Template>, GenError> {
    struct Draft {
        line: usize,
        id: String,
        prefix: Option<String>,
        pattern: Option<String>,
        skeleton: Option<String>,
        args: Vec<(NodePath, String)>,
    }
    fn finish(d: Draft) -> Result<Template, GenError> {
        let missing = |what: &str| GenError::Format { line: d.line, reason: format!("template {} lacks `{what}`", d.id) };
        let prefix = d.prefix.as_deref().ok_or_else(|| missing("prefix"))?;
        let pattern = d.pattern.as_deref().ok_or_else(|| missing("pattern"))?;
        let skeleton = d.skeleton.as_deref().ok_or_else(|| missing("skeleton"))?;
        Template::new(&d.id, prefix, pattern, skeleton, d.args.clone()).map_err(|e| match e {
            GenError::Format { reason, .. } => GenError::Format { line: d.line, reason },
            other => other,
        })
    }

    let mut out: Vec<Template> = Vec::new();
    let mut draft: Option<Draft> = None;
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        let err = |reason: String| GenError::Format { line, reason };
        let text = raw.trim();
        if text.is_empty() {
            if let Some(d) = draft.take() {
                out.push(finish(d)?);
            }
            continue;
        }
        if let Some(id) = text.strip_prefix("#TEMPLATE") {
            if let Some(d) = draft.take() {
                out.push(finish(d)?);
            }
            let id = id.trim().to_string();
            if out.iter().any(|t| t.id == id) {
                return Err(err(format!("duplicate template id `{id}`")));
            }
            draft = Some(Draft { line, id, prefix: None, pattern: None, skeleton: None, args: Vec::new() });
            continue;
        }
        let d = draft.as_mut().ok_or_else(|| err("field outside a #TEMPLATE record".into()))?;
        let (key, value) = text.split_once(':').ok_or_else(|| err(format!("malformed line `{text}`")))?;
        let value = value.trim().to_string();
        let set = |slot: &mut Option<String>, name: &str| {
            if slot.replace(value.clone()).is_some() {
                Err(err(format!("repeated `{name}`")))
            } else {
                Ok(())
            }
        };
        match key.trim() {
            "prefix" => set(&mut d.prefix, "prefix")?,
            "pattern" => set(&mut d.pattern, "pattern")?,
            "skeleton" => set(&mut d.skeleton, "skeleton")?,
            k if k.starts_with("arg ") => {
                let path: NodePath = k[4..].parse().map_err(|_| err(format!("malformed node path `{}`", &k[4..])))?;
                if d.args.iter().any(|(p, _)| *p == path) {
                    return Err(err(format!("repeated argument for node {path}")));
                }
                d.args.push((path, value));
            }
            k => return Err(err(format!("unknown field `{k}`"))),
        }
    }
    if let Some(d) = draft.take() {
        out.push(finish(d)?);
    }
    Ok(out)
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<Template>, GenError> {
    parse_templates(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticExample {
    pub question: String,
    pub program: ActionProgram,
    pub paragraph_id: String,
    /// Empty for examples read back from a dataset file.
    pub template_id: Option<String>,
    pub slot_fills: BTreeMap<usize, Mention>,
    pub gold_answer: Option<String>,
}

impl SyntheticExample {
    pub fn skeleton(&self) -> Skeleton {
        skeletonize(&self.program)
    }
}

/// Fills every slot with a uniformly drawn mention of its kind; distinct
/// slots get distinct mentions with distinct surfaces.
pub fn instantiate(t: &Template, para: &AnnotatedParagraph, rng: &mut impl Rng) -> Result<SyntheticExample, GenError> {
    let cat = catalog(para);
    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut fills = BTreeMap::new();
    let mut texts = BTreeMap::new();
    for slot in &t.slots {
        let pool: Vec<&Mention> = fillers(cat.get(slot.kind)).into_iter().filter(|m| !used.contains(m.surface.as_str())).collect();
        if pool.is_empty() {
            return Err(GenError::SlotUnfillable(slot.kind));
        }
        let m = pool[rng.gen_range(0..pool.len())];
        used.insert(m.surface.as_str());
        texts.insert(slot.index, m.surface.clone());
        fills.insert(slot.index, m.clone());
    }
    let question = substitute(&t.segments, &texts);
    let program = t.build_program(&texts).map_err(|source| GenError::InvalidSkeleton { id: t.id.clone(), source })?;
    Ok(SyntheticExample {
        question,
        program,
        paragraph_id: para.id().to_string(),
        template_id: Some(t.id.clone()),
        slot_fills: fills,
        gold_answer: None,
    })
}

/// Random stream for one example index: the seed picks the key, the index
/// picks the stream, so any index range can be produced independently.
pub fn example_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Example `i` uses template `i mod T` among templates instantiable on at
/// least one paragraph, and a paragraph drawn uniformly with rejection.
pub fn generate_dataset(
    templates: &[Template],
    corpus: &[AnnotatedParagraph],
    n: usize,
    seed: u64,
) -> Result<Vec<SyntheticExample>, GenError> {
    if n == 0 {
        return Err(GenError::InvalidCount);
    }
    let active: Vec<&Template> = templates.iter().filter(|t| corpus.iter().any(|p| t.is_instantiable(p))).collect();
    if active.is_empty() {
        return Err(GenError::NothingInstantiable);
    }
    let max_attempts = n.saturating_mul(1000);
    let results = par::map_range(n, |i| {
        let t = active[i % active.len()];
        let mut rng = example_rng(seed, i);
        for _ in 0..max_attempts {
            let para = &corpus[rng.gen_range(0..corpus.len())];
            match instantiate(t, para, &mut rng) {
                Ok(ex) => return Ok(ex),
                Err(GenError::SlotUnfillable(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(GenError::ExhaustedAfterRetries(max_attempts))
    });
    results.into_iter().collect()
}

/// Sets gold answers by execution; failing examples are dropped. Returns
/// the kept examples and the number dropped.
pub fn with_gold_answers(dataset: Vec<SyntheticExample>, corpus: &[AnnotatedParagraph]) -> (Vec<SyntheticExample>, usize) {
    let by_id: BTreeMap<&str, &AnnotatedParagraph> = corpus.iter().map(|p| (p.id(), p)).collect();
    let answers = par::map(&dataset, |ex| {
        let para = by_id.get(ex.paragraph_id.as_str())?;
        execute(&ex.program, para).ok().map(|(a, _)| a.text)
    });
    let total = dataset.len();
    let kept: Vec<SyntheticExample> = dataset
        .into_iter()
        .zip(answers)
        .filter_map(|(mut ex, a)| {
            ex.gold_answer = Some(a?);
            Some(ex)
        })
        .collect();
    let dropped = total - kept.len();
    (kept, dropped)
}

/// One line per example: question, program, paragraph id, gold answer.
pub fn format_dataset(dataset: &[SyntheticExample]) -> String {
    let mut out = String::new();
    for ex in dataset {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", ex.question, ex.program, ex.paragraph_id, ex.gold_answer.as_deref().unwrap_or(""));
    }
    out
}

pub fn parse_dataset_line(line: &str) -> Result<SyntheticExample, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    }
    if fields[0].trim().is_empty() {
        return Err("empty question".into());
    }
    let program = ActionProgram::parse(fields[1]).map_err(|e| e.to_string())?;
    program.type_check().map_err(|e| e.to_string())?;
    Ok(SyntheticExample {
        question: fields[0].to_string(),
        program,
        paragraph_id: fields[2].to_string(),
        template_id: None,
        slot_fills: BTreeMap::new(),
        gold_answer: (!fields[3].is_empty()).then(|| fields[3].to_string()),
    })
}

pub fn parse_dataset(input: &str) -> Result<Vec<SyntheticExample>, GenError> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_dataset_line(l).map_err(|reason| GenError::Format { line: i + 1, reason }))
        .collect()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<SyntheticExample>, GenError> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn write_dataset(path: impl AsRef<Path>, dataset: &[SyntheticExample]) -> Result<(), GenError> {
    Ok(std::fs::write(path, format_dataset(dataset))?)
}
