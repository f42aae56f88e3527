//! Mapping natural questions to programs: cosine nearest neighbour over a
//! pool of synthetic questions, or a softmax classifier over skeletons,
//! followed by argument recovery against the template bank.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::{enumerate_labels, Action, ActionProgram, DslError, NodePath, Skeleton};
use crate::embedding::{cosine, EmbeddingError, EmbeddingProvider};
use crate::generator::{parse_dataset_line, Segment, SyntheticExample, Template};
use crate::par;
use crate::text::{is_stopword, tokenize};

#[derive(Debug, Error)]
pub enum ProjError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training data has a single skeleton")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("no template has skeleton `{0}`")]
    NoTemplateForSkeleton(String),
    #[error("cannot recover arguments for `{0}`")]
    AlignmentFailure(String),
    #[error("{0} model not loaded")]
    MissingModel(&'static str),
    #[error(transparent)]
    Dsl(#[from] DslError),
}

impl From<EmbeddingError> for ProjError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::DimensionMismatch(expected, found) => ProjError::DimensionMismatch { expected, found },
            EmbeddingError::Io(io) => ProjError::Io(io),
            EmbeddingError::Format { line, reason } => ProjError::Format { line, reason },
            EmbeddingError::ZeroVector => ProjError::ZeroVector,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub question: String,
    pub program: ActionProgram,
    pub paragraph_id: String,
    pub vector: Vec<f64>,
}

/// Synthetic questions with cached embeddings, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineProjector {
    entries: Vec<PoolEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub question: String,
    pub program: ActionProgram,
    pub similarity: f64,
}

impl CosineProjector {
    pub fn from_entries(entries: Vec<PoolEntry>) -> Result<Self, ProjError> {
        let dim = entries.first().ok_or(ProjError::EmptyDataset)?.vector.len();
        if let Some(e) = entries.iter().find(|e| e.vector.len() != dim) {
            return Err(ProjError::DimensionMismatch { expected: dim, found: e.vector.len() });
        }
        Ok(CosineProjector { entries })
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].vector.len()
    }

    /// Cosine similarity of the query vector to every pool entry.
    pub fn similarities(&self, query: &[f64]) -> Result<Vec<f64>, ProjError> {
        if query.len() != self.dim() {
            return Err(ProjError::DimensionMismatch { expected: self.dim(), found: query.len() });
        }
        par::map(&self.entries, |e| cosine(query, &e.vector)).into_iter().map(|r| r.map_err(ProjError::from)).collect()
    }

    pub fn nearest(&self, query: &[f64]) -> Result<Neighbor, ProjError> {
        let sims = self.similarities(query)?;
        let (index, similarity) = par::argmax(&sims).ok_or(ProjError::EmptyDataset)?;
        let e = &self.entries[index];
        Ok(Neighbor { index, question: e.question.clone(), program: e.program.clone(), similarity })
    }
}

pub fn build_pool(dataset: &[SyntheticExample], provider: &dyn EmbeddingProvider) -> Result<CosineProjector, ProjError> {
    if dataset.is_empty() {
        return Err(ProjError::EmptyDataset);
    }
    let entries = par::map(dataset, |ex| PoolEntry {
        question: ex.question.clone(),
        program: ex.program.clone(),
        paragraph_id: ex.paragraph_id.clone(),
        vector: provider.embed(&ex.question).values,
    });
    CosineProjector::from_entries(entries)
}

/// The pool entry most similar to the question; ties go to the lowest index.
pub fn project_cosine(projector: &CosineProjector, question: &str, provider: &dyn EmbeddingProvider) -> Result<Neighbor, ProjError> {
    projector.nearest(&provider.embed(question).values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Minibatch size when shuffling; unshuffled training uses full batches.
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, learning_rate: 0.5, l2: 1e-4, seed: 13, shuffle: true, batch_size: 16 }
    }
}

/// Multinomial logistic regression over question embeddings. Row `l` of
/// the weight matrix holds D weights followed by a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonClassifier {
    labels: Vec<Skeleton>,
    dim: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub probabilities: Vec<f64>,
    pub top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: usize,
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    scores.iter_mut().for_each(|s| *s /= sum);
}

fn affine(weights: &[f64], n_labels: usize, dim: usize, x: &[f64]) -> Vec<f64> {
    (0..n_labels)
        .map(|l| {
            let row = &weights[l * (dim + 1)..(l + 1) * (dim + 1)];
            row[..dim].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + row[dim]
        })
        .collect()
}

/// Mean cross-entropy over `batch` plus `l2 / 2 * |W|^2` (biases excluded),
/// and its gradient with respect to the flattened weights.
pub fn loss_and_gradient(
    weights: &[f64],
    n_labels: usize,
    dim: usize,
    xs: &[Vec<f64>],
    ys: &[usize],
    batch: &[usize],
    l2: f64,
) -> (f64, Vec<f64>) {
    let stride = dim + 1;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let mut p = affine(weights, n_labels, dim, &xs[i]);
        softmax_in_place(&mut p);
        loss -= p[ys[i]].max(f64::MIN_POSITIVE).ln();
        p[ys[i]] -= 1.0;
        for (l, &delta) in p.iter().enumerate() {
            let row = &mut grad[l * stride..(l + 1) * stride];
            for (g, v) in row[..dim].iter_mut().zip(&xs[i]) {
                *g += delta * v * scale;
            }
            row[dim] += delta * scale;
        }
    }
    loss *= scale;
    for l in 0..n_labels {
        for j in 0..dim {
            let w = weights[l * stride + j];
            loss += 0.5 * l2 * w * w;
            grad[l * stride + j] += l2 * w;
        }
    }
    (loss, grad)
}

impl SkeletonClassifier {
    pub fn new(labels: Vec<Skeleton>, dim: usize, weights: Vec<f64>) -> Result<Self, ProjError> {
        if labels.len() < 2 {
            return Err(ProjError::SingleClass);
        }
        if weights.len() != labels.len() * (dim + 1) {
            return Err(ProjError::DimensionMismatch { expected: labels.len() * (dim + 1), found: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ProjError::Format { line: 0, reason: "non-finite weight".into() });
        }
        Ok(SkeletonClassifier { labels, dim, weights })
    }

    pub fn zeros(labels: Vec<Skeleton>, dim: usize) -> Result<Self, ProjError> {
        let n = labels.len() * (dim + 1);
        Self::new(labels, dim, vec![0.0; n])
    }

    pub fn labels(&self) -> &[Skeleton] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn classify_vector(&self, x: &[f64]) -> Result<Classification, ProjError> {
        if x.len() != self.dim {
            return Err(ProjError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut probabilities = affine(&self.weights, self.labels.len(), self.dim, x);
        softmax_in_place(&mut probabilities);
        let (top, _) = par::argmax(&probabilities).expect("at least two labels");
        Ok(Classification { probabilities, top })
    }

    /// Mean training cross-entropy, penalty included.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[usize], l2: f64) -> f64 {
        let all: Vec<usize> = (0..xs.len()).collect();
        loss_and_gradient(&self.weights, self.labels.len(), self.dim, xs, ys, &all, l2).0
    }
}

pub fn classify(classifier: &SkeletonClassifier, question: &str, provider: &dyn EmbeddingProvider) -> Result<Classification, ProjError> {
    if provider.dimension() != classifier.dim {
        return Err(ProjError::DimensionMismatch { expected: classifier.dim, found: provider.dimension() });
    }
    classifier.classify_vector(&provider.embed(question).values)
}

/// Gradient descent from zero weights on precomputed feature vectors.
pub fn fit(
    labels: Vec<Skeleton>,
    xs: &[Vec<f64>],
    ys: &[usize],
    config: &TrainConfig,
) -> Result<(SkeletonClassifier, TrainReport), ProjError> {
    if xs.is_empty() {
        return Err(ProjError::EmptyDataset);
    }
    let dim = xs[0].len();
    if let Some(x) = xs.iter().find(|x| x.len() != dim) {
        return Err(ProjError::DimensionMismatch { expected: dim, found: x.len() });
    }
    let epochs = config.epochs.max(1);
    let mut model = SkeletonClassifier::zeros(labels, dim)?;
    let n_labels = model.labels.len();
    let initial_loss = model.loss(xs, ys, config.l2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let batch_size = if config.shuffle { config.batch_size.max(1) } else { xs.len() };
    for _ in 0..epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(batch_size) {
            let (_, grad) = loss_and_gradient(&model.weights, n_labels, dim, xs, ys, batch, config.l2);
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
    }
    let final_loss = model.loss(xs, ys, config.l2);
    Ok((model, TrainReport { initial_loss, final_loss, epochs }))
}

/// Embeds every question and fits one class per distinct skeleton.
pub fn train_classifier(
    dataset: &[SyntheticExample],
    provider: &dyn EmbeddingProvider,
    config: &TrainConfig,
) -> Result<(SkeletonClassifier, TrainReport), ProjError> {
    if dataset.is_empty() {
        return Err(ProjError::EmptyDataset);
    }
    if provider.dimension() == 0 {
        return Err(ProjError::DimensionMismatch { expected: 1, found: 0 });
    }
    for ex in dataset {
        ex.program.type_check()?;
    }
    let labels = enumerate_labels(dataset.iter().map(|e| &e.program))?;
    if labels.len() < 2 {
        return Err(ProjError::SingleClass);
    }
    let ys: Vec<usize> = dataset.iter().map(|e| labels.binary_search(&e.skeleton()).expect("label set covers the dataset")).collect();
    let xs = par::map(dataset, |e| provider.embed(&e.question).values);
    fit(labels, &xs, &ys, config)
}

/// Fraction of examples whose skeleton is the classifier's top label.
pub fn skeleton_accuracy(
    classifier: &SkeletonClassifier,
    dataset: &[SyntheticExample],
    provider: &dyn EmbeddingProvider,
) -> Result<f64, ProjError> {
    if dataset.is_empty() {
        return Err(ProjError::EmptyDataset);
    }
    let hits = par::map(dataset, |e| classify(classifier, &e.question, provider).map(|c| classifier.labels[c.top] == e.skeleton()));
    let mut correct = 0;
    for h in hits {
        correct += usize::from(h?);
    }
    Ok(correct as f64 / dataset.len() as f64)
}

fn trim_end_punct(s: &str) -> &str {
    s.trim().trim_end_matches(['?', '.', '!']).trim_end()
}

/// Case-insensitive alignment of a question against slotted pattern
/// segments. Literals anchor the slots; each slot ends at the leftmost
/// following literal and the last literal is anchored at the end.
pub fn align(segments: &[Segment], question: &str) -> Option<std::collections::BTreeMap<usize, String>> {
    let q = trim_end_punct(question);
    let ql = q.to_ascii_lowercase();
    let mut segs: Vec<Segment> = segments.to_vec();
    if let Some(Segment::Literal(last)) = segs.last_mut() {
        *last = trim_end_punct(last).to_string();
        if last.is_empty() {
            segs.pop();
        }
    }
    let mut fills = std::collections::BTreeMap::new();
    let mut pos = 0;
    for (k, seg) in segs.iter().enumerate() {
        match seg {
            Segment::Literal(t) => {
                let tl = t.to_ascii_lowercase();
                if !ql[pos..].starts_with(&tl) {
                    return None;
                }
                pos += tl.len();
            }
            Segment::Slot(r) => {
                let end = match segs.get(k + 1) {
                    None => ql.len(),
                    Some(Segment::Literal(t)) => {
                        let tl = t.to_ascii_lowercase();
                        if k + 2 == segs.len() {
                            if !ql.ends_with(&tl) || ql.len() - tl.len() <= pos {
                                return None;
                            }
                            ql.len() - tl.len()
                        } else {
                            pos + ql[pos..].match_indices(&tl).map(|(i, _)| i).find(|&i| i > 0)?
                        }
                    }
                    Some(Segment::Slot(_)) => return None,
                };
                let value = q[pos..end].trim();
                if value.is_empty() {
                    return None;
                }
                fills.insert(r.index, value.to_string());
                pos = end;
            }
        }
    }
    (pos == ql.len()).then_some(fills)
}

fn common_prefix_len(a: &[String], b: &[String]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Recovers phrase arguments for a skeleton from the question text.
pub fn fill_arguments(skeleton: &Skeleton, question: &str, templates: &[Template]) -> Result<ActionProgram, ProjError> {
    let q_tokens = tokenize(question);
    let mut candidates: Vec<(usize, &Template)> =
        templates.iter().filter(|t| t.skeleton == *skeleton).map(|t| (common_prefix_len(&q_tokens, &t.prefix_tokens()), t)).collect();
    if candidates.is_empty() {
        return Err(ProjError::NoTemplateForSkeleton(skeleton.label().to_string()));
    }
    // stable: ties keep file order
    candidates.sort_by_key(|c| std::cmp::Reverse(c.0));
    for (_, t) in &candidates {
        if let Some(fills) = align(t.segments(), question) {
            if let Ok(p) = t.build_program(&fills) {
                return Ok(p);
            }
        }
    }
    fallback_arguments(skeleton, question, candidates[0].0).ok_or_else(|| ProjError::AlignmentFailure(skeleton.label().to_string()))
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(|w| w.trim_matches(crate::text::is_punct).to_string()).filter(|w| !w.is_empty()).collect()
}

fn content_words(ws: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for w in ws {
        let l = w.to_lowercase();
        if !is_stopword(&l) && !out.iter().any(|o| o.to_lowercase() == l) {
            out.push(w.clone());
        }
    }
    out
}

fn fallback_arguments(skeleton: &Skeleton, question: &str, prefix_len: usize) -> Option<ActionProgram> {
    let mut program = skeleton.program().clone();
    let arg_nodes: Vec<(NodePath, Action)> =
        program.nodes().into_iter().filter(|(_, n)| n.action().takes_argument()).map(|(p, n)| (p, n.action())).collect();
    let date_leaves: Vec<&NodePath> = arg_nodes.iter().filter(|(_, a)| *a == Action::FindDate).map(|(p, _)| p).collect();
    let text = trim_end_punct(question);

    if date_leaves.len() == 2 && arg_nodes.len() == 2 {
        let rest = match text.split_once(", ") {
            Some((_, r)) => r.to_string(),
            None => words(text).get(prefix_len..).unwrap_or_default().join(" "),
        };
        let (a, b) = rest.split_once(" or ").or_else(|| rest.split_once(" and "))?;
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            return None;
        }
        program.set_argument(date_leaves[0], Some(a.to_string())).ok()?;
        program.set_argument(date_leaves[1], Some(b.to_string())).ok()?;
        return Some(program);
    }

    // unary chain: relocate head, optional filter phrase, deepest leaf
    let all = words(text);
    let mut tail: Vec<String> = all.get(prefix_len..).unwrap_or_default().to_vec();
    let mut leaf_path = None;
    for (path, action) in &arg_nodes {
        match action {
            Action::Relocate => {
                let head = all.first()?.to_lowercase();
                let first_content = content_words(&all).into_iter().next()?.to_lowercase();
                program.set_argument(path, Some(format!("{head} {first_content}"))).ok()?;
                if tail.first().is_some_and(|w| w.to_lowercase() == first_content) {
                    tail.remove(0);
                }
            }
            Action::Filter => {
                let at =
                    tail.windows(2).position(|w| matches!(w[0].to_lowercase().as_str(), "in" | "of") && w[1].to_lowercase() == "the")?;
                let pp = tail.split_off(at);
                program.set_argument(path, Some(pp.join(" "))).ok()?;
            }
            Action::Find | Action::FindDate => {
                if leaf_path.replace(path.clone()).is_some() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let leaf_path = leaf_path?;
    let mut leaf = content_words(&tail);
    if leaf.is_empty() {
        leaf = content_words(&all);
    }
    if leaf.is_empty() {
        return None;
    }
    program.set_argument(&leaf_path, Some(leaf.join(" "))).ok()?;
    Some(program)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cosine,
    Classifier,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Mode::Cosine),
            "classifier" => Ok(Mode::Classifier),
            other => Err(format!("unknown mode `{other}` (expected cosine or classifier)")),
        }
    }
}

/// Everything [`project`] may need; only the model for the chosen mode
/// has to be present.
#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub provider: &'a dyn EmbeddingProvider,
    pub templates: &'a [Template],
    pub pool: Option<&'a CosineProjector>,
    pub classifier: Option<&'a SkeletonClassifier>,
}

/// The skeleton a question projects to, before argument recovery.
pub fn project_skeleton(question: &str, mode: Mode, models: &Models) -> Result<Skeleton, ProjError> {
    match mode {
        Mode::Cosine => {
            let pool = models.pool.ok_or(ProjError::MissingModel("cosine pool"))?;
            Ok(project_cosine(pool, question, models.provider)?.program.skeleton())
        }
        Mode::Classifier => {
            let clf = models.classifier.ok_or(ProjError::MissingModel("classifier"))?;
            let c = classify(clf, question, models.provider)?;
            Ok(clf.labels[c.top].clone())
        }
    }
}

/// Projects and fills arguments, producing a complete program.
pub fn project(question: &str, mode: Mode, models: &Models) -> Result<ActionProgram, ProjError> {
    let skeleton = project_skeleton(question, mode, models)?;
    fill_arguments(&skeleton, question, models.templates)
}

pub fn format_model(model: &SkeletonClassifier) -> String {
    let mut out = format!("LABELS {}\n", model.labels.len());
    for l in &model.labels {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "WEIGHTS {} {}", model.labels.len(), model.dim + 1);
    for row in model.weights.chunks(model.dim + 1) {
        let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn parse_model(input: &str) -> Result<SkeletonClassifier, ProjError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let err = |line: usize, reason: &str| ProjError::Format { line, reason: reason.to_string() };
    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty model file"))?;
    let n: usize = header.strip_prefix("LABELS ").and_then(|s| s.trim().parse().ok()).ok_or_else(|| err(ln, "expected `LABELS <L>`"))?;
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, text) = lines.next().ok_or_else(|| err(ln, "truncated label list"))?;
        labels.push(Skeleton::parse(text).map_err(|e| err(ln, &e.to_string()))?);
    }
    let (ln, header) = lines.next().ok_or_else(|| err(ln, "missing WEIGHTS header"))?;
    let dims: Vec<usize> =
        header.strip_prefix("WEIGHTS ").map(|s| s.split_whitespace().filter_map(|v| v.parse().ok()).collect()).unwrap_or_default();
    if dims.len() != 2 || dims[0] != n || dims[1] < 2 {
        return Err(err(ln, "expected `WEIGHTS <L> <D+1>` matching the label count"));
    }
    let mut weights = Vec::with_capacity(n * dims[1]);
    for _ in 0..n {
        let (ln, row) = lines.next().ok_or_else(|| err(ln, "truncated weight matrix"))?;
        let values: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| err(ln, "malformed weight"))?;
        if values.len() != dims[1] {
            return Err(err(ln, "wrong number of weights in row"));
        }
        weights.extend(values);
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(err(ln, &format!("unexpected trailing content `{extra}`")));
    }
    SkeletonClassifier::new(labels, dims[1] - 1, weights)
}

pub fn save_model(path: impl AsRef<Path>, model: &SkeletonClassifier) -> Result<(), ProjError> {
    Ok(std::fs::write(path, format_model(model))?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SkeletonClassifier, ProjError> {
    parse_model(&std::fs::read_to_string(path)?)
}

/// Dataset lines, each followed by its vector line.
pub fn format_pool(pool: &CosineProjector) -> String {
    let mut out = String::new();
    for e in &pool.entries {
        let cells: Vec<String> = e.vector.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}\t{}\t{}\t\n{}", e.question, e.program, e.paragraph_id, cells.join(" "));
    }
    out
}

/// Reads a pool file; entries without a vector line are embedded with
/// `provider`, which is then required.
pub fn parse_pool(input: &str, provider: Option<&dyn EmbeddingProvider>) -> Result<CosineProjector, ProjError> {
    let lines: Vec<(usize, &str)> = input.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty()).collect();
    let mut entries = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (ln, line) = lines[i];
        let ex = parse_dataset_line(line).map_err(|reason| ProjError::Format { line: ln, reason })?;
        i += 1;
        let vector = match lines.get(i) {
            Some((vln, v)) if !v.contains('\t') => {
                i += 1;
                v.split_whitespace()
                    .map(|x| x.parse::<f64>().ok().filter(|x| x.is_finite()))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| ProjError::Format { line: *vln, reason: "malformed vector".into() })?
            }
            _ => provider.ok_or_else(|| ProjError::Format { line: ln, reason: "missing vector line".into() })?.embed(&ex.question).values,
        };
        entries.push(PoolEntry { question: ex.question, program: ex.program, paragraph_id: ex.paragraph_id, vector });
    }
    CosineProjector::from_entries(entries)
}

pub fn save_pool(path: impl AsRef<Path>, pool: &CosineProjector) -> Result<(), ProjError> {
    Ok(std::fs::write(path, format_pool(pool))?)
}

pub fn load_pool(path: impl AsRef<Path>, provider: Option<&dyn EmbeddingProvider>) -> Result<CosineProjector, ProjError> {
    parse_pool(&std::fs::read_to_string(path)?, provider)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::VectorTable;
    use crate::generator::parse_templates;
    use approx::assert_abs_diff_eq;

    fn two_class() -> (Vec<Skeleton>, Vec<Vec<f64>>, Vec<usize>) {
        let labels = vec![Skeleton::parse("count -> find").unwrap(), Skeleton::parse("find_span -> find").unwrap()];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..100 {
            xs.push(if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] });
            ys.push(i % 2);
        }
        (labels, xs, ys)
    }

    #[test]
    fn separable_two_class() {
        let (labels, xs, ys) = two_class();
        let (m, report) = fit(labels.clone(), &xs, &ys, &TrainConfig::default()).unwrap();
        assert!(report.final_loss <= report.initial_loss);
        assert_abs_diff_eq!(report.initial_loss, 2f64.ln(), epsilon = 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.classify_vector(x).unwrap().top, *y);
        }
        let (m2, _) = fit(labels, &xs, &ys, &TrainConfig::default()).unwrap();
        assert_eq!(m.weights(), m2.weights());
    }

    #[test]
    fn zero_weights_are_uniform() {
        let labels: Vec<Skeleton> =
            ["count -> find", "find_span -> find", "max -> find"].iter().map(|s| Skeleton::parse(s).unwrap()).collect();
        let m = SkeletonClassifier::zeros(labels, 4).unwrap();
        let c = m.classify_vector(&[0.3, -1.0, 2.0, 0.0]).unwrap();
        assert!(c.probabilities.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
        assert_eq!(c.top, 0);
        assert!(matches!(m.classify_vector(&[1.0]), Err(ProjError::DimensionMismatch { expected: 4, found: 1 })));
    }

    #[test]
    fn model_file_round_trip() {
        let (labels, xs, ys) = two_class();
        let (m, _) = fit(labels, &xs, &ys, &TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
        let back = parse_model(&format_model(&m)).unwrap();
        assert_eq!(back, m);
        assert!(matches!(parse_model("LABELS 2\ncount -> find\n"), Err(ProjError::Format { .. })));
        assert!(matches!(parse_model("LABELS 1\ncount -> find\nWEIGHTS 1 2\n0 0\n"), Err(ProjError::SingleClass)));
    }

    const BANK: &str = "#TEMPLATE lt\nprefix: which happened earlier\npattern: Which happened earlier, <event:1> or <event:2>?\nskeleton: compare_date_lesser_than -> find_date, find_date\narg 0: <event:1>\narg 1: <event:2>\n\n#TEMPLATE ct\nprefix: how many touchdowns were scored\npattern: How many touchdowns were scored?\nskeleton: count -> find\narg 0: touchdowns scored\n\n#TEMPLATE kick\nprefix: who kicked the most\npattern: Who kicked the most <noun_phrase:1>?\nskeleton: relocate -> find\narg .: who kicked\narg 0: <noun_phrase:1>\n\n#TEMPLATE q\nprefix: how many touchdowns were scored\npattern: How many touchdowns were scored by <name:1> in the <ordinal:2> quarter?\nskeleton: count -> filter -> find\narg 0: in the <ordinal:2> quarter\narg 0/0: touchdowns <name:1>\n";

    #[test]
    fn alignment_recovers_arguments() {
        let ts = parse_templates(BANK).unwrap();
        let sk = Skeleton::parse("compare_date_lesser_than -> find_date, find_date").unwrap();
        let p =
            fill_arguments(&sk, "Which happened earlier, the formation of the United Nations or the dissolution of the Soviet Union?", &ts)
                .unwrap();
        assert_eq!(
            p.to_string(),
            "compare_date_lesser_than -> find_date(the formation of the United Nations), find_date(the dissolution of the Soviet Union)"
        );
        let p = fill_arguments(&Skeleton::parse("count -> find").unwrap(), "How many touchdowns were scored?", &ts).unwrap();
        assert_eq!(p.to_string(), "count -> find(touchdowns scored)");
        let p = fill_arguments(&Skeleton::parse("relocate -> find").unwrap(), "who kicked the most field goals", &ts).unwrap();
        assert_eq!(p.to_string(), "relocate(who kicked) -> find(field goals)");
        let unknown = Skeleton::parse("max -> find").unwrap();
        assert!(matches!(fill_arguments(&unknown, "x", &ts), Err(ProjError::NoTemplateForSkeleton(_))));
    }

    #[test]
    fn fallbacks() {
        let ts = parse_templates(BANK).unwrap();
        let sk = Skeleton::parse("compare_date_lesser_than -> find_date, find_date").unwrap();
        let p = fill_arguments(&sk, "What came sooner, the war or the treaty?", &ts).unwrap();
        assert_eq!(p.to_string(), "compare_date_lesser_than -> find_date(the war), find_date(the treaty)");
        let sk = Skeleton::parse("count -> filter -> find").unwrap();
        let p = fill_arguments(&sk, "How many touchdowns did the Giants score in the fourth quarter?", &ts).unwrap();
        assert_eq!(p.to_string(), "count -> filter(in the fourth quarter) -> find(Giants score)");
        let sk = Skeleton::parse("relocate -> find").unwrap();
        let p = fill_arguments(&sk, "Who kicked the longest field goal?", &ts).unwrap();
        assert_eq!(p.to_string(), "relocate(who kicked) -> find(longest field goal)");
        assert!(matches!(fill_arguments(&sk, "?", &ts), Err(ProjError::AlignmentFailure(_))));
    }

    #[test]
    fn align_is_case_insensitive_and_anchored() {
        let ts = parse_templates(BANK).unwrap();
        let f = align(ts[0].segments(), "WHICH happened earlier, A or B or C.").unwrap();
        assert_eq!((f[&1].as_str(), f[&2].as_str()), ("A", "B or C"));
        assert!(align(ts[0].segments(), "Which happened earlier, A").is_none());
        assert!(align(ts[1].segments(), "How many touchdowns were scored in total?").is_none());
    }

    #[test]
    fn cosine_pool_and_file() {
        let table = VectorTable::parse("a 1 0\nb 0 1\nc 1 1\n").unwrap();
        let mk = |q: &str| PoolEntry {
            question: q.into(),
            program: ActionProgram::parse("count -> find(x)").unwrap(),
            paragraph_id: "p".into(),
            vector: table.embed(q).values,
        };
        let pool = CosineProjector::from_entries(vec![mk("a"), mk("b"), mk("a a"), mk("c")]).unwrap();
        let n = project_cosine(&pool, "a", &table).unwrap();
        assert_eq!((n.index, n.similarity), (0, 1.0));
        assert_eq!(project_cosine(&pool, "c", &table).unwrap().index, 3);
        let back = parse_pool(&format_pool(&pool), None).unwrap();
        assert_eq!(back, pool);
        // vectors may be omitted when a provider is given
        let bare = "a\tcount -> find(x)\tp\t\nb\tcount -> find(x)\tp\t\n";
        assert!(parse_pool(bare, None).is_err());
        assert_eq!(parse_pool(bare, Some(&table)).unwrap().entries()[1].vector, vec![0.0, 1.0]);
        assert!(matches!(CosineProjector::from_entries(vec![]), Err(ProjError::EmptyDataset)));
    }
}
