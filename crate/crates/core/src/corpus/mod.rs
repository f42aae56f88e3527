//! Annotated paragraphs: the data model the interpreter runs over, the
//! line-oriented corpus file format and its validation rules.
//!
//! All offsets are character offsets into the paragraph text.

mod annotate;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub use annotate::annotate_rule_based;

/// Half-open character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MentionKind {
    Name,
    Event,
    NounPhrase,
    Number,
    Ordinal,
    Date,
}

impl MentionKind {
    pub const ALL: [MentionKind; 6] =
        [MentionKind::Name, MentionKind::Event, MentionKind::NounPhrase, MentionKind::Number, MentionKind::Ordinal, MentionKind::Date];

    pub fn as_str(self) -> &'static str {
        match self {
            MentionKind::Name => "name",
            MentionKind::Event => "event",
            MentionKind::NounPhrase => "noun_phrase",
            MentionKind::Number => "number",
            MentionKind::Ordinal => "ordinal",
            MentionKind::Date => "date",
        }
    }
}

impl fmt::Display for MentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MentionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MentionKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown mention kind `{s}`"))
    }
}

/// Calendar date with optional month and day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Date {
    pub year: i32,
    pub month: Option<u8>,
    pub day: Option<u8>,
}

impl Date {
    pub fn year(year: i32) -> Self {
        Date { year, month: None, day: None }
    }

    pub fn ym(year: i32, month: u8) -> Self {
        Date { year, month: Some(month), day: None }
    }

    pub fn ymd(year: i32, month: u8, day: u8) -> Self {
        Date { year, month: Some(month), day: Some(day) }
    }

    pub fn is_valid(&self) -> bool {
        match (self.month, self.day) {
            (None, None) => true,
            (None, Some(_)) => false,
            (Some(m), None) => (1..=12).contains(&m),
            (Some(m), Some(d)) => (1..=12).contains(&m) && d >= 1 && d <= days_in_month(self.year, m),
        }
    }

    /// Total order for comparisons; a missing month counts as June and a
    /// missing day as the 15th.
    pub fn sort_key(&self) -> (i32, u8, u8) {
        (self.year, self.month.unwrap_or(6), self.day.unwrap_or(15))
    }
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        Ok(())
    }
}

impl FromStr for Date {
    type Err = String;

    /// `YYYY[-MM[-DD]]`. Range checks are left to validation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed date `{s}`");
        let mut parts = s.split('-');
        let year = parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month = parts.next().map(|p| p.parse::<u8>().map_err(|_| bad())).transpose()?;
        let day = parts.next().map(|p| p.parse::<u8>().map_err(|_| bad())).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Date { year, month, day })
    }
}

/// A numeric value with an optional unit token.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<String>,
}

impl Quantity {
    pub fn new(value: f64, unit: Option<&str>) -> Self {
        Quantity { value, unit: unit.map(str::to_string) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub span: CharSpan,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub span: CharSpan,
    pub surface: String,
    pub kind: MentionKind,
    pub number: Option<Quantity>,
    pub dates: Vec<Date>,
    pub link: Option<Link>,
}

impl Mention {
    pub fn new(span: CharSpan, surface: impl Into<String>, kind: MentionKind) -> Self {
        Mention { span, surface: surface.into(), kind, number: None, dates: Vec::new(), link: None }
    }

    pub fn with_number(mut self, value: f64, unit: Option<&str>) -> Self {
        self.number = Some(Quantity::new(value, unit));
        self
    }

    pub fn with_dates(mut self, dates: impl IntoIterator<Item = Date>) -> Self {
        self.dates.extend(dates);
        self
    }

    pub fn with_link(mut self, span: CharSpan, role: impl Into<String>) -> Self {
        self.link = Some(Link { span, role: role.into() });
        self
    }
}

/// Splits into sentences at `.`, `!` or `?` followed by whitespace and then
/// an uppercase letter or the end of the text.
pub fn split_sentences(text: &str) -> Vec<CharSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = None;
    let mut i = 0;
    while i < chars.len() {
        if start.is_none() && !chars[i].is_whitespace() {
            start = Some(i);
        }
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let boundary = j == chars.len() || (j > i + 1 && chars[j].is_uppercase());
            if boundary {
                if let Some(s) = start.take() {
                    out.push(CharSpan::new(s, i + 1));
                }
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut e = chars.len();
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        out.push(CharSpan::new(s, e));
    }
    out
}

/// One paragraph with its sentence ranges and mention annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedParagraph {
    id: String,
    text: String,
    sentences: Vec<CharSpan>,
    mentions: Vec<Mention>,
    // byte offset of every char boundary, len = chars + 1
    boundaries: Vec<usize>,
}

fn char_boundaries(text: &str) -> Vec<usize> {
    text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len())).collect()
}

impl AnnotatedParagraph {
    /// Builds a paragraph, splitting sentences with [`split_sentences`].
    pub fn new(id: impl Into<String>, text: impl Into<String>, mentions: Vec<Mention>) -> Self {
        let text = text.into();
        let sentences = split_sentences(&text);
        Self::from_parts(id, text, sentences, mentions)
    }

    pub fn from_parts(id: impl Into<String>, text: impl Into<String>, sentences: Vec<CharSpan>, mentions: Vec<Mention>) -> Self {
        let text = text.into();
        let boundaries = char_boundaries(&text);
        AnnotatedParagraph { id: id.into(), text, sentences, mentions, boundaries }
    }

    /// Paragraph text annotated by the rule-based fallback annotator.
    pub fn annotated(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mentions = annotate_rule_based(&text);
        Self::new(id, text, mentions)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn sentences(&self) -> &[CharSpan] {
        &self.sentences
    }

    pub fn mentions(&self) -> &[Mention] {
        &self.mentions
    }

    pub fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Text of a character span, or `None` when out of bounds.
    pub fn slice(&self, span: CharSpan) -> Option<&str> {
        if span.start > span.end || span.end > self.char_len() {
            return None;
        }
        Some(&self.text[self.boundaries[span.start]..self.boundaries[span.end]])
    }

    /// Index of the sentence containing the whole span.
    pub fn sentence_of(&self, span: CharSpan) -> Option<usize> {
        self.sentences.iter().position(|s| s.contains(&span))
    }

    pub fn sentence_text(&self, index: usize) -> Option<&str> {
        self.sentences.get(index).and_then(|&s| self.slice(s))
    }

    /// Checks every invariant and reports all violations.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        if self.id.is_empty() || self.id.contains(char::is_whitespace) {
            v.push(Violation::InvalidId(self.id.clone()));
        }
        for (i, pair) in self.sentences.windows(2).enumerate() {
            if pair[0].end > pair[1].start {
                v.push(Violation::SentencesOverlap { sentence: i + 1 });
            }
        }
        for (i, s) in self.sentences.iter().enumerate() {
            if s.is_empty() || s.end > self.char_len() {
                v.push(Violation::SentenceOutOfBounds { sentence: i });
            }
        }
        for (i, m) in self.mentions.iter().enumerate() {
            if m.span.is_empty() || m.span.end > self.char_len() {
                v.push(Violation::SpanOutOfBounds { mention: i, span: m.span });
                continue;
            }
            let slice = self.slice(m.span).unwrap_or_default();
            if slice != m.surface {
                v.push(Violation::SurfaceMismatch { mention: i, surface: m.surface.clone(), text: slice.to_string() });
            }
            if self.sentence_of(m.span).is_none() {
                v.push(Violation::OutsideSentences { mention: i });
            }
            if m.kind == MentionKind::Number && m.number.is_none() {
                v.push(Violation::MissingNumber { mention: i });
            }
            if let Some(q) = &m.number {
                if !q.value.is_finite() {
                    v.push(Violation::MissingNumber { mention: i });
                }
            }
            if m.kind == MentionKind::Date && m.dates.is_empty() {
                v.push(Violation::MissingDates { mention: i });
            }
            for d in &m.dates {
                if !d.is_valid() {
                    v.push(Violation::InvalidDate { mention: i, date: *d });
                }
            }
            if let Some(link) = &m.link {
                if link.span.is_empty() || link.span.end > self.char_len() {
                    v.push(Violation::LinkOutOfBounds { mention: i, span: link.span });
                }
                if link.role.is_empty() || link.role.contains(char::is_whitespace) || link.role.contains(':') {
                    v.push(Violation::InvalidRole { mention: i, role: link.role.clone() });
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

pub fn validate_paragraph(p: &AnnotatedParagraph) -> Result<(), Vec<Violation>> {
    p.validate()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidId(String),
    SentencesOverlap { sentence: usize },
    SentenceOutOfBounds { sentence: usize },
    SpanOutOfBounds { mention: usize, span: CharSpan },
    SurfaceMismatch { mention: usize, surface: String, text: String },
    OutsideSentences { mention: usize },
    MissingNumber { mention: usize },
    MissingDates { mention: usize },
    InvalidDate { mention: usize, date: Date },
    LinkOutOfBounds { mention: usize, span: CharSpan },
    InvalidRole { mention: usize, role: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidId(id) => write!(f, "invalid paragraph id `{id}`"),
            Violation::SentencesOverlap { sentence } => write!(f, "sentence {sentence} overlaps its predecessor"),
            Violation::SentenceOutOfBounds { sentence } => write!(f, "sentence {sentence} is empty or out of bounds"),
            Violation::SpanOutOfBounds { mention, span } => write!(f, "mention {mention}: span {span} out of bounds"),
            Violation::SurfaceMismatch { mention, surface, text } => {
                write!(f, "mention {mention}: surface `{surface}` differs from text `{text}`")
            }
            Violation::OutsideSentences { mention } => write!(f, "mention {mention} is not inside a single sentence"),
            Violation::MissingNumber { mention } => write!(f, "mention {mention}: number kind without a finite value"),
            Violation::MissingDates { mention } => write!(f, "mention {mention}: date kind without dates"),
            Violation::InvalidDate { mention, date } => write!(f, "mention {mention}: invalid date {date}"),
            Violation::LinkOutOfBounds { mention, span } => write!(f, "mention {mention}: link {span} out of bounds"),
            Violation::InvalidRole { mention, role } => write!(f, "mention {mention}: invalid link role `{role}`"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("paragraph `{id}`: {reason}")]
    Validation { id: String, reason: String },
}

/// Mentions of one paragraph grouped by kind, each list sorted by span.
#[derive(Debug, Clone, Default)]
pub struct EntityCatalog<'a> {
    by_kind: BTreeMap<MentionKind, Vec<&'a Mention>>,
}

impl<'a> EntityCatalog<'a> {
    pub fn get(&self, kind: MentionKind) -> &[&'a Mention] {
        self.by_kind.get(&kind).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self, kind: MentionKind) -> usize {
        self.get(kind).len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_kind.values().all(Vec::is_empty)
    }
}

pub fn catalog(p: &AnnotatedParagraph) -> EntityCatalog<'_> {
    let mut by_kind: BTreeMap<MentionKind, Vec<&Mention>> = BTreeMap::new();
    for m in &p.mentions {
        by_kind.entry(m.kind).or_default().push(m);
    }
    for list in by_kind.values_mut() {
        list.sort_by_key(|m| m.span);
    }
    EntityCatalog { by_kind }
}

fn parse_span(s: &str) -> Result<CharSpan, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("malformed span `{s}`"))?;
    let start = a.parse().map_err(|_| format!("malformed span `{s}`"))?;
    let end = b.parse().map_err(|_| format!("malformed span `{s}`"))?;
    Ok(CharSpan::new(start, end))
}

fn parse_mention(line: &str, para: &AnnotatedParagraph) -> Result<Mention, String> {
    let mut fields = line.split_whitespace();
    let span = parse_span(fields.next().ok_or("missing span")?)?;
    let mut kind = None;
    let mut number = None;
    let mut dates = Vec::new();
    let mut link = None;
    for field in fields {
        let (key, value) = field.split_once('=').ok_or_else(|| format!("malformed field `{field}`"))?;
        match key {
            "kind" if kind.is_none() => kind = Some(value.parse::<MentionKind>()?),
            "num" if number.is_none() => {
                let (v, unit) = match value.split_once(':') {
                    Some((v, u)) if !u.is_empty() => (v, Some(u)),
                    Some(_) => return Err(format!("empty unit in `{field}`")),
                    None => (value, None),
                };
                let v: f64 = v.parse().map_err(|_| format!("malformed number `{v}`"))?;
                number = Some(Quantity::new(v, unit));
            }
            "date" => dates.push(value.parse::<Date>()?),
            "link" if link.is_none() => {
                let (s, rest) = value.split_once(':').ok_or_else(|| format!("malformed link `{value}`"))?;
                let (e, role) = rest.split_once(':').ok_or_else(|| format!("malformed link `{value}`"))?;
                link = Some(Link { span: parse_span(&format!("{s}:{e}"))?, role: role.to_string() });
            }
            _ => return Err(format!("unexpected or repeated field `{key}`")),
        }
    }
    let kind = kind.ok_or("missing kind")?;
    // out-of-range spans are reported by validation
    let surface = para.slice(span).unwrap_or_default().to_string();
    Ok(Mention { span, surface, kind, number, dates, link })
}

/// Parses corpus text. Every paragraph is validated.
pub fn parse_corpus(input: &str) -> Result<Vec<AnnotatedParagraph>, CorpusError> {
    let fmt_err = |line: usize, reason: String| CorpusError::Format { line, reason };
    let mut out: Vec<AnnotatedParagraph> = Vec::new();
    let mut seen = HashSet::new();
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();

    while let Some((lineno, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let id = line
            .strip_prefix("#PARA ")
            .map(str::trim)
            .filter(|id| !id.is_empty())
            .ok_or_else(|| fmt_err(lineno, "expected `#PARA <id>`".into()))?;
        if !seen.insert(id.to_string()) {
            return Err(fmt_err(lineno, format!("duplicate paragraph id `{id}`")));
        }
        let (text_line, text) = lines.next().ok_or_else(|| fmt_err(lineno + 1, "missing paragraph text".into()))?;
        if text.trim().is_empty() || text.starts_with('#') {
            return Err(fmt_err(text_line, "missing paragraph text".into()));
        }
        let mut para = AnnotatedParagraph::new(id, text, Vec::new());
        while let Some(&(l, next)) = lines.peek() {
            if next.trim().is_empty() {
                break;
            }
            let body = next.strip_prefix("#MENTION ").ok_or_else(|| fmt_err(l, "expected `#MENTION` or a blank line".into()))?;
            let mention = parse_mention(body, &para).map_err(|r| fmt_err(l, r))?;
            para.mentions.push(mention);
            lines.next();
        }
        para.validate().map_err(|v| CorpusError::Validation {
            id: para.id.clone(),
            reason: v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        })?;
        out.push(para);
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<AnnotatedParagraph>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

/// Writes paragraphs in the corpus file format.
pub fn format_corpus(paragraphs: &[AnnotatedParagraph]) -> String {
    let mut out = String::new();
    for (i, p) in paragraphs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("#PARA {}\n{}\n", p.id, p.text));
        for m in &p.mentions {
            out.push_str(&format!("#MENTION {} kind={}", m.span, m.kind));
            if let Some(q) = &m.number {
                out.push_str(&format!(" num={}", q.value));
                if let Some(u) = &q.unit {
                    out.push_str(&format!(":{u}"));
                }
            }
            for d in &m.dates {
                out.push_str(&format!(" date={d}"));
            }
            if let Some(l) = &m.link {
                out.push_str(&format!(" link={}:{}", l.span, l.role));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_corpus(path: impl AsRef<Path>, paragraphs: &[AnnotatedParagraph]) -> Result<(), CorpusError> {
    std::fs::write(path, format_corpus(paragraphs))?;
    Ok(())
}
