//! The action-sequence language: action signatures, program trees, the
//! arity-directed text form and a type checker.
//!
//! A program is written pre-order. After `->` a node lists exactly as many
//! children as its arity demands, separated by `,`; each child consumes its
//! own `->` chain first. So `find_span -> compare_date_lesser_than ->
//! find_date, find_date` is `find_span(compare(find_date, find_date))`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Types flowing between actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    PAttn,
    DateSet,
    Count,
    Number,
    Span,
}

impl ValueKind {
    pub const ALL: [ValueKind; 5] = [ValueKind::PAttn, ValueKind::DateSet, ValueKind::Count, ValueKind::Number, ValueKind::Span];

    /// Whether a value of this type can be turned into an answer string.
    pub fn is_renderable(self) -> bool {
        !matches!(self, ValueKind::DateSet)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::PAttn => "PATTN",
            ValueKind::DateSet => "DATESET",
            ValueKind::Count => "COUNT",
            ValueKind::Number => "NUMBER",
            ValueKind::Span => "SPAN",
        })
    }
}

/// Every action the interpreter knows. Discriminants index [`registry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Find,
    FindDate,
    Filter,
    Relocate,
    Count,
    Max,
    Min,
    FindNum,
    FindSpan,
    YearDifference,
    YearDiffSingleEvent,
    CompareDateLesserThan,
    CompareDateGreaterThan,
}

impl Action {
    pub fn kind(self) -> &'static ActionKind {
        &REGISTRY[self as usize]
    }

    pub fn name(self) -> &'static str {
        self.kind().name
    }

    pub fn arity(self) -> usize {
        self.kind().child_arity()
    }

    pub fn takes_argument(self) -> bool {
        self.kind().takes_argument
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Signature of one action.
#[derive(Debug, PartialEq, Eq)]
pub struct ActionKind {
    pub action: Action,
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub child_types: &'static [ValueKind],
    pub output: ValueKind,
    pub takes_argument: bool,
}

impl ActionKind {
    pub fn child_arity(&self) -> usize {
        self.child_types.len()
    }
}

use ValueKind::{Count as COUNT, DateSet as DATESET, Number as NUMBER, PAttn as PATTN, Span as SPAN};

static REGISTRY: [ActionKind; 13] = [
    ActionKind { action: Action::Find, name: "find", aliases: &[], child_types: &[], output: PATTN, takes_argument: true },
    ActionKind { action: Action::FindDate, name: "find_date", aliases: &[], child_types: &[], output: DATESET, takes_argument: true },
    ActionKind { action: Action::Filter, name: "filter", aliases: &[], child_types: &[PATTN], output: PATTN, takes_argument: true },
    ActionKind { action: Action::Relocate, name: "relocate", aliases: &[], child_types: &[PATTN], output: PATTN, takes_argument: true },
    ActionKind { action: Action::Count, name: "count", aliases: &[], child_types: &[PATTN], output: COUNT, takes_argument: false },
    ActionKind { action: Action::Max, name: "max", aliases: &[], child_types: &[PATTN], output: PATTN, takes_argument: false },
    ActionKind { action: Action::Min, name: "min", aliases: &[], child_types: &[PATTN], output: PATTN, takes_argument: false },
    ActionKind { action: Action::FindNum, name: "find_num", aliases: &[], child_types: &[PATTN], output: NUMBER, takes_argument: false },
    ActionKind { action: Action::FindSpan, name: "find_span", aliases: &[], child_types: &[PATTN], output: SPAN, takes_argument: false },
    ActionKind {
        action: Action::YearDifference,
        name: "year_difference",
        aliases: &["year_diff"],
        child_types: &[DATESET, DATESET],
        output: NUMBER,
        takes_argument: false,
    },
    ActionKind {
        action: Action::YearDiffSingleEvent,
        name: "year_diff_single_event",
        aliases: &[],
        child_types: &[DATESET],
        output: NUMBER,
        takes_argument: false,
    },
    ActionKind {
        action: Action::CompareDateLesserThan,
        name: "compare_date_lesser_than",
        aliases: &[],
        child_types: &[DATESET, DATESET],
        output: PATTN,
        takes_argument: false,
    },
    ActionKind {
        action: Action::CompareDateGreaterThan,
        name: "compare_date_greater_than",
        aliases: &[],
        child_types: &[DATESET, DATESET],
        output: PATTN,
        takes_argument: false,
    },
];

/// The fixed signature table.
pub fn registry() -> &'static [ActionKind] {
    &REGISTRY
}

/// Resolves a canonical name or alias.
pub fn lookup(name: &str) -> Option<&'static ActionKind> {
    REGISTRY.iter().find(|k| k.name == name || k.aliases.contains(&name))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("`{node}` expects {expected} child(ren), found {found}")]
    ArityMismatch { node: String, expected: usize, found: usize },
    #[error("malformed program at byte {0}")]
    MalformedSyntax(usize),
    #[error("`{0}` does not take an argument")]
    UnexpectedArgument(String),
    #[error("invalid argument for `{node}`: {reason}")]
    InvalidArgument { node: String, reason: &'static str },
    #[error("type mismatch at node {node}: expected {expected}, found {found}")]
    TypeMismatch { node: NodePath, expected: ValueKind, found: ValueKind },
    #[error("program root of type {0} cannot be rendered as an answer")]
    UnrenderableRoot(ValueKind),
    #[error("no node at path {0}")]
    NoSuchNode(NodePath),
    #[error("empty input")]
    EmptyInput,
}

/// Slash-separated child indices from the root; the root itself is `.`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        NodePath(v)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(".");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "." {
            return Ok(NodePath::root());
        }
        s.split('/').map(|p| p.trim().parse()).collect::<Result<_, _>>().map(NodePath)
    }
}

/// A typed tree of actions with optional phrase arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionProgram {
    action: Action,
    argument: Option<String>,
    children: Vec<ActionProgram>,
}

fn check_argument(action: Action, arg: &str) -> Result<String, DslError> {
    let invalid = |reason| DslError::InvalidArgument { node: action.name().to_string(), reason };
    let arg = arg.trim();
    if arg.is_empty() {
        return Err(invalid("empty"));
    }
    if arg.contains(['\t', '\n', '\r']) {
        return Err(invalid("contains a tab or line break"));
    }
    let mut depth = 0i32;
    for c in arg.chars() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(invalid("unbalanced parentheses"));
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(invalid("unbalanced parentheses"));
    }
    Ok(arg.to_string())
}

impl ActionProgram {
    pub fn new(action: Action, argument: Option<String>, children: Vec<ActionProgram>) -> Result<Self, DslError> {
        if children.len() != action.arity() {
            return Err(DslError::ArityMismatch { node: action.name().to_string(), expected: action.arity(), found: children.len() });
        }
        let argument = match argument {
            Some(_) if !action.takes_argument() => return Err(DslError::UnexpectedArgument(action.name().to_string())),
            Some(a) => Some(check_argument(action, &a)?),
            None => None,
        };
        Ok(ActionProgram { action, argument, children })
    }

    /// A leaf carrying a phrase argument.
    pub fn leaf(action: Action, argument: impl Into<String>) -> Result<Self, DslError> {
        Self::new(action, Some(argument.into()), Vec::new())
    }

    pub fn action(&self) -> Action {
        self.action
    }

    pub fn argument(&self) -> Option<&str> {
        self.argument.as_deref()
    }

    pub fn children(&self) -> &[ActionProgram] {
        &self.children
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ActionProgram::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ActionProgram::depth).max().unwrap_or(0)
    }

    pub fn get(&self, path: &NodePath) -> Option<&ActionProgram> {
        path.0.iter().try_fold(self, |node, &i| node.children.get(i))
    }

    fn get_mut(&mut self, path: &NodePath) -> Option<&mut ActionProgram> {
        path.0.iter().try_fold(self, |node, &i| node.children.get_mut(i))
    }

    /// Nodes in pre-order with their paths.
    pub fn nodes(&self) -> Vec<(NodePath, &ActionProgram)> {
        fn walk<'a>(node: &'a ActionProgram, path: NodePath, out: &mut Vec<(NodePath, &'a ActionProgram)>) {
            out.push((path.clone(), node));
            for (i, c) in node.children.iter().enumerate() {
                walk(c, path.child(i), out);
            }
        }
        let mut out = Vec::new();
        walk(self, NodePath::root(), &mut out);
        out
    }

    pub fn set_argument(&mut self, path: &NodePath, argument: Option<String>) -> Result<(), DslError> {
        let node = self.get_mut(path).ok_or_else(|| DslError::NoSuchNode(path.clone()))?;
        node.argument = match argument {
            Some(_) if !node.action.takes_argument() => return Err(DslError::UnexpectedArgument(node.action.name().to_string())),
            Some(a) => Some(check_argument(node.action, &a)?),
            None => None,
        };
        Ok(())
    }

    /// Whether every node that takes a phrase argument carries one.
    pub fn is_fully_argued(&self) -> bool {
        (!self.action.takes_argument() || self.argument.is_some()) && self.children.iter().all(ActionProgram::is_fully_argued)
    }

    pub fn parse(text: &str) -> Result<Self, DslError> {
        parse_program(text)
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn type_check(&self) -> Result<ValueKind, DslError> {
        type_check(self)
    }

    pub fn skeleton(&self) -> Skeleton {
        skeletonize(self)
    }
}

impl fmt::Display for ActionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.action.name())?;
        if let Some(arg) = &self.argument {
            write!(f, "({arg})")?;
        }
        for (i, c) in self.children.iter().enumerate() {
            f.write_str(if i == 0 { " -> " } else { ", " })?;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for ActionProgram {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn node(&mut self) -> Result<ActionProgram, DslError> {
        self.skip_ws();
        let start = self.pos;
        let name_len = self
            .rest()
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
            .map_or(self.rest().len(), |(i, _)| i);
        if name_len == 0 {
            return Err(DslError::MalformedSyntax(start));
        }
        let name = &self.src[start..start + name_len];
        self.pos += name_len;
        let kind = lookup(name).ok_or_else(|| DslError::UnknownAction(name.to_string()))?;

        let argument = if self.eat("(") {
            let arg_start = self.pos;
            let mut depth = 1usize;
            let mut end = None;
            for (i, c) in self.rest().char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => {
                        depth -= 1;
                        if depth == 0 {
                            end = Some(i);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let end = end.ok_or(DslError::MalformedSyntax(arg_start))?;
            let text = &self.src[arg_start..arg_start + end];
            self.pos = arg_start + end + 1;
            if !kind.takes_argument {
                return Err(DslError::UnexpectedArgument(kind.name.to_string()));
            }
            Some(text.to_string())
        } else {
            None
        };

        let arity = kind.child_arity();
        let mut children = Vec::with_capacity(arity);
        if arity == 0 {
            if self.eat("->") {
                return Err(DslError::ArityMismatch { node: kind.name.to_string(), expected: 0, found: 1 });
            }
        } else {
            if !self.eat("->") {
                return Err(DslError::ArityMismatch { node: kind.name.to_string(), expected: arity, found: 0 });
            }
            for i in 0..arity {
                if i > 0 && !self.eat(",") {
                    return Err(DslError::ArityMismatch { node: kind.name.to_string(), expected: arity, found: i });
                }
                children.push(self.node()?);
            }
        }
        ActionProgram::new(kind.action, argument, children)
    }
}

/// Parses the arity-directed pre-order form.
pub fn parse_program(text: &str) -> Result<ActionProgram, DslError> {
    let mut parser = Parser { src: text, pos: 0 };
    let program = parser.node()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(DslError::MalformedSyntax(parser.pos));
    }
    Ok(program)
}

pub fn serialize_program(program: &ActionProgram) -> String {
    program.to_string()
}

/// Returns the root output type of a well-typed, renderable program.
pub fn type_check(program: &ActionProgram) -> Result<ValueKind, DslError> {
    fn check(node: &ActionProgram, path: &NodePath) -> Result<ValueKind, DslError> {
        let kind = node.action.kind();
        for (i, (child, &expected)) in node.children.iter().zip(kind.child_types).enumerate() {
            let child_path = path.child(i);
            let found = check(child, &child_path)?;
            if found != expected {
                return Err(DslError::TypeMismatch { node: child_path, expected, found });
            }
        }
        Ok(kind.output)
    }
    let root = check(program, &NodePath::root())?;
    if !root.is_renderable() {
        return Err(DslError::UnrenderableRoot(root));
    }
    Ok(root)
}

/// A program with every argument removed: the classifier's label space.
#[derive(Debug, Clone)]
pub struct Skeleton {
    label: String,
    program: ActionProgram,
}

impl PartialEq for Skeleton {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}

impl Eq for Skeleton {}

impl std::hash::Hash for Skeleton {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.label.hash(state);
    }
}

impl PartialOrd for Skeleton {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Skeleton {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.label.cmp(&other.label)
    }
}

impl Skeleton {
    pub fn program(&self) -> &ActionProgram {
        &self.program
    }

    /// Canonical serialization, used as the class label.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Parses an argument-free serialization.
    pub fn parse(text: &str) -> Result<Self, DslError> {
        let program = parse_program(text)?;
        if let Some((_, node)) = program.nodes().into_iter().find(|(_, n)| n.argument.is_some()) {
            return Err(DslError::UnexpectedArgument(node.action.name().to_string()));
        }
        Ok(skeletonize(&program))
    }
}

impl fmt::Display for Skeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

pub fn skeletonize(program: &ActionProgram) -> Skeleton {
    fn strip(node: &ActionProgram) -> ActionProgram {
        ActionProgram { action: node.action, argument: None, children: node.children.iter().map(strip).collect() }
    }
    let program = strip(program);
    Skeleton { label: program.to_string(), program }
}

/// Deduplicated skeletons in lexicographic label order; index = class id.
pub fn enumerate_labels<'a>(programs: impl IntoIterator<Item = &'a ActionProgram>) -> Result<Vec<Skeleton>, DslError> {
    let labels: BTreeSet<Skeleton> = programs.into_iter().map(skeletonize).collect();
    if labels.is_empty() {
        return Err(DslError::EmptyInput);
    }
    Ok(labels.into_iter().collect())
}
