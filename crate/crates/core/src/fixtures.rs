//! The shipped template bank, annotated corpus and word vectors.

use crate::corpus::{parse_corpus, AnnotatedParagraph};
use crate::embedding::VectorTable;
use crate::generator::{parse_templates, Template};

pub const TEMPLATES: &str = include_str!("../data/templates.txt");
pub const CORPUS: &str = include_str!("../data/corpus.txt");
pub const VECTORS: &str = include_str!("../data/vectors.txt");

pub fn templates() -> Vec<Template> {
    parse_templates(TEMPLATES).expect("shipped templates are valid")
}

pub fn corpus() -> Vec<AnnotatedParagraph> {
    parse_corpus(CORPUS).expect("shipped corpus is valid")
}

pub fn vectors() -> VectorTable {
    VectorTable::parse(VECTORS).expect("shipped vectors are valid")
}
