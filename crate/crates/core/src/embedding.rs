//! Question embeddings: mean of static word vectors, with a hashed
//! character-trigram fallback when no token is known.

use std::collections::HashMap;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use thiserror::Error;

pub use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("vector file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionVector {
    pub values: Vec<f64>,
    /// Tokens found in the table; zero means the hashed fallback was used.
    pub known_token_count: usize,
}

impl QuestionVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Anything that maps a question to a fixed-size vector.
pub trait EmbeddingProvider: Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, question: &str) -> QuestionVector;
}

/// Word vectors keyed by lowercase token.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be positive");
        VectorTable { dim, entries: HashMap::new() }
    }

    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch(self.dim, vector.len()));
        }
        self.entries.insert(token.to_lowercase(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let entries = self.entries.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect())).collect();
        VectorTable { dim: self.dim, entries }
    }

    /// `token v1 .. vD` per line, optionally preceded by `D <dim>`.
    pub fn parse(input: &str) -> Result<Self, EmbeddingError> {
        let err = |line: usize, reason: String| EmbeddingError::Format { line, reason };
        let mut dim = None;
        let mut entries = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap_or_default();
            if lineno == 1 && token == "D" {
                let d: usize = fields
                    .next()
                    .and_then(|d| d.parse().ok())
                    .filter(|&d| d >= 1)
                    .ok_or_else(|| err(lineno, "malformed dimension header".into()))?;
                dim = Some(d);
                continue;
            }
            let values = fields
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| err(lineno, "malformed vector component".into()))?;
            let d = *dim.get_or_insert(values.len());
            if d == 0 || values.len() != d {
                return Err(err(lineno, format!("expected {d} components, found {}", values.len())));
            }
            entries.insert(token.to_lowercase(), values);
        }
        let dim = dim.ok_or_else(|| err(1, "empty vector file".into()))?;
        Ok(VectorTable { dim, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl EmbeddingProvider for VectorTable {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, question: &str) -> QuestionVector {
        embed(self, question)
    }
}

/// Mean of the vectors of known tokens; unknown tokens are skipped. Falls
/// back to [`hashed_embedding`] when nothing is known.
pub fn embed(table: &VectorTable, question: &str) -> QuestionVector {
    let mut sum = vec![0.0; table.dim];
    let mut known = 0;
    for token in tokenize(question) {
        if let Some(v) = table.get(&token) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            known += 1;
        }
    }
    if known == 0 {
        return QuestionVector { values: hashed_embedding(question, table.dim), known_token_count: 0 };
    }
    let n = known as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    QuestionVector { values: sum, known_token_count: known }
}

/// FNV-1a 64-bit over UTF-8 bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Bag of lowercase character trigrams hashed into `dim` buckets, then
/// L2-normalized. Strings shorter than three characters count as a single
/// gram; the empty string maps to the zero vector.
pub fn hashed_embedding(text: &str, dim: usize) -> Vec<f64> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut v = vec![0.0; dim];
    let mut add = |gram: &[char]| {
        let s: String = gram.iter().collect();
        v[(fnv1a(s.as_bytes()) % dim as u64) as usize] += 1.0;
    };
    if chars.len() < 3 {
        if !chars.is_empty() {
            add(&chars);
        }
    } else {
        chars.windows(3).for_each(&mut add);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Provider that only uses the hashed trigram embedding.
#[derive(Debug, Clone, Copy)]
pub struct HashedEmbedding {
    pub dim: usize,
}

impl EmbeddingProvider for HashedEmbedding {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, question: &str) -> QuestionVector {
        QuestionVector { values: hashed_embedding(question, self.dim), known_token_count: 0 }
    }
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}
