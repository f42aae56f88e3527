//! Exact-match and token F1 over normalized answers.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::interpreter::format_number;
use crate::text::is_punct;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    EmptyInput,
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

fn canonical_number(token: &str) -> Option<String> {
    let body = token.trim_end_matches(|c: char| is_punct(c) && c != '.').trim_end_matches('.');
    let starts_ok = body.strip_prefix('-').unwrap_or(body).starts_with(|c: char| c.is_ascii_digit());
    if !starts_ok || !body.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-') {
        return None;
    }
    body.parse::<f64>().ok().filter(|v| v.is_finite()).map(format_number)
}

/// Lowercased whitespace tokens with numbers canonicalized (`3.0` is `3`),
/// punctuation removed and articles dropped.
pub fn normalize_answer(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|raw| {
            let t = canonical_number(raw).unwrap_or_else(|| raw.chars().filter(|c| !is_punct(*c)).collect());
            (!t.is_empty() && !ARTICLES.contains(&t.as_str())).then_some(t)
        })
        .collect()
}

pub fn metric_em(pred: &str, gold: &str) -> f64 {
    if normalize_answer(pred) == normalize_answer(gold) {
        1.0
    } else {
        0.0
    }
}

/// Bag-of-token F1 over normalized tokens.
pub fn metric_f1(pred: &str, gold: &str) -> f64 {
    f1_tokens(&normalize_answer(pred), &normalize_answer(gold))
}

pub fn f1_tokens(pred: &[String], gold: &[String]) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut overlap = 0;
    for t in pred {
        if let Some(c) = counts.get_mut(t.as_str()).filter(|c| **c > 0) {
            *c -= 1;
            overlap += 1;
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / pred.len() as f64;
    let r = overlap as f64 / gold.len() as f64;
    2.0 * p * r / (p + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupScore {
    pub n: usize,
    pub em: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub em: f64,
    pub f1: f64,
    pub per_skeleton: BTreeMap<String, GroupScore>,
    /// Predictions equal to the empty error sentinel.
    pub errors: usize,
}

/// Scores `(prediction, gold, skeleton label)` triples. An empty
/// prediction is the execution-error sentinel.
pub fn report<'a>(items: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Result<EvalReport, EvalError> {
    let mut n = 0;
    let (mut em, mut f1, mut errors) = (0.0, 0.0, 0);
    let mut groups: BTreeMap<String, GroupScore> = BTreeMap::new();
    for (pred, gold, skeleton) in items {
        let (e, f) = if pred.is_empty() {
            errors += 1;
            (0.0, 0.0)
        } else {
            (metric_em(pred, gold), metric_f1(pred, gold))
        };
        n += 1;
        em += e;
        f1 += f;
        let g = groups.entry(skeleton.to_string()).or_default();
        g.n += 1;
        g.em += e;
        g.f1 += f;
    }
    if n == 0 {
        return Err(EvalError::EmptyInput);
    }
    for g in groups.values_mut() {
        g.em /= g.n as f64;
        g.f1 /= g.n as f64;
    }
    Ok(EvalReport { n, em: em / n as f64, f1: f1 / n as f64, per_skeleton: groups, errors })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n\t{}\nem\t{:.4}\nf1\t{:.4}\nerrors\t{}", self.n, self.em, self.f1, self.errors)
    }
}

impl EvalReport {
    /// One `skeleton \t n \t em \t f1` line per group.
    pub fn breakdown(&self) -> String {
        self.per_skeleton.iter().map(|(k, g)| format!("{k}\t{}\t{:.4}\t{:.4}\n", g.n, g.em, g.f1)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("The formation of the United Nations"), toks(&["formation", "of", "united", "nations"]));
        assert_eq!(normalize_answer("3 years"), toks(&["3", "years"]));
        assert!(normalize_answer("").is_empty());
        assert_eq!(normalize_answer("3.0 Yards."), toks(&["3", "yards"]));
        assert_eq!(normalize_answer("14."), toks(&["14"]));
        assert_eq!(normalize_answer("4.50"), toks(&["4.5"]));
        assert_eq!(normalize_answer("Rackers' (kick)"), toks(&["rackers", "kick"]));
    }

    #[test]
    fn exact_match() {
        assert_eq!(metric_em("3 years", "3 years"), 1.0);
        assert_eq!(metric_em("the United Nations", "United Nations"), 1.0);
        assert_eq!(metric_em("2", "3"), 0.0);
        assert_eq!(metric_em("3", "3.0"), 1.0);
    }

    #[test]
    fn token_f1() {
        assert_abs_diff_eq!(metric_f1("Kandyan War", "second Kandyan War"), 0.8, epsilon = 1e-12);
        assert_eq!(metric_f1("Aaron Rodgers", "Aaron Rodgers"), 1.0);
        assert_eq!(metric_f1("Rackers", "Rodgers"), 0.0);
        assert_eq!(metric_f1("", ""), 1.0);
        assert_eq!(metric_f1("the", "x"), 0.0);
        // multiset overlap counts repeats once each
        assert_abs_diff_eq!(f1_tokens(&toks(&["a1", "a1"]), &toks(&["a1"])), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn reports() {
        let r = report([("2", "2", "count -> find"), ("x", "y", "find_span -> find")]).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.f1, 0.5);
        assert_eq!(r.per_skeleton.values().map(|g| g.n).sum::<usize>(), 2);
        let r = report([("", "2", "*"), ("", "3", "*")]).unwrap();
        assert_eq!((r.em, r.f1, r.errors), (0.0, 0.0, 2));
        assert_eq!(report(std::iter::empty()), Err(EvalError::EmptyInput));
    }
}
