//! Rule-based fallback annotator for raw paragraph text.

use super::{split_sentences, CharSpan, Date, Mention, MentionKind};
use crate::text::{is_stopword, spanned_tokens, SpannedToken};

pub const UNITS: [&str; 7] = ["yard", "yards", "point", "points", "percent", "year", "years"];

pub const ORDINALS: [&str; 10] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];

const MONTHS: [&str; 12] =
    ["January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November", "December"];

struct Tok {
    inner: SpannedToken,
    lower: String,
    sentence: usize,
    sentence_initial: bool,
    // a run may not continue past this token
    boundary_after: bool,
}

fn month_of(token: &str) -> Option<u8> {
    MONTHS.iter().position(|m| *m == token).map(|i| i as u8 + 1)
}

fn year_of(token: &str) -> Option<i32> {
    if token.len() == 4 && token.bytes().all(|b| b.is_ascii_digit()) {
        token.parse().ok().filter(|y| (1000..=2100).contains(y))
    } else {
        None
    }
}

fn day_of(token: &str) -> Option<u8> {
    if (1..=2).contains(&token.len()) && token.bytes().all(|b| b.is_ascii_digit()) {
        token.parse().ok().filter(|d| (1..=31).contains(d))
    } else {
        None
    }
}

fn number_of(token: &str) -> Option<(f64, Option<&str>)> {
    let (num, suffix) = match token.split_once('-') {
        Some((n, s)) if !s.is_empty() && s.chars().all(|c| c.is_alphabetic()) => (n, Some(s)),
        Some(_) => return None,
        None => (token, None),
    };
    let mut parts = num.split('.');
    let int_ok = parts.next().is_some_and(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    let frac_ok = parts.next().is_none_or(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    if !int_ok || !frac_ok || parts.next().is_some() {
        return None;
    }
    Some((num.parse().ok()?, suffix))
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Deterministic mentions from surface patterns: numbers, dates,
/// ordinals, capitalized name runs, stopword-delimited noun phrases, and
/// events (noun phrases in sentences that carry a date).
pub fn annotate_rule_based(text: &str) -> Vec<Mention> {
    let sentences = split_sentences(text);
    let chars: Vec<char> = text.chars().collect();
    let surface = |s: CharSpan| chars[s.start..s.end].iter().collect::<String>();

    let raw = spanned_tokens(text);
    let mut toks: Vec<Tok> = Vec::with_capacity(raw.len());
    for (i, t) in raw.iter().enumerate() {
        let sentence = sentences.iter().position(|s| s.start <= t.start && t.end <= s.end).unwrap_or(usize::MAX);
        let sentence_initial = i == 0 || toks[i - 1].sentence != sentence;
        let next_sentence = raw.get(i + 1).map(|n| sentences.iter().position(|s| s.start <= n.start && n.end <= s.end));
        toks.push(Tok {
            inner: t.clone(),
            lower: t.text.to_lowercase(),
            sentence,
            sentence_initial,
            boundary_after: t.trailing_punct || next_sentence.flatten() != Some(sentence),
        });
    }
    let lowercase_elsewhere: std::collections::HashSet<&str> =
        toks.iter().filter(|t| !is_capitalized(&t.inner.text)).map(|t| t.lower.as_str()).collect();

    let mut mentions = Vec::new();
    let mut claimed = vec![false; toks.len()];
    let span_of = |a: usize, b: usize| CharSpan::new(toks[a].inner.start, toks[b].inner.end);

    // dates: "December 5, 1948", "December 1948", "5 December 1948", "1948"
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i].inner.text;
        let same_run = |a: usize, b: usize| b < toks.len() && toks[a].sentence == toks[b].sentence;
        let mut found = None;
        if let Some(month) = month_of(t) {
            if same_run(i, i + 2) {
                if let (Some(day), Some(year)) = (day_of(&toks[i + 1].inner.text), year_of(&toks[i + 2].inner.text)) {
                    found = Some((i, i + 2, Date::ymd(year, month, day)));
                }
            }
            if found.is_none() && same_run(i, i + 1) && !toks[i].boundary_after {
                if let Some(year) = year_of(&toks[i + 1].inner.text) {
                    found = Some((i, i + 1, Date::ym(year, month)));
                }
            }
        } else if let Some(day) = day_of(t) {
            if same_run(i, i + 2) && !toks[i].boundary_after && !toks[i + 1].boundary_after {
                if let (Some(month), Some(year)) = (month_of(&toks[i + 1].inner.text), year_of(&toks[i + 2].inner.text)) {
                    found = Some((i, i + 2, Date::ymd(year, month, day)));
                }
            }
        } else if let Some(year) = year_of(t) {
            found = Some((i, i, Date::year(year)));
        }
        match found {
            Some((a, b, date)) if date.is_valid() => {
                let span = span_of(a, b);
                mentions.push(Mention::new(span, surface(span), MentionKind::Date).with_dates([date]));
                claimed[a..=b].iter_mut().for_each(|c| *c = true);
                i = b + 1;
            }
            _ => i += 1,
        }
    }

    for (i, t) in toks.iter().enumerate() {
        if claimed[i] {
            continue;
        }
        let span = CharSpan::new(t.inner.start, t.inner.end);
        if let Some((value, suffix)) = number_of(&t.inner.text) {
            let unit = match suffix {
                Some(s) => UNITS.contains(&s.to_lowercase().as_str()).then(|| s.to_lowercase()),
                None => toks.get(i + 1).filter(|n| !t.boundary_after && UNITS.contains(&n.lower.as_str())).map(|n| n.lower.clone()),
            };
            mentions.push(Mention::new(span, surface(span), MentionKind::Number).with_number(value, unit.as_deref()));
            claimed[i] = true;
        } else if ORDINALS.contains(&t.lower.as_str()) {
            mentions.push(Mention::new(span, surface(span), MentionKind::Ordinal));
            claimed[i] = true;
        }
    }

    // names: maximal runs of capitalized tokens; a sentence-initial token
    // only counts when it is neither a stopword nor seen in lowercase
    let name_ok = |i: usize| {
        let t = &toks[i];
        !claimed[i]
            && is_capitalized(&t.inner.text)
            && !(t.sentence_initial && (is_stopword(&t.lower) || lowercase_elsewhere.contains(t.lower.as_str())))
    };
    let mut i = 0;
    while i < toks.len() {
        if !name_ok(i) {
            i += 1;
            continue;
        }
        let start = i;
        while !toks[i].boundary_after && i + 1 < toks.len() && name_ok(i + 1) {
            i += 1;
        }
        let span = span_of(start, i);
        mentions.push(Mention::new(span, surface(span), MentionKind::Name));
        i += 1;
    }

    // noun phrases: maximal non-stopword runs, broken by punctuation and dates
    let date_token: Vec<bool> = toks
        .iter()
        .map(|t| mentions.iter().any(|m| m.kind == MentionKind::Date && m.span.start <= t.inner.start && t.inner.end <= m.span.end))
        .collect();
    let np_ok = |i: usize| !is_stopword(&toks[i].lower) && !date_token[i];
    let dated_sentences: Vec<usize> = mentions
        .iter()
        .filter(|m| m.kind == MentionKind::Date)
        .filter_map(|m| sentences.iter().position(|s| s.contains(&m.span)))
        .collect();
    let mut nps = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if !np_ok(i) {
            i += 1;
            continue;
        }
        let start = i;
        while !toks[i].boundary_after && i + 1 < toks.len() && np_ok(i + 1) {
            i += 1;
        }
        let span = span_of(start, i);
        nps.push(Mention::new(span, surface(span), MentionKind::NounPhrase));
        if dated_sentences.contains(&toks[start].sentence) {
            nps.push(Mention::new(span, surface(span), MentionKind::Event));
        }
        i += 1;
    }
    mentions.extend(nps);
    mentions.sort_by_key(|m| (m.span.start, m.span.end, m.kind));
    mentions
}
