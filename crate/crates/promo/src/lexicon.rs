//! Phrase-list loading and deterministic token-sequence matching.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// The entity categories recognized by the tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Announcement,
    CloudBenefit,
    AzureCompetitor,
    AzureFeature,
    CloudFunction,
    EqualComparison,
    NegComparison,
    PosComparison,
    QuantifiedImpactPatterns,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Announcement,
        Category::CloudBenefit,
        Category::AzureCompetitor,
        Category::AzureFeature,
        Category::CloudFunction,
        Category::EqualComparison,
        Category::NegComparison,
        Category::PosComparison,
        Category::QuantifiedImpactPatterns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Announcement => "Announcement",
            Category::CloudBenefit => "CloudBenefit",
            Category::AzureCompetitor => "AzureCompetitor",
            Category::AzureFeature => "AzureFeature",
            Category::CloudFunction => "CloudFunction",
            Category::EqualComparison => "EqualComparison",
            Category::NegComparison => "NegComparison",
            Category::PosComparison => "PosComparison",
            Category::QuantifiedImpactPatterns => "QuantifiedImpactPatterns",
        }
    }

    fn parse(name: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == name)
    }

    fn index(self) -> usize {
        Category::ALL.iter().position(|c| *c == self).expect("category listed")
    }
}

/// One phrase occurrence over the token stream; `start..end` is the token span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub category: Category,
    /// The stored (normalized) phrase that matched.
    pub phrase: String,
    pub start: usize,
    pub end: usize,
}

/// Token-sequence trie node: child per phrase word, terminal holds the phrase.
#[derive(Debug, Clone, Default)]
struct Node {
    children: HashMap<String, Node>,
    terminal: Option<String>,
}

impl Node {
    fn insert(&mut self, words: &[String], phrase: &str) {
        match words.split_first() {
            None => self.terminal = Some(phrase.to_string()),
            Some((head, rest)) => self
                .children
                .entry(head.clone())
                .or_default()
                .insert(rest, phrase),
        }
    }
}

/// Inflection folding: a token matches a phrase word when equal outright or
/// after stripping a possessive or a plural suffix.
fn fold_variants(token: &str) -> Vec<&str> {
    let mut out = vec![token];
    for suffix in ["'s", "\u{2019}s", "es", "s"] {
        if let Some(stripped) = token.strip_suffix(suffix) {
            if !stripped.is_empty() {
                out.push(stripped);
            }
        }
    }
    out
}

/// Longest terminal reachable from `node` consuming tokens from `i`; returns
/// (phrase, end index). Every fold variant branch is explored.
fn longest_at<'a>(node: &'a Node, tokens: &[String], i: usize) -> Option<(&'a str, usize)> {
    let mut best: Option<(&'a str, usize)> = node.terminal.as_deref().map(|p| (p, i));
    if i < tokens.len() && !node.children.is_empty() {
        for variant in fold_variants(&tokens[i]) {
            if let Some(child) = node.children.get(variant) {
                if let Some(candidate) = longest_at(child, tokens, i + 1) {
                    if best.map(|(_, e)| candidate.1 > e).unwrap_or(true) {
                        best = Some(candidate);
                    }
                }
            }
        }
    }
    best
}

/// The loaded phrase categories plus their matching index.
#[derive(Debug, Clone)]
pub struct Lexicon {
    phrases: [Vec<String>; 9],
    tries: [Node; 9],
}

impl Lexicon {
    /// Parse a sectioned phrase file: `[Category]` headers, one phrase per
    /// line, `#` comments. Phrases are normalized to lowercase token form.
    pub fn load(path: &Path) -> Result<Lexicon> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&content, path)
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> Lexicon {
        let content = include_str!("../../../lexicon/default.lex");
        Lexicon::parse(content, Path::new("<builtin>")).expect("embedded lexicon parses")
    }

    fn parse(content: &str, origin: &Path) -> Result<Lexicon> {
        let mut lex = Lexicon {
            phrases: Default::default(),
            tries: Default::default(),
        };
        let mut current: Option<Category> = None;
        for (i, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(Category::parse(name).ok_or_else(|| {
                    Error::parse(origin, i + 1, format!("unknown category {name:?}"))
                })?);
                continue;
            }
            let cat = current
                .ok_or_else(|| Error::parse(origin, i + 1, "phrase before any [Category] header"))?;
            let words = crate::textutil::tokenize(line);
            if words.is_empty() {
                return Err(Error::parse(origin, i + 1, "empty phrase"));
            }
            let phrase = words.join(" ");
            let idx = cat.index();
            if lex.phrases[idx].contains(&phrase) {
                continue;
            }
            lex.tries[idx].insert(&words, &phrase);
            lex.phrases[idx].push(phrase);
        }
        Ok(lex)
    }

    /// Stored phrases of one category, in file order.
    pub fn phrases(&self, category: Category) -> &[String] {
        &self.phrases[category.index()]
    }

    /// All phrase matches: case-insensitive, longest-per-position within a
    /// category, overlaps across categories all reported.
    pub fn find_matches(&self, tokens: &[String]) -> Vec<Match> {
        let mut out = Vec::new();
        for i in 0..tokens.len() {
            for cat in Category::ALL {
                if let Some((phrase, end)) = longest_at(&self.tries[cat.index()], tokens, i) {
                    out.push(Match {
                        category: cat,
                        phrase: phrase.to_string(),
                        start: i,
                        end,
                    });
                }
            }
        }
        out
    }
}

/// Tokenize text for matching: whitespace split, standalone punctuation
/// tokens (dots inside decimals kept), whole-URL tokens, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    crate::textutil::tokenize(text)
}

const QUANT_UNITS: [&str; 7] = ["locations", "users", "customers", "x", "times", "billion", "million"];

fn is_number(token: &str) -> bool {
    let cleaned = token.replace(',', "");
    let mut parts = cleaned.splitn(3, '.');
    let all_digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), None, None) => all_digits(a),
        (Some(a), Some(b), None) => all_digits(a) && all_digits(b),
        _ => false,
    }
}

fn is_unit(token: &str) -> bool {
    QUANT_UNITS.contains(&token) || QUANT_UNITS.contains(&format!("{token}s").as_str())
}

/// Quantified-impact hits: percentages, money, multipliers, and numbers next
/// to impact units.
pub fn quantified_impact(tokens: &[String]) -> Vec<Match> {
    let mut out = Vec::new();
    let hit = |phrase: &str, start: usize, end: usize| Match {
        category: Category::QuantifiedImpactPatterns,
        phrase: phrase.to_string(),
        start,
        end,
    };
    for (i, tok) in tokens.iter().enumerate() {
        if let Some(prefix) = tok.strip_suffix('%') {
            if is_number(prefix) {
                out.push(hit(tok, i, i + 1));
                continue;
            }
        }
        let mut chars = tok.chars();
        if let Some(first) = chars.next() {
            if matches!(first, '$' | '\u{20AC}' | '\u{00A3}') && is_number(chars.as_str()) {
                out.push(hit(tok, i, i + 1));
                continue;
            }
        }
        if tok.len() > 1 {
            if let Some(prefix) = tok.strip_suffix('x') {
                if is_number(prefix) {
                    out.push(hit(tok, i, i + 1));
                    continue;
                }
            }
        }
        if is_number(tok) {
            for j in [i + 1, i.wrapping_sub(1)] {
                if j < tokens.len() && is_unit(&tokens[j]) {
                    let (lo, hi) = (i.min(j), i.max(j) + 1);
                    out.push(hit(&tokens[lo..hi].join(" "), lo, hi));
                    break;
                }
            }
        }
    }
    out
}
