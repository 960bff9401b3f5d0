//! Shared low-level text helpers: URL spans, tokenization, entity decoding.

use std::sync::LazyLock;

use regex::Regex;

/// Quote/angle wrapper characters stripped from token edges.
const WRAPPERS: &[char] = &['"', '\'', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '<', '>', '\u{00AB}', '\u{00BB}'];

/// Punctuation emitted as standalone tokens.
const PUNCT: &[char] = &['!', '?', ':', ',', '.', ';', '(', ')'];

/// Trailing punctuation never part of a URL.
const URL_TRAILERS: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\'', '>', '\u{00BB}', ']'];

static URL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"https?://\S+|\b(?:t\.co|pic\.twitter\.com)/\S+").expect("static regex")
});

static SCHEMELESS_URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:t\.co|pic\.twitter\.com)/").expect("static regex"));

pub(crate) fn trim_url(url: &str) -> &str {
    url.trim_end_matches(URL_TRAILERS)
}

/// Byte spans of URLs in `text`, trailing punctuation excluded.
pub(crate) fn find_url_spans(text: &str) -> Vec<(usize, usize, &str)> {
    URL_RE
        .find_iter(text)
        .map(|m| {
            let trimmed = trim_url(m.as_str());
            (m.start(), m.start() + trimmed.len(), trimmed)
        })
        .collect()
}

pub(crate) fn is_url_token(word: &str) -> bool {
    let lower = word.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || SCHEMELESS_URL_RE.is_match(&lower)
}

/// Host part of a URL, scheme and leading "www." removed, lowercased.
pub(crate) fn host_of(url: &str) -> String {
    let lower = url.to_lowercase();
    let rest = lower
        .strip_prefix("https://")
        .or_else(|| lower.strip_prefix("http://"))
        .unwrap_or(&lower);
    let host = rest.split('/').next().unwrap_or("");
    host.strip_prefix("www.").unwrap_or(host).to_string()
}

fn norm_word(word: &str) -> String {
    let stripped = word.trim_matches(WRAPPERS);
    let stripped = stripped.strip_prefix('@').unwrap_or(stripped);
    stripped.to_lowercase()
}

/// Whitespace tokenizer: punctuation becomes standalone tokens (except dots
/// inside decimals), URLs stay whole, edge quotes and a leading '@' are
/// stripped, and everything is lowercased.
pub(crate) fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let word = chunk.trim_matches(WRAPPERS);
        if word.is_empty() {
            continue;
        }
        if is_url_token(word) {
            out.push(trim_url(word).to_lowercase());
            continue;
        }
        let chars: Vec<char> = word.chars().collect();
        let mut cur = String::new();
        for (i, &ch) in chars.iter().enumerate() {
            if PUNCT.contains(&ch) {
                let decimal_dot = ch == '.'
                    && i > 0
                    && i + 1 < chars.len()
                    && chars[i - 1].is_ascii_digit()
                    && chars[i + 1].is_ascii_digit();
                if decimal_dot {
                    cur.push(ch);
                    continue;
                }
                if !cur.is_empty() {
                    let tok = norm_word(&cur);
                    if !tok.is_empty() {
                        out.push(tok);
                    }
                    cur.clear();
                }
                out.push(ch.to_string());
            } else {
                cur.push(ch);
            }
        }
        if !cur.is_empty() {
            let tok = norm_word(&cur);
            if !tok.is_empty() {
                out.push(tok);
            }
        }
    }
    out
}

/// Decode the handful of HTML entities that survive in tweet exports.
pub(crate) fn decode_entities(text: &str) -> String {
    text.replace("&amp;", "&")
        .replace("&gt;", ">")
        .replace("&lt;", "<")
        .replace("&quot;", "\"")
}

/// Replace URL spans with spaces so character probes skip them.
pub(crate) fn mask_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end, _) in find_url_spans(text) {
        out.push_str(&text[last..start]);
        out.extend(std::iter::repeat(' ').take(end - start));
        last = end;
    }
    out.push_str(&text[last..]);
    out
}

/// Split URL tokens into their alphanumeric pieces; other tokens pass through.
pub(crate) fn expand_url_tokens(tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        if is_url_token(tok) {
            out.extend(
                tok.split(|c: char| !c.is_ascii_alphanumeric())
                    .filter(|p| !p.is_empty())
                    .map(str::to_string),
            );
        } else {
            out.push(tok.clone());
        }
    }
    out
}
