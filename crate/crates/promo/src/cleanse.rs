//! Tweet normalization: English filtering, hash stripping, entity decoding, URL expansion.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::{Condvar, LazyLock, Mutex};
use std::time::Duration;

use regex::Regex;

use crate::corpus::Tweet;
use crate::error::{Error, Result};
use crate::textutil::{decode_entities, find_url_spans, host_of, tokenize};

/// Shortener hosts whose links are expanded before analysis.
pub const DEFAULT_SHORTENERS: [&str; 8] = [
    "t.co", "ift.tt", "zpr.io", "bit.ly", "ow.ly", "wapo.st", "lnkd.in", "meetu.ps",
];

/// Minimum stopword ratio for a text to count as English.
pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.08;

/// Core English stopwords plus a few verbs ubiquitous in tech tweets.
const STOPWORDS: [&str; 117] = [
    "a", "about", "above", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
    "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further",
    "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how", "i", "if",
    "in", "into", "is", "it", "its", "just", "like", "me", "more", "most", "my", "no", "nor",
    "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "out", "over", "own",
    "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "them",
    "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until",
    "up", "use", "using", "very", "via", "want", "was", "we", "were", "what", "when", "where",
    "which", "while", "who", "why", "will", "with", "would", "you", "your",
];

static STOPWORD_SET: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| STOPWORDS.iter().copied().collect());

/// One URL's journey through resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlResolution {
    pub original: String,
    pub final_url: String,
    /// Page title of the final URL; empty when unavailable.
    pub title: String,
}

impl UrlResolution {
    /// The degraded form used when resolution fails or is not attempted.
    pub fn unresolved(url: &str) -> UrlResolution {
        UrlResolution {
            original: url.to_string(),
            final_url: url.to_string(),
            title: String::new(),
        }
    }
}

/// Expands shortened URLs. Implementations degrade to [`UrlResolution::unresolved`]
/// on failure instead of erroring.
pub trait UrlResolver: Send + Sync {
    fn resolve(&self, url: &str) -> UrlResolution;
}

/// Table-driven resolver backed by a `short<TAB>final<TAB>title` file.
#[derive(Debug, Clone, Default)]
pub struct FixtureResolver {
    map: HashMap<String, (String, String)>,
}

impl FixtureResolver {
    pub fn load(path: &Path) -> Result<FixtureResolver> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (short, final_url) = match (parts.next(), parts.next()) {
                (Some(s), Some(f)) if !s.is_empty() && !f.is_empty() => (s, f),
                _ => return Err(Error::parse(path, i + 1, "expected short<TAB>final[<TAB>title]")),
            };
            let title = parts.next().unwrap_or("").to_string();
            map.insert(short.to_string(), (final_url.to_string(), title));
        }
        Ok(FixtureResolver { map })
    }

    pub fn insert(&mut self, short: &str, final_url: &str, title: &str) {
        self.map
            .insert(short.to_string(), (final_url.to_string(), title.to_string()));
    }
}

impl UrlResolver for FixtureResolver {
    fn resolve(&self, url: &str) -> UrlResolution {
        match self.map.get(url) {
            Some((final_url, title)) => UrlResolution {
                original: url.to_string(),
                final_url: final_url.clone(),
                title: title.clone(),
            },
            None => UrlResolution::unresolved(url),
        }
    }
}

/// Counting gate bounding concurrent lookups.
struct Gate {
    state: Mutex<usize>,
    cv: Condvar,
    limit: usize,
}

impl Gate {
    fn new(limit: usize) -> Gate {
        Gate {
            state: Mutex::new(0),
            cv: Condvar::new(),
            limit: limit.max(1),
        }
    }

    fn acquire(&self) {
        let mut in_flight = self.state.lock().unwrap();
        while *in_flight >= self.limit {
            in_flight = self.cv.wait(in_flight).unwrap();
        }
        *in_flight += 1;
    }

    fn release(&self) {
        *self.state.lock().unwrap() -= 1;
        self.cv.notify_one();
    }
}

static TITLE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<title[^>]*>(.*?)</title>").expect("static regex"));

/// HTTP resolver following up to 3 redirects with a 5s default timeout
/// (override via `PROMO_RESOLVER_TIMEOUT_SECS`). Results are memoized per URL
/// and lookups are bounded by an in-flight cap, so it is safe to share
/// across threads.
pub struct LiveResolver {
    client: reqwest::blocking::Client,
    cache: Mutex<HashMap<String, (String, String)>>,
    gate: Gate,
}

impl LiveResolver {
    pub fn new() -> Result<LiveResolver> {
        LiveResolver::with_in_flight_cap(4)
    }

    pub fn with_in_flight_cap(cap: usize) -> Result<LiveResolver> {
        let timeout = std::env::var("PROMO_RESOLVER_TIMEOUT_SECS")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
            .unwrap_or(5);
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout))
            .redirect(reqwest::redirect::Policy::limited(3))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(LiveResolver {
            client,
            cache: Mutex::new(HashMap::new()),
            gate: Gate::new(cap),
        })
    }

    fn fetch(&self, url: &str) -> Option<(String, String)> {
        let resp = self.client.get(url).send().ok()?;
        let final_url = resp.url().to_string();
        // Only the <title> is wanted; cap the read so huge pages cost nothing.
        let mut body = Vec::new();
        let _ = resp.take(64 * 1024).read_to_end(&mut body);
        let body = String::from_utf8_lossy(&body);
        let title = TITLE_RE
            .captures(&body)
            .and_then(|c| c.get(1))
            .map(|m| m.as_str().split_whitespace().collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        Some((final_url, title))
    }
}

impl UrlResolver for LiveResolver {
    fn resolve(&self, url: &str) -> UrlResolution {
        if let Some((final_url, title)) = self.cache.lock().unwrap().get(url) {
            return UrlResolution {
                original: url.to_string(),
                final_url: final_url.clone(),
                title: title.clone(),
            };
        }
        self.gate.acquire();
        let fetched = self.fetch(url);
        self.gate.release();
        let (final_url, title) = fetched.unwrap_or_else(|| (url.to_string(), String::new()));
        self.cache
            .lock()
            .unwrap()
            .insert(url.to_string(), (final_url.clone(), title.clone()));
        UrlResolution {
            original: url.to_string(),
            final_url,
            title,
        }
    }
}

/// A tweet after normalization, with its discard verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanTweet {
    pub original: Tweet,
    /// Body with '#' stripped, entities decoded, short URLs expanded.
    pub text: String,
    pub resolved_urls: Vec<UrlResolution>,
    /// False when the tweet is non-English or a simulated placeholder.
    pub kept: bool,
}

/// True when the text looks English: enough stopwords among its alphabetic
/// tokens, or a very short all-alphanumeric ASCII snippet.
pub fn english_filter(text: &str) -> bool {
    english_filter_with(text, DEFAULT_ENGLISH_THRESHOLD)
}

pub fn english_filter_with(text: &str, threshold: f64) -> bool {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return false;
    }
    if tokens.len() < 4
        && tokens
            .iter()
            .all(|t| t.chars().all(|c| c.is_ascii_alphanumeric()))
    {
        return true;
    }
    let alphabetic: Vec<&String> = tokens
        .iter()
        .filter(|t| t.chars().all(|c| c.is_alphabetic()))
        .collect();
    if alphabetic.is_empty() {
        return false;
    }
    let hits = alphabetic
        .iter()
        .filter(|t| STOPWORD_SET.contains(t.as_str()))
        .count();
    hits as f64 / alphabetic.len() as f64 >= threshold
}

pub fn default_shorteners() -> HashSet<String> {
    DEFAULT_SHORTENERS.iter().map(|s| s.to_string()).collect()
}

/// Normalize a tweet with the default threshold and shortener set.
pub fn normalize(tweet: &Tweet, resolver: &dyn UrlResolver) -> CleanTweet {
    normalize_with(tweet, resolver, DEFAULT_ENGLISH_THRESHOLD, &default_shorteners())
}

/// Normalize a tweet: decode entities, strip '#' outside URLs, expand
/// shortened URLs through `resolver`. The resolver is consulted only for
/// hosts in `shorteners`; failures keep the original URL. The English
/// verdict is taken on the raw text, where hashtag tokens are still
/// recognizable as non-words.
pub fn normalize_with(
    tweet: &Tweet,
    resolver: &dyn UrlResolver,
    threshold: f64,
    shorteners: &HashSet<String>,
) -> CleanTweet {
    let kept = english_filter_with(&tweet.text, threshold) && !tweet.simulated;
    let text = decode_entities(&tweet.text);
    let mut rebuilt = String::with_capacity(text.len());
    let mut resolved = Vec::new();
    let mut last = 0;
    for (start, end, url) in find_url_spans(&text) {
        rebuilt.push_str(&text[last..start].replace('#', ""));
        let resolution = if shorteners.contains(&host_of(url)) {
            resolver.resolve(url)
        } else {
            UrlResolution::unresolved(url)
        };
        rebuilt.push_str(&resolution.final_url);
        resolved.push(resolution);
        last = end;
    }
    rebuilt.push_str(&text[last..].replace('#', ""));
    CleanTweet {
        original: tweet.clone(),
        text: rebuilt.trim().to_string(),
        resolved_urls: resolved,
        kept,
    }
}
