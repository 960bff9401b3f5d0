//! Data model, tweet/feature-table I/O, and reproducible sampling.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::textutil;

/// A raw post: identifier, body text, and the URLs found in the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: i64,
    pub text: String,
    pub urls: Vec<String>,
    /// Placeholder rows carry no real text and are skipped by text-level stages.
    pub simulated: bool,
}

impl Tweet {
    /// Build a tweet from raw text, extracting URLs by pattern match.
    pub fn new(id: i64, text: impl Into<String>) -> Tweet {
        let text = text.into();
        let urls = textutil::find_url_spans(&text)
            .into_iter()
            .map(|(_, _, u)| u.to_string())
            .collect();
        Tweet {
            id,
            text,
            urls,
            simulated: false,
        }
    }
}

/// The classifier attribute row: ten binary flags, one score, optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub contains_url: bool,
    pub microsoft_url: bool,
    pub contains_azure_word: bool,
    pub contains_exclamation: bool,
    pub contains_colon: bool,
    pub contains_question_mark: bool,
    pub contains_keyword: bool,
    pub mentions_competitor: bool,
    pub contains_benefit: bool,
    pub intent: bool,
    /// Confidence of the intent prediction, in [0, 1].
    pub intent_score: f64,
    /// Gold class when known: `true` = promotional, `false` = none.
    pub label: Option<bool>,
}

/// Column names of the feature CSV, in order.
pub const FEATURE_HEADER: [&str; 12] = [
    "ContainsURL",
    "MicrosoftURL",
    "ContainsAzureWord",
    "ContainsExclamation",
    "ContainsColon",
    "ContainsQuestionMark",
    "ContainsKeyword",
    "MentionsCompetitor",
    "ContainsBenefit",
    "Intent",
    "IntentScore",
    "Promotional",
];

impl FeatureVector {
    /// Names of the ten binary flags, in `flags()` order.
    pub const FLAG_NAMES: [&'static str; 10] = [
        "ContainsURL",
        "MicrosoftURL",
        "ContainsAzureWord",
        "ContainsExclamation",
        "ContainsColon",
        "ContainsQuestionMark",
        "ContainsKeyword",
        "MentionsCompetitor",
        "ContainsBenefit",
        "Intent",
    ];

    pub fn flags(&self) -> [bool; 10] {
        [
            self.contains_url,
            self.microsoft_url,
            self.contains_azure_word,
            self.contains_exclamation,
            self.contains_colon,
            self.contains_question_mark,
            self.contains_keyword,
            self.mentions_competitor,
            self.contains_benefit,
            self.intent,
        ]
    }

    pub fn from_flags(flags: [bool; 10], intent_score: f64, label: Option<bool>) -> FeatureVector {
        FeatureVector {
            contains_url: flags[0],
            microsoft_url: flags[1],
            contains_azure_word: flags[2],
            contains_exclamation: flags[3],
            contains_colon: flags[4],
            contains_question_mark: flags[5],
            contains_keyword: flags[6],
            mentions_competitor: flags[7],
            contains_benefit: flags[8],
            intent: flags[9],
            intent_score,
            label,
        }
    }
}

/// An ordered, immutable collection of feature rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<FeatureVector>,
    /// Free-form note about where the rows came from.
    pub source: String,
}

/// Supported tweet file encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TweetFormat {
    JsonLines,
    Csv,
}

#[derive(Deserialize)]
struct RawTweet {
    id: i64,
    text: String,
    #[serde(default)]
    simulated: bool,
}

/// Load tweets from a JSON-lines or CSV file. Empty files yield an empty list.
pub fn load_tweets(path: &Path, format: TweetFormat) -> Result<Vec<Tweet>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if content.trim().is_empty() {
        return Ok(Vec::new());
    }
    let tweets = match format {
        TweetFormat::JsonLines => load_tweets_jsonl(path, &content)?,
        TweetFormat::Csv => load_tweets_csv(path, &content)?,
    };
    let mut seen = BTreeSet::new();
    for (i, t) in tweets.iter().enumerate() {
        if !seen.insert(t.id) {
            return Err(Error::parse(path, i + 1, format!("duplicate tweet id {}", t.id)));
        }
    }
    Ok(tweets)
}

fn load_tweets_jsonl(path: &Path, content: &str) -> Result<Vec<Tweet>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTweet = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if raw.text.is_empty() {
            return Err(Error::parse(path, i + 1, "empty tweet text"));
        }
        let mut tweet = Tweet::new(raw.id, raw.text);
        tweet.simulated = raw.simulated;
        out.push(tweet);
    }
    Ok(out)
}

fn load_tweets_csv(path: &Path, content: &str) -> Result<Vec<Tweet>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let idx = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, text_col) = match (idx("id"), idx("text")) {
        (Some(i), Some(t)) => (i, t),
        _ => return Err(Error::parse(path, 1, "header must contain id,text")),
    };
    let sim_col = idx("simulated");
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let id: i64 = record
            .get(id_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, "invalid id"))?;
        let text = record.get(text_col).unwrap_or("").to_string();
        if text.is_empty() {
            return Err(Error::parse(path, line, "empty tweet text"));
        }
        let mut tweet = Tweet::new(id, text);
        tweet.simulated = sim_col
            .and_then(|c| record.get(c))
            .map(|v| matches!(v.trim(), "true" | "1" | "y"))
            .unwrap_or(false);
        out.push(tweet);
    }
    Ok(out)
}

fn parse_flag(path: &Path, line: usize, value: &str) -> Result<bool> {
    match value {
        "y" => Ok(true),
        "n" => Ok(false),
        other => Err(Error::parse(path, line, format!("expected y or n, got {other:?}"))),
    }
}

/// Load a feature CSV whose header matches [`FEATURE_HEADER`] exactly.
pub fn load_feature_csv(path: &Path) -> Result<Dataset> {
    let rows = read_feature_rows(path, &FEATURE_HEADER)?
        .into_iter()
        .map(|(fv, _)| fv)
        .collect();
    Ok(Dataset {
        rows,
        source: path.display().to_string(),
    })
}

/// Load a prediction-replay table: the feature schema plus a trailing
/// `ReferencePrediction` column recording what the reference model predicted.
pub fn load_prediction_table(path: &Path) -> Result<Vec<(FeatureVector, bool)>> {
    let mut header: Vec<&str> = FEATURE_HEADER.to_vec();
    header.push("ReferencePrediction");
    let rows = read_feature_rows(path, &header)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, (fv, extra))| {
            let pred = parse_flag(path, i + 2, &extra.expect("extra column present"))?;
            Ok((fv, pred))
        })
        .collect()
}

fn read_feature_rows(path: &Path, expected_header: &[&str]) -> Result<Vec<(FeatureVector, Option<String>)>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    for (i, col) in headers.iter().enumerate() {
        if expected_header.get(i).map(|e| *e != col).unwrap_or(true) {
            return Err(Error::Schema {
                column: col.to_string(),
            });
        }
    }
    if headers.len() < expected_header.len() {
        return Err(Error::Schema {
            column: expected_header[headers.len()].to_string(),
        });
    }
    let has_extra = expected_header.len() > FEATURE_HEADER.len();
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if record.len() != expected_header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, got {}", expected_header.len(), record.len()),
            ));
        }
        let mut flags = [false; 10];
        for (j, flag) in flags.iter_mut().enumerate() {
            *flag = parse_flag(path, line, record.get(j).unwrap_or(""))?;
        }
        let score_text = record.get(10).unwrap_or("");
        let intent_score: f64 = score_text
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid score {score_text:?}")))?;
        if !(0.0..=1.0).contains(&intent_score) {
            return Err(Error::ScoreRange {
                row,
                value: intent_score,
            });
        }
        let label = match record.get(11).unwrap_or("") {
            "" => None,
            v => Some(parse_flag(path, line, v)?),
        };
        let fv = FeatureVector::from_flags(flags, intent_score, label);
        if fv.microsoft_url && !fv.contains_url {
            return Err(Error::UrlFlag { row });
        }
        let extra = has_extra.then(|| record.get(12).unwrap_or("").to_string());
        out.push((fv, extra));
    }
    Ok(out)
}

fn flag_text(b: bool) -> &'static str {
    if b {
        "y"
    } else {
        "n"
    }
}

/// Write a dataset in the exact feature CSV schema (label empty when unknown).
pub fn save_feature_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut out = String::new();
    out.push_str(&FEATURE_HEADER.join(","));
    out.push('\n');
    for fv in &dataset.rows {
        let flags = fv.flags();
        for flag in flags {
            out.push_str(flag_text(flag));
            out.push(',');
        }
        out.push_str(&format!("{}", fv.intent_score));
        out.push(',');
        if let Some(label) = fv.label {
            out.push_str(flag_text(label));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Persistent record of tweet ids already handed out by [`sample_tweets`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    ids: BTreeSet<i64>,
}

impl Ledger {
    /// Read a ledger file (one decimal id per line); a missing file is empty.
    pub fn load(path: &Path) -> Result<Ledger> {
        if !path.exists() {
            return Ok(Ledger::default());
        }
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut ids = BTreeSet::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let id: i64 = line
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "invalid id"))?;
            ids.insert(id);
        }
        Ok(Ledger { ids })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for id in &self.ids {
            out.push_str(&id.to_string());
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, id: i64) -> bool {
        self.ids.contains(&id)
    }

    pub fn insert(&mut self, id: i64) {
        self.ids.insert(id);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Draw `n` distinct tweets not yet in the ledger, seeded and reproducible.
/// Drawn ids are appended to the ledger, so successive calls partition the corpus.
pub fn sample_tweets(corpus: &[Tweet], n: usize, seed: u64, ledger: &mut Ledger) -> Result<Vec<Tweet>> {
    let mut pool: Vec<&Tweet> = corpus.iter().filter(|t| !ledger.contains(t.id)).collect();
    if n > pool.len() {
        return Err(Error::SampleExhausted {
            requested: n,
            remaining: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let picked: Vec<Tweet> = pool[..n].iter().map(|t| (*t).clone()).collect();
    for t in &picked {
        ledger.insert(t.id);
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use std::path::PathBuf;

    fn fixture(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
    }

    fn temp_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn fixture_corpus_has_38_unique_tweets() {
        let tweets = load_tweets(&fixture("tweets.jsonl"), TweetFormat::JsonLines).unwrap();
        assert_eq!(tweets.len(), 38);
        let ids: BTreeSet<i64> = tweets.iter().map(|t| t.id).collect();
        assert_eq!(ids.len(), 38);
        assert_eq!(tweets.iter().filter(|t| t.simulated).count(), 1);
    }

    #[test]
    fn urls_are_extracted_in_order() {
        let tweets = load_tweets(&fixture("tweets.jsonl"), TweetFormat::JsonLines).unwrap();
        let first = tweets.iter().find(|t| t.id == 740516501464190000).unwrap();
        assert_eq!(first.urls, vec!["http://ift.tt/1SrRnWU"]);
        let bare = tweets.iter().find(|t| t.id == 749682236803452000).unwrap();
        assert!(bare.urls.is_empty());
    }

    #[test]
    fn empty_tweet_file_is_empty_list() {
        let f = temp_file("");
        assert!(load_tweets(f.path(), TweetFormat::JsonLines).unwrap().is_empty());
        assert!(load_tweets(f.path(), TweetFormat::Csv).unwrap().is_empty());
    }

    #[test]
    fn malformed_json_names_the_line() {
        let f = temp_file("{\"id\": 1, \"text\": \"ok\"}\nnot json\n");
        let err = load_tweets(f.path(), TweetFormat::JsonLines).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn empty_text_is_rejected() {
        let f = temp_file("{\"id\": 1, \"text\": \"\"}\n");
        let err = load_tweets(f.path(), TweetFormat::JsonLines).unwrap_err();
        assert!(err.to_string().contains("empty tweet text"), "{err}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let f = temp_file("{\"id\": 7, \"text\": \"a\"}\n{\"id\": 7, \"text\": \"b\"}\n");
        let err = load_tweets(f.path(), TweetFormat::JsonLines).unwrap_err();
        assert!(err.to_string().contains("duplicate tweet id 7"), "{err}");
    }

    #[test]
    fn csv_tweets_parse_with_optional_simulated_column() {
        let f = temp_file("id,text,simulated\n1,\"hello, world\",\n2,placeholder,true\n");
        let tweets = load_tweets(f.path(), TweetFormat::Csv).unwrap();
        assert_eq!(tweets[0].text, "hello, world");
        assert!(!tweets[0].simulated);
        assert!(tweets[1].simulated);
    }

    #[test]
    fn training_table_loads_verbatim() {
        let ds = load_feature_csv(&fixture("training.csv")).unwrap();
        assert_eq!(ds.rows.len(), 38);
        let promo = ds.rows.iter().filter(|r| r.label == Some(true)).count();
        assert_eq!(promo, 25);
        assert_eq!(ds.rows.len() - promo, 13);
        let first = &ds.rows[0];
        assert_eq!(
            first.flags(),
            [true, true, true, false, false, false, true, true, true, true]
        );
        assert_eq!(first.intent_score, 0.99);
        assert_eq!(first.label, Some(true));
    }

    #[test]
    fn header_only_file_yields_zero_rows() {
        let f = temp_file(&(FEATURE_HEADER.join(",") + "\n"));
        let ds = load_feature_csv(f.path()).unwrap();
        assert!(ds.rows.is_empty());
    }

    #[test]
    fn unknown_header_column_is_named() {
        let f = temp_file("ContainsURL,Nope\ny,n\n");
        match load_feature_csv(f.path()).unwrap_err() {
            Error::Schema { column } => assert_eq!(column, "Nope"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn score_out_of_range_names_the_row() {
        let mut content = FEATURE_HEADER.join(",") + "\n";
        content.push_str("y,n,n,n,n,n,n,n,n,n,0.5,y\n");
        content.push_str("y,n,n,n,n,n,n,n,n,n,1.5,y\n");
        let f = temp_file(&content);
        match load_feature_csv(f.path()).unwrap_err() {
            Error::ScoreRange { row, value } => {
                assert_eq!(row, 2);
                assert_eq!(value, 1.5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn microsoft_url_without_url_is_rejected() {
        let mut content = FEATURE_HEADER.join(",") + "\n";
        content.push_str("n,y,n,n,n,n,n,n,n,n,0.5,y\n");
        let f = temp_file(&content);
        match load_feature_csv(f.path()).unwrap_err() {
            Error::UrlFlag { row } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn feature_csv_round_trips() {
        let ds = load_feature_csv(&fixture("training.csv")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("copy.csv");
        save_feature_csv(&path, &ds).unwrap();
        let back = load_feature_csv(&path).unwrap();
        assert_eq!(ds.rows, back.rows);
    }

    #[test]
    fn unlabeled_rows_round_trip_as_empty_label() {
        let fv = FeatureVector::from_flags([false; 10], 0.5, None);
        let ds = Dataset {
            rows: vec![fv],
            source: String::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        save_feature_csv(&path, &ds).unwrap();
        let back = load_feature_csv(&path).unwrap();
        assert_eq!(back.rows[0].label, None);
    }

    #[test]
    fn prediction_tables_carry_the_reference_column() {
        let rows = load_prediction_table(&fixture("round1.csv")).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(!rows[1].1, "row 2 reference prediction is none");
        assert_eq!(rows[1].0.intent_score, 0.8309562);
        let rows2 = load_prediction_table(&fixture("round2.csv")).unwrap();
        // Rows 4 and 6 are the recorded reference errors: prediction none, actual promotional.
        assert!(!rows2[3].1 && rows2[3].0.label == Some(true));
        assert!(!rows2[5].1 && rows2[5].0.label == Some(true));
    }

    #[test]
    fn sampling_partitions_the_corpus() {
        let tweets: Vec<Tweet> = (0..38).map(|i| Tweet::new(i, format!("tweet {i}"))).collect();
        let mut ledger = Ledger::default();
        let first = sample_tweets(&tweets, 10, 7, &mut ledger).unwrap();
        let second = sample_tweets(&tweets, 10, 7, &mut ledger).unwrap();
        let third = sample_tweets(&tweets, 18, 7, &mut ledger).unwrap();
        let mut all: Vec<i64> = first
            .iter()
            .chain(second.iter())
            .chain(third.iter())
            .map(|t| t.id)
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 38, "no id drawn twice, union covers the corpus");
        assert_eq!(ledger.len(), 38);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let tweets: Vec<Tweet> = (0..20).map(|i| Tweet::new(i, format!("tweet {i}"))).collect();
        let a = sample_tweets(&tweets, 5, 42, &mut Ledger::default()).unwrap();
        let b = sample_tweets(&tweets, 5, 42, &mut Ledger::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exhausted_pool_reports_remaining() {
        let tweets: Vec<Tweet> = (0..3).map(|i| Tweet::new(i, "t".to_string())).collect();
        let mut ledger = Ledger::default();
        sample_tweets(&tweets, 3, 1, &mut ledger).unwrap();
        match sample_tweets(&tweets, 1, 1, &mut ledger).unwrap_err() {
            Error::SampleExhausted { requested, remaining } => {
                assert_eq!((requested, remaining), (1, 0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ledger_round_trips() {
        let mut ledger = Ledger::default();
        ledger.insert(5);
        ledger.insert(-3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.txt");
        ledger.save(&path).unwrap();
        assert_eq!(Ledger::load(&path).unwrap(), ledger);
        assert!(Ledger::load(&dir.path().join("missing.txt")).unwrap().is_empty());
    }
}
