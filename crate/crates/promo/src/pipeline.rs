//! End-to-end scoring: cleanse, extract, predict, and write predictions.

use std::fs;
use std::path::Path;

use crate::bayes::BayesModel;
use crate::cleanse::{default_shorteners, normalize_with};
use crate::config::PipelineConfig;
use crate::corpus::{load_tweets, Dataset, FeatureVector, TweetFormat, FEATURE_HEADER};
use crate::error::{Error, Result};
use crate::features::extract;

/// What one scoring run did.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub total: usize,
    pub kept: usize,
    /// (tweet id, reason) for every dropped tweet.
    pub skipped: Vec<(i64, String)>,
    pub predicted_promotional: usize,
}

/// Pick the tweet file format from the extension: `.csv`, else JSON lines.
pub fn detect_format(path: &Path) -> TweetFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => TweetFormat::Csv,
        _ => TweetFormat::JsonLines,
    }
}

fn yn(value: bool) -> &'static str {
    if value {
        "y"
    } else {
        "n"
    }
}

fn prediction_header() -> String {
    let mut columns: Vec<&str> = FEATURE_HEADER.to_vec();
    columns.push("Predicted");
    columns.push("PromotionalProbability");
    columns.join(",")
}

fn prediction_row(fv: &FeatureVector, predicted: bool, probability: f64) -> String {
    let mut cells: Vec<String> = fv.flags().iter().map(|f| yn(*f).to_string()).collect();
    cells.push(format!("{}", fv.intent_score));
    cells.push(match fv.label {
        Some(l) => yn(l).to_string(),
        None => String::new(),
    });
    cells.push(yn(predicted).to_string());
    cells.push(format!("{probability}"));
    cells.join(",")
}

/// Score raw tweets end to end and write a prediction table to `out_path`.
pub fn run_pipeline(
    tweets_path: &Path,
    config: &PipelineConfig,
    model: &BayesModel,
    out_path: &Path,
) -> Result<PipelineSummary> {
    let tweets = load_tweets(tweets_path, detect_format(tweets_path))?;
    let lexicon = config.lexicon()?;
    let resolver = config.resolver()?;
    let shorteners = default_shorteners();

    let mut lines = vec![prediction_header()];
    let mut summary = PipelineSummary {
        total: tweets.len(),
        kept: 0,
        skipped: Vec::new(),
        predicted_promotional: 0,
    };
    for tweet in &tweets {
        let clean = normalize_with(tweet, resolver.as_ref(), config.english.threshold, &shorteners);
        if !clean.kept {
            let reason = if tweet.simulated {
                "simulated placeholder"
            } else {
                "non-english"
            };
            summary.skipped.push((tweet.id, reason.to_string()));
            continue;
        }
        let fv = extract(&clean, &lexicon, &config.weights)?;
        let (predicted, posterior) = model.predict(&fv)?;
        summary.kept += 1;
        if predicted {
            summary.predicted_promotional += 1;
        }
        lines.push(prediction_row(&fv, predicted, posterior.promotional));
    }
    let mut body = lines.join("\n");
    body.push('\n');
    fs::write(out_path, body).map_err(|e| Error::io(out_path, e))?;
    Ok(summary)
}

/// Score an already-extracted attribute table; returns the promotional count.
pub fn predict_rows(data: &Dataset, model: &BayesModel, out_path: &Path) -> Result<usize> {
    let mut lines = vec![prediction_header()];
    let mut promotional = 0;
    for row in &data.rows {
        let (predicted, posterior) = model.predict(row)?;
        if predicted {
            promotional += 1;
        }
        lines.push(prediction_row(row, predicted, posterior.promotional));
    }
    let mut body = lines.join("\n");
    body.push('\n');
    fs::write(out_path, body).map_err(|e| Error::io(out_path, e))?;
    Ok(promotional)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::fit;
    use crate::corpus::load_feature_csv;
    use std::path::PathBuf;

    fn repo_file(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(name)
    }

    fn model() -> BayesModel {
        fit(&load_feature_csv(&repo_file("fixtures/training.csv")).unwrap()).unwrap()
    }

    #[test]
    fn fixture_corpus_runs_end_to_end() {
        let config = PipelineConfig::load(&repo_file("promo.toml")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("predictions.csv");
        let summary =
            run_pipeline(&repo_file("fixtures/tweets.jsonl"), &config, &model(), &out).unwrap();
        assert_eq!(summary.total, 38);
        assert_eq!(summary.kept, 37);
        assert_eq!(
            summary.skipped,
            vec![(757627822982762000, "simulated placeholder".to_string())]
        );
        assert!((15..=30).contains(&summary.predicted_promotional));

        let body = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 38);
        assert!(lines[0].starts_with("ContainsURL,"));
        assert!(lines[0].ends_with("Predicted,PromotionalProbability"));
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 14);
        }
    }

    #[test]
    fn empty_input_writes_a_header_only_table() {
        let dir = tempfile::tempdir().unwrap();
        let tweets = dir.path().join("none.jsonl");
        std::fs::write(&tweets, "").unwrap();
        let out = dir.path().join("predictions.csv");
        let summary =
            run_pipeline(&tweets, &PipelineConfig::default(), &model(), &out).unwrap();
        assert_eq!((summary.total, summary.kept), (0, 0));
        assert!(summary.skipped.is_empty());
        let body = std::fs::read_to_string(&out).unwrap();
        assert_eq!(body.lines().count(), 1);
    }

    #[test]
    fn non_english_tweets_are_skipped_with_a_reason() {
        let dir = tempfile::tempdir().unwrap();
        let tweets = dir.path().join("tweets.jsonl");
        std::fs::write(
            &tweets,
            "{\"id\": 1, \"text\": \"Hola amigos, la nube de Microsoft es r\\u00e1pida\"}\n",
        )
        .unwrap();
        let out = dir.path().join("predictions.csv");
        let summary =
            run_pipeline(&tweets, &PipelineConfig::default(), &model(), &out).unwrap();
        assert_eq!(summary.kept, 0);
        assert_eq!(summary.skipped, vec![(1, "non-english".to_string())]);
    }

    #[test]
    fn feature_table_predictions_count_the_resubstitution_hits() {
        let data = load_feature_csv(&repo_file("fixtures/training.csv")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("scored.csv");
        let promotional = predict_rows(&data, &model(), &out).unwrap();
        // One promotional row is missed at resubstitution; none flip the other way.
        assert_eq!(promotional, 24);
        let body = std::fs::read_to_string(&out).unwrap();
        assert_eq!(body.lines().count(), 39);
        // Labels ride along into the output table.
        assert!(body.lines().nth(1).unwrap().contains(",y,"));
    }

    #[test]
    fn format_detection_prefers_the_extension() {
        assert!(matches!(
            detect_format(Path::new("a/tweets.CSV")),
            TweetFormat::Csv
        ));
        assert!(matches!(
            detect_format(Path::new("a/tweets.jsonl")),
            TweetFormat::JsonLines
        ));
        assert!(matches!(
            detect_format(Path::new("tweets")),
            TweetFormat::JsonLines
        ));
    }
}
