//! Command-line surface for the promotional-tweet classifier.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use promo::bayes::{self, BayesModel};
use promo::cleanse::normalize_with;
use promo::config::{PipelineConfig, ResolverMode};
use promo::corpus::{load_feature_csv, load_tweets, Dataset};
use promo::error::Error;
use promo::eval::{attribute_report, cross_validate, EvalReport};
use promo::features::extract;
use promo::intent::{comparison_direction, explain, predict_intent, tag_entities};
use promo::lexicon::tokenize;
use promo::pipeline::{detect_format, predict_rows, run_pipeline};

/// `--resolver` override: `fixture:<path>` or `live`.
#[derive(Debug, Clone)]
enum ResolverArg {
    Fixture(PathBuf),
    Live,
}

impl FromStr for ResolverArg {
    type Err = String;

    fn from_str(s: &str) -> Result<ResolverArg, String> {
        if s == "live" {
            return Ok(ResolverArg::Live);
        }
        match s.strip_prefix("fixture:") {
            Some(path) if !path.is_empty() => Ok(ResolverArg::Fixture(PathBuf::from(path))),
            _ => Err("expected fixture:<path> or live".to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "promo", version, about = "Classify tweets as product-promotional")]
struct Cli {
    /// Config file; when omitted, promo.toml is used if present.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Drop the timestamp line from printed reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean tweets: decode entities, strip '#', expand shortened links.
    Cleanse {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Output JSON-lines file; stdout when omitted.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "MODE")]
        resolver: Option<ResolverArg>,
    },
    /// Extract the attribute table from raw tweets.
    Extract {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, value_name = "MODE")]
        resolver: Option<ResolverArg>,
    },
    /// Score one text with the rule engine.
    Intent {
        #[arg(long)]
        text: String,
        /// Print each fired rule and its contribution.
        #[arg(long)]
        explain: bool,
    },
    /// Fit the classifier on a labeled attribute table.
    Train {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Model file to write; defaults to the configured model path.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Score tweets (or an attribute table) with a trained model.
    Predict {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Treat the input as an already-extracted attribute table.
        #[arg(long)]
        features: bool,
        /// Model file to read; defaults to the configured model path.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, value_name = "MODE")]
        resolver: Option<ResolverArg>,
    },
    /// Stratified k-fold cross-validation over a labeled attribute table.
    Crossval {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Fold count; defaults to the configured value.
        #[arg(long, value_name = "N")]
        k: Option<usize>,
        /// Shuffle seed; defaults to the configured value.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Also write the report as JSON.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Evaluate without the intent attribute and score.
        #[arg(long)]
        no_intent: bool,
    },
    /// Per-attribute contingency counts for a labeled table.
    Report {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
}

fn main() {
    // Die quietly when the reading end of a pipe closes (e.g. `promo ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<PipelineConfig> {
    match path {
        Some(path) => Ok(PipelineConfig::load(path)?),
        None => {
            let default = Path::new("promo.toml");
            if default.is_file() {
                Ok(PipelineConfig::load(default)?)
            } else {
                Ok(PipelineConfig::default())
            }
        }
    }
}

fn apply_resolver(config: &mut PipelineConfig, arg: Option<ResolverArg>) {
    match arg {
        Some(ResolverArg::Fixture(path)) => {
            config.resolver.mode = ResolverMode::Fixture;
            config.resolver.fixture = Some(path);
        }
        Some(ResolverArg::Live) => config.resolver.mode = ResolverMode::Live,
        None => {}
    }
}

/// Reports carry a timestamp header unless suppressed, keeping reruns
/// byte-identical under --no-timestamp.
fn timestamp_header(no_timestamp: bool) {
    if !no_timestamp {
        let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        println!("# {now}");
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = load_config(&cli.config)?;
    match cli.command {
        Command::Cleanse { input, out, resolver } => {
            apply_resolver(&mut config, resolver);
            cmd_cleanse(&config, &input, out.as_deref())
        }
        Command::Extract { input, out, resolver } => {
            apply_resolver(&mut config, resolver);
            cmd_extract(&config, &input, &out)
        }
        Command::Intent { text, explain } => cmd_intent(&config, &text, explain),
        Command::Train { input, out } => cmd_train(&config, &input, out.as_deref()),
        Command::Predict { input, features, model, out, resolver } => {
            apply_resolver(&mut config, resolver);
            cmd_predict(&config, &input, features, model.as_deref(), &out)
        }
        Command::Crossval { input, k, seed, out, no_intent } => cmd_crossval(
            &input,
            k.unwrap_or(config.crossval.folds),
            seed.unwrap_or(config.crossval.seed),
            out.as_deref(),
            !no_intent,
            cli.no_timestamp,
        ),
        Command::Report { input } => cmd_report(&input, cli.no_timestamp),
    }
}

fn cmd_cleanse(config: &PipelineConfig, input: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let tweets = load_tweets(input, detect_format(input))?;
    let resolver = config.resolver()?;
    let shorteners = promo::cleanse::default_shorteners();
    let mut lines = String::new();
    let mut kept = 0;
    for tweet in &tweets {
        let clean = normalize_with(tweet, resolver.as_ref(), config.english.threshold, &shorteners);
        kept += clean.kept as usize;
        let record = serde_json::json!({
            "id": tweet.id,
            "kept": clean.kept,
            "text": clean.text,
            "urls": clean.resolved_urls.iter().map(|r| r.final_url.clone()).collect::<Vec<_>>(),
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    match out {
        Some(path) => {
            fs::write(path, &lines).map_err(|e| Error::io(path, e))?;
            println!("cleansed {} tweets ({kept} kept) -> {}", tweets.len(), path.display());
        }
        None => print!("{lines}"),
    }
    Ok(())
}

fn cmd_extract(config: &PipelineConfig, input: &Path, out: &Path) -> anyhow::Result<()> {
    let tweets = load_tweets(input, detect_format(input))?;
    let lexicon = config.lexicon()?;
    let resolver = config.resolver()?;
    let shorteners = promo::cleanse::default_shorteners();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for tweet in &tweets {
        let clean = normalize_with(tweet, resolver.as_ref(), config.english.threshold, &shorteners);
        if !clean.kept {
            skipped += 1;
            continue;
        }
        rows.push(extract(&clean, &lexicon, &config.weights)?);
    }
    let dataset = Dataset {
        rows,
        source: input.display().to_string(),
    };
    promo::corpus::save_feature_csv(out, &dataset)?;
    println!(
        "extracted {} rows ({skipped} skipped) -> {}",
        dataset.rows.len(),
        out.display()
    );
    Ok(())
}

fn cmd_intent(config: &PipelineConfig, text: &str, show_rules: bool) -> anyhow::Result<()> {
    let lexicon = config.lexicon()?;
    let tags = tag_entities(&tokenize(text), &lexicon);
    let direction = comparison_direction(&tags.matches);
    let result = predict_intent(&tags, direction, &config.weights);
    let verdict = if result.promotional { "promotional" } else { "none" };
    println!("verdict: {verdict} (score {:.6})", result.score);
    if show_rules {
        let fires = explain(&tags, direction, &config.weights);
        let mut total = 0.0;
        for fire in &fires {
            total += fire.contribution;
            println!("{:<24} {:+.2}", fire.rule, fire.contribution);
        }
        println!("{:<24} {total:+.2}", "evidence total");
    }
    Ok(())
}

fn cmd_train(config: &PipelineConfig, input: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let data = load_feature_csv(input)?;
    let model = bayes::fit(&data)?;
    let path = out.unwrap_or(&config.model.path);
    model.save(path)?;
    let promotional = data.rows.iter().filter(|r| r.label == Some(true)).count();
    println!(
        "trained on {} rows ({promotional} promotional) -> {}",
        data.rows.len(),
        path.display()
    );
    Ok(())
}

fn cmd_predict(
    config: &PipelineConfig,
    input: &Path,
    features: bool,
    model_path: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let path = model_path.unwrap_or(&config.model.path);
    let model = BayesModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
    if features {
        let data = load_feature_csv(input)?;
        let promotional = predict_rows(&data, &model, out)?;
        println!(
            "predicted {} rows ({promotional} promotional) -> {}",
            data.rows.len(),
            out.display()
        );
    } else {
        let summary = run_pipeline(input, config, &model, out)?;
        for (id, reason) in &summary.skipped {
            println!("skipped {id}: {reason}");
        }
        println!(
            "scored {} of {} tweets ({} promotional) -> {}",
            summary.kept,
            summary.total,
            summary.predicted_promotional,
            out.display()
        );
    }
    Ok(())
}

fn format_report(report: &EvalReport, k: usize, seed: u64) -> String {
    let cm = report.confusion;
    let total = cm.total();
    let correct = cm.true_positives + cm.true_negatives;
    let mut text = String::new();
    let _ = writeln!(text, "=== Stratified cross-validation (k={k}, seed={seed}) ===");
    let _ = writeln!(
        text,
        "Correctly classified instances   {correct:>5}   {:8.4} %",
        report.accuracy * 100.0
    );
    let _ = writeln!(
        text,
        "Incorrectly classified instances {:>5}   {:8.4} %",
        total - correct,
        (1.0 - report.accuracy) * 100.0
    );
    let _ = writeln!(text, "Kappa statistic                  {:12.4}", report.kappa);
    let _ = writeln!(text, "Mean absolute error              {:12.4}", report.mae);
    let _ = writeln!(text, "Root mean squared error          {:12.4}", report.rmse);
    let _ = writeln!(text, "Relative absolute error          {:10.4} %", report.rae * 100.0);
    let _ = writeln!(text, "Root relative squared error      {:10.4} %", report.rrse * 100.0);
    let _ = writeln!(text, "Total number of instances        {total:>5}");
    let _ = writeln!(text);
    let _ = writeln!(text, "=== Detailed accuracy by class ===");
    let _ = writeln!(
        text,
        "{:<14}{:>8}{:>9}{:>11}{:>8}{:>11}{:>7}{:>10}  Class",
        "", "TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "MCC", "ROC Area"
    );
    let class_line = |label: &str, name: &str, m: &promo::eval::ClassMetrics| {
        format!(
            "{:<14}{:>8.3}{:>9.3}{:>11.3}{:>8.3}{:>11.3}{:>7.3}{:>10.3}  {name}",
            label, m.tp_rate, m.fp_rate, m.precision, m.recall, m.f_measure, m.mcc, m.roc_area
        )
    };
    let _ = writeln!(text, "{}", class_line("", "promotional", &report.promotional));
    let _ = writeln!(text, "{}", class_line("", "none", &report.none));
    let _ = writeln!(text, "{}", class_line("Weighted avg", "", &report.weighted));
    let _ = writeln!(text);
    let _ = writeln!(text, "=== Confusion matrix ===");
    let _ = writeln!(text, "    a    b   <- classified as");
    let _ = writeln!(text, "{:>5}{:>5} |  a = promotional", cm.true_positives, cm.false_negatives);
    let _ = writeln!(text, "{:>5}{:>5} |  b = none", cm.false_positives, cm.true_negatives);
    if !report.degenerate.is_empty() {
        let _ = writeln!(text, "zeroed metrics: {}", report.degenerate.join(", "));
    }
    text
}

fn cmd_crossval(
    input: &Path,
    k: usize,
    seed: u64,
    out: Option<&Path>,
    use_intent: bool,
    no_timestamp: bool,
) -> anyhow::Result<()> {
    let data = load_feature_csv(input)?;
    let report = cross_validate(&data, k, seed, use_intent)?;
    timestamp_header(no_timestamp);
    print!("{}", format_report(&report, k, seed));
    if let Some(path) = out {
        let mut body = serde_json::to_string_pretty(&report)?;
        body.push('\n');
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
        println!("report written -> {}", path.display());
    }
    Ok(())
}

fn cmd_report(input: &Path, no_timestamp: bool) -> anyhow::Result<()> {
    let data = load_feature_csv(input)?;
    let stats = attribute_report(&data)?;
    let promotional = data.rows.iter().filter(|r| r.label == Some(true)).count();
    let none = data.rows.len() - promotional;
    timestamp_header(no_timestamp);
    println!(
        "=== Attribute contingency ({} rows: {promotional} promotional, {none} none) ===",
        data.rows.len()
    );
    println!(
        "{:<22}{:>10}{:>10}{:>10}{:>10}  {}",
        "Attribute", "yes:promo", "yes:none", "no:promo", "no:none", "promo share (yes)"
    );
    for stat in &stats {
        let yes_total = stat.promotional_yes + stat.none_yes;
        let share = if yes_total == 0 {
            "-".to_string()
        } else {
            format!("{}/{yes_total}", stat.promotional_yes)
        };
        println!(
            "{:<22}{:>10}{:>10}{:>10}{:>10}  {share}",
            stat.name, stat.promotional_yes, stat.none_yes, stat.promotional_no, stat.none_no
        );
    }
    Ok(())
}
