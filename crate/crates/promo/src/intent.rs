//! Rule-based promotional-intent scoring over tagged entities.

use serde::{Deserialize, Serialize};

use crate::lexicon::{quantified_impact, Category, Lexicon, Match};
use crate::textutil::expand_url_tokens;

/// Who a comparison favors, if anyone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AzureOverCompetitor,
    CompetitorOverAzure,
    Equal,
}

/// Additive rule weights; the defaults are the calibrated engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleWeights {
    pub azure_positive: f64,
    pub announcement_feature: f64,
    pub favorable_comparison: f64,
    pub quantified_feature: f64,
    pub competitor_benefit: f64,
    pub unfavorable_comparison: f64,
    pub no_feature: f64,
}

impl Default for RuleWeights {
    fn default() -> Self {
        RuleWeights {
            azure_positive: 1.2,
            announcement_feature: 0.6,
            favorable_comparison: 1.0,
            quantified_feature: 0.4,
            competitor_benefit: 1.5,
            unfavorable_comparison: 1.5,
            no_feature: 1.0,
        }
    }
}

/// Entity evidence extracted from one tweet's tokens.
#[derive(Debug, Clone)]
pub struct EntityTags {
    pub matches: Vec<Match>,
    /// Tokens after URL expansion — the stream `matches` spans refer to.
    pub tokens: Vec<String>,
    pub has_announcement: bool,
    pub has_benefit: bool,
    pub has_competitor: bool,
    pub has_feature: bool,
    pub has_function: bool,
    pub has_quantified: bool,
    /// Azure named alongside positive context.
    pub azure_positive: bool,
}

/// The engine's verdict for one tweet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentResult {
    pub promotional: bool,
    /// Confidence in [0.5, 1) for whichever side was picked.
    pub score: f64,
}

/// One fired rule and its signed contribution to the evidence total.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleFire {
    pub rule: &'static str,
    pub contribution: f64,
}

const BRAND_WORDS: [&str; 3] = ["azure", "microsoft", "ms"];

/// Announcement phrases that only signal promotion with Azure as the subject.
const AZURE_CONTEXT: [&str; 7] = [
    "using azure",
    "with azure",
    "on azure",
    "in azure",
    "for azure",
    "by azure",
    "to azure",
];

fn mentions_brand(phrase: &str) -> bool {
    phrase.split(' ').any(|w| BRAND_WORDS.contains(&w))
}

/// Tag entities over URL-expanded tokens. A feature match owned by an
/// immediately preceding competitor mention is suppressed from the flags
/// (the match itself is still reported).
pub fn tag_entities(tokens: &[String], lexicon: &Lexicon) -> EntityTags {
    let tokens = expand_url_tokens(tokens);
    let mut matches = lexicon.find_matches(&tokens);
    matches.extend(quantified_impact(&tokens));

    let competitor_spans: Vec<(usize, usize)> = matches
        .iter()
        .filter(|m| m.category == Category::AzureCompetitor)
        .map(|m| (m.start, m.end))
        .collect();
    let competitor_owned = |m: &Match| {
        !mentions_brand(&m.phrase)
            && competitor_spans
                .iter()
                .any(|&(_, ce)| ce <= m.start && m.start - ce <= 2)
    };

    let mut tags = EntityTags {
        matches: Vec::new(),
        tokens,
        has_announcement: false,
        has_benefit: false,
        has_competitor: false,
        has_feature: false,
        has_function: false,
        has_quantified: false,
        azure_positive: false,
    };
    for m in &matches {
        match m.category {
            Category::Announcement => tags.has_announcement = true,
            Category::CloudBenefit => tags.has_benefit = true,
            Category::AzureCompetitor => tags.has_competitor = true,
            Category::AzureFeature => {
                if !competitor_owned(m) {
                    tags.has_feature = true;
                }
            }
            Category::CloudFunction => tags.has_function = true,
            Category::QuantifiedImpactPatterns => tags.has_quantified = true,
            _ => {}
        }
    }
    tags.matches = matches;

    tags.azure_positive = tags.has_feature
        && (tags.has_benefit || tags.has_announcement || tags.has_function);
    if !tags.azure_positive {
        // Announcement idioms like "on azure" imply the feature context.
        let azure_ctx = tags.matches.iter().any(|m| {
            m.category == Category::Announcement && AZURE_CONTEXT.contains(&m.phrase.as_str())
        });
        if azure_ctx && (tags.has_benefit || tags.has_function) {
            tags.azure_positive = true;
        }
    }
    tags
}

/// Single-word comparators too ambiguous to stand alone.
const AMBIGUOUS_COMPARATORS: [&str; 12] = [
    "or", "any", "either", "even", "same", "over", "above", "under", "below", "less", "lower",
    "best",
];

fn is_comparison(category: Category) -> bool {
    matches!(
        category,
        Category::EqualComparison | Category::NegComparison | Category::PosComparison
    )
}

/// Resolve who a comparison favors: the first credible comparator, its
/// nearest preceding subject and following object, Azure vs competitor only.
pub fn comparison_direction(matches: &[Match]) -> Option<Direction> {
    let mut comparisons: Vec<&Match> = matches
        .iter()
        .filter(|m| is_comparison(m.category))
        .collect();
    comparisons.sort_by_key(|m| m.start);
    let all: Vec<&Match> = comparisons.clone();
    comparisons.retain(|c| {
        if !(c.end - c.start == 1 && AMBIGUOUS_COMPARATORS.contains(&c.phrase.as_str())) {
            return true;
        }
        // An ambiguous single word counts only beside another comparator.
        all.iter().any(|o| {
            !std::ptr::eq(*o, *c)
                && ((o.end as i64 - c.start as i64).abs() <= 1
                    || (c.end as i64 - o.start as i64).abs() <= 1)
        })
    });
    let comp = comparisons.first()?;

    let mut mentions: Vec<&Match> = matches
        .iter()
        .filter(|m| {
            matches!(
                m.category,
                Category::AzureFeature | Category::AzureCompetitor
            )
        })
        .collect();
    mentions.sort_by_key(|m| (m.start, m.end));
    let subject = mentions
        .iter()
        .filter(|m| m.end <= comp.start)
        .last()?;
    let object = mentions.iter().find(|m| m.start >= comp.end)?;
    if subject.category == object.category {
        return None;
    }
    let azure_subject = subject.category == Category::AzureFeature;
    Some(match comp.category {
        Category::EqualComparison => Direction::Equal,
        Category::PosComparison => {
            if azure_subject {
                Direction::AzureOverCompetitor
            } else {
                Direction::CompetitorOverAzure
            }
        }
        _ => {
            if azure_subject {
                Direction::CompetitorOverAzure
            } else {
                Direction::AzureOverCompetitor
            }
        }
    })
}

/// Each rule that fires, with its signed evidence contribution.
pub fn explain(
    tags: &EntityTags,
    direction: Option<Direction>,
    weights: &RuleWeights,
) -> Vec<RuleFire> {
    let mut fires = Vec::new();
    let mut fire = |rule: &'static str, contribution: f64| {
        fires.push(RuleFire { rule, contribution })
    };
    if tags.azure_positive {
        fire("azure-positive", weights.azure_positive);
    }
    if tags.has_announcement && tags.has_feature {
        fire("announcement-of-feature", weights.announcement_feature);
    }
    if direction == Some(Direction::AzureOverCompetitor) {
        fire("favorable-comparison", weights.favorable_comparison);
    }
    if tags.has_quantified && tags.has_feature {
        fire("quantified-feature", weights.quantified_feature);
    }
    if tags.has_benefit && tags.has_competitor && !tags.has_feature {
        fire("competitor-benefit", -weights.competitor_benefit);
    }
    if direction == Some(Direction::CompetitorOverAzure) {
        fire("unfavorable-comparison", -weights.unfavorable_comparison);
    }
    if !tags.has_feature {
        fire("no-feature", -weights.no_feature);
    }
    fires
}

/// Sum the evidence and squash to a confidence: promotional iff positive.
pub fn predict_intent(
    tags: &EntityTags,
    direction: Option<Direction>,
    weights: &RuleWeights,
) -> IntentResult {
    let evidence: f64 = explain(tags, direction, weights)
        .iter()
        .map(|f| f.contribution)
        .sum();
    IntentResult {
        promotional: evidence > 0.0,
        score: 0.5 + 0.5 * evidence.abs().tanh(),
    }
}
