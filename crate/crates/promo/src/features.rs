//! Attribute extraction: URL verdicts, text flags, and the intent attribute.

use crate::cleanse::{CleanTweet, UrlResolution};
use crate::corpus::FeatureVector;
use crate::error::{Error, Result};
use crate::intent::{comparison_direction, predict_intent, tag_entities, RuleWeights};
use crate::lexicon::{tokenize, Category, Lexicon};
use crate::textutil::mask_urls;

/// Competitor names that disqualify a link from counting as Microsoft-specific.
const COMPETITOR_URL_TERMS: [&str; 8] = [
    "aws", "amazon", "google", "oracle", "gcp", "facebook", "skype", "ec2",
];

/// What the tweet's links say about who is being promoted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlVerdict {
    pub has_url: bool,
    pub microsoft_specific: bool,
    /// Where the deciding brand term was found: "host-substring",
    /// "title-substring", or "none".
    pub evidence: String,
}

/// A link is Microsoft-specific when its final URL or page title names
/// microsoft/azure and no competitor anywhere in either.
pub fn analyze_urls(resolved: &[UrlResolution]) -> UrlVerdict {
    let mut verdict = UrlVerdict {
        has_url: !resolved.is_empty(),
        microsoft_specific: false,
        evidence: "none".to_string(),
    };
    for r in resolved {
        let hay = format!("{} {}", r.final_url, r.title).to_lowercase();
        let brand = hay.contains("microsoft") || hay.contains("azure");
        let rival = COMPETITOR_URL_TERMS.iter().any(|c| hay.contains(c));
        if brand && !rival {
            verdict.microsoft_specific = true;
            if verdict.evidence == "none" {
                let host = r.final_url.to_lowercase();
                verdict.evidence = if host.contains("microsoft") || host.contains("azure") {
                    "host-substring".to_string()
                } else {
                    "title-substring".to_string()
                };
            }
        }
    }
    verdict
}

/// Extract the attribute vector for a kept tweet. Category flags come from
/// the unexpanded token stream; the intent attribute runs the rule engine.
pub fn extract(clean: &CleanTweet, lexicon: &Lexicon, weights: &RuleWeights) -> Result<FeatureVector> {
    if !clean.kept {
        return Err(Error::Filtered);
    }
    let tokens = tokenize(&clean.text);
    let matches = lexicon.find_matches(&tokens);
    let category_present =
        |cat: Category| matches.iter().any(|m| m.category == cat);

    let verdict = analyze_urls(&clean.resolved_urls);
    let masked = mask_urls(&clean.text);

    let tags = tag_entities(&tokens, lexicon);
    let direction = comparison_direction(&tags.matches);
    let intent = predict_intent(&tags, direction, weights);

    Ok(FeatureVector {
        contains_url: verdict.has_url,
        microsoft_url: verdict.microsoft_specific,
        contains_azure_word: category_present(Category::AzureFeature),
        contains_exclamation: masked.contains('!'),
        contains_colon: masked.contains(':'),
        contains_question_mark: masked.contains('?'),
        contains_keyword: category_present(Category::Announcement),
        mentions_competitor: category_present(Category::AzureCompetitor),
        contains_benefit: category_present(Category::CloudBenefit),
        intent: intent.promotional,
        intent_score: intent.score,
        label: None,
    })
}
