//! Evaluation: confusion metrics, error rates, ROC, and cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bayes;
use crate::corpus::{Dataset, FeatureVector};
use crate::error::{Error, Result};

/// Counts with promotional as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_negatives + self.false_positives + self.true_negatives
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_positives + self.true_negatives) as f64 / self.total() as f64
    }
}

/// One class's view of the table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub roc_area: f64,
}

/// The full evaluation summary for one prediction run.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub kappa: f64,
    pub mae: f64,
    pub rmse: f64,
    pub rae: f64,
    pub rrse: f64,
    pub promotional: ClassMetrics,
    pub none: ClassMetrics,
    pub weighted: ClassMetrics,
    pub confusion: ConfusionMatrix,
    /// Metrics zeroed because their denominator vanished.
    pub degenerate: Vec<String>,
}

/// Tie-corrected Mann-Whitney ROC area; `probs` pairs (is_positive, score).
fn roc_area(probs: &[(bool, f64)]) -> Option<f64> {
    let n_pos = probs.iter().filter(|(y, _)| *y).count();
    let n_neg = probs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].1.total_cmp(&probs[b].1));
    let mut ranks = vec![0.0; probs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && probs[order[j + 1]].1 == probs[order[i]].1 {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let rank_sum: f64 = probs
        .iter()
        .zip(&ranks)
        .filter(|((y, _), _)| *y)
        .map(|(_, r)| *r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

struct Degenerate(Vec<String>);

impl Degenerate {
    /// `num/den`, recording `name` and yielding 0 when `den` vanishes.
    fn ratio(&mut self, name: &str, num: f64, den: f64) -> f64 {
        if den == 0.0 {
            self.0.push(name.to_string());
            0.0
        } else {
            num / den
        }
    }
}

fn class_metrics(
    tp: usize,
    fn_: usize,
    fp: usize,
    tn: usize,
    probs: &[(bool, f64)],
    class: &str,
    flagged: &mut Degenerate,
) -> ClassMetrics {
    let f = |x: usize| x as f64;
    let recall = flagged.ratio(&format!("recall/{class}"), f(tp), f(tp + fn_));
    let fp_rate = flagged.ratio(&format!("fp-rate/{class}"), f(fp), f(fp + tn));
    let precision = flagged.ratio(&format!("precision/{class}"), f(tp), f(tp + fp));
    let f_measure = flagged.ratio(
        &format!("f-measure/{class}"),
        2.0 * precision * recall,
        precision + recall,
    );
    let mcc_den = (f(tp + fp) * f(tp + fn_) * f(tn + fp) * f(tn + fn_)).sqrt();
    let mcc = flagged.ratio(
        &format!("mcc/{class}"),
        f(tp) * f(tn) - f(fp) * f(fn_),
        mcc_den,
    );
    let roc = match roc_area(probs) {
        Some(a) => a,
        None => {
            flagged.0.push(format!("roc/{class}"));
            0.0
        }
    };
    ClassMetrics {
        tp_rate: recall,
        fp_rate,
        precision,
        recall,
        f_measure,
        mcc,
        roc_area: roc,
    }
}

/// Compute the full report from a confusion matrix and per-row promotional
/// probabilities. Error rates are measured against the class-prior baseline.
pub fn compute_metrics(confusion: &ConfusionMatrix, probs: &[(bool, f64)]) -> EvalReport {
    assert_eq!(
        confusion.total(),
        probs.len(),
        "confusion totals must match probability rows"
    );
    let cm = *confusion;
    let n = cm.total() as f64;
    let n_pos = (cm.true_positives + cm.false_negatives) as f64;
    let n_neg = (cm.false_positives + cm.true_negatives) as f64;
    let mut flagged = Degenerate(Vec::new());

    let accuracy = cm.accuracy();
    let pred_pos = (cm.true_positives + cm.false_positives) as f64;
    let pred_neg = (cm.false_negatives + cm.true_negatives) as f64;
    let p_expected = (n_pos * pred_pos + n_neg * pred_neg) / (n * n);
    let kappa = flagged.ratio("kappa", accuracy - p_expected, 1.0 - p_expected);

    let residual = |p: &f64, y: bool| p - if y { 1.0 } else { 0.0 };
    let mae = probs
        .iter()
        .map(|(y, p)| residual(p, *y).abs())
        .sum::<f64>()
        / n;
    let rmse = (probs
        .iter()
        .map(|(y, p)| residual(p, *y).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    // The baseline predictor always answers the promotional prior.
    let prior = n_pos / n;
    let base_mae = probs
        .iter()
        .map(|(y, _)| residual(&prior, *y).abs())
        .sum::<f64>()
        / n;
    let base_rmse = (probs
        .iter()
        .map(|(y, _)| residual(&prior, *y).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let rae = flagged.ratio("rae", mae, base_mae);
    let rrse = flagged.ratio("rrse", rmse, base_rmse);

    let promotional = class_metrics(
        cm.true_positives,
        cm.false_negatives,
        cm.false_positives,
        cm.true_negatives,
        probs,
        "promotional",
        &mut flagged,
    );
    let flipped: Vec<(bool, f64)> = probs.iter().map(|(y, p)| (!*y, 1.0 - p)).collect();
    let none = class_metrics(
        cm.true_negatives,
        cm.false_positives,
        cm.false_negatives,
        cm.true_positives,
        &flipped,
        "none",
        &mut flagged,
    );
    let weigh = |a: f64, b: f64| (n_pos * a + n_neg * b) / n;
    let weighted = ClassMetrics {
        tp_rate: weigh(promotional.tp_rate, none.tp_rate),
        fp_rate: weigh(promotional.fp_rate, none.fp_rate),
        precision: weigh(promotional.precision, none.precision),
        recall: weigh(promotional.recall, none.recall),
        f_measure: weigh(promotional.f_measure, none.f_measure),
        mcc: weigh(promotional.mcc, none.mcc),
        roc_area: weigh(promotional.roc_area, none.roc_area),
    };

    EvalReport {
        accuracy,
        kappa,
        mae,
        rmse,
        rae,
        rrse,
        promotional,
        none,
        weighted,
        confusion: cm,
        degenerate: flagged.0,
    }
}

/// Per-attribute contingency counts against the label.
#[derive(Debug, Clone, Serialize)]
pub struct AttributeStats {
    pub name: String,
    pub promotional_yes: usize,
    pub none_yes: usize,
    pub promotional_no: usize,
    pub none_no: usize,
}

/// Count each binary attribute against the labels.
pub fn attribute_report(data: &Dataset) -> Result<Vec<AttributeStats>> {
    let mut out: Vec<AttributeStats> = FeatureVector::FLAG_NAMES
        .iter()
        .map(|name| AttributeStats {
            name: name.to_string(),
            promotional_yes: 0,
            none_yes: 0,
            promotional_no: 0,
            none_no: 0,
        })
        .collect();
    for (i, row) in data.rows.iter().enumerate() {
        let label = row.label.ok_or(Error::Unlabeled { row: i + 1 })?;
        for (stat, flag) in out.iter_mut().zip(row.flags()) {
            match (flag, label) {
                (true, true) => stat.promotional_yes += 1,
                (true, false) => stat.none_yes += 1,
                (false, true) => stat.promotional_no += 1,
                (false, false) => stat.none_no += 1,
            }
        }
    }
    Ok(out)
}

/// Stratified fold assignment: each class is shuffled independently, then
/// dealt round-robin with a cursor that continues across classes.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = data.rows.len();
    if k < 2 || k > n {
        return Err(Error::FoldCount { k, n });
    }
    let mut promotional = Vec::new();
    let mut none = Vec::new();
    for (i, row) in data.rows.iter().enumerate() {
        match row.label {
            Some(true) => promotional.push(i),
            Some(false) => none.push(i),
            None => return Err(Error::Unlabeled { row: i + 1 }),
        }
    }
    if promotional.is_empty() || none.is_empty() {
        return Err(Error::NeedBothClasses);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    promotional.shuffle(&mut rng);
    none.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for group in [promotional, none] {
        for idx in group {
            folds[cursor % k].push(idx);
            cursor += 1;
        }
    }
    Ok(folds)
}

/// k-fold cross-validation pooling the held-out predictions into one report.
pub fn cross_validate(data: &Dataset, k: usize, seed: u64, use_intent: bool) -> Result<EvalReport> {
    let folds = stratified_folds(data, k, seed)?;
    let mut confusion = ConfusionMatrix::default();
    let mut probs = Vec::with_capacity(data.rows.len());
    for fold in &folds {
        let held: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train = Dataset {
            rows: data
                .rows
                .iter()
                .enumerate()
                .filter(|(i, _)| !held.contains(i))
                .map(|(_, r)| r.clone())
                .collect(),
            source: data.source.clone(),
        };
        let model = if use_intent {
            bayes::fit(&train)?
        } else {
            bayes::fit_without_intent(&train)?
        };
        for &i in fold {
            let row = &data.rows[i];
            let actual = row.label.expect("labels checked by fold assignment");
            let (pred, posterior) = model.predict(row)?;
            match (actual, pred) {
                (true, true) => confusion.true_positives += 1,
                (true, false) => confusion.false_negatives += 1,
                (false, true) => confusion.false_positives += 1,
                (false, false) => confusion.true_negatives += 1,
            }
            probs.push((actual, posterior.promotional));
        }
    }
    Ok(compute_metrics(&confusion, &probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_feature_csv;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::path::Path;

    fn training() -> Dataset {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/training.csv");
        load_feature_csv(&path).unwrap()
    }

    fn hard_probs(cm: &ConfusionMatrix) -> Vec<(bool, f64)> {
        let mut probs = Vec::new();
        probs.extend(std::iter::repeat((true, 1.0)).take(cm.true_positives));
        probs.extend(std::iter::repeat((true, 0.0)).take(cm.false_negatives));
        probs.extend(std::iter::repeat((false, 1.0)).take(cm.false_positives));
        probs.extend(std::iter::repeat((false, 0.0)).take(cm.true_negatives));
        probs
    }

    #[test]
    fn reference_confusion_matrix_metrics() {
        let cm = ConfusionMatrix {
            true_positives: 24,
            false_negatives: 1,
            false_positives: 0,
            true_negatives: 13,
        };
        let report = compute_metrics(&cm, &hard_probs(&cm));
        assert_relative_eq!(report.accuracy, 37.0 / 38.0, epsilon = 1e-12);
        assert_relative_eq!(report.kappa, 624.0 / 662.0, epsilon = 1e-12);
        assert_relative_eq!(report.promotional.precision, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.promotional.recall, 0.96, epsilon = 1e-12);
        assert_relative_eq!(report.promotional.f_measure, 0.9795918367346939, epsilon = 1e-12);
        assert_relative_eq!(report.none.precision, 13.0 / 14.0, epsilon = 1e-12);
        assert_relative_eq!(report.none.recall, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.none.f_measure, 26.0 / 27.0, epsilon = 1e-12);
        let mcc = 312.0 / (24.0_f64 * 25.0 * 13.0 * 14.0).sqrt();
        assert_relative_eq!(report.promotional.mcc, mcc, epsilon = 1e-12);
        assert_relative_eq!(report.none.mcc, mcc, epsilon = 1e-12);
        assert_relative_eq!(report.weighted.precision, 0.9755639097744361, epsilon = 1e-12);
        assert!(report.degenerate.is_empty());
    }

    #[test]
    fn four_record_error_rates_match_closed_forms() {
        let cm = ConfusionMatrix {
            true_positives: 1,
            false_negatives: 1,
            false_positives: 1,
            true_negatives: 1,
        };
        let probs = vec![(true, 0.9), (true, 0.4), (false, 0.6), (false, 0.1)];
        let report = compute_metrics(&cm, &probs);
        assert_relative_eq!(report.accuracy, 0.5, epsilon = 1e-12);
        assert_relative_eq!(report.kappa, 0.0, epsilon = 1e-12);
        assert_relative_eq!(report.mae, 0.35, epsilon = 1e-12);
        assert_relative_eq!(report.rmse, 0.185_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(report.rae, 0.7, epsilon = 1e-12);
        assert_relative_eq!(report.rrse, 0.185_f64.sqrt() / 0.5, epsilon = 1e-12);
        assert_relative_eq!(report.promotional.roc_area, 0.75, epsilon = 1e-12);
        assert_relative_eq!(report.none.roc_area, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn tied_scores_average_their_ranks() {
        let probs = vec![(true, 0.5), (false, 0.5), (true, 0.9), (false, 0.1)];
        // Pairs: (0.5 vs 0.5) ties 0.5, rest fully ordered -> 3.5 / 4.
        assert_relative_eq!(roc_area(&probs).unwrap(), 0.875, epsilon = 1e-12);
    }

    #[test]
    fn perfect_predictions_peg_every_metric() {
        let cm = ConfusionMatrix {
            true_positives: 3,
            false_negatives: 0,
            false_positives: 0,
            true_negatives: 2,
        };
        let report = compute_metrics(&cm, &hard_probs(&cm));
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.kappa, 1.0);
        assert_eq!(report.mae, 0.0);
        assert_eq!(report.rae, 0.0);
        assert_eq!(report.promotional.roc_area, 1.0);
        assert_eq!(report.promotional.mcc, 1.0);
    }

    #[test]
    fn majority_voting_zeroes_kappa_and_flags_precision() {
        let cm = ConfusionMatrix {
            true_positives: 5,
            false_negatives: 0,
            false_positives: 3,
            true_negatives: 0,
        };
        let report = compute_metrics(&cm, &hard_probs(&cm));
        assert_relative_eq!(report.kappa, 0.0, epsilon = 1e-12);
        assert_eq!(report.none.precision, 0.0);
        assert!(report.degenerate.iter().any(|d| d == "precision/none"));
    }

    #[test]
    fn training_attribute_contingencies_match_the_reference_counts() {
        let stats = attribute_report(&training()).unwrap();
        let yes: Vec<(usize, usize)> = stats
            .iter()
            .map(|s| (s.promotional_yes, s.none_yes))
            .collect();
        assert_eq!(
            yes,
            vec![
                (20, 7), // ContainsURL
                (18, 0), // MicrosoftURL
                (22, 4), // ContainsAzureWord
                (5, 1),  // ContainsExclamation
                (2, 0),  // ContainsColon
                (1, 1),  // ContainsQuestionMark
                (19, 5), // ContainsKeyword
                (2, 7),  // MentionsCompetitor
                (12, 4), // ContainsBenefit
                (25, 0), // Intent
            ]
        );
        for s in &stats {
            assert_eq!(s.promotional_yes + s.promotional_no, 25);
            assert_eq!(s.none_yes + s.none_no, 13);
        }
    }

    #[test]
    fn fold_sizes_and_class_balance_hold_on_the_training_corpus() {
        let data = training();
        let folds = stratified_folds(&data, 10, 3).unwrap();
        assert_eq!(folds.len(), 10);
        let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..38).collect::<Vec<_>>());
        for fold in &folds {
            assert!((3..=4).contains(&fold.len()));
            let promo = fold
                .iter()
                .filter(|&&i| data.rows[i].label.unwrap())
                .count();
            assert!((2..=3).contains(&promo), "promotional count {promo}");
        }
    }

    #[test]
    fn fold_assignment_is_seed_deterministic() {
        let data = training();
        assert_eq!(
            stratified_folds(&data, 10, 5).unwrap(),
            stratified_folds(&data, 10, 5).unwrap()
        );
        assert_ne!(
            stratified_folds(&data, 10, 5).unwrap(),
            stratified_folds(&data, 10, 6).unwrap()
        );
    }

    #[test]
    fn fold_count_bounds_are_enforced() {
        let data = training();
        assert!(matches!(
            stratified_folds(&data, 1, 1).unwrap_err(),
            Error::FoldCount { k: 1, n: 38 }
        ));
        assert!(matches!(
            stratified_folds(&data, 39, 1).unwrap_err(),
            Error::FoldCount { k: 39, n: 38 }
        ));
        // Leave-one-out is legal.
        assert_eq!(stratified_folds(&data, 38, 1).unwrap().len(), 38);
    }

    #[test]
    fn cross_validation_stays_in_the_reference_band() {
        let data = training();
        for seed in [1, 7] {
            let report = cross_validate(&data, 10, seed, true).unwrap();
            assert!(
                report.accuracy >= 34.0 / 38.0,
                "seed {seed} accuracy {}",
                report.accuracy
            );
            assert_eq!(report.confusion.total(), 38);
        }
    }

    #[test]
    fn dropping_the_intent_attribute_costs_accuracy() {
        let data = training();
        let with = cross_validate(&data, 10, 1, true).unwrap();
        let without = cross_validate(&data, 10, 1, false).unwrap();
        assert!(
            with.accuracy > without.accuracy,
            "with {} vs without {}",
            with.accuracy,
            without.accuracy
        );
    }

    proptest! {
        #[test]
        fn folds_partition_the_rows(k in 2usize..10, seed in 0u64..50) {
            let data = training();
            let folds = stratified_folds(&data, k, seed).unwrap();
            let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..data.rows.len()).collect::<Vec<_>>());
        }

        #[test]
        fn kappa_is_one_exactly_for_error_free_tables(
            tp in 1usize..30,
            fn_ in 0usize..30,
            fp in 0usize..30,
            tn in 1usize..30,
        ) {
            let cm = ConfusionMatrix {
                true_positives: tp,
                false_negatives: fn_,
                false_positives: fp,
                true_negatives: tn,
            };
            let report = compute_metrics(&cm, &hard_probs(&cm));
            let perfect = fp == 0 && fn_ == 0;
            prop_assert_eq!((report.kappa - 1.0).abs() < 1e-12, perfect);
        }

        #[test]
        fn separated_scores_give_unit_roc(
            pos in proptest::collection::vec(0.6..1.0f64, 1..10),
            neg in proptest::collection::vec(0.0..0.4f64, 1..10),
        ) {
            let probs: Vec<(bool, f64)> = pos
                .into_iter()
                .map(|p| (true, p))
                .chain(neg.into_iter().map(|p| (false, p)))
                .collect();
            prop_assert!((roc_area(&probs).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn metrics_stay_in_their_ranges(
            tp in 0usize..20,
            fn_ in 0usize..20,
            fp in 0usize..20,
            tn in 0usize..20,
        ) {
            prop_assume!(tp + fn_ + fp + tn > 0);
            let cm = ConfusionMatrix {
                true_positives: tp,
                false_negatives: fn_,
                false_positives: fp,
                true_negatives: tn,
            };
            let report = compute_metrics(&cm, &hard_probs(&cm));
            prop_assert!((0.0..=1.0).contains(&report.accuracy));
            prop_assert!((-1.0..=1.0).contains(&report.kappa));
            prop_assert!((-1.0..=1.0).contains(&report.promotional.mcc));
            prop_assert!((0.0..=1.0).contains(&report.promotional.roc_area));
            prop_assert!(report.mae >= 0.0 && report.rae >= 0.0 && report.rrse >= 0.0);
        }
    }
}
