//! Naive Bayes over the binary attributes plus a Gaussian intent score.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, FeatureVector};
use crate::error::{Error, Result};

/// Model file format tag; bump on incompatible layout changes.
const FORMAT_TAG: &str = "promo-nb/1";

/// Variance floor keeping degenerate classes finite.
const VAR_FLOOR: f64 = 1e-4;

/// Laplace-smoothed conditional probabilities of one binary attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttrTable {
    pub name: String,
    /// P(attribute = yes | promotional)
    pub p_promo: f64,
    /// P(attribute = yes | none)
    pub p_none: f64,
}

/// Per-class Gaussian over the rule engine's confidence score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGauss {
    pub promo_mean: f64,
    pub promo_var: f64,
    pub none_mean: f64,
    pub none_var: f64,
}

/// A fitted classifier; attribute count decides how many flags it consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesModel {
    pub prior_promotional: f64,
    pub prior_none: f64,
    pub attributes: Vec<AttrTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_gauss: Option<ScoreGauss>,
}

/// Normalized class probabilities for one prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub promotional: f64,
    pub none: f64,
}

/// Fit on all ten attributes plus the score Gaussian.
pub fn fit(data: &Dataset) -> Result<BayesModel> {
    fit_impl(data, 10, true)
}

/// Fit without the intent attribute or score — the ablation model.
pub fn fit_without_intent(data: &Dataset) -> Result<BayesModel> {
    fit_impl(data, 9, false)
}

fn fit_impl(data: &Dataset, n_attr: usize, with_gauss: bool) -> Result<BayesModel> {
    let mut labeled = Vec::with_capacity(data.rows.len());
    for (i, row) in data.rows.iter().enumerate() {
        let label = row.label.ok_or(Error::Unlabeled { row: i + 1 })?;
        labeled.push((row, label));
    }
    let pos: Vec<&FeatureVector> = labeled.iter().filter(|(_, l)| *l).map(|(r, _)| *r).collect();
    let neg: Vec<&FeatureVector> = labeled.iter().filter(|(_, l)| !*l).map(|(r, _)| *r).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::NeedBothClasses);
    }
    let n = labeled.len() as f64;
    let attributes = (0..n_attr)
        .map(|i| AttrTable {
            name: FeatureVector::FLAG_NAMES[i].to_string(),
            p_promo: (pos.iter().filter(|r| r.flags()[i]).count() as f64 + 1.0)
                / (pos.len() as f64 + 2.0),
            p_none: (neg.iter().filter(|r| r.flags()[i]).count() as f64 + 1.0)
                / (neg.len() as f64 + 2.0),
        })
        .collect();
    let score_gauss = with_gauss.then(|| {
        let stats = |rows: &[&FeatureVector]| -> (f64, f64) {
            let mean = rows.iter().map(|r| r.intent_score).sum::<f64>() / rows.len() as f64;
            let var = if rows.len() > 1 {
                rows.iter()
                    .map(|r| (r.intent_score - mean).powi(2))
                    .sum::<f64>()
                    / (rows.len() - 1) as f64
            } else {
                VAR_FLOOR
            };
            (mean, var.max(VAR_FLOOR))
        };
        let (promo_mean, promo_var) = stats(&pos);
        let (none_mean, none_var) = stats(&neg);
        ScoreGauss {
            promo_mean,
            promo_var,
            none_mean,
            none_var,
        }
    });
    Ok(BayesModel {
        prior_promotional: (pos.len() as f64 + 1.0) / (n + 2.0),
        prior_none: (neg.len() as f64 + 1.0) / (n + 2.0),
        attributes,
        score_gauss,
    })
}

fn log_gauss(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

/// Max-shifted exponentiation of two log joints into probabilities.
pub(crate) fn normalize_pair(log_promo: f64, log_none: f64) -> (f64, f64) {
    let shift = log_promo.max(log_none);
    let zp = (log_promo - shift).exp();
    let zn = (log_none - shift).exp();
    (zp / (zp + zn), zn / (zp + zn))
}

impl BayesModel {
    /// MAP prediction in log space; an exact tie goes to none.
    pub fn predict(&self, row: &FeatureVector) -> Result<(bool, Posterior)> {
        if !(0.0..=1.0).contains(&row.intent_score) {
            return Err(Error::ScoreOutOfRange {
                value: row.intent_score,
            });
        }
        let flags = row.flags();
        let mut log_promo = self.prior_promotional.ln();
        let mut log_none = self.prior_none.ln();
        for (i, table) in self.attributes.iter().enumerate() {
            let (p, q) = if flags[i] {
                (table.p_promo, table.p_none)
            } else {
                (1.0 - table.p_promo, 1.0 - table.p_none)
            };
            log_promo += p.ln();
            log_none += q.ln();
        }
        if let Some(g) = &self.score_gauss {
            log_promo += log_gauss(row.intent_score, g.promo_mean, g.promo_var);
            log_none += log_gauss(row.intent_score, g.none_mean, g.none_var);
        }
        let (promotional, none) = normalize_pair(log_promo, log_none);
        Ok((
            promotional > 0.5,
            Posterior { promotional, none },
        ))
    }

    /// Write the model as a tagged TOML document.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tables = toml::to_string_pretty(self).map_err(|e| Error::Model {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let body = format!("format = {FORMAT_TAG:?}\n{tables}");
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    /// Read a model back, refusing unknown format tags.
    pub fn load(path: &Path) -> Result<BayesModel> {
        let invalid = |msg: String| Error::Model {
            path: path.to_path_buf(),
            msg,
        };
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = toml::from_str(&body).map_err(|e| invalid(e.to_string()))?;
        match table.get("format").and_then(|v| v.as_str()) {
            Some(FORMAT_TAG) => {}
            other => return Err(invalid(format!("unsupported format {other:?}"))),
        }
        BayesModel::deserialize(toml::Value::Table(table)).map_err(|e| invalid(e.to_string()))
    }
}
