//! Decision parsing and bias metrics.

use std::collections::{BTreeMap, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::scenario::{CrBucket, NewsvendorScenario, Split};
use super::BiasError;

/// One line of a decisions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub scenario_id: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub scenario_id: String,
    /// `None` when the response is irrational.
    pub q: Option<f64>,
    pub raw_response: String,
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][-+]?\d+)?").expect("valid regex")
});

/// The last number in the response. Negative or non-finite values, and
/// responses without a number, are irrational.
pub fn parse_decision(rec: &DecisionRecord) -> Decision {
    let q = NUMBER
        .find_iter(&rec.response)
        .last()
        .and_then(|m| m.as_str().replace(',', "").parse::<f64>().ok())
        .filter(|q| q.is_finite() && *q >= 0.0);
    Decision {
        scenario_id: rec.scenario_id.clone(),
        q,
        raw_response: rec.response.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub n: usize,
    pub rational: usize,
    pub mean_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub decisions: usize,
    /// Percent of decisions that parse to a finite nonnegative quantity.
    pub rationality: f64,
    /// |E[Q/Q*|CR>0.5] − E[Q/Q*|CR<0.5]| in percent; `None` if either side is empty.
    pub bias_diff: Option<f64>,
    pub mean_ratio_high_cr: Option<f64>,
    pub mean_ratio_low_cr: Option<f64>,
    pub per_bucket: BTreeMap<CrBucket, BucketStats>,
    pub per_level: BTreeMap<u8, BucketStats>,
    pub id_bias: Option<f64>,
    pub ood_bias: Option<f64>,
    /// ood_bias − id_bias.
    pub drift: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn bias_diff(pairs: &[(&NewsvendorScenario, f64)]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let high: Vec<f64> = pairs
        .iter()
        .filter(|(s, _)| s.cr > 0.5)
        .map(|p| p.1)
        .collect();
    let low: Vec<f64> = pairs
        .iter()
        .filter(|(s, _)| s.cr < 0.5)
        .map(|p| p.1)
        .collect();
    let (h, l) = (mean(&high), mean(&low));
    let diff = h.zip(l).map(|(h, l)| 100.0 * (h - l).abs());
    (diff, h, l)
}

fn stats<'a>(items: impl Iterator<Item = (&'a NewsvendorScenario, Option<f64>)>) -> BucketStats {
    let mut n = 0;
    let mut ratios = Vec::new();
    for (_, r) in items {
        n += 1;
        ratios.extend(r);
    }
    BucketStats {
        n,
        rational: ratios.len(),
        mean_ratio: mean(&ratios),
    }
}

/// Bias metrics over `decisions`. Only rational decisions enter the ratio
/// means; scenarios with CR exactly 0.5 sit on neither side of the bias gap.
pub fn evaluate_bias(
    decisions: &[Decision],
    scenarios: &[NewsvendorScenario],
) -> Result<BiasReport, BiasError> {
    let by_id: HashMap<&str, &NewsvendorScenario> =
        scenarios.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut rows: Vec<(&NewsvendorScenario, Option<f64>)> = Vec::with_capacity(decisions.len());
    for d in decisions {
        let sc = by_id
            .get(d.scenario_id.as_str())
            .ok_or_else(|| BiasError::UnknownScenario(d.scenario_id.clone()))?;
        rows.push((sc, d.q.map(|q| q / sc.q_opt)));
    }
    let rational: Vec<(&NewsvendorScenario, f64)> = rows
        .iter()
        .filter_map(|(s, r)| r.map(|r| (*s, r)))
        .collect();
    let rationality = if rows.is_empty() {
        0.0
    } else {
        100.0 * rational.len() as f64 / rows.len() as f64
    };
    let (diff, high, low) = bias_diff(&rational);
    let split_bias = |split: Split| {
        let sub: Vec<_> = rational
            .iter()
            .filter(|(s, _)| s.split == split)
            .copied()
            .collect();
        bias_diff(&sub).0
    };
    let (id_bias, ood_bias) = (split_bias(Split::Id), split_bias(Split::Ood));
    let per_bucket = CrBucket::ALL
        .iter()
        .filter(|b| rows.iter().any(|(s, _)| s.cr_bucket == **b))
        .map(|&b| {
            (
                b,
                stats(rows.iter().filter(|(s, _)| s.cr_bucket == b).copied()),
            )
        })
        .collect();
    let mut levels: Vec<u8> = rows.iter().map(|(s, _)| s.level).collect();
    levels.sort_unstable();
    levels.dedup();
    let per_level = levels
        .into_iter()
        .map(|l| (l, stats(rows.iter().filter(|(s, _)| s.level == l).copied())))
        .collect();
    Ok(BiasReport {
        decisions: rows.len(),
        rationality,
        bias_diff: diff,
        mean_ratio_high_cr: high,
        mean_ratio_low_cr: low,
        per_bucket,
        per_level,
        id_bias,
        ood_bias,
        drift: ood_bias.zip(id_bias).map(|(o, i)| o - i),
    })
}
