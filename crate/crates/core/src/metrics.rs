//! Evaluation metrics: ROC-AUC with tie handling, the asymmetric
//! exponential remaining-life penalty, rMSE, and quantile summaries.

use crate::error::{Error, Result};

/// A classifier score paired with its binary outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredLabel {
    pub score: f64,
    pub label: bool,
}

/// A point forecast of a remaining time paired with the realized value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RulPrediction {
    pub predicted: f64,
    pub actual: f64,
}

/// Area under the ROC curve via the rank-sum statistic: the probability
/// that a random positive outscores a random negative, ties half-credited.
///
/// Midranks make this exactly the concordance index, and exactly equal to
/// the all-pairs count divided by `n_pos * n_neg`.
pub fn roc_auc(items: &[ScoredLabel]) -> Result<f64> {
    if items.iter().any(|it| !it.score.is_finite()) {
        return Err(Error::InvalidData("non-finite score".into()));
    }
    let n_pos = items.iter().filter(|it| it.label).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidData(
            "roc_auc needs at least one positive and one negative label".into(),
        ));
    }

    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].score.partial_cmp(&items[b].score).unwrap());

    // Midranks: tied scores all receive the mean of the ranks they span.
    // Rank sums of half-integers below 2^52 are exact in f64, so the result
    // is bit-identical to the pairwise count.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && items[order[j + 1]].score == items[order[i]].score {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if items[idx].label {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let np = n_pos as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * n_neg as f64))
}

/// Asymmetric exponential penalty on a signed remaining-life error `d`
/// (predicted minus actual): over-estimation decays with 10, under with 13.
pub fn phm08_loss(d: f64) -> f64 {
    if d < 0.0 {
        (-d / 13.0).exp() - 1.0
    } else if d > 0.0 {
        (d / 10.0).exp() - 1.0
    } else {
        0.0
    }
}

/// Mean of [`phm08_loss`] over prediction errors.
pub fn mean_custom_loss(preds: &[RulPrediction]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Empty("mean_custom_loss over no predictions".into()));
    }
    let sum: f64 = preds.iter().map(|p| phm08_loss(p.predicted - p.actual)).sum();
    Ok(sum / preds.len() as f64)
}

/// Root mean squared prediction error.
pub fn rmse(preds: &[RulPrediction]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Empty("rmse over no predictions".into()));
    }
    let sum: f64 = preds
        .iter()
        .map(|p| (p.predicted - p.actual) * (p.predicted - p.actual))
        .sum();
    Ok((sum / preds.len() as f64).sqrt())
}

/// Five-number summary plus mean, for per-process AUC collections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSummary {
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

/// Empirical quantile with linear interpolation between order statistics:
/// the p-quantile sits at fractional position `(n - 1) * p`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

pub fn auc_quantile_summary(values: &[f64]) -> Result<QuantileSummary> {
    if values.is_empty() {
        return Err(Error::Empty("quantile summary over no values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in summary".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(QuantileSummary {
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        q50: quantile(&sorted, 0.50),
        q75: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
    })
}
