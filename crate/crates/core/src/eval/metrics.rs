use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub average_precision: f64,
    pub positives: u64,
    pub negatives: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges_per_second: Option<f64>,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AUC:               {:.6}", self.auc)?;
        writeln!(f, "Average precision: {:.6}", self.average_precision)?;
        writeln!(f, "Positives:         {}", self.positives)?;
        write!(f, "Negatives:         {}", self.negatives)?;
        if let Some(secs) = self.wall_clock_seconds {
            write!(f, "\nWall clock (s):    {secs:.6}")?;
        }
        if let Some(eps) = self.edges_per_second {
            write!(f, "\nEdges/second:      {eps:.0}")?;
        }
        Ok(())
    }
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::eval(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::eval(format!("score {i} is NaN")));
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::eval(
            "need at least one positive and one negative label",
        ));
    }
    Ok((positives, negatives))
}

/// Area under the ROC curve as the Mann-Whitney probability that a random
/// positive outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (positives, negatives) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the U statistic, kept integral.
    let mut twice_u: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        let (mut pos, mut neg) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == value {
            if labels[order[i]] {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        twice_u += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
    }
    Ok(twice_u as f64 / (2 * positives as u128 * negatives as u128) as f64)
}

/// Mean precision at the rank of each positive, ranking by descending score
/// with ties kept in input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (positives, _) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut hits = 0u64;
    let mut sum = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        if labels[idx] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

pub fn evaluate(scores: &[f64], labels: &[bool]) -> Result<MetricsReport> {
    let (positives, negatives) = check(scores, labels)?;
    Ok(MetricsReport {
        auc: roc_auc(scores, labels)?,
        average_precision: average_precision(scores, labels)?,
        positives,
        negatives,
        wall_clock_seconds: None,
        edges_per_second: None,
    })
}
