use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Bins whose combined count falls below this are pooled into one bin.
pub const MIN_POOLED_COUNT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

fn totals<K>(h: &BTreeMap<K, u64>) -> u64 {
    h.values().sum()
}

/// Two-sample chi-square homogeneity test on count histograms.
///
/// With sample sizes `A`, `B` the statistic is
/// `Σ (√(B/A)·a_i − √(A/B)·b_i)² / (a_i + b_i)` on `bins − 1` degrees of
/// freedom. Sparse bins are pooled first.
pub fn two_sample_chi_square<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<ChiSquareResult> {
    let (na, nb) = (totals(a), totals(b));
    if na == 0 || nb == 0 {
        return Err(Error::InvalidInput("chi-square needs two non-empty samples".into()));
    }
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut pooled = (0u64, 0u64);
    let keys: std::collections::BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let pair = (a.get(k).copied().unwrap_or(0), b.get(k).copied().unwrap_or(0));
        if pair.0 + pair.1 < MIN_POOLED_COUNT {
            pooled.0 += pair.0;
            pooled.1 += pair.1;
        } else {
            bins.push(pair);
        }
    }
    if pooled.0 + pooled.1 > 0 {
        bins.push(pooled);
    }
    if bins.len() < 2 {
        return Ok(ChiSquareResult { statistic: 0.0, dof: 0, p_value: 1.0 });
    }
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    let statistic: f64 = bins
        .iter()
        .map(|&(x, y)| {
            let d = ka * x as f64 - kb * y as f64;
            d * d / (x + y) as f64
        })
        .sum();
    let dof = bins.len() as u64 - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(ChiSquareResult { statistic, dof, p_value: dist.sf(statistic) })
}

/// Total-variation distance between the empirical laws of two histograms.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let (na, nb) = (totals(a).max(1) as f64, totals(b).max(1) as f64);
    let keys: std::collections::BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0) as f64 / na - b.get(k).copied().unwrap_or(0) as f64 / nb).abs())
        .sum::<f64>()
}
