//! Chi-square tests and small summary statistics used by the Monte Carlo checks.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Bins whose expected count falls below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn upper_tail(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    if !statistic.is_finite() {
        return 0.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(0.0)
}

/// Goodness of fit of `counts` to the probabilities `probs`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::invalid("counts and probabilities must align"));
    }
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let mut statistic = 0.0;
    let mut bins = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = p * total;
        if expected < MIN_EXPECTED {
            pooled_obs += c as f64;
            pooled_exp += expected;
        } else {
            statistic += (c as f64 - expected).powi(2) / expected;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    } else if pooled_obs > 0.0 {
        statistic = f64::INFINITY;
    }
    let dof = bins.saturating_sub(1);
    Ok(ChiSquare { statistic, dof, p_value: upper_tail(statistic, dof) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Homogeneity {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `½ Σ |p̂_a − p̂_b|` over the raw (unpooled) bins.
    pub tv_estimate: f64,
    pub raw_bins: usize,
    pub bins_after_pooling: usize,
}

/// Two-sample chi-square homogeneity test over discrete records.
pub fn chi_square_homogeneity<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<Homogeneity> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(Error::invalid("homogeneity test needs two nonempty samples"));
    }
    let keys: BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    let (fa, fb) = (na as f64, nb as f64);
    let total = fa + fb;
    let mut tv = 0.0;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for k in &keys {
        let ca = *a.get(*k).unwrap_or(&0) as f64;
        let cb = *b.get(*k).unwrap_or(&0) as f64;
        tv += (ca / fa - cb / fb).abs();
        let col = ca + cb;
        let min_expected = col * fa.min(fb) / total;
        if min_expected < MIN_EXPECTED {
            pooled.0 += ca;
            pooled.1 += cb;
        } else {
            kept.push((ca, cb));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        let min_expected = (pooled.0 + pooled.1) * fa.min(fb) / total;
        if min_expected < MIN_EXPECTED && !kept.is_empty() {
            // fold the undersized pool into the smallest kept bin
            let (idx, _) = kept
                .iter()
                .enumerate()
                .min_by(|x, y| (x.1 .0 + x.1 .1).total_cmp(&(y.1 .0 + y.1 .1)))
                .expect("nonempty");
            kept[idx].0 += pooled.0;
            kept[idx].1 += pooled.1;
        } else {
            kept.push(pooled);
        }
    }
    let mut statistic = 0.0;
    for &(ca, cb) in &kept {
        let col = ca + cb;
        let ea = col * fa / total;
        let eb = col * fb / total;
        statistic += (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb;
    }
    let dof = kept.len().saturating_sub(1);
    Ok(Homogeneity {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof),
        tv_estimate: 0.5 * tv,
        raw_bins: keys.len(),
        bins_after_pooling: kept.len(),
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; `None` below two samples.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Standard deviation of a Bernoulli(p) frequency over `trials`.
pub fn bernoulli_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gof_reference_values() {
        // reference: scipy.stats.chisquare([24,20,27,29],[19,25,26,30]) → 2.38758, p 0.49595
        let probs: Vec<f64> = [19.0, 25.0, 26.0, 30.0].iter().map(|e| e / 100.0).collect();
        let r = chi_square_gof(&[24, 20, 27, 29], &probs).unwrap();
        assert_relative_eq!(r.statistic, 2.3875843454790822, epsilon = 1e-9);
        assert_relative_eq!(r.p_value, 0.49594997742093094, epsilon = 1e-9);
        assert_eq!(r.dof, 3);
    }

    #[test]
    fn gof_identical_frequencies() {
        let r = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_relative_eq!(r.p_value, 1.0);
    }

    #[test]
    fn homogeneity_reference_values() {
        // scipy.stats.chi2_contingency([[30,20,50],[20,30,50]], correction=False)
        // → statistic 4.0, dof 2, p 0.1353352832366127
        let a: BTreeMap<u8, u64> = [(0, 30), (1, 20), (2, 50)].into();
        let b: BTreeMap<u8, u64> = [(0, 20), (1, 30), (2, 50)].into();
        let r = chi_square_homogeneity(&a, &b).unwrap();
        assert_relative_eq!(r.statistic, 4.0, epsilon = 1e-12);
        assert_eq!(r.dof, 2);
        assert_relative_eq!(r.p_value, 0.1353352832366127, epsilon = 1e-9);
        assert_relative_eq!(r.tv_estimate, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn homogeneity_pools_sparse_bins() {
        let a: BTreeMap<u8, u64> = [(0, 500), (1, 500), (2, 1), (3, 2)].into();
        let b: BTreeMap<u8, u64> = [(0, 500), (1, 500), (4, 3)].into();
        let r = chi_square_homogeneity(&a, &b).unwrap();
        assert_eq!(r.raw_bins, 5);
        assert_eq!(r.bins_after_pooling, 2);
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn variance_helpers() {
        assert_eq!(sample_variance(&[1.0]), None);
        assert_relative_eq!(sample_variance(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(sample_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 5.0 / 3.0);
    }
}
