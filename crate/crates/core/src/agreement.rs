//! Agreement between raters: rank and linear correlation, and interval
//! Krippendorff's alpha.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgreementError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {required} values, got {found}")]
    TooFew { required: usize, found: usize },
    #[error("a series is constant; correlation is undefined")]
    ZeroVariance,
    #[error("no disagreement is possible: all pooled ratings are equal")]
    NoExpectedDisagreement,
    #[error("no unit has two or more ratings")]
    NoPairableUnits,
    #[error("non-finite rating")]
    NonFinite,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), AgreementError> {
    if x.len() != y.len() {
        return Err(AgreementError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AgreementError::TooFew {
            required: 2,
            found: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AgreementError::NonFinite);
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AgreementError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AgreementError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AgreementError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Interval-metric Krippendorff's alpha. `units[u]` holds the ratings given
/// to unit u (missing ratings simply absent). Units with fewer than two
/// ratings are not pairable and are dropped.
pub fn krippendorff_alpha_interval(units: &[Vec<f64>]) -> Result<f64, AgreementError> {
    let pairable: Vec<&Vec<f64>> = units.iter().filter(|u| u.len() >= 2).collect();
    if pairable.is_empty() {
        return Err(AgreementError::NoPairableUnits);
    }
    if pairable.iter().any(|u| u.iter().any(|v| !v.is_finite())) {
        return Err(AgreementError::NonFinite);
    }
    let n: usize = pairable.iter().map(|u| u.len()).sum();
    let mut d_o = 0.0;
    for u in &pairable {
        let m = u.len() as f64;
        let mut s = 0.0;
        for (i, a) in u.iter().enumerate() {
            for (j, b) in u.iter().enumerate() {
                if i != j {
                    s += (a - b) * (a - b);
                }
            }
        }
        d_o += s / (m - 1.0);
    }
    d_o /= n as f64;
    let pooled: Vec<f64> = pairable.iter().flat_map(|u| u.iter().copied()).collect();
    let mut d_e = 0.0;
    for (i, a) in pooled.iter().enumerate() {
        for (j, b) in pooled.iter().enumerate() {
            if i != j {
                d_e += (a - b) * (a - b);
            }
        }
    }
    d_e /= (n * (n - 1)) as f64;
    if d_e == 0.0 {
        return Err(AgreementError::NoExpectedDisagreement);
    }
    Ok(1.0 - d_o / d_e)
}

/// Alpha for two aligned rating series (one unit per position).
pub fn krippendorff_alpha_pair(x: &[f64], y: &[f64]) -> Result<f64, AgreementError> {
    check_pair(x, y)?;
    let units: Vec<Vec<f64>> = x.iter().zip(y).map(|(a, b)| vec![*a, *b]).collect();
    krippendorff_alpha_interval(&units)
}
