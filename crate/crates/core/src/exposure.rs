//! Exposure banding, positional decay weights and role-level aggregates.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::numeric;

/// Contracted hours in a full-time week.
pub const WEEKLY_HOURS: f64 = 37.0;

/// Default positional decay rate.
pub const DEFAULT_DECAY: f64 = 0.75;

/// Lower bounds of the Low, Medium and High bands.
pub const LOW_CUTPOINT: f64 = 0.3;
pub const MEDIUM_CUTPOINT: f64 = 0.5;
pub const HIGH_CUTPOINT: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExposureError {
    #[error("exposure score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("decay rate {0} outside (0, 1]")]
    InvalidDecay(f64),
    #[error("task count must be at least 1")]
    NoTasks,
    #[error("{tasks} tasks but {weights} weights")]
    LengthMismatch { tasks: usize, weights: usize },
    #[error("salary {0} is not a finite non-negative amount")]
    InvalidSalary(f64),
    #[error("weights must be finite, non-negative and sum to 1 (sum was {0})")]
    InvalidWeights(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExposureBand {
    VeryLow,
    Low,
    Medium,
    High,
}

impl ExposureBand {
    pub const ALL: [ExposureBand; 4] = [
        ExposureBand::VeryLow,
        ExposureBand::Low,
        ExposureBand::Medium,
        ExposureBand::High,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExposureBand::VeryLow => "VeryLow",
            ExposureBand::Low => "Low",
            ExposureBand::Medium => "Medium",
            ExposureBand::High => "High",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ExposureBand::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

impl fmt::Display for ExposureBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Band a score and return the high-exposure indicator alongside it.
pub fn classify_exposure(score: f64) -> Result<(ExposureBand, bool), ExposureError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(ExposureError::ScoreOutOfRange(score));
    }
    let band = if score >= HIGH_CUTPOINT {
        ExposureBand::High
    } else if score >= MEDIUM_CUTPOINT {
        ExposureBand::Medium
    } else if score >= LOW_CUTPOINT {
        ExposureBand::Low
    } else {
        ExposureBand::VeryLow
    };
    Ok((band, band == ExposureBand::High))
}

/// One extracted task with its score and band.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    /// 1-based position in the role description.
    pub task_number: u32,
    pub task_details: String,
    pub exposure: f64,
    pub band: ExposureBand,
    pub high: bool,
}

impl TaskRecord {
    pub fn new(
        task_number: u32,
        task_details: impl Into<String>,
        exposure: f64,
    ) -> Result<Self, ExposureError> {
        let (band, high) = classify_exposure(exposure)?;
        Ok(TaskRecord {
            task_number,
            task_details: task_details.into(),
            exposure,
            band,
            high,
        })
    }

    /// Build contiguous records 1..=T from `(details, score)` pairs in order.
    pub fn from_ordered<S: Into<String>>(
        items: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Vec<Self>, ExposureError> {
        items
            .into_iter()
            .enumerate()
            .map(|(i, (details, score))| TaskRecord::new(i as u32 + 1, details, score))
            .collect()
    }
}

/// Positional task weights: raw geometric terms and their normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayWeights {
    pub delta: f64,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl DecayWeights {
    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }
}

/// Weights `δ^(t-1) / Σ_k δ^(k-1)` for positions `t = 1..=count`.
pub fn decay_weights(count: usize, delta: f64) -> Result<DecayWeights, ExposureError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(ExposureError::InvalidDecay(delta));
    }
    if count == 0 {
        return Err(ExposureError::NoTasks);
    }
    let raw: Vec<f64> = (0..count).map(|t| libm::pow(delta, t as f64)).collect();
    let total = numeric::sum(raw.iter().copied());
    let normalized = raw.iter().map(|d| d / total).collect();
    Ok(DecayWeights {
        delta,
        raw,
        normalized,
    })
}

/// How scores within one task list are weighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    Equal,
    Decay(f64),
}

impl Weighting {
    pub fn weights(self, count: usize) -> Result<Vec<f64>, ExposureError> {
        let delta = match self {
            Weighting::Equal => 1.0,
            Weighting::Decay(d) => d,
        };
        Ok(decay_weights(count, delta)?.normalized)
    }
}

/// Weighted mean and weighted population standard deviation.
///
/// `weights` must already be normalised.
pub fn weighted_mean_std(scores: &[f64], weights: &[f64]) -> Result<(f64, f64), ExposureError> {
    if scores.len() != weights.len() {
        return Err(ExposureError::LengthMismatch {
            tasks: scores.len(),
            weights: weights.len(),
        });
    }
    if scores.is_empty() {
        return Err(ExposureError::NoTasks);
    }
    let mean = numeric::sum(scores.iter().zip(weights).map(|(e, w)| e * w));
    let var = numeric::sum(
        scores
            .iter()
            .zip(weights)
            .map(|(e, w)| w * (e - mean) * (e - mean)),
    );
    Ok((mean, libm::sqrt(var.max(0.0))))
}

/// Role-level aggregates over decay-weighted tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleExposure {
    /// Weighted mean exposure `Σ D_t e_t`.
    pub weighted_mean: f64,
    pub weighted_std: f64,
    /// Share of time on High-band tasks.
    pub high_share: f64,
    /// Share of time on Medium-band tasks.
    pub medium_share: f64,
    pub hours_per_task: Vec<f64>,
    /// Salary apportioned by task weight; absent without a salary.
    pub value_per_task: Option<Vec<f64>>,
}

fn check_weights(weights: &[f64]) -> Result<(), ExposureError> {
    let total = numeric::sum(weights.iter().copied());
    let ok = weights.iter().all(|w| w.is_finite() && *w >= 0.0) && libm::fabs(total - 1.0) <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(ExposureError::InvalidWeights(total))
    }
}

/// Aggregate a role from its tasks and normalised task weights.
pub fn role_exposure_with_weights(
    tasks: &[TaskRecord],
    weights: &[f64],
    salary: Option<f64>,
) -> Result<RoleExposure, ExposureError> {
    if tasks.len() != weights.len() {
        return Err(ExposureError::LengthMismatch {
            tasks: tasks.len(),
            weights: weights.len(),
        });
    }
    if tasks.is_empty() {
        return Err(ExposureError::NoTasks);
    }
    check_weights(weights)?;
    if let Some(s) = salary {
        if !(s.is_finite() && s >= 0.0) {
            return Err(ExposureError::InvalidSalary(s));
        }
    }
    let scores: Vec<f64> = tasks.iter().map(|t| t.exposure).collect();
    let (weighted_mean, weighted_std) = weighted_mean_std(&scores, weights)?;
    let share_of = |band: ExposureBand| {
        numeric::sum(
            tasks
                .iter()
                .zip(weights)
                .filter(|(t, _)| t.band == band)
                .map(|(_, w)| *w),
        )
    };
    Ok(RoleExposure {
        weighted_mean,
        weighted_std,
        high_share: share_of(ExposureBand::High),
        medium_share: share_of(ExposureBand::Medium),
        hours_per_task: weights.iter().map(|w| WEEKLY_HOURS * w).collect(),
        value_per_task: salary.map(|s| weights.iter().map(|w| s * w).collect()),
    })
}

/// Aggregate a role under positional decay weights.
pub fn role_exposure(
    tasks: &[TaskRecord],
    weights: &DecayWeights,
    salary: Option<f64>,
) -> Result<RoleExposure, ExposureError> {
    role_exposure_with_weights(tasks, &weights.normalized, salary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table_one_tasks() -> Vec<TaskRecord> {
        TaskRecord::from_ordered(
            [0.8, 0.9, 0.6, 0.4, 0.3, 0.2]
                .iter()
                .map(|&s| ("task", s)),
        )
        .unwrap()
    }

    #[test]
    fn band_boundaries() {
        assert_eq!(classify_exposure(0.7).unwrap(), (ExposureBand::High, true));
        assert_eq!(classify_exposure(0.3).unwrap(), (ExposureBand::Low, false));
        assert_eq!(classify_exposure(0.0).unwrap(), (ExposureBand::VeryLow, false));
        assert_eq!(classify_exposure(0.5).unwrap(), (ExposureBand::Medium, false));
        assert_eq!(classify_exposure(0.69999).unwrap().0, ExposureBand::Medium);
        assert_eq!(classify_exposure(1.0).unwrap(), (ExposureBand::High, true));
    }

    #[test]
    fn scores_outside_unit_interval_rejected() {
        assert!(classify_exposure(-0.1).is_err());
        assert!(classify_exposure(1.3).is_err());
        assert!(classify_exposure(f64::NAN).is_err());
    }

    #[test]
    fn decay_weights_six_tasks() {
        let w = decay_weights(6, 0.75).unwrap();
        let published = [0.30, 0.23, 0.17, 0.13, 0.10, 0.07];
        for (got, want) in w.normalized.iter().zip(published) {
            assert_abs_diff_eq!(*got, want, epsilon = 0.005);
        }
        // exact: 1 / Σ 0.75^k for k < 6 = 0.25 / (1 - 0.75^6)
        assert_abs_diff_eq!(w.normalized[0], 0.25 / (1.0 - 0.177_978_515_625), epsilon = 1e-15);
        assert_eq!(w.raw[2], 0.5625);
    }

    #[test]
    fn equal_and_single_weights() {
        assert_eq!(decay_weights(4, 1.0).unwrap().normalized, vec![0.25; 4]);
        assert_eq!(decay_weights(1, 0.3).unwrap().normalized, vec![1.0]);
    }

    #[test]
    fn decay_weight_errors() {
        assert_eq!(decay_weights(3, 0.0), Err(ExposureError::InvalidDecay(0.0)));
        assert_eq!(decay_weights(3, 1.5), Err(ExposureError::InvalidDecay(1.5)));
        assert_eq!(decay_weights(0, 0.5), Err(ExposureError::NoTasks));
    }

    #[test]
    fn table_one_weighted_exposure() {
        let tasks = table_one_tasks();
        let equal = role_exposure(&tasks, &decay_weights(6, 1.0).unwrap(), None).unwrap();
        assert_abs_diff_eq!(equal.weighted_mean, 3.2 / 6.0, epsilon = 1e-12);
        // Full-precision decay weights give 0.64586; the published 0.64 sums
        // products already rounded to two decimals.
        let decayed = role_exposure(&tasks, &decay_weights(6, 0.75).unwrap(), None).unwrap();
        assert_abs_diff_eq!(decayed.weighted_mean, 0.645_856_4, epsilon = 1e-6);
        let rounded = [0.30, 0.23, 0.17, 0.13, 0.10, 0.07];
        let products: f64 = [0.8, 0.9, 0.6, 0.4, 0.3, 0.2]
            .iter()
            .zip(rounded)
            .map(|(e, w)| libm::round(e * w * 100.0) / 100.0)
            .sum();
        assert_abs_diff_eq!(products, 0.64, epsilon = 1e-12);
    }

    #[test]
    fn table_two_value_split() {
        let tasks = table_one_tasks();
        let w = decay_weights(6, 0.75).unwrap();
        let role = role_exposure(&tasks, &w, Some(38_680.0)).unwrap();
        let values = role.value_per_task.unwrap();
        assert_abs_diff_eq!(numeric::sum(values.iter().copied()), 38_680.0, epsilon = 0.01);
        assert_abs_diff_eq!(role.high_share, w.normalized[0] + w.normalized[1], epsilon = 1e-15);
        assert_abs_diff_eq!(role.high_share, 0.53, epsilon = 0.005);
        assert_abs_diff_eq!(role.medium_share, w.normalized[2], epsilon = 1e-15);
        // Published per-task values are the rounded weights times salary.
        let published = [11_604.0, 8_896.0, 6_575.0, 5_028.0, 3_868.0, 2_707.0];
        for (w, want) in [0.30, 0.23, 0.17, 0.13, 0.10, 0.07].iter().zip(published) {
            assert_abs_diff_eq!(libm::round(w * 38_680.0), want, epsilon = 1.0);
        }
        assert_abs_diff_eq!(values[0], 38_680.0 * w.normalized[0], epsilon = 1e-9);
    }

    #[test]
    fn constant_scores_have_zero_spread() {
        let tasks = TaskRecord::from_ordered((0..5).map(|_| ("t", 0.42))).unwrap();
        let role = role_exposure(&tasks, &decay_weights(5, 0.6).unwrap(), None).unwrap();
        assert_abs_diff_eq!(role.weighted_mean, 0.42, epsilon = 1e-12);
        assert_abs_diff_eq!(role.weighted_std, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let tasks = table_one_tasks();
        let w = decay_weights(5, 0.75).unwrap();
        assert_eq!(
            role_exposure(&tasks, &w, None),
            Err(ExposureError::LengthMismatch { tasks: 6, weights: 5 })
        );
    }

    #[test]
    fn zero_weight_task_leaves_mean_unchanged() {
        let scores = [0.8, 0.1, 0.5];
        let weights = [0.5, 0.3, 0.2];
        let (m, s) = weighted_mean_std(&scores, &weights).unwrap();
        let (m2, s2) = weighted_mean_std(&[0.8, 0.1, 0.5, 0.99], &[0.5, 0.3, 0.2, 0.0]).unwrap();
        assert_eq!(m, m2);
        assert_eq!(s, s2);
    }

    fn arb_scores() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, 1..16)
    }

    proptest! {
        #[test]
        fn weights_sum_to_one_with_constant_ratio(t in 1usize..40, delta in 0.05f64..=1.0) {
            let w = decay_weights(t, delta).unwrap();
            prop_assert!((numeric::sum(w.normalized.iter().copied()) - 1.0).abs() <= 1e-12);
            for pair in w.normalized.windows(2) {
                prop_assert!((pair[0] / pair[1] - 1.0 / delta).abs() <= 1e-9);
            }
        }

        #[test]
        fn role_conservation(scores in arb_scores(), delta in 0.05f64..=1.0, salary in 1.0f64..200_000.0) {
            let tasks = TaskRecord::from_ordered(scores.iter().map(|&s| ("t", s))).unwrap();
            let w = decay_weights(tasks.len(), delta).unwrap();
            let role = role_exposure(&tasks, &w, Some(salary)).unwrap();
            prop_assert!((numeric::sum(role.hours_per_task.iter().copied()) - WEEKLY_HOURS).abs() <= 1e-9);
            let value = numeric::sum(role.value_per_task.unwrap().iter().copied());
            prop_assert!((value - salary).abs() <= 0.01);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&role.high_share));
            let n_high = tasks.iter().filter(|t| t.high).count();
            prop_assert_eq!(role.high_share == 0.0, n_high == 0);
            prop_assert_eq!((role.high_share - 1.0).abs() <= 1e-12, n_high == tasks.len());
            prop_assert!(role.weighted_mean >= -1e-12 && role.weighted_mean <= 1.0 + 1e-12);
        }

        #[test]
        fn raising_one_score_never_lowers_mean(scores in arb_scores(), idx in 0usize..16, bump in 0.0f64..1.0, delta in 0.05f64..=1.0) {
            let i = idx % scores.len();
            let w = decay_weights(scores.len(), delta).unwrap().normalized;
            let (before, _) = weighted_mean_std(&scores, &w).unwrap();
            let mut raised = scores.clone();
            raised[i] = (raised[i] + bump).min(1.0);
            let (after, _) = weighted_mean_std(&raised, &w).unwrap();
            prop_assert!(after >= before - 1e-15);
        }

        #[test]
        fn bands_partition_unit_interval(e in 0.0f64..=1.0) {
            let (band, high) = classify_exposure(e).unwrap();
            let hits = [e < 0.3, (0.3..0.5).contains(&e), (0.5..0.7).contains(&e), e >= 0.7];
            prop_assert_eq!(hits.iter().filter(|h| **h).count(), 1);
            let idx = hits.iter().position(|h| *h).unwrap();
            prop_assert_eq!(band, ExposureBand::ALL[idx]);
            prop_assert_eq!(high, e >= 0.7);
        }
    }
}
