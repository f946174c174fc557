//! Threshold classification, per-role savings and the θ sweep.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::exposure::{self, ExposureError, TaskRecord, WEEKLY_HOURS};
use crate::numeric::CompensatedSum;

pub const DEFAULT_THETA: f64 = 0.8;
pub const GRID_STEPS: usize = 20;
pub const SENSITIVITY_DELTAS: [f64; 3] = [0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SavingsClass {
    CostReduction,
    ProductivityGain,
    NoImpact,
}

impl SavingsClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SavingsClass::CostReduction => "cost_reduction",
            SavingsClass::ProductivityGain => "productivity_gain",
            SavingsClass::NoImpact => "no_impact",
        }
    }
}

impl fmt::Display for SavingsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SavingsError {
    #[error("{field} must lie in [0, 1], got {value}")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("salary must be positive and finite, got {0}")]
    InvalidSalary(f64),
    #[error("weight for role `{0}` is negative or not finite")]
    InvalidWeight(String),
    #[error("{roles} roles but {weights} weights")]
    MisalignedWeights { roles: usize, weights: usize },
    #[error("role `{key}`: {source}")]
    Exposure { key: String, source: ExposureError },
}

fn check_unit(field: &'static str, value: f64) -> Result<(), SavingsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SavingsError::OutOfRange { field, value })
    }
}

/// Class of a role with high-exposure share `high_share` at threshold `theta`.
pub fn classify_role(high_share: f64, theta: f64) -> Result<SavingsClass, SavingsError> {
    check_unit("high_share", high_share)?;
    check_unit("theta", theta)?;
    Ok(if high_share == 0.0 {
        SavingsClass::NoImpact
    } else if high_share >= theta {
        SavingsClass::CostReduction
    } else {
        SavingsClass::ProductivityGain
    })
}

/// Monetary fields are `None` when the role has no salary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleSavings {
    pub high_share: f64,
    pub class: SavingsClass,
    pub cost_reduction: Option<f64>,
    pub productivity_gain: Option<f64>,
    pub productivity_upper: Option<f64>,
    pub freed_hours: f64,
}

/// Inputs needed to value one role.
#[derive(Debug, Clone, PartialEq)]
pub struct SavingsRole {
    pub key: String,
    pub high_share: f64,
    pub medium_share: f64,
    pub salary: Option<f64>,
}

impl SavingsRole {
    pub fn new(key: impl Into<String>, high_share: f64, medium_share: f64, salary: Option<f64>) -> Self {
        SavingsRole {
            key: key.into(),
            high_share,
            medium_share,
            salary,
        }
    }
}

pub fn role_savings(
    high_share: f64,
    medium_share: f64,
    salary: Option<f64>,
    theta: f64,
) -> Result<RoleSavings, SavingsError> {
    check_unit("medium_share", medium_share)?;
    if high_share + medium_share > 1.0 + 1e-9 {
        return Err(SavingsError::OutOfRange {
            field: "high_share + medium_share",
            value: high_share + medium_share,
        });
    }
    if let Some(s) = salary {
        if !(s.is_finite() && s > 0.0) {
            return Err(SavingsError::InvalidSalary(s));
        }
    }
    let class = classify_role(high_share, theta)?;
    let cost = if class == SavingsClass::CostReduction { 1.0 } else { 0.0 };
    let prod = if class == SavingsClass::ProductivityGain { 1.0 } else { 0.0 };
    Ok(RoleSavings {
        high_share,
        class,
        cost_reduction: salary.map(|s| cost * s),
        productivity_gain: salary.map(|s| prod * high_share * s),
        productivity_upper: salary.map(|s| prod * (high_share + medium_share) * s),
        freed_hours: prod * high_share * WEEKLY_HOURS,
    })
}

/// θ grid 0.00, 0.05, ..., 1.00 computed as i/20 so grid points are the
/// closest doubles to their decimal values.
pub fn theta_grid() -> Vec<f64> {
    (0..=GRID_STEPS).map(|i| i as f64 / GRID_STEPS as f64).collect()
}

/// P/C at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// C = 0 and P > 0.
    Infinite,
    /// C = 0 and P = 0.
    Undefined,
}

impl Ratio {
    pub fn of(p: f64, c: f64) -> Ratio {
        if c > 0.0 {
            Ratio::Finite(p / c)
        } else if p > 0.0 {
            Ratio::Infinite
        } else {
            Ratio::Undefined
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r:.6}"),
            Ratio::Infinite => f.write_str("inf"),
            Ratio::Undefined => f.write_str("n/a"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    pub cost_reduction: f64,
    pub productivity_gain: f64,
    pub productivity_upper: f64,
    pub ratio: Ratio,
    /// Weighted hours/week freed in productivity-gain roles.
    pub freed_hours: f64,
    pub n_cost: usize,
    pub n_productivity: usize,
    pub n_no_impact: usize,
    /// Roles counted above but left out of monetary totals.
    pub n_missing_salary: usize,
}

impl SweepPoint {
    pub fn total_roles(&self) -> usize {
        self.n_cost + self.n_productivity + self.n_no_impact
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn at(&self, theta: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| libm::fabs(p.theta - theta) < 1e-12)
    }
}

/// Weighted totals per θ. `weights` are the raked population weights aligned
/// with `roles`.
pub fn sweep(roles: &[SavingsRole], weights: &[f64], thetas: &[f64]) -> Result<SweepCurve, SavingsError> {
    if roles.len() != weights.len() {
        return Err(SavingsError::MisalignedWeights {
            roles: roles.len(),
            weights: weights.len(),
        });
    }
    for (r, &w) in roles.iter().zip(weights) {
        if !(w.is_finite() && w >= 0.0) {
            return Err(SavingsError::InvalidWeight(r.key.clone()));
        }
    }
    let mut points = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut c = CompensatedSum::new();
        let mut p = CompensatedSum::new();
        let mut pu = CompensatedSum::new();
        let mut hours = CompensatedSum::new();
        let (mut n_cost, mut n_prod, mut n_none, mut n_missing) = (0, 0, 0, 0);
        for (role, &w) in roles.iter().zip(weights) {
            let s = role_savings(role.high_share, role.medium_share, role.salary, theta)?;
            match s.class {
                SavingsClass::CostReduction => n_cost += 1,
                SavingsClass::ProductivityGain => n_prod += 1,
                SavingsClass::NoImpact => n_none += 1,
            }
            hours.add(w * s.freed_hours);
            match (s.cost_reduction, s.productivity_gain, s.productivity_upper) {
                (Some(cr), Some(pg), Some(up)) => {
                    c.add(w * cr);
                    p.add(w * pg);
                    pu.add(w * up);
                }
                _ => n_missing += 1,
            }
        }
        let (c, p) = (c.total(), p.total());
        points.push(SweepPoint {
            theta,
            cost_reduction: c,
            productivity_gain: p,
            productivity_upper: pu.total(),
            ratio: Ratio::of(p, c),
            freed_hours: hours.total(),
            n_cost,
            n_productivity: n_prod,
            n_no_impact: n_none,
            n_missing_salary: n_missing,
        });
    }
    Ok(SweepCurve { points })
}

/// A role with its raw ordered task list, so shares can be recomputed for
/// any decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRole {
    pub key: String,
    pub tasks: Vec<TaskRecord>,
    pub salary: Option<f64>,
    pub weight: f64,
}

/// Recompute H_j and M_j for one δ.
pub fn savings_roles_for_delta(roles: &[RawRole], delta: f64) -> Result<Vec<SavingsRole>, SavingsError> {
    roles
        .iter()
        .map(|r| {
            let dw = exposure::decay_weights(r.tasks.len(), delta).map_err(|source| SavingsError::Exposure {
                key: r.key.clone(),
                source,
            })?;
            let e = exposure::role_exposure(&r.tasks, &dw, None).map_err(|source| SavingsError::Exposure {
                key: r.key.clone(),
                source,
            })?;
            Ok(SavingsRole::new(r.key.clone(), e.high_share, e.medium_share, r.salary))
        })
        .collect()
}

/// One sweep per decay rate.
pub fn decay_sensitivity(
    roles: &[RawRole],
    deltas: &[f64],
    thetas: &[f64],
) -> Result<Vec<(f64, SweepCurve)>, SavingsError> {
    let weights: Vec<f64> = roles.iter().map(|r| r.weight).collect();
    deltas
        .iter()
        .map(|&d| {
            let sr = savings_roles_for_delta(roles, d)?;
            Ok((d, sweep(&sr, &weights, thetas)?))
        })
        .collect()
}
