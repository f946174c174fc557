//! Single-stage raking (iterative proportional fitting) of role weights to
//! department, grade and profession marginals.
//!
//! Each iteration makes one multiplicative pass per dimension, in the fixed
//! order department → grade → profession, refreshing the weighted shares
//! before every pass. Iteration stops once the largest relative weight change
//! over a full iteration drops below the tolerance, or at the iteration cap.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::numeric::{self, CompensatedSum};

/// Synthetic department absorbing population mass outside the sample.
pub const OTHER_DEPTS: &str = "OTHER_DEPTS";

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Department,
    Grade,
    Profession,
}

impl Dimension {
    /// Raking order within one iteration.
    pub const ORDER: [Dimension; 3] = [Dimension::Department, Dimension::Grade, Dimension::Profession];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Department => "department",
            Dimension::Grade => "grade",
            Dimension::Profession => "profession",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RakeError {
    #[error("{dimension} targets sum to {sum}, expected 1")]
    TargetsNotNormalised { dimension: Dimension, sum: f64 },
    #[error("{dimension} target for `{category}` is negative or not finite ({value})")]
    InvalidTarget {
        dimension: Dimension,
        category: String,
        value: f64,
    },
    #[error("population total must be positive, got {0}")]
    InvalidPopulation(f64),
    #[error("{dimension} category `{category}` appears in the sample but has no target")]
    UnknownCategory { dimension: Dimension, category: String },
    #[error(
        "{dimension} category `{category}` has target {target} but no sample rows; \
         merge it into a neighbouring category"
    )]
    EmptyCell {
        dimension: Dimension,
        category: String,
        target: f64,
    },
    #[error("sample is empty")]
    EmptySample,
    #[error("weights sum to zero; cannot scale")]
    ZeroWeights,
    #[error("weight for `{0}` is negative or not finite")]
    InvalidWeight(String),
    #[error("{dimension} has no category totals")]
    EmptyDimension { dimension: Dimension },
}

/// Target proportions per category for each raking dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    department: BTreeMap<String, f64>,
    grade: BTreeMap<String, f64>,
    profession: BTreeMap<String, f64>,
    population_total: f64,
}

impl MarginalSet {
    /// Build from proportions; each dimension must sum to 1 within 1e-9.
    pub fn from_proportions(
        department: BTreeMap<String, f64>,
        grade: BTreeMap<String, f64>,
        profession: BTreeMap<String, f64>,
        population_total: f64,
    ) -> Result<Self, RakeError> {
        if !(population_total.is_finite() && population_total > 0.0) {
            return Err(RakeError::InvalidPopulation(population_total));
        }
        for (dim, map) in [
            (Dimension::Department, &department),
            (Dimension::Grade, &grade),
            (Dimension::Profession, &profession),
        ] {
            for (cat, &v) in map {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(RakeError::InvalidTarget {
                        dimension: dim,
                        category: cat.clone(),
                        value: v,
                    });
                }
            }
            let s = numeric::sum(map.values().copied());
            if libm::fabs(s - 1.0) > 1e-9 {
                return Err(RakeError::TargetsNotNormalised { dimension: dim, sum: s });
            }
        }
        Ok(MarginalSet {
            department,
            grade,
            profession,
            population_total,
        })
    }

    /// Build from category totals `N_c`; each dimension is divided by its own
    /// total so proportions sum to 1 even when published totals disagree.
    pub fn from_totals(
        department: BTreeMap<String, f64>,
        grade: BTreeMap<String, f64>,
        profession: BTreeMap<String, f64>,
        population_total: f64,
    ) -> Result<Self, RakeError> {
        let normalise = |dim: Dimension, map: BTreeMap<String, f64>| {
            let s = numeric::sum(map.values().copied());
            if !(s > 0.0) {
                return Err(RakeError::EmptyDimension { dimension: dim });
            }
            Ok(map.into_iter().map(|(k, v)| (k, v / s)).collect::<BTreeMap<_, _>>())
        };
        Self::from_proportions(
            normalise(Dimension::Department, department)?,
            normalise(Dimension::Grade, grade)?,
            normalise(Dimension::Profession, profession)?,
            population_total,
        )
    }

    pub fn targets(&self, dim: Dimension) -> &BTreeMap<String, f64> {
        match dim {
            Dimension::Department => &self.department,
            Dimension::Grade => &self.grade,
            Dimension::Profession => &self.profession,
        }
    }

    pub fn population_total(&self) -> f64 {
        self.population_total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub key: String,
    pub department: String,
    pub grade: String,
    pub profession: String,
    pub weight: f64,
    /// Appended for the OTHER_DEPTS remainder rather than observed.
    pub synthetic: bool,
}

impl SampleRow {
    pub fn new(
        key: impl Into<String>,
        department: impl Into<String>,
        grade: impl Into<String>,
        profession: impl Into<String>,
    ) -> Self {
        SampleRow {
            key: key.into(),
            department: department.into(),
            grade: grade.into(),
            profession: profession.into(),
            weight: 1.0,
            synthetic: false,
        }
    }

    pub fn category(&self, dim: Dimension) -> &str {
        match dim {
            Dimension::Department => &self.department,
            Dimension::Grade => &self.grade,
            Dimension::Profession => &self.profession,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedSample {
    pub rows: Vec<SampleRow>,
    /// Max relative weight change recorded per completed iteration.
    pub history: Vec<f64>,
}

impl WeightedSample {
    pub fn new(rows: Vec<SampleRow>) -> Self {
        WeightedSample {
            rows,
            history: Vec::new(),
        }
    }

    pub fn total_weight(&self) -> f64 {
        numeric::sum(self.rows.iter().map(|r| r.weight))
    }

    /// Weighted share of every category on one dimension.
    pub fn shares(&self, dim: Dimension) -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<&str, CompensatedSum> = BTreeMap::new();
        for r in &self.rows {
            sums.entry(r.category(dim)).or_default().add(r.weight);
        }
        let total = self.total_weight();
        sums.into_iter()
            .map(|(k, s)| (k.to_string(), if total > 0.0 { s.total() / total } else { 0.0 }))
            .collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.weight).collect()
    }
}

fn synthetic_key(grade: &str, profession: &str) -> String {
    format!("{OTHER_DEPTS}|{grade}|{profession}")
}

/// Append one OTHER_DEPTS row per observed (grade, profession) pair.
/// Rerunning on an already-extended sample adds nothing.
pub fn append_other_depts(mut sample: WeightedSample, _marginals: &MarginalSet) -> WeightedSample {
    let existing: BTreeSet<String> = sample
        .rows
        .iter()
        .filter(|r| r.synthetic)
        .map(|r| r.key.clone())
        .collect();
    let pairs: BTreeSet<(String, String)> = sample
        .rows
        .iter()
        .filter(|r| !r.synthetic)
        .map(|r| (r.grade.clone(), r.profession.clone()))
        .collect();
    for (grade, profession) in pairs {
        let key = synthetic_key(&grade, &profession);
        if existing.contains(&key) {
            continue;
        }
        sample.rows.push(SampleRow {
            key,
            department: OTHER_DEPTS.to_string(),
            grade,
            profession,
            weight: 1.0,
            synthetic: true,
        });
    }
    sample
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RakeOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RakeOptions {
    fn default() -> Self {
        RakeOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RakeOutcome {
    pub sample: WeightedSample,
    pub iterations: usize,
    pub converged: bool,
    /// Max relative weight change in the final iteration.
    pub last_change: f64,
    /// Largest |weighted share − target| over all dimensions at exit.
    pub marginal_residual: f64,
}

fn validate(sample: &WeightedSample, marginals: &MarginalSet) -> Result<(), RakeError> {
    if sample.rows.is_empty() {
        return Err(RakeError::EmptySample);
    }
    for r in &sample.rows {
        if !(r.weight.is_finite() && r.weight >= 0.0) {
            return Err(RakeError::InvalidWeight(r.key.clone()));
        }
    }
    for dim in Dimension::ORDER {
        let targets = marginals.targets(dim);
        let present: BTreeSet<&str> = sample.rows.iter().map(|r| r.category(dim)).collect();
        if let Some(cat) = present.iter().find(|c| !targets.contains_key(**c)) {
            return Err(RakeError::UnknownCategory {
                dimension: dim,
                category: cat.to_string(),
            });
        }
        for (cat, &t) in targets {
            if t > 0.0 && !present.contains(cat.as_str()) {
                return Err(RakeError::EmptyCell {
                    dimension: dim,
                    category: cat.clone(),
                    target: t,
                });
            }
        }
    }
    Ok(())
}

/// Largest absolute gap between weighted shares and targets.
pub fn marginal_residual(sample: &WeightedSample, marginals: &MarginalSet) -> f64 {
    let mut worst: f64 = 0.0;
    for dim in Dimension::ORDER {
        let shares = sample.shares(dim);
        for (cat, &t) in marginals.targets(dim) {
            let s = shares.get(cat).copied().unwrap_or(0.0);
            worst = worst.max(libm::fabs(s - t));
        }
    }
    worst
}

fn rake_dimension(sample: &mut WeightedSample, marginals: &MarginalSet, dim: Dimension) {
    let shares = sample.shares(dim);
    let targets = marginals.targets(dim);
    for r in &mut sample.rows {
        let cat = r.category(dim);
        let s = shares.get(cat).copied().unwrap_or(0.0);
        // s == 0 only when every row in the category already has zero weight
        if s > 0.0 {
            r.weight *= targets[cat] / s;
        }
    }
}

/// Rake sample weights towards the marginals.
pub fn rake(
    sample: WeightedSample,
    marginals: &MarginalSet,
    options: RakeOptions,
) -> Result<RakeOutcome, RakeError> {
    validate(&sample, marginals)?;
    let mut sample = sample;
    sample.history.clear();
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let before = sample.weights();
        for dim in Dimension::ORDER {
            rake_dimension(&mut sample, marginals, dim);
        }
        iterations += 1;
        last_change = before
            .iter()
            .zip(&sample.rows)
            .filter(|(b, _)| **b > 0.0)
            .map(|(b, r)| libm::fabs((r.weight - b) / b))
            .fold(0.0, f64::max);
        sample.history.push(last_change);
        if last_change < options.tolerance {
            converged = true;
            break;
        }
    }
    let marginal_residual = marginal_residual(&sample, marginals);
    Ok(RakeOutcome {
        sample,
        iterations,
        converged,
        last_change,
        marginal_residual,
    })
}

/// Rescale weights so they sum to the population total.
pub fn scale_to_population(
    mut sample: WeightedSample,
    population_total: f64,
) -> Result<WeightedSample, RakeError> {
    if !(population_total.is_finite() && population_total > 0.0) {
        return Err(RakeError::InvalidPopulation(population_total));
    }
    let total = sample.total_weight();
    if !(total > 0.0) {
        return Err(RakeError::ZeroWeights);
    }
    let factor = population_total / total;
    for r in &mut sample.rows {
        r.weight *= factor;
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn map(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
        items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn two_by_two() -> (WeightedSample, MarginalSet) {
        // counts [[2,1],[1,2]] over department × grade, one profession
        let mut rows = Vec::new();
        let cells = [("D1", "G1", 2), ("D1", "G2", 1), ("D2", "G1", 1), ("D2", "G2", 2)];
        for (d, g, n) in cells {
            for i in 0..n {
                rows.push(SampleRow::new(format!("{d}{g}{i}"), d, g, "P"));
            }
        }
        let m = MarginalSet::from_proportions(
            map(&[("D1", 0.5), ("D2", 0.5)]),
            map(&[("G1", 0.5), ("G2", 0.5)]),
            map(&[("P", 1.0)]),
            100.0,
        )
        .unwrap();
        (WeightedSample::new(rows), m)
    }

    /// Independent raking oracle: plain loops over (dept, grade) cells with
    /// no early stop, iterated to a 1e-12 change.
    fn oracle_cell_weights(counts: [[f64; 2]; 2], row_t: [f64; 2], col_t: [f64; 2]) -> [[f64; 2]; 2] {
        let mut w = [[1.0f64; 2]; 2];
        for _ in 0..10_000 {
            let prev = w;
            let total: f64 = (0..2).map(|i| (0..2).map(|j| counts[i][j] * w[i][j]).sum::<f64>()).sum();
            for i in 0..2 {
                let s: f64 = (0..2).map(|j| counts[i][j] * w[i][j]).sum::<f64>() / total;
                for j in 0..2 {
                    w[i][j] *= row_t[i] / s;
                }
            }
            let total: f64 = (0..2).map(|i| (0..2).map(|j| counts[i][j] * w[i][j]).sum::<f64>()).sum();
            for j in 0..2 {
                let s: f64 = (0..2).map(|i| counts[i][j] * w[i][j]).sum::<f64>() / total;
                for i in 0..2 {
                    w[i][j] *= col_t[j] / s;
                }
            }
            let change = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| ((w[i][j] - prev[i][j]) / prev[i][j]).abs())
                .fold(0.0, f64::max);
            if change < 1e-12 {
                break;
            }
        }
        w
    }

    #[test]
    fn two_by_two_matches_oracle() {
        let (sample, m) = two_by_two();
        let out = rake(sample, &m, RakeOptions::default()).unwrap();
        assert!(out.converged);
        for dim in [Dimension::Department, Dimension::Grade] {
            for (_, s) in out.sample.shares(dim) {
                assert_abs_diff_eq!(s, 0.5, epsilon = 1e-6);
            }
        }
        let oracle = oracle_cell_weights([[2.0, 1.0], [1.0, 2.0]], [0.5, 0.5], [0.5, 0.5]);
        // Weights are defined up to scale; compare ratios to the D1/G1 cell.
        let w = |d: &str, g: &str| out.sample.rows.iter().find(|r| r.department == d && r.grade == g).unwrap().weight;
        let base = w("D1", "G1");
        for (i, d) in ["D1", "D2"].iter().enumerate() {
            for (j, g) in ["G1", "G2"].iter().enumerate() {
                assert_abs_diff_eq!(w(d, g) / base, oracle[i][j] / oracle[0][0], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn fixpoint_when_sample_already_matches() {
        let rows = vec![
            SampleRow::new("a", "D1", "G1", "P1"),
            SampleRow::new("b", "D2", "G2", "P2"),
        ];
        let m = MarginalSet::from_proportions(
            map(&[("D1", 0.5), ("D2", 0.5)]),
            map(&[("G1", 0.5), ("G2", 0.5)]),
            map(&[("P1", 0.5), ("P2", 0.5)]),
            10.0,
        )
        .unwrap();
        let out = rake(WeightedSample::new(rows), &m, RakeOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.sample.weights(), vec![1.0, 1.0]);
    }

    #[test]
    fn one_pass_scales_by_target_over_share() {
        let rows = vec![
            SampleRow::new("a", "D1", "G", "P"),
            SampleRow::new("b", "D1", "G", "P"),
            SampleRow::new("c", "D1", "G", "P"),
            SampleRow::new("d", "D2", "G", "P"),
        ];
        let m = MarginalSet::from_proportions(
            map(&[("D1", 0.5), ("D2", 0.5)]),
            map(&[("G", 1.0)]),
            map(&[("P", 1.0)]),
            4.0,
        )
        .unwrap();
        let out = rake(
            WeightedSample::new(rows),
            &m,
            RakeOptions {
                tolerance: 1e-6,
                max_iterations: 1,
            },
        )
        .unwrap();
        // D1: 0.5 / 0.75, D2: 0.5 / 0.25
        let w = out.sample.weights();
        assert_abs_diff_eq!(w[0], 0.5 / 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(w[3], 2.0, epsilon = 1e-15);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn empty_cell_with_positive_target_is_fatal() {
        let rows = vec![SampleRow::new("a", "D1", "G1", "P")];
        let m = MarginalSet::from_proportions(
            map(&[("D1", 0.6), ("D2", 0.4)]),
            map(&[("G1", 1.0)]),
            map(&[("P", 1.0)]),
            1.0,
        )
        .unwrap();
        let err = rake(WeightedSample::new(rows), &m, RakeOptions::default()).unwrap_err();
        assert!(matches!(err, RakeError::EmptyCell { ref category, .. } if category == "D2"));
    }

    #[test]
    fn unknown_sample_category_is_fatal() {
        let rows = vec![SampleRow::new("a", "D9", "G1", "P")];
        let m = MarginalSet::from_proportions(map(&[("D1", 1.0)]), map(&[("G1", 1.0)]), map(&[("P", 1.0)]), 1.0).unwrap();
        assert!(matches!(
            rake(WeightedSample::new(rows), &m, RakeOptions::default()),
            Err(RakeError::UnknownCategory { dimension: Dimension::Department, .. })
        ));
    }

    #[test]
    fn marginals_must_be_normalised() {
        assert!(matches!(
            MarginalSet::from_proportions(map(&[("D1", 0.7)]), map(&[("G", 1.0)]), map(&[("P", 1.0)]), 1.0),
            Err(RakeError::TargetsNotNormalised { dimension: Dimension::Department, .. })
        ));
        let m = MarginalSet::from_totals(
            map(&[("D1", 300.0), ("D2", 100.0)]),
            map(&[("G", 7.0)]),
            map(&[("P", 5.0)]),
            400.0,
        )
        .unwrap();
        assert_abs_diff_eq!(m.targets(Dimension::Department)["D1"], 0.75, epsilon = 1e-15);
    }

    fn other_depts_fixture(other_mass: f64) -> (WeightedSample, MarginalSet) {
        let rows = vec![
            SampleRow::new("r1", "D1", "G1", "P1"),
            SampleRow::new("r2", "D1", "G2", "P1"),
            SampleRow::new("r3", "D2", "G1", "P2"),
            SampleRow::new("r4", "D2", "G2", "P2"),
            SampleRow::new("r5", "D1", "G1", "P2"),
        ];
        let rest = (1.0 - other_mass) / 2.0;
        let m = MarginalSet::from_proportions(
            map(&[("D1", rest), ("D2", rest), (OTHER_DEPTS, other_mass)]),
            map(&[("G1", 0.4), ("G2", 0.6)]),
            map(&[("P1", 0.3), ("P2", 0.7)]),
            1000.0,
        )
        .unwrap();
        (WeightedSample::new(rows), m)
    }

    #[test]
    fn other_depts_rows_per_grade_profession_pair() {
        let (sample, m) = other_depts_fixture(0.15);
        let extended = append_other_depts(sample, &m);
        let synthetic: Vec<_> = extended.rows.iter().filter(|r| r.synthetic).collect();
        assert_eq!(synthetic.len(), 4);
        assert!(synthetic.iter().all(|r| r.department == OTHER_DEPTS));
        let again = append_other_depts(extended.clone(), &m);
        assert_eq!(again, extended);
    }

    #[test]
    fn zero_other_depts_mass_drives_rows_to_zero() {
        let (sample, m) = other_depts_fixture(0.0);
        let extended = append_other_depts(sample, &m);
        let out = rake(extended, &m, RakeOptions::default()).unwrap();
        for r in out.sample.rows.iter().filter(|r| r.synthetic) {
            assert!(r.weight.abs() < 1e-12);
        }
        assert!(out.marginal_residual < 1e-5);
    }

    #[test]
    fn scaling_examples() {
        let rows: Vec<_> = [1.0, 1.0, 2.0]
            .iter()
            .enumerate()
            .map(|(i, w)| SampleRow {
                weight: *w,
                ..SampleRow::new(format!("{i}"), "D", "G", "P")
            })
            .collect();
        let scaled = scale_to_population(WeightedSample::new(rows), 8.0).unwrap();
        assert_eq!(scaled.weights(), vec![2.0, 2.0, 4.0]);
        let again = scale_to_population(scaled.clone(), 8.0).unwrap();
        assert_eq!(again.weights(), scaled.weights());
        let zero = WeightedSample::new(vec![SampleRow {
            weight: 0.0,
            ..SampleRow::new("z", "D", "G", "P")
        }]);
        assert_eq!(scale_to_population(zero, 8.0), Err(RakeError::ZeroWeights));
    }

    fn arb_sample() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
        prop::collection::vec((0u8..3, 0u8..2, 0u8..2), 12..40)
    }

    fn sample_from(cells: &[(u8, u8, u8)]) -> WeightedSample {
        let mut rows: Vec<SampleRow> = cells
            .iter()
            .enumerate()
            .map(|(i, (d, g, p))| SampleRow::new(format!("r{i}"), format!("D{d}"), format!("G{g}"), format!("P{p}")))
            .collect();
        // make sure every category has at least one row
        for d in 0..3 {
            rows.push(SampleRow::new(format!("d{d}"), format!("D{d}"), "G0", "P0"));
        }
        rows.push(SampleRow::new("g1", "D0", "G1", "P1"));
        WeightedSample::new(rows)
    }

    fn marginals() -> MarginalSet {
        MarginalSet::from_proportions(
            map(&[("D0", 0.2), ("D1", 0.5), ("D2", 0.3)]),
            map(&[("G0", 0.45), ("G1", 0.55)]),
            map(&[("P0", 0.35), ("P1", 0.65)]),
            5_000.0,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn converged_shares_match_targets(cells in arb_sample()) {
            // every cell populated, so the margins have an interior solution;
            // sparse tables can stall near a boundary with a small step but a
            // visible residual
            let mut sample = sample_from(&cells);
            for d in 0..3 {
                for g in 0..2 {
                    for p in 0..2 {
                        sample.rows.push(SampleRow::new(format!("c{d}{g}{p}"), format!("D{d}"), format!("G{g}"), format!("P{p}")));
                    }
                }
            }
            let m = marginals();
            let out = rake(sample, &m, RakeOptions { tolerance: 1e-9, max_iterations: 500 }).unwrap();
            prop_assert!(out.converged);
            prop_assert!(out.marginal_residual < 1e-6);
            prop_assert!(out.sample.rows.iter().all(|r| r.weight > 0.0));
        }

        #[test]
        fn row_order_does_not_matter(cells in arb_sample(), rot in 0usize..50) {
            let m = marginals();
            let sample = sample_from(&cells);
            let mut rotated = sample.clone();
            let n = rotated.rows.len();
            rotated.rows.rotate_left(rot % n);
            let a = rake(sample, &m, RakeOptions::default()).unwrap();
            let b = rake(rotated, &m, RakeOptions::default()).unwrap();
            for r in &a.sample.rows {
                let other = b.sample.rows.iter().find(|o| o.key == r.key).unwrap();
                prop_assert!(((r.weight - other.weight) / r.weight).abs() < 1e-12);
            }
        }

        #[test]
        fn scaling_preserves_ratios(ws in prop::collection::vec(0.01f64..100.0, 2..20), n in 1.0f64..1e6) {
            let rows = ws.iter().enumerate().map(|(i, w)| SampleRow { weight: *w, ..SampleRow::new(format!("{i}"), "D", "G", "P") }).collect();
            let scaled = scale_to_population(WeightedSample::new(rows), n).unwrap();
            prop_assert!((scaled.total_weight() - n).abs() <= 1e-9 * n);
            for i in 1..ws.len() {
                let before = ws[i] / ws[0];
                let after = scaled.rows[i].weight / scaled.rows[0].weight;
                prop_assert!(((after - before) / before).abs() <= 1e-12);
            }
        }
    }
}
