//! Inter-rater agreement over a ratings table.

use std::path::Path;

use task_exposure_core::agreement::{krippendorff_alpha_interval, pearson, spearman, AgreementError};

#[derive(Debug, thiserror::Error)]
pub enum RatingsError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("need at least two rater columns, found {0}")]
    TooFewRaters(usize),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
}

/// One column per rater, one row per unit; `None` where a rater gave no score.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratings {
    pub raters: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Ratings {
    pub fn read(path: &Path) -> Result<Self, RatingsError> {
        let err = |message: String| RatingsError::Read {
            path: path.display().to_string(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| err(e.to_string()))?;
        let raters: Vec<String> = rdr.headers().map_err(|e| err(e.to_string()))?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let row = rec
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| err(format!("row {}: `{c}` is not a number", i + 2)))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Ratings { raters, rows })
    }

    fn column_pair(&self, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter_map(|r| Some((r.get(a).copied().flatten()?, r.get(b).copied().flatten()?)))
            .unzip()
    }

    /// Units as lists of the ratings they received.
    pub fn units(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().flatten().copied().collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementSummary {
    pub mean_spearman: f64,
    pub mean_pearson: f64,
    pub alpha: f64,
    pub pairs: usize,
}

/// Mean pairwise correlations over rows both raters scored, and alpha over
/// all units.
pub fn summarise(r: &Ratings) -> Result<AgreementSummary, RatingsError> {
    let k = r.raters.len();
    if k < 2 {
        return Err(RatingsError::TooFewRaters(k));
    }
    let (mut s, mut p, mut pairs) = (0.0, 0.0, 0);
    for a in 0..k {
        for b in a + 1..k {
            let (x, y) = r.column_pair(a, b);
            s += spearman(&x, &y)?;
            p += pearson(&x, &y)?;
            pairs += 1;
        }
    }
    Ok(AgreementSummary {
        mean_spearman: s / pairs as f64,
        mean_pearson: p / pairs as f64,
        alpha: krippendorff_alpha_interval(&r.units())?,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_cells_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "a,b,c\n0.1,0.2,\n0.5,0.4,0.6\n0.9,0.8,0.7\n0.3,,0.2\n").unwrap();
        let r = Ratings::read(&p).unwrap();
        assert_eq!(r.rows[0][2], None);
        assert_eq!(r.units()[3], vec![0.3, 0.2]);
        let s = summarise(&r).unwrap();
        assert_eq!(s.pairs, 3);
        assert!(s.alpha > 0.5 && s.alpha <= 1.0);
    }

    #[test]
    fn constant_ratings_error() {
        let r = Ratings {
            raters: vec!["a".into(), "b".into()],
            rows: vec![vec![Some(0.5), Some(0.5)], vec![Some(0.5), Some(0.5)]],
        };
        assert!(summarise(&r).is_err());
    }
}
