//! Confusion matrices and the classification scores derived from them.
//! Rows are actual classes, columns predicted classes.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Unweighted means over classes with nonzero support.
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Support-weighted means.
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(invalid("confusion matrix must be square and non-empty"));
        }
        Ok(ConfusionMatrix { counts: rows })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn record(&mut self, actual: usize, predicted: usize) -> Result<()> {
        let n = self.classes();
        if actual >= n || predicted >= n {
            return Err(invalid(format!(
                "class pair ({actual}, {predicted}) outside 0..{n}"
            )));
        }
        self.counts[actual][predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`, or 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    /// CSV with a header of class names; the first column names the
    /// actual class.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("actual\\predicted");
        for n in names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (name, row) in names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses either the labelled layout written by [`Self::to_csv`] or a
    /// bare square grid of counts. Returns the matrix and class names.
    pub fn from_csv(text: &str) -> Result<(Self, Vec<String>)> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let records: Vec<csv::StringRecord> =
            rdr.records().collect::<std::result::Result<_, _>>()?;
        let Some(first) = records.first() else {
            return Err(Error::Format("empty confusion matrix file".into()));
        };
        let labelled = first.get(0).is_some_and(|f| f.parse::<u64>().is_err());
        let (body, names): (&[csv::StringRecord], Vec<String>) = if labelled {
            (
                &records[1..],
                first.iter().skip(1).map(str::to_string).collect(),
            )
        } else {
            (
                &records[..],
                (0..first.len()).map(|i| format!("class{i}")).collect(),
            )
        };
        let skip = usize::from(labelled);
        let rows = body
            .iter()
            .map(|r| {
                r.iter()
                    .skip(skip)
                    .map(|f| {
                        f.parse::<u64>().map_err(|_| {
                            Error::Format(format!("'{f}' is not a non-negative count"))
                        })
                    })
                    .collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let cm = Self::from_rows(rows).map_err(|e| Error::Format(e.to_string()))?;
        if names.len() != cm.classes() {
            return Err(Error::Format("header and matrix sizes differ".into()));
        }
        Ok((cm, names))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(invalid("confusion matrix has no samples"));
    }
    let n = cm.classes();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|k| {
            let tp = cm.get(k, k);
            let support: u64 = cm.rows()[k].iter().sum();
            let predicted: u64 = (0..n).map(|i| cm.get(i, k)).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let present: Vec<&ClassMetrics> = per_class.iter().filter(|c| c.support > 0).collect();
    let k = present.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| present.iter().map(|c| f(c)).sum::<f64>() / k;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        present.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
    };
    Ok(Metrics {
        accuracy: cm.accuracy(),
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        weighted_precision: weighted(|c| c.precision),
        weighted_recall: weighted(|c| c.recall),
        weighted_f1: weighted(|c| c.f1),
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::from_rows(vec![vec![3, 0], vec![0, 5]]).unwrap();
        let m = evaluate_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(
            (m.macro_precision, m.macro_recall, m.macro_f1),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(m.weighted_f1, 1.0);
    }

    #[test]
    fn hand_computed_two_class() {
        // actual 0: 8 right, 2 wrong; actual 1: 1 wrong, 9 right
        let cm = ConfusionMatrix::from_rows(vec![vec![8, 2], vec![1, 9]]).unwrap();
        let m = evaluate_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 17.0 / 20.0);
        assert_eq!(m.per_class[0].precision, 8.0 / 9.0);
        assert_eq!(m.per_class[0].recall, 0.8);
        assert_eq!(m.per_class[1].precision, 9.0 / 11.0);
        assert!((m.macro_recall - 0.85).abs() < 1e-15);
    }

    #[test]
    fn macro_skips_absent_classes() {
        let cm =
            ConfusionMatrix::from_rows(vec![vec![4, 0, 0], vec![0, 0, 0], vec![0, 0, 2]]).unwrap();
        assert_eq!(evaluate_metrics(&cm).unwrap().macro_recall, 1.0);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(evaluate_metrics(&ConfusionMatrix::new(3)).is_err());
        assert!(ConfusionMatrix::from_rows(vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cm = ConfusionMatrix::from_rows(vec![vec![3, 1], vec![0, 5]]).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let (back, n) = ConfusionMatrix::from_csv(&cm.to_csv(&names)).unwrap();
        assert_eq!((back, n), (cm.clone(), names));
        let (bare, _) = ConfusionMatrix::from_csv("3,1\n0,5\n").unwrap();
        assert_eq!(bare, cm);
        assert!(ConfusionMatrix::from_csv("1,-2\n3,4\n").is_err());
    }
}
