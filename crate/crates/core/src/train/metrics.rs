//! Classification metrics over the twenty amino-acid classes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amino::{AminoAcid, NUM_CLASSES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    Empty,
    #[error("k = {0} outside 1..=20")]
    KOutOfRange(usize),
    #[error("label {0} outside 0..20")]
    LabelOutOfRange(usize),
    #[error("{probs} probability rows but {labels} labels")]
    LengthMismatch { probs: usize, labels: usize },
    #[error("probability row {row} has {len} entries, expected 20")]
    RowWidth { row: usize, len: usize },
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix {
            counts: [[0; NUM_CLASSES]; NUM_CLASSES],
        }
    }
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    /// `(tp, fp, fn, tn)` for class `c`, one-vs-rest.
    pub fn tallies(&self, c: usize) -> (u64, u64, u64, u64) {
        let tp = self.counts[c][c];
        let fp = self.col_sum(c) - tp;
        let fn_ = self.row_sum(c) - tp;
        (tp, fp, fn_, self.total() - tp - fp - fn_)
    }

    /// Writes the matrix as CSV with class codes on both axes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for aa in AminoAcid::ALL {
            s.push(',');
            s.push_str(aa.three_letter());
        }
        s.push('\n');
        for (aa, row) in AminoAcid::ALL.iter().zip(&self.counts) {
            s.push_str(aa.three_letter());
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Fraction of samples on the diagonal.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    match cm.total() {
        0 => Err(MetricsError::Empty),
        n => Ok(cm.trace() as f64 / n as f64),
    }
}

/// Recall, precision and F1 for one class. `undefined` is set when any of
/// the three had a zero denominator and was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub undefined: bool,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> [ClassMetrics; NUM_CLASSES] {
    std::array::from_fn(|c| {
        let (tp, fp, fn_, _) = cm.tallies(c);
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        ClassMetrics {
            recall: recall.unwrap_or(0.0),
            precision: precision.unwrap_or(0.0),
            f1: f1.unwrap_or(0.0),
            undefined: recall.is_none() || precision.is_none() || f1.is_none(),
        }
    })
}

fn check_rows(probs: &[Vec<f64>], labels: &[usize]) -> Result<(), MetricsError> {
    if probs.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            probs: probs.len(),
            labels: labels.len(),
        });
    }
    if let Some((row, p)) = probs.iter().enumerate().find(|(_, p)| p.len() != NUM_CLASSES) {
        return Err(MetricsError::RowWidth { row, len: p.len() });
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
        return Err(MetricsError::LabelOutOfRange(l));
    }
    Ok(())
}

/// Classes ordered by descending probability; equal probabilities keep
/// the lower class index first.
pub fn ranked_classes(row: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx
}

/// Rank of `label` in `row` (0 = most probable) under [`ranked_classes`]
/// ordering, computed without sorting.
fn rank_of(row: &[f64], label: usize) -> usize {
    let p = row[label];
    row.iter()
        .enumerate()
        .filter(|&(j, &q)| q.total_cmp(&p).is_gt() || (q.total_cmp(&p).is_eq() && j < label))
        .count()
}

/// Fraction of samples whose label is among the `k` most probable classes.
pub fn topk_accuracy(probs: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64, MetricsError> {
    if !(1..=NUM_CLASSES).contains(&k) {
        return Err(MetricsError::KOutOfRange(k));
    }
    check_rows(probs, labels)?;
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = probs.iter().zip(labels).filter(|(p, &l)| rank_of(p, l) < k).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Top-k accuracy for every k in 1..=20 from one pass over the ranks.
pub fn topk_curve(probs: &[Vec<f64>], labels: &[usize]) -> Result<[f64; NUM_CLASSES], MetricsError> {
    check_rows(probs, labels)?;
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut at_rank = [0u64; NUM_CLASSES];
    for (p, &l) in probs.iter().zip(labels) {
        at_rank[rank_of(p, l)] += 1;
    }
    let n = labels.len() as f64;
    let mut acc = 0;
    Ok(std::array::from_fn(|k| {
        acc += at_rank[k];
        acc as f64 / n
    }))
}

/// Argmax (lowest index on ties) confusion matrix.
pub fn confusion_from_predictions(probs: &[Vec<f64>], labels: &[usize]) -> Result<ConfusionMatrix, MetricsError> {
    check_rows(probs, labels)?;
    let mut cm = ConfusionMatrix::default();
    for (p, &l) in probs.iter().zip(labels) {
        cm.record(l, ranked_classes(p)[0]);
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassEntry {
    pub class: AminoAcid,
    #[serde(flatten)]
    pub metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: u64,
    pub accuracy: f64,
    pub per_class: Vec<PerClassEntry>,
    /// `topk[k-1]` is the top-k accuracy.
    pub topk: Vec<f64>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    /// Builds the report and asserts the consistency relations between
    /// accuracy and the top-k curve.
    pub fn compute(probs: &[Vec<f64>], labels: &[usize]) -> Result<Self, MetricsError> {
        let confusion = confusion_from_predictions(probs, labels)?;
        let accuracy = accuracy(&confusion)?;
        let topk = topk_curve(probs, labels)?;
        assert_eq!(accuracy, topk[0], "top-1 accuracy disagrees with the confusion matrix");
        assert!(topk.windows(2).all(|w| w[0] <= w[1]), "top-k curve not monotone");
        assert_eq!(topk[NUM_CLASSES - 1], 1.0, "top-20 accuracy below 1");
        let per_class = AminoAcid::ALL
            .iter()
            .zip(per_class_metrics(&confusion))
            .map(|(&class, metrics)| PerClassEntry { class, metrics })
            .collect();
        Ok(MetricsReport {
            samples: confusion.total(),
            accuracy,
            per_class,
            topk: topk.to_vec(),
            confusion,
        })
    }
}
