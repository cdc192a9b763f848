//! Evaluation harness: confusion matrices, imbalance-aware summary metrics,
//! ROC-AUC, per-participant breakdowns, and grouped cross-validation.

mod auc;
mod crossval;
mod folds;
mod report;

pub use auc::roc_auc;
pub use crossval::{run_crossval, CrossvalOptions, CvReport, FoldOutcome};
pub use folds::{make_folds, FoldSpec};
pub use report::{per_participant_report, transitions_csv, TransitionRow};

use crate::error::{Error, Result};

/// Square matrix of (true, predicted) counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    class_order: Vec<String>,
}

impl ConfusionMatrix {
    /// Zero matrix over an ordered class set.
    pub fn new(class_order: Vec<String>) -> Result<Self> {
        if class_order.is_empty() {
            return Err(Error::Metric("empty class order".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &class_order {
            if !seen.insert(c) {
                return Err(Error::Metric(format!("duplicate class {c}")));
            }
        }
        let n = class_order.len();
        Ok(ConfusionMatrix {
            counts: vec![0; n * n],
            class_order,
        })
    }

    /// Build from explicit rows (row = true class).
    pub fn from_rows(class_order: Vec<String>, rows: &[Vec<u64>]) -> Result<Self> {
        let mut cm = ConfusionMatrix::new(class_order)?;
        let n = cm.n_classes();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Metric(format!("expected {n}x{n} rows")));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                cm.counts[i * n + j] = v;
            }
        }
        Ok(cm)
    }

    pub fn n_classes(&self) -> usize {
        self.class_order.len()
    }

    pub fn class_order(&self) -> &[String] {
        &self.class_order
    }

    fn index_of(&self, label: &str) -> Result<usize> {
        self.class_order
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Record one (true, predicted) observation.
    pub fn record(&mut self, true_label: &str, pred_label: &str) -> Result<()> {
        let i = self.index_of(true_label)?;
        let j = self.index_of(pred_label)?;
        let n = self.n_classes();
        self.counts[i * n + j] += 1;
        Ok(())
    }

    /// Merge another matrix with the same class order.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.class_order != other.class_order {
            return Err(Error::Metric("cannot merge matrices with different class orders".into()));
        }
        for (a, &b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn at(&self, true_idx: usize, pred_idx: usize) -> u64 {
        self.counts[true_idx * self.n_classes() + pred_idx]
    }

    pub fn row_total(&self, i: usize) -> u64 {
        (0..self.n_classes()).map(|j| self.at(i, j)).sum()
    }

    pub fn col_total(&self, j: usize) -> u64 {
        (0..self.n_classes()).map(|i| self.at(i, j)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.at(i, i)).sum()
    }

    /// Plain-text grid with row = true class, column = predicted class.
    pub fn to_text_grid(&self) -> String {
        let width = self
            .class_order
            .iter()
            .map(|c| c.len())
            .chain(self.counts.iter().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1)
            .max(4);
        let mut out = format!("{:>w$} |", "t\\p", w = width);
        for c in &self.class_order {
            out.push_str(&format!(" {c:>w$}", w = width));
        }
        out.push('\n');
        for (i, c) in self.class_order.iter().enumerate() {
            out.push_str(&format!("{c:>w$} |", w = width));
            for j in 0..self.n_classes() {
                out.push_str(&format!(" {:>w$}", self.at(i, j), w = width));
            }
            out.push('\n');
        }
        out
    }
}

/// `counts[i][j] = #(true = order[i], predicted = order[j])`.
pub fn confusion_matrix<S: AsRef<str>>(
    pairs: &[(S, S)],
    order: &[S],
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(order.iter().map(|s| s.as_ref().to_string()).collect())?;
    for (t, p) in pairs {
        cm.record(t.as_ref(), p.as_ref())?;
    }
    Ok(cm)
}

/// F1 averaging convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Average {
    /// Support-weighted mean of per-class F1.
    Weighted,
    /// Unweighted mean over classes with support.
    Macro,
    /// F1 of the second class in the order (binary matrices only).
    Binary,
}

impl F1Average {
    pub fn parse(s: &str) -> Result<F1Average> {
        match s {
            "weighted" => Ok(F1Average::Weighted),
            "macro" => Ok(F1Average::Macro),
            "binary" => Ok(F1Average::Binary),
            other => Err(Error::Config(format!("unknown f1_average {other}"))),
        }
    }
}

/// Summary metrics computed from a confusion matrix.
///
/// Recall for a class with no true samples is reported as `None`, never 0;
/// G-mean is only defined for binary matrices with both recalls defined.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class_recall: Vec<(String, Option<f64>)>,
    pub f1: f64,
    pub g_mean: Option<f64>,
    /// Filled by callers that have scores (see [`roc_auc`]); binary only.
    pub roc_auc: Option<f64>,
}

/// Accuracy, per-class recall, averaged F1, and G-mean from a matrix.
pub fn summarize(cm: &ConfusionMatrix, f1_average: F1Average) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metric("cannot summarize an empty confusion matrix".into()));
    }
    let n = cm.n_classes();
    let accuracy = cm.trace() as f64 / total as f64;

    let mut per_class_recall = Vec::with_capacity(n);
    let mut f1_per_class: Vec<Option<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let support = cm.row_total(i);
        let predicted = cm.col_total(i);
        let diag = cm.at(i, i) as f64;
        let recall = (support > 0).then(|| diag / support as f64);
        per_class_recall.push((cm.class_order()[i].clone(), recall));
        let f1 = recall.map(|r| {
            let p = if predicted > 0 { diag / predicted as f64 } else { 0.0 };
            if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                0.0
            }
        });
        f1_per_class.push(f1);
    }

    let f1 = match f1_average {
        F1Average::Weighted => {
            let mut acc = 0.0;
            for i in 0..n {
                if let Some(f) = f1_per_class[i] {
                    acc += cm.row_total(i) as f64 * f;
                }
            }
            acc / total as f64
        }
        F1Average::Macro => {
            let defined: Vec<f64> = f1_per_class.iter().flatten().copied().collect();
            defined.iter().sum::<f64>() / defined.len() as f64
        }
        F1Average::Binary => {
            if n != 2 {
                return Err(Error::Metric(format!(
                    "binary F1 requires 2 classes, matrix has {n}"
                )));
            }
            f1_per_class[1].unwrap_or(0.0)
        }
    };

    let g_mean = if n == 2 {
        match (per_class_recall[0].1, per_class_recall[1].1) {
            (Some(a), Some(b)) => Some((a * b).sqrt()),
            _ => None,
        }
    } else {
        None
    };

    Ok(MetricsReport {
        accuracy,
        per_class_recall,
        f1,
        g_mean,
        roc_auc: None,
    })
}
