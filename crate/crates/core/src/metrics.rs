//! Confusion-matrix accounting and the per-class classification report.
//!
//! Precision, recall and F1 are total functions: a vanishing denominator
//! yields 0.0 and the report records a [`ZeroDivision`] warning for it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::ops::Add;

use serde::{Deserialize, Serialize};

use crate::dataset::HarmonizedRecord;
use crate::{ClassLabel, Error, Result};

/// One-vs-rest counts for a chosen positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            true_pos: self.true_pos + o.true_pos,
            true_neg: self.true_neg + o.true_neg,
            false_pos: self.false_pos + o.false_pos,
            false_neg: self.false_neg + o.false_neg,
        }
    }
}

impl ConfusionCounts {
    pub fn new(true_pos: u64, true_neg: u64, false_pos: u64, false_neg: u64) -> Self {
        ConfusionCounts { true_pos, true_neg, false_pos, false_neg }
    }

    /// Tallies `(truth, predicted)` pairs with `positive` as the positive class.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ClassLabel, ClassLabel)>, positive: ClassLabel) -> Self {
        let mut c = ConfusionCounts::default();
        for (truth, pred) in pairs {
            match (truth == positive, pred == positive) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_neg += 1,
                (false, true) => c.false_pos += 1,
                (false, false) => c.true_neg += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    /// The same matrix seen from the other class.
    pub fn swapped(&self) -> Self {
        ConfusionCounts {
            true_pos: self.true_neg,
            true_neg: self.true_pos,
            false_pos: self.false_neg,
            false_neg: self.false_pos,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    ratio(c.true_pos + c.true_neg, c.total()).ok_or(Error::EmptyEvaluation)
}

pub fn precision(c: &ConfusionCounts) -> f64 {
    ratio(c.true_pos, c.true_pos + c.false_pos).unwrap_or(0.0)
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.true_pos, c.true_pos + c.false_neg).unwrap_or(0.0)
}

/// Harmonic mean of precision and recall, 0.0 when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn f1(c: &ConfusionCounts) -> f64 {
    f1_score(precision(c), recall(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDivision {
    pub class: ClassLabel,
    pub metric: Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl core::fmt::Display for ZeroDivision {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let metric = match self.metric {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        };
        write!(f, "{metric} of {} has a zero denominator; reported as 0.0", self.class.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub label: ClassLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvgRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Indexed by class id.
    pub per_class: [ClassRow; 2],
    pub accuracy: f64,
    pub macro_avg: AvgRow,
    pub weighted_avg: AvgRow,
    pub total: u64,
    /// Counts with cheating as the positive class.
    pub confusion: ConfusionCounts,
    pub warnings: Vec<ZeroDivision>,
}

impl MetricsReport {
    /// Builds the report from the cheating-positive confusion matrix.
    pub fn from_counts(c: ConfusionCounts) -> Result<Self> {
        let accuracy = accuracy(&c)?;
        let mut warnings = Vec::new();
        let mut row = |label: ClassLabel, k: &ConfusionCounts| {
            if k.true_pos + k.false_pos == 0 {
                warnings.push(ZeroDivision { class: label, metric: Metric::Precision });
            }
            if k.true_pos + k.false_neg == 0 {
                warnings.push(ZeroDivision { class: label, metric: Metric::Recall });
            }
            let (p, r) = (precision(k), recall(k));
            if p + r == 0.0 {
                warnings.push(ZeroDivision { class: label, metric: Metric::F1 });
            }
            ClassRow { label, precision: p, recall: r, f1: f1_score(p, r), support: k.true_pos + k.false_neg }
        };
        let per_class = [row(ClassLabel::NotCheating, &c.swapped()), row(ClassLabel::Cheating, &c)];
        let total = c.total();

        let macro_avg = AvgRow {
            precision: (per_class[0].precision + per_class[1].precision) / 2.0,
            recall: (per_class[0].recall + per_class[1].recall) / 2.0,
            f1: (per_class[0].f1 + per_class[1].f1) / 2.0,
            support: total,
        };
        let weight = |f: fn(&ClassRow) -> f64| {
            per_class.iter().map(|r| f(r) * r.support as f64).sum::<f64>() / total as f64
        };
        let weighted_avg = AvgRow {
            precision: weight(|r| r.precision),
            recall: weight(|r| r.recall),
            f1: weight(|r| r.f1),
            support: total,
        };
        Ok(MetricsReport { per_class, accuracy, macro_avg, weighted_avg, total, confusion: c, warnings })
    }

    pub fn row(&self, label: ClassLabel) -> &ClassRow {
        &self.per_class[label.index()]
    }

    /// Fixed-width text table with two-decimal values.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14}{:>10}{:>10}{:>10}{:>10}", "", "precision", "recall", "f1-score", "support");
        for r in &self.per_class {
            let _ = writeln!(
                s,
                "{:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                r.label.name(),
                r.precision,
                r.recall,
                r.f1,
                r.support
            );
        }
        let _ = writeln!(s, "{:<14}{:>10}{:>10}{:>10.2}{:>10}", "accuracy", "", "", self.accuracy, self.total);
        for (name, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                name, a.precision, a.recall, a.f1, a.support
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub truth: ClassLabel,
    pub predicted: ClassLabel,
    pub frame_id: String,
}

pub fn classification_report(pairs: &[EvalPair]) -> Result<MetricsReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let c = ConfusionCounts::from_pairs(pairs.iter().map(|p| (p.truth, p.predicted)), ClassLabel::Cheating);
    MetricsReport::from_counts(c)
}

/// Whole-frame label: cheating iff any annotation in the frame is cheating.
pub fn ablation_label(records: &[HarmonizedRecord]) -> ClassLabel {
    if records.iter().any(|r| r.label == ClassLabel::Cheating) {
        ClassLabel::Cheating
    } else {
        ClassLabel::NotCheating
    }
}

/// Groups records by image and labels each image, in order of first
/// appearance.
pub fn ablation_labels(records: &[HarmonizedRecord]) -> Vec<(String, ClassLabel)> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out: Vec<(String, ClassLabel)> = Vec::new();
    for r in records {
        let slot = *index.entry(r.image_path.as_str()).or_insert_with(|| {
            out.push((r.image_path.clone(), ClassLabel::NotCheating));
            out.len() - 1
        });
        if r.label == ClassLabel::Cheating {
            out[slot].1 = ClassLabel::Cheating;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BBox;
    use alloc::string::ToString;
    use alloc::vec;

    fn pair(t: ClassLabel, p: ClassLabel) -> EvalPair {
        EvalPair { truth: t, predicted: p, frame_id: "f".to_string() }
    }

    #[test]
    fn accuracy_examples() {
        let fig5 = ConfusionCounts::new(1672, 4905, 152, 166);
        let acc = accuracy(&fig5).unwrap();
        assert_eq!(acc, 6577.0 / 6895.0);
        assert!((acc - 0.9539).abs() < 5e-5);
        assert_eq!(accuracy(&ConfusionCounts::new(1, 1, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(&ConfusionCounts::new(0, 0, 1, 1)).unwrap(), 0.0);
        assert_eq!(accuracy(&ConfusionCounts::default()), Err(Error::EmptyEvaluation));
    }

    #[test]
    fn precision_recall_f1_examples() {
        let fig5 = ConfusionCounts::new(1672, 4905, 152, 166);
        assert!((precision(&fig5) - 0.9167).abs() < 5e-5);
        assert!((recall(&fig5) - 0.9097).abs() < 5e-5);
        assert!((f1(&fig5) - 0.9132).abs() < 5e-5);
        assert!((f1_score(0.9167, 0.9097) - 0.9132).abs() < 5e-5);
        assert_eq!(precision(&ConfusionCounts::new(0, 5, 0, 3)), 0.0);
        assert_eq!(f1_score(1.0, 1.0), 1.0);
        assert_eq!(f1_score(1.0, 0.0), 0.0);
    }

    #[test]
    fn six_pair_report() {
        use ClassLabel::*;
        let mut pairs = vec![pair(NotCheating, NotCheating); 4];
        pairs.push(pair(Cheating, Cheating));
        pairs.push(pair(Cheating, NotCheating));
        let r = classification_report(&pairs).unwrap();
        let c = r.row(Cheating);
        assert_eq!((c.recall, c.precision), (0.5, 1.0));
        assert!((c.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.accuracy - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!((r.row(NotCheating).support, c.support), (4, 2));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn perfect_report_is_all_ones() {
        use ClassLabel::*;
        let pairs = [pair(Cheating, Cheating), pair(NotCheating, NotCheating)];
        let r = classification_report(&pairs).unwrap();
        for row in &r.per_class {
            assert_eq!((row.precision, row.recall, row.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
        assert_eq!((r.macro_avg.f1, r.weighted_avg.f1), (1.0, 1.0));
    }

    #[test]
    fn zero_division_is_warned() {
        use ClassLabel::*;
        let r = classification_report(&[pair(NotCheating, NotCheating)]).unwrap();
        let c = r.row(Cheating);
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.warnings.len(), 3);
        assert!(r.warnings.iter().all(|w| w.class == Cheating));
        assert_eq!(classification_report(&[]), Err(Error::EmptyEvaluation));
    }

    #[test]
    fn macro_precision_from_table_rows() {
        // per-class precisions 0.97 and 0.91 average to 0.94
        let c = ConfusionCounts::new(91, 97, 9, 3);
        let r = MetricsReport::from_counts(c).unwrap();
        assert!((r.row(ClassLabel::Cheating).precision - 0.91).abs() < 1e-12);
        assert!((r.row(ClassLabel::NotCheating).precision - 0.97).abs() < 1e-12);
        assert!((r.macro_avg.precision - 0.94).abs() < 1e-12);
    }

    #[test]
    fn render_has_two_decimals() {
        let r = MetricsReport::from_counts(ConfusionCounts::new(1, 4, 0, 1)).unwrap();
        let text = r.render();
        assert!(text.contains("cheating"));
        assert!(text.contains("0.83"));
        assert!(text.contains("macro avg"));
    }

    fn rec(path: &str, label: ClassLabel) -> HarmonizedRecord {
        HarmonizedRecord {
            image_path: path.to_string(),
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            label,
            source_name: "s".to_string(),
        }
    }

    #[test]
    fn ablation_examples() {
        use ClassLabel::*;
        let mixed = [rec("a", NotCheating), rec("a", Cheating), rec("a", NotCheating)];
        assert_eq!(ablation_label(&mixed), Cheating);
        assert_eq!(ablation_label(&[]), NotCheating);
        assert_eq!(ablation_label(&vec![rec("a", NotCheating); 5]), NotCheating);

        let recs = [rec("b", NotCheating), rec("a", NotCheating), rec("b", Cheating)];
        assert_eq!(
            ablation_labels(&recs),
            vec![("b".to_string(), Cheating), ("a".to_string(), NotCheating)]
        );
    }
}
