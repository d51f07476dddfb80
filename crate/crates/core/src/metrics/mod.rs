//! Confusion-matrix metrics and ROC AuC.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "confusion: {} predictions vs {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Metrics whose denominator was zero; their value is reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDenominators {
    pub precision: bool,
    pub sensitivity: bool,
    pub specificity: bool,
    pub f1: bool,
}

impl ZeroDenominators {
    pub fn any(&self) -> bool {
        self.precision || self.sensitivity || self.specificity || self.f1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    /// `None` when the evaluated labels contain one class only.
    pub auc: Option<f64>,
    pub counts: ConfusionCounts,
    pub zero_denominators: ZeroDenominators,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

/// Threshold metrics. `auc` is left unset.
pub fn metrics_from_counts(c: ConfusionCounts) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::invalid("metrics of an empty evaluation"));
    }
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let mut z = ZeroDenominators::default();
    let accuracy = (tp + tn) / (tp + tn + fp + fn_);
    let precision = ratio(tp, tp + fp, &mut z.precision);
    let sensitivity = ratio(tp, tp + fn_, &mut z.sensitivity);
    let specificity = ratio(tn, tn + fp, &mut z.specificity);
    let f1 = ratio(2.0 * (precision * sensitivity), precision + sensitivity, &mut z.f1);
    Ok(MetricsReport {
        accuracy,
        precision,
        sensitivity,
        specificity,
        f1,
        auc: None,
        counts: c,
        zero_denominators: z,
    })
}

/// Area under the ROC curve by the trapezoid rule over every distinct score
/// threshold. Tied positive/negative pairs earn half credit.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "roc_auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("roc_auc: NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0u64, 0u64);
    let (mut prev_tp, mut prev_fp) = (0u64, 0u64);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area += (fp - prev_fp) as f64 * (tp + prev_tp) as f64 / 2.0;
        prev_tp = tp;
        prev_fp = fp;
    }
    Ok(area / (pos as f64 * neg as f64))
}

/// Threshold metrics at `threshold` (≥ rule) plus AuC. A single-class label
/// set leaves `auc` unset rather than failing.
pub fn evaluate_scores(scores: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    let pred = crate::model::predict(scores, threshold);
    let mut report = metrics_from_counts(confusion(&pred, labels)?)?;
    report.auc = match roc_auc(scores, labels) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(report)
}

impl MetricsReport {
    /// `(name, value)` pairs in report order; AuC is omitted when unset.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("f1", self.f1),
        ];
        if let Some(a) = self.auc {
            v.push(("auc", a));
        }
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `metric,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,value")?;
        for (name, v) in self.values() {
            writeln!(out, "{name},{v}")?;
        }
        Ok(())
    }
}
