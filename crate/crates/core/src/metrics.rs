//! Confusion matrices, macro-F1 and unweighted average recall.

use serde::{Deserialize, Serialize};

use crate::emotion::ClassLabel;
use crate::error::{Error, Result};

/// How classes without any ground-truth frames enter the macro averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AbsentClassPolicy {
    /// Undefined precision/recall/F1 count as 0 and stay in the mean.
    #[default]
    Zero,
    /// Classes with zero support are left out of both means.
    Exclude,
}

/// Square count matrix; rows are ground truth, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn for_labels<L: ClassLabel>() -> Self {
        Self::zeros(L::names().into_iter().map(String::from).collect())
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    #[inline]
    pub fn record(&mut self, truth: usize, pred: usize) {
        self.counts[truth][pred] += 1;
    }

    /// Adds the counts of another matrix over the same classes.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.class_names != self.class_names {
            return Err(Error::Data("cannot merge confusion matrices over different classes".into()));
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        Ok(())
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.counts[class][class], self.predicted(class))
    }

    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.counts[class][class], self.support(class))
    }

    pub fn f1(&self, class: usize) -> f64 {
        let p = self.precision(class);
        let r = self.recall(class);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.num_classes() == 0 || self.total() == 0 {
            return Err(Error::Data("confusion matrix is empty".into()));
        }
        Ok(())
    }

    fn included(&self, policy: AbsentClassPolicy) -> Vec<usize> {
        (0..self.num_classes())
            .filter(|&k| policy == AbsentClassPolicy::Zero || self.support(k) > 0)
            .collect()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_over(classes: &[usize], f: impl Fn(usize) -> f64) -> f64 {
    classes.iter().map(|&k| f(k)).sum::<f64>() / classes.len() as f64
}

/// Tallies `truth`/`pred` label indices into a `k`-class confusion matrix.
pub fn confusion(truth: &[usize], pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Data(format!(
            "truth has {} labels but predictions have {}",
            truth.len(),
            pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros((0..k).map(|i| i.to_string()).collect());
    for (i, (&t, &p)) in truth.iter().zip(pred).enumerate() {
        if t >= k || p >= k {
            return Err(Error::Data(format!(
                "label out of range at position {i}: truth {t}, prediction {p}, classes {k}"
            )));
        }
        cm.record(t, p);
    }
    Ok(cm)
}

/// Typed variant of [`confusion`] with class names filled in.
pub fn confusion_for<L: ClassLabel>(truth: &[L], pred: &[L]) -> Result<ConfusionMatrix> {
    let t: Vec<usize> = truth.iter().map(|l| l.index()).collect();
    let p: Vec<usize> = pred.iter().map(|l| l.index()).collect();
    let mut cm = confusion(&t, &p, L::ALL.len())?;
    cm.class_names = L::names().into_iter().map(String::from).collect();
    Ok(cm)
}

pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    macro_f1_with(cm, AbsentClassPolicy::Zero)
}

pub fn macro_f1_with(cm: &ConfusionMatrix, policy: AbsentClassPolicy) -> Result<f64> {
    cm.check_nonempty()?;
    Ok(mean_over(&cm.included(policy), |k| cm.f1(k)))
}

pub fn uar(cm: &ConfusionMatrix) -> Result<f64> {
    uar_with(cm, AbsentClassPolicy::Zero)
}

pub fn uar_with(cm: &ConfusionMatrix, policy: AbsentClassPolicy) -> Result<f64> {
    cm.check_nonempty()?;
    Ok(mean_over(&cm.included(policy), |k| cm.recall(k)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub macro_f1: f64,
    pub uar: f64,
    pub per_class_f1: Vec<f64>,
    pub per_class_recall: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub frames_evaluated: u64,
    pub absent_class_policy: AbsentClassPolicy,
}

impl EvaluationReport {
    pub fn from_confusion(cm: ConfusionMatrix, policy: AbsentClassPolicy) -> Result<Self> {
        let macro_f1 = macro_f1_with(&cm, policy)?;
        let uar = uar_with(&cm, policy)?;
        let k = cm.num_classes();
        Ok(EvaluationReport {
            macro_f1,
            uar,
            per_class_f1: (0..k).map(|c| cm.f1(c)).collect(),
            per_class_recall: (0..k).map(|c| cm.recall(c)).collect(),
            frames_evaluated: cm.total(),
            confusion: cm,
            absent_class_policy: policy,
        })
    }

    /// Percentages with two decimals, e.g. `F1 = 46.79  UAR = 51.79`.
    pub fn summary_line(&self) -> String {
        format!("F1 = {:.2}  UAR = {:.2}", self.macro_f1 * 100.0, self.uar * 100.0)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("frames evaluated: {}\n", self.frames_evaluated));
        out.push_str(&self.summary_line());
        out.push('\n');
        let width = self
            .confusion
            .class_names
            .iter()
            .map(|n| n.len())
            .max()
            .unwrap_or(5)
            .max(5);
        out.push_str(&format!("{:<width$}  {:>7}  {:>7}  {:>7}\n", "class", "F1", "recall", "support"));
        for (k, name) in self.confusion.class_names.iter().enumerate() {
            out.push_str(&format!(
                "{:<width$}  {:>7.2}  {:>7.2}  {:>7}\n",
                name,
                self.per_class_f1[k] * 100.0,
                self.per_class_recall[k] * 100.0,
                self.confusion.support(k)
            ));
        }
        out
    }
}
