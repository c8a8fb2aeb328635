//! Classification metrics and paired disagreement analysis.
//!
//! Precision, recall and F1 of a class with no predictions, no gold
//! examples, or both are 0. Macro-F1 is the unweighted mean over all
//! `n_classes`, absent classes included.

use std::fmt;

use crate::error::{QatError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][pred]`
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate_predictions(preds: &[usize], gold: &[usize], n_classes: usize) -> Result<EvalReport> {
    if preds.len() != gold.len() {
        return Err(QatError::Length(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            gold.len()
        )));
    }
    if let Some(&c) = preds.iter().chain(gold).find(|&&c| c >= n_classes) {
        return Err(QatError::LabelOutOfRange { label: c, n_classes });
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &g) in preds.iter().zip(gold) {
        confusion[g][p] += 1;
    }
    let total = preds.len();
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: usize = (0..n_classes).map(|g| confusion[g][c]).sum();
            let support: usize = confusion[c].iter().sum();
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
    let macro_f1 = if n_classes == 0 {
        0.0
    } else {
        per_class.iter().map(|m| m.f1).sum::<f64>() / n_classes as f64
    };
    Ok(EvalReport {
        accuracy: ratio(correct, total),
        macro_f1,
        per_class,
        confusion,
    })
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn macro_precision(&self) -> f64 {
        self.per_class.iter().map(|m| m.precision).sum::<f64>() / self.per_class.len().max(1) as f64
    }

    pub fn macro_recall(&self) -> f64 {
        self.per_class.iter().map(|m| m.recall).sum::<f64>() / self.per_class.len().max(1) as f64
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "examples,{}", self.total())?;
        writeln!(f, "accuracy,{}", self.accuracy)?;
        writeln!(f, "macro_f1,{}", self.macro_f1)?;
        writeln!(f, "macro_precision,{}", self.macro_precision())?;
        writeln!(f, "macro_recall,{}", self.macro_recall())?;
        writeln!(f, "class,precision,recall,f1,support")?;
        for (c, m) in self.per_class.iter().enumerate() {
            writeln!(f, "{c},{},{},{},{}", m.precision, m.recall, m.f1, m.support)?;
        }
        writeln!(f, "confusion (rows gold, columns predicted)")?;
        for row in &self.confusion {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Where two prediction vectors differ, who matched gold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisagreementReport {
    pub n_total: usize,
    pub n_disagree: usize,
    pub a_correct: usize,
    pub b_correct: usize,
    pub both_wrong: usize,
}

pub fn disagree(preds_a: &[usize], preds_b: &[usize], gold: &[usize]) -> Result<DisagreementReport> {
    if preds_a.len() != preds_b.len() || preds_a.len() != gold.len() {
        return Err(QatError::Length(format!(
            "prediction lengths {} and {} against {} gold labels",
            preds_a.len(),
            preds_b.len(),
            gold.len()
        )));
    }
    let mut r = DisagreementReport {
        n_total: gold.len(),
        n_disagree: 0,
        a_correct: 0,
        b_correct: 0,
        both_wrong: 0,
    };
    for ((&a, &b), &g) in preds_a.iter().zip(preds_b).zip(gold) {
        if a == b {
            continue;
        }
        r.n_disagree += 1;
        if a == g {
            r.a_correct += 1;
        } else if b == g {
            r.b_correct += 1;
        } else {
            r.both_wrong += 1;
        }
    }
    Ok(r)
}

impl fmt::Display for DisagreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let share = |n: usize| 100.0 * ratio(n, self.n_disagree);
        writeln!(f, "total,{}", self.n_total)?;
        writeln!(f, "disagree,{}", self.n_disagree)?;
        writeln!(f, "a_correct,{},{:.1}%", self.a_correct, share(self.a_correct))?;
        writeln!(f, "b_correct,{},{:.1}%", self.b_correct, share(self.b_correct))?;
        writeln!(f, "both_wrong,{},{:.1}%", self.both_wrong, share(self.both_wrong))
    }
}
