//! Confusion counts and the four evaluation scores.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

/// Counts indexed by `[gold][predicted]` in positive/negative/neutral order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts(pub [[u64; 3]; 3]);

impl ConfusionCounts {
    pub fn get(&self, gold: Label, pred: Label) -> u64 {
        self.0[gold.index()][pred.index()]
    }

    pub fn add(&mut self, gold: Label, pred: Label) {
        self.0[gold.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.0[i][i]).sum()
    }

    /// Precision, recall and F1 of one class, with 0/0 taken as 0.
    pub fn class_scores(&self, label: Label) -> (f64, f64, f64) {
        let i = label.index();
        let tp = self.0[i][i];
        let predicted: u64 = (0..3).map(|g| self.0[g][i]).sum();
        let actual: u64 = self.0[i].iter().sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        (p, r, harmonic(p, r))
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_pm_macro: f64,
    pub f1_pm_micro: f64,
}

pub fn confusion(gold: &[Label], pred: &[Label]) -> Result<ConfusionCounts> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&g, &p) in gold.iter().zip(pred) {
        c.add(g, p);
    }
    Ok(c)
}

pub fn score(c: &ConfusionCounts) -> Result<MetricsReport> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Data("cannot score an empty confusion matrix".into()));
    }
    let f1 = Label::ALL.map(|l| c.class_scores(l).2);
    let (pos, neg) = (Label::Positive.index(), Label::Negative.index());

    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for s in [pos, neg] {
        tp += c.0[s][s];
        fp += (0..3).filter(|&g| g != s).map(|g| c.0[g][s]).sum::<u64>();
        fn_ += (0..3).filter(|&q| q != s).map(|q| c.0[s][q]).sum::<u64>();
    }
    let micro = harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn_));

    Ok(MetricsReport {
        accuracy: c.trace() as f64 / total as f64,
        f1_macro: f1.iter().sum::<f64>() / 3.0,
        f1_pm_macro: (f1[pos] + f1[neg]) / 2.0,
        f1_pm_micro: micro,
    })
}

#[derive(Debug, Deserialize)]
struct IdLabel {
    id: String,
    label: Label,
}

fn read_id_labels(path: &Path) -> Result<Vec<IdLabel>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: IdLabel = serde_json::from_str(&line).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
        out.push(row);
    }
    Ok(out)
}

/// Joins a gold JSONL file (any rows carrying `id` and `label`) with a
/// prediction JSONL file of `{"id","label"}` rows. Every gold id needs
/// exactly one prediction and every prediction a gold row.
pub fn confusion_from_files(gold: &Path, pred: &Path) -> Result<ConfusionCounts> {
    let gold_rows = read_id_labels(gold)?;
    let mut predicted: HashMap<String, Label> = HashMap::new();
    for row in read_id_labels(pred)? {
        if predicted.insert(row.id.clone(), row.label).is_some() {
            return Err(Error::Data(format!("duplicate prediction for id {:?}", row.id)));
        }
    }
    let mut c = ConfusionCounts::default();
    let mut seen = std::collections::HashSet::new();
    for row in &gold_rows {
        if !seen.insert(row.id.as_str()) {
            return Err(Error::Data(format!("duplicate gold id {:?}", row.id)));
        }
        let p = predicted
            .get(&row.id)
            .ok_or_else(|| Error::Data(format!("no prediction for id {:?}", row.id)))?;
        c.add(row.label, *p);
    }
    if predicted.len() != gold_rows.len() {
        let stray = predicted.keys().filter(|k| !seen.contains(k.as_str())).min().cloned().unwrap_or_default();
        return Err(Error::Data(format!("prediction for unknown id {stray:?}")));
    }
    Ok(c)
}
