//! Evaluation of a model on labelled test examples.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::boost::StrongModel;
use crate::dataset::LabelDict;
use crate::error::{Error, Result};
use crate::predict::{rank_labels, resolve, score, Prediction, TestTripletSet, TiePolicy};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub label: String,
    pub count: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub abstention_rate: f64,
    pub per_class: Vec<ClassAccuracy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_at_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_at_k: Option<f64>,
}

impl EvalReport {
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "accuracy={}", self.accuracy);
        let _ = writeln!(out, "abstention_rate={}", self.abstention_rate);
        for c in &self.per_class {
            let _ = writeln!(out, "accuracy[{}]={}", c.label, c.accuracy);
        }
        if let Some(p) = self.precision_at_1 {
            let _ = writeln!(out, "precision@1={p}");
        }
        if let (Some(k), Some(r)) = (self.k, self.recall_at_k) {
            let _ = writeln!(out, "recall@{k}={r}");
        }
        out
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes") + "\n"
    }
}

/// Reads one label set per line from the first comma-separated field;
/// several labels are separated by `|`. The first one is the primary label
/// and must be known to `dict`. Unknown secondary labels get ids past the
/// dictionary: they can never be predicted but still count for recall.
pub fn parse_label_sets(text: &str, dict: &LabelDict) -> Result<Vec<Vec<usize>>> {
    let mut extra: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let field = line.split(',').next().unwrap_or("");
        let mut set = Vec::new();
        for (pos, name) in field.split('|').map(str::trim).enumerate() {
            let id = match dict.id(name) {
                Some(id) => id,
                None if pos > 0 && !name.is_empty() => {
                    let next = dict.len() + extra.len();
                    *extra.entry(name.to_owned()).or_insert(next)
                }
                None => {
                    return Err(Error::MalformedRow {
                        row: idx + 1,
                        msg: format!("label {name:?} is unknown to the model"),
                    })
                }
            };
            if !set.contains(&id) {
                set.push(id);
            }
        }
        out.push(set);
    }
    Ok(out)
}

pub fn load_label_sets(path: impl AsRef<Path>, dict: &LabelDict) -> Result<Vec<Vec<usize>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_sets(&text, dict)
}

/// Scores every test example (in parallel) and resolves the labels in order
/// with a generator seeded by `seed`.
pub fn predict_all(
    model: &StrongModel,
    test: &TestTripletSet,
    policy: TiePolicy,
    seed: u64,
) -> Result<(Vec<Prediction>, Vec<usize>)> {
    if test.n_train() != model.n_train() {
        return Err(Error::Mismatch(format!(
            "test triplets refer to {} training examples, model has {}",
            test.n_train(),
            model.n_train()
        )));
    }
    let preds = test
        .examples()
        .par_iter()
        .map(|tx| score(model, tx))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = seeded(seed);
    let labels = preds.iter().map(|p| resolve(p, policy, &mut rng)).collect();
    Ok((preds, labels))
}

/// Accuracy is measured against the primary (first) label of each set;
/// precision@1 and recall@k against the whole set, with labels ranked by raw
/// score and ties broken by lowest id.
pub fn report(
    dict: &LabelDict,
    preds: &[Prediction],
    resolved: &[usize],
    truth: &[Vec<usize>],
    k: Option<usize>,
) -> Result<EvalReport> {
    let n = truth.len();
    if preds.len() != n || resolved.len() != n {
        return Err(Error::Mismatch(format!("{} predictions for {n} labelled examples", preds.len())));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if truth.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter("example without a label".into()));
    }
    let frac = |c: usize| c as f64 / n as f64;
    let correct = resolved.iter().zip(truth).filter(|(&y, t)| y == t[0]).count();
    let abstained = preds.iter().filter(|p| p.abstained()).count();

    let mut per_class = Vec::new();
    for y in 0..dict.len() {
        let members: Vec<usize> = (0..n).filter(|&i| truth[i][0] == y).collect();
        if members.is_empty() {
            continue;
        }
        let hits = members.iter().filter(|&&i| resolved[i] == y).count();
        per_class.push(ClassAccuracy {
            label: dict.name(y).unwrap_or("").to_owned(),
            count: members.len(),
            accuracy: hits as f64 / members.len() as f64,
        });
    }

    let (mut precision_at_1, mut recall_at_k) = (None, None);
    if let Some(k) = k {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let ranks: Vec<Vec<usize>> = preds.iter().map(|p| rank_labels(&p.scores)).collect();
        let top1 = ranks.iter().zip(truth).filter(|(r, t)| t.contains(&r[0])).count();
        precision_at_1 = Some(frac(top1));
        let recall: f64 = ranks
            .iter()
            .zip(truth)
            .map(|(r, t)| {
                let hit = t.iter().filter(|y| r.iter().take(k).any(|z| z == *y)).count();
                hit as f64 / t.len() as f64
            })
            .sum();
        recall_at_k = Some(recall / n as f64);
    }

    Ok(EvalReport {
        n,
        accuracy: frac(correct),
        abstention_rate: frac(abstained),
        per_class,
        precision_at_1,
        k,
        recall_at_k,
    })
}

pub fn evaluate(
    model: &StrongModel,
    test: &TestTripletSet,
    truth: &[Vec<usize>],
    policy: TiePolicy,
    seed: u64,
    k: Option<usize>,
) -> Result<EvalReport> {
    if truth.len() != test.n_test() {
        return Err(Error::Mismatch(format!(
            "{} labels for {} test examples",
            truth.len(),
            test.n_test()
        )));
    }
    let (preds, resolved) = predict_all(model, test, policy, seed)?;
    report(model.dict(), &preds, &resolved, truth, k)
}
