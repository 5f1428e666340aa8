//! Average precision, mAP, accuracy and the labeled-fraction sweep.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, MultiviewDataset};
use crate::model::{train_one_vs_rest, MethodSpec, ModelError, MulticlassModel};

pub const DEFAULT_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 1.0];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("scores and relevance have different lengths ({0} vs {1})")]
    Length(usize, usize),

    #[error("no relevant items")]
    NoRelevant,

    #[error("non-finite score at index {0}")]
    NonFinite(usize),

    #[error("nothing to average")]
    Empty,

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Non-interpolated average precision: the mean, over relevant items, of the
/// precision at that item's rank.
///
/// Items are ranked by descending score; equal scores keep index order.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Result<f64> {
    if scores.len() != relevant.len() {
        return Err(EvalError::Length(scores.len(), relevant.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let total = relevant.iter().filter(|&&r| r).count();
    if total == 0 {
        return Err(EvalError::NoRelevant);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

pub fn mean_average_precision(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub fraction: f64,
    pub seed: u64,
    pub per_class_ap: BTreeMap<u32, f64>,
    pub map: f64,
    pub accuracy: f64,
}

/// Score `model` on every point of `test`.
///
/// Classes of the model that never occur in `test` get no AP entry.
pub fn evaluate(
    model: &MulticlassModel,
    test: &MultiviewDataset,
    method: &str,
    fraction: f64,
    seed: u64,
) -> Result<EvalReport> {
    let proba = model.predict_proba(test.views())?;
    let mut per_class_ap = BTreeMap::new();
    for (c, &class) in model.classes.iter().enumerate() {
        let relevant: Vec<bool> = test.labels().iter().map(|&l| l == class).collect();
        if !relevant.contains(&true) {
            continue;
        }
        let scores: Vec<f64> = proba.column(c).to_vec();
        per_class_ap.insert(class, average_precision(&scores, &relevant)?);
    }
    let aps: Vec<f64> = per_class_ap.values().copied().collect();
    let map = mean_average_precision(&aps)?;
    let predicted = model.predict(test.views())?;
    let correct = predicted
        .iter()
        .zip(test.labels())
        .filter(|(p, l)| p == l)
        .count();
    Ok(EvalReport {
        method: method.to_string(),
        fraction,
        seed,
        per_class_ap,
        map,
        accuracy: correct as f64 / test.n() as f64,
    })
}

/// Train and evaluate every method at every labeled fraction and seed.
///
/// The labeled subset for a `(fraction, seed)` pair is drawn once and shared
/// by all methods. Reports are ordered by method label, fraction, then seed.
pub fn fraction_sweep(
    train: &MultiviewDataset,
    test: &MultiviewDataset,
    methods: &[MethodSpec],
    fractions: &[f64],
    seeds: &[u64],
) -> Result<Vec<EvalReport>> {
    if methods.is_empty() || fractions.is_empty() || seeds.is_empty() {
        return Err(EvalError::Invalid(
            "sweep needs at least one method, fraction and seed".into(),
        ));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(EvalError::Invalid(format!("fraction {f} outside (0, 1]")));
    }
    let splits = fractions
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| (f, s)))
        .map(|(f, s)| Ok((f, s, train.mask_labeled_fraction(f, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..splits.len()).map(move |s| (m, s)))
        .collect();
    let mut reports = cells
        .par_iter()
        .map(|&(m, s)| {
            let (fraction, seed, ref masked) = splits[s];
            let model = train_one_vs_rest(masked, &methods[m])?;
            Ok((
                m,
                evaluate(&model, test, &methods[m].label(), fraction, seed)?,
            ))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|(ma, a), (mb, b)| {
        a.method
            .cmp(&b.method)
            .then(a.fraction.total_cmp(&b.fraction))
            .then(a.seed.cmp(&b.seed))
            .then(ma.cmp(mb))
    });
    Ok(reports.into_iter().map(|(_, r)| r).collect())
}

/// CSV with columns `method,fraction,seed,class,ap,map,accuracy`: one row per
/// class, then a row with class `all` whose `ap` is the mAP.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method", "fraction", "seed", "class", "ap", "map", "accuracy",
    ])?;
    for r in reports {
        let common = |class: String, ap: f64| {
            [
                r.method.clone(),
                r.fraction.to_string(),
                r.seed.to_string(),
                class,
                ap.to_string(),
                r.map.to_string(),
                r.accuracy.to_string(),
            ]
        };
        for (class, &ap) in &r.per_class_ap {
            w.write_record(common(class.to_string(), ap))?;
        }
        w.write_record(common("all".into(), r.map))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
