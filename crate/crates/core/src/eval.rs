//! Accuracy, confusion matrices, multi-split evaluation and the
//! absolute-vs-relative layout comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{balance, split, Checkpoint, Dataset};
use crate::error::{Error, Result};
use crate::feature::{FeatureRecord, Layout};
use crate::mlp::TrainConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(predictions: &[u8], labels: &[u8]) -> Result<Self> {
        check_pairs(predictions, labels)?;
        let mut m = ConfusionMatrix::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (1, 1) => m.tp += 1,
                (1, 0) => m.fp += 1,
                (0, 1) => m.fn_ += 1,
                (0, 0) => m.tn += 1,
                _ => {
                    return Err(Error::Config(format!(
                        "labels must be 0 or 1, got ({p}, {y})"
                    )))
                }
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn merged(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

fn check_pairs(predictions: &[u8], labels: &[u8]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    check_pairs(predictions, labels)?;
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Outcome of one balance → split → train → test cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split_index: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Per-test-sample probabilities, in test-set order.
    #[serde(skip)]
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub layout: Layout,
    pub n_splits: usize,
    pub base_seed: u64,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over splits.
    pub std_accuracy: f64,
    /// Pooled over all splits.
    pub confusion: ConfusionMatrix,
    pub splits: Vec<SplitResult>,
    pub config: TrainConfig,
}

impl EvalReport {
    fn from_splits(config: &TrainConfig, splits: Vec<SplitResult>) -> Self {
        let accuracies: Vec<f64> = splits.iter().map(|s| s.accuracy).collect();
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let confusion = splits.iter().fold(ConfusionMatrix::default(), |acc, s| {
            acc.merged(&s.confusion)
        });
        EvalReport {
            layout: config.layout,
            n_splits: splits.len(),
            base_seed: config.seed,
            accuracies,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            confusion,
            splits,
            config: config.clone(),
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "layout: {}  splits: {}  base seed: {}",
            self.layout, self.n_splits, self.base_seed
        );
        let _ = writeln!(
            out,
            "{:>5} {:>6} {:>6} {:>5} {:>9} {:>5} {:>5} {:>5} {:>5}",
            "split", "seed", "train", "test", "accuracy", "tp", "fp", "fn", "tn"
        );
        for s in &self.splits {
            let c = &s.confusion;
            let _ = writeln!(
                out,
                "{:>5} {:>6} {:>6} {:>5} {:>8.2}% {:>5} {:>5} {:>5} {:>5}",
                s.split_index,
                s.seed,
                s.train_size,
                s.test_size,
                100.0 * s.accuracy,
                c.tp,
                c.fp,
                c.fn_,
                c.tn
            );
        }
        let _ = writeln!(
            out,
            "mean accuracy {:.2}% (std {:.2}%)",
            100.0 * self.mean_accuracy,
            100.0 * self.std_accuracy
        );
        out
    }

    pub fn csv_rows(&self, variant: &str) -> Vec<String> {
        self.splits
            .iter()
            .map(|s| {
                let c = &s.confusion;
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    self.layout,
                    variant,
                    s.split_index,
                    s.seed,
                    s.train_size,
                    s.test_size,
                    s.accuracy,
                    c.tp,
                    c.fp,
                    c.fn_,
                    c.tn
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        csv_with_header(self.csv_rows("original"))
    }
}

const CSV_HEADER: &str = "layout,variant,split,seed,train_size,test_size,accuracy,tp,fp,fn,tn";

fn csv_with_header(rows: Vec<String>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Published accuracies (%) on the original 2506-frame lab dataset. Printed
/// for context next to our numbers; nothing here is recomputed.
pub const REFERENCE_ACCURACIES: [(&str, f64); 5] = [
    ("End-to-end (Alexnet)", 50.0),
    ("End-to-end (Resnet50)", 89.4),
    ("CNN on skeleton image", 83.3),
    ("MLP, absolute pixels", 90.1),
    ("MLP, relative to object", 90.6),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub method: String,
    pub accuracy_percent: f64,
}

fn reference_rows() -> Vec<ReferenceRow> {
    REFERENCE_ACCURACIES
        .iter()
        .map(|(m, a)| ReferenceRow {
            method: m.to_string(),
            accuracy_percent: *a,
        })
        .collect()
}

fn run_one(
    ds: &Dataset,
    config: &TrainConfig,
    index: usize,
    shift: Option<(f64, f64)>,
) -> Result<(SplitResult, Option<SplitResult>)> {
    let seed = config.seed.wrapping_add(index as u64);
    let balanced = balance(ds, seed)?;
    let (train_set, test_set) = split(&balanced, config.split_ratio, seed, config.split_mode)?;
    if test_set.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let split_config = TrainConfig {
        seed,
        ..config.clone()
    };
    let (model, _) = Checkpoint::fit(&train_set, &split_config)?;
    let score = |test: &Dataset| -> Result<SplitResult> {
        let mut preds = Vec::with_capacity(test.len());
        let mut probabilities = Vec::with_capacity(test.len());
        let mut labels = Vec::with_capacity(test.len());
        for r in test.records() {
            let p = model.predict(r)?;
            preds.push(p.label);
            probabilities.push(p.probability);
            labels.push(r.label.expect("dataset records are labeled"));
        }
        let confusion = ConfusionMatrix::from_predictions(&preds, &labels)?;
        Ok(SplitResult {
            split_index: index,
            seed,
            train_size: train_set.len(),
            test_size: test.len(),
            accuracy: accuracy(&preds, &labels)?,
            confusion,
            probabilities,
        })
    };
    let original = score(&test_set)?;
    let shifted = match shift {
        Some((dx, dy)) => Some(score(&test_set.translated(dx, dy))?),
        None => None,
    };
    Ok((original, shifted))
}

/// Runs the splits on scoped threads; results come back in split order.
fn run_splits(
    ds: &Dataset,
    config: &TrainConfig,
    n_splits: usize,
    shift: Option<(f64, f64)>,
) -> Result<Vec<(SplitResult, Option<SplitResult>)>> {
    if n_splits == 0 {
        return Err(Error::Config("need at least one split".into()));
    }
    config.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n_splits)
            .map(|i| scope.spawn(move || run_one(ds, config, i, shift)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("split worker panicked"))
            .collect()
    })
}

/// For each split `i` (seed `config.seed + i`): balance, split, train, score.
pub fn multi_seed_eval(
    records: &[FeatureRecord],
    config: &TrainConfig,
    n_splits: usize,
) -> Result<EvalReport> {
    let ds = Dataset::new(records.to_vec())?;
    let results = run_splits(&ds, config, n_splits, None)?;
    Ok(EvalReport::from_splits(
        config,
        results.into_iter().map(|(r, _)| r).collect(),
    ))
}

/// Both layouts on identical split seeds, each also scored on a test set
/// shifted by `shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutComparison {
    pub shift: (f64, f64),
    pub absolute: EvalReport,
    pub absolute_shifted: EvalReport,
    pub relative: EvalReport,
    pub relative_shifted: EvalReport,
    pub references: Vec<ReferenceRow>,
}

impl LayoutComparison {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let (dx, dy) = self.shift;
        let _ = writeln!(
            out,
            "{:<28} {:>12} {:>12} {:>10}",
            "method", "accuracy", "std", "shifted"
        );
        for (name, orig, shifted) in [
            (
                "MLP, absolute pixels",
                &self.absolute,
                &self.absolute_shifted,
            ),
            (
                "MLP, relative to object",
                &self.relative,
                &self.relative_shifted,
            ),
        ] {
            let _ = writeln!(
                out,
                "{:<28} {:>11.2}% {:>11.2}% {:>9.2}%",
                name,
                100.0 * orig.mean_accuracy,
                100.0 * orig.std_accuracy,
                100.0 * shifted.mean_accuracy
            );
        }
        let _ = writeln!(out, "(shifted: test records translated by ({dx}, {dy}) px)");
        let _ = writeln!(out);
        let _ = writeln!(out, "published reference (different data, not recomputed):");
        for r in &self.references {
            let _ = writeln!(out, "  {:<26} {:>11.1}%", r.method, r.accuracy_percent);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut rows = self.absolute.csv_rows("original");
        rows.extend(self.absolute_shifted.csv_rows("shifted"));
        rows.extend(self.relative.csv_rows("original"));
        rows.extend(self.relative_shifted.csv_rows("shifted"));
        csv_with_header(rows)
    }
}

pub fn compare_layouts(
    records: &[FeatureRecord],
    config: &TrainConfig,
    n_splits: usize,
    shift: (f64, f64),
) -> Result<LayoutComparison> {
    let ds = Dataset::new(records.to_vec())?;
    let mut reports = Vec::with_capacity(2);
    for layout in [Layout::Absolute, Layout::Relative] {
        let cfg = TrainConfig {
            layout,
            ..config.clone()
        };
        let results = run_splits(&ds, &cfg, n_splits, Some(shift))?;
        let (orig, shifted): (Vec<_>, Vec<_>) = results
            .into_iter()
            .map(|(o, s)| (o, s.expect("shift requested")))
            .unzip();
        reports.push((
            EvalReport::from_splits(&cfg, orig),
            EvalReport::from_splits(&cfg, shifted),
        ));
    }
    let (relative, relative_shifted) = reports.pop().unwrap();
    let (absolute, absolute_shifted) = reports.pop().unwrap();
    Ok(LayoutComparison {
        shift,
        absolute,
        absolute_shifted,
        relative,
        relative_shifted,
        references: reference_rows(),
    })
}
