//! Experiment reports and their JSON, CSV and text renderings.

use std::fmt::Write as _;
use std::path::Path;

use opseq_core::classify::{ClassifierParams, TrainingCurves};
use opseq_core::eval::ConfusionMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, GridPoint};
use crate::io::write_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartitionSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Wall-clock seconds per stage. Excluded from determinism comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub filter_secs: f64,
    pub features_secs: f64,
    pub train_secs: f64,
    pub evaluate_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub point: GridPoint,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub best: bool,
    /// The `k ≈ √S` kNN operating point.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub operating_point: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub families: Vec<String>,
    pub vocabulary: Vec<String>,
    pub samples: usize,
    pub skipped: Vec<String>,
    pub feature_dim: usize,
    pub partitions: PartitionSizes,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub per_class_accuracy: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<TrainingCurves>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridRow>>,
    pub timing: Timing,
}

/// Result of `opseq classify` on pre-computed feature files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub classifier: ClassifierParams,
    pub families: Vec<String>,
    pub feature_dim: usize,
    pub partitions: PartitionSizes,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub per_class_accuracy: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<TrainingCurves>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSeries {
    pub classifier: ClassifierParams,
    pub label: String,
    /// One accuracy per entry of the report's `fractions`.
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub config: ExperimentConfig,
    pub families: Vec<String>,
    pub fractions: Vec<f64>,
    pub series: Vec<RobustnessSeries>,
    pub timing: Vec<Timing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl Format {
    /// Picks the format from a file extension; JSON when unknown.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("txt") => Format::Text,
            _ => Format::Json,
        }
    }
}

/// Removes every `timing` field, at any depth.
pub fn strip_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// JSON with timing fields removed, for byte-level comparisons.
pub fn to_json_without_timing<T: Serialize>(report: &T) -> String {
    let mut v = serde_json::to_value(report).expect("reports serialize");
    strip_timing(&mut v);
    to_json(&v)
}

/// Confusion matrix as CSV: a header, then one row per true family with
/// its per-class accuracy.
pub fn confusion_csv(families: &[String], confusion: &ConfusionMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["family".to_string()];
    header.extend(families.iter().cloned());
    header.push("accuracy".into());
    w.write_record(&header).expect("in-memory write");
    for (i, (row, acc)) in confusion.counts.iter().zip(confusion.per_class_accuracy()).enumerate() {
        let mut record = vec![families[i].clone()];
        record.extend(row.iter().map(u64::to_string));
        record.push(acc.map(|a| a.to_string()).unwrap_or_default());
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{:.1}%", 100.0 * v))
}

/// Confusion matrix with row percentages and per-class accuracy.
pub fn confusion_text(families: &[String], confusion: &ConfusionMatrix) -> String {
    let width = families.iter().map(String::len).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:width$}", "true\\pred");
    for f in families {
        let _ = write!(out, "  {f:>width$}");
    }
    let _ = writeln!(out, "  {:>width$}", "accuracy");
    for (i, (row, acc)) in confusion.counts.iter().zip(confusion.per_class_accuracy()).enumerate() {
        let total: u64 = row.iter().sum();
        let _ = write!(out, "{:width$}", families[i]);
        for &c in row {
            let cell = if total == 0 {
                "-".to_string()
            } else {
                format!("{} ({:.0}%)", c, 100.0 * c as f64 / total as f64)
            };
            let _ = write!(out, "  {cell:>width$}");
        }
        let _ = writeln!(out, "  {:>width$}", percent(acc));
    }
    let _ = writeln!(
        out,
        "overall accuracy {} ({}/{})",
        percent(Some(confusion.accuracy())),
        confusion.correct(),
        confusion.total()
    );
    out
}

pub fn grid_text(rows: &[GridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:>4}  {:>4}  {:>4}  {:<40}  {:>8}",
        "rank", "M", "N", "W", "classifier", "accuracy"
    );
    for (i, row) in rows.iter().enumerate() {
        let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
        let classifier = row.point.classifier.as_ref().map(classifier_label).unwrap_or_default();
        let mut flags = String::new();
        if row.best {
            flags.push_str(" best");
        }
        if row.operating_point {
            flags.push_str(" k~sqrt(S)");
        }
        let _ = writeln!(
            out,
            "{:>4}  {:>4}  {:>4}  {:>4}  {:<40}  {:>8.4}{}",
            i + 1,
            opt(row.point.m),
            opt(row.point.n),
            opt(row.point.w),
            classifier,
            row.accuracy,
            flags
        );
    }
    out
}

/// Short human-readable name of a classifier configuration.
pub fn classifier_label(params: &ClassifierParams) -> String {
    use opseq_core::classify::Kernel;
    match params {
        ClassifierParams::Knn { k } => format!("knn(k={k})"),
        ClassifierParams::Svm(p) => match p.kernel {
            Kernel::Linear => format!("svm(linear, C={})", p.c),
            Kernel::Rbf { gamma } => format!("svm(rbf, C={}, gamma={gamma})", p.c),
        },
        ClassifierParams::Rf(p) => format!(
            "rf(trees={}, depth={}, features={:?}, bootstrap={})",
            p.n_estimators,
            p.max_depth.map_or_else(|| "none".into(), |d| d.to_string()),
            p.max_features,
            p.bootstrap
        ),
        ClassifierParams::Nn(p) => format!("nn({:?}, {} epochs)", p.layer_sizes, p.epochs),
    }
}

pub fn robustness_text(report: &RobustnessReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<50}", "classifier");
    for f in &report.fractions {
        let _ = write!(out, "  {:>6}", format!("{:.0}%", 100.0 * f));
    }
    out.push('\n');
    for s in &report.series {
        let _ = write!(out, "{:<50}", s.label);
        for a in &s.accuracies {
            let _ = write!(out, "  {a:>6.3}");
        }
        out.push('\n');
    }
    out
}

pub fn robustness_csv(report: &RobustnessReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["classifier".to_string()];
    header.extend(report.fractions.iter().map(|f| f.to_string()));
    w.write_record(&header).expect("in-memory write");
    for s in &report.series {
        let mut record = vec![s.label.clone()];
        record.extend(s.accuracies.iter().map(f64::to_string));
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => confusion_csv(&self.families, &self.confusion),
            Format::Text => {
                let mut out = confusion_text(&self.families, &self.confusion);
                if let Some(grid) = &self.grid {
                    out.push('\n');
                    out.push_str(&grid_text(grid));
                }
                out
            }
        }
    }
}

impl ClassifyReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => confusion_csv(&self.families, &self.confusion),
            Format::Text => confusion_text(&self.families, &self.confusion),
        }
    }
}

impl RobustnessReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => robustness_csv(self),
            Format::Text => robustness_text(self),
        }
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            use std::io::Write as _;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
