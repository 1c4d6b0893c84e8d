//! One-hot flag importance: how much of the total speedup each flag
//! explains on its own.
//!
//! Each flag is measured alone on top of the baseline arguments. A flag's
//! contribution is its speedup over the baseline, floored at zero so
//! slowdowns do not earn negative importance; contributions are rescaled
//! to sum to 100.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flagspace::FlagCatalog;
use crate::harness::FitnessBackend;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub flag: String,
    /// Share of the summed speedup contributions, in percent.
    pub percent: f64,
    /// Measured runtime with only this flag added to the baseline;
    /// absent when the measurement failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// One row per catalog flag, sorted by descending percent; the
    /// percents sum to 100 unless the report is degenerate.
    pub rows: Vec<ImportanceRow>,
    pub baseline_fitness: f64,
    /// Rows named individually when rendered; the rest are folded into a
    /// residual row.
    pub top_k: usize,
    /// No flag sped anything up, so every percent is zero.
    pub degenerate: bool,
}

impl ImportanceReport {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::DocumentParse(e.to_string()))
    }
}

/// Measures the baseline and each flag one-hot, turning speedups into
/// percentage importances. Per-flag failures become zero-contribution
/// rows with a note; a failed baseline is fatal because nothing can be
/// normalized against it.
pub fn one_hot_importance(
    catalog: &FlagCatalog,
    backend: &dyn FitnessBackend,
    baseline_arguments: &[String],
) -> Result<ImportanceReport> {
    catalog.validate()?;
    let baseline = backend.eval_arguments(baseline_arguments, None);
    if !baseline.succeeded() {
        return Err(Error::BaselineFailure(format!(
            "baseline arguments {:?}: {}",
            baseline_arguments,
            baseline.detail.as_deref().unwrap_or("measurement failed")
        )));
    }
    let baseline_fitness = baseline.fitness;

    let one_hot_records: Vec<_> = {
        let measure_one = |flag: &crate::flagspace::FlagSpec| {
            let mut arguments = baseline_arguments.to_vec();
            arguments.push(flag.on_form.clone());
            backend.eval_arguments(&arguments, None)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            catalog.flags.par_iter().map(measure_one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            catalog.flags.iter().map(measure_one).collect()
        }
    };

    let mut contributions = Vec::with_capacity(catalog.flags.len());
    for (flag, record) in catalog.flags.iter().zip(&one_hot_records) {
        if record.succeeded() {
            let contribution = (baseline_fitness / record.fitness - 1.0).max(0.0);
            contributions.push((flag.name.clone(), contribution, Some(record.fitness), None));
        } else {
            let note = record
                .detail
                .clone()
                .unwrap_or_else(|| "measurement failed".into());
            contributions.push((flag.name.clone(), 0.0, None, Some(note)));
        }
    }

    let total: f64 = contributions.iter().map(|(_, c, _, _)| c).sum();
    let degenerate = total <= 0.0;
    let mut rows: Vec<ImportanceRow> = contributions
        .into_iter()
        .map(|(flag, contribution, fitness, note)| ImportanceRow {
            flag,
            percent: if degenerate {
                0.0
            } else {
                100.0 * contribution / total
            },
            fitness,
            note,
        })
        .collect();
    rows.sort_by(|a, b| b.percent.total_cmp(&a.percent));

    Ok(ImportanceReport {
        rows,
        baseline_fitness,
        top_k: 5,
        degenerate,
    })
}

/// Renders the top `top_k` rows plus a residual row folding the rest, as
/// an aligned two-column table. The residual percent is 100 minus the
/// named rows' sum, so the printed column always accounts for the whole.
pub fn render_importance(report: &ImportanceReport, top_k: usize) -> String {
    let named = top_k.min(report.rows.len());
    let mut lines: Vec<(String, f64)> = report.rows[..named]
        .iter()
        .map(|r| (r.flag.clone(), r.percent))
        .collect();
    let hidden = report.rows.len() - named;
    if hidden > 0 {
        let named_sum: f64 = report.rows[..named].iter().map(|r| r.percent).sum();
        let residual = if report.degenerate {
            0.0
        } else {
            100.0 - named_sum
        };
        let label = if hidden == 1 {
            "1 other flag".to_string()
        } else {
            format!("{hidden} other flags")
        };
        lines.push((label, residual));
    }

    let name_width = lines
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(0)
        .max("Flags".len());
    let mut out = format!("{:<name_width$}  {:>10}\n", "Flags", "Importance");
    for (name, percent) in &lines {
        out.push_str(&format!("{name:<name_width$}  {:>9.2}%\n", percent));
    }
    out
}
