//! Machine-readable run documents and the plot-ready text views derived
//! from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flagspace::Genome;
use crate::ga::{GAConfig, GenerationStat, StopReason, StoppingPolicy};
use crate::harness::{MeasuredCell, MeasurementProtocol};

/// Everything a tuning run produced, self-describing enough to reproduce
/// it: the exact configuration, the catalog digest, the per-generation
/// history, and the winning flag assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub catalog_digest: String,
    pub config: GAConfig,
    pub stopping: StoppingPolicy,
    pub protocol: MeasurementProtocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload_n: Option<u64>,
    pub best_genome: Genome,
    /// Names of the enabled flags, catalog order.
    pub best_flags: Vec<String>,
    /// Full decoded argument list for the best genome.
    pub best_arguments: Vec<String>,
    pub best_fitness: f64,
    pub history: Vec<GenerationStat>,
    /// Predefined-level measurements taken alongside the run, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baselines: Vec<MeasuredCell>,
    pub stop_reason: StopReason,
    pub evaluation_count: u64,
    pub total_wall_clock_seconds: f64,
}

impl RunReport {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::DocumentParse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::DocumentParse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

/// Fitness-over-time in two whitespace-separated columns (elapsed seconds,
/// best fitness so far), one row per generation, ready for plotting.
pub fn emit_convergence(history: &[GenerationStat]) -> String {
    let mut out = String::from("# elapsed_seconds best_fitness\n");
    for stat in history {
        out.push_str(&format!("{:.6} {:.9}\n", stat.elapsed_seconds, stat.best_fitness));
    }
    out
}

/// Side-by-side measurements of named configurations, with per-workload
/// speedups relative to the slowest successful cell of that workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub protocol: MeasurementProtocol,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub configuration: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload_n: Option<u64>,
    pub fitness: f64,
    pub ok: bool,
    /// Slowest successful runtime at this workload divided by this row's
    /// runtime; 1.0 marks the slowest row itself. Absent on failures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speedup_vs_slowest: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ComparisonReport {
    /// Attaches speedups to measured cells, grouping by workload.
    pub fn from_cells(protocol: MeasurementProtocol, cells: Vec<MeasuredCell>) -> Self {
        let mut rows: Vec<ComparisonRow> = cells
            .into_iter()
            .map(|cell| ComparisonRow {
                configuration: cell.configuration,
                workload_n: cell.workload_n,
                fitness: cell.fitness,
                ok: cell.ok,
                speedup_vs_slowest: None,
                detail: cell.detail,
            })
            .collect();
        let workloads: Vec<Option<u64>> = {
            let mut seen = Vec::new();
            for row in &rows {
                if !seen.contains(&row.workload_n) {
                    seen.push(row.workload_n);
                }
            }
            seen
        };
        for workload in workloads {
            let slowest = rows
                .iter()
                .filter(|r| r.workload_n == workload && r.ok)
                .map(|r| r.fitness)
                .fold(f64::NEG_INFINITY, f64::max);
            if !slowest.is_finite() {
                continue;
            }
            for row in rows.iter_mut().filter(|r| r.workload_n == workload && r.ok) {
                row.speedup_vs_slowest = Some(slowest / row.fitness);
            }
        }
        ComparisonReport { protocol, rows }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::DocumentParse(e.to_string()))
    }

    /// Aligned human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:>12} {:>14} {:>10}\n",
            "Configuration", "Workload", "Runtime (s)", "Speedup"
        );
        for row in &self.rows {
            let workload = row
                .workload_n
                .map(|n| n.to_string())
                .unwrap_or_else(|| "-".into());
            let (runtime, speedup) = if row.ok {
                (
                    format!("{:.6}", row.fitness),
                    row.speedup_vs_slowest
                        .map(|s| format!("{s:.3}x"))
                        .unwrap_or_else(|| "-".into()),
                )
            } else {
                ("failed".to_string(), "-".to_string())
            };
            out.push_str(&format!(
                "{:<16} {:>12} {:>14} {:>10}\n",
                row.configuration, workload, runtime, speedup
            ));
        }
        out
    }

    /// Columnar block for plotting runtime against workload size: one row
    /// per workload, one column per configuration, `nan` for failures.
    pub fn render_columns(&self) -> String {
        let mut configurations: Vec<&str> = Vec::new();
        for row in &self.rows {
            if !configurations.contains(&row.configuration.as_str()) {
                configurations.push(&row.configuration);
            }
        }
        let mut workloads: Vec<Option<u64>> = Vec::new();
        for row in &self.rows {
            if !workloads.contains(&row.workload_n) {
                workloads.push(row.workload_n);
            }
        }
        let mut out = format!("# N {}\n", configurations.join(" "));
        for workload in &workloads {
            let label = workload.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
            out.push_str(&label);
            for configuration in &configurations {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.workload_n == *workload && r.configuration == *configuration);
                match cell {
                    Some(row) if row.ok => out.push_str(&format!(" {:.9}", row.fitness)),
                    _ => out.push_str(" nan"),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga::{CrossoverType, MutationType, SelectionType};

    fn sample_report() -> RunReport {
        RunReport {
            tool_version: "0.1.0".into(),
            catalog_digest: "ab".repeat(32),
            config: GAConfig {
                crossover_type: CrossoverType::TwoPoint,
                mutation_type: MutationType::UniformBit,
                selection_type: SelectionType::Tournament,
                ..GAConfig::default()
            },
            stopping: StoppingPolicy::default(),
            protocol: MeasurementProtocol::default(),
            workload_n: Some(256),
            best_genome: "0110".parse().unwrap(),
            best_flags: vec!["b".into(), "c".into()],
            best_arguments: vec!["-fb".into(), "-fc".into()],
            best_fitness: 0.125,
            history: vec![
                GenerationStat {
                    generation: 0,
                    best_fitness: 0.5,
                    mean_fitness: 0.75,
                    evaluations: 10,
                    elapsed_seconds: 1.0,
                },
                GenerationStat {
                    generation: 1,
                    best_fitness: 0.125,
                    mean_fitness: 0.5,
                    evaluations: 18,
                    elapsed_seconds: 2.25,
                },
            ],
            baselines: vec![MeasuredCell {
                configuration: "O2".into(),
                workload_n: Some(256),
                fitness: 0.25,
                ok: true,
                detail: None,
            }],
            stop_reason: StopReason::GenerationBudget,
            evaluation_count: 18,
            total_wall_clock_seconds: 2.5,
        }
    }

    #[test]
    fn run_report_round_trips() {
        let report = sample_report();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back = RunReport::from_json_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn convergence_text_has_one_row_per_generation() {
        let report = sample_report();
        let text = emit_convergence(&report.history);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], "1.000000 0.500000000");
        assert_eq!(lines[2], "2.250000 0.125000000");
        // Best-so-far column never increases.
        let values: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn comparison_speedups_are_relative_to_the_slowest_per_workload() {
        let cells = vec![
            MeasuredCell {
                configuration: "O0".into(),
                workload_n: Some(100),
                fitness: 2.0,
                ok: true,
                detail: None,
            },
            MeasuredCell {
                configuration: "O3".into(),
                workload_n: Some(100),
                fitness: 0.5,
                ok: true,
                detail: None,
            },
            MeasuredCell {
                configuration: "broken".into(),
                workload_n: Some(100),
                fitness: 600.0,
                ok: false,
                detail: Some("compile failed".into()),
            },
        ];
        let report = ComparisonReport::from_cells(MeasurementProtocol::default(), cells);
        assert_eq!(report.rows[0].speedup_vs_slowest, Some(1.0));
        assert_eq!(report.rows[1].speedup_vs_slowest, Some(4.0));
        assert_eq!(report.rows[2].speedup_vs_slowest, None);
        let table = report.render_table();
        assert!(table.contains("4.000x"));
        assert!(table.contains("failed"));
        let columns = report.render_columns();
        assert!(columns.starts_with("# N O0 O3 broken\n"));
        assert!(columns.contains(" nan"));
    }
}
