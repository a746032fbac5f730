//! Report and sweep-table writers.
//!
//! Report files hold two top-level fields: `report`, which is a pure
//! function of the run configuration and inputs (byte-identical across
//! repeated runs), and `meta`, which carries the timestamp and tool version
//! and is excluded from determinism comparisons.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use toolplan_core::evaluator::EvalReport;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMeta {
    pub created_unix_ms: u128,
    pub tool_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub report: EvalReport,
    pub meta: ReportMeta,
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    let file = ReportFile {
        report: report.clone(),
        meta: ReportMeta {
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("evaluator: writing report {}", path.display()))
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("evaluator: reading report {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("evaluator: parsing report {}", path.display()))
}

/// Sweep table: one row per axis value, with each point's config digest in
/// the final column.
pub fn write_sweep_csv(rows: &[(usize, &EvalReport)], path: &Path) -> Result<()> {
    let mut out = String::from("axis_value,mean_f1,std_f1,max_f1,n_tasks,n_trials,config_digest\n");
    for (value, report) in rows {
        let agg = &report.aggregate;
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{},{},{}\n",
            value,
            agg.mean_f1,
            agg.std_f1,
            agg.max_f1,
            agg.n_tasks,
            agg.n_trials,
            report.config_digest
        ));
    }
    fs::write(path, out)
        .with_context(|| format!("evaluator: writing sweep table {}", path.display()))
}

pub fn summary_line(report: &EvalReport) -> String {
    let agg = &report.aggregate;
    format!(
        "backend={} docs={} shots={} trials={}: mean_f1={:.4} std_f1={:.4} max_f1={:.4} ({} tasks)",
        report.config.backend,
        if report.config.use_docs { "yes" } else { "no" },
        report.config.shots,
        agg.n_trials,
        agg.mean_f1,
        agg.std_f1,
        agg.max_f1,
        agg.n_tasks
    )
}
