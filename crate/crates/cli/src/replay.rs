//! Replay logs: one JSON object per line recording every prompt/completion
//! exchange of a run, enough to re-score it offline without any backend or
//! credentials.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use toolplan_core::corpusforge::Benchmark;
use toolplan_core::evaluator::{
    aggregate, f1_score, EvalReport, MatchMode, ReportConfig, TaskEval,
};
use toolplan_core::harness::ExchangeRecord;
use toolplan_core::llmclient::{extract_plan_with_marker, CommandPlan, PlannerConfig};
use toolplan_core::promptkit::PromptTemplate;

pub fn write_log(records: &[ExchangeRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    fs::write(path, out)
        .with_context(|| format!("llmclient: writing replay log {}", path.display()))
}

pub fn read_log(path: &Path) -> Result<Vec<ExchangeRecord>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("llmclient: reading replay log {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ExchangeRecord = serde_json::from_str(line)
            .with_context(|| format!("llmclient: replay log line {}", i + 1))?;
        records.push(record);
    }
    if records.is_empty() {
        bail!("llmclient: replay log {} is empty", path.display());
    }
    Ok(records)
}

/// Re-score a run from its replay log: extract a plan from every logged
/// completion and evaluate it against the benchmark's gold plans. Produces
/// per-task F1 identical to the original run.
pub fn rescore(
    benchmark: &Benchmark,
    records: &[ExchangeRecord],
    mode: MatchMode,
    template: &PromptTemplate,
) -> Result<EvalReport> {
    let mut by_trial: BTreeMap<usize, BTreeMap<&str, &ExchangeRecord>> = BTreeMap::new();
    for record in records {
        by_trial
            .entry(record.trial)
            .or_default()
            .insert(record.task_id.as_str(), record);
    }

    let first = &records[0];
    let mut trials: Vec<Vec<TaskEval>> = Vec::with_capacity(by_trial.len());
    for (trial, tasks) in &by_trial {
        let mut results = Vec::with_capacity(benchmark.tasks.len());
        for task in &benchmark.tasks {
            let record = tasks.get(task.task_id.as_str()).with_context(|| {
                format!(
                    "evaluator: replay log has no record for task {} in trial {trial}",
                    task.task_id
                )
            })?;
            let extraction = extract_plan_with_marker(&record.completion, &template.answer_marker);
            let gold = CommandPlan::from_lines(task.gold_plan.clone());
            let f1 = f1_score(&extraction.plan, &gold, mode)
                .with_context(|| format!("evaluator: task {}", task.task_id))?;
            results.push(TaskEval {
                task_id: task.task_id.clone(),
                trial: *trial,
                f1,
                extraction_warnings: extraction.warnings,
            });
        }
        trials.push(results);
    }

    let stats = aggregate(&trials).context("evaluator: aggregating replayed scores")?;
    let config = ReportConfig {
        backend: "replay".to_string(),
        match_mode: mode,
        use_docs: first.condition.use_docs,
        shots: first.condition.shots,
        trials: by_trial.len(),
        root_seed: 0,
        retrieval: first.condition.retrieval,
        prompt_word_budget: first.condition.prompt_word_budget,
        // no planner is consulted during a replay; defaults recorded
        planner: PlannerConfig::default(),
        template: template.clone(),
        template_digest: template.digest(),
        benchmark_digest: benchmark.digest(),
        corpus_digest: None,
    };
    let config_digest = config.digest();
    Ok(EvalReport {
        per_task: trials.into_iter().flatten().collect(),
        aggregate: stats,
        config,
        config_digest,
    })
}
