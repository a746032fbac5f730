//! Command-line-level scoring: normalization, per-example F1, and run
//! aggregation in the mean ± std (max) reporting shape.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::llmclient::{CommandPlan, PlannerConfig};
use crate::promptkit::PromptTemplate;
use crate::retriever::RetrievalConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    EmptyLine,
    EmptyGold,
    NoTasks,
    UnevenTrials { expected: usize, got: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyLine => write!(f, "cannot normalize an empty command line"),
            Self::EmptyGold => write!(f, "gold plan is empty"),
            Self::NoTasks => write!(f, "nothing to aggregate: no task results"),
            Self::UnevenTrials { expected, got } => {
                write!(
                    f,
                    "trials disagree on task count: expected {expected}, got {got}"
                )
            }
        }
    }
}

impl core::error::Error for EvalError {}

/// How predicted lines are matched against gold lines.
///
/// `Exact` compares whole normalized lines. `PlaceholderWildcard` additionally
/// lets a standalone ALL-CAPS gold token of length >= 2 (`NAME`, `LOC`,
/// `PROJ_ID`) match any single predicted token; gold plans use such
/// placeholders for values a planner cannot guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    #[default]
    Exact,
    PlaceholderWildcard,
}

/// Per-example score with the one-to-one line matching that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Result {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: Vec<(String, String)>,
    pub mode: MatchMode,
}

/// Flatten embedded newlines, join backslash continuations, collapse
/// whitespace, and drop blank lines. This is the shared plan-level
/// normalization used for gold plans and extracted predictions alike.
pub fn normalize_plan(lines: &[String]) -> Vec<String> {
    let flat: Vec<&str> = lines.iter().flat_map(|entry| entry.split('\n')).collect();
    let mut joined: Vec<String> = Vec::with_capacity(flat.len());
    let mut current = String::new();
    for raw in flat {
        let piece = raw.trim();
        if ends_with_continuation(piece) {
            current.push_str(piece[..piece.len() - 1].trim_end());
            current.push(' ');
            continue;
        }
        current.push_str(piece);
        joined.push(core::mem::take(&mut current));
    }
    if !current.is_empty() {
        joined.push(current);
    }
    joined
        .iter()
        .map(|line| collapse_whitespace(line))
        .filter(|line| !line.is_empty())
        .collect()
}

fn ends_with_continuation(line: &str) -> bool {
    line.ends_with('\\') && !line.ends_with("\\\\")
}

fn collapse_whitespace(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    for word in line.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Normalize a single command line: collapse internal whitespace, trim, and
/// drop a dangling continuation backslash. Case and flag syntax are
/// preserved. Wildcard semantics are applied at match time, not here, so the
/// normalized line stays readable.
pub fn normalize_command(line: &str, _mode: MatchMode) -> Result<String, EvalError> {
    let mut collapsed = collapse_whitespace(line);
    if ends_with_continuation(&collapsed) {
        collapsed.truncate(collapsed.len() - 1);
        collapsed = collapsed.trim_end().to_string();
    }
    if collapsed.is_empty() {
        return Err(EvalError::EmptyLine);
    }
    Ok(collapsed)
}

fn is_placeholder_token(token: &str) -> bool {
    token.len() >= 2
        && token.chars().next().is_some_and(|c| c.is_ascii_uppercase())
        && token
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Whether a normalized predicted line matches a normalized gold line under
/// `mode`.
pub fn line_matches(pred: &str, gold: &str, mode: MatchMode) -> bool {
    match mode {
        MatchMode::Exact => pred == gold,
        MatchMode::PlaceholderWildcard => {
            let pred_tokens: Vec<&str> = pred.split_whitespace().collect();
            let gold_tokens: Vec<&str> = gold.split_whitespace().collect();
            pred_tokens.len() == gold_tokens.len()
                && pred_tokens
                    .iter()
                    .zip(&gold_tokens)
                    .all(|(p, g)| p == g || is_placeholder_token(g))
        }
    }
}

/// Command-line-level F1: greedy one-to-one matching of normalized predicted
/// lines against normalized gold lines. Each gold line is consumable once
/// (multiset semantics), matched in prediction order. Precision is
/// matches/|pred|, recall matches/|gold|; an empty prediction scores zero.
pub fn f1_score(
    pred: &CommandPlan,
    gold: &CommandPlan,
    mode: MatchMode,
) -> Result<F1Result, EvalError> {
    let gold_lines: Vec<String> = normalize_plan(&gold.lines);
    if gold_lines.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let pred_lines: Vec<String> = normalize_plan(&pred.lines);

    let mut consumed = alloc::vec![false; gold_lines.len()];
    let mut matched = Vec::new();
    for pred_line in &pred_lines {
        for (i, gold_line) in gold_lines.iter().enumerate() {
            if !consumed[i] && line_matches(pred_line, gold_line, mode) {
                consumed[i] = true;
                matched.push((pred_line.clone(), gold_line.clone()));
                break;
            }
        }
    }

    let hits = matched.len() as f64;
    let precision = if pred_lines.is_empty() {
        0.0
    } else {
        hits / pred_lines.len() as f64
    };
    let recall = hits / gold_lines.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(F1Result {
        precision,
        recall,
        f1,
        matched,
        mode,
    })
}

/// One scored task within one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEval {
    pub task_id: String,
    pub trial: usize,
    pub f1: F1Result,
    #[serde(default)]
    pub extraction_warnings: Vec<String>,
}

/// mean ± std (max) over demo-selection trials. Single-trial runs report
/// std = 0 and max = mean. std is the population standard deviation over
/// trial means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub mean_f1: f64,
    pub std_f1: f64,
    pub max_f1: f64,
    pub n_tasks: usize,
    pub n_trials: usize,
}

/// Aggregate per-task scores across trials. Task order within a trial does
/// not affect the result.
pub fn aggregate(trials: &[Vec<TaskEval>]) -> Result<AggregateStats, EvalError> {
    if trials.is_empty() || trials[0].is_empty() {
        return Err(EvalError::NoTasks);
    }
    let n_tasks = trials[0].len();
    for trial in trials {
        if trial.len() != n_tasks {
            return Err(EvalError::UnevenTrials {
                expected: n_tasks,
                got: trial.len(),
            });
        }
    }
    let trial_means: Vec<f64> = trials
        .iter()
        .map(|trial| trial.iter().map(|t| t.f1.f1).sum::<f64>() / n_tasks as f64)
        .collect();
    let n_trials = trial_means.len();
    let mean = trial_means.iter().sum::<f64>() / n_trials as f64;
    let variance = trial_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / n_trials as f64;
    let std = if n_trials > 1 {
        libm::sqrt(variance)
    } else {
        0.0
    };
    let max = trial_means
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AggregateStats {
        mean_f1: mean,
        std_f1: std,
        max_f1: max,
        n_tasks,
        n_trials,
    })
}

/// Every configuration field that affects an evaluation's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub backend: String,
    pub match_mode: MatchMode,
    pub use_docs: bool,
    pub shots: usize,
    pub trials: usize,
    pub root_seed: u64,
    pub retrieval: RetrievalConfig,
    pub prompt_word_budget: Option<usize>,
    pub planner: PlannerConfig,
    /// The full effective template, so a report is reproducible on its own.
    pub template: PromptTemplate,
    pub template_digest: String,
    pub benchmark_digest: String,
    pub corpus_digest: Option<String>,
}

impl ReportConfig {
    /// Stable digest over every field, recorded in reports and sweep tables.
    pub fn digest(&self) -> String {
        let retrieval = &self.retrieval;
        let buf = alloc::format!(
            "{}\u{1f}{:?}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{:?}\u{1f}{:?}\u{1f}{:?}\u{1f}{:016x}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{:?}\u{1f}{}\u{1f}{}\u{1f}{:?}",
            self.backend,
            self.match_mode,
            self.use_docs,
            self.shots,
            self.trials,
            self.root_seed,
            retrieval.top_k,
            retrieval.doc_word_limit,
            retrieval.tokenizer,
            self.prompt_word_budget,
            self.planner.backend,
            self.planner.temperature.to_bits(),
            self.planner.max_output_tokens,
            self.planner.request_timeout.as_millis(),
            self.planner.max_retries,
            self.planner.max_prompt_chars,
            self.template_digest,
            self.benchmark_digest,
            self.corpus_digest,
        );
        sha256_hex(buf.as_bytes())
    }
}

/// Full evaluation output: per-task scores, the aggregate, and the complete
/// run configuration with its digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_task: Vec<TaskEval>,
    pub aggregate: AggregateStats,
    pub config: ReportConfig,
    pub config_digest: String,
}
