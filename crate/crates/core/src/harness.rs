//! End-to-end evaluation: assemble a prompt per (task, trial), call the
//! planner, extract and score the plan, and aggregate. Also the sweep driver
//! for doc-length and shot-count ablations.
//!
//! Runs are sequential and fully deterministic: every (task, trial) derives
//! its demo seed independently from the root seed, so no execution order can
//! perturb a report.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpusforge::Benchmark;
use crate::evaluator::{
    aggregate, f1_score, EvalError, EvalReport, MatchMode, ReportConfig, TaskEval,
};
use crate::llmclient::{
    extract_plan_with_marker, CommandPlan, Planner, PlannerConfig, PlannerError,
};
use crate::promptkit::{assemble_prompt, PromptCondition, PromptError, PromptTemplate};
use crate::registry::{DocStyle, ToolRegistry};
use crate::retriever::{RetrievalConfig, RetrievalError, RetrievalIndex};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    Prompt {
        task_id: String,
        source: PromptError,
    },
    Planner {
        task_id: String,
        source: PlannerError,
    },
    Eval(EvalError),
    Retrieval(RetrievalError),
    MissingRegistry,
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Prompt { task_id, source } => write!(f, "task {task_id}: {source}"),
            Self::Planner { task_id, source } => write!(f, "task {task_id}: {source}"),
            Self::Eval(e) => write!(f, "{e}"),
            Self::Retrieval(e) => write!(f, "{e}"),
            Self::MissingRegistry => {
                write!(
                    f,
                    "this configuration needs a tool corpus (docs condition or docgrep stub)"
                )
            }
        }
    }
}

impl core::error::Error for HarnessError {}

impl From<EvalError> for HarnessError {
    fn from(e: EvalError) -> Self {
        Self::Eval(e)
    }
}

impl From<RetrievalError> for HarnessError {
    fn from(e: RetrievalError) -> Self {
        Self::Retrieval(e)
    }
}

/// Everything an evaluation run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSpec {
    pub use_docs: bool,
    pub shots: usize,
    pub trials: usize,
    pub root_seed: u64,
    pub retrieval: RetrievalConfig,
    pub prompt_word_budget: Option<usize>,
    pub match_mode: MatchMode,
    pub template: PromptTemplate,
    pub planner: PlannerConfig,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            use_docs: true,
            shots: 0,
            trials: 1,
            root_seed: 0,
            retrieval: RetrievalConfig::default(),
            prompt_word_budget: None,
            match_mode: MatchMode::Exact,
            template: PromptTemplate::default(),
            planner: PlannerConfig::default(),
        }
    }
}

/// One prompt/completion exchange, enough to re-score offline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub task_id: String,
    pub trial: usize,
    pub condition: PromptCondition,
    pub prompt_digest: String,
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub report: EvalReport,
    pub exchanges: Vec<ExchangeRecord>,
}

/// Build the retrieval corpus from a registry: every tool's doc rendered
/// signature-first, in registry order. The same corpus feeds the index
/// subcommand and in-run index builds, so scores agree across entry points.
pub fn doc_corpus(registry: &ToolRegistry) -> Vec<(String, String)> {
    registry
        .iter()
        .map(|spec| {
            let rendered = registry
                .render_doc(&spec.tool_id, DocStyle::SignatureFirst)
                .expect("registered tool renders");
            (spec.tool_id.clone(), rendered)
        })
        .collect()
}

/// Run one full evaluation. The registry is required for docs conditions
/// (and for building the index when one is not supplied); `backend_name` is
/// taken from the planner.
pub fn run_eval(
    benchmark: &Benchmark,
    registry: Option<&ToolRegistry>,
    index: Option<&RetrievalIndex>,
    spec: &EvalSpec,
    planner: &dyn Planner,
) -> Result<EvalRun, HarnessError> {
    let built_index: Option<RetrievalIndex> = match (spec.use_docs, index) {
        (true, None) => {
            let registry = registry.ok_or(HarnessError::MissingRegistry)?;
            Some(RetrievalIndex::build(
                &doc_corpus(registry),
                spec.retrieval,
            )?)
        }
        _ => None,
    };
    let effective_index = index.or(built_index.as_ref());
    if spec.use_docs && registry.is_none() {
        return Err(HarnessError::MissingRegistry);
    }

    let empty_registry = ToolRegistry::new();
    let registry_ref = registry.unwrap_or(&empty_registry);

    let mut trials: Vec<Vec<TaskEval>> = Vec::with_capacity(spec.trials.max(1));
    let mut exchanges: Vec<ExchangeRecord> = Vec::new();

    for trial in 0..spec.trials.max(1) {
        let mut results: Vec<TaskEval> = Vec::with_capacity(benchmark.tasks.len());
        for task in &benchmark.tasks {
            let condition = PromptCondition {
                use_docs: spec.use_docs,
                shots: spec.shots,
                demo_seed: derive_seed(spec.root_seed, trial as u64, &task.task_id),
                retrieval: spec.retrieval,
                prompt_word_budget: spec.prompt_word_budget,
            };
            let prompt = assemble_prompt(
                task,
                &condition,
                registry_ref,
                effective_index,
                &benchmark.demo_pool,
                &spec.template,
            )
            .map_err(|source| HarnessError::Prompt {
                task_id: task.task_id.clone(),
                source,
            })?;

            let completion = planner
                .complete(&prompt)
                .map_err(|source| HarnessError::Planner {
                    task_id: task.task_id.clone(),
                    source,
                })?;

            exchanges.push(ExchangeRecord {
                task_id: task.task_id.clone(),
                trial,
                condition,
                prompt_digest: prompt.digest(),
                completion: completion.clone(),
            });

            let extraction = extract_plan_with_marker(&completion, &spec.template.answer_marker);
            let gold = CommandPlan::from_lines(task.gold_plan.clone());
            let f1 = f1_score(&extraction.plan, &gold, spec.match_mode)?;
            let mut warnings = prompt.provenance.warnings.clone();
            warnings.extend(extraction.warnings);
            results.push(TaskEval {
                task_id: task.task_id.clone(),
                trial,
                f1,
                extraction_warnings: warnings,
            });
        }
        trials.push(results);
    }

    let stats = aggregate(&trials)?;
    let config = ReportConfig {
        backend: planner.name().to_string(),
        match_mode: spec.match_mode,
        use_docs: spec.use_docs,
        shots: spec.shots,
        trials: spec.trials.max(1),
        root_seed: spec.root_seed,
        retrieval: spec.retrieval,
        prompt_word_budget: spec.prompt_word_budget,
        planner: spec.planner.clone(),
        template: spec.template.clone(),
        template_digest: spec.template.digest(),
        benchmark_digest: benchmark.digest(),
        corpus_digest: registry.map(ToolRegistry::digest),
    };
    let config_digest = config.digest();
    let report = EvalReport {
        per_task: trials.into_iter().flatten().collect(),
        aggregate: stats,
        config,
        config_digest,
    };
    Ok(EvalRun { report, exchanges })
}

/// The ablation axis for [`sweep`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Vary the per-document word limit, docs condition held on.
    DocWords(Vec<usize>),
    /// Vary the number of demos.
    Shots(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DocWords(_) => "doc_words",
            Self::Shots(_) => "shots",
        }
    }

    pub fn values(&self) -> &[usize] {
        match self {
            Self::DocWords(v) | Self::Shots(v) => v,
        }
    }
}

/// One full evaluation per axis value, every other knob held fixed.
pub fn sweep(
    benchmark: &Benchmark,
    registry: Option<&ToolRegistry>,
    base: &EvalSpec,
    axis: &SweepAxis,
    planner: &dyn Planner,
) -> Result<Vec<(usize, EvalRun)>, HarnessError> {
    let mut points = Vec::with_capacity(axis.values().len());
    for &value in axis.values() {
        let mut spec = base.clone();
        match axis {
            SweepAxis::DocWords(_) => spec.retrieval.doc_word_limit = value,
            SweepAxis::Shots(_) => spec.shots = value,
        }
        let run = run_eval(benchmark, registry, None, &spec, planner)?;
        points.push((value, run));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpusforge::{BenchTask, BenchmarkMeta};
    use crate::llmclient::{DemoEchoPlanner, DocgrepPlanner, OraclePlanner};
    use crate::registry::{DemoExample, ToolSpec};
    use alloc::vec;

    /// A small synthetic benchmark whose gold commands equal tool
    /// signatures, so the docgrep stub can earn partial credit when docs are
    /// shown.
    fn fixture() -> (Benchmark, ToolRegistry) {
        let services = ["pubsub", "compute", "storage", "sql", "functions"];
        let verbs = ["make", "delete", "list"];
        let mut registry = ToolRegistry::new();
        for service in services {
            for verb in verbs {
                let tool_id = alloc::format!("llmcloud {service} {verb}");
                registry
                    .register(ToolSpec {
                        tool_id: tool_id.clone(),
                        name: tool_id.clone(),
                        signature: alloc::format!("{tool_id} NAME"),
                        doc_text: alloc::format!(
                            "{tool_id} NAME. Use this to {verb} a {service} resource named NAME."
                        ),
                        demo_pool: vec![],
                    })
                    .unwrap();
            }
        }
        let tasks: Vec<BenchTask> = services
            .iter()
            .enumerate()
            .map(|(i, service)| BenchTask {
                task_id: alloc::format!("t-{i:02}"),
                question: alloc::format!(
                    "Using the cloud sdk, make a {service} resource called NAME and then list the {service} resources."
                ),
                gold_plan: vec![
                    alloc::format!("llmcloud {service} make NAME"),
                    alloc::format!("llmcloud {service} list NAME"),
                ],
            })
            .collect();
        let demo_pool: Vec<DemoExample> = (0..8)
            .map(|i| {
                let service = services[i % services.len()];
                DemoExample {
                    instruction: alloc::format!("make then list a {service} resource"),
                    plan: alloc::format!(
                        "llmcloud {service} make NAME\nllmcloud {service} list NAME"
                    ),
                }
            })
            .collect();
        let benchmark = Benchmark {
            tasks,
            demo_pool,
            metadata: BenchmarkMeta {
                source_corpus: "unit-fixture".into(),
                rename_map_digest: crate::corpusforge::RenameMap::empty().digest(),
                creation_seed: 7,
            },
        };
        (benchmark, registry)
    }

    #[test]
    fn oracle_scores_one_on_any_condition() {
        let (benchmark, registry) = fixture();
        let planner = OraclePlanner::for_benchmark(&benchmark);
        for use_docs in [true, false] {
            let spec = EvalSpec {
                use_docs,
                shots: 2,
                trials: 2,
                ..EvalSpec::default()
            };
            let run = run_eval(&benchmark, Some(&registry), None, &spec, &planner).unwrap();
            assert_eq!(run.report.aggregate.mean_f1, 1.0);
            assert_eq!(run.report.aggregate.std_f1, 0.0);
        }
    }

    #[test]
    fn docgrep_prefers_docs_over_no_docs() {
        let (benchmark, registry) = fixture();
        let planner = DocgrepPlanner::for_registry(&registry);
        let with_docs = run_eval(
            &benchmark,
            Some(&registry),
            None,
            &EvalSpec {
                use_docs: true,
                ..EvalSpec::default()
            },
            &planner,
        )
        .unwrap();
        let without_docs = run_eval(
            &benchmark,
            Some(&registry),
            None,
            &EvalSpec {
                use_docs: false,
                ..EvalSpec::default()
            },
            &planner,
        )
        .unwrap();
        assert!(
            with_docs.report.aggregate.mean_f1 > without_docs.report.aggregate.mean_f1,
            "docs {} should beat no-docs {}",
            with_docs.report.aggregate.mean_f1,
            without_docs.report.aggregate.mean_f1
        );
        assert_eq!(without_docs.report.aggregate.mean_f1, 0.0);
    }

    #[test]
    fn demoecho_returns_first_demo_plan() {
        let (benchmark, registry) = fixture();
        let planner = DemoEchoPlanner::for_pool(&benchmark.demo_pool);
        let zero_shot = run_eval(
            &benchmark,
            Some(&registry),
            None,
            &EvalSpec {
                use_docs: false,
                shots: 0,
                ..EvalSpec::default()
            },
            &planner,
        )
        .unwrap();
        assert_eq!(zero_shot.report.aggregate.mean_f1, 0.0);
        let few_shot = run_eval(
            &benchmark,
            Some(&registry),
            None,
            &EvalSpec {
                use_docs: false,
                shots: 3,
                ..EvalSpec::default()
            },
            &planner,
        )
        .unwrap();
        // echoing a demo plan can only help
        assert!(few_shot.report.aggregate.mean_f1 >= zero_shot.report.aggregate.mean_f1);
    }

    #[test]
    fn reports_are_reproducible() {
        let (benchmark, registry) = fixture();
        let planner = DocgrepPlanner::for_registry(&registry);
        let spec = EvalSpec {
            shots: 2,
            trials: 3,
            root_seed: 11,
            ..EvalSpec::default()
        };
        let a = run_eval(&benchmark, Some(&registry), None, &spec, &planner).unwrap();
        let b = run_eval(&benchmark, Some(&registry), None, &spec, &planner).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.exchanges, b.exchanges);
    }

    #[test]
    fn sweep_produces_one_report_per_value() {
        let (benchmark, registry) = fixture();
        let planner = OraclePlanner::for_benchmark(&benchmark);
        let axis = SweepAxis::DocWords(vec![100, 200, 300]);
        let points = sweep(
            &benchmark,
            Some(&registry),
            &EvalSpec::default(),
            &axis,
            &planner,
        )
        .unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[0].0, 100);
        for (value, run) in &points {
            assert_eq!(run.report.config.retrieval.doc_word_limit, *value);
        }
    }

    #[test]
    fn single_value_sweep_matches_plain_run() {
        let (benchmark, registry) = fixture();
        let planner = OraclePlanner::for_benchmark(&benchmark);
        let mut spec = EvalSpec::default();
        spec.retrieval.doc_word_limit = 250;
        let plain = run_eval(&benchmark, Some(&registry), None, &spec, &planner).unwrap();
        let swept = sweep(
            &benchmark,
            Some(&registry),
            &spec,
            &SweepAxis::DocWords(vec![250]),
            &planner,
        )
        .unwrap();
        assert_eq!(swept.len(), 1);
        assert_eq!(swept[0].1.report, plain.report);
    }

    #[test]
    fn docs_condition_without_registry_fails() {
        let (benchmark, _) = fixture();
        let planner = OraclePlanner::for_benchmark(&benchmark);
        let err = run_eval(&benchmark, None, None, &EvalSpec::default(), &planner).unwrap_err();
        assert_eq!(err, HarnessError::MissingRegistry);
    }
}
