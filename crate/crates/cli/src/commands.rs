//! Subcommand implementations. Argument structs live in `main.rs`; the
//! functions here do the work and are also exercised directly by the
//! integration tests.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use toolplan_core::corpusforge::{build_benchmark, Benchmark, ForgeInput};
use toolplan_core::evaluator::MatchMode;
use toolplan_core::harness::{doc_corpus, run_eval, sweep, EvalSpec, SweepAxis};
use toolplan_core::llmclient::{
    BackendKind, DemoEchoPlanner, DocgrepPlanner, OraclePlanner, Planner, PlannerConfig,
};
use toolplan_core::progdsl::{execute, ProgramAst, Value, DEFAULT_INPUTS};
use toolplan_core::registry::ToolRegistry;
use toolplan_core::retriever::{RetrievalConfig, RetrievalIndex};

use crate::formats;
use crate::http::HttpPlanner;
use crate::replay;
use crate::report;

fn token_set(csv: &str) -> BTreeSet<String> {
    csv.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub struct ForgeOptions {
    pub tasks: PathBuf,
    pub corpus: PathBuf,
    pub map: PathBuf,
    pub out: PathBuf,
    pub out_corpus: Option<PathBuf>,
    pub forbidden: String,
    pub passthrough: String,
}

pub fn forge(opts: &ForgeOptions) -> Result<()> {
    let map = formats::load_rename_map(&opts.map)?;
    let source = formats::load_source_tasks(&opts.tasks)?;
    let registry = formats::load_raw_corpus(&opts.corpus)?;
    let input = ForgeInput {
        tasks: source.tasks,
        demo_pool: source.demo_pool,
        source_corpus: source
            .source_corpus
            .unwrap_or_else(|| opts.corpus.display().to_string()),
        creation_seed: source.creation_seed.unwrap_or(0),
    };
    let forbidden = token_set(&opts.forbidden);
    let passthrough = token_set(&opts.passthrough);
    let output = build_benchmark(&input, &map, &registry, &forbidden, &passthrough)
        .context("corpusforge: forging benchmark")?;

    formats::save_benchmark(&output.benchmark, &opts.out)?;
    if let Some(path) = &opts.out_corpus {
        formats::save_tool_corpus(&output.registry, path)?;
    }
    println!(
        "forged {} tasks over {} tools; leakage check clean for {{{}}}; map digest {}",
        output.benchmark.tasks.len(),
        output.registry.len(),
        forbidden.iter().cloned().collect::<Vec<_>>().join(", "),
        &output.benchmark.metadata.rename_map_digest[..12]
    );
    Ok(())
}

pub struct IndexOptions {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub top_k: usize,
    pub doc_words: usize,
}

pub fn index(opts: &IndexOptions) -> Result<()> {
    let registry = formats::load_tool_corpus(&opts.corpus)?;
    let config = RetrievalConfig {
        top_k: opts.top_k,
        doc_word_limit: opts.doc_words,
        ..RetrievalConfig::default()
    };
    let index = RetrievalIndex::build(&doc_corpus(&registry), config)
        .context("retriever: building index")?;
    formats::save_index(&index, &opts.out)?;
    println!(
        "indexed {} docs, {} terms -> {}",
        index.doc_count(),
        index.term_count(),
        opts.out.display()
    );
    Ok(())
}

/// Flags shared by `eval` and `sweep`.
pub struct RunOptions {
    pub benchmark: PathBuf,
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub docs: bool,
    pub shots: usize,
    pub trials: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub mode: MatchMode,
    pub top_k: usize,
    pub doc_words: usize,
    pub budget: Option<usize>,
    pub template: Option<PathBuf>,
    pub passthrough: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_prompt_chars: Option<usize>,
}

struct PreparedRun {
    benchmark: Benchmark,
    registry: Option<ToolRegistry>,
    index: Option<RetrievalIndex>,
    spec: EvalSpec,
}

fn prepare(opts: &RunOptions) -> Result<PreparedRun> {
    let benchmark = formats::load_benchmark(&opts.benchmark)?;
    let registry = match &opts.corpus {
        Some(path) => Some(formats::load_tool_corpus(path)?),
        None => None,
    };
    benchmark
        .validate(registry.as_ref(), &token_set(&opts.passthrough))
        .context("corpusforge: validating benchmark")?;
    if opts.docs && registry.is_none() {
        bail!("retriever: --docs yes requires --corpus so documents can be retrieved");
    }
    if opts.backend == BackendKind::StubDocgrep && registry.is_none() {
        bail!("llmclient: the stub-docgrep backend requires --corpus");
    }
    let index = match &opts.index {
        Some(path) => Some(formats::load_index(path)?),
        None => None,
    };
    let template = formats::load_template(opts.template.as_deref())?;
    let spec = EvalSpec {
        use_docs: opts.docs,
        shots: opts.shots,
        trials: opts.trials.max(1),
        root_seed: opts.seed,
        retrieval: RetrievalConfig {
            top_k: opts.top_k,
            doc_word_limit: opts.doc_words,
            ..RetrievalConfig::default()
        },
        prompt_word_budget: opts.budget,
        match_mode: opts.mode,
        template,
        planner: planner_config(opts),
    };
    Ok(PreparedRun {
        benchmark,
        registry,
        index,
        spec,
    })
}

fn planner_config(opts: &RunOptions) -> PlannerConfig {
    PlannerConfig {
        backend: opts.backend,
        temperature: opts.temperature,
        max_output_tokens: opts.max_output_tokens,
        request_timeout: std::time::Duration::from_secs(opts.timeout_secs),
        max_retries: opts.max_retries,
        max_prompt_chars: opts.max_prompt_chars,
    }
}

fn make_planner(
    opts: &RunOptions,
    benchmark: &Benchmark,
    registry: Option<&ToolRegistry>,
) -> Result<Box<dyn Planner>> {
    let planner: Box<dyn Planner> = match opts.backend {
        BackendKind::StubOracle => Box::new(OraclePlanner::for_benchmark(benchmark)),
        BackendKind::StubDocgrep => {
            let registry =
                registry.context("llmclient: the stub-docgrep backend requires --corpus")?;
            Box::new(DocgrepPlanner::for_registry(registry))
        }
        BackendKind::StubDemoecho => Box::new(DemoEchoPlanner::for_pool(&benchmark.demo_pool)),
        BackendKind::Http => Box::new(HttpPlanner::from_env(planner_config(opts))?),
    };
    Ok(planner)
}

pub struct EvalOptions {
    pub run: RunOptions,
    pub out: PathBuf,
    pub replay_log: Option<PathBuf>,
}

pub fn eval(opts: &EvalOptions) -> Result<()> {
    let prepared = prepare(&opts.run)?;
    let planner = make_planner(&opts.run, &prepared.benchmark, prepared.registry.as_ref())?;
    let run = run_eval(
        &prepared.benchmark,
        prepared.registry.as_ref(),
        prepared.index.as_ref(),
        &prepared.spec,
        planner.as_ref(),
    )
    .context("evaluator: running evaluation")?;
    report::write_report(&run.report, &opts.out)?;
    // http runs always leave a replay log so they can be re-scored without
    // credentials; stub runs only on request
    let log_path = match (&opts.replay_log, opts.run.backend) {
        (Some(path), _) => Some(path.clone()),
        (None, BackendKind::Http) => Some(opts.out.with_extension("replay.jsonl")),
        (None, _) => None,
    };
    if let Some(path) = log_path {
        replay::write_log(&run.exchanges, &path)?;
    }
    println!("{}", report::summary_line(&run.report));
    Ok(())
}

pub struct SweepOptions {
    pub run: RunOptions,
    pub axis: String,
    pub values: String,
    pub out_csv: PathBuf,
    pub out_dir: Option<PathBuf>,
}

/// Parse `100..800:100` (inclusive range with step) or `0,5,10` lists.
pub fn parse_axis_values(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((range, step)) = text.split_once(':') {
        let (start, end) = range
            .split_once("..")
            .with_context(|| format!("evaluator: bad sweep range {text:?}, want A..B:STEP"))?;
        let start: usize = start
            .trim()
            .parse()
            .context("evaluator: sweep range start")?;
        let end: usize = end.trim().parse().context("evaluator: sweep range end")?;
        let step: usize = step.trim().parse().context("evaluator: sweep range step")?;
        if step == 0 || end < start {
            bail!("evaluator: bad sweep range {text:?}");
        }
        return Ok((start..=end).step_by(step).collect());
    }
    let values: Result<Vec<usize>> = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("evaluator: sweep value {v:?}"))
        })
        .collect();
    let values = values?;
    if values.is_empty() {
        bail!("evaluator: no sweep values given");
    }
    Ok(values)
}

pub fn sweep_cmd(opts: &SweepOptions) -> Result<()> {
    let prepared = prepare(&opts.run)?;
    let planner = make_planner(&opts.run, &prepared.benchmark, prepared.registry.as_ref())?;
    let values = parse_axis_values(&opts.values)?;
    let mut sorted = values.clone();
    sorted.sort_unstable();
    if sorted != values {
        bail!("evaluator: sweep values must be sorted ascending");
    }
    let axis = match opts.axis.as_str() {
        "doc_words" => {
            if values.contains(&0) {
                bail!("evaluator: doc_words values must be positive");
            }
            SweepAxis::DocWords(values)
        }
        "shots" => SweepAxis::Shots(values),
        other => bail!("evaluator: unknown sweep axis {other:?}, want doc_words or shots"),
    };
    let points = sweep(
        &prepared.benchmark,
        prepared.registry.as_ref(),
        &prepared.spec,
        &axis,
        planner.as_ref(),
    )
    .context("evaluator: running sweep")?;

    let rows: Vec<(usize, &toolplan_core::evaluator::EvalReport)> = points
        .iter()
        .map(|(value, run)| (*value, &run.report))
        .collect();
    report::write_sweep_csv(&rows, &opts.out_csv)?;
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("evaluator: creating {}", dir.display()))?;
        for (value, run) in &points {
            let path = dir.join(format!("{}_{value:04}.json", axis.name()));
            report::write_report(&run.report, &path)?;
        }
    }
    for (value, run) in &points {
        println!(
            "{}={value}: {}",
            axis.name(),
            report::summary_line(&run.report)
        );
    }
    Ok(())
}

pub struct ReplayOptions {
    pub log: PathBuf,
    pub benchmark: PathBuf,
    pub mode: MatchMode,
    pub template: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn replay_cmd(opts: &ReplayOptions) -> Result<()> {
    let benchmark = formats::load_benchmark(&opts.benchmark)?;
    let records = replay::read_log(&opts.log)?;
    let template = formats::load_template(opts.template.as_deref())?;
    let report_data = replay::rescore(&benchmark, &records, opts.mode, &template)?;
    report::write_report(&report_data, &opts.out)?;
    println!("{}", report::summary_line(&report_data));
    Ok(())
}

pub struct DslOptions {
    pub program: PathBuf,
    pub fixtures: Option<PathBuf>,
    pub inputs: Vec<String>,
}

pub fn dsl(opts: &DslOptions) -> Result<()> {
    let source = fs::read_to_string(&opts.program)
        .with_context(|| format!("progdsl: reading program {}", opts.program.display()))?;

    let mut inputs: BTreeMap<String, Value> = BTreeMap::new();
    for binding in &opts.inputs {
        let (key, value) = binding
            .split_once('=')
            .with_context(|| format!("progdsl: bad --input {binding:?}, want KEY=VALUE"))?;
        let value = match value.parse::<f64>() {
            Ok(n) if n.is_finite() => Value::Num(n),
            _ => Value::Str(value.to_string()),
        };
        inputs.insert(key.trim().to_string(), value);
    }
    let declared: Vec<&str> = DEFAULT_INPUTS
        .iter()
        .copied()
        .chain(inputs.keys().map(String::as_str))
        .collect();
    let ast = ProgramAst::parse_with_inputs(&source, &declared).context("progdsl: parsing")?;

    let Some(fixtures_path) = &opts.fixtures else {
        println!("parsed {} steps:", ast.steps.len());
        println!("{}", ast.render());
        return Ok(());
    };
    let modules = formats::load_module_fixtures(fixtures_path)?;
    let run = execute(&ast, &inputs, &modules).context("progdsl: executing")?;
    for step in &run.trace {
        let args = step
            .args
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!(
            "step {}: {} = {}({}) -> {}",
            step.step,
            step.target_var,
            step.module_name,
            args,
            &step.output_digest[..12]
        );
    }
    match &run.result {
        Some(value) => println!("result: {value}"),
        None => println!("result: (empty program)"),
    }
    Ok(())
}

/// Parse shared string flags into core enums; kept here so `main.rs` stays a
/// thin argument layer.
pub fn parse_backend(text: &str) -> Result<BackendKind> {
    match text {
        "http" => Ok(BackendKind::Http),
        "stub-oracle" => Ok(BackendKind::StubOracle),
        "stub-docgrep" => Ok(BackendKind::StubDocgrep),
        "stub-demoecho" => Ok(BackendKind::StubDemoecho),
        other => bail!(
            "llmclient: unknown backend {other:?}, want http, stub-oracle, stub-docgrep, or stub-demoecho"
        ),
    }
}

pub fn parse_mode(text: &str) -> Result<MatchMode> {
    match text {
        "exact" => Ok(MatchMode::Exact),
        "wildcard" | "placeholder-wildcard" => Ok(MatchMode::PlaceholderWildcard),
        other => bail!("evaluator: unknown match mode {other:?}, want exact or wildcard"),
    }
}

pub fn parse_yes_no(text: &str) -> Result<bool> {
    match text {
        "yes" | "true" | "on" => Ok(true),
        "no" | "false" | "off" => Ok(false),
        other => bail!("unknown flag value {other:?}, want yes or no"),
    }
}

pub fn default_passthrough() -> String {
    "ffmpeg,touch".to_string()
}

#[allow(unused)]
fn _planner_is_object_safe(p: &dyn Planner) -> &str {
    p.name()
}
