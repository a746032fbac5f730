use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use toolplan_cli::commands::{self, default_passthrough};

/// Documentation-grounded command planning benchmarks: forge unseen
/// toolsets, index their docs, evaluate planners, and replay runs offline.
#[derive(Parser)]
#[command(name = "toolplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a benchmark from a raw doc corpus, a rename map, and source tasks.
    Forge(ForgeArgs),
    /// Build and serialize a TF-IDF index over a tool corpus.
    Index(IndexArgs),
    /// Evaluate one condition and write a report.
    Eval(EvalArgs),
    /// Run a doc-length or shot-count ablation and write a CSV table.
    Sweep(SweepArgs),
    /// Re-score a run from its replay log, without any backend.
    Replay(ReplayArgs),
    /// Parse a tool-composition program and execute it against fixtures.
    Dsl(DslArgs),
}

#[derive(Args)]
struct ForgeArgs {
    /// Source tasks JSON (tasks + demo pool in source vocabulary).
    #[arg(long)]
    tasks: PathBuf,
    /// Directory of raw documentation files, one per tool (filename = tool id).
    #[arg(long)]
    corpus: PathBuf,
    /// Rename map JSON: an array of [source, target] pairs.
    #[arg(long)]
    map: PathBuf,
    /// Output benchmark JSON.
    #[arg(long)]
    out: PathBuf,
    /// Output renamed tool corpus (JSONL); skipped when absent.
    #[arg(long)]
    out_corpus: Option<PathBuf>,
    /// Comma-separated source tokens that must not survive renaming.
    #[arg(long, default_value = "gcloud,gsutil")]
    forbidden: String,
    /// Comma-separated generic utilities allowed as gold-plan lead tokens.
    #[arg(long, default_value_t = default_passthrough())]
    passthrough: String,
}

#[derive(Args)]
struct IndexArgs {
    /// Tool corpus JSONL.
    #[arg(long)]
    corpus: PathBuf,
    /// Output index JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 600)]
    doc_words: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark JSON produced by `forge` (or hand-written).
    #[arg(long)]
    benchmark: PathBuf,
    /// Tool corpus JSONL; required for --docs yes and for stub-docgrep.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Serialized index from `index`; built in-memory when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Include retrieved documentation in prompts (yes/no).
    #[arg(long, default_value = "yes", value_parser = commands::parse_yes_no, action = clap::ArgAction::Set)]
    docs: bool,
    /// Number of demos per prompt.
    #[arg(long, default_value_t = 0)]
    shots: usize,
    /// Demo-selection trials; reports mean/std/max across them.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Root seed; every (task, trial) derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planner backend: stub-oracle, stub-docgrep, stub-demoecho, or http.
    #[arg(long, default_value = "stub-oracle", value_parser = commands::parse_backend)]
    backend: toolplan_core::llmclient::BackendKind,
    /// Line matching: exact or wildcard.
    #[arg(long, default_value = "exact", value_parser = commands::parse_mode)]
    mode: toolplan_core::evaluator::MatchMode,
    /// Documents retrieved per question.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Per-document truncation: keep the first n words.
    #[arg(long, default_value_t = 600)]
    doc_words: usize,
    /// Total word budget for the documentation section.
    #[arg(long)]
    budget: Option<usize>,
    /// Template override file (@field blocks).
    #[arg(long)]
    template: Option<PathBuf>,
    /// Generic utilities allowed as gold-plan lead tokens.
    #[arg(long, default_value_t = default_passthrough())]
    passthrough: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 1024)]
    max_output_tokens: u32,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    /// Refuse prompts longer than this many characters (http backend).
    #[arg(long)]
    max_prompt_chars: Option<usize>,
}

impl RunArgs {
    fn into_options(self) -> commands::RunOptions {
        commands::RunOptions {
            benchmark: self.benchmark,
            corpus: self.corpus,
            index: self.index,
            docs: self.docs,
            shots: self.shots,
            trials: self.trials,
            seed: self.seed,
            backend: self.backend,
            mode: self.mode,
            top_k: self.top_k,
            doc_words: self.doc_words,
            budget: self.budget,
            template: self.template,
            passthrough: self.passthrough,
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            timeout_secs: self.timeout_secs,
            max_retries: self.max_retries,
            max_prompt_chars: self.max_prompt_chars,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output report JSON.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Write every prompt/completion exchange here for offline re-scoring.
    #[arg(long)]
    replay_log: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Sweep axis: doc_words or shots.
    #[arg(long)]
    axis: String,
    /// Axis values: `100..800:100` or `0,5,10,15`.
    #[arg(long)]
    values: String,
    /// Output CSV table.
    #[arg(long, default_value = "sweep.csv")]
    out_csv: PathBuf,
    /// Directory for one report JSON per axis value.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Replay log written by `eval --replay-log`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    benchmark: PathBuf,
    #[arg(long, default_value = "exact", value_parser = commands::parse_mode)]
    mode: toolplan_core::evaluator::MatchMode,
    /// Template override used for the original run, if any.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long, default_value = "replay_report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct DslArgs {
    /// Program file, one step per line.
    #[arg(long)]
    program: PathBuf,
    /// Module fixture JSON; parse-only when absent.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Input bindings, e.g. --input IMAGE=image:input (repeatable).
    #[arg(long = "input")]
    inputs: Vec<String>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Forge(args) => commands::forge(&commands::ForgeOptions {
            tasks: args.tasks,
            corpus: args.corpus,
            map: args.map,
            out: args.out,
            out_corpus: args.out_corpus,
            forbidden: args.forbidden,
            passthrough: args.passthrough,
        }),
        Command::Index(args) => commands::index(&commands::IndexOptions {
            corpus: args.corpus,
            out: args.out,
            top_k: args.top_k,
            doc_words: args.doc_words,
        }),
        Command::Eval(args) => commands::eval(&commands::EvalOptions {
            run: args.run.into_options(),
            out: args.out,
            replay_log: args.replay_log,
        }),
        Command::Sweep(args) => commands::sweep_cmd(&commands::SweepOptions {
            run: args.run.into_options(),
            axis: args.axis,
            values: args.values,
            out_csv: args.out_csv,
            out_dir: args.out_dir,
        }),
        Command::Replay(args) => commands::replay_cmd(&commands::ReplayOptions {
            log: args.log,
            benchmark: args.benchmark,
            mode: args.mode,
            template: args.template,
            out: args.out,
        }),
        Command::Dsl(args) => commands::dsl(&commands::DslOptions {
            program: args.program,
            fixtures: args.fixtures,
            inputs: args.inputs,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let payload = serde_json::json!({
                "error": { "message": format!("{error:#}") }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
