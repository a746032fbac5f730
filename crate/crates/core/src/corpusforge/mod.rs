//! Benchmark synthesis: strip raw documentation, rename the source
//! vocabulary into an unseen one, certify zero leakage, and assemble task
//! benchmarks with gold command plans.

mod markup;

pub use markup::{strip_markup, strip_markup_bytes};

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::evaluator::normalize_plan;
use crate::registry::{DemoExample, ToolRegistry, ToolSpec};
use crate::textscan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    InvalidEncoding,
    InvalidMap(String),
    LeakageDetected(Vec<LeakViolation>),
    InvalidGoldPlan { task_id: String, lines: usize },
    DuplicateTaskId(String),
    UnknownLeadToken { task_id: String, token: String },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidEncoding => write!(f, "input is not valid UTF-8"),
            Self::InvalidMap(msg) => write!(f, "invalid rename map: {msg}"),
            Self::LeakageDetected(violations) => {
                write!(
                    f,
                    "source vocabulary leaked ({} violations",
                    violations.len()
                )?;
                if let Some(first) = violations.first() {
                    write!(
                        f,
                        "; first: {:?} at byte {} in {}",
                        first.token, first.offset, first.artifact
                    )?;
                }
                write!(f, ")")
            }
            Self::InvalidGoldPlan { task_id, lines } => {
                write!(
                    f,
                    "task {task_id}: gold plan has {lines} command(s), need at least 2"
                )
            }
            Self::DuplicateTaskId(id) => write!(f, "duplicate task id: {id}"),
            Self::UnknownLeadToken { task_id, token } => {
                write!(f, "task {task_id}: leading token {token:?} is neither a registered tool nor an allowed passthrough")
            }
        }
    }
}

impl core::error::Error for CorpusError {}

/// A forbidden token surviving in a renamed artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakViolation {
    /// Which artifact the token appeared in (e.g. `task q-03 question`).
    pub artifact: String,
    pub token: String,
    /// Byte offset within the artifact's text.
    pub offset: usize,
}

/// Ordered token-substitution table. Sources may be multi-word phrases;
/// matching happens at word boundaries, longest source first, in a single
/// left-to-right pass (replaced output is never rescanned).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, String)>", into = "Vec<(String, String)>")]
pub struct RenameMap {
    entries: Vec<(String, String)>,
    /// Indices into `entries`, longest source first, ties in entry order.
    order: Vec<usize>,
}

impl RenameMap {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, CorpusError> {
        for (source, target) in &entries {
            for (role, token) in [("source", source), ("target", target)] {
                if token.is_empty() {
                    return Err(CorpusError::InvalidMap(alloc::format!(
                        "empty {role} token"
                    )));
                }
                if token.chars().any(|c| c.is_control()) {
                    return Err(CorpusError::InvalidMap(alloc::format!(
                        "{role} token {token:?} contains control characters"
                    )));
                }
            }
            let edges_ok = source.chars().next().is_some_and(textscan::is_word_char)
                && source
                    .chars()
                    .next_back()
                    .is_some_and(textscan::is_word_char);
            if !edges_ok {
                return Err(CorpusError::InvalidMap(alloc::format!(
                    "source token {source:?} must start and end with a word character"
                )));
            }
        }
        let mut dedup: Vec<(&String, &String)> = Vec::new();
        for (source, target) in &entries {
            if let Some((_, seen)) = dedup.iter().find(|(s, _)| *s == source) {
                if *seen != target {
                    return Err(CorpusError::InvalidMap(alloc::format!(
                        "source token {source:?} mapped to both {seen:?} and {target:?}"
                    )));
                }
            } else {
                dedup.push((source, target));
            }
        }
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| entries[b].0.len().cmp(&entries[a].0.len()).then(a.cmp(&b)));
        Ok(Self { entries, order })
    }

    /// The identity map.
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            order: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Replace every word-boundary occurrence of each source token,
    /// longest source first. Pure token substitution: nothing is reordered,
    /// and with an empty map this is the identity.
    ///
    /// Idempotent as long as no target re-introduces a source token at a
    /// word boundary; for single-token vocabularies that reduces to "no
    /// target is itself a source".
    pub fn apply(&self, text: &str) -> String {
        if self.entries.is_empty() {
            return text.to_string();
        }
        let ordered: Vec<(&str, &str)> = self
            .order
            .iter()
            .map(|&i| (self.entries[i].0.as_str(), self.entries[i].1.as_str()))
            .collect();
        textscan::replace_tokens(text, &ordered)
    }

    /// Digest over the entry list (order included).
    pub fn digest(&self) -> String {
        let mut buf = String::new();
        for (source, target) in &self.entries {
            buf.push_str(source);
            buf.push('\t');
            buf.push_str(target);
            buf.push('\n');
        }
        sha256_hex(buf.as_bytes())
    }
}

impl TryFrom<Vec<(String, String)>> for RenameMap {
    type Error = CorpusError;

    fn try_from(entries: Vec<(String, String)>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<RenameMap> for Vec<(String, String)> {
    fn from(map: RenameMap) -> Self {
        map.entries
    }
}

/// Every word-boundary occurrence of a forbidden token in `text`, as
/// (token, byte offset) pairs ordered by offset. An empty result certifies
/// the text is free of the source vocabulary.
pub fn check_leakage(text: &str, forbidden: &BTreeSet<String>) -> Vec<(String, usize)> {
    let mut hits: Vec<(String, usize)> = Vec::new();
    for token in forbidden {
        for offset in textscan::find_token(text, token) {
            hits.push((token.clone(), offset));
        }
    }
    hits.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    hits
}

/// One benchmark task: a natural-language question and its gold command plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchTask {
    pub task_id: String,
    pub question: String,
    /// Normalized command lines (whitespace collapsed, continuations joined).
    pub gold_plan: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkMeta {
    pub source_corpus: String,
    pub rename_map_digest: String,
    pub creation_seed: u64,
}

/// Task instances plus a task-level demo pool. The demo pool is separate
/// from per-tool demos: these are whole-task examples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmark {
    pub tasks: Vec<BenchTask>,
    #[serde(default)]
    pub demo_pool: Vec<DemoExample>,
    pub metadata: BenchmarkMeta,
}

impl Benchmark {
    /// Structural checks: unique task ids, every gold plan has at least two
    /// commands, and every gold command's leading token belongs to a
    /// registered tool (or the passthrough set of generic utilities).
    pub fn validate(
        &self,
        registry: Option<&ToolRegistry>,
        passthrough: &BTreeSet<String>,
    ) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for task in &self.tasks {
            if !seen.insert(task.task_id.as_str()) {
                return Err(CorpusError::DuplicateTaskId(task.task_id.clone()));
            }
            if task.gold_plan.len() < 2 {
                return Err(CorpusError::InvalidGoldPlan {
                    task_id: task.task_id.clone(),
                    lines: task.gold_plan.len(),
                });
            }
            if let Some(registry) = registry {
                let lead_tokens: BTreeSet<&str> = registry
                    .iter()
                    .filter_map(|spec| spec.tool_id.split_whitespace().next())
                    .collect();
                for line in &task.gold_plan {
                    let lead = line.split_whitespace().next().unwrap_or_default();
                    if !lead_tokens.contains(lead) && !passthrough.contains(lead) {
                        return Err(CorpusError::UnknownLeadToken {
                            task_id: task.task_id.clone(),
                            token: lead.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Content digest over tasks, demo pool, and metadata.
    pub fn digest(&self) -> String {
        let mut buf = String::new();
        for task in &self.tasks {
            buf.push_str(&task.task_id);
            buf.push('\u{1f}');
            buf.push_str(&task.question);
            buf.push('\u{1f}');
            for line in &task.gold_plan {
                buf.push_str(line);
                buf.push('\u{1f}');
            }
            buf.push('\u{1e}');
        }
        for demo in &self.demo_pool {
            buf.push_str(&demo.instruction);
            buf.push('\u{1f}');
            buf.push_str(&demo.plan);
            buf.push('\u{1e}');
        }
        buf.push_str(&self.metadata.source_corpus);
        buf.push('\u{1f}');
        buf.push_str(&self.metadata.rename_map_digest);
        buf.push('\u{1f}');
        buf.push_str(&alloc::format!("{}", self.metadata.creation_seed));
        sha256_hex(buf.as_bytes())
    }
}

/// Source-vocabulary inputs to the forge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeInput {
    pub tasks: Vec<BenchTask>,
    pub demo_pool: Vec<DemoExample>,
    pub source_corpus: String,
    pub creation_seed: u64,
}

/// A forged benchmark together with the renamed tool registry.
#[derive(Debug, Clone)]
pub struct ForgeOutput {
    pub benchmark: Benchmark,
    pub registry: ToolRegistry,
}

/// Rename questions, gold plans, demos, and every registry field into the
/// target vocabulary, then certify that no forbidden token survives anywhere.
///
/// `forbidden` is supplied separately from the map on purpose: a map that
/// forgot an entry must be caught here, not silently trusted.
pub fn build_benchmark(
    input: &ForgeInput,
    map: &RenameMap,
    registry: &ToolRegistry,
    forbidden: &BTreeSet<String>,
    passthrough: &BTreeSet<String>,
) -> Result<ForgeOutput, CorpusError> {
    let mut tasks = Vec::with_capacity(input.tasks.len());
    for task in &input.tasks {
        let gold: Vec<String> = normalize_plan(&task.gold_plan)
            .iter()
            .map(|line| map.apply(line))
            .collect();
        if gold.len() < 2 {
            return Err(CorpusError::InvalidGoldPlan {
                task_id: task.task_id.clone(),
                lines: gold.len(),
            });
        }
        tasks.push(BenchTask {
            task_id: task.task_id.clone(),
            question: map.apply(&task.question),
            gold_plan: gold,
        });
    }

    let demo_pool: Vec<DemoExample> = input
        .demo_pool
        .iter()
        .map(|d| rename_demo(d, map))
        .collect();

    let mut renamed_registry = ToolRegistry::new();
    for spec in registry.iter() {
        let renamed = ToolSpec {
            tool_id: map.apply(&spec.tool_id),
            name: map.apply(&spec.name),
            signature: map.apply(&spec.signature),
            doc_text: map.apply(&spec.doc_text),
            demo_pool: spec.demo_pool.iter().map(|d| rename_demo(d, map)).collect(),
        };
        renamed_registry
            .register(renamed)
            .map_err(|e| CorpusError::InvalidMap(alloc::format!("renamed registry: {e}")))?;
    }

    let benchmark = Benchmark {
        tasks,
        demo_pool,
        metadata: BenchmarkMeta {
            source_corpus: input.source_corpus.clone(),
            rename_map_digest: map.digest(),
            creation_seed: input.creation_seed,
        },
    };

    let violations = scan_artifacts(&benchmark, &renamed_registry, forbidden);
    if !violations.is_empty() {
        return Err(CorpusError::LeakageDetected(violations));
    }
    benchmark.validate(Some(&renamed_registry), passthrough)?;

    Ok(ForgeOutput {
        benchmark,
        registry: renamed_registry,
    })
}

fn rename_demo(demo: &DemoExample, map: &RenameMap) -> DemoExample {
    DemoExample {
        instruction: map.apply(&demo.instruction),
        plan: map.apply(&demo.plan),
    }
}

/// Leakage scan across every artifact of a forged benchmark: tool fields,
/// questions, gold plans, and both demo pools.
pub fn scan_artifacts(
    benchmark: &Benchmark,
    registry: &ToolRegistry,
    forbidden: &BTreeSet<String>,
) -> Vec<LeakViolation> {
    let mut violations = Vec::new();
    let mut scan = |artifact: String, text: &str| {
        for (token, offset) in check_leakage(text, forbidden) {
            violations.push(LeakViolation {
                artifact: artifact.clone(),
                token,
                offset,
            });
        }
    };
    for spec in registry.iter() {
        scan(alloc::format!("tool {} id", spec.tool_id), &spec.tool_id);
        scan(alloc::format!("tool {} name", spec.tool_id), &spec.name);
        scan(
            alloc::format!("tool {} signature", spec.tool_id),
            &spec.signature,
        );
        scan(alloc::format!("tool {} doc", spec.tool_id), &spec.doc_text);
        for (i, demo) in spec.demo_pool.iter().enumerate() {
            scan(
                alloc::format!("tool {} demo {i} instruction", spec.tool_id),
                &demo.instruction,
            );
            scan(
                alloc::format!("tool {} demo {i} plan", spec.tool_id),
                &demo.plan,
            );
        }
    }
    for task in &benchmark.tasks {
        scan(
            alloc::format!("task {} question", task.task_id),
            &task.question,
        );
        for (i, line) in task.gold_plan.iter().enumerate() {
            scan(alloc::format!("task {} gold line {i}", task.task_id), line);
        }
    }
    for (i, demo) in benchmark.demo_pool.iter().enumerate() {
        scan(alloc::format!("demo {i} instruction"), &demo.instruction);
        scan(alloc::format!("demo {i} plan"), &demo.plan);
    }
    violations
}
