//! On-disk formats: tool corpora (JSONL), rename maps, benchmarks, source
//! task files, serialized indexes, DSL fixture tables, and template
//! overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use toolplan_core::corpusforge::{strip_markup_bytes, BenchTask, Benchmark, RenameMap};
use toolplan_core::progdsl::{MockModule, ModuleSet, Value};
use toolplan_core::promptkit::PromptTemplate;
use toolplan_core::registry::{DemoExample, ToolRegistry, ToolSpec};
use toolplan_core::retriever::RetrievalIndex;

/// Tasks in source vocabulary, the input to `forge`.
#[derive(Debug, Clone, Deserialize)]
pub struct SourceTasksFile {
    pub tasks: Vec<BenchTask>,
    #[serde(default)]
    pub demo_pool: Vec<DemoExample>,
    #[serde(default)]
    pub source_corpus: Option<String>,
    #[serde(default)]
    pub creation_seed: Option<u64>,
}

pub fn load_source_tasks(path: &Path) -> Result<SourceTasksFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("corpusforge: reading tasks file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("corpusforge: parsing tasks file {}", path.display()))
}

pub fn load_rename_map(path: &Path) -> Result<RenameMap> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("corpusforge: reading rename map {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("corpusforge: parsing rename map {}", path.display()))
}

/// Read a raw documentation directory: one file per tool, filename = source
/// tool id. Files are taken in sorted filename order so registry insertion
/// order is stable across platforms.
pub fn load_raw_corpus(dir: &Path) -> Result<ToolRegistry> {
    let mut names: Vec<String> = Vec::new();
    for entry in fs::read_dir(dir)
        .with_context(|| format!("corpusforge: reading corpus directory {}", dir.display()))?
    {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            match entry.file_name().into_string() {
                Ok(name) => names.push(name),
                Err(name) => bail!("corpusforge: non-UTF-8 filename {name:?}"),
            }
        }
    }
    names.sort();
    if names.is_empty() {
        bail!(
            "corpusforge: corpus directory {} contains no files",
            dir.display()
        );
    }
    let mut registry = ToolRegistry::new();
    for name in names {
        let raw = fs::read(dir.join(&name))
            .with_context(|| format!("corpusforge: reading raw doc {name}"))?;
        let doc_text =
            strip_markup_bytes(&raw).with_context(|| format!("corpusforge: raw doc {name}"))?;
        registry
            .register(ToolSpec {
                tool_id: name.clone(),
                name: name.clone(),
                signature: name.clone(),
                doc_text,
                demo_pool: vec![],
            })
            .with_context(|| "registry: registering raw corpus")?;
    }
    Ok(registry)
}

/// Tool corpus file: one JSON object per line, UTF-8, LF line endings.
pub fn load_tool_corpus(path: &Path) -> Result<ToolRegistry> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("registry: reading tool corpus {}", path.display()))?;
    let mut registry = ToolRegistry::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let spec: ToolSpec = serde_json::from_str(line)
            .with_context(|| format!("registry: tool corpus line {}", i + 1))?;
        registry
            .register(spec)
            .with_context(|| format!("registry: tool corpus line {}", i + 1))?;
    }
    if registry.is_empty() {
        bail!("registry: tool corpus {} is empty", path.display());
    }
    Ok(registry)
}

pub fn save_tool_corpus(registry: &ToolRegistry, path: &Path) -> Result<()> {
    let mut out = String::new();
    for spec in registry.iter() {
        out.push_str(&serde_json::to_string(spec)?);
        out.push('\n');
    }
    fs::write(path, out)
        .with_context(|| format!("registry: writing tool corpus {}", path.display()))
}

pub fn load_benchmark(path: &Path) -> Result<Benchmark> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("corpusforge: reading benchmark {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("corpusforge: parsing benchmark {}", path.display()))
}

pub fn save_benchmark(benchmark: &Benchmark, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(benchmark)?;
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("corpusforge: writing benchmark {}", path.display()))
}

pub fn load_index(path: &Path) -> Result<RetrievalIndex> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("retriever: reading index {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("retriever: parsing index {}", path.display()))
}

pub fn save_index(index: &RetrievalIndex, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string(index)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("retriever: writing index {}", path.display()))
}

type FixtureEntry = (Vec<(String, Value)>, Value);

/// Fixture file for mock modules: `{module_name: [{args, output}]}` where
/// values are strings or numbers.
pub fn load_module_fixtures(path: &Path) -> Result<ModuleSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("progdsl: reading fixtures {}", path.display()))?;
    let parsed: BTreeMap<String, Vec<FixtureRow>> = serde_json::from_str(&text)
        .with_context(|| format!("progdsl: parsing fixtures {}", path.display()))?;
    let mut modules = ModuleSet::new();
    for (name, rows) in parsed {
        let rows: Result<Vec<FixtureEntry>> = rows
            .into_iter()
            .map(|row| {
                let args: Result<Vec<(String, Value)>> = row
                    .args
                    .into_iter()
                    .map(|(key, value)| Ok((key, json_to_value(&name, value)?)))
                    .collect();
                Ok((args?, json_to_value(&name, row.output)?))
            })
            .collect();
        modules.insert(MockModule::new(&name, rows?));
    }
    Ok(modules)
}

#[derive(Debug, Deserialize)]
struct FixtureRow {
    args: BTreeMap<String, serde_json::Value>,
    output: serde_json::Value,
}

fn json_to_value(module: &str, value: serde_json::Value) -> Result<Value> {
    match value {
        serde_json::Value::String(s) => Ok(Value::Str(s)),
        serde_json::Value::Number(n) => n
            .as_f64()
            .map(Value::Num)
            .with_context(|| format!("progdsl: module {module}: non-finite number")),
        other => bail!(
            "progdsl: module {module}: fixture values must be strings or numbers, got {other}"
        ),
    }
}

pub fn load_template(path: Option<&Path>) -> Result<PromptTemplate> {
    match path {
        None => Ok(PromptTemplate::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("promptkit: reading template {}", path.display()))?;
            PromptTemplate::parse_override(&text)
                .with_context(|| format!("promptkit: template {}", path.display()))
        }
    }
}
