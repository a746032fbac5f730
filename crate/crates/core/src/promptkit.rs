//! Prompt assembly for the four experimental conditions:
//! {with docs, without docs} x {0..k demos}, with seeded demo selection.
//!
//! The template text is pinned here, in one place, and its digest is recorded
//! in every report. Rendering is a pure function of the sections, so removing
//! the documentation section of a with-docs prompt reproduces the
//! corresponding without-docs prompt byte for byte.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpusforge::BenchTask;
use crate::digest::sha256_hex;
use crate::registry::{DemoExample, DocStyle, ToolRegistry};
use crate::retriever::{truncate_words, word_count, RetrievalConfig, RetrievalIndex};
use crate::seed::sample_without_replacement;

/// Marker line a planner's answer follows; also used when extracting plans
/// from completions.
pub const ANSWER_MARKER: &str = "Commands:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptError {
    NotEnoughDemos { requested: usize, available: usize },
    MissingIndex,
    UnknownDoc(String),
    InvalidTemplate(String),
}

impl fmt::Display for PromptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotEnoughDemos {
                requested,
                available,
            } => {
                write!(
                    f,
                    "requested {requested} demos but the pool has {available}"
                )
            }
            Self::MissingIndex => write!(f, "docs condition requires a retrieval index"),
            Self::UnknownDoc(id) => write!(f, "retrieved doc id not in registry: {id}"),
            Self::InvalidTemplate(msg) => write!(f, "invalid template override: {msg}"),
        }
    }
}

impl core::error::Error for PromptError {}

/// One experimental condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptCondition {
    pub use_docs: bool,
    /// Number of demos; zero-shot is permitted with or without docs.
    pub shots: usize,
    pub demo_seed: u64,
    /// Used only when `use_docs` is set.
    pub retrieval: RetrievalConfig,
    /// Total word budget for the documentation section; lowest-ranked docs
    /// are dropped first to fit. Independent of the per-document limit.
    #[serde(default)]
    pub prompt_word_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionLabel {
    System,
    Documentation,
    Examples,
    Question,
    AnswerFormat,
}

/// The pinned prompt wording. Override files may replace any field; the
/// digest of the effective template is recorded in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system_text: String,
    pub documentation_header: String,
    pub examples_header: String,
    pub question_header: String,
    pub answer_format_text: String,
    pub answer_marker: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system_text: "You are a command-line planning assistant. Read the task and reply \
                          with the exact commands that accomplish it."
                .into(),
            documentation_header: "Documentation:".into(),
            examples_header: "Examples:".into(),
            question_header: "Task:".into(),
            answer_format_text: "Reply with one command per line after the marker.".into(),
            answer_marker: ANSWER_MARKER.into(),
        }
    }
}

impl PromptTemplate {
    pub fn digest(&self) -> String {
        let mut buf = String::new();
        for field in [
            &self.system_text,
            &self.documentation_header,
            &self.examples_header,
            &self.question_header,
            &self.answer_format_text,
            &self.answer_marker,
        ] {
            buf.push_str(field);
            buf.push('\u{1f}');
        }
        sha256_hex(buf.as_bytes())
    }

    /// Parse a plain-text override. Blocks start with a line naming the
    /// field (`@system_text`, `@answer_marker`, ...) and run until the next
    /// block. Unnamed fields keep their defaults.
    pub fn parse_override(source: &str) -> Result<Self, PromptError> {
        let mut template = Self::default();
        let mut field: Option<&str> = None;
        let mut buf: Vec<&str> = Vec::new();
        let flush = |template: &mut Self, field: Option<&str>, buf: &mut Vec<&str>| {
            if let Some(name) = field {
                let value = buf.join("\n").trim_end().to_string();
                match name {
                    "system_text" => template.system_text = value,
                    "documentation_header" => template.documentation_header = value,
                    "examples_header" => template.examples_header = value,
                    "question_header" => template.question_header = value,
                    "answer_format_text" => template.answer_format_text = value,
                    "answer_marker" => template.answer_marker = value,
                    other => return Err(PromptError::InvalidTemplate(other.to_string())),
                }
            }
            buf.clear();
            Ok(())
        };
        for line in source.lines() {
            if let Some(name) = line.strip_prefix('@') {
                flush(&mut template, field, &mut buf)?;
                field = Some(name.trim());
            } else if field.is_some() {
                buf.push(line);
            } else if !line.trim().is_empty() {
                return Err(PromptError::InvalidTemplate(alloc::format!(
                    "content before first @field block: {line:?}"
                )));
            }
        }
        flush(&mut template, field, &mut buf)?;
        Ok(template)
    }
}

/// Where a prompt came from: enough to reproduce or replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptProvenance {
    pub task_id: String,
    pub condition: PromptCondition,
    pub retrieved_doc_ids: Vec<String>,
    pub demo_ids: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// An assembled prompt: labeled sections plus the rendered text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub sections: Vec<(SectionLabel, String)>,
    pub rendered: String,
    pub provenance: PromptProvenance,
}

impl Prompt {
    pub fn section(&self, label: SectionLabel) -> Option<&str> {
        self.sections
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, text)| text.as_str())
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.rendered.as_bytes())
    }
}

/// Uniform sample of `shots` demos without replacement, deterministic for a
/// fixed (pool order, shots, seed), returned in sampled order.
pub fn select_demo_indices(
    pool_len: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<usize>, PromptError> {
    if shots > pool_len {
        return Err(PromptError::NotEnoughDemos {
            requested: shots,
            available: pool_len,
        });
    }
    Ok(sample_without_replacement(pool_len, shots, seed))
}

pub fn select_demos(
    pool: &[DemoExample],
    shots: usize,
    seed: u64,
) -> Result<Vec<&DemoExample>, PromptError> {
    Ok(select_demo_indices(pool.len(), shots, seed)?
        .into_iter()
        .map(|i| &pool[i])
        .collect())
}

/// Render sections to the final prompt text: each section is prefixed by its
/// fixed header (if any) and sections are joined by blank lines. Pure
/// function of (template, sections).
pub fn render_sections(template: &PromptTemplate, sections: &[(SectionLabel, String)]) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(sections.len());
    for (label, text) in sections {
        let header = match label {
            SectionLabel::System | SectionLabel::AnswerFormat => None,
            SectionLabel::Documentation => Some(&template.documentation_header),
            SectionLabel::Examples => Some(&template.examples_header),
            SectionLabel::Question => Some(&template.question_header),
        };
        match header {
            Some(header) if text.is_empty() => parts.push(header.clone()),
            Some(header) => parts.push(alloc::format!("{header}\n{text}")),
            None => parts.push(text.clone()),
        }
    }
    parts.join("\n\n")
}

/// Assemble the prompt for one task under one condition.
///
/// With docs: the top-k documents for the task question are rendered
/// signature-first, truncated to the per-document word limit, and placed in
/// rank order; an empty retrieval is recorded as a warning, not an error.
/// With shots > 0: demos are rendered as instruction -> plan pairs in sampled
/// order (not sorted — order sensitivity is part of what runs measure).
pub fn assemble_prompt(
    task: &BenchTask,
    condition: &PromptCondition,
    registry: &ToolRegistry,
    index: Option<&RetrievalIndex>,
    demo_pool: &[DemoExample],
    template: &PromptTemplate,
) -> Result<Prompt, PromptError> {
    let mut sections: Vec<(SectionLabel, String)> = Vec::with_capacity(5);
    let mut warnings: Vec<String> = Vec::new();
    let mut retrieved_doc_ids: Vec<String> = Vec::new();

    sections.push((SectionLabel::System, template.system_text.clone()));

    if condition.use_docs {
        let index = index.ok_or(PromptError::MissingIndex)?;
        let hits = index.query(&task.question, condition.retrieval.top_k);
        if hits.is_empty() {
            warnings.push("retrieval returned no documents".to_string());
        }
        let mut docs: Vec<(String, String)> = Vec::with_capacity(hits.len());
        for (doc_id, _score) in hits {
            let rendered = registry
                .render_doc(&doc_id, DocStyle::SignatureFirst)
                .map_err(|_| PromptError::UnknownDoc(doc_id.clone()))?;
            docs.push((
                doc_id,
                truncate_words(&rendered, condition.retrieval.doc_word_limit),
            ));
        }
        if let Some(budget) = condition.prompt_word_budget {
            let mut total: usize = docs.iter().map(|(_, d)| word_count(d)).sum();
            while total > budget {
                match docs.pop() {
                    Some((dropped_id, dropped)) => {
                        total -= word_count(&dropped);
                        warnings.push(alloc::format!(
                            "dropped doc {dropped_id} to fit the prompt word budget"
                        ));
                    }
                    None => break,
                }
            }
        }
        retrieved_doc_ids = docs.iter().map(|(id, _)| id.clone()).collect();
        let doc_text = docs
            .iter()
            .map(|(_, d)| d.as_str())
            .collect::<Vec<_>>()
            .join("\n\n");
        sections.push((SectionLabel::Documentation, doc_text));
    }

    let demo_ids = select_demo_indices(demo_pool.len(), condition.shots, condition.demo_seed)?;
    if !demo_ids.is_empty() {
        let examples = demo_ids
            .iter()
            .map(|&i| {
                let demo = &demo_pool[i];
                alloc::format!(
                    "{} {}\n{}\n{}",
                    template.question_header,
                    demo.instruction,
                    template.answer_marker,
                    demo.plan
                )
            })
            .collect::<Vec<_>>()
            .join("\n\n");
        sections.push((SectionLabel::Examples, examples));
    }

    sections.push((SectionLabel::Question, task.question.clone()));
    sections.push((
        SectionLabel::AnswerFormat,
        alloc::format!(
            "{}\n{}",
            template.answer_format_text,
            template.answer_marker
        ),
    ));

    let rendered = render_sections(template, &sections);
    Ok(Prompt {
        sections,
        rendered,
        provenance: PromptProvenance {
            task_id: task.task_id.clone(),
            condition: condition.clone(),
            retrieved_doc_ids,
            demo_ids,
            warnings,
        },
    })
}
