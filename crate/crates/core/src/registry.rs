//! Tool specifications and deterministic documentation rendering.
//!
//! A [`ToolRegistry`] is built once, before a run starts, and never mutated
//! afterwards; iteration order is insertion order on every platform, which
//! downstream code relies on for deterministic tie-breaking.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;

/// An `<instruction, plan>` pair. The plan is stored as source text; it is
/// parsed under whichever plan grammar the consuming pipeline uses
/// (command lines or a tool-composition program).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoExample {
    pub instruction: String,
    pub plan: String,
}

/// One tool: identity, call form, free-text functionality description, and an
/// optional pool of per-tool demos.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub tool_id: String,
    pub name: String,
    pub signature: String,
    pub doc_text: String,
    #[serde(rename = "demos", default)]
    pub demo_pool: Vec<DemoExample>,
}

/// Layout of a rendered doc: call form first, or functionality prose first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocStyle {
    SignatureFirst,
    ProseFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegistryError {
    DuplicateToolId(String),
    UnknownToolId(String),
}

impl fmt::Display for RegistryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateToolId(id) => write!(f, "tool id already registered: {id}"),
            Self::UnknownToolId(id) => write!(f, "unknown tool id: {id}"),
        }
    }
}

impl core::error::Error for RegistryError {}

/// Insertion-ordered store of tool specs, immutable once a run begins.
/// Tool ids are case-sensitive.
#[derive(Debug, Clone, Default)]
pub struct ToolRegistry {
    tools: Vec<ToolSpec>,
    by_id: BTreeMap<String, usize>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a spec and return its id. Fails if the id is taken; existing
    /// entries are never overwritten.
    pub fn register(&mut self, spec: ToolSpec) -> Result<String, RegistryError> {
        if self.by_id.contains_key(&spec.tool_id) {
            return Err(RegistryError::DuplicateToolId(spec.tool_id));
        }
        let id = spec.tool_id.clone();
        self.by_id.insert(id.clone(), self.tools.len());
        self.tools.push(spec);
        Ok(id)
    }

    pub fn get(&self, tool_id: &str) -> Option<&ToolSpec> {
        self.by_id.get(tool_id).map(|&i| &self.tools[i])
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    /// Tools in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &ToolSpec> {
        self.tools.iter()
    }

    /// Render a tool's documentation. Pure function of (spec, style):
    /// identical calls yield byte-identical output, independent of the demo
    /// pool.
    pub fn render_doc(&self, tool_id: &str, style: DocStyle) -> Result<String, RegistryError> {
        let spec = self
            .get(tool_id)
            .ok_or_else(|| RegistryError::UnknownToolId(tool_id.into()))?;
        Ok(render_doc_text(spec, style))
    }

    /// Content digest over every identity-bearing field, in insertion order.
    pub fn digest(&self) -> String {
        let mut buf = String::new();
        for spec in &self.tools {
            for field in [&spec.tool_id, &spec.name, &spec.signature, &spec.doc_text] {
                buf.push_str(field);
                buf.push('\u{1f}');
            }
            for demo in &spec.demo_pool {
                buf.push_str(&demo.instruction);
                buf.push('\u{1f}');
                buf.push_str(&demo.plan);
                buf.push('\u{1f}');
            }
            buf.push('\u{1e}');
        }
        sha256_hex(buf.as_bytes())
    }
}

fn render_doc_text(spec: &ToolSpec, style: DocStyle) -> String {
    let (first, second) = match style {
        DocStyle::SignatureFirst => (&spec.signature, &spec.doc_text),
        DocStyle::ProseFirst => (&spec.doc_text, &spec.signature),
    };
    match (first.is_empty(), second.is_empty()) {
        (false, false) => alloc::format!("{first}\n{second}"),
        (false, true) => first.clone(),
        (true, _) => second.clone(),
    }
}
