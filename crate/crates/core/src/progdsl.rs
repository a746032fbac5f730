//! Tool-composition programs: one `VAR=MODULE(key=value, ...)` step per
//! line, executed sequentially against a registry of table-driven mock
//! modules standing in for the real vision models.
//!
//! Grammar, per line (comments run from `#` to end of line; blank lines are
//! ignored):
//!
//! ```text
//! step    = VAR "=" MODULE "(" [arg {"," arg}] ")"
//! arg     = KEY "=" value
//! value   = VAR | string | number
//! VAR     = [A-Z][A-Z0-9_]*          MODULE = [A-Z][A-Z0-9_]*
//! KEY     = [A-Za-z_][A-Za-z0-9_]*
//! string  = "'" chars "'"            (\' and \\ escapes)
//! number  = ["-"] digits ["." digits]
//! ```
//!
//! Variables bind once — no reassignment — and every reference must name an
//! earlier step's target or a declared input such as `IMAGE` or `VIDEO`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::digest::sha256_hex;

/// Inputs assumed bound by the environment unless the caller says otherwise.
pub const DEFAULT_INPUTS: &[&str] = &["IMAGE", "VIDEO"];

/// An argument or binding value. Number equality is bitwise, which makes
/// fixture lookup exact.
#[derive(Debug, Clone)]
pub enum Value {
    Str(String),
    Num(f64),
    Var(String),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Str(a), Self::Str(b)) => a == b,
            (Self::Num(a), Self::Num(b)) => a.to_bits() == b.to_bits(),
            (Self::Var(a), Self::Var(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Value {
    fn render(&self) -> String {
        match self {
            Self::Str(s) => {
                let escaped = s.replace('\\', "\\\\").replace('\'', "\\'");
                alloc::format!("'{escaped}'")
            }
            Self::Num(n) => alloc::format!("{n}"),
            Self::Var(name) => name.clone(),
        }
    }

    /// Stable content key used for fixture matching and trace digests.
    fn canonical(&self) -> String {
        match self {
            Self::Str(s) => alloc::format!("s:{}", s.trim()),
            Self::Num(n) => alloc::format!("n:{:016x}", n.to_bits()),
            Self::Var(name) => alloc::format!("v:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub target_var: String,
    pub module_name: String,
    pub args: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProgramAst {
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DslError {
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    UndefinedVariable {
        step: usize,
        name: String,
    },
    DuplicateTarget {
        step: usize,
        name: String,
    },
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax {
                line,
                col,
                expected,
            } => {
                write!(
                    f,
                    "syntax error at line {line}, col {col}: expected {expected}"
                )
            }
            Self::UndefinedVariable { step, name } => {
                write!(
                    f,
                    "step {step}: variable {name} is not defined by an earlier step or input"
                )
            }
            Self::DuplicateTarget { step, name } => {
                write!(
                    f,
                    "step {step}: variable {name} is already bound; reassignment is not allowed"
                )
            }
        }
    }
}

impl core::error::Error for DslError {}

impl ProgramAst {
    /// Parse with the default declared inputs (`IMAGE`, `VIDEO`).
    pub fn parse(source: &str) -> Result<Self, DslError> {
        Self::parse_with_inputs(source, DEFAULT_INPUTS)
    }

    pub fn parse_with_inputs(source: &str, declared_inputs: &[&str]) -> Result<Self, DslError> {
        let mut steps = Vec::new();
        for (line_idx, raw_line) in source.lines().enumerate() {
            let line_no = line_idx + 1;
            if let Some(step) = parse_line(raw_line, line_no)? {
                steps.push(step);
            }
        }
        let ast = Self { steps };
        ast.check_bindings(declared_inputs)?;
        Ok(ast)
    }

    fn check_bindings(&self, declared_inputs: &[&str]) -> Result<(), DslError> {
        let mut bound: BTreeSet<&str> = declared_inputs.iter().copied().collect();
        for (i, step) in self.steps.iter().enumerate() {
            let step_no = i + 1;
            for (_, value) in &step.args {
                if let Value::Var(name) = value {
                    if !bound.contains(name.as_str()) {
                        return Err(DslError::UndefinedVariable {
                            step: step_no,
                            name: name.clone(),
                        });
                    }
                }
            }
            if !bound.insert(&step.target_var) {
                return Err(DslError::DuplicateTarget {
                    step: step_no,
                    name: step.target_var.clone(),
                });
            }
        }
        Ok(())
    }

    /// Canonical source text: one step per line, no spaces. `parse(render(ast))`
    /// is structurally equal to `ast`.
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .map(|step| {
                let args = step
                    .args
                    .iter()
                    .map(|(key, value)| alloc::format!("{key}={}", value.render()))
                    .collect::<Vec<_>>()
                    .join(",");
                alloc::format!("{}={}({args})", step.target_var, step.module_name)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Module names in step order; two programs are pipeline-equivalent when
    /// these sequences match, variable names aside.
    pub fn module_sequence(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.module_name.as_str()).collect()
    }
}

pub fn pipeline_equivalent(a: &ProgramAst, b: &ProgramAst) -> bool {
    a.module_sequence() == b.module_sequence()
}

// ---------------------------------------------------------------------------
// line parser
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    line: &'a str,
    line_no: usize,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.line[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_spaces(&mut self) {
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.bump();
        }
    }

    fn col(&self) -> usize {
        self.line[..self.pos].chars().count() + 1
    }

    fn error(&self, expected: &str) -> DslError {
        DslError::Syntax {
            line: self.line_no,
            col: self.col(),
            expected: expected.to_string(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&alloc::format!("'{c}'")))
        }
    }

    fn upper_ident(&mut self, what: &str) -> Result<String, DslError> {
        match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {}
            _ => return Err(self.error(what)),
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
        {
            self.bump();
        }
        Ok(self.line[start..self.pos].to_string())
    }

    fn key_ident(&mut self) -> Result<String, DslError> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(self.error("argument key")),
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.bump();
        }
        Ok(self.line[start..self.pos].to_string())
    }

    fn string_literal(&mut self) -> Result<Value, DslError> {
        self.expect('\'')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("closing single quote")),
                Some('\'') => return Ok(Value::Str(out)),
                Some('\\') => match self.bump() {
                    Some('\'') => out.push('\''),
                    Some('\\') => out.push('\\'),
                    _ => return Err(self.error("escape sequence \\' or \\\\")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Value, DslError> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.bump();
        }
        let int_digits = self.digits();
        if int_digits == 0 {
            return Err(self.error("digit"));
        }
        if self.peek() == Some('.') {
            self.bump();
            if self.digits() == 0 {
                return Err(self.error("fractional digit"));
            }
        }
        let text = &self.line[start..self.pos];
        let value: f64 = text.parse().map_err(|_| self.error("decimal number"))?;
        Ok(Value::Num(value))
    }

    fn digits(&mut self) -> usize {
        let mut n = 0;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            n += 1;
        }
        n
    }

    fn value(&mut self) -> Result<Value, DslError> {
        match self.peek() {
            Some('\'') => self.string_literal(),
            Some(c) if c == '-' || c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_uppercase() => Ok(Value::Var(self.upper_ident("variable")?)),
            _ => Err(self.error("string literal, number, or variable")),
        }
    }
}

/// Strip a `#` comment, honoring quotes so `'#'` inside a string survives.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    let mut in_string = false;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if in_string => i += 1,
            b'\'' => in_string = !in_string,
            b'#' if !in_string => return &line[..i],
            _ => {}
        }
        i += 1;
    }
    line
}

fn parse_line(raw_line: &str, line_no: usize) -> Result<Option<Step>, DslError> {
    let line = strip_comment(raw_line);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let mut cursor = Cursor {
        line,
        line_no,
        pos: 0,
    };
    cursor.skip_spaces();
    let target_var = cursor.upper_ident("target variable")?;
    cursor.skip_spaces();
    cursor.expect('=')?;
    cursor.skip_spaces();
    let module_name = cursor.upper_ident("module name")?;
    cursor.skip_spaces();
    cursor.expect('(')?;
    cursor.skip_spaces();

    let mut args: Vec<(String, Value)> = Vec::new();
    if cursor.peek() != Some(')') {
        loop {
            cursor.skip_spaces();
            let key = cursor.key_ident()?;
            cursor.skip_spaces();
            cursor.expect('=')?;
            cursor.skip_spaces();
            let value = cursor.value()?;
            args.push((key, value));
            cursor.skip_spaces();
            match cursor.peek() {
                Some(',') => {
                    cursor.bump();
                }
                Some(')') => break,
                _ => return Err(cursor.error("',' or ')'")),
            }
        }
    }
    cursor.expect(')')?;
    cursor.skip_spaces();
    if cursor.peek().is_some() {
        return Err(cursor.error("end of line"));
    }
    Ok(Some(Step {
        target_var,
        module_name,
        args,
    }))
}

// ---------------------------------------------------------------------------
// execution against mock modules
// ---------------------------------------------------------------------------

/// A table-driven stand-in for a real model: canonicalized arguments map to
/// a fixed output value.
#[derive(Debug, Clone)]
pub struct MockModule {
    pub name: String,
    pub required_keys: BTreeSet<String>,
    entries: Vec<(BTreeMap<String, String>, Value)>,
}

impl MockModule {
    /// Build from (args, output) fixture rows. Required keys are the keys
    /// common to every row, so the invariant that each row carries them
    /// holds by construction.
    pub fn new(name: &str, rows: Vec<(Vec<(String, Value)>, Value)>) -> Self {
        let canonical_rows: Vec<(BTreeMap<String, String>, Value)> = rows
            .into_iter()
            .map(|(args, output)| (canonicalize_args(&args), output))
            .collect();
        let required_keys = canonical_rows
            .iter()
            .map(|(args, _)| args.keys().cloned().collect::<BTreeSet<_>>())
            .reduce(|acc, keys| acc.intersection(&keys).cloned().collect())
            .unwrap_or_default();
        Self {
            name: name.to_string(),
            required_keys,
            entries: canonical_rows,
        }
    }

    fn lookup(&self, args: &BTreeMap<String, String>) -> Option<&Value> {
        self.entries
            .iter()
            .find(|(row, _)| row == args)
            .map(|(_, output)| output)
    }
}

fn canonicalize_args(args: &[(String, Value)]) -> BTreeMap<String, String> {
    args.iter()
        .map(|(key, value)| (key.clone(), value.canonical()))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct ModuleSet {
    modules: BTreeMap<String, MockModule>,
}

impl ModuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, module: MockModule) {
        self.modules.insert(module.name.clone(), module);
    }

    pub fn get(&self, name: &str) -> Option<&MockModule> {
        self.modules.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecError {
    UnknownModule {
        step: usize,
        name: String,
    },
    MissingArgKey {
        step: usize,
        module: String,
        key: String,
    },
    /// Arguments not covered by the fixture table: an unanticipated plan,
    /// reported loudly instead of inventing an output.
    FixtureMiss {
        step: usize,
        module: String,
        args: Vec<(String, String)>,
    },
    MissingInput {
        name: String,
    },
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownModule { step, name } => write!(f, "step {step}: unknown module {name}"),
            Self::MissingArgKey { step, module, key } => {
                write!(f, "step {step}: {module} requires argument key {key:?}")
            }
            Self::FixtureMiss { step, module, args } => {
                write!(f, "step {step}: no fixture entry for {module}(")?;
                for (i, (key, value)) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{key}={value}")?;
                }
                write!(f, ")")
            }
            Self::MissingInput { name } => write!(f, "input variable {name} was not provided"),
        }
    }
}

impl core::error::Error for ExecError {}

/// One executed step, with a digest of its output for trace comparison.
/// Arguments are the resolved values, sorted by key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub step: usize,
    pub target_var: String,
    pub module_name: String,
    pub args: Vec<(String, Value)>,
    pub output_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub bindings: BTreeMap<String, Value>,
    /// The final step's binding; `None` for an empty program.
    pub result: Option<Value>,
    pub trace: Vec<TraceStep>,
}

/// Run `ast` step by step, binding each target to the module's fixture
/// output for its resolved, canonicalized arguments. Deterministic given the
/// fixtures; the trace has one entry per step.
pub fn execute(
    ast: &ProgramAst,
    inputs: &BTreeMap<String, Value>,
    modules: &ModuleSet,
) -> Result<Execution, ExecError> {
    let mut bindings: BTreeMap<String, Value> = inputs.clone();
    let mut trace = Vec::with_capacity(ast.steps.len());
    let mut result = None;

    for (i, step) in ast.steps.iter().enumerate() {
        let step_no = i + 1;
        let module = modules
            .get(&step.module_name)
            .ok_or_else(|| ExecError::UnknownModule {
                step: step_no,
                name: step.module_name.clone(),
            })?;

        let mut resolved: Vec<(String, Value)> = Vec::with_capacity(step.args.len());
        for (key, value) in &step.args {
            let concrete = match value {
                Value::Var(name) => bindings
                    .get(name)
                    .cloned()
                    .ok_or_else(|| ExecError::MissingInput { name: name.clone() })?,
                other => other.clone(),
            };
            resolved.push((key.clone(), concrete));
        }
        let canonical = canonicalize_args(&resolved);
        for key in &module.required_keys {
            if !canonical.contains_key(key) {
                return Err(ExecError::MissingArgKey {
                    step: step_no,
                    module: module.name.clone(),
                    key: key.clone(),
                });
            }
        }
        let output = module
            .lookup(&canonical)
            .ok_or_else(|| ExecError::FixtureMiss {
                step: step_no,
                module: module.name.clone(),
                args: canonical
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
            })?;

        resolved.sort_by(|a, b| a.0.cmp(&b.0));
        trace.push(TraceStep {
            step: step_no,
            target_var: step.target_var.clone(),
            module_name: step.module_name.clone(),
            args: resolved,
            output_digest: sha256_hex(output.canonical().as_bytes()),
        });
        bindings.insert(step.target_var.clone(), output.clone());
        result = Some(output.clone());
    }

    Ok(Execution {
        bindings,
        result,
        trace,
    })
}
