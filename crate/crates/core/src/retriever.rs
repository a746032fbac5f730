//! TF-IDF retrieval over tool documents.
//!
//! Deliberately simple: raw term counts, smoothed idf, L2-normalized sparse
//! vectors, cosine scoring. The tokenizer is a fixed rule — lowercase, split
//! on anything outside `[a-z0-9_-]` — so CLI flags like `--port` survive as
//! single tokens.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetrievalError {
    DuplicateDocId(String),
    EmptyCorpus,
}

impl fmt::Display for RetrievalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateDocId(id) => write!(f, "duplicate document id: {id}"),
            Self::EmptyCorpus => write!(f, "cannot index an empty corpus"),
        }
    }
}

impl core::error::Error for RetrievalError {}

/// Tokenization rule identifier, recorded in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerRule {
    /// Lowercase; split on any character outside `[a-z0-9_-]`; no stemming,
    /// no stop words.
    #[default]
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    /// Number of documents returned per query.
    pub top_k: usize,
    /// Per-document truncation: keep the first n words.
    pub doc_word_limit: usize,
    #[serde(default)]
    pub tokenizer: TokenizerRule,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            doc_word_limit: 600,
            tokenizer: TokenizerRule::Simple,
        }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_ascii_lowercase();
    lower
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-'))
        .filter(|t| !t.is_empty())
        .map(ToString::to_string)
        .collect()
}

/// Smoothed inverse document frequency: well-conditioned for df = 0 and
/// never negative.
fn idf(doc_count: usize, df: usize) -> f64 {
    libm::log((1.0 + doc_count as f64) / (1.0 + df as f64)) + 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexData {
    config: RetrievalConfig,
    doc_ids: Vec<String>,
    /// Vocabulary in first-occurrence order; position is the term id.
    terms: Vec<String>,
    idf: Vec<f64>,
    /// Per document: (term id, weight) pairs sorted by term id, unit L2 norm
    /// unless the document has no in-vocabulary terms.
    doc_vectors: Vec<Vec<(u32, f64)>>,
}

/// Immutable TF-IDF index. Concurrent queries are safe: nothing is mutated
/// after build. Building is deterministic — the same corpus and config
/// produce an identical index, term ids included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "IndexData", into = "IndexData")]
pub struct RetrievalIndex {
    config: RetrievalConfig,
    doc_ids: Vec<String>,
    terms: Vec<String>,
    idf: Vec<f64>,
    doc_vectors: Vec<Vec<(u32, f64)>>,
    lookup: BTreeMap<String, u32>,
}

impl From<IndexData> for RetrievalIndex {
    fn from(data: IndexData) -> Self {
        let lookup = data
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            config: data.config,
            doc_ids: data.doc_ids,
            terms: data.terms,
            idf: data.idf,
            doc_vectors: data.doc_vectors,
            lookup,
        }
    }
}

impl From<RetrievalIndex> for IndexData {
    fn from(index: RetrievalIndex) -> Self {
        Self {
            config: index.config,
            doc_ids: index.doc_ids,
            terms: index.terms,
            idf: index.idf,
            doc_vectors: index.doc_vectors,
        }
    }
}

impl RetrievalIndex {
    /// Index `docs` as (doc_id, text) pairs. Document order is preserved and
    /// used to break score ties.
    pub fn build(
        docs: &[(String, String)],
        config: RetrievalConfig,
    ) -> Result<Self, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut lookup: BTreeMap<String, u32> = BTreeMap::new();
        let mut terms: Vec<String> = Vec::new();
        let mut doc_ids: Vec<String> = Vec::with_capacity(docs.len());
        let mut doc_term_counts: Vec<BTreeMap<u32, u64>> = Vec::with_capacity(docs.len());

        for (doc_id, text) in docs {
            if doc_ids.contains(doc_id) {
                return Err(RetrievalError::DuplicateDocId(doc_id.clone()));
            }
            doc_ids.push(doc_id.clone());
            let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
            for token in tokenize(text) {
                let next_id = terms.len() as u32;
                let id = *lookup.entry(token.clone()).or_insert_with(|| {
                    terms.push(token);
                    next_id
                });
                *counts.entry(id).or_insert(0) += 1;
            }
            doc_term_counts.push(counts);
        }

        let mut df = alloc::vec![0usize; terms.len()];
        for counts in &doc_term_counts {
            for &term_id in counts.keys() {
                df[term_id as usize] += 1;
            }
        }
        let idf: Vec<f64> = df.iter().map(|&d| idf(docs.len(), d)).collect();

        let doc_vectors: Vec<Vec<(u32, f64)>> = doc_term_counts
            .iter()
            .map(|counts| {
                let mut vector: Vec<(u32, f64)> = counts
                    .iter()
                    .map(|(&id, &tf)| (id, tf as f64 * idf[id as usize]))
                    .collect();
                l2_normalize(&mut vector);
                vector
            })
            .collect();

        Ok(Self {
            config,
            doc_ids,
            terms,
            idf,
            doc_vectors,
            lookup,
        })
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Rank documents by cosine similarity to `question`. Only documents
    /// with positive scores are returned, best first, ties broken by
    /// insertion order, at most `k` results. A query with no in-vocabulary
    /// terms returns an empty list.
    ///
    /// The ranking key is the cosine rounded to 1e-12: mathematically tied
    /// documents must fall back to the insertion-order tie-break no matter
    /// in which order a scorer happens to accumulate the same weights.
    pub fn query(&self, question: &str, k: usize) -> Vec<(String, f64)> {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for token in tokenize(question) {
            if let Some(&id) = self.lookup.get(&token) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Vec::new();
        }
        let mut query_vec: Vec<(u32, f64)> = counts
            .iter()
            .map(|(&id, &tf)| (id, tf as f64 * self.idf[id as usize]))
            .collect();
        l2_normalize(&mut query_vec);

        let mut scored: Vec<(usize, i64, f64)> = self
            .doc_vectors
            .iter()
            .enumerate()
            .map(|(i, doc_vec)| {
                let score = sparse_dot(&query_vec, doc_vec).clamp(0.0, 1.0);
                (i, rank_key(score), score)
            })
            .filter(|&(_, key, _)| key > 0)
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        scored
            .into_iter()
            .take(k)
            .map(|(i, _, score)| (self.doc_ids[i].clone(), score))
            .collect()
    }
}

/// Sort key for ranking: the score quantized to 1e-12.
pub fn rank_key(score: f64) -> i64 {
    libm::round(score * 1e12) as i64
}

fn l2_normalize(vector: &mut [(u32, f64)]) {
    let norm_sq: f64 = vector.iter().map(|(_, w)| w * w).sum();
    if norm_sq > 0.0 {
        let norm = libm::sqrt(norm_sq);
        for (_, w) in vector.iter_mut() {
            *w /= norm;
        }
    }
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let mut dot = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

/// First `min(n, word_count)` whitespace-delimited words of `text`, joined
/// by single spaces. Idempotent for a fixed `n`.
pub fn truncate_words(text: &str, n: usize) -> String {
    let mut out = String::new();
    for (taken, word) in text.split_whitespace().enumerate() {
        if taken >= n {
            break;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
