//! Core building blocks for documentation-grounded command planning benchmarks.
//!
//! The crate covers the full offline pipeline:
//!
//! - [`registry`] — tool specifications (signature, documentation, demos) and
//!   deterministic doc rendering.
//! - [`corpusforge`] — markup stripping, token renaming to synthesize unseen
//!   toolsets, leakage checking, and benchmark assembly.
//! - [`retriever`] — a TF-IDF index over tool documents with top-k queries and
//!   first-n-words truncation.
//! - [`promptkit`] — prompt assembly across docs/demos conditions with seeded
//!   demo selection.
//! - [`llmclient`] — the planner abstraction, plan extraction from completion
//!   text, and deterministic stub planners for offline runs.
//! - [`progdsl`] — parser, renderer, and fixture-driven executor for
//!   `VAR=MODULE(key=value)` tool-composition programs.
//! - [`evaluator`] — command-line-level F1 scoring and run aggregation.
//! - [`harness`] — end-to-end evaluation runs and ablation sweeps.
//!
//! Everything here is deterministic: the same inputs, seeds, and configuration
//! produce byte-identical outputs. The crate is `no_std`-compatible (with
//! `alloc`); IO, file formats, and backends live in the companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod corpusforge;
pub mod evaluator;
pub mod harness;
pub mod llmclient;
pub mod progdsl;
pub mod promptkit;
pub mod registry;
pub mod retriever;
pub mod seed;

mod digest;
mod textscan;

pub use digest::sha256_hex;
