//! IO, file formats, backends, and orchestration for the `toolplan` binary.
//!
//! All algorithmic work lives in `toolplan-core`; this crate reads and writes
//! the on-disk formats (tool corpora, rename maps, benchmarks, indexes,
//! reports, replay logs), talks to HTTP planner backends, and wires the
//! subcommands together.

pub mod commands;
pub mod formats;
pub mod http;
pub mod replay;
pub mod report;
