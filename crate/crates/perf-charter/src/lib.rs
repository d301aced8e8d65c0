//! File formats, reports, charts and the command-line front end for
//! `perf-charter`. The analyses themselves live in [`perf_charter_core`].

pub mod cli;
pub mod export;
pub mod ingest;
pub mod output;
pub mod parallel;
pub mod svg;
pub mod text;
