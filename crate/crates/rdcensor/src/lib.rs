//! Standard-library companion to `rdcensor-core`: CSV ingest and export,
//! JSON and CSV reports, a rayon executor, and the `rdcensor` command line.

pub mod cli;
pub mod io;
pub mod parallel;
pub mod report;
