//! Std side of the zero-shot cognitive diagnosis toolkit: CSV domain files,
//! the persistent embedding cache, the HTTP embedder, run configuration,
//! checkpoints, run manifests and the command implementations behind the
//! `zsdiag` binary.

pub mod cache;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;
pub mod remote;
