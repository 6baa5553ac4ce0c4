//! Zero-shot cross-domain cognitive diagnosis.
//!
//! Response logs are rendered as text profiles, embedded into a shared language
//! space, and projected into a cognitive space by three learned mappers. An
//! interaction function turns cognitive vectors into answer probabilities. A model
//! trained on several source domains diagnoses an unseen target domain without
//! touching its parameters.
//!
//! The crate is `no_std` with `alloc`; file formats, caching, remote embedders and
//! the command line live in the `zsdiag` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cdm;
pub mod corpus;
pub mod embed;
pub mod encode;
pub mod mapper;
pub mod math;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod profiles;
pub mod synth;
pub mod train;
pub mod words;
pub mod zeroshot;
