//! Synthetic emotional speech for speech emotion recognition (SER).
//!
//! The crate covers two halves of one pipeline:
//!
//! * **data synthesis**: [`promptgen`] enumerates generation tuples and renders
//!   prompts for an LLM, [`synthesis`] talks to a chat-completion endpoint and an
//!   SSML emotional TTS endpoint (both with deterministic offline mocks);
//! * **training**: [`corpus`] defines the feature-tensor file format, manifests,
//!   folds and a Gaussian-blob stand-in corpus, [`model`] holds the downstream
//!   classifier with hand-written backpropagation and AdamW, [`strategies`]
//!   implements baseline / random mixing / adversarial / transfer / curriculum
//!   training, and [`metrics`] computes WA/UA, fold aggregates and ratio sweeps.
//!
//! [`cli`] wires everything into the `sersynth` binary. Runnable walkthroughs of
//! each capability live in this crate's `examples/` directory.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod model;
pub mod promptgen;
pub mod seed;
pub mod strategies;
pub mod synthesis;

pub use error::{Error, Result};
