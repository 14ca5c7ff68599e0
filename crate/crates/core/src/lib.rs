//! Subscription-type inference for mobile-phone subscribers.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm of the
//! pipeline: CDR filtering and call-graph construction, per-user call
//! statistics, Gaussian Naive Bayes and AdaBoost baselines, binary graph
//! labeling solved by push-relabel max-flow, cross-operator inference by
//! majority label propagation, and a seeded synthetic CDR generator.
//! File formats, IO and the command line live in the `subtype` crate.

#![no_std]

extern crate alloc;

pub mod cdr;
pub mod classify;
pub mod crossnet;
pub mod error;
pub mod features;
pub mod label;
pub mod matrix;
pub mod mincut;
pub mod rng;
pub mod synth;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use label::{SubscriptionLabel, UserId};
