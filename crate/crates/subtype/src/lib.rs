//! File formats, experiment pipeline and command line around
//! [`subtype_core`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use subtype_core as core;
