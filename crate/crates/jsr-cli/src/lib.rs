//! Command-line front end for the joint-spectral-radius library.
//!
//! The binary reads matrix families from small JSON documents, runs the
//! requested analysis, and emits a report document whose hashed body can
//! be re-verified later — see [`doc`] for the input format, [`report`] for
//! the output format, and [`commands`] for the subcommand logic and the
//! exit-code contract.

pub mod commands;
pub mod doc;
pub mod report;
