//! Experiment runner, JSON documents and command-line front end for
//! [`funcoord_core`].

pub mod experiments;
pub mod formats;

pub use funcoord_core;
