//! Command implementations and configuration handling for the `smpc` binary.
//!
//! Everything the binary can do is callable as a library function, which is
//! how the integration and acceptance suites drive it without spawning
//! processes.

pub mod commands;
pub mod config;
