//! Karp–Sipser core of random graphs with degrees in {1, 2, 3}: sampling,
//! exact leaf removal, the half-edge exploration chain, its fluid limit and
//! the critical scaling window.

pub mod cli;
pub mod core_model;
pub mod critical_lab;
pub mod error;
pub mod exploration;
pub mod fluid;
pub mod graph;
pub mod limit_law;
pub mod pool;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
