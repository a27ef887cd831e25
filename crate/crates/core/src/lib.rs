//! Genetic algorithms with (adaptive) dissortative mating on dynamic
//! deceptive trap functions.
//!
//! The crate is organized bottom-up:
//!
//! - [`genome`]: packed bitstrings with unitation, Hamming distance and XOR.
//! - [`traps`]: order-`l` trap functions and their `m`-block concatenation.
//! - [`dynenv`]: XOR-mask environments with severity `rho` and speed
//!   `epsilon` measured in evaluations.
//! - [`gacore`]: selection, uniform crossover, bit-flip mutation, elitism.
//! - [`algorithms`]: GGA, SSGA, ADMGA, two RIGAs and positive/negative AMGA.
//! - [`metrics`]: best-of-generation traces and their averages.
//! - [`stats`]: two-tailed t-tests and `+`/`-`/`~` verdicts.
//! - [`harness`]: experiment plans, sweeps, comparisons and output files.

pub mod algorithms;
pub mod dynenv;
pub mod error;
pub mod gacore;
pub mod genome;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod stats;
pub mod traps;

pub use error::{Error, Result};
pub use genome::Bitstring;
