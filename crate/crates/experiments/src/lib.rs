//! Verification suites and counterexample reproductions for potential theory
//! on dyadic trees and bi-trees, with JSON/CSV reports.

pub mod cli;
pub mod config;
pub mod random;
pub mod report;
pub mod suites;

use bitree_core::poset::PosetOptions;
use bitree_core::solver::SolverOptions;

pub use config::Config;
pub use report::{ExperimentReport, Relation};

pub const DEFAULT_SEED: u64 = 0x5eed_b17e;

/// Everything an experiment needs besides its own parameters.
#[derive(Clone, Debug)]
pub struct Settings {
    pub config: Config,
    pub solver: SolverOptions,
    pub poset: PosetOptions,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            config: Config::default(),
            solver: SolverOptions::default(),
            poset: PosetOptions::default(),
            seed: DEFAULT_SEED,
        }
    }
}

/// `|x − y| / max(|x|, |y|)`, zero when both vanish.
pub fn rel_diff(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}
