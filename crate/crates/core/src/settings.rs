use serde::{Deserialize, Serialize};

/// Numeric tolerances and probe configuration shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Value comparisons (validators, consistency checks).
    pub compare: f64,
    /// Absolute error target for quadrature.
    pub quad: f64,
    /// Absolute tolerance on type when bisecting for cutoffs.
    pub root: f64,
    /// Utility gap below which two options count as tied.
    pub tie: f64,
    /// Seed for the random probe types used by consistency checks.
    pub probe_seed: u64,
    /// Number of probe types per consistency check.
    pub probes: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            compare: 1e-9,
            quad: 1e-8,
            root: 1e-10,
            tie: 1e-12,
            probe_seed: 42,
            probes: 64,
        }
    }
}

pub const BISECTION_MAX_ITER: usize = 200;
