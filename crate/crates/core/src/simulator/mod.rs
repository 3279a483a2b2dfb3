//! Monte Carlo corroboration through a birth–death chain approximation.

mod chain;
mod estimate;
mod path;

use serde::Serialize;

pub use chain::{build_chain, build_chain_in, ChainModel, Node, NodeKind, CELL_CAP, CUT_FRACTION};
pub use estimate::{
    analytic_hitting, estimate_hitting, estimate_symmetry_defect, pairwise_sum, wilson, DefectEstimate,
    HittingEstimate, Observable, Z95,
};
pub use path::{simulate_path, PathSample, PathStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Traps hold the path forever.
    Full,
    /// The path dies on its first visit to a trap.
    KilledAtTraps,
    /// The path dies on reaching either end of the window.
    PartOnWindow,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "killed_at_traps" => Ok(Mode::KilledAtTraps),
            "part_on_window" => Ok(Mode::PartOnWindow),
            other => Err(format!(
                "unknown mode `{other}` (expected full, killed_at_traps or part_on_window)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Holding {
    /// Hold exactly the mean time.
    Deterministic,
    /// Exponential holding times with the node's mean.
    Exponential,
}

impl std::str::FromStr for Holding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "deterministic" => Ok(Holding::Deterministic),
            "exponential" => Ok(Holding::Exponential),
            other => Err(format!(
                "unknown holding `{other}` (expected deterministic or exponential)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub mode: Mode,
    pub holding: Holding,
    /// Worker threads; results do not depend on it.
    pub threads: usize,
    /// Safety cap on jumps per path.
    pub max_steps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: Mode::Full,
            holding: Holding::Deterministic,
            threads: 1,
            max_steps: 50_000_000,
        }
    }
}

impl SimConfig {
    pub fn with_mode(mode: Mode) -> SimConfig {
        SimConfig {
            mode,
            ..SimConfig::default()
        }
    }
}
