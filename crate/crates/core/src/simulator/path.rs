//! Path simulation on a [`ChainModel`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::chain::{ChainModel, NodeKind};
use super::{Holding, Mode, SimConfig};
use crate::error::Result;
use crate::spec_model::{DiffusionSpec, Direction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Alive,
    KilledAtWindow,
    AbsorbedAtTrap,
    DeadAtInfiniteEndpoint,
}

impl PathStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PathStatus::Alive => "alive",
            PathStatus::KilledAtWindow => "killed_at_window",
            PathStatus::AbsorbedAtTrap => "absorbed_at_trap",
            PathStatus::DeadAtInfiniteEndpoint => "dead_at_infinite_endpoint",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub status: PathStatus,
    /// Time of death; `None` while alive or frozen at a trap.
    pub lifetime: Option<f64>,
    pub mode: Mode,
}

impl PathSample {
    /// `t,x,status` rows; every row but the last is `alive`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,status\n");
        let n = self.times.len();
        for (i, (t, x)) in self.times.iter().zip(&self.positions).enumerate() {
            let status = if i + 1 == n { self.status.as_str() } else { "alive" };
            out.push_str(&format!("{t},{x},{status}\n"));
        }
        out
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Outcome {
    pub status: PathStatus,
    pub node: usize,
    /// Time of the last event (arrival or death).
    pub time: f64,
    pub lifetime: Option<f64>,
}

pub(crate) fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Runs the chain from `start` until `t_max` or death. `visit(t, node)` is
/// called on every arrival, including the start at time 0; returning
/// `false` stops the run early (reported alive).
pub(crate) fn run<R: Rng, F: FnMut(f64, usize) -> bool>(
    chain: &ChainModel,
    start: usize,
    t_max: f64,
    cfg: &SimConfig,
    rng: &mut R,
    mut visit: F,
) -> Outcome {
    let nodes = &chain.nodes;
    let last = nodes.len() - 1;
    let [wlo, whi] = chain.window;
    let mut i = start;
    let mut t = 0.0;
    let mut steps = 0usize;
    let alive = |node, time| Outcome {
        status: PathStatus::Alive,
        node,
        time,
        lifetime: None,
    };
    loop {
        if !visit(t, i) {
            return alive(i, t);
        }
        let node = &nodes[i];
        if cfg.mode == Mode::PartOnWindow && (node.x == wlo || node.x == whi) {
            return Outcome {
                status: PathStatus::KilledAtWindow,
                node: i,
                time: t,
                lifetime: Some(t),
            };
        }
        match node.kind {
            NodeKind::WindowEdge => {
                return Outcome {
                    status: PathStatus::KilledAtWindow,
                    node: i,
                    time: t,
                    lifetime: Some(t),
                }
            }
            NodeKind::InfiniteEndpoint => {
                return Outcome {
                    status: PathStatus::DeadAtInfiniteEndpoint,
                    node: i,
                    time: t,
                    lifetime: Some(t),
                }
            }
            NodeKind::Trap => {
                return Outcome {
                    status: PathStatus::AbsorbedAtTrap,
                    node: i,
                    time: t,
                    lifetime: (cfg.mode == Mode::KilledAtTraps).then_some(t),
                }
            }
            NodeKind::Stall => return alive(i, t),
            _ => {}
        }
        if steps >= cfg.max_steps {
            return alive(i, t);
        }
        steps += 1;
        let hold = match cfg.holding {
            Holding::Deterministic => node.tau,
            Holding::Exponential => node.tau * rng.sample::<f64, _>(Exp1),
        };
        if t + hold > t_max {
            return alive(i, t);
        }
        t += hold;
        let right = match node.kind {
            NodeKind::Diffusive => rng.random::<f64>() < node.p_right,
            NodeKind::Reflect { dir } | NodeKind::Drift { dir } => dir == Direction::Right,
            _ => unreachable!("absorbing kinds returned above"),
        };
        let next = if right {
            (i < last).then(|| i + 1)
        } else {
            i.checked_sub(1)
        };
        match next {
            Some(n) => i = n,
            None => {
                return Outcome {
                    status: PathStatus::KilledAtWindow,
                    node: i,
                    time: t,
                    lifetime: Some(t),
                }
            }
        }
    }
}

/// One trajectory from the node nearest `x0`, using replication stream 0.
pub fn simulate_path(
    spec: &DiffusionSpec,
    chain: &ChainModel,
    x0: f64,
    t_max: f64,
    cfg: &SimConfig,
    seed: u64,
) -> Result<PathSample> {
    let start = chain.node_near(spec, x0)?;
    let mut rng = replication_rng(seed, 0);
    let mut times = Vec::new();
    let mut positions = Vec::new();
    let out = run(chain, start, t_max, cfg, &mut rng, |t, i| {
        times.push(t);
        positions.push(chain.nodes[i].x);
        true
    });
    let frozen = out.lifetime.is_none();
    let end = *times.last().unwrap();
    if frozen && t_max.is_finite() && t_max > end {
        times.push(t_max);
        positions.push(chain.nodes[out.node].x);
    } else if !frozen && out.time > end {
        // death after a move off the window: record the time of death
        times.push(out.time);
        positions.push(chain.nodes[out.node].x);
    }
    Ok(PathSample {
        times,
        positions,
        status: out.status,
        lifetime: out.lifetime,
        mode: cfg.mode,
    })
}
