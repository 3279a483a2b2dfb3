//! Monte Carlo estimators and the closed-form hitting oracle.

use rayon::prelude::*;
use rand::Rng;
use serde::Serialize;

use super::chain::ChainModel;
use super::path::{replication_rng, run};
use super::SimConfig;
use crate::boundary::scale_limit;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::extreal::ext_string;
use crate::measure::Measure;
use crate::spec_model::{DiffusionSpec, Piece, Side};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

/// `P_x(σ_c < σ_a) = (s(x) − s(a)) / (s(c) − s(a))` for `a < x < c` in one
/// regular interval (its finite endpoints allowed as `a` or `c`).
pub fn analytic_hitting(spec: &DiffusionSpec, a: f64, x: f64, c: f64) -> Result<f64> {
    if !(a < x && x < c) {
        return Err(Error::InvalidArgument(format!("need a < x < c, got ({a}, {x}, {c})")));
    }
    let idx = spec
        .piece_index_at(x)
        .ok_or_else(|| Error::Domain(format!("{x} is not covered")))?;
    let r = match &spec.pieces[idx] {
        Piece::RegularInterval(r) => r,
        other => {
            return Err(Error::InvalidArgument(format!(
                "{x} lies in {}, not a regular interval",
                other.describe()
            )))
        }
    };
    let scale_at = |y: f64| -> Result<f64> {
        if r.contains(y) {
            return r.eval_scale(y);
        }
        let side = if y == r.a.value() {
            Side::A
        } else if y == r.b.value() {
            Side::B
        } else {
            return Err(Error::InvalidArgument(format!(
                "{} and {x} lie in different pieces",
                ext_string(y)
            )));
        };
        Ok(scale_limit(r, side)?.value())
    };
    let (sa, sx, sc) = (scale_at(a)?, scale_at(x)?, scale_at(c)?);
    Ok((sx - sa) / (sc - sa))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub estimate: f64,
    /// Half-width of the 95% Wilson interval.
    pub ci: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub n_rep: u64,
    pub start: f64,
    pub target: f64,
    pub horizon: f64,
}

/// Wilson score interval `(low, high)` for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sum in a fixed binary tree over the slice, independent of how the
/// terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Runs `f(rep)` for every replication on a pool of `threads` workers;
/// results come back in replication order.
fn replicate<T: Send, F: Fn(u64) -> T + Sync + Send>(n_rep: u64, threads: usize, f: F) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n_rep).into_par_iter().map(&f).collect()))
}

/// Fraction of replications started at `x` whose chain reaches the node
/// nearest `target` by time `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_hitting(
    spec: &DiffusionSpec,
    chain: &ChainModel,
    x: f64,
    target: f64,
    horizon: f64,
    n_rep: u64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<HittingEstimate> {
    if n_rep < 100 {
        return Err(Error::InvalidArgument(format!("n_rep must be at least 100, got {n_rep}")));
    }
    let start = chain.node_near(spec, x)?;
    let goal = chain.node_near(spec, target)?;
    let hits = replicate(n_rep, cfg.threads, |rep| {
        let mut rng = replication_rng(seed, rep);
        let mut hit = false;
        run(chain, start, horizon, cfg, &mut rng, |_, i| {
            hit |= i == goal;
            !hit
        });
        hit
    })?;
    let k = hits.iter().filter(|h| **h).count() as u64;
    let (lo, hi) = wilson(k, n_rep, Z95);
    let estimate = k as f64 / n_rep as f64;
    Ok(HittingEstimate {
        estimate,
        ci: (hi - estimate).max(estimate - lo),
        ci_low: lo,
        ci_high: hi,
        hits: k,
        n_rep,
        start: chain.nodes[start].x,
        target: chain.nodes[goal].x,
        horizon,
    })
}

/// A bounded test function `expr · 1_[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observable {
    pub lo: f64,
    pub hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<Expr>,
}

impl Observable {
    pub fn indicator(lo: f64, hi: f64) -> Observable {
        Observable { lo, hi, expr: None }
    }

    /// Parses `lo,hi` or `lo,hi:expr`.
    pub fn parse(text: &str) -> Result<Observable> {
        let (range, expr) = match text.split_once(':') {
            Some((r, e)) => (r, Some(Expr::parse(e.trim())?)),
            None => (text, None),
        };
        let bad = || Error::InvalidArgument(format!("observable `{text}`: expected `lo,hi` or `lo,hi:expr`"));
        let (lo, hi) = range.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad());
        }
        Ok(Observable { lo, hi, expr })
    }

    pub fn value(&self, x: f64) -> f64 {
        if !(self.lo <= x && x <= self.hi) {
            return 0.0;
        }
        match &self.expr {
            None => 1.0,
            Some(e) => {
                let v = e.eval(x);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectEstimate {
    /// Estimate of `∫ f P_t g dm − ∫ g P_t f dm` over the window.
    pub defect: f64,
    /// Half-width of the 95% normal interval.
    pub ci: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `m` of the window.
    pub window_mass: f64,
    pub t: f64,
    pub n_rep: u64,
}

/// Monte Carlo symmetry defect with `X_0 ~ m` restricted to the window and
/// both terms evaluated on the same path.
#[allow(clippy::too_many_arguments)]
pub fn estimate_symmetry_defect(
    chain: &ChainModel,
    f: &Observable,
    g: &Observable,
    t: f64,
    m: &Measure,
    n_rep: u64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<DefectEstimate> {
    if n_rep < 2 {
        return Err(Error::InvalidArgument("n_rep must be at least 2".into()));
    }
    let [wlo, whi] = chain.window;
    for (name, o) in [("f", f), ("g", g)] {
        if o.lo < wlo || o.hi > whi {
            return Err(Error::InvalidArgument(format!(
                "the support of {name} must lie in the window [{}, {}]",
                ext_string(wlo),
                ext_string(whi)
            )));
        }
    }
    let mut cumulative = Vec::with_capacity(chain.nodes.len());
    let mut acc = 0.0;
    for (lo, hi) in chain.cells() {
        let w = m.mass(lo, hi)?;
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "m of the cell [{}, {}] is infinite; choose a window on which m is finite",
                ext_string(lo),
                ext_string(hi)
            )));
        }
        acc += w.value();
        cumulative.push(acc);
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("m charges no part of the window".into()));
    }
    let terms = replicate(n_rep, cfg.threads, |rep| {
        let mut rng = replication_rng(seed, rep);
        let u = rng.random::<f64>() * total;
        let start = cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1);
        let x0 = chain.nodes[start].x;
        let out = run(chain, start, t, cfg, &mut rng, |_, _| true);
        let xt = if out.lifetime.is_some() {
            None
        } else {
            Some(chain.nodes[out.node].x)
        };
        let at = |o: &Observable| xt.map(|x| o.value(x)).unwrap_or(0.0);
        total * (f.value(x0) * at(g) - g.value(x0) * at(f))
    })?;
    let n = n_rep as f64;
    let mean = pairwise_sum(&terms) / n;
    let sq: Vec<f64> = terms.iter().map(|v| (v - mean) * (v - mean)).collect();
    let sd = (pairwise_sum(&sq) / (n - 1.0)).sqrt();
    let ci = Z95 * sd / n.sqrt();
    Ok(DefectEstimate {
        defect: mean,
        ci,
        ci_low: mean - ci,
        ci_high: mean + ci,
        window_mass: total,
        t,
        n_rep,
    })
}
