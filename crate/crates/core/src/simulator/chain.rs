//! Birth–death chain in natural scale.
//!
//! Each regular interval inside the window gets nodes spaced uniformly in
//! its scale coordinate, so interior jumps are fair coin flips; the mean
//! holding time at a node is the Green integral of the cell killed at both
//! neighbours. Singular points become single nodes with one outgoing move,
//! shunt segments become unit-speed deterministic hops.

use serde::Serialize;

use crate::analysis::Analysis;
use crate::boundary::{default_anchor, Approach, EndpointAnalysis};
use crate::error::{Error, Result};
use crate::extreal::ext_string;
use crate::quadrature::{integrate, integrate_toward, TailOutcome, Tolerance};
use crate::spec_model::{DiffusionSpec, Direction, Piece, RegularPiece, ShuntSegment, Side, SingularClass};

/// Upper bound on the number of scale cells per regular interval.
pub const CELL_CAP: usize = 200_000;
/// Relative depth of the truncation point next to an unapproachable endpoint.
pub const CUT_FRACTION: f64 = 1e-3;
/// Geometric refinement steps for a stalling partial-reach segment.
const STALL_STEPS: i32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Diffusive,
    /// Moves one node in `dir` after its holding time: reflecting endpoints
    /// and shunt points.
    Reflect { dir: Direction },
    /// A node of a shunt segment, hopping at unit speed.
    Drift { dir: Direction },
    Trap,
    /// A regular point cut by the window: reaching it kills the path.
    WindowEdge,
    /// An infinite exit endpoint reached in finite time.
    InfiniteEndpoint,
    /// The limit point a stalling segment creeps toward and never passes.
    Stall,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Node {
    pub x: f64,
    pub kind: NodeKind,
    pub p_right: f64,
    /// Mean holding time.
    pub tau: f64,
    /// The piece the node belongs to.
    pub piece: usize,
    /// Scale coordinate for nodes of regular intervals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainModel {
    pub spec_name: String,
    pub window: [f64; 2],
    pub h: f64,
    pub nodes: Vec<Node>,
    pub diagnostics: Vec<String>,
}

impl ChainModel {
    /// Nearest node to `x`; inside a regular interval distance is measured
    /// in scale, elsewhere on the line.
    pub fn node_near(&self, spec: &DiffusionSpec, x: f64) -> Result<usize> {
        let [lo, hi] = self.window;
        if !(lo <= x && x <= hi) {
            return Err(Error::InvalidArgument(format!(
                "{} lies outside the window [{}, {}]",
                ext_string(x),
                ext_string(lo),
                ext_string(hi)
            )));
        }
        if let Some(idx) = spec.piece_index_at(x) {
            if let Piece::RegularInterval(r) = &spec.pieces[idx] {
                if let Ok(sx) = r.eval_scale(x) {
                    let best = self
                        .nodes
                        .iter()
                        .enumerate()
                        .filter(|(_, n)| n.piece == idx && n.scale.is_some())
                        .min_by(|(_, a), (_, b)| {
                            (a.scale.unwrap() - sx).abs().total_cmp(&(b.scale.unwrap() - sx).abs())
                        });
                    if let Some((i, _)) = best {
                        return Ok(i);
                    }
                }
            }
        }
        let (i, _) = self
            .nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (a.x - x).abs().total_cmp(&(b.x - x).abs()))
            .expect("a chain has nodes");
        Ok(i)
    }

    /// Cell boundaries `[c_i, c_{i+1}]` around each node, splitting the
    /// window at midpoints between neighbours.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 {
                    self.window[0]
                } else {
                    midpoint(self.nodes[i - 1].x, self.nodes[i].x)
                };
                let hi = if i + 1 == n {
                    self.window[1]
                } else {
                    midpoint(self.nodes[i].x, self.nodes[i + 1].x)
                };
                (lo, hi)
            })
            .collect()
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    if a.is_finite() && b.is_finite() {
        0.5 * (a + b)
    } else if a.is_finite() {
        b
    } else {
        a
    }
}

/// Solves `s(x) = u` inside `(lo, hi)` by bracketing and bisection.
fn invert_scale(r: &RegularPiece, u: f64, lo: f64, hi: f64) -> Result<f64> {
    let s = |x: f64| r.scale.eval(x);
    let mut a = if lo.is_finite() { lo } else { hi.min(0.0) - 1.0 };
    let mut b = if hi.is_finite() { hi } else { lo.max(0.0) + 1.0 };
    if !lo.is_finite() {
        let mut step = 1.0;
        while !(s(a) <= u) {
            a -= step;
            step *= 2.0;
            if !a.is_finite() {
                return Err(Error::Evaluation(format!("cannot invert scale `{}` at {u}", r.scale)));
            }
        }
    }
    if !hi.is_finite() {
        let mut step = 1.0;
        while !(s(b) >= u) {
            b += step;
            step *= 2.0;
            if !b.is_finite() {
                return Err(Error::Evaluation(format!("cannot invert scale `{}` at {u}", r.scale)));
            }
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let sm = s(m);
        if sm.is_nan() {
            return Err(Error::Evaluation(format!("scale `{}` is undefined at {m}", r.scale)));
        }
        if sm < u {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `∫_{(p, q)} |s(q) − s(z)| m(dz)`: expected time to reach `q` from a
/// reflecting or pushing point `p`.
fn push_time(r: &RegularPiece, p: f64, q: f64, sq: f64, improper: bool) -> Result<f64> {
    let f = |z: f64| {
        let d = r.speed.density.eval(z).max(0.0);
        if d == 0.0 {
            0.0
        } else {
            (sq - r.scale.eval(z)).abs() * d
        }
    };
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let mut t = if improper {
        match integrate_toward(f, q, p, Default::default()) {
            TailOutcome::Converged { value, .. } => value,
            _ => {
                return Err(Error::Evaluation(format!(
                    "entrance time from {} into `{}` is not finite",
                    ext_string(p),
                    r.scale
                )))
            }
        }
    } else {
        integrate(f, lo, hi, Tolerance::relative(1e-9)).value
    };
    t += r
        .speed
        .atoms
        .iter()
        .filter(|a| lo < a.at && a.at < hi)
        .map(|a| a.weight * (sq - r.scale.eval(a.at)).abs())
        .sum::<f64>();
    Ok(t)
}

/// Green integral of the cell `(x[i-1], x[i+1])` around node `i`.
fn green_time(r: &RegularPiece, xs: [f64; 3], ss: [f64; 3]) -> f64 {
    let [xl, xi, xr] = xs;
    let [sl, si, sr] = ss;
    let span = sr - sl;
    let density = |z: f64| r.speed.density.eval(z).max(0.0);
    let left = |z: f64| {
        let d = density(z);
        if d == 0.0 {
            0.0
        } else {
            (r.scale.eval(z) - sl) * (sr - si) / span * d
        }
    };
    let right = |z: f64| {
        let d = density(z);
        if d == 0.0 {
            0.0
        } else {
            (si - sl) * (sr - r.scale.eval(z)) / span * d
        }
    };
    let tol = Tolerance::relative(1e-9);
    integrate(left, xl, xi, tol).value + integrate(right, xi, xr, tol).value
}

struct Builder<'a> {
    an: &'a Analysis,
    lo: f64,
    hi: f64,
    h: f64,
    nodes: Vec<Node>,
    diagnostics: Vec<String>,
}

/// How one end of a regular interval is realized.
enum End {
    /// The grid ends at a node owned by a neighbouring singular point.
    Shared { x: f64, s: f64 },
    /// The grid ends at a node of its own.
    Own { x: f64, s: f64, kind: NodeKind },
}

impl<'a> Builder<'a> {
    fn endpoint(&self, idx: usize, side: Side) -> &'a EndpointAnalysis {
        self.an.endpoint(idx, side)
    }

    fn push(&mut self, x: f64, kind: NodeKind, piece: usize, scale: Option<f64>) {
        self.nodes.push(Node {
            x,
            kind,
            p_right: match kind {
                NodeKind::Diffusive => 0.5,
                NodeKind::Reflect { dir: Direction::Right } | NodeKind::Drift { dir: Direction::Right } => 1.0,
                _ => 0.0,
            },
            tau: self.h,
            piece,
            scale,
        });
    }

    fn regular_end(&mut self, idx: usize, r: &RegularPiece, side: Side, wlo: f64, whi: f64) -> Result<End> {
        let e = r.endpoint(side);
        let (cut_by_window, edge) = match side {
            Side::A => (e < self.lo, self.lo),
            Side::B => (e > self.hi, self.hi),
        };
        if cut_by_window {
            return Ok(End::Own {
                x: edge,
                s: r.eval_scale(edge)?,
                kind: NodeKind::WindowEdge,
            });
        }
        let ea = self.endpoint(idx, side);
        match ea.approachable {
            Approach::Yes => {
                let s = ea.scale_limit.expect("approachable endpoints have a scale limit").value();
                if e.is_finite() {
                    Ok(End::Shared { x: e, s })
                } else {
                    Ok(End::Own {
                        x: e,
                        s,
                        kind: NodeKind::InfiniteEndpoint,
                    })
                }
            }
            Approach::No => {
                if !e.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "the window may only be infinite at an exit endpoint; {} is not approachable",
                        ea.label()
                    )));
                }
                let inner = if side == Side::A { whi } else { wlo };
                let inner = if inner.is_finite() { inner } else { default_anchor(r, side) };
                let x = e + CUT_FRACTION * (inner - e);
                self.diagnostics.push(format!(
                    "{} is not approachable; the chain reflects at {x:.6} instead",
                    ea.label()
                ));
                let dir = if side == Side::A { Direction::Right } else { Direction::Left };
                Ok(End::Own {
                    x,
                    s: r.eval_scale(x)?,
                    kind: NodeKind::Reflect { dir },
                })
            }
            Approach::Undetermined => Err(crate::boundary::undetermined(ea)),
        }
    }

    fn regular(&mut self, idx: usize, r: &RegularPiece) -> Result<()> {
        let (wlo, whi) = (r.a.value().max(self.lo), r.b.value().min(self.hi));
        let lo_end = self.regular_end(idx, r, Side::A, wlo, whi)?;
        let hi_end = self.regular_end(idx, r, Side::B, wlo, whi)?;
        let (xa, sa) = match lo_end {
            End::Shared { x, s } | End::Own { x, s, .. } => (x, s),
        };
        let (xb, sb) = match hi_end {
            End::Shared { x, s } | End::Own { x, s, .. } => (x, s),
        };
        if !(sb > sa) {
            return Err(Error::Evaluation(format!(
                "empty scale range on piece {idx} inside the window"
            )));
        }
        let mut cells = ((sb - sa) / self.h).round().max(1.0) as usize;
        if cells > CELL_CAP {
            self.diagnostics.push(format!(
                "piece {idx}: {cells} scale cells requested, capped at {CELL_CAP}; effective step {:.3e}",
                (sb - sa) / CELL_CAP as f64
            ));
            cells = CELL_CAP;
        }
        let du = (sb - sa) / cells as f64;
        let first = self.nodes.len();
        if let End::Own { x, s, kind } = lo_end {
            self.push(x, kind, idx, Some(s));
        }
        let mut prev = xa;
        for k in 1..cells {
            let u = sa + k as f64 * du;
            let x = invert_scale(r, u, prev, xb)?;
            prev = x;
            self.push(x, NodeKind::Diffusive, idx, Some(u));
        }
        if let End::Own { x, s, kind } = hi_end {
            self.push(x, kind, idx, Some(s));
        }
        // holding times of the piece's own nodes
        let own: Vec<usize> = (first..self.nodes.len()).collect();
        let xs_at = |b: &Self, j: isize| -> (f64, f64) {
            if j < first as isize {
                (xa, sa)
            } else if j as usize >= b.nodes.len() {
                (xb, sb)
            } else {
                let n = &b.nodes[j as usize];
                (n.x, n.scale.unwrap())
            }
        };
        for &i in &own {
            let (xl, sl) = xs_at(self, i as isize - 1);
            let (xr, sr) = xs_at(self, i as isize + 1);
            let node = &self.nodes[i];
            let (xi, si) = (node.x, node.scale.unwrap());
            let tau = match node.kind {
                NodeKind::Diffusive => {
                    let mut t = green_time(r, [xl, xi, xr], [sl, si, sr]);
                    let w = r.speed.atoms.iter().filter(|a| (xl + xi) / 2.0 <= a.at && a.at < (xi + xr) / 2.0);
                    t += w.map(|a| a.weight).sum::<f64>() * (si - sl) * (sr - si) / (sr - sl);
                    self.nodes[i].p_right = (si - sl) / (sr - sl);
                    t
                }
                NodeKind::Reflect { dir: Direction::Right } => push_time(r, xi, xr, sr, false)?,
                NodeKind::Reflect { dir: Direction::Left } => push_time(r, xi, xl, sl, false)?,
                _ => self.h,
            };
            self.nodes[i].tau = tau;
        }
        Ok(())
    }

    fn singular_point(&mut self, idx: usize, x: f64, class: SingularClass) {
        let kind = match class.direction() {
            None => NodeKind::Trap,
            Some(dir) => NodeKind::Reflect { dir },
        };
        self.push(x, kind, idx, None);
    }

    fn drift_run(&mut self, idx: usize, from: f64, to: f64, dir: Direction, include_from: bool, include_to: bool) {
        let len = to - from;
        if !(len > 0.0) {
            return;
        }
        let n = (len / self.h).ceil().max(1.0) as usize;
        let step = len / n as f64;
        let start = if include_from { 0 } else { 1 };
        let end = if include_to { n } else { n - 1 };
        for k in start..=end {
            let x = if k == n { to } else { from + k as f64 * step };
            self.push(x, NodeKind::Drift { dir }, idx, None);
            let last = self.nodes.len() - 1;
            self.nodes[last].tau = step;
        }
    }

    /// Geometric nodes from `from` toward the stall point `to`, ending in
    /// a stall node just short of it.
    fn stall_run(&mut self, idx: usize, from: f64, to: f64, dir: Direction, include_from: bool) {
        let d = to - from;
        let mut pts: Vec<f64> = (0..=STALL_STEPS)
            .filter(|&k| include_from || k > 0)
            .map(|k| to - d * 0.5f64.powi(k))
            .collect();
        pts.dedup();
        let stall = to - d * 0.5f64.powi(STALL_STEPS + 1);
        for (j, &x) in pts.iter().enumerate() {
            self.push(x, NodeKind::Drift { dir }, idx, None);
            let next = pts.get(j + 1).copied().unwrap_or(stall);
            let last = self.nodes.len() - 1;
            self.nodes[last].tau = (next - x).abs().max(f64::MIN_POSITIVE);
        }
        self.push(stall, NodeKind::Stall, idx, None);
    }

    fn shunt_segment(&mut self, idx: usize, seg: &ShuntSegment) -> Result<()> {
        let (a, b) = (seg.a.value(), seg.b.value());
        let (lo, hi) = (a.max(self.lo), b.min(self.hi));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "the window must be finite inside {}",
                self.an.spec.pieces[idx].describe()
            )));
        }
        // window edges inside the segment are nodes of the segment
        let (own_lo, own_hi) = (lo > a, hi < b);
        let mark = self.nodes.len();
        match (seg.direction, seg.stall_point()) {
            (dir, None) => self.drift_run(idx, lo, hi, dir, own_lo, own_hi),
            (Direction::Right, Some(xs)) => {
                if xs >= hi {
                    self.drift_run(idx, lo, hi, Direction::Right, own_lo, own_hi);
                } else if xs <= lo {
                    self.drift_run(idx, lo, hi, Direction::Right, own_lo || xs == lo, own_hi);
                } else {
                    self.stall_run(idx, lo, xs, Direction::Right, own_lo);
                    self.drift_run(idx, xs, hi, Direction::Right, true, own_hi);
                }
            }
            (Direction::Left, Some(xs)) => {
                // build left to right: the drift part sits below the stall point
                if xs <= lo {
                    self.drift_run(idx, lo, hi, Direction::Left, own_lo, own_hi);
                } else if xs >= hi {
                    self.drift_run(idx, lo, hi, Direction::Left, own_lo, own_hi || xs == hi);
                } else {
                    self.drift_run(idx, lo, xs, Direction::Left, own_lo, true);
                    let start = self.nodes.len();
                    self.stall_run(idx, hi, xs, Direction::Left, own_hi);
                    self.nodes[start..].reverse();
                }
            }
        }
        // a left-moving drift node's time is the hop to its left neighbour
        if seg.direction == Direction::Left {
            let end = self.nodes.len();
            let prev_x = if mark > 0 { Some(self.nodes[mark - 1].x) } else { None };
            let xs: Vec<f64> = self.nodes[mark..end].iter().map(|n| n.x).collect();
            for (j, i) in (mark..end).enumerate() {
                if !matches!(self.nodes[i].kind, NodeKind::Drift { .. }) {
                    continue;
                }
                let left = if j == 0 { prev_x } else { Some(xs[j - 1]) };
                let hop = left.map(|l| self.nodes[i].x - l).unwrap_or(self.h);
                self.nodes[i].tau = hop.max(f64::MIN_POSITIVE);
            }
        }
        Ok(())
    }

    fn trap_segment(&mut self, idx: usize, a: f64, b: f64) -> Result<()> {
        let (lo, hi) = (a.max(self.lo), b.min(self.hi));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "the window must be finite inside {}",
                self.an.spec.pieces[idx].describe()
            )));
        }
        let len = hi - lo;
        let n = (len / self.h).ceil().max(1.0) as usize;
        let step = len / n as f64;
        let start = if lo > a { 0 } else { 1 };
        let end = if hi < b { n } else { n - 1 };
        for k in start..=end {
            let x = if k == n { hi } else { lo + k as f64 * step };
            self.push(x, NodeKind::Trap, idx, None);
        }
        Ok(())
    }

    /// Holding times of shunt points: the time to reach the first node on
    /// their push side.
    fn finish_points(&mut self) -> Result<()> {
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            let NodeKind::Reflect { dir } = node.kind else { continue };
            if self.an.spec.pieces[node.piece].as_point().is_none() {
                continue;
            }
            let next = match dir {
                Direction::Right => i + 1,
                Direction::Left => i.wrapping_sub(1),
            };
            let Some(nb) = self.nodes.get(next) else { continue };
            let tau = match &self.an.spec.pieces[nb.piece] {
                Piece::RegularInterval(r) => {
                    let side = if dir == Direction::Right { Side::A } else { Side::B };
                    let improper = self.an.endpoint(nb.piece, side).approachable != Approach::Yes;
                    push_time(r, node.x, nb.x, nb.scale.expect("regular node"), improper)?
                }
                _ => (nb.x - node.x).abs(),
            };
            self.nodes[i].tau = tau;
        }
        for n in &self.nodes {
            if !(n.tau > 0.0 && n.tau.is_finite()) {
                return Err(Error::Evaluation(format!(
                    "node at {} has holding time {}",
                    ext_string(n.x),
                    n.tau
                )));
            }
        }
        Ok(())
    }
}

/// Builds the chain on the closed window `[window.0, window.1]`.
pub fn build_chain(spec: &DiffusionSpec, window: (f64, f64), h: f64) -> Result<ChainModel> {
    build_chain_in(&Analysis::new(spec), window, h)
}

pub fn build_chain_in(an: &Analysis, window: (f64, f64), h: f64) -> Result<ChainModel> {
    let (lo, hi) = window;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidArgument(format!("window [{lo}, {hi}] is empty")));
    }
    let mut b = Builder {
        an,
        lo,
        hi,
        h,
        nodes: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (idx, piece) in an.spec.pieces.iter().enumerate() {
        if piece.hi() < lo || piece.lo() > hi || (piece.hi() == lo && !piece.is_point()) || (piece.lo() == hi && !piece.is_point()) {
            continue;
        }
        match piece {
            Piece::RegularInterval(r) => b.regular(idx, r)?,
            Piece::SingularPoint(p) => b.singular_point(idx, p.x, p.class),
            Piece::ShuntSegment(s) => b.shunt_segment(idx, s)?,
            Piece::TrapSegment(t) => b.trap_segment(idx, t.a.value(), t.b.value())?,
        }
    }
    if b.nodes.is_empty() {
        return Err(Error::InvalidArgument("the window contains no nodes".into()));
    }
    b.finish_points()?;
    Ok(ChainModel {
        spec_name: an.spec.name.clone(),
        window: [lo, hi],
        h,
        nodes: b.nodes,
        diagnostics: b.diagnostics,
    })
}
