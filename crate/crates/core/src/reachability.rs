//! The reach relation `x → y`, communication classes and the ring-interior.
//!
//! The line is cut into atoms (regular pieces, segments, singular points and
//! the two cemeteries `±∞`). A directed edge means some point of the source
//! reaches some point of the target in finite time with positive
//! probability:
//!
//! * a regular piece reaches itself, and an endpoint iff it is approachable;
//! * a right (left) shunt point reaches its right (left) neighbour;
//! * a shunt segment reaches its finite downstream endpoint, unless its
//!   reach is partial, in which case only the part past `x*` does;
//! * traps and trap segments reach nothing.

use std::collections::VecDeque;

use serde::Serialize;

use crate::boundary::{self, Approach, EndpointAnalysis};
use crate::error::Result;
use crate::extreal::ext_string;
use crate::quadrature::TailPolicy;
use crate::sets::{PointSet, Span};
use crate::spec_model::{DiffusionSpec, Direction, Piece, Side, SingularClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum AtomKind {
    NegInfinity,
    PosInfinity,
    Regular,
    ShuntSegment { direction: Direction, stalls: bool },
    TrapSegment,
    Point { class: SingularClass, virtual_point: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    #[serde(flatten)]
    pub kind: AtomKind,
    pub piece: Option<usize>,
    pub lo: f64,
    pub hi: f64,
}

impl Atom {
    pub fn is_point(&self) -> bool {
        matches!(self.kind, AtomKind::Point { .. })
    }

    pub fn is_cemetery(&self) -> bool {
        matches!(self.kind, AtomKind::NegInfinity | AtomKind::PosInfinity)
    }

    pub fn contains(&self, x: f64) -> bool {
        match self.kind {
            AtomKind::NegInfinity => x == f64::NEG_INFINITY,
            AtomKind::PosInfinity => x == f64::INFINITY,
            AtomKind::Point { .. } => x == self.lo,
            _ => self.lo < x && x < self.hi,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            AtomKind::NegInfinity => "-inf".into(),
            AtomKind::PosInfinity => "+inf".into(),
            AtomKind::Point { .. } => format!("{{{}}}", ext_string(self.lo)),
            _ => format!("({}, {})", ext_string(self.lo), ext_string(self.hi)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunicationGraph {
    pub atoms: Vec<Atom>,
    /// Out-edges per atom, sorted; a regular atom lists itself.
    pub edges: Vec<Vec<usize>>,
}

fn push_atom(atoms: &mut Vec<Atom>, kind: AtomKind, piece: Option<usize>, lo: f64, hi: f64) -> usize {
    atoms.push(Atom { kind, piece, lo, hi });
    atoms.len() - 1
}

pub fn build_graph(spec: &DiffusionSpec) -> Result<CommunicationGraph> {
    let analyses = boundary::analyze_all(spec, TailPolicy::default());
    build_graph_with(spec, &analyses)
}

/// Builds the graph from precomputed endpoint analyses; undetermined
/// approachability is an error naming the endpoint.
pub fn build_graph_with(spec: &DiffusionSpec, analyses: &[EndpointAnalysis]) -> Result<CommunicationGraph> {
    let mut atoms = Vec::new();
    push_atom(&mut atoms, AtomKind::NegInfinity, None, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, piece) in spec.pieces.iter().enumerate() {
        let (lo, hi) = (piece.lo(), piece.hi());
        match piece {
            Piece::RegularInterval(_) => {
                push_atom(&mut atoms, AtomKind::Regular, Some(i), lo, hi);
            }
            Piece::TrapSegment(_) => {
                push_atom(&mut atoms, AtomKind::TrapSegment, Some(i), lo, hi);
            }
            Piece::SingularPoint(p) => {
                push_atom(
                    &mut atoms,
                    AtomKind::Point { class: p.class, virtual_point: false },
                    Some(i),
                    lo,
                    hi,
                );
            }
            Piece::ShuntSegment(seg) => {
                let dir = seg.direction;
                let seg_kind = |stalls| AtomKind::ShuntSegment { direction: dir, stalls };
                match (seg.stall_point(), dir) {
                    (None, _) => {
                        push_atom(&mut atoms, seg_kind(false), Some(i), lo, hi);
                    }
                    (Some(xs), Direction::Right) => {
                        push_atom(&mut atoms, seg_kind(true), Some(i), lo, xs);
                        if xs < hi {
                            let class = SingularClass::RightShunt;
                            push_atom(&mut atoms, AtomKind::Point { class, virtual_point: true }, Some(i), xs, xs);
                            push_atom(&mut atoms, seg_kind(false), Some(i), xs, hi);
                        }
                    }
                    (Some(xs), Direction::Left) => {
                        if lo < xs {
                            push_atom(&mut atoms, seg_kind(false), Some(i), lo, xs);
                            let class = SingularClass::LeftShunt;
                            push_atom(&mut atoms, AtomKind::Point { class, virtual_point: true }, Some(i), xs, xs);
                        }
                        push_atom(&mut atoms, seg_kind(true), Some(i), xs, hi);
                    }
                }
            }
        }
    }
    push_atom(&mut atoms, AtomKind::PosInfinity, None, f64::INFINITY, f64::INFINITY);

    let n = atoms.len();
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for idx in 1..n - 1 {
        let atom = &atoms[idx];
        match atom.kind {
            AtomKind::Regular => {
                edges[idx].push(idx);
                let piece = atom.piece.expect("regular atoms come from pieces");
                for (side, target) in [(Side::A, idx - 1), (Side::B, idx + 1)] {
                    let a = analyses
                        .iter()
                        .find(|a| a.piece == piece && a.side == side)
                        .expect("analysis for every regular endpoint");
                    match a.approachable {
                        Approach::Yes => edges[idx].push(target),
                        Approach::No => {}
                        Approach::Undetermined => return Err(boundary::undetermined(a)),
                    }
                }
            }
            AtomKind::Point { class, .. } => match class {
                SingularClass::RightShunt => edges[idx].push(idx + 1),
                SingularClass::LeftShunt => edges[idx].push(idx - 1),
                SingularClass::Trap => {}
            },
            AtomKind::ShuntSegment { direction, stalls: false } => {
                let target = match direction {
                    Direction::Right => idx + 1,
                    Direction::Left => idx - 1,
                };
                // drifting to ±∞ takes infinite time
                if !atoms[target].is_cemetery() {
                    edges[idx].push(target);
                }
            }
            _ => {}
        }
        edges[idx].sort_unstable();
        edges[idx].dedup();
    }
    Ok(CommunicationGraph { atoms, edges })
}

impl CommunicationGraph {
    /// Atom containing `x` (the cemeteries for `±∞`).
    pub fn atom_of(&self, x: f64) -> Option<usize> {
        self.atoms.iter().position(|a| a.contains(x))
    }

    /// Atoms reachable from `from` by a path of length at least one.
    pub fn successors_closure(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.atoms.len()];
        let mut queue: VecDeque<usize> = self.edges[from].iter().copied().collect();
        for &t in &self.edges[from] {
            seen[t] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.edges[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// True when some atom other than `atom` has an edge into it.
    pub fn has_foreign_in_edge(&self, atom: usize) -> bool {
        self.edges
            .iter()
            .enumerate()
            .any(|(src, out)| src != atom && out.contains(&atom))
    }

    /// The directed reach relation between two points.
    pub fn reaches(&self, x: f64, y: f64) -> bool {
        let (Some(ax), Some(ay)) = (self.atom_of(x), self.atom_of(y)) else {
            return false;
        };
        let atom = &self.atoms[ax];
        if ax == ay {
            return match atom.kind {
                AtomKind::Regular => true,
                AtomKind::TrapSegment => x == y,
                AtomKind::Point { class: SingularClass::Trap, .. } => true,
                AtomKind::Point { .. } => self.successors_closure(ax)[ax],
                AtomKind::ShuntSegment { direction: Direction::Right, .. } => x < y,
                AtomKind::ShuntSegment { direction: Direction::Left, .. } => x > y,
                AtomKind::NegInfinity | AtomKind::PosInfinity => true,
            };
        }
        self.successors_closure(ax)[ay]
    }

    /// Whether `x` reaches the cemetery at `+∞` (or `−∞`) in finite time.
    pub fn reaches_infinity(&self, x: f64, positive: bool) -> bool {
        let target = if positive { self.atoms.len() - 1 } else { 0 };
        self.atom_of(x)
            .map(|a| self.successors_closure(a)[target])
            .unwrap_or(false)
    }

    pub fn atom_of_piece(&self, piece: usize) -> Option<usize> {
        self.atoms.iter().position(|a| a.piece == Some(piece))
    }
}

pub fn reaches(graph: &CommunicationGraph, x: f64, y: f64) -> bool {
    graph.reaches(x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    /// An interval of mutually linked points.
    Interval,
    /// A single trap point.
    TrapPoint,
    /// A trap segment: every point is its own class.
    TrapSingletons,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommClass {
    pub kind: ClassKind,
    pub span: Span,
    pub atoms: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunicationClasses {
    pub classes: Vec<CommClass>,
    pub ring_interior: PointSet,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn communication_classes(graph: &CommunicationGraph) -> CommunicationClasses {
    let n = graph.atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for (src, out) in graph.edges.iter().enumerate() {
        for &dst in out {
            if src == dst || graph.atoms[src].is_cemetery() || graph.atoms[dst].is_cemetery() {
                continue;
            }
            let (ra, rb) = (find(&mut parent, src), find(&mut parent, dst));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    // edges only join neighbouring atoms, so components are contiguous runs
    let mut classes = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        let root = find(&mut parent, i);
        let mut j = i;
        while j + 1 < n - 1 && find(&mut parent, j + 1) == root {
            j += 1;
        }
        let members: Vec<usize> = (i..=j).collect();
        let first = &graph.atoms[i];
        let last = &graph.atoms[j];
        let kind = match (members.len(), first.kind) {
            (1, AtomKind::TrapSegment) => ClassKind::TrapSingletons,
            (1, AtomKind::Point { class: SingularClass::Trap, .. }) => ClassKind::TrapPoint,
            _ => ClassKind::Interval,
        };
        let span = Span::new(first.lo, last.hi, first.is_point(), last.is_point());
        classes.push(CommClass { kind, span, atoms: members });
        i = j + 1;
    }
    let ring_interior = PointSet::from_spans(
        classes
            .iter()
            .filter(|c| c.kind == ClassKind::Interval)
            .map(|c| c.span.interior()),
    );
    CommunicationClasses { classes, ring_interior }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin_example;
    use crate::spec_model::parse_spec;

    #[test]
    fn exa1_edges_are_one_way() {
        let g = build_graph(&builtin_example("exa1").unwrap()).unwrap();
        assert!(g.reaches(-1.0, 1.0));
        assert!(!g.reaches(1.0, -1.0));
        assert!(g.reaches(0.0, 0.0));
        let classes = communication_classes(&g);
        assert_eq!(classes.classes.len(), 1);
        assert_eq!(classes.ring_interior, PointSet::line());
    }

    #[test]
    fn bm_never_reaches_infinity() {
        let g = build_graph(&builtin_example("bm").unwrap()).unwrap();
        assert!(g.reaches(3.0, -7.0));
        assert!(!g.reaches_infinity(0.0, true) && !g.reaches_infinity(0.0, false));
    }

    #[test]
    fn drift_is_rightward_only() {
        let g = build_graph(&builtin_example("drift").unwrap()).unwrap();
        assert!(g.reaches(0.0, 3.0));
        assert!(!g.reaches(3.0, 0.0));
        assert!(!g.reaches(0.0, 0.0));
        let classes = communication_classes(&g);
        assert_eq!(classes.ring_interior, PointSet::line());
    }

    #[test]
    fn unreachable_trap_splits_the_line() {
        let spec = parse_spec(
            r#"{"name":"split","pieces":[
            {"kind":"regular_interval","a":"-inf","b":0,"scale":"-ln(-x)","speed":{"density":"-2*x"}},
            {"kind":"singular_point","x":0,"class":"trap"},
            {"kind":"regular_interval","a":0,"b":"+inf","scale":"ln(x)","speed":{"density":"2*x"}}]}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        let classes = communication_classes(&g);
        let spans: Vec<String> = classes.classes.iter().map(|c| c.span.to_string()).collect();
        assert_eq!(spans, vec!["(-inf, 0)", "{0}", "(0, +inf)"]);
        assert_eq!(classes.classes[1].kind, ClassKind::TrapPoint);
    }

    #[test]
    fn partial_reach_stalls() {
        let spec = parse_spec(
            r#"{"name":"p","pieces":[
            {"kind":"trap_segment","a":"-inf","b":0},
            {"kind":"singular_point","x":0,"class":"trap"},
            {"kind":"shunt_segment","a":0,"b":2,"direction":"right","reach":"partial:1"},
            {"kind":"singular_point","x":2,"class":"trap"},
            {"kind":"trap_segment","a":2,"b":"+inf"}]}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        assert!(g.reaches(0.5, 0.9));
        assert!(!g.reaches(0.5, 1.0));
        assert!(!g.reaches(0.5, 1.5));
        assert!(g.reaches(1.0, 2.0));
        assert!(g.reaches(1.5, 2.0));
    }
}
