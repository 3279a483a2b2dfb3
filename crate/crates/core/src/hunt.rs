//! Hunt's hypothesis (H) through the ring-interior characterization.
//!
//! (H) holds iff every shunt point inside the ring-interior is a reflecting
//! endpoint of a regular interval: a right shunt must be the left end of a
//! regular interval from which it is approachable, and symmetrically for
//! left shunts. Shunt segments inside the ring-interior and shunt points
//! whose interval cannot reach them back produce thin, non-polar sets.

use serde::Serialize;

use crate::analysis::Analysis;
use crate::classification::{classify_point, PointClass};
use crate::error::{Error, Result};
use crate::extreal::ext_string;
use crate::reachability::{AtomKind, CommunicationGraph};
use crate::sets::Span;
use crate::spec_model::{DiffusionSpec, Direction, Side, SingularClass};
use crate::boundary::Approach;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingletonStatus {
    Polar,
    ThinNotPolar,
    NotThin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    R1Accumulation,
    R2UnreachedEndpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub location: Span,
    pub kind: WitnessKind,
    pub explanation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatusEntry {
    pub point: f64,
    pub class: PointClass,
    pub status: SingletonStatus,
}

/// How (H_ξ) relates to (H) for this spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HXiStatus {
    /// Λ_ap is empty, so (H_ξ) for any ξ is equivalent to (H).
    EquivalentToH,
    /// Λ_ap is non-empty; this tool does not decide (H_ξ).
    NotDecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HuntReport {
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    pub singleton_statuses: Vec<StatusEntry>,
    pub h_xi: HXiStatus,
}

/// Neighbouring atom a shunt point moves into.
fn downstream(atom: usize, dir: Direction) -> usize {
    match dir {
        Direction::Right => atom + 1,
        Direction::Left => atom - 1,
    }
}

/// For a shunt point atom: `None` if it reflects into an approachable
/// regular interval, otherwise the reason it is thin.
fn shunt_point_defect(an: &Analysis, graph: &CommunicationGraph, atom: usize) -> Result<Option<WitnessKind>> {
    let AtomKind::Point { class, .. } = graph.atoms[atom].kind else {
        unreachable!("called on point atoms only");
    };
    let dir = class.direction().expect("shunt point");
    let next = &graph.atoms[downstream(atom, dir)];
    match next.kind {
        AtomKind::Regular => {
            let side = match dir {
                Direction::Right => Side::A,
                Direction::Left => Side::B,
            };
            let ea = an.endpoint(next.piece.expect("regular atom"), side);
            match ea.approachable {
                Approach::Yes => Ok(None),
                Approach::No => Ok(Some(WitnessKind::R2UnreachedEndpoint)),
                Approach::Undetermined => Err(crate::boundary::undetermined(ea)),
            }
        }
        _ => Ok(Some(WitnessKind::R1Accumulation)),
    }
}

pub fn singleton_status(spec: &DiffusionSpec, x: f64) -> Result<SingletonStatus> {
    singleton_status_in(&Analysis::new(spec), x)
}

pub fn singleton_status_in(an: &Analysis, x: f64) -> Result<SingletonStatus> {
    let class = classify_point(&an.spec, x)?;
    if matches!(class, PointClass::Regular | PointClass::Trap) {
        return Ok(SingletonStatus::NotThin);
    }
    let graph = an.graph()?;
    let atom = graph.atom_of(x).ok_or_else(|| Error::Domain(format!("no atom contains {x}")))?;
    match graph.atoms[atom].kind {
        AtomKind::Point { class: SingularClass::Trap, .. } => Ok(SingletonStatus::NotThin),
        AtomKind::Point { .. } => {
            if shunt_point_defect(an, graph, atom)?.is_none() {
                Ok(SingletonStatus::NotThin)
            } else if graph.has_foreign_in_edge(atom) {
                Ok(SingletonStatus::ThinNotPolar)
            } else {
                Ok(SingletonStatus::Polar)
            }
        }
        // upstream points of the same segment always reach x
        AtomKind::ShuntSegment { .. } => Ok(SingletonStatus::ThinNotPolar),
        _ => Ok(SingletonStatus::NotThin),
    }
}

pub fn check_hunt(spec: &DiffusionSpec) -> Result<HuntReport> {
    check_hunt_in(&Analysis::new(spec))
}

pub fn check_hunt_in(an: &Analysis) -> Result<HuntReport> {
    let graph = an.graph()?;
    let ring = &an.classes()?.ring_interior;
    let mut witnesses = Vec::new();
    let mut statuses = Vec::new();
    for (idx, atom) in graph.atoms.iter().enumerate() {
        match atom.kind {
            AtomKind::ShuntSegment { direction, .. } => {
                // a segment's interior always lies inside its class's interior
                let side = match direction {
                    Direction::Right => "right",
                    Direction::Left => "left",
                };
                witnesses.push(Witness {
                    location: Span::open(atom.lo, atom.hi),
                    kind: WitnessKind::R1Accumulation,
                    explanation: format!(
                        "every point of the {side}-shunt segment is a limit of {side}-shunt points, \
                         never returns to itself, and is reached from upstream"
                    ),
                });
            }
            AtomKind::Point { class, .. } => {
                let status = singleton_status_in(an, atom.lo)?;
                statuses.push(StatusEntry {
                    point: atom.lo,
                    class: class.into(),
                    status,
                });
                if class == SingularClass::Trap || !ring.contains(atom.lo) {
                    continue;
                }
                if let Some(kind) = shunt_point_defect(an, graph, idx)? {
                    let explanation = match kind {
                        WitnessKind::R1Accumulation => format!(
                            "{} is a limit of shunt points on its downstream side",
                            ext_string(atom.lo)
                        ),
                        WitnessKind::R2UnreachedEndpoint => format!(
                            "{} enters a regular interval that cannot reach it back",
                            ext_string(atom.lo)
                        ),
                    };
                    witnesses.push(Witness {
                        location: Span::point(atom.lo),
                        kind,
                        explanation,
                    });
                }
            }
            _ => {}
        }
    }
    let ap = crate::symmetry::lambda_ap_in(an)?;
    Ok(HuntReport {
        holds: witnesses.is_empty(),
        witnesses,
        singleton_statuses: statuses,
        h_xi: if ap.is_empty() {
            HXiStatus::EquivalentToH
        } else {
            HXiStatus::NotDecided
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin_example;

    #[test]
    fn builtin_verdicts() {
        let drift = check_hunt(&builtin_example("drift").unwrap()).unwrap();
        assert!(!drift.holds);
        assert!(drift.witnesses.iter().all(|w| w.kind == WitnessKind::R1Accumulation));
        let bg = check_hunt(&builtin_example("bessel-glue").unwrap()).unwrap();
        assert!(!bg.holds);
        assert_eq!(bg.witnesses.len(), 1);
        assert_eq!(bg.witnesses[0].kind, WitnessKind::R2UnreachedEndpoint);
        assert_eq!(bg.witnesses[0].location, Span::point(0.0));
        for name in ["exa1", "exa2", "bm"] {
            assert!(check_hunt(&builtin_example(name).unwrap()).unwrap().holds, "{name}");
        }
    }

    #[test]
    fn statuses() {
        let bm = builtin_example("bm").unwrap();
        assert_eq!(singleton_status(&bm, 0.0).unwrap(), SingletonStatus::NotThin);
        let drift = builtin_example("drift").unwrap();
        assert_eq!(singleton_status(&drift, 1.5).unwrap(), SingletonStatus::ThinNotPolar);
        let bg = builtin_example("bessel-glue").unwrap();
        assert_eq!(singleton_status(&bg, 0.0).unwrap(), SingletonStatus::ThinNotPolar);
        let exa1 = builtin_example("exa1").unwrap();
        assert_eq!(singleton_status(&exa1, 0.0).unwrap(), SingletonStatus::NotThin);
    }
}
