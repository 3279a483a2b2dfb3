//! Λ_ap, Λ_at, symmetrizability of the killed and the full process, and the
//! symmetrizing measures.

use serde::Serialize;

use crate::analysis::Analysis;
use crate::boundary::{Approach, EndpointRole};
use crate::error::{Error, Result};
use crate::hunt::check_hunt_in;
use crate::measure::{Measure, MeasurePart};
use crate::reachability::AtomKind;
use crate::sets::{PointSet, Span};
use crate::spec_model::{DiffusionSpec, Side, SingularClass};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentInterval {
    pub piece: usize,
    /// Endpoints included iff they are approachable entering shunts.
    pub i_n: Span,
    /// Endpoints included iff they are entering shunts.
    pub i_tilde: Span,
    pub roles: [EndpointRole; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub lambda_ap: PointSet,
    pub lambda_at: PointSet,
    pub hunt_holds: bool,
    pub symmetrizable_killed: bool,
    pub symmetrizable_full: bool,
    pub components: Vec<ComponentInterval>,
    /// m⁰, present when the killed process is symmetrizable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub killed_measure: Option<Measure>,
    /// The member of the family with all constants 1, present when the full
    /// process is symmetrizable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical_measure: Option<Measure>,
}

fn require_yes(an: &Analysis, piece: usize, side: Side) -> Result<bool> {
    let ea = an.endpoint(piece, side);
    match ea.approachable {
        Approach::Yes => Ok(true),
        Approach::No => Ok(false),
        Approach::Undetermined => Err(crate::boundary::undetermined(ea)),
    }
}

pub fn lambda_ap(spec: &DiffusionSpec) -> Result<PointSet> {
    lambda_ap_in(&Analysis::new(spec))
}

/// Shunt points between two regular intervals, approachable from both.
pub fn lambda_ap_in(an: &Analysis) -> Result<PointSet> {
    let graph = an.graph()?;
    let mut points = Vec::new();
    for (idx, atom) in graph.atoms.iter().enumerate() {
        let AtomKind::Point { class, virtual_point: false } = atom.kind else {
            continue;
        };
        if class == SingularClass::Trap {
            continue;
        }
        let (left, right) = (&graph.atoms[idx - 1], &graph.atoms[idx + 1]);
        if left.kind != AtomKind::Regular || right.kind != AtomKind::Regular {
            continue;
        }
        let (lp, rp) = (left.piece.unwrap(), right.piece.unwrap());
        // evaluate both sides so an undetermined one is always reported
        let from_left = require_yes(an, lp, Side::B)?;
        let from_right = require_yes(an, rp, Side::A)?;
        if !(from_left && from_right) {
            continue;
        }
        if an.options.strict_lambda_ap {
            let x = atom.lo;
            let outer_ok = |e: f64| !e.is_finite() || graph.reaches(e, x);
            if !(outer_ok(left.lo) && outer_ok(right.hi)) {
                continue;
            }
        }
        points.push(Span::point(atom.lo));
    }
    Ok(PointSet::from_spans(points))
}

pub fn lambda_at(spec: &DiffusionSpec) -> Result<PointSet> {
    lambda_at_in(&Analysis::new(spec))
}

/// Traps entered from some other atom.
pub fn lambda_at_in(an: &Analysis) -> Result<PointSet> {
    let graph = an.graph()?;
    let points = graph.atoms.iter().enumerate().filter_map(|(idx, atom)| {
        let trap = matches!(atom.kind, AtomKind::Point { class: SingularClass::Trap, .. });
        (trap && graph.has_foreign_in_edge(idx)).then(|| Span::point(atom.lo))
    });
    Ok(PointSet::from_spans(points))
}

pub fn component_intervals(an: &Analysis) -> Result<Vec<ComponentInterval>> {
    an.spec
        .regular_pieces()
        .map(|(idx, r)| {
            let ra = an.endpoint(idx, Side::A).require_role()?;
            let rb = an.endpoint(idx, Side::B).require_role()?;
            let inc = |role| role == EndpointRole::IncludedShunt;
            let tilde = |role| matches!(role, EndpointRole::IncludedShunt | EndpointRole::EntranceUnreachable);
            let (a, b) = (r.a.value(), r.b.value());
            Ok(ComponentInterval {
                piece: idx,
                i_n: Span::new(a, b, inc(ra), inc(rb)),
                i_tilde: Span::new(a, b, tilde(ra), tilde(rb)),
                roles: [ra, rb],
            })
        })
        .collect()
}

fn component_part(an: &Analysis, c: &ComponentInterval, constant: f64) -> MeasurePart {
    let r = an.spec.pieces[c.piece].as_regular().expect("regular piece");
    let mut speed = r.speed.clone();
    speed.atoms.retain(|a| c.i_n.contains(a.at));
    MeasurePart {
        carrier: c.i_n,
        scale_constant: constant,
        speed,
        piece: Some(c.piece),
    }
}

/// m⁰: the speed measure on each I_n, nothing elsewhere.
pub fn killed_measure(an: &Analysis) -> Result<Measure> {
    let comps = component_intervals(an)?;
    let parts = comps.iter().map(|c| component_part(an, c, 1.0)).collect();
    Ok(Measure::new(parts, true))
}

pub fn check_symmetrizable(spec: &DiffusionSpec) -> Result<SymmetryReport> {
    check_symmetrizable_in(&Analysis::new(spec))
}

pub fn check_symmetrizable_in(an: &Analysis) -> Result<SymmetryReport> {
    let hunt = check_hunt_in(an)?;
    let lambda_ap = lambda_ap_in(an)?;
    let lambda_at = lambda_at_in(an)?;
    let killed = hunt.holds && lambda_ap.is_empty();
    let full = killed && lambda_at.is_empty();
    let components = component_intervals(an)?;
    let killed_measure = if killed { Some(killed_measure(an)?) } else { None };
    let canonical_measure = if full {
        Some(family_member(an, &vec![1.0; components.len()])?)
    } else {
        None
    };
    Ok(SymmetryReport {
        lambda_ap,
        lambda_at,
        hunt_holds: hunt.holds,
        symmetrizable_killed: killed,
        symmetrizable_full: full,
        components,
        killed_measure,
        canonical_measure,
    })
}

fn family_member(an: &Analysis, constants: &[f64]) -> Result<Measure> {
    let comps = component_intervals(an)?;
    if constants.len() != comps.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} constant(s), one per regular component, got {}",
            comps.len(),
            constants.len()
        )));
    }
    if let Some(c) = constants.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidArgument(format!("constants must be positive and finite, got {c}")));
    }
    let mut parts: Vec<MeasurePart> = comps
        .iter()
        .zip(constants)
        .map(|(c, &k)| component_part(an, c, k))
        .collect();
    let covered = PointSet::from_spans(comps.iter().map(|c| c.i_n));
    parts.extend(
        covered
            .complement()
            .spans()
            .iter()
            .filter(|s| s.lo < s.hi)
            .map(|s| MeasurePart::lebesgue(*s)),
    );
    parts.sort_by(|x, y| x.carrier.lo.total_cmp(&y.carrier.lo));
    Ok(Measure::new(parts, true))
}

/// The member of the symmetrizing family with constant `c_n` on `I_n` and
/// Lebesgue measure off `⋃ I_n`.
pub fn measure_family(spec: &DiffusionSpec, constants: &[f64]) -> Result<Measure> {
    measure_family_in(&Analysis::new(spec), constants)
}

pub fn measure_family_in(an: &Analysis, constants: &[f64]) -> Result<Measure> {
    let report = check_symmetrizable_in(an)?;
    if !report.symmetrizable_full {
        return Err(Error::NotSymmetrizable(format!(
            "`{}` is not symmetrizable on the whole line (hunt holds: {}, Λ_ap = {}, Λ_at = {})",
            an.spec.name, report.hunt_holds, report.lambda_ap, report.lambda_at
        )));
    }
    family_member(an, constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin_example;

    #[test]
    fn builtin_verdicts() {
        let exa1 = check_symmetrizable(&builtin_example("exa1").unwrap()).unwrap();
        assert_eq!(exa1.lambda_ap.to_string(), "{0}");
        assert!(!exa1.symmetrizable_killed && !exa1.symmetrizable_full);
        let exa2 = check_symmetrizable(&builtin_example("exa2").unwrap()).unwrap();
        assert_eq!(exa2.lambda_at.to_string(), "{0}");
        assert!(exa2.symmetrizable_killed && !exa2.symmetrizable_full);
        assert!(exa2.killed_measure.is_some());
        let bm = check_symmetrizable(&builtin_example("bm").unwrap()).unwrap();
        assert!(bm.symmetrizable_killed && bm.symmetrizable_full);
        let m = bm.canonical_measure.unwrap();
        assert_eq!(m.parts.len(), 1);
        assert_eq!(m.radon, Some(true));
        let bg = check_symmetrizable(&builtin_example("bessel-glue").unwrap()).unwrap();
        assert!(bg.lambda_ap.is_empty());
        assert!(!bg.symmetrizable_killed);
        assert!(!check_symmetrizable(&builtin_example("drift").unwrap()).unwrap().symmetrizable_killed);
    }

    #[test]
    fn family_scaling() {
        let bm = builtin_example("bm").unwrap();
        let m = measure_family(&bm, &[2.0]).unwrap();
        assert!((m.density_at(0.3) - 4.0).abs() < 1e-12);
        assert!(measure_family(&bm, &[0.0]).is_err());
        assert!(measure_family(&bm, &[1.0, 1.0]).is_err());
        assert!(measure_family(&builtin_example("exa2").unwrap(), &[1.0]).is_err());
    }

    #[test]
    fn strict_switch_keeps_builtin_verdicts() {
        use crate::analysis::AnalysisOptions;
        for name in crate::builtin::builtin_names() {
            let spec = builtin_example(name).unwrap();
            let strict = Analysis::with_options(
                &spec,
                AnalysisOptions {
                    strict_lambda_ap: true,
                    ..Default::default()
                },
            );
            let a = check_symmetrizable(&spec).unwrap();
            let b = check_symmetrizable_in(&strict).unwrap();
            assert_eq!(a.symmetrizable_killed, b.symmetrizable_killed, "{name}");
            assert_eq!(a.symmetrizable_full, b.symmetrizable_full, "{name}");
        }
    }
}
