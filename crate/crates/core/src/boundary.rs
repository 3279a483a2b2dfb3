//! Scale limits, the approachability integral test and endpoint roles.
//!
//! An endpoint `e` of a regular interval is approachable in finite time iff
//! `∫_e^c m((x, c)) ds(x) < ∞` for an interior anchor `c`. By Fubini this
//! equals `∫_{(e,c)} |s(y) − s(e)| m(dy)`, which is what gets integrated
//! here; when `s(e)` is infinite the integral diverges outright because `m`
//! charges every subinterval.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::{ext_string, ExtReal};
use crate::quadrature::{integrate_toward, refinement_point, TailOutcome, TailPolicy};
use crate::spec_model::{DiffusionSpec, MassHint, Piece, RegularPiece, Side, SingularClass};

/// |s| beyond which the scale is declared to diverge.
pub const SCALE_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Yes,
    No,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointRole {
    Exit,
    IncludedShunt,
    EntranceUnreachable,
    Natural,
    GlueToNeighbor,
}

/// What sits just outside an endpoint of a regular interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacent {
    Infinite,
    Trap,
    /// A shunt point moving into the interval.
    Entering,
    /// A shunt point moving away from the interval.
    Leaving,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndpointAnalysis {
    pub piece: usize,
    pub side: Side,
    pub endpoint: ExtReal,
    pub adjacent: Adjacent,
    pub scale_limit: Option<ExtReal>,
    pub approachable: Approach,
    pub role: Option<EndpointRole>,
    pub anchors: [f64; 2],
    pub rel_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EndpointAnalysis {
    pub fn label(&self) -> String {
        format!("{} of piece {}", ext_string(self.endpoint.value()), self.piece)
    }

    /// The role, or an error naming the endpoint when approachability is
    /// undetermined.
    pub fn require_role(&self) -> Result<EndpointRole> {
        self.role.ok_or_else(|| undetermined(self))
    }

    pub fn included(&self) -> bool {
        self.role == Some(EndpointRole::IncludedShunt)
    }
}

pub(crate) fn undetermined(a: &EndpointAnalysis) -> Error {
    Error::Undetermined {
        endpoint: a.label(),
        hint: "approachability could not be decided numerically; declare an endpoint mass hint \
               (`finite` or `infinite`) for this endpoint"
            .into(),
    }
}

/// Interior anchor: the midpoint of a finite interval, otherwise one unit
/// inside from the finite end (`0` for the whole line).
pub fn default_anchor(piece: &RegularPiece, _side: Side) -> f64 {
    let (a, b) = (piece.a.value(), piece.b.value());
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    }
}

/// Second anchor used to audit anchor independence.
pub fn audit_anchor(piece: &RegularPiece, side: Side) -> f64 {
    let c = default_anchor(piece, side);
    let e = piece.endpoint(side);
    if e.is_finite() {
        0.5 * (c + e)
    } else if e > 0.0 {
        c + 1.0
    } else {
        c - 1.0
    }
}

/// `lim s(x)` as `x` tends to the endpoint from inside.
pub fn scale_limit(piece: &RegularPiece, side: Side) -> Result<ExtReal> {
    let e = piece.endpoint(side);
    let c = default_anchor(piece, side);
    let toward = if side == Side::A { -1.0 } else { 1.0 };
    let infinite = if side == Side::A {
        ExtReal::NEG_INFINITY
    } else {
        ExtReal::INFINITY
    };
    let mut prev = piece.scale.eval_finite(c)?;
    let mut prev_d = f64::NAN;
    let mut ratio_run = 0;
    let mut settled = 0;
    let mut last_ratio = f64::NAN;
    let mut k = 1;
    while let Some(p) = refinement_point(c, e, k) {
        let v = piece.scale.eval(p);
        if v.is_nan() {
            return Err(Error::Evaluation(format!(
                "scale `{}` is undefined at x = {p}",
                piece.scale
            )));
        }
        if v.is_infinite() {
            if v * toward > 0.0 {
                return Ok(infinite);
            }
            return Err(Error::NotMonotone(format!(
                "scale `{}` jumps to {v} near {}",
                piece.scale,
                ext_string(e)
            )));
        }
        let d = (v - prev) * toward;
        let noise = 1e-13 * v.abs().max(1.0);
        if d < -noise {
            return Err(Error::NotMonotone(format!(
                "scale `{}` moves backwards near {} (x = {p})",
                piece.scale,
                ext_string(e)
            )));
        }
        let d = d.max(0.0);
        if v.abs() > SCALE_CAP {
            return Ok(infinite);
        }
        if prev_d > 0.0 && d > 0.0 {
            last_ratio = d / prev_d;
            if last_ratio >= 0.999 {
                ratio_run += 1;
                if ratio_run >= 8 {
                    return Ok(infinite);
                }
            } else {
                ratio_run = 0;
            }
        }
        if d <= 1e-15 * v.abs().max(1.0) {
            settled += 1;
            if settled >= 3 {
                prev = v;
                break;
            }
        } else {
            settled = 0;
        }
        prev = v;
        prev_d = d;
        k += 1;
    }
    let mut limit = prev;
    if prev_d > 0.0 && last_ratio < 1.0 && last_ratio > 0.0 {
        limit += toward * prev_d * last_ratio / (1.0 - last_ratio);
    }
    if e.is_finite() {
        let direct = piece.scale.eval(e);
        if direct.is_finite() && (direct - limit).abs() <= 1e-9 * limit.abs().max(1.0) {
            limit = direct;
        }
    }
    Ok(ExtReal::new(limit).expect("finite limit"))
}

/// The approachability test at a single anchor `c`.
pub fn approachable(piece: &RegularPiece, side: Side, c: f64) -> Approach {
    approachable_with(piece, side, c, TailPolicy::default())
}

pub fn approachable_with(piece: &RegularPiece, side: Side, c: f64, policy: TailPolicy) -> Approach {
    let hint = piece.hint(side);
    if hint == MassHint::Infinite {
        return Approach::No;
    }
    let limit = match scale_limit(piece, side) {
        Ok(l) => l,
        Err(_) => return Approach::Undetermined,
    };
    if !limit.is_finite() {
        return Approach::No;
    }
    if hint == MassHint::Finite {
        // ∫ m((x,c)) ds(x) ≤ m((e,c)) (s(c) − s(e))
        return Approach::Yes;
    }
    let se = limit.value();
    let e = piece.endpoint(side);
    let integrand = |y: f64| {
        let w = (piece.scale.eval(y) - se).abs() * piece.speed.density.eval(y).max(0.0);
        if w.is_nan() {
            f64::INFINITY
        } else {
            w
        }
    };
    match integrate_toward(integrand, c, e, policy) {
        TailOutcome::Converged { .. } => Approach::Yes,
        TailOutcome::Diverged { .. } => Approach::No,
        TailOutcome::Undetermined { .. } => Approach::Undetermined,
    }
}

/// The test at the default anchor, audited at a second anchor; the two
/// must agree.
pub fn approachable_audited(piece: &RegularPiece, side: Side, policy: TailPolicy) -> Approach {
    let first = approachable_with(piece, side, default_anchor(piece, side), policy);
    let second = approachable_with(piece, side, audit_anchor(piece, side), policy);
    if first == second {
        first
    } else {
        Approach::Undetermined
    }
}

/// Whether the process started at the endpoint can enter the interval:
/// `∫_{(e,c)} |s(c) − s(y)| m(dy) < ∞`.
pub fn entrance_finite(piece: &RegularPiece, side: Side, policy: TailPolicy) -> Approach {
    match piece.hint(side) {
        MassHint::Infinite => return Approach::No,
        MassHint::Finite => {
            if matches!(scale_limit(piece, side), Ok(l) if l.is_finite()) {
                return Approach::Yes;
            }
        }
        MassHint::Unknown => {}
    }
    let c = default_anchor(piece, side);
    let e = piece.endpoint(side);
    let sc = match piece.scale.eval_finite(c) {
        Ok(v) => v,
        Err(_) => return Approach::Undetermined,
    };
    let integrand = |y: f64| {
        let w = (sc - piece.scale.eval(y)).abs() * piece.speed.density.eval(y).max(0.0);
        if w.is_nan() {
            f64::INFINITY
        } else {
            w
        }
    };
    match integrate_toward(integrand, c, e, policy) {
        TailOutcome::Converged { .. } => Approach::Yes,
        TailOutcome::Diverged { .. } => Approach::No,
        TailOutcome::Undetermined { .. } => Approach::Undetermined,
    }
}

/// What lies beyond `side` of the regular piece at index `idx`.
pub fn adjacent(spec: &DiffusionSpec, idx: usize, side: Side) -> Adjacent {
    let r = spec.pieces[idx].as_regular().expect("regular piece");
    if !r.endpoint(side).is_finite() {
        return Adjacent::Infinite;
    }
    let neighbor = match side {
        Side::A => &spec.pieces[idx - 1],
        Side::B => &spec.pieces[idx + 1],
    };
    let class = neighbor.as_point().expect("finite boundaries are singular points").class;
    match (class, side) {
        (SingularClass::Trap, _) => Adjacent::Trap,
        (SingularClass::RightShunt, Side::A) | (SingularClass::LeftShunt, Side::B) => Adjacent::Entering,
        _ => Adjacent::Leaving,
    }
}

pub fn role_for(approach: Approach, adjacent: Adjacent) -> Option<EndpointRole> {
    match (approach, adjacent) {
        (Approach::Undetermined, _) => None,
        (Approach::Yes, Adjacent::Entering) => Some(EndpointRole::IncludedShunt),
        (Approach::Yes, Adjacent::Trap | Adjacent::Infinite) => Some(EndpointRole::Exit),
        (Approach::Yes, Adjacent::Leaving) => Some(EndpointRole::GlueToNeighbor),
        (Approach::No, Adjacent::Entering) => Some(EndpointRole::EntranceUnreachable),
        (Approach::No, _) => Some(EndpointRole::Natural),
    }
}

/// Full analysis of one endpoint; undetermined approachability is recorded,
/// not raised.
pub fn analyze_endpoint(spec: &DiffusionSpec, idx: usize, side: Side, policy: TailPolicy) -> EndpointAnalysis {
    let r = match &spec.pieces[idx] {
        Piece::RegularInterval(r) => r,
        other => panic!("analyze_endpoint on {}", other.kind_name()),
    };
    let adjacent = adjacent(spec, idx, side);
    let (scale_limit, note) = match scale_limit(r, side) {
        Ok(l) => (Some(l), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let approachable = approachable_audited(r, side, policy);
    EndpointAnalysis {
        piece: idx,
        side,
        endpoint: match side {
            Side::A => r.a,
            Side::B => r.b,
        },
        adjacent,
        scale_limit,
        approachable,
        role: role_for(approachable, adjacent),
        anchors: [default_anchor(r, side), audit_anchor(r, side)],
        rel_tol: policy.rel_tol,
        note,
    }
}

/// The role of an endpoint; undetermined approachability is an error.
pub fn endpoint_role(spec: &DiffusionSpec, idx: usize, side: Side) -> Result<EndpointAnalysis> {
    if spec.pieces.get(idx).and_then(Piece::as_regular).is_none() {
        return Err(Error::InvalidArgument(format!("piece {idx} is not a regular interval")));
    }
    let a = analyze_endpoint(spec, idx, side, TailPolicy::default());
    a.require_role()?;
    Ok(a)
}

/// Analyses of both endpoints of every regular piece, in piece order.
pub fn analyze_all(spec: &DiffusionSpec, policy: TailPolicy) -> Vec<EndpointAnalysis> {
    spec.regular_pieces()
        .flat_map(|(i, _)| [Side::A, Side::B].map(|s| analyze_endpoint(spec, i, s, policy)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::spec_model::MeasureSpec;

    fn piece(a: f64, b: f64, scale: &str, density: &str) -> RegularPiece {
        RegularPiece {
            a: ExtReal::new(a).unwrap(),
            b: ExtReal::new(b).unwrap(),
            scale: Expr::parse(scale).unwrap(),
            speed: MeasureSpec::with_density(Expr::parse(density).unwrap()),
        }
    }

    #[test]
    fn scale_limits() {
        let bm = piece(f64::NEG_INFINITY, f64::INFINITY, "x", "2");
        assert_eq!(scale_limit(&bm, Side::A).unwrap(), ExtReal::NEG_INFINITY);
        let bessel = piece(0.0, f64::INFINITY, "ln(x)", "2*x");
        assert_eq!(scale_limit(&bessel, Side::A).unwrap(), ExtReal::NEG_INFINITY);
        assert_eq!(scale_limit(&bessel, Side::B).unwrap(), ExtReal::INFINITY);
        let bounded = piece(f64::NEG_INFINITY, f64::INFINITY, "x/(1+|x|)", "1");
        let up = scale_limit(&bounded, Side::B).unwrap().value();
        assert!((up - 1.0).abs() < 1e-9, "{up}");
        let half = piece(0.0, 1.0, "x", "2");
        assert_eq!(scale_limit(&half, Side::A).unwrap().value(), 0.0);
        assert_eq!(scale_limit(&half, Side::B).unwrap().value(), 1.0);
        let root = piece(0.0, 1.0, "sqrt(x)", "1");
        assert!(scale_limit(&root, Side::A).unwrap().value().abs() < 1e-9);
        let wiggle = piece(0.0, 10.0, "sin(1/x)", "1");
        assert!(scale_limit(&wiggle, Side::A).is_err());
    }

    #[test]
    fn integral_test() {
        let bm = piece(0.0, f64::INFINITY, "x", "2");
        assert_eq!(approachable(&bm, Side::A, 1.0), Approach::Yes);
        assert_eq!(approachable(&bm, Side::B, 1.0), Approach::No);
        let bessel = piece(0.0, f64::INFINITY, "ln(x)", "2*x");
        assert_eq!(approachable(&bessel, Side::A, 1.0), Approach::No);
        // bounded scale but too much mass at infinity
        let bounded = piece(0.0, f64::INFINITY, "x/(1+x)", "2");
        assert_eq!(approachable(&bounded, Side::B, 1.0), Approach::No);
        // bounded scale, light tail: exit at infinity
        let light = piece(0.0, f64::INFINITY, "x/(1+x)", "exp(-x)");
        assert_eq!(approachable(&light, Side::B, 1.0), Approach::Yes);
        for tol in [1e-6, 1e-8] {
            let p = TailPolicy::with_rel_tol(tol);
            assert_eq!(approachable_audited(&bm, Side::A, p), Approach::Yes);
            assert_eq!(approachable_audited(&bessel, Side::A, p), Approach::No);
        }
    }

    #[test]
    fn hints_override() {
        let mut p = piece(0.0, 1.0, "x", "1/x^2");
        assert_eq!(approachable(&p, Side::A, 0.5), Approach::No);
        p.speed.hints.a = MassHint::Finite;
        assert_eq!(approachable(&p, Side::A, 0.5), Approach::Yes);
        p.speed.hints.a = MassHint::Infinite;
        assert_eq!(approachable(&p, Side::A, 0.5), Approach::No);
    }

    #[test]
    fn entrance() {
        let bessel = piece(0.0, f64::INFINITY, "ln(x)", "2*x");
        assert_eq!(entrance_finite(&bessel, Side::A, TailPolicy::default()), Approach::Yes);
        let natural = piece(0.0, f64::INFINITY, "ln(x)", "1/x");
        assert_eq!(entrance_finite(&natural, Side::A, TailPolicy::default()), Approach::No);
    }
}
