//! Structural and numerical audits of a parsed spec.

use serde::Serialize;

use super::{DiffusionSpec, Direction, Piece, RegularPiece, Side, SingularClass};
use crate::boundary::{self, Adjacent, Approach, EndpointRole};
use crate::extreal::ext_string;
use crate::quadrature::{integrate, TailPolicy, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ScaleNotFinite,
    ScaleNotMonotone,
    DensityNotFinite,
    DensityNegative,
    NotFullySupported,
    Closedness,
    InvalidReach,
    ExitNotTrap,
    ShuntCannotEnter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, location: String, message: String) {
        self.violations.push(Violation { kind, location, message });
    }
}

/// Interior sample points of `(a, b)`: a uniform grid of `n` points in a
/// compactifying coordinate plus geometric probes toward finite ends.
pub fn sample_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 60);
    for i in 1..=n {
        let t = i as f64 / (n + 1) as f64;
        let x = match (a.is_finite(), b.is_finite()) {
            (true, true) => a + (b - a) * t,
            (true, false) => a + t / (1.0 - t),
            (false, true) => b - (1.0 - t) / t,
            (false, false) => (std::f64::consts::PI * (t - 0.5)).tan(),
        };
        out.push(x);
    }
    let width = if a.is_finite() && b.is_finite() { b - a } else { 1.0 };
    for k in 1..=30 {
        let d = width * 0.5f64.powi(k) / (n + 1) as f64;
        if a.is_finite() {
            out.push(a + d);
        }
        if b.is_finite() {
            out.push(b - d);
        }
    }
    out.retain(|x| a < *x && *x < b);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

const GRID: usize = 1000;

fn audit_regular(report: &mut ValidationReport, idx: usize, r: &RegularPiece) {
    let loc = format!("piece {idx} ({}, {})", r.a, r.b);
    let xs = sample_points(r.a.value(), r.b.value(), GRID);
    let mut prev: Option<(f64, f64)> = None;
    let mut monotone_reported = false;
    for &x in &xs {
        let s = r.scale.eval(x);
        if !s.is_finite() {
            report.push(
                ViolationKind::ScaleNotFinite,
                loc.clone(),
                format!("scale `{}` evaluates to {s} at x = {x}", r.scale),
            );
            return;
        }
        if let Some((px, ps)) = prev {
            if s <= ps && !monotone_reported {
                report.push(
                    ViolationKind::ScaleNotMonotone,
                    loc.clone(),
                    format!(
                        "scale `{}` is not strictly increasing: s({px}) = {ps} >= s({x}) = {s}",
                        r.scale
                    ),
                );
                monotone_reported = true;
            }
        }
        prev = Some((x, s));
    }
    let mut density_ok = true;
    for &x in &xs {
        let d = r.speed.density.eval(x);
        if !d.is_finite() {
            report.push(
                ViolationKind::DensityNotFinite,
                loc.clone(),
                format!("speed density `{}` evaluates to {d} at x = {x}", r.speed.density),
            );
            density_ok = false;
            break;
        }
        if d < 0.0 {
            report.push(
                ViolationKind::DensityNegative,
                loc.clone(),
                format!("speed density `{}` is {d} < 0 at x = {x}", r.speed.density),
            );
            density_ok = false;
            break;
        }
    }
    if !density_ok {
        return;
    }
    // every grid cell must carry mass
    let mut cells = Vec::with_capacity(xs.len() + 1);
    cells.push((r.a.value(), xs[0]));
    cells.extend(xs.windows(2).map(|w| (w[0], w[1])));
    cells.push((xs[xs.len() - 1], r.b.value()));
    for (lo, hi) in cells {
        if !(lo.is_finite() && hi.is_finite()) || hi - lo <= 0.0 {
            continue;
        }
        let q = integrate(|x| r.speed.density.eval(x).max(0.0), lo, hi, Tolerance::relative(1e-6));
        if q.value <= 0.0 && r.atom_mass(lo, hi) <= 0.0 {
            report.push(
                ViolationKind::NotFullySupported,
                loc.clone(),
                format!("speed measure has no mass on ({lo}, {hi})"),
            );
            break;
        }
    }
}

fn point_class(spec: &DiffusionSpec, x: f64) -> Option<SingularClass> {
    if !x.is_finite() {
        return None;
    }
    spec.singular_point_at(x).map(|p| p.class)
}

fn audit_closedness(report: &mut ValidationReport, spec: &DiffusionSpec) {
    let left_ok = |c: SingularClass| matches!(c, SingularClass::LeftShunt | SingularClass::Trap);
    let right_ok = |c: SingularClass| matches!(c, SingularClass::RightShunt | SingularClass::Trap);
    for (idx, piece) in spec.pieces.iter().enumerate() {
        let (a, b) = (piece.lo(), piece.hi());
        // (point to check, predicate, requirement text)
        let mut checks: Vec<(f64, bool, &str)> = Vec::new();
        match piece {
            Piece::ShuntSegment(seg) => {
                match seg.direction {
                    Direction::Right => {
                        if let Some(c) = point_class(spec, b) {
                            checks.push((b, right_ok(c), "the upper end of right-shunt material must be right_shunt or trap"));
                        }
                    }
                    Direction::Left => {
                        if let Some(c) = point_class(spec, a) {
                            checks.push((a, left_ok(c), "the lower end of left-shunt material must be left_shunt or trap"));
                        }
                    }
                }
                if let Some(x) = seg.stall_point() {
                    let ok = match seg.direction {
                        Direction::Right => a < x && x <= b,
                        Direction::Left => a <= x && x < b,
                    };
                    if !ok {
                        report.push(
                            ViolationKind::InvalidReach,
                            format!("piece {idx} {}", piece.describe()),
                            format!("partial reach point {x} must lie in the segment, on its downstream side"),
                        );
                    }
                }
            }
            Piece::TrapSegment(_) => {
                if let Some(c) = point_class(spec, a) {
                    checks.push((a, left_ok(c), "the lower end of a trap segment must be left_shunt or trap"));
                }
                if let Some(c) = point_class(spec, b) {
                    checks.push((b, right_ok(c), "the upper end of a trap segment must be right_shunt or trap"));
                }
            }
            _ => {}
        }
        for (x, ok, why) in checks {
            if !ok {
                report.push(
                    ViolationKind::Closedness,
                    format!("{{{}}} bounding piece {idx} {}", ext_string(x), piece.describe()),
                    why.to_string(),
                );
            }
        }
    }
}

fn audit_boundaries(report: &mut ValidationReport, spec: &DiffusionSpec) {
    let policy = TailPolicy::default();
    for (idx, r) in spec.regular_pieces() {
        for side in [Side::A, Side::B] {
            let analysis = boundary::analyze_endpoint(spec, idx, side, policy);
            let e = r.endpoint(side);
            match analysis.role {
                None => report.warnings.push(format!(
                    "approachability of {} is undetermined",
                    analysis.label()
                )),
                Some(EndpointRole::Exit) if e.is_finite() && analysis.adjacent != Adjacent::Trap => {
                    report.push(
                        ViolationKind::ExitNotTrap,
                        analysis.label(),
                        "a finite exit endpoint must be a trap".into(),
                    );
                }
                _ => {}
            }
            if analysis.adjacent == Adjacent::Entering {
                match boundary::entrance_finite(r, side, policy) {
                    Approach::No => report.push(
                        ViolationKind::ShuntCannotEnter,
                        analysis.label(),
                        "the shunt point moves into the interval but the interval cannot be \
                         entered from it (infinite speed mass near the endpoint)"
                            .into(),
                    ),
                    Approach::Undetermined => report.warnings.push(format!(
                        "entrance from {} is undetermined",
                        analysis.label()
                    )),
                    Approach::Yes => {}
                }
            }
        }
    }
}

/// Lists every violated invariant of `spec`; empty iff `spec` is valid.
pub fn validate(spec: &DiffusionSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (idx, r) in spec.regular_pieces() {
        audit_regular(&mut report, idx, r);
    }
    audit_closedness(&mut report, spec);
    let numerics_ok = !report.violations.iter().any(|v| {
        matches!(
            v.kind,
            ViolationKind::ScaleNotFinite
                | ViolationKind::ScaleNotMonotone
                | ViolationKind::DensityNotFinite
                | ViolationKind::DensityNegative
        )
    });
    if numerics_ok {
        audit_boundaries(&mut report, spec);
    }
    report
}
