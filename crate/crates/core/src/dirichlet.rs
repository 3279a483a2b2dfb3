//! Dirichlet forms of the symmetrized process, evaluated in scale
//! coordinates.
//!
//! On a component `I_n` with scale `s_n`, a test function is given as a
//! profile `F` with `f = F ∘ s_n`, so the energy `½∫ (df/ds)(dg/ds) ds`
//! becomes the plain integral `½∫ F′(u) G′(u) du` over the scale image.

use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::boundary::EndpointRole;
use crate::error::{Error, Result};
use crate::extreal::{ext_string, ExtReal};
use crate::measure::Measure;
use crate::quadrature::{gk15, integrate, integrate_toward, TailOutcome, Tolerance};
use crate::sets::Span;
use crate::spec_model::{DiffusionSpec, Side};
use crate::symmetry::{check_symmetrizable_in, ComponentInterval};

/// Tolerance for boundary values and continuity of profiles.
pub const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitCondition {
    pub side: Side,
    pub endpoint: f64,
    /// The scale-image end where the profile must vanish.
    pub scale_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentForm {
    pub piece: usize,
    pub interval: Span,
    pub scale: String,
    pub speed_density: String,
    pub scale_image: [ExtReal; 2],
    pub exit_conditions: Vec<ExitCondition>,
    pub membership: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormDescriptor {
    pub spec_name: String,
    pub components: Vec<ComponentForm>,
}

pub fn form_descriptor(spec: &DiffusionSpec) -> Result<FormDescriptor> {
    form_descriptor_in(&Analysis::new(spec))
}

pub fn form_descriptor_in(an: &Analysis) -> Result<FormDescriptor> {
    let report = check_symmetrizable_in(an)?;
    if !report.symmetrizable_killed {
        return Err(Error::NotSymmetrizable(format!(
            "`{}`: the killed process is not symmetrizable (hunt holds: {}, Λ_ap = {}); no Dirichlet form",
            an.spec.name, report.hunt_holds, report.lambda_ap
        )));
    }
    let components = report
        .components
        .iter()
        .map(|c| component_form(an, c))
        .collect::<Result<_>>()?;
    Ok(FormDescriptor {
        spec_name: an.spec.name.clone(),
        components,
    })
}

fn component_form(an: &Analysis, c: &ComponentInterval) -> Result<ComponentForm> {
    let r = an.spec.pieces[c.piece].as_regular().expect("regular piece");
    let mut image = [ExtReal::NEG_INFINITY; 2];
    let mut exits = Vec::new();
    for (i, side) in [Side::A, Side::B].into_iter().enumerate() {
        let ea = an.endpoint(c.piece, side);
        let limit = ea.scale_limit.ok_or_else(|| {
            Error::NotMonotone(ea.note.clone().unwrap_or_else(|| format!("no scale limit at {}", ea.label())))
        })?;
        image[i] = limit;
        if c.roles[i] == EndpointRole::Exit {
            exits.push(ExitCondition {
                side,
                endpoint: r.endpoint(side),
                scale_value: limit.value(),
            });
        }
    }
    let conds: Vec<String> = exits
        .iter()
        .map(|e| format!("f({}) = 0", ext_string(e.endpoint)))
        .collect();
    let mut membership = format!(
        "f ∈ L²({}, m), f = F∘s with F absolutely continuous and F′ ∈ L²(du) on ({}, {})",
        c.i_n, image[0], image[1]
    );
    if !conds.is_empty() {
        membership.push_str("; ");
        membership.push_str(&conds.join(", "));
    }
    Ok(ComponentForm {
        piece: c.piece,
        interval: c.i_n,
        scale: r.scale.source().to_string(),
        speed_density: r.speed.density.source().to_string(),
        scale_image: image,
        exit_conditions: exits,
        membership,
    })
}

/// One polynomial piece of a profile, valid from `from` (a scale value) up
/// to the next piece; coefficients in increasing degree, at most cubic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePiece {
    pub from: ExtReal,
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredLimits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

/// A piecewise-cubic function of the scale coordinate. The first piece
/// also covers everything below its own breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub pieces: Vec<ProfilePiece>,
    #[serde(default, skip_serializing_if = "is_default_limits")]
    pub limits: DeclaredLimits,
    /// Compose with the unit contraction `t ↦ min(max(t, 0), 1)`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unit_contraction: bool,
}

fn is_default_limits(l: &DeclaredLimits) -> bool {
    *l == DeclaredLimits::default()
}

fn poly(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * u + k)
}

fn dpoly(c: &[f64], u: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, k)| acc * u + i as f64 * k)
}

impl Profile {
    pub fn polynomial(coeffs: Vec<f64>) -> Profile {
        Profile {
            pieces: vec![ProfilePiece {
                from: ExtReal::NEG_INFINITY,
                coeffs,
            }],
            limits: DeclaredLimits::default(),
            unit_contraction: false,
        }
    }

    pub fn constant(c: f64) -> Profile {
        Profile::polynomial(vec![c])
    }

    /// `F(u) = min(max(u, lo), hi)`.
    pub fn clamped_identity(lo: f64, hi: f64) -> Profile {
        let at = |x: f64| ExtReal::new(x).expect("finite breakpoint");
        Profile {
            pieces: vec![
                ProfilePiece {
                    from: ExtReal::NEG_INFINITY,
                    coeffs: vec![lo],
                },
                ProfilePiece {
                    from: at(lo),
                    coeffs: vec![0.0, 1.0],
                },
                ProfilePiece {
                    from: at(hi),
                    coeffs: vec![hi],
                },
            ],
            limits: DeclaredLimits::default(),
            unit_contraction: false,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Profile {
        assert!(!self.unit_contraction, "scaling a contracted profile is not polynomial");
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.coeffs.iter_mut().for_each(|c| *c *= alpha);
        }
        out.limits.a = out.limits.a.map(|v| v * alpha);
        out.limits.b = out.limits.b.map(|v| v * alpha);
        out
    }

    /// The unit contraction of this profile.
    pub fn contracted(&self) -> Profile {
        let mut out = self.clone();
        out.unit_contraction = true;
        out.limits.a = out.limits.a.map(|v| v.clamp(0.0, 1.0));
        out.limits.b = out.limits.b.map(|v| v.clamp(0.0, 1.0));
        out
    }

    fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(Error::InvalidArgument("a profile needs at least one piece".into()));
        }
        for w in self.pieces.windows(2) {
            if w[1].from <= w[0].from {
                return Err(Error::InvalidArgument("profile breakpoints must increase".into()));
            }
        }
        for p in &self.pieces {
            if p.coeffs.len() > 4 {
                return Err(Error::InvalidArgument("profile pieces are at most cubic".into()));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument("profile coefficients must be finite".into()));
            }
        }
        Ok(())
    }

    fn piece_index(&self, u: f64) -> usize {
        self.pieces.partition_point(|p| p.from.value() <= u).saturating_sub(1)
    }

    fn raw(&self, u: f64) -> f64 {
        poly(&self.pieces[self.piece_index(u)].coeffs, u)
    }

    pub fn value(&self, u: f64) -> f64 {
        let v = self.raw(u);
        if self.unit_contraction {
            v.clamp(0.0, 1.0)
        } else {
            v
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let c = &self.pieces[self.piece_index(u)].coeffs;
        if self.unit_contraction {
            let v = poly(c, u);
            if !(0.0 < v && v < 1.0) {
                return 0.0;
            }
        }
        dpoly(c, u)
    }

    /// Finite breakpoints strictly inside `(lo, hi)`, including the points
    /// where a contracted profile crosses 0 or 1.
    fn cuts(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut cuts: Vec<f64> = self
            .pieces
            .iter()
            .map(|p| p.from.value())
            .filter(|&u| lo < u && u < hi)
            .collect();
        if self.unit_contraction {
            let mut edges = vec![lo];
            edges.extend(cuts.iter().copied());
            edges.push(hi);
            for w in edges.windows(2) {
                let (a, b) = (w[0], w[1]);
                if !(a.is_finite() && b.is_finite()) {
                    continue;
                }
                let c = self.pieces[self.piece_index(0.5 * (a + b))].coeffs.clone();
                for level in [0.0, 1.0] {
                    cuts.extend(crossings(|u| poly(&c, u) - level, a, b));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }
}

/// Sign changes of `f` on `(a, b)`, located by bisection on a fine grid.
fn crossings(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    const GRID: usize = 256;
    let mut out = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=GRID {
        let x1 = a + (b - a) * i as f64 / GRID as f64;
        let f1 = f(x1);
        if f0 == 0.0 && i > 1 {
            out.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (x0, x1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == (f(lo) < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    /// One profile per component, in component order.
    pub components: Vec<Profile>,
}

impl TestFunction {
    pub fn uniform(profile: Profile, arity: usize) -> TestFunction {
        TestFunction {
            components: vec![profile; arity],
        }
    }
}

fn membership_error(spec: &str, comp: &ComponentForm, what: String) -> Error {
    Error::Membership(format!("`{spec}`, component {}: {what}", comp.interval))
}

/// Checks that `f = F∘s` belongs to the domain of the form on `comp`.
pub fn check_membership(an: &Analysis, comp: &ComponentForm, f: &Profile) -> Result<()> {
    f.validate()?;
    let name = &an.spec.name;
    let (ua, ub) = (comp.scale_image[0].value(), comp.scale_image[1].value());
    // F′ ∈ L²(du): polynomial pieces reaching an infinite end must be flat
    let first = f.piece_index(ua.max(-f64::MAX));
    let last = f.piece_index(ub.min(f64::MAX));
    for (end, idx) in [(ua, first), (ub, last)] {
        if !end.is_finite() && f.pieces[idx].coeffs.iter().skip(1).any(|c| *c != 0.0) {
            return Err(membership_error(
                name,
                comp,
                format!("F′ is not square integrable: the profile is not constant toward scale {}", ext_string(end)),
            ));
        }
    }
    // continuity across breakpoints inside the image
    for (i, p) in f.pieces.iter().enumerate().skip(1) {
        let u = p.from.value();
        if !(ua < u && u < ub) {
            continue;
        }
        let left = poly(&f.pieces[i - 1].coeffs, u);
        let right = poly(&p.coeffs, u);
        if (left - right).abs() > BOUNDARY_TOL * left.abs().max(right.abs()).max(1.0) {
            return Err(membership_error(
                name,
                comp,
                format!("profile jumps from {left} to {right} at scale value {u}"),
            ));
        }
    }
    let boundary_value = |u: f64, idx: usize| {
        if u.is_finite() {
            f.value(u)
        } else {
            let v = f.pieces[idx].coeffs.first().copied().unwrap_or(0.0);
            if f.unit_contraction {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        }
    };
    let fa = boundary_value(ua, first);
    let fb = boundary_value(ub, last);
    for (declared, actual, side) in [(f.limits.a, fa, "a"), (f.limits.b, fb, "b")] {
        if let Some(d) = declared {
            if (d - actual).abs() > BOUNDARY_TOL * d.abs().max(1.0) {
                return Err(membership_error(
                    name,
                    comp,
                    format!("declared limit {d} at endpoint {side} but the profile tends to {actual}"),
                ));
            }
        }
    }
    for exit in &comp.exit_conditions {
        let v = f.value(exit.scale_value);
        if v.abs() > BOUNDARY_TOL {
            return Err(membership_error(
                name,
                comp,
                format!(
                    "f({}) = {v} but {} is an exit endpoint, where f must vanish",
                    ext_string(exit.endpoint),
                    ext_string(exit.endpoint)
                ),
            ));
        }
    }
    check_l2(an, comp, f)
}

/// `∫ F(s(x))² m(dx) < ∞` over the component.
fn check_l2(an: &Analysis, comp: &ComponentForm, f: &Profile) -> Result<()> {
    let r = an.spec.pieces[comp.piece].as_regular().expect("regular piece");
    let name = &an.spec.name;
    let integrand = |x: f64| {
        let s = r.scale.eval(x);
        let d = r.speed.density.eval(x).max(0.0);
        if d == 0.0 {
            return 0.0;
        }
        let v = f.value(s);
        v * v * d
    };
    let anchor = crate::boundary::default_anchor(r, Side::A);
    let policy = an.options.policy;
    for side in [Side::A, Side::B] {
        let e = r.endpoint(side);
        match integrate_toward(integrand, anchor, e, policy) {
            TailOutcome::Converged { .. } => {}
            TailOutcome::Diverged { .. } => {
                return Err(membership_error(
                    name,
                    comp,
                    format!("f is not square integrable with respect to m near {}", ext_string(e)),
                ))
            }
            TailOutcome::Undetermined { .. } => {
                return Err(Error::Undetermined {
                    endpoint: ext_string(e),
                    hint: format!("could not decide whether f is in L²(m) on `{name}`"),
                })
            }
        }
    }
    Ok(())
}

/// `½∫ F′ G′ du` over `(lo, hi)`, exact for polynomial pieces.
fn component_energy(f: &Profile, g: &Profile, lo: f64, hi: f64) -> Result<f64> {
    let mut cuts = vec![lo];
    cuts.extend(f.cuts(lo, hi));
    cuts.extend(g.cuts(lo, hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.is_finite() && b.is_finite() {
            let mut h = |u: f64| f.derivative(u) * g.derivative(u);
            total += gk15(&mut h, a, b).0;
        } else {
            let probe = if a.is_finite() { a + 1.0 } else if b.is_finite() { b - 1.0 } else { 0.0 };
            let p = f.derivative(probe) * g.derivative(probe);
            if p != 0.0 {
                return Err(Error::Divergent(format!(
                    "F′G′ does not vanish on the unbounded scale range ({}, {})",
                    ext_string(a),
                    ext_string(b)
                )));
            }
        }
    }
    Ok(0.5 * total)
}

/// `ℰ(f, g)`, summed over components after checking membership of both.
pub fn energy(an: &Analysis, desc: &FormDescriptor, f: &TestFunction, g: &TestFunction) -> Result<f64> {
    for t in [f, g] {
        if t.components.len() != desc.components.len() {
            return Err(Error::InvalidArgument(format!(
                "test function has {} profile(s), the form has {} component(s)",
                t.components.len(),
                desc.components.len()
            )));
        }
    }
    let mut total = 0.0;
    for (i, comp) in desc.components.iter().enumerate() {
        let (pf, pg) = (&f.components[i], &g.components[i]);
        check_membership(an, comp, pf)?;
        check_membership(an, comp, pg)?;
        total += component_energy(pf, pg, comp.scale_image[0].value(), comp.scale_image[1].value())?;
    }
    Ok(total)
}

/// Whether the form built on `m` is regular, i.e. `m` is Radon.
pub fn check_regular_form(spec: &DiffusionSpec, m: &Measure) -> Result<bool> {
    check_regular_form_in(&Analysis::new(spec), m)
}

pub fn check_regular_form_in(an: &Analysis, m: &Measure) -> Result<bool> {
    let report = check_symmetrizable_in(an)?;
    if !report.symmetrizable_full {
        return Err(Error::NotSymmetrizable(format!(
            "`{}` is not symmetrizable on the whole line",
            an.spec.name
        )));
    }
    m.is_radon(an.options.policy).map_err(|e| match e {
        Error::Undetermined { endpoint, .. } => Error::Undetermined {
            endpoint,
            hint: "local finiteness of m could not be decided; declare a `finite` or `infinite` mass \
                   hint for this endpoint"
                .into(),
        },
        other => other,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptedEntry {
    pub piece: usize,
    pub side: Side,
    pub endpoint: f64,
    pub included: bool,
    pub scale_limit_finite: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptedReport {
    pub entries: Vec<AdaptedEntry>,
    pub violations: usize,
}

/// For every finite component endpoint: included in `I_n` iff the scale has
/// a finite limit there. A mismatch points at a numerical failure.
pub fn check_adapted(spec: &DiffusionSpec) -> Result<AdaptedReport> {
    check_adapted_in(&Analysis::new(spec))
}

pub fn check_adapted_in(an: &Analysis) -> Result<AdaptedReport> {
    let report = check_symmetrizable_in(an)?;
    if !report.symmetrizable_full {
        return Err(Error::NotSymmetrizable(format!(
            "`{}` is not symmetrizable on the whole line",
            an.spec.name
        )));
    }
    let mut entries = Vec::new();
    for c in &report.components {
        for side in [Side::A, Side::B] {
            let ea = an.endpoint(c.piece, side);
            let e = ea.endpoint.value();
            if !e.is_finite() {
                continue;
            }
            let included = match side {
                Side::A => c.i_n.lo_closed,
                Side::B => c.i_n.hi_closed,
            };
            let finite = ea.scale_limit.is_some_and(|l| l.is_finite());
            entries.push(AdaptedEntry {
                piece: c.piece,
                side,
                endpoint: e,
                included,
                scale_limit_finite: finite,
                consistent: included == finite,
            });
        }
    }
    let violations = entries.iter().filter(|e| !e.consistent).count();
    Ok(AdaptedReport { entries, violations })
}

/// `∫ f² dm` over the component.
pub fn l2_norm_squared(an: &Analysis, comp: &ComponentForm, f: &Profile) -> Result<f64> {
    check_l2(an, comp, f)?;
    let r = an.spec.pieces[comp.piece].as_regular().expect("regular piece");
    let integrand = |x: f64| {
        let v = f.value(r.scale.eval(x));
        v * v * r.speed.density.eval(x).max(0.0)
    };
    let q = integrate(integrand, r.a.value(), r.b.value(), Tolerance::relative(1e-8));
    let atoms: f64 = r
        .speed
        .atoms
        .iter()
        .filter(|a| comp.interval.contains(a.at))
        .map(|a| {
            let v = f.value(r.scale.eval(a.at));
            v * v * a.weight
        })
        .sum();
    Ok(q.value + atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin_example;

    #[test]
    fn descriptors() {
        let bm = form_descriptor(&builtin_example("bm").unwrap()).unwrap();
        assert_eq!(bm.components.len(), 1);
        assert!(bm.components[0].exit_conditions.is_empty());
        let exa2 = form_descriptor(&builtin_example("exa2").unwrap()).unwrap();
        assert_eq!(exa2.components[0].exit_conditions.len(), 1);
        assert_eq!(exa2.components[0].exit_conditions[0].endpoint, 0.0);
        assert!(matches!(
            form_descriptor(&builtin_example("exa1").unwrap()),
            Err(Error::NotSymmetrizable(_))
        ));
    }

    #[test]
    fn exa2_energy_and_exit_condition() {
        let spec = builtin_example("exa2").unwrap();
        let an = Analysis::new(&spec);
        let desc = form_descriptor_in(&an).unwrap();
        let ok = TestFunction::uniform(Profile::clamped_identity(0.0, 1.0), 1);
        let e = energy(&an, &desc, &ok, &ok);
        // F = clamp(u, 0, 1) on (0, ∞): F(0) = 0 but F ≡ 1 is not in L²(2dx)
        assert!(matches!(e, Err(Error::Membership(_))), "{e:?}");
        let bump = Profile {
            pieces: vec![
                ProfilePiece { from: ExtReal::NEG_INFINITY, coeffs: vec![0.0] },
                ProfilePiece { from: ExtReal::new(0.0).unwrap(), coeffs: vec![0.0, 1.0] },
                ProfilePiece { from: ExtReal::new(1.0).unwrap(), coeffs: vec![2.0, -1.0] },
                ProfilePiece { from: ExtReal::new(2.0).unwrap(), coeffs: vec![0.0] },
            ],
            limits: DeclaredLimits::default(),
            unit_contraction: false,
        };
        let f = TestFunction::uniform(bump.clone(), 1);
        assert!((energy(&an, &desc, &f, &f).unwrap() - 1.0).abs() < 1e-12);
        let ramp = Profile {
            pieces: vec![
                ProfilePiece { from: ExtReal::NEG_INFINITY, coeffs: vec![1.0, -1.0] },
                ProfilePiece { from: ExtReal::new(1.0).unwrap(), coeffs: vec![0.0] },
            ],
            limits: DeclaredLimits::default(),
            unit_contraction: false,
        };
        let bad = TestFunction::uniform(ramp, 1);
        let err = energy(&an, &desc, &bad, &f).unwrap_err();
        assert!(err.to_string().contains("exit endpoint"), "{err}");
    }

    #[test]
    fn contraction_cuts() {
        let p = Profile::polynomial(vec![-0.5, 2.0]).contracted();
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(1.0), 1.0);
        let e = component_energy(&p, &p, -3.0, 3.0).unwrap();
        // F′ = 2 on (0.25, 0.75)
        assert!((e - 0.5 * 4.0 * 0.5).abs() < 1e-12, "{e}");
    }

    #[test]
    fn regularity_and_adaptedness() {
        let spec = builtin_example("bm").unwrap();
        let m = crate::symmetry::check_symmetrizable(&spec).unwrap().canonical_measure.unwrap();
        assert!(check_regular_form(&spec, &m).unwrap());
        assert!(check_regular_form(&spec, &m.with_atom(0.5, 5.0).unwrap()).unwrap());
        let adapted = check_adapted(&spec).unwrap();
        assert!(adapted.entries.is_empty());
        assert_eq!(adapted.violations, 0);
    }
}
