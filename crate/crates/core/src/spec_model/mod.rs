//! The symbolic description of a generalized one-dimensional diffusion.
//!
//! A [`DiffusionSpec`] partitions the real line into regular intervals
//! (carrying a scale function and a speed measure), shunt segments, trap
//! segments and isolated singular points. Every finite boundary between two
//! interval pieces is an explicit singular point.

mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::extreal::{ext_string, ExtReal};
use crate::quadrature::{integrate, integrate_toward, TailOutcome, TailPolicy, Tolerance};

pub use validate::{validate, ValidationReport, Violation, ViolationKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularClass {
    Trap,
    LeftShunt,
    RightShunt,
}

impl SingularClass {
    pub fn shunt(direction: Direction) -> SingularClass {
        match direction {
            Direction::Left => SingularClass::LeftShunt,
            Direction::Right => SingularClass::RightShunt,
        }
    }

    /// Direction of motion for shunt points.
    pub fn direction(self) -> Option<Direction> {
        match self {
            SingularClass::Trap => None,
            SingularClass::LeftShunt => Some(Direction::Left),
            SingularClass::RightShunt => Some(Direction::Right),
        }
    }

    fn mirrored(self) -> SingularClass {
        match self {
            SingularClass::Trap => SingularClass::Trap,
            SingularClass::LeftShunt => SingularClass::RightShunt,
            SingularClass::RightShunt => SingularClass::LeftShunt,
        }
    }
}

/// Author-declared behaviour of the speed mass near an endpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassHint {
    Finite,
    Infinite,
    #[default]
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointHints {
    #[serde(default, skip_serializing_if = "is_unknown")]
    pub a: MassHint,
    #[serde(default, skip_serializing_if = "is_unknown")]
    pub b: MassHint,
}

fn is_unknown(h: &MassHint) -> bool {
    *h == MassHint::Unknown
}

impl EndpointHints {
    pub fn is_default(&self) -> bool {
        *self == EndpointHints::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub at: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub density: Expr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "EndpointHints::is_default")]
    pub hints: EndpointHints,
}

impl MeasureSpec {
    pub fn with_density(density: Expr) -> MeasureSpec {
        MeasureSpec {
            density,
            atoms: Vec::new(),
            hints: EndpointHints::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularPiece {
    pub a: ExtReal,
    pub b: ExtReal,
    pub scale: Expr,
    pub speed: MeasureSpec,
}

/// How far a shunt segment carries its points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentReach {
    /// The downstream boundary is reached in finite time.
    Full,
    /// Points upstream of `x*` only approach it asymptotically; points past
    /// `x*` drift to the downstream boundary.
    Partial(f64),
}

impl fmt::Display for SegmentReach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentReach::Full => write!(f, "full"),
            SegmentReach::Partial(x) => write!(f, "partial:{x}"),
        }
    }
}

impl FromStr for SegmentReach {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "full" {
            return Ok(SegmentReach::Full);
        }
        let x = s
            .strip_prefix("partial:")
            .ok_or_else(|| format!("reach must be `full` or `partial:<x>`, got `{s}`"))?;
        match x.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(SegmentReach::Partial(v)),
            _ => Err(format!("invalid partial reach point `{x}`")),
        }
    }
}

impl Serialize for SegmentReach {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SegmentReach {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuntSegment {
    pub a: ExtReal,
    pub b: ExtReal,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach: Option<SegmentReach>,
}

impl ShuntSegment {
    /// The partial-reach point, if any.
    pub fn stall_point(&self) -> Option<f64> {
        match self.reach {
            Some(SegmentReach::Partial(x)) => Some(x),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapSegment {
    pub a: ExtReal,
    pub b: ExtReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub x: f64,
    pub class: SingularClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    #[serde(alias = "regular")]
    RegularInterval(RegularPiece),
    ShuntSegment(ShuntSegment),
    TrapSegment(TrapSegment),
    SingularPoint(SingularPoint),
}

impl Piece {
    pub fn lo(&self) -> f64 {
        match self {
            Piece::RegularInterval(p) => p.a.value(),
            Piece::ShuntSegment(p) => p.a.value(),
            Piece::TrapSegment(p) => p.a.value(),
            Piece::SingularPoint(p) => p.x,
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Piece::RegularInterval(p) => p.b.value(),
            Piece::ShuntSegment(p) => p.b.value(),
            Piece::TrapSegment(p) => p.b.value(),
            Piece::SingularPoint(p) => p.x,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Piece::SingularPoint(_))
    }

    pub fn as_regular(&self) -> Option<&RegularPiece> {
        match self {
            Piece::RegularInterval(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_point(&self) -> Option<&SingularPoint> {
        match self {
            Piece::SingularPoint(p) => Some(p),
            _ => None,
        }
    }

    /// True when `x` lies in the piece (the open interval, or the point).
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Piece::SingularPoint(p) => p.x == x,
            _ => self.lo() < x && x < self.hi(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Piece::RegularInterval(_) => "regular_interval",
            Piece::ShuntSegment(_) => "shunt_segment",
            Piece::TrapSegment(_) => "trap_segment",
            Piece::SingularPoint(_) => "singular_point",
        }
    }

    /// Short human-readable location, e.g. `(0, +inf)` or `{0}`.
    pub fn describe(&self) -> String {
        match self {
            Piece::SingularPoint(p) => format!("{{{}}}", ext_string(p.x)),
            _ => format!("({}, {})", ext_string(self.lo()), ext_string(self.hi())),
        }
    }

    fn sort_key(&self) -> (f64, u8) {
        (self.lo(), if self.is_point() { 0 } else { 1 })
    }

    fn mirrored(&self) -> Piece {
        let neg = |v: ExtReal| ExtReal::new(-v.value()).expect("not NaN");
        match self {
            Piece::RegularInterval(p) => Piece::RegularInterval(RegularPiece {
                a: neg(p.b),
                b: neg(p.a),
                scale: p.scale.reflected(true).expect("mirror of piecewise scale"),
                speed: MeasureSpec {
                    density: p.speed.density.reflected(false).expect("mirror of piecewise density"),
                    atoms: p
                        .speed
                        .atoms
                        .iter()
                        .rev()
                        .map(|a| AtomSpec { at: -a.at, weight: a.weight })
                        .collect(),
                    hints: EndpointHints {
                        a: p.speed.hints.b,
                        b: p.speed.hints.a,
                    },
                },
            }),
            Piece::ShuntSegment(p) => Piece::ShuntSegment(ShuntSegment {
                a: neg(p.b),
                b: neg(p.a),
                direction: p.direction.flip(),
                reach: p.reach.map(|r| match r {
                    SegmentReach::Full => SegmentReach::Full,
                    SegmentReach::Partial(x) => SegmentReach::Partial(-x),
                }),
            }),
            Piece::TrapSegment(p) => Piece::TrapSegment(TrapSegment {
                a: neg(p.b),
                b: neg(p.a),
            }),
            Piece::SingularPoint(p) => Piece::SingularPoint(SingularPoint {
                x: -p.x,
                class: p.class.mirrored(),
            }),
        }
    }
}

/// Which end of an interval piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl RegularPiece {
    pub fn endpoint(&self, side: Side) -> f64 {
        match side {
            Side::A => self.a.value(),
            Side::B => self.b.value(),
        }
    }

    pub fn hint(&self, side: Side) -> MassHint {
        match side {
            Side::A => self.speed.hints.a,
            Side::B => self.speed.hints.b,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a.value() < x && x < self.b.value()
    }

    fn interval_text(&self) -> String {
        format!("({}, {})", self.a, self.b)
    }

    /// `s(x)` at an interior point.
    pub fn eval_scale(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "x = {x} is outside the open interval {}",
                self.interval_text()
            )));
        }
        self.scale.eval_finite(x)
    }

    /// Speed density at an interior point, negative or non-finite values
    /// reported as errors.
    pub fn eval_density(&self, x: f64) -> Result<f64> {
        let v = self.speed.density.eval_finite(x)?;
        if v < 0.0 {
            return Err(Error::Evaluation(format!(
                "speed density `{}` is negative at x = {x}",
                self.speed.density
            )));
        }
        Ok(v)
    }

    /// Total weight of atoms located in the open interval `(u, v)`.
    pub fn atom_mass(&self, u: f64, v: f64) -> f64 {
        self.speed
            .atoms
            .iter()
            .filter(|a| u < a.at && a.at < v)
            .map(|a| a.weight)
            .sum()
    }

    /// Weight of the atom at exactly `x` (zero when there is none).
    pub fn atom_weight_at(&self, x: f64) -> f64 {
        self.speed.atoms.iter().filter(|a| a.at == x).map(|a| a.weight).sum()
    }

    /// `m((u, v))` for `a <= u < v <= b`; `+inf` when the mass near an
    /// endpoint diverges.
    pub fn eval_speed_mass(&self, u: f64, v: f64) -> Result<ExtReal> {
        self.speed_mass_with(u, v, TailPolicy::default())
    }

    pub fn speed_mass_with(&self, u: f64, v: f64, policy: TailPolicy) -> Result<ExtReal> {
        let (a, b) = (self.a.value(), self.b.value());
        if !(a <= u && u < v && v <= b) {
            return Err(Error::Domain(format!(
                "({u}, {v}) is not a nonempty subinterval of {}",
                self.interval_text()
            )));
        }
        let lo_end = u == a;
        let hi_end = v == b;
        if (lo_end && self.speed.hints.a == MassHint::Infinite)
            || (hi_end && self.speed.hints.b == MassHint::Infinite)
        {
            return Ok(ExtReal::INFINITY);
        }
        let density = |x: f64| self.speed.density.eval(x).max(0.0);
        // interior anchor for improper pieces
        let mid = match (u.is_finite(), v.is_finite()) {
            (true, true) => 0.5 * (u + v),
            (true, false) => u + 1.0,
            (false, true) => v - 1.0,
            (false, false) => 0.0,
        };
        let mut total = 0.0;
        let compact = |lo: f64, hi: f64| -> Result<f64> {
            let q = integrate(density, lo, hi, Tolerance::relative(1e-10));
            if q.value.is_finite() {
                Ok(q.value)
            } else {
                Err(Error::Evaluation(format!(
                    "speed density `{}` is not integrable on ({lo}, {hi})",
                    self.speed.density
                )))
            }
        };
        let tail = |anchor: f64, end: f64, hint: MassHint| -> Result<Option<f64>> {
            match integrate_toward(density, anchor, end, policy) {
                TailOutcome::Converged { value, .. } => Ok(Some(value)),
                TailOutcome::Diverged { .. } => Ok(None),
                TailOutcome::Undetermined { .. } if hint == MassHint::Finite => Err(Error::Undetermined {
                    endpoint: ext_string(end),
                    hint: "speed mass declared finite but the tail integral did not settle".into(),
                }),
                TailOutcome::Undetermined { .. } => Err(Error::Undetermined {
                    endpoint: ext_string(end),
                    hint: "add an endpoint mass hint (`finite` or `infinite`)".into(),
                }),
            }
        };
        if lo_end {
            match tail(mid, u, self.speed.hints.a)? {
                Some(m) => total += m,
                None => return Ok(ExtReal::INFINITY),
            }
        } else {
            total += compact(u, mid)?;
        }
        if hi_end {
            match tail(mid, v, self.speed.hints.b)? {
                Some(m) => total += m,
                None => return Ok(ExtReal::INFINITY),
            }
        } else {
            total += compact(mid, v)?;
        }
        total += self.atom_mass(u, v);
        Ok(ExtReal::new(total).expect("finite sum"))
    }
}

/// A generalized diffusion on the real line, as an ordered list of pieces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffusionSpec {
    pub name: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub pieces: Vec<Piece>,
}

#[derive(Deserialize)]
struct RawSpec {
    name: String,
    #[serde(default)]
    description: String,
    pieces: Vec<Piece>,
}

#[derive(Clone, Copy)]
enum Cursor {
    Start,
    AfterInterval(f64),
    AfterPoint(f64),
}

impl DiffusionSpec {
    /// Sorts the pieces and checks that they tile the line.
    pub fn new(name: impl Into<String>, description: impl Into<String>, mut pieces: Vec<Piece>) -> Result<Self> {
        for p in &pieces {
            check_piece(p)?;
        }
        pieces.sort_by(|x, y| {
            let (kx, ky) = (x.sort_key(), y.sort_key());
            kx.0.total_cmp(&ky.0).then(kx.1.cmp(&ky.1))
        });
        check_tiling(&pieces)?;
        Ok(DiffusionSpec {
            name: name.into(),
            description: description.into(),
            pieces,
        })
    }

    /// Index of the piece containing `x` (finite or not).
    pub fn piece_index_at(&self, x: f64) -> Option<usize> {
        self.pieces.iter().position(|p| p.contains(x))
    }

    pub fn piece_at(&self, x: f64) -> Option<&Piece> {
        self.piece_index_at(x).map(|i| &self.pieces[i])
    }

    /// The singular point at exactly `x`, if any.
    pub fn singular_point_at(&self, x: f64) -> Option<&SingularPoint> {
        self.pieces
            .iter()
            .filter_map(Piece::as_point)
            .find(|p| p.x == x)
    }

    pub fn regular_pieces(&self) -> impl Iterator<Item = (usize, &RegularPiece)> {
        self.pieces
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_regular().map(|r| (i, r)))
    }

    /// Pretty JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs always serialize")
    }

    /// This diffusion reflected through `x ↦ −x`: positions negated, left and
    /// right shunts exchanged, scale `x ↦ −s(−x)`. Fails for specs whose
    /// expressions use `piecewise`.
    pub fn mirrored(&self) -> Result<DiffusionSpec> {
        let uses_piecewise = self.regular_pieces().any(|(_, r)| {
            r.scale.reflected(false).is_none() || r.speed.density.reflected(false).is_none()
        });
        if uses_piecewise {
            return Err(Error::InvalidArgument(
                "cannot mirror expressions that use piecewise".into(),
            ));
        }
        let pieces = self.pieces.iter().rev().map(Piece::mirrored).collect();
        DiffusionSpec::new(format!("{}-mirrored", self.name), self.description.clone(), pieces)
    }
}

impl<'de> Deserialize<'de> for DiffusionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(deserializer)?;
        DiffusionSpec::new(raw.name, raw.description, raw.pieces).map_err(serde::de::Error::custom)
    }
}

fn check_piece(p: &Piece) -> Result<()> {
    match p {
        Piece::SingularPoint(sp) => {
            if !sp.x.is_finite() {
                return Err(Error::InvalidPiece(format!(
                    "singular point must be a finite real, got {}",
                    ext_string(sp.x)
                )));
            }
        }
        _ => {
            let (a, b) = (p.lo(), p.hi());
            if !(a < b) || a == f64::INFINITY || b == f64::NEG_INFINITY {
                return Err(Error::InvalidPiece(format!(
                    "{} requires a < b, got ({}, {})",
                    p.kind_name(),
                    ext_string(a),
                    ext_string(b)
                )));
            }
        }
    }
    if let Piece::RegularInterval(r) = p {
        for atom in &r.speed.atoms {
            if !(atom.at.is_finite() && r.a.value() <= atom.at && atom.at <= r.b.value()) {
                return Err(Error::InvalidPiece(format!(
                    "atom at {} lies outside the closed interval [{}, {}]",
                    atom.at, r.a, r.b
                )));
            }
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(Error::InvalidPiece(format!(
                    "atom at {} has non-positive weight {}",
                    atom.at, atom.weight
                )));
            }
        }
    }
    Ok(())
}

fn check_tiling(pieces: &[Piece]) -> Result<()> {
    let mut cursor = Cursor::Start;
    for p in pieces {
        cursor = match (cursor, p) {
            (Cursor::Start, Piece::SingularPoint(sp)) => {
                return Err(Error::CoverageGap(format!(
                    "(-inf, {}) is not covered",
                    sp.x
                )))
            }
            (Cursor::Start, _) => {
                if p.lo() != f64::NEG_INFINITY {
                    return Err(Error::CoverageGap(format!(
                        "(-inf, {}] is not covered",
                        ext_string(p.lo())
                    )));
                }
                Cursor::AfterInterval(p.hi())
            }
            (Cursor::AfterInterval(pos), Piece::SingularPoint(sp)) => {
                if sp.x < pos {
                    return Err(Error::Overlap(format!(
                        "singular point {} lies inside an interval ending at {}",
                        sp.x,
                        ext_string(pos)
                    )));
                }
                if sp.x > pos {
                    return Err(Error::CoverageGap(format!(
                        "[{}, {}) is not covered",
                        ext_string(pos),
                        sp.x
                    )));
                }
                Cursor::AfterPoint(pos)
            }
            (Cursor::AfterPoint(pos), Piece::SingularPoint(sp)) => {
                if sp.x == pos {
                    return Err(Error::Overlap(format!("two singular points at {pos}")));
                }
                return Err(Error::CoverageGap(format!("({pos}, {}) is not covered", sp.x)));
            }
            (Cursor::AfterInterval(pos), _) => {
                let a = p.lo();
                if a < pos {
                    return Err(Error::Overlap(format!(
                        "{} overlaps an interval ending at {}",
                        p.describe(),
                        ext_string(pos)
                    )));
                }
                if a == pos {
                    return Err(Error::CoverageGap(format!(
                        "boundary {} between two intervals needs an explicit singular_point",
                        ext_string(pos)
                    )));
                }
                return Err(Error::CoverageGap(format!(
                    "[{}, {}] is not covered",
                    ext_string(pos),
                    ext_string(a)
                )));
            }
            (Cursor::AfterPoint(pos), _) => {
                let a = p.lo();
                if a < pos {
                    return Err(Error::Overlap(format!(
                        "{} overlaps the singular point {pos}",
                        p.describe()
                    )));
                }
                if a > pos {
                    return Err(Error::CoverageGap(format!(
                        "({pos}, {}] is not covered",
                        ext_string(a)
                    )));
                }
                Cursor::AfterInterval(p.hi())
            }
        };
    }
    match cursor {
        Cursor::AfterInterval(pos) if pos == f64::INFINITY => Ok(()),
        Cursor::Start => Err(Error::CoverageGap("the document has no pieces".into())),
        Cursor::AfterInterval(pos) | Cursor::AfterPoint(pos) => Err(Error::CoverageGap(format!(
            "({}, +inf) is not covered",
            ext_string(pos)
        ))),
    }
}

/// Parses a JSON spec document.
pub fn parse_spec(text: &str) -> Result<DiffusionSpec> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    DiffusionSpec::new(raw.name, raw.description, raw.pieces)
}

/// Serializes a spec as a pretty JSON document.
pub fn serialize_spec(spec: &DiffusionSpec) -> String {
    spec.to_json()
}

/// `s(x)` of a regular piece.
pub fn eval_scale(piece: &Piece, x: f64) -> Result<f64> {
    regular(piece)?.eval_scale(x)
}

/// `m((u, v))` of a regular piece.
pub fn eval_speed_mass(piece: &Piece, u: f64, v: f64) -> Result<ExtReal> {
    regular(piece)?.eval_speed_mass(u, v)
}

fn regular(piece: &Piece) -> Result<&RegularPiece> {
    piece.as_regular().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} {} is not a regular interval",
            piece.kind_name(),
            piece.describe()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BM: &str = r#"{"name":"bm","pieces":[{"kind":"regular_interval","a":"-inf","b":"+inf","scale":"x","speed":{"density":"2"}}]}"#;

    const EXA1: &str = r#"{
  "name": "exa1",
  "pieces": [
    {"kind": "regular_interval", "a": "-inf", "b": 0, "scale": "x", "speed": {"density": "2"}},
    {"kind": "singular_point", "x": 0, "class": "right_shunt"},
    {"kind": "regular_interval", "a": 0, "b": "+inf", "scale": "x", "speed": {"density": "2"}}
  ]
}"#;

    #[test]
    fn parses_single_piece() {
        let spec = parse_spec(BM).unwrap();
        assert_eq!(spec.name, "bm");
        assert_eq!(spec.pieces.len(), 1);
        assert_eq!(eval_scale(&spec.pieces[0], 0.3).unwrap(), 0.3);
        let m = eval_speed_mass(&spec.pieces[0], 0.0, 1.0).unwrap();
        assert!((m.value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn parses_three_pieces() {
        let spec = parse_spec(EXA1).unwrap();
        assert_eq!(spec.pieces.len(), 3);
        assert_eq!(spec.piece_index_at(0.0), Some(1));
        assert_eq!(spec.piece_index_at(-5.0), Some(0));
        assert_eq!(spec.piece_index_at(5.0), Some(2));
        assert_eq!(spec.piece_index_at(f64::INFINITY), None);
    }

    #[test]
    fn round_trip_is_stable() {
        let spec = parse_spec(EXA1).unwrap();
        let again = parse_spec(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.to_json(), again.to_json());
    }

    #[test]
    fn overlap_and_gaps() {
        let doc = r#"{"name":"o","pieces":[
            {"kind":"regular_interval","a":"-inf","b":0,"scale":"x","speed":{"density":"1"}},
            {"kind":"singular_point","x":0,"class":"trap"},
            {"kind":"regular_interval","a":0,"b":2,"scale":"x","speed":{"density":"1"}},
            {"kind":"regular_interval","a":1,"b":3,"scale":"x","speed":{"density":"1"}}]}"#;
        assert!(matches!(parse_spec(doc), Err(Error::Overlap(_))));
        let doc = r#"{"name":"g","pieces":[
            {"kind":"regular_interval","a":"-inf","b":0,"scale":"x","speed":{"density":"1"}},
            {"kind":"regular_interval","a":0,"b":"+inf","scale":"x","speed":{"density":"1"}}]}"#;
        assert!(matches!(parse_spec(doc), Err(Error::CoverageGap(_))));
        let doc = r#"{"name":"g","pieces":[
            {"kind":"regular_interval","a":"-inf","b":0,"scale":"x","speed":{"density":"1"}},
            {"kind":"singular_point","x":0,"class":"trap"}]}"#;
        assert!(matches!(parse_spec(doc), Err(Error::CoverageGap(_))));
    }

    #[test]
    fn syntax_and_kind_errors() {
        match parse_spec("{\n  \"name\": \"x\",\n  \"pieces\": [ }") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let doc = r#"{"name":"k","pieces":[{"kind":"wormhole","a":"-inf","b":"+inf"}]}"#;
        assert!(matches!(parse_spec(doc), Err(Error::Syntax { .. })));
        let doc = r#"{"name":"k","pieces":[
            {"kind":"trap_segment","a":"-inf","b":0},
            {"kind":"singular_point","x":0,"class":"sideways"},
            {"kind":"trap_segment","a":0,"b":"+inf"}]}"#;
        assert!(matches!(parse_spec(doc), Err(Error::Syntax { .. })));
    }

    #[test]
    fn bessel_mass_matches_closed_form() {
        let r = RegularPiece {
            a: ExtReal::new(0.0).unwrap(),
            b: ExtReal::INFINITY,
            scale: Expr::parse("ln(x)").unwrap(),
            speed: MeasureSpec::with_density(Expr::parse("2*x").unwrap()),
        };
        for x in [0.01, 0.3, 0.9] {
            let m = r.eval_speed_mass(x, 1.0).unwrap().value();
            assert!((m - (1.0 - x * x)).abs() < 1e-10);
        }
        assert!((r.eval_speed_mass(0.0, 1.0).unwrap().value() - 1.0).abs() < 1e-6);
        assert_eq!(r.eval_speed_mass(1.0, f64::INFINITY).unwrap(), ExtReal::INFINITY);
        assert!(matches!(r.eval_scale(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn reach_round_trip() {
        assert_eq!("partial:0.5".parse::<SegmentReach>(), Ok(SegmentReach::Partial(0.5)));
        assert_eq!(SegmentReach::Partial(0.5).to_string(), "partial:0.5");
        assert!("partial:x".parse::<SegmentReach>().is_err());
    }

    #[test]
    fn mirror_swaps_shunts() {
        let spec = parse_spec(EXA1).unwrap();
        let m = spec.mirrored().unwrap();
        assert_eq!(m.pieces[1].as_point().unwrap().class, SingularClass::LeftShunt);
        let r = m.pieces[0].as_regular().unwrap();
        assert_eq!(r.eval_scale(-2.0).unwrap(), -2.0);
    }
}
