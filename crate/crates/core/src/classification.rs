//! Point classes and the Λ-sets of a spec.
//!
//! A point is regular (moves both ways immediately), a right or left shunt
//! (moves only one way), or a trap (never moves). `Λ_l = left_shunt ∪ trap`
//! and `Λ_r = right_shunt ∪ trap`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sets::{PointSet, Span};
use crate::spec_model::{DiffusionSpec, Direction, Piece, SingularClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Regular,
    LeftShunt,
    RightShunt,
    Trap,
}

impl PointClass {
    /// `(e⁻, e⁺)`: whether the process started here immediately visits the
    /// left and the right side.
    pub fn exits(self) -> (bool, bool) {
        match self {
            PointClass::Regular => (true, true),
            PointClass::LeftShunt => (true, false),
            PointClass::RightShunt => (false, true),
            PointClass::Trap => (false, false),
        }
    }
}

impl From<SingularClass> for PointClass {
    fn from(c: SingularClass) -> Self {
        match c {
            SingularClass::Trap => PointClass::Trap,
            SingularClass::LeftShunt => PointClass::LeftShunt,
            SingularClass::RightShunt => PointClass::RightShunt,
        }
    }
}

fn piece_class(piece: &Piece) -> PointClass {
    match piece {
        Piece::RegularInterval(_) => PointClass::Regular,
        Piece::ShuntSegment(s) => match s.direction {
            Direction::Left => PointClass::LeftShunt,
            Direction::Right => PointClass::RightShunt,
        },
        Piece::TrapSegment(_) => PointClass::Trap,
        Piece::SingularPoint(p) => p.class.into(),
    }
}

pub fn classify_point(spec: &DiffusionSpec, x: f64) -> Result<PointClass> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot classify non-finite x = {x}")));
    }
    spec.piece_at(x)
        .map(piece_class)
        .ok_or_else(|| Error::Domain(format!("no piece contains x = {x}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtlasEntry {
    pub location: Span,
    pub class: PointClass,
    pub piece: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifiedLine {
    /// Maximal open intervals of regular points, in increasing order.
    pub lambda2_intervals: Vec<Span>,
    /// Piece index of each interval in `lambda2_intervals`.
    pub lambda2_pieces: Vec<usize>,
    pub singular_atlas: Vec<AtlasEntry>,
}

pub fn regular_decomposition(spec: &DiffusionSpec) -> ClassifiedLine {
    let mut line = ClassifiedLine {
        lambda2_intervals: Vec::new(),
        lambda2_pieces: Vec::new(),
        singular_atlas: Vec::new(),
    };
    for (i, p) in spec.pieces.iter().enumerate() {
        let location = if p.is_point() {
            Span::point(p.lo())
        } else {
            Span::open(p.lo(), p.hi())
        };
        match p {
            // neighbouring regular pieces are always separated by a point,
            // so each regular piece is already maximal
            Piece::RegularInterval(_) => {
                line.lambda2_intervals.push(location);
                line.lambda2_pieces.push(i);
            }
            _ => line.singular_atlas.push(AtlasEntry {
                location,
                class: piece_class(p),
                piece: i,
            }),
        }
    }
    line
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaSets {
    pub lambda2: PointSet,
    pub lambda_pl: PointSet,
    pub lambda_pr: PointSet,
    pub lambda_t: PointSet,
    pub lambda_l: PointSet,
    pub lambda_r: PointSet,
}

pub fn lambda_sets(spec: &DiffusionSpec) -> LambdaSets {
    let mut by_class: [Vec<Span>; 4] = Default::default();
    for p in &spec.pieces {
        let span = if p.is_point() {
            Span::point(p.lo())
        } else {
            Span::open(p.lo(), p.hi())
        };
        let slot = match piece_class(p) {
            PointClass::Regular => 0,
            PointClass::LeftShunt => 1,
            PointClass::RightShunt => 2,
            PointClass::Trap => 3,
        };
        by_class[slot].push(span);
    }
    let [reg, pl, pr, t] = by_class.map(PointSet::from_spans);
    LambdaSets {
        lambda_l: pl.union(&t),
        lambda_r: pr.union(&t),
        lambda2: reg,
        lambda_pl: pl,
        lambda_pr: pr,
        lambda_t: t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin_example;

    #[test]
    fn builtin_classes() {
        let bm = builtin_example("bm").unwrap();
        assert_eq!(classify_point(&bm, 5.0).unwrap(), PointClass::Regular);
        let drift = builtin_example("drift").unwrap();
        assert_eq!(classify_point(&drift, 0.0).unwrap(), PointClass::RightShunt);
        let exa2 = builtin_example("exa2").unwrap();
        assert_eq!(classify_point(&exa2, 0.0).unwrap(), PointClass::Trap);
        assert!(classify_point(&bm, f64::INFINITY).is_err());
    }

    #[test]
    fn decompositions() {
        let bm = builtin_example("bm").unwrap();
        assert_eq!(
            regular_decomposition(&bm).lambda2_intervals,
            vec![Span::open(f64::NEG_INFINITY, f64::INFINITY)]
        );
        let exa1 = builtin_example("exa1").unwrap();
        assert_eq!(
            regular_decomposition(&exa1).lambda2_intervals,
            vec![Span::open(f64::NEG_INFINITY, 0.0), Span::open(0.0, f64::INFINITY)]
        );
        let drift = builtin_example("drift").unwrap();
        assert!(regular_decomposition(&drift).lambda2_intervals.is_empty());
    }

    #[test]
    fn lambda_sets_of_examples() {
        let bm = lambda_sets(&builtin_example("bm").unwrap());
        assert_eq!(bm.lambda2, PointSet::line());
        assert!(bm.lambda_t.is_empty() && bm.lambda_l.is_empty() && bm.lambda_r.is_empty());
        let exa2 = lambda_sets(&builtin_example("exa2").unwrap());
        assert_eq!(exa2.lambda2.to_string(), "(0, +inf)");
        assert_eq!(exa2.lambda_t.to_string(), "(-inf, 0]");
        let drift = lambda_sets(&builtin_example("drift").unwrap());
        assert_eq!(drift.lambda_pr, PointSet::line());
    }
}
