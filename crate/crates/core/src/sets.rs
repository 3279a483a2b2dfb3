//! Finite unions of intervals and points on the extended line.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::extreal::fmt_ext;

/// An interval `⟨lo, hi⟩` with per-endpoint inclusion; `lo == hi` with both
/// ends closed is a single point. Infinite ends are never closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Span {
    pub fn open(lo: f64, hi: f64) -> Span {
        Span::new(lo, hi, false, false)
    }

    pub fn closed(lo: f64, hi: f64) -> Span {
        Span::new(lo, hi, true, true)
    }

    pub fn point(x: f64) -> Span {
        Span::new(x, x, true, true)
    }

    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Span {
        Span {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi && self.lo_closed && self.hi_closed
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (x == self.lo && self.lo_closed);
        let below = x < self.hi || (x == self.hi && self.hi_closed);
        above && below
    }

    pub fn interior(&self) -> Span {
        Span::open(self.lo, self.hi)
    }

    fn intersect(&self, other: &Span) -> Span {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Span { lo, hi, lo_closed, hi_closed }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{{")?;
            fmt_ext(self.lo, f)?;
            return write!(f, "}}");
        }
        write!(f, "{}", if self.lo_closed { '[' } else { '(' })?;
        fmt_ext(self.lo, f)?;
        write!(f, ", ")?;
        fmt_ext(self.hi, f)?;
        write!(f, "{}", if self.hi_closed { ']' } else { ')' })
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A normalized finite union of disjoint, non-adjacent spans in increasing
/// order. Equality is set equality.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet {
    spans: Vec<Span>,
}

impl PointSet {
    pub fn empty() -> PointSet {
        PointSet::default()
    }

    pub fn line() -> PointSet {
        PointSet::from_spans([Span::open(f64::NEG_INFINITY, f64::INFINITY)])
    }

    pub fn from_spans<I: IntoIterator<Item = Span>>(spans: I) -> PointSet {
        let mut v: Vec<Span> = spans.into_iter().filter(|s| !s.is_empty()).collect();
        v.sort_by(|x, y| {
            x.lo.total_cmp(&y.lo)
                .then_with(|| y.lo_closed.cmp(&x.lo_closed))
        });
        let mut out: Vec<Span> = Vec::with_capacity(v.len());
        for s in v {
            if let Some(last) = out.last_mut() {
                let touches = s.lo < last.hi
                    || (s.lo == last.hi && (s.lo_closed || last.hi_closed));
                if touches {
                    if s.hi > last.hi {
                        last.hi = s.hi;
                        last.hi_closed = s.hi_closed;
                    } else if s.hi == last.hi {
                        last.hi_closed |= s.hi_closed;
                    }
                    continue;
                }
            }
            out.push(s);
        }
        PointSet { spans: out }
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.spans.iter().any(|s| s.contains(x))
    }

    /// Isolated points of the set.
    pub fn points(&self) -> Vec<f64> {
        self.spans.iter().filter(|s| s.is_point()).map(|s| s.lo).collect()
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::from_spans(self.spans.iter().chain(other.spans.iter()).copied())
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        let mut out = Vec::new();
        for a in &self.spans {
            for b in &other.spans {
                out.push(a.intersect(b));
            }
        }
        PointSet::from_spans(out)
    }

    pub fn complement(&self) -> PointSet {
        let mut out = Vec::new();
        let mut lo = f64::NEG_INFINITY;
        let mut lo_closed = false;
        for s in &self.spans {
            out.push(Span::new(lo, s.lo, lo_closed, !s.lo_closed));
            lo = s.hi;
            lo_closed = !s.hi_closed;
        }
        out.push(Span::new(lo, f64::INFINITY, lo_closed, false));
        PointSet::from_spans(out)
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        self.intersection(&other.complement())
    }

    /// Open in the topology of the real line.
    pub fn is_open(&self) -> bool {
        self.spans.iter().all(|s| !s.lo_closed && !s.hi_closed)
    }

    /// Closed in the topology of the real line.
    pub fn is_closed(&self) -> bool {
        self.complement().is_open()
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spans.is_empty() {
            return write!(f, "∅");
        }
        for (i, s) in self.spans.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Serialize for PointSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn merging_adjacent_pieces() {
        let s = PointSet::from_spans([Span::open(-INF, 0.0), Span::point(0.0), Span::open(0.0, 1.0)]);
        assert_eq!(s.spans().len(), 1);
        assert_eq!(s.to_string(), "(-inf, 1)");
        let gap = PointSet::from_spans([Span::open(-INF, 0.0), Span::open(0.0, 1.0)]);
        assert_eq!(gap.spans().len(), 2);
        assert_eq!(gap.complement().to_string(), "{0} ∪ [1, +inf)");
    }

    #[test]
    fn set_algebra() {
        let a = PointSet::from_spans([Span::closed(0.0, 2.0)]);
        let b = PointSet::from_spans([Span::open(1.0, 3.0)]);
        assert_eq!(a.intersection(&b).to_string(), "(1, 2]");
        assert_eq!(a.union(&b).to_string(), "[0, 3)");
        assert_eq!(a.difference(&b).to_string(), "[0, 1]");
        assert!(b.is_open() && !b.is_closed());
        assert!(a.is_closed() && !a.is_open());
        assert!(PointSet::line().is_open() && PointSet::line().is_closed());
        assert_eq!(PointSet::line().complement(), PointSet::empty());
    }

    #[test]
    fn point_membership() {
        let s = PointSet::from_spans([Span::point(0.0), Span::open(1.0, 2.0)]);
        assert!(s.contains(0.0) && !s.contains(1.0) && s.contains(1.5));
        assert_eq!(s.points(), vec![0.0]);
    }
}
