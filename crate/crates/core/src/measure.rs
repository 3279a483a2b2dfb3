//! Symmetrizing measures: finite sums of scaled speed measures on carriers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::extreal::{ext_string, ExtReal};
use crate::quadrature::TailPolicy;
use crate::sets::Span;
use crate::spec_model::{AtomSpec, MeasureSpec, RegularPiece};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurePart {
    pub carrier: Span,
    pub scale_constant: f64,
    pub speed: MeasureSpec,
    /// Index of the regular piece the part comes from; absent for the
    /// Lebesgue filler.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub piece: Option<usize>,
}

impl MeasurePart {
    pub fn lebesgue(carrier: Span) -> MeasurePart {
        MeasurePart {
            carrier,
            scale_constant: 1.0,
            speed: MeasureSpec::with_density(Expr::constant(1.0)),
            piece: None,
        }
    }

    /// The carrier as a pseudo regular piece, so the tail machinery of
    /// speed masses applies unchanged.
    fn as_piece(&self) -> RegularPiece {
        let mut speed = self.speed.clone();
        speed.atoms.clear();
        RegularPiece {
            a: ExtReal::new(self.carrier.lo).expect("carrier ends are not NaN"),
            b: ExtReal::new(self.carrier.hi).expect("carrier ends are not NaN"),
            scale: Expr::parse("x").expect("identity parses"),
            speed,
        }
    }

    /// Mass of the closed interval `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64, policy: TailPolicy) -> Result<ExtReal> {
        let u = lo.max(self.carrier.lo);
        let v = hi.min(self.carrier.hi);
        if u > v {
            return Ok(ExtReal::new(0.0).unwrap());
        }
        let atoms: f64 = self
            .speed
            .atoms
            .iter()
            .filter(|a| self.carrier.contains(a.at) && lo <= a.at && a.at <= hi)
            .map(|a| a.weight)
            .sum();
        let mut total = atoms;
        if u < v {
            let d = self.as_piece().speed_mass_with(u, v, policy)?;
            if !d.is_finite() {
                return Ok(ExtReal::INFINITY);
            }
            total += d.value();
        }
        Ok(ExtReal::new(self.scale_constant * total).expect("finite mass"))
    }

    pub fn density_at(&self, x: f64) -> f64 {
        if self.carrier.interior().contains(x) {
            self.scale_constant * self.speed.density.eval(x).max(0.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measure {
    pub parts: Vec<MeasurePart>,
    pub fully_supported: bool,
    pub sigma_finite: bool,
    /// `None` when local finiteness could not be decided.
    pub radon: Option<bool>,
}

impl Measure {
    pub fn new(parts: Vec<MeasurePart>, fully_supported: bool) -> Measure {
        let mut m = Measure {
            parts,
            fully_supported,
            sigma_finite: true,
            radon: None,
        };
        m.radon = m.is_radon(TailPolicy::default()).ok();
        m
    }

    /// `m([lo, hi])`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<ExtReal> {
        self.mass_with(lo, hi, TailPolicy::default())
    }

    pub fn mass_with(&self, lo: f64, hi: f64, policy: TailPolicy) -> Result<ExtReal> {
        let mut total = 0.0;
        for p in &self.parts {
            let m = p.mass(lo, hi, policy)?;
            if !m.is_finite() {
                return Ok(ExtReal::INFINITY);
            }
            total += m.value();
        }
        Ok(ExtReal::new(total).expect("finite mass"))
    }

    /// Absolutely continuous density at `x` (atoms excluded).
    pub fn density_at(&self, x: f64) -> f64 {
        self.parts.iter().map(|p| p.density_at(x)).sum()
    }

    /// Total atom weight at exactly `x`.
    pub fn atom_at(&self, x: f64) -> f64 {
        self.parts
            .iter()
            .filter(|p| p.carrier.contains(x))
            .flat_map(|p| p.speed.atoms.iter().filter(|a| a.at == x).map(|a| p.scale_constant * a.weight))
            .sum()
    }

    /// Checks `m([−k, k]) < ∞` for `k = 1, 2, 4, …` until `[−k, k]` covers
    /// every finite carrier end and atom; past that point nothing changes.
    pub fn is_radon(&self, policy: TailPolicy) -> Result<bool> {
        let reach = self
            .parts
            .iter()
            .flat_map(|p| {
                [p.carrier.lo, p.carrier.hi]
                    .into_iter()
                    .chain(p.speed.atoms.iter().map(|a| a.at))
            })
            .filter(|x| x.is_finite())
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        let mut k = 1.0f64;
        loop {
            if !self.mass_with(-k, k, policy)?.is_finite() {
                return Ok(false);
            }
            if k > reach {
                return Ok(true);
            }
            k *= 2.0;
        }
    }

    /// A copy with an extra atom of `weight` at `at`, attached to the part
    /// whose carrier contains it.
    pub fn with_atom(&self, at: f64, weight: f64) -> Result<Measure> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidArgument(format!("atom weight must be positive, got {weight}")));
        }
        let mut out = self.clone();
        let part = out
            .parts
            .iter_mut()
            .find(|p| p.carrier.contains(at))
            .ok_or_else(|| Error::InvalidArgument(format!("no carrier contains {}", ext_string(at))))?;
        part.speed.atoms.push(AtomSpec {
            at,
            weight: weight / part.scale_constant,
        });
        out.radon = out.is_radon(TailPolicy::default()).ok();
        Ok(out)
    }
}
