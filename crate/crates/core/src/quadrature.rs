//! Gauss–Kronrod quadrature and a divergence-aware tail integrator.
//!
//! [`integrate`] is a globally adaptive G7/K15 scheme; infinite limits are
//! mapped onto finite ones. [`integrate_toward`] integrates a nonnegative
//! integrand from an interior anchor toward an endpoint over a geometric
//! refinement sequence and decides convergence or divergence from the
//! partial sums.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7/K15 panel on a finite interval: (Kronrod value, error estimate).
pub fn gk15<F: FnMut(f64) -> f64 + ?Sized>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            abs: 1e-300,
            max_panels: 2000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::relative(1e-10)
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive_finite<F: FnMut(f64) -> f64 + ?Sized>(f: &mut F, a: f64, b: f64, tol: Tolerance) -> Quad {
    if a == b {
        return Quad {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut panels = 1;
    loop {
        if !total.is_finite() {
            return Quad {
                value: total,
                error: f64::INFINITY,
                converged: false,
            };
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Quad {
                value: total,
                error: total_err,
                converged: true,
            };
        }
        if panels >= tol.max_panels {
            break;
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }
    // Re-sum to remove drift from incremental updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Quad {
        value,
        error,
        converged: error <= tol.abs.max(tol.rel * value.abs()),
    }
}

/// Adaptive integral of `f` over `(lo, hi)`; either limit may be infinite.
/// The integrand is never evaluated at the limits themselves.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Quad {
    integrate_dyn(&mut f, lo, hi, tol)
}

fn integrate_dyn(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, tol: Tolerance) -> Quad {
    if lo > hi {
        let q = integrate_dyn(f, hi, lo, tol);
        return Quad { value: -q.value, ..q };
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive_finite(f, lo, hi, tol),
        (true, false) => {
            // x = lo + (1 - t) / t, t in (0, 1]
            let mut g = |t: f64| {
                let x = lo + (1.0 - t) / t;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v / (t * t)
                }
            };
            adaptive_finite(&mut g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let mut g = |t: f64| {
                let x = hi - (1.0 - t) / t;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v / (t * t)
                }
            };
            adaptive_finite(&mut g, 0.0, 1.0, tol)
        }
        (false, false) => {
            let left = integrate_dyn(f, f64::NEG_INFINITY, 0.0, tol);
            let right = integrate_dyn(f, 0.0, f64::INFINITY, tol);
            Quad {
                value: left.value + right.value,
                error: left.error + right.error,
                converged: left.converged && right.converged,
            }
        }
    }
}

/// Thresholds of the tail integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPolicy {
    /// Increment-to-sum ratio below which a refinement counts as settled.
    pub rel_tol: f64,
    /// Partial sums above this are declared divergent outright.
    pub cap: f64,
    /// Growth-based divergence is only considered above this level.
    pub growth_floor: f64,
    pub growth_ratio: f64,
    pub growth_run: usize,
    /// Consecutive non-decreasing increments that signal divergence.
    pub stall_run: usize,
    pub settle_run: usize,
    pub min_steps: usize,
}

impl TailPolicy {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        TailPolicy {
            rel_tol,
            ..TailPolicy::default()
        }
    }
}

impl Default for TailPolicy {
    fn default() -> Self {
        TailPolicy {
            rel_tol: 1e-6,
            cap: 1e12,
            growth_floor: 1e6,
            growth_ratio: 1.05,
            growth_run: 8,
            stall_run: 16,
            settle_run: 3,
            min_steps: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailOutcome {
    Converged { value: f64, steps: usize },
    Diverged { partial: f64, steps: usize },
    Undetermined { partial: f64, steps: usize },
}

impl TailOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            TailOutcome::Converged { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, TailOutcome::Diverged { .. })
    }
}

/// The k-th refinement point between `anchor` and `endpoint`; `None` once
/// floating point can no longer separate it from its predecessor.
pub fn refinement_point(anchor: f64, endpoint: f64, k: usize) -> Option<f64> {
    if endpoint.is_finite() {
        let d = (anchor - endpoint) * 0.5f64.powi(k as i32);
        let p = endpoint + d;
        if d == 0.0 || p == endpoint {
            None
        } else {
            Some(p)
        }
    } else {
        if k > 1020 {
            return None;
        }
        let step = 2f64.powi(k as i32) - 1.0;
        let p = if endpoint > 0.0 { anchor + step } else { anchor - step };
        p.is_finite().then_some(p)
    }
}

/// Integrates a nonnegative `f` from `anchor` toward `endpoint`.
pub fn integrate_toward<F: FnMut(f64) -> f64>(
    mut f: F,
    anchor: f64,
    endpoint: f64,
    policy: TailPolicy,
) -> TailOutcome {
    let seg_tol = Tolerance {
        rel: (policy.rel_tol * 1e-2).max(1e-14),
        abs: 1e-300,
        max_panels: 400,
    };
    let mut sum = 0.0f64;
    let mut prev_inc = f64::NAN;
    let mut growth = 0;
    let mut stall = 0;
    let mut settled = 0;
    let mut prev = anchor;
    let mut k = 1;
    while let Some(p) = refinement_point(anchor, endpoint, k) {
        if p == prev {
            break;
        }
        let inc = integrate(&mut f, p.min(prev), p.max(prev), seg_tol).value.abs();
        if !inc.is_finite() {
            // overflow deep in the refinement says nothing on its own
            return if stall > 0 || sum > policy.growth_floor || k <= policy.min_steps {
                TailOutcome::Diverged { partial: sum, steps: k }
            } else {
                TailOutcome::Undetermined { partial: sum, steps: k }
            };
        }
        let before = sum;
        sum += inc;
        if sum > policy.cap {
            return TailOutcome::Diverged { partial: sum, steps: k };
        }
        if before > policy.growth_floor && sum >= policy.growth_ratio * before {
            growth += 1;
            if growth >= policy.growth_run {
                return TailOutcome::Diverged { partial: sum, steps: k };
            }
        } else {
            growth = 0;
        }
        if inc > 0.0 && inc >= prev_inc * (1.0 - 1e-9) {
            stall += 1;
            if stall >= policy.stall_run {
                return TailOutcome::Diverged { partial: sum, steps: k };
            }
        } else {
            stall = 0;
        }
        if inc <= policy.rel_tol * sum || (inc == 0.0 && sum == 0.0) {
            settled += 1;
            if settled >= policy.settle_run && k >= policy.min_steps {
                return TailOutcome::Converged { value: sum, steps: k };
            }
        } else {
            settled = 0;
        }
        prev_inc = inc;
        prev = p;
        k += 1;
    }
    TailOutcome::Undetermined { partial: sum, steps: k }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default());
        assert!((q.value - 8.0).abs() < 1e-13);
        assert!(q.converged);
    }

    #[test]
    fn infinite_ranges() {
        let q = integrate(|x: f64| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, Tolerance::default());
        assert!((q.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        let q = integrate(|x: f64| 1.0 / (x * x), 1.0, f64::INFINITY, Tolerance::default());
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::relative(1e-9));
        assert!((q.value - 2.0).abs() < 1e-7, "{q:?}");
    }

    #[test]
    fn tail_converges_for_integrable_singularity() {
        let out = integrate_toward(|x: f64| 1.0 / x.sqrt(), 1.0, 0.0, TailPolicy::default());
        let v = out.value().expect("converged");
        assert!((v - 2.0).abs() < 1e-5, "{out:?}");
    }

    #[test]
    fn tail_detects_logarithmic_divergence() {
        let out = integrate_toward(|x: f64| 1.0 / x, 1.0, 0.0, TailPolicy::default());
        assert!(out.is_diverged(), "{out:?}");
        let out = integrate_toward(|x: f64| 1.0 / (1.0 + x), 0.0, f64::INFINITY, TailPolicy::default());
        assert!(out.is_diverged(), "{out:?}");
    }

    #[test]
    fn tail_detects_power_divergence() {
        let out = integrate_toward(|x: f64| x.powi(-2), 1.0, 0.0, TailPolicy::default());
        assert!(out.is_diverged(), "{out:?}");
    }

    #[test]
    fn tail_toward_infinity_converges() {
        let out = integrate_toward(|x: f64| (-x).exp(), 0.0, f64::INFINITY, TailPolicy::default());
        assert!((out.value().unwrap() - 1.0).abs() < 1e-6, "{out:?}");
    }

    #[test]
    fn refinement_points_approach_the_endpoint() {
        assert_eq!(refinement_point(1.0, 0.0, 1), Some(0.5));
        assert_eq!(refinement_point(1.0, f64::INFINITY, 3), Some(8.0));
        assert_eq!(refinement_point(-1.0, f64::NEG_INFINITY, 1), Some(-2.0));
        assert!(refinement_point(1.0, 0.5, 80).is_none());
    }
}
