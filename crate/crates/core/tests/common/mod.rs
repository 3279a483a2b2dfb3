#![allow(dead_code)]

use diffusion1d::spec_model::{validate, DiffusionSpec};
use diffusion1d::{parse_spec, Expr, ExtReal, Piece};
use diffusion1d::spec_model::{
    Direction, MeasureSpec, RegularPiece, ShuntSegment, SingularClass, SingularPoint, TrapSegment,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> DiffusionSpec {
    let path = format!("{}/tests/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_spec(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn ext(x: f64) -> ExtReal {
    ExtReal::new(x).unwrap()
}

fn num(x: f64) -> String {
    if x < 0.0 {
        format!("({x})")
    } else {
        format!("{x}")
    }
}

/// Scale/density pairs on `(a, b)` with a known boundary behaviour at each
/// end: `(scale, density, approachable at a, approachable at b)`.
pub fn regular_menu(a: f64, b: f64) -> Vec<(String, String, bool, bool)> {
    let mut menu = vec![("x".to_string(), "2".to_string(), a.is_finite(), b.is_finite())];
    if a.is_finite() {
        // Bessel-2 type: ln(x − a) never reaches a
        menu.push((format!("ln(x - {})", num(a)), format!("2*(x - {})", num(a)), false, b.is_finite()));
    }
    if b.is_finite() {
        menu.push((format!("-ln({} - x)", num(b)), format!("2*({} - x)", num(b)), a.is_finite(), false));
    }
    if a.is_finite() && b.is_finite() {
        menu.push((
            format!("ln(x - {}) - ln({} - x)", num(a), num(b)),
            "2".to_string(),
            false,
            false,
        ));
    }
    menu
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Regular,
    Right,
    Left,
    Trap,
}

/// A random valid spec: 1–4 intervals with integer breakpoints in
/// `[-4, 4]`, joined by singular points compatible with their neighbours.
pub fn random_spec(seed: u64) -> DiffusionSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0.. {
        let spec = try_random_spec(&mut rng, seed, attempt);
        if let Some(spec) = spec {
            if validate(&spec).is_valid() {
                return spec;
            }
        }
        assert!(attempt < 1000, "no valid random spec for seed {seed}");
    }
    unreachable!()
}

fn try_random_spec(rng: &mut ChaCha8Rng, seed: u64, attempt: u32) -> Option<DiffusionSpec> {
    let n = rng.random_range(1..=4usize);
    let mut cuts: Vec<i32> = Vec::new();
    while cuts.len() < n - 1 {
        let c = rng.random_range(-4..=4);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort();
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(cuts.iter().map(|c| *c as f64));
    bounds.push(f64::INFINITY);
    let kinds: Vec<Kind> = (0..n)
        .map(|_| match rng.random_range(0..10) {
            0..=5 => Kind::Regular,
            6 => Kind::Right,
            7 => Kind::Left,
            _ => Kind::Trap,
        })
        .collect();
    let mut pieces = Vec::new();
    for i in 0..n {
        let (a, b) = (bounds[i], bounds[i + 1]);
        pieces.push(match kinds[i] {
            Kind::Regular => {
                let menu = regular_menu(a, b);
                let (s, d, _, _) = &menu[rng.random_range(0..menu.len())];
                Piece::RegularInterval(RegularPiece {
                    a: ext(a),
                    b: ext(b),
                    scale: Expr::parse(s).ok()?,
                    speed: MeasureSpec::with_density(Expr::parse(d).ok()?),
                })
            }
            Kind::Right | Kind::Left => Piece::ShuntSegment(ShuntSegment {
                a: ext(a),
                b: ext(b),
                direction: if kinds[i] == Kind::Right { Direction::Right } else { Direction::Left },
                reach: None,
            }),
            Kind::Trap => Piece::TrapSegment(TrapSegment { a: ext(a), b: ext(b) }),
        });
        if i + 1 < n {
            let mut allowed = vec![SingularClass::Trap, SingularClass::LeftShunt, SingularClass::RightShunt];
            if matches!(kinds[i], Kind::Right | Kind::Trap) {
                allowed.retain(|c| *c != SingularClass::LeftShunt);
            }
            if matches!(kinds[i + 1], Kind::Left | Kind::Trap) {
                allowed.retain(|c| *c != SingularClass::RightShunt);
            }
            let class = allowed[rng.random_range(0..allowed.len())];
            pieces.push(Piece::SingularPoint(SingularPoint { x: b, class }));
        }
    }
    DiffusionSpec::new(format!("random-{seed}-{attempt}"), "", pieces).ok()
}
