mod common;

use common::{fixture, random_spec, regular_menu};
use diffusion1d::analysis::Analysis;
use diffusion1d::builtin::{builtin_example, builtin_names};
use diffusion1d::classification::{classify_point, lambda_sets, PointClass};
use diffusion1d::dirichlet::{energy, form_descriptor, FormDescriptor, Profile, TestFunction};
use diffusion1d::hunt::{check_hunt, singleton_status, SingletonStatus};
use diffusion1d::reachability::{build_graph, communication_classes, AtomKind, ClassKind};
use diffusion1d::sets::PointSet;
use diffusion1d::spec_model::{AtomSpec, MeasureSpec, RegularPiece};
use diffusion1d::symmetry::{check_symmetrizable, lambda_ap, lambda_at, measure_family};
use diffusion1d::{parse_spec, DiffusionSpec, Expr, ExtReal};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// Points that exercise every piece: each breakpoint, points just beside
/// it, and points inside every piece.
fn probe_points(spec: &DiffusionSpec) -> Vec<f64> {
    let mut xs = vec![-50.0, 50.0];
    for p in &spec.pieces {
        for e in [p.lo(), p.hi()] {
            if e.is_finite() {
                xs.extend([e - 0.5, e - 1e-3, e, e + 1e-3, e + 0.5]);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn is_open(s: &PointSet) -> bool {
    s.spans()
        .iter()
        .all(|sp| !sp.lo_closed && !sp.hi_closed && !sp.is_point())
}

fn is_closed(s: &PointSet) -> bool {
    s.spans()
        .iter()
        .all(|sp| (sp.lo_closed || !sp.lo.is_finite()) && (sp.hi_closed || !sp.hi.is_finite()))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn serialization_round_trips(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let text = spec.to_json();
        let again = parse_spec(&text).unwrap();
        prop_assert_eq!(&again, &spec);
        prop_assert_eq!(again.to_json(), text);
    }

    #[test]
    fn speed_mass_is_additive(
        which in 0usize..4,
        a in -3i32..0,
        len in 1i32..4,
        t in (0.05f64..0.3, 0.35f64..0.65, 0.7f64..0.95),
        weight in 0.0f64..2.0,
    ) {
        let (a, b) = (a as f64, (a + len) as f64);
        let menu = regular_menu(a, b);
        let (s, d, _, _) = &menu[which % menu.len()];
        let span = b - a;
        let (u, v, w) = (a + t.0 * span, a + t.1 * span, a + t.2 * span);
        let piece = RegularPiece {
            a: ExtReal::new(a).unwrap(),
            b: ExtReal::new(b).unwrap(),
            scale: Expr::parse(s).unwrap(),
            speed: MeasureSpec {
                atoms: vec![AtomSpec { at: v, weight }],
                ..MeasureSpec::with_density(Expr::parse(d).unwrap())
            },
        };
        let m = |x: f64, y: f64| piece.eval_speed_mass(x, y).unwrap().value();
        let whole = m(u, w);
        let parts = m(u, v) + m(v, w) + piece.atom_weight_at(v);
        prop_assert!((whole - parts).abs() <= 1e-8 * whole.max(1.0), "{whole} vs {parts}");
    }

    #[test]
    fn scale_is_strictly_increasing(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        for (_, r) in spec.regular_pieces() {
            let (a, b) = (r.a.value().max(-1e3), r.b.value().min(1e3));
            let grid: Vec<f64> = (1..=1000).map(|i| a + (b - a) * i as f64 / 1001.0).collect();
            let s: Vec<f64> = grid.iter().map(|x| r.eval_scale(*x).unwrap()).collect();
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]), "{}", r.scale.source());
        }
    }

    #[test]
    fn lambda_set_identities(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let l = lambda_sets(&spec);
        prop_assert!(is_open(&l.lambda2));
        prop_assert!(is_closed(&l.lambda_r.union(&l.lambda_l)));
        prop_assert_eq!(l.lambda_r.intersection(&l.lambda_l), l.lambda_t.clone());
        prop_assert!(l.lambda_pr.intersection(&l.lambda_l).is_empty());
        prop_assert!(l.lambda_pl.intersection(&l.lambda_r).is_empty());
        let all = l.lambda2.union(&l.lambda_pl).union(&l.lambda_pr).union(&l.lambda_t);
        prop_assert_eq!(all, PointSet::line());
    }

    #[test]
    fn classify_matches_lambda_sets(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let l = lambda_sets(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = probe_points(&spec);
        xs.extend((0..10_000).map(|_| rng.random_range(-6.0..6.0)));
        for x in xs {
            let class = classify_point(&spec, x).unwrap();
            let want = match class {
                PointClass::Regular => &l.lambda2,
                PointClass::LeftShunt => &l.lambda_pl,
                PointClass::RightShunt => &l.lambda_pr,
                PointClass::Trap => &l.lambda_t,
            };
            prop_assert!(want.contains(x), "{x} classified {class:?}");
        }
    }

    #[test]
    fn reachability_is_transitive_and_blocked(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let graph = build_graph(&spec).unwrap();
        let l = lambda_sets(&spec);
        let xs = probe_points(&spec);
        for &x in &xs {
            for &y in &xs {
                if !graph.reaches(x, y) {
                    continue;
                }
                for &z in &xs {
                    if graph.reaches(y, z) {
                        prop_assert!(graph.reaches(x, z), "{x} → {y} → {z}");
                    }
                }
            }
        }
        for &b in xs.iter().filter(|b| l.lambda_r.contains(**b)) {
            for &a in xs.iter().filter(|a| **a > b) {
                for &c in xs.iter().filter(|c| **c < b) {
                    prop_assert!(!graph.reaches(a, c), "{a} reaches {c} across {b}");
                }
            }
        }
        for &b in xs.iter().filter(|b| l.lambda_l.contains(**b)) {
            for &a in xs.iter().filter(|a| **a < b) {
                for &c in xs.iter().filter(|c| **c > b) {
                    prop_assert!(!graph.reaches(a, c), "{a} reaches {c} across {b}");
                }
            }
        }
    }

    #[test]
    fn classes_partition_the_line(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let graph = build_graph(&spec).unwrap();
        let cc = communication_classes(&graph);
        for x in probe_points(&spec) {
            let n = cc.classes.iter().filter(|c| c.span.contains(x)).count();
            prop_assert_eq!(n, 1, "{} lies in {} classes", x, n);
        }
        let interiors = PointSet::from_spans(
            cc.classes
                .iter()
                .filter(|c| c.kind == ClassKind::Interval)
                .map(|c| c.span.interior()),
        );
        prop_assert_eq!(&cc.ring_interior, &interiors);
    }

    #[test]
    fn verdicts_are_wired(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let r = check_symmetrizable(&spec).unwrap();
        let hunt = check_hunt(&spec).unwrap().holds;
        let killed = hunt && lambda_ap(&spec).unwrap().is_empty();
        prop_assert_eq!(r.symmetrizable_killed, killed);
        prop_assert_eq!(r.symmetrizable_full, killed && lambda_at(&spec).unwrap().is_empty());
        if r.symmetrizable_full {
            let graph = build_graph(&spec).unwrap();
            for (i, a) in graph.atoms.iter().enumerate() {
                if matches!(a.kind, AtomKind::Point { class: diffusion1d::spec_model::SingularClass::Trap, .. }) {
                    prop_assert!(!graph.has_foreign_in_edge(i));
                }
            }
        }
    }

    #[test]
    fn hunt_agrees_with_singleton_statuses(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let h = check_hunt(&spec).unwrap();
        for w in &h.witnesses {
            let (lo, hi) = (w.location.lo, w.location.hi);
            let x = match (lo.is_finite(), hi.is_finite()) {
                _ if w.location.is_point() => lo,
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            };
            prop_assert_eq!(singleton_status(&spec, x).unwrap(), SingletonStatus::ThinNotPolar);
        }
        if h.holds {
            for x in probe_points(&spec) {
                prop_assert_ne!(singleton_status(&spec, x).unwrap(), SingletonStatus::ThinNotPolar);
            }
        }
    }

    #[test]
    fn mirroring_preserves_verdicts(seed in 0u64..10_000) {
        let spec = random_spec(seed);
        let mirror = spec.mirrored().unwrap();
        let (h, hm) = (check_hunt(&spec).unwrap(), check_hunt(&mirror).unwrap());
        prop_assert_eq!(h.holds, hm.holds);
        // + 0.0 folds −0 into 0
        let mut locs: Vec<(f64, f64)> = h.witnesses.iter().map(|w| (-w.location.hi + 0.0, -w.location.lo + 0.0)).collect();
        let mut mlocs: Vec<(f64, f64)> = hm.witnesses.iter().map(|w| (w.location.lo + 0.0, w.location.hi + 0.0)).collect();
        locs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mlocs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(locs, mlocs);
        let (s, sm) = (check_symmetrizable(&spec).unwrap(), check_symmetrizable(&mirror).unwrap());
        prop_assert_eq!(s.symmetrizable_killed, sm.symmetrizable_killed);
        prop_assert_eq!(s.symmetrizable_full, sm.symmetrizable_full);
    }

    #[test]
    fn measure_family_scales_per_component(seed in 0u64..10_000, c in prop::collection::vec(0.1f64..10.0, 8)) {
        let spec = random_spec(seed);
        let r = check_symmetrizable(&spec).unwrap();
        prop_assume!(r.symmetrizable_full);
        let n = r.components.len();
        let ones = vec![1.0; n];
        let m1 = measure_family(&spec, &ones).unwrap();
        let mc = measure_family(&spec, &c[..n]).unwrap();
        for x in probe_points(&spec) {
            let k = r.components.iter().position(|comp| comp.i_n.contains(x));
            let (d1, dc) = (m1.density_at(x), mc.density_at(x));
            match k {
                Some(k) => prop_assert!((dc - c[k] * d1).abs() <= 1e-12 * dc.abs().max(1.0), "{x}: {dc} vs {}·{d1}", c[k]),
                None => prop_assert_eq!(dc, d1),
            }
        }
    }
}

/// Random cubic on the reflected-bm middle component, zero elsewhere.
struct UnitComponent {
    an: Analysis,
    desc: FormDescriptor,
    mid: usize,
}

impl UnitComponent {
    fn new() -> UnitComponent {
        let spec = fixture("reflected-bm");
        let desc = form_descriptor(&spec).unwrap();
        let unit = [ExtReal::new(0.0).unwrap(), ExtReal::new(1.0).unwrap()];
        let mid = desc.components.iter().position(|c| c.scale_image == unit).unwrap();
        UnitComponent {
            an: Analysis::new(&spec),
            desc,
            mid,
        }
    }

    fn embed(&self, p: Profile) -> TestFunction {
        let mut components = vec![Profile::constant(0.0); self.desc.components.len()];
        components[self.mid] = p;
        TestFunction { components }
    }

    fn energy(&self, f: &Profile, g: &Profile) -> f64 {
        energy(&self.an, &self.desc, &self.embed(f.clone()), &self.embed(g.clone())).unwrap()
    }
}

fn cubic() -> impl Strategy<Value = Profile> {
    prop::collection::vec(-3.0f64..3.0, 4).prop_map(Profile::polynomial)
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn energy_is_symmetric_and_bilinear(f in cubic(), g in cubic(), alpha in -4.0f64..4.0) {
        let u = UnitComponent::new();
        let efg = u.energy(&f, &g);
        prop_assert!((efg - u.energy(&g, &f)).abs() <= 1e-10 * efg.abs().max(1.0));
        let scaled = u.energy(&f.scaled(alpha), &g);
        prop_assert!((scaled - alpha * efg).abs() <= 1e-9 * (alpha * efg).abs().max(1.0));
    }

    #[test]
    fn energy_satisfies_cauchy_schwarz(f in cubic(), g in cubic()) {
        let u = UnitComponent::new();
        let efg = u.energy(&f, &g);
        let (eff, egg) = (u.energy(&f, &f), u.energy(&g, &g));
        prop_assert!(efg * efg <= eff * egg * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn unit_contraction_does_not_raise_energy(f in cubic()) {
        let u = UnitComponent::new();
        let t = f.contracted();
        prop_assert!(u.energy(&t, &t) <= u.energy(&f, &f) + 1e-9);
    }
}

#[test]
fn regular_form_iff_radon_on_full_examples() {
    use diffusion1d::dirichlet::{check_adapted, check_regular_form};
    use diffusion1d::quadrature::TailPolicy;
    let mut specs: Vec<DiffusionSpec> = builtin_names()
        .into_iter()
        .map(|n| builtin_example(n).unwrap())
        .collect();
    specs.extend(["reflected-bm", "split-trap", "cube", "non-radon"].map(fixture));
    let mut full = 0;
    for spec in &specs {
        let r = check_symmetrizable(spec).unwrap();
        let Some(m) = r.canonical_measure else { continue };
        full += 1;
        let radon = m.is_radon(TailPolicy::default()).unwrap();
        assert_eq!(check_regular_form(spec, &m).unwrap(), radon, "{}", spec.name);
        if radon {
            assert_eq!(check_adapted(spec).unwrap().violations, 0, "{}", spec.name);
        }
    }
    assert_eq!(full, 5);
}
