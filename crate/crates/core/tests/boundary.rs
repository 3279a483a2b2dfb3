mod common;

use common::{fixture, random_spec};
use diffusion1d::analysis::{Analysis, AnalysisOptions};
use diffusion1d::boundary::Approach;
use diffusion1d::builtin::{builtin_example, builtin_names};
use diffusion1d::quadrature::TailPolicy;
use diffusion1d::DiffusionSpec;

fn corpus() -> Vec<DiffusionSpec> {
    let mut specs: Vec<DiffusionSpec> = builtin_names()
        .into_iter()
        .map(|n| builtin_example(n).unwrap())
        .collect();
    specs.extend(["reflected-bm", "split-trap", "cube", "non-radon"].map(fixture));
    specs.extend((0..20).map(random_spec));
    specs
}

#[test]
fn verdicts_survive_tighter_tolerance() {
    for spec in corpus() {
        let at = |tol: f64| {
            let options = AnalysisOptions {
                policy: TailPolicy::with_rel_tol(tol),
                ..AnalysisOptions::default()
            };
            Analysis::with_options(&spec, options)
                .endpoints
                .iter()
                .map(|e| (e.label(), e.approachable, e.role))
                .collect::<Vec<_>>()
        };
        assert_eq!(at(1e-6), at(1e-8), "{}", spec.name);
    }
}

#[test]
fn approachable_endpoints_have_finite_scale() {
    for spec in corpus() {
        for e in Analysis::new(&spec).endpoints {
            if e.approachable == Approach::Yes {
                assert!(e.scale_limit.is_some_and(|l| l.is_finite()), "{}: {}", spec.name, e.label());
            }
        }
    }
}
