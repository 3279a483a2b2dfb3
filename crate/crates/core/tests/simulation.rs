mod common;

use common::fixture;
use diffusion1d::builtin::builtin_example;
use diffusion1d::reachability::build_graph;
use diffusion1d::simulator::{
    build_chain, estimate_hitting, simulate_path, Holding, Mode, NodeKind, PathStatus, SimConfig,
};
use diffusion1d::symmetry::measure_family;

fn cfg(threads: usize) -> SimConfig {
    SimConfig {
        threads,
        ..SimConfig::default()
    }
}

#[test]
fn bm_exit_time_of_one_cell_is_h_squared() {
    let bm = builtin_example("bm").unwrap();
    let h = 0.05;
    let chain = build_chain(&bm, (-1.0, 1.0), h).unwrap();
    let i = chain.node_near(&bm, 0.0).unwrap();
    assert!((chain.nodes[i].tau - h * h).abs() < 1e-12, "{}", chain.nodes[i].tau);

    let exp = SimConfig {
        holding: Holding::Exponential,
        ..SimConfig::default()
    };
    let n = 10_000;
    let times: Vec<f64> = (0..n)
        .map(|seed| simulate_path(&bm, &chain, 0.0, 1.0, &exp, seed).unwrap().times[1])
        .collect();
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - h * h).abs() <= 3.0 * se, "{mean} vs {} ± {se}", h * h);
}

#[test]
fn reachability_agrees_with_simulation() {
    // (spec, x, y, window)
    let cases = [
        ("exa1", -1.0, 1.0, (-3.0, 3.0)),
        ("exa1", 1.0, -1.0, (-3.0, 3.0)),
        ("exa1", 1.0, 2.0, (-3.0, 3.0)),
        ("exa2", 1.0, 2.0, (-3.0, 3.0)),
        ("bessel-glue", -1.0, 1.0, (-3.0, 3.0)),
        ("bessel-glue", 1.0, 2.0, (-3.0, 3.0)),
    ];
    for (name, x, y, window) in cases {
        let spec = builtin_example(name).unwrap();
        let reaches = build_graph(&spec).unwrap().reaches(x, y);
        let chain = build_chain(&spec, window, 0.02).unwrap();
        let est = estimate_hitting(&spec, &chain, x, y, 50.0, 2_000, 3, &cfg(4)).unwrap();
        if reaches {
            assert!(est.hits > 0, "{name}: {x} → {y} should be hit");
        } else {
            assert_eq!(est.hits, 0, "{name}: {x} → {y} should never be hit");
        }
    }
}

#[test]
fn exa1_one_sided_reach() {
    let spec = builtin_example("exa1").unwrap();
    let chain = build_chain(&spec, (-3.0, 3.0), 0.02).unwrap();
    let fwd = estimate_hitting(&spec, &chain, -1.0, 1.0, 10.0, 10_000, 1, &cfg(4)).unwrap();
    let back = estimate_hitting(&spec, &chain, 1.0, -1.0, 10.0, 10_000, 2, &cfg(4)).unwrap();
    assert!(fwd.estimate > 0.0);
    assert_eq!(back.hits, 0);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let spec = builtin_example("exa1").unwrap();
    let chain = build_chain(&spec, (-3.0, 3.0), 0.05).unwrap();
    let one = estimate_hitting(&spec, &chain, -0.5, 1.0, 5.0, 3_000, 17, &cfg(1)).unwrap();
    for threads in [2, 3, 8] {
        let many = estimate_hitting(&spec, &chain, -0.5, 1.0, 5.0, 3_000, 17, &cfg(threads)).unwrap();
        assert_eq!(one, many);
    }
}

#[test]
fn traps_hold_or_kill_by_mode() {
    let spec = builtin_example("exa2").unwrap();
    let chain = build_chain(&spec, (-2.0, 2.0), 0.05).unwrap();
    let trap = chain.node_near(&spec, 0.0).unwrap();
    assert_eq!(chain.nodes[trap].kind, NodeKind::Trap);
    for (mode, lifetime) in [(Mode::Full, false), (Mode::KilledAtTraps, true)] {
        let c = SimConfig::with_mode(mode);
        let path = simulate_path(&spec, &chain, 0.0, 3.0, &c, 0).unwrap();
        assert_eq!(path.status, PathStatus::AbsorbedAtTrap);
        assert_eq!(path.lifetime.is_some(), lifetime);
    }
    // the trap segment never moves
    let path = simulate_path(&spec, &chain, -1.0, 3.0, &cfg(1), 0).unwrap();
    assert!(path.positions.iter().all(|x| (*x - path.positions[0]).abs() < 1e-12));
}

#[test]
fn split_trap_family_scales_each_side() {
    let spec = fixture("split-trap");
    let m = measure_family(&spec, &[1.0, 3.0]).unwrap();
    let base = measure_family(&spec, &[1.0, 1.0]).unwrap();
    assert!((m.density_at(-0.5) - base.density_at(-0.5)).abs() < 1e-12);
    assert!((m.density_at(0.5) - 3.0 * base.density_at(0.5)).abs() < 1e-12);
    assert!((base.density_at(0.5) - 1.0).abs() < 1e-12);
    assert!(measure_family(&spec, &[1.0]).is_err());
    assert!(measure_family(&spec, &[1.0, 0.0]).is_err());
}
