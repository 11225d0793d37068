mod common;

use branchlink::bounds::point_set_lower_bound;
use branchlink::cost::CostModel;
use branchlink::domain::BoxDomain;
use branchlink::solver::{dyadic_construction, lattice_oracle, local_search, solve_brbd, solve_charged, star_baseline, ChargedConfig, SolveOptions};
use proptest::prelude::*;
use rand::Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn to_boundary(p: &[f64]) -> f64 {
    p.iter().map(|&x| x.min(1.0 - x)).fold(f64::INFINITY, f64::min)
}

/// Best two-source routing in the unit square by exhaustion of the in-tree
/// topologies: separate exits, one source through the other, or a Y with
/// the branch point found by grid search and coordinate refinement.
fn two_source_optimum(a: &[f64], b: &[f64], alpha: f64) -> f64 {
    let c2 = 2f64.powf(alpha);
    let mut best = (to_boundary(a) + to_boundary(b)).min(dist(a, b) + c2 * to_boundary(b)).min(dist(a, b) + c2 * to_boundary(a));
    let y = |s: &[f64]| dist(a, s) + dist(b, s) + c2 * to_boundary(s);
    let n = 200;
    let mut s = [0.5, 0.5];
    for i in 0..=n {
        for j in 0..=n {
            let t = [i as f64 / n as f64, j as f64 / n as f64];
            if y(&t) < y(&s) {
                s = t;
            }
        }
    }
    let mut step = 1.0 / n as f64;
    while step > 1e-10 {
        let mut moved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let t = [(s[0] + dx * step).clamp(0.0, 1.0), (s[1] + dy * step).clamp(0.0, 1.0)];
            if y(&t) < y(&s) {
                s = t;
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best = best.min(y(&s));
    best
}

#[test]
fn single_source_goes_straight_out() {
    let d = BoxDomain::unit(2).unwrap();
    let m = CostModel::power_law(0.5).unwrap();
    let s = solve_brbd(&[vec![0.3, 0.6]], &d, &m, &SolveOptions::default()).unwrap();
    assert!((s.value - 0.3).abs() < 1e-12);
    assert!((s.lower.unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn two_sources_match_exhaustive_topologies() {
    let d = BoxDomain::unit(2).unwrap();
    let mut r = common::rng(7);
    for alpha in [0.5, 0.75] {
        let m = CostModel::power_law(alpha).unwrap();
        for _ in 0..20 {
            let pts = common::random_points(&mut r, 2, 2, 0.1, 0.9);
            let want = two_source_optimum(&pts[0], &pts[1], alpha);
            let got = solve_brbd(&pts, &d, &m, &SolveOptions::default()).unwrap().value;
            assert!(got >= want - 1e-9, "{pts:?}: solver {got} below the optimum {want}");
            assert!(got <= want * (1.0 + 1e-6), "{pts:?}: solver {got} vs optimum {want}");
        }
    }
}

#[test]
fn lattice_oracle_brackets() {
    let d = BoxDomain::unit(2).unwrap();
    let m = CostModel::power_law(0.5).unwrap();
    let pts = vec![vec![0.375, 0.5], vec![0.625, 0.5]];
    let oracle = lattice_oracle(&d, &pts, &m, 9).unwrap();
    assert!(oracle.graph.validate().is_valid());
    let opt = two_source_optimum(&pts[0], &pts[1], 0.5);
    assert!(oracle.value >= opt - 1e-9);
    assert!((oracle.value - oracle.graph.weighted_length(|k| m.cost(k))).abs() < 1e-9);
    // Both sources straight down merge at (0.5, 0.375) on the 16-direction lattice.
    assert!(oracle.value <= 2.0 * (0.125f64 * 0.125 * 2.0).sqrt() + 2f64.sqrt() * 0.375 + 1e-9);
    assert!(lattice_oracle(&d, &[vec![0.3, 0.3]], &m, 9).is_err());
    assert!(lattice_oracle(&d, &pts, &m, 10).is_err());
}

#[test]
fn one_dimensional_oracle_is_exact() {
    let d = BoxDomain::unit(1).unwrap();
    let m = CostModel::power_law(0.5).unwrap();
    // Sources at 1/4 and 3/8 both exit left, sharing [0, 1/4].
    let o = lattice_oracle(&d, &[vec![0.25], vec![0.375]], &m, 9).unwrap();
    assert!((o.value - (0.125 + 2f64.sqrt() * 0.25)).abs() < 1e-12);
}

/// Cheapest matching of unit charges with straight unit edges, allowing
/// boundary exits and entries, by enumeration of partial matchings.
fn charged_brute(pos: &[Vec<f64>], neg: &[Vec<f64>], box_exit: bool) -> f64 {
    fn go(i: usize, pos: &[Vec<f64>], neg: &[Vec<f64>], used: &mut Vec<bool>, box_exit: bool) -> f64 {
        if i == pos.len() {
            let mut rest = 0.0;
            for (j, n) in neg.iter().enumerate() {
                if !used[j] {
                    if !box_exit {
                        return f64::INFINITY;
                    }
                    rest += to_boundary(n);
                }
            }
            return rest;
        }
        let mut best = if box_exit { to_boundary(&pos[i]) + go(i + 1, pos, neg, used, box_exit) } else { f64::INFINITY };
        for j in 0..neg.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(dist(&pos[i], &neg[j]) + go(i + 1, pos, neg, used, box_exit));
                used[j] = false;
            }
        }
        best
    }
    go(0, pos, neg, &mut vec![false; neg.len()], box_exit)
}

#[test]
fn charged_matches_enumeration() {
    let m = CostModel::power_law(0.75).unwrap();
    let mut r = common::rng(11);
    for case in 0..40 {
        let pos = common::random_points(&mut r, 2, 2, 0.05, 0.95);
        let neg = common::random_points(&mut r, 2, 2, 0.05, 0.95);
        for boxed in [false, true] {
            let domain = boxed.then(|| BoxDomain::unit(2).unwrap());
            let cfg = ChargedConfig::new(pos.clone(), neg.clone(), domain);
            let s = solve_charged(&cfg, &m, &SolveOptions::default()).unwrap();
            assert!(s.graph.violations().is_empty());
            let want = charged_brute(&pos, &neg, boxed);
            assert!((s.value - want).abs() < 1e-6, "case {case} boxed {boxed}: {} vs {want}", s.value);
        }
    }
    let unbalanced = ChargedConfig::new(vec![vec![0.1, 0.1]], vec![], None);
    assert!(solve_charged(&unbalanced, &m, &SolveOptions::default()).is_err());
}

#[test]
fn solve_is_deterministic_per_seed() {
    let d = BoxDomain::unit(2).unwrap();
    let m = CostModel::power_law(0.75).unwrap();
    let mut r = common::rng(3);
    let pts = common::random_points(&mut r, 2, 25, 0.0, 1.0);
    let opts = SolveOptions { seed: 42, restarts: 3, ..SolveOptions::default() };
    let a = serde_json::to_string(&solve_brbd(&pts, &d, &m, &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&solve_brbd(&pts, &d, &m, &opts).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn values_scale_linearly_with_the_instance() {
    let d = BoxDomain::unit(2).unwrap();
    let m = CostModel::power_law(0.6).unwrap();
    let mut r = common::rng(11);
    let pts = common::random_points(&mut r, 2, 12, 0.0, 1.0);
    let opts = SolveOptions { seed: 5, iterations: 60, ..SolveOptions::default() };
    for s in [0.5, 3.0, 40.0] {
        let sd = BoxDomain::new(vec![0.0; 2], vec![s; 2]).unwrap();
        let sp: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * s).collect()).collect();
        let close = |a: f64, b: f64, tol: f64| assert!((a * s - b).abs() <= tol * b, "s={s}: {} vs {b}", a * s);
        close(star_baseline(&pts, &d, &m).unwrap().value, star_baseline(&sp, &sd, &m).unwrap().value, 1e-12);
        close(dyadic_construction(&pts, &d, &m).unwrap().value, dyadic_construction(&sp, &sd, &m).unwrap().value, 1e-12);
        close(solve_brbd(&pts, &d, &m, &opts).unwrap().value, solve_brbd(&sp, &sd, &m, &opts).unwrap().value, 1e-6);
    }
}

#[test]
fn rejects_bad_input() {
    let d = BoxDomain::unit(2).unwrap();
    let m = CostModel::power_law(0.75).unwrap();
    let o = SolveOptions::default();
    assert!(solve_brbd(&[vec![1.5, 0.5]], &d, &m, &o).is_err());
    assert!(solve_brbd(&[vec![0.5, 0.5], vec![0.5, 0.5]], &d, &m, &o).is_err());
    assert!(solve_brbd(&[vec![0.5, 0.5, 0.5]], &d, &m, &o).is_err());
    assert!(solve_brbd(&[vec![0.5, 0.5]], &d, &m, &SolveOptions { resolution: 1, ..o }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bounds_sandwich_constructions(seed in 0u64..1_000_000, n in 1usize..12, alpha in 0.3f64..1.0) {
        let mut r = common::rng(seed);
        let dim = r.gen_range(2..=3);
        let d = BoxDomain::unit(dim).unwrap();
        let m = CostModel::power_law(alpha).unwrap();
        let pts = common::random_points(&mut r, dim, n, 0.0, 1.0);
        let o = SolveOptions { seed, iterations: 30, ..SolveOptions::default() };
        let star = star_baseline(&pts, &d, &m).unwrap();
        let ls = local_search(&star, &m, &o).unwrap();
        let best = solve_brbd(&pts, &d, &m, &o).unwrap();
        let lower = point_set_lower_bound(&pts, &d, &m).unwrap();
        prop_assert!(ls.graph.validate().is_valid());
        prop_assert!(ls.value <= star.value + 1e-12);
        prop_assert!(best.value <= star.value + 1e-12);
        prop_assert!(lower <= best.value + 1e-9 && lower <= ls.value + 1e-9);
        prop_assert!((best.value - best.graph.weighted_length(|k| m.cost(k))).abs() < 1e-9);
    }
}
