mod common;

use branchlink::curves::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn polygon_disk(n: usize) -> Polyline3 {
    Polyline3::closed((0..n).map(|i| {
        let t = 2.0 * PI * i as f64 / n as f64;
        [t.cos(), t.sin(), 0.0]
    }).collect()).unwrap()
}

/// Signed count of crossings of `c` through the flat region bounded by the
/// counter-clockwise regular `n`-gon in `z = 0`; `None` when some crossing
/// or vertex is too close to call.
fn disk_crossings(n: usize, c: &Polyline3) -> Option<i64> {
    let apothem = (PI / n as f64).cos();
    let inside = |x: f64, y: f64| -> Option<bool> {
        let mut margin = f64::INFINITY;
        for i in 0..n {
            let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            margin = margin.min(apothem - (x * t.cos() + y * t.sin()));
        }
        (margin.abs() > 1e-6).then_some(margin > 0.0)
    };
    let mut total = 0;
    for (a, b) in c.segments() {
        if a[2].abs() < 1e-9 || b[2].abs() < 1e-9 {
            return None;
        }
        if (a[2] > 0.0) == (b[2] > 0.0) {
            continue;
        }
        let s = a[2] / (a[2] - b[2]);
        if inside(a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))? {
            total += if b[2] > a[2] { 1 } else { -1 };
        }
    }
    Some(total)
}

#[test]
fn hopf_link_of_circles() {
    let a = polygon_disk(64);
    let b = Polyline3::closed((0..64).map(|i| {
        let t = 2.0 * PI * (i as f64 + 0.5) / 64.0;
        [1.0 + t.cos(), 0.0, t.sin()]
    }).collect()).unwrap();
    let (l, err) = gauss_linking_int(&a, &b).unwrap();
    assert_eq!(l.abs(), 1);
    assert!(err < 1e-9);
    assert_eq!(Some(l), disk_crossings(64, &b));
    assert_eq!(crossing_linking(&a, &b, DEFAULT_DIRECTION).unwrap(), l);
    assert_eq!(gauss_linking_int(&b, &a).unwrap().0, l);
    assert_eq!(gauss_linking_int(&a, &b.reversed()).unwrap().0, -l);
}

#[test]
fn touching_curves_are_rejected() {
    let a = polygon_disk(8);
    let b = a.translated([0.0, 0.0, 0.0]);
    assert!(gauss_linking(&a, &b).is_err());
    let open = Polyline3::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], false).unwrap();
    assert!(gauss_linking(&a, &open).is_err());
}

#[test]
fn sheaves_link_k_to_the_fourth() {
    for k in 1..=2 {
        let pair = build_sheaves(k).unwrap();
        let s = total_linking(&pair).unwrap();
        assert_eq!(s.total_linking, (k as i64).pow(4));
        assert_eq!(s.crossing_total, (k as i64).pow(4));
        assert!(s.methods_agree && s.max_gauss_error < 1e-3);
        assert!(pair.intra_min_distance() > 0.0 && pair.inter_min_distance() > 0.0);
        assert_eq!(pair.horizontal.len(), k * k);
    }
    assert!(build_sheaves(0).is_err());
    assert!(build_sheaves(MAX_SHEAF_K + 1).is_err());
}

#[test]
fn gadget_curves_link_once_in_every_chart() {
    for pole in gadget_poles(1.0) {
        let (g, c) = gadget_linking(1.0, pole).unwrap();
        assert_eq!(c.abs(), 1, "pole {pole:?}");
        assert!((g - c as f64).abs() < 1e-3, "pole {pole:?}: {g}");
    }
}

#[test]
fn chart_round_trip() {
    let chart = BoundaryChart::new([0.0, 0.0, 1.0, 0.0]).unwrap();
    let mut r = common::rng(5);
    for p in common::random_points(&mut r, 3, 100, -3.0, 3.0) {
        let y = [p[0], p[1], p[2]];
        let back = chart.project(&chart.unproject(y)).unwrap();
        assert!((0..3).all(|i| (back[i] - y[i]).abs() < 1e-9));
    }
}

proptest! {
    #[test]
    fn gauss_matches_disk_count(pts in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 3..10), n in 3usize..12) {
        let disk = polygon_disk(n);
        let c = Polyline3::closed(pts).unwrap();
        prop_assume!(c.check().is_ok() && disk.distance_to(&c) > 1e-3);
        let want = disk_crossings(n, &c);
        prop_assume!(want.is_some());
        let (g, err) = gauss_linking_int(&disk, &c).unwrap();
        prop_assert!(err < 1e-6);
        prop_assert_eq!(g, want.unwrap());
        prop_assert_eq!(crossing_linking(&disk, &c, DEFAULT_DIRECTION).unwrap(), g);
    }

    #[test]
    fn linking_is_invariant_under_translation_of_both(t in prop::array::uniform3(-5.0f64..5.0)) {
        let pair = build_sheaves(1).unwrap();
        let (a, b) = (&pair.horizontal[0], &pair.perpendicular[0]);
        let l = gauss_linking_int(a, b).unwrap().0;
        prop_assert_eq!(gauss_linking_int(&a.translated(t), &b.translated(t)).unwrap().0, l);
    }
}
