use branchlink_demo::{hopf_json, sheaves_json, solve_json, DEMO_MAX_K};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn sheaf_totals_are_fourth_powers() {
    for k in 1..=3usize {
        let v = parse(sheaves_json(k).unwrap());
        assert_eq!(v["total_linking"].as_i64(), Some((k as i64).pow(4)));
        assert_eq!(v["horizontal"].as_array().unwrap().len(), k * k);
        assert_eq!(v["perpendicular"].as_array().unwrap().len(), k * k);
        let first = &v["horizontal"][0];
        assert!(first.as_array().unwrap().len() >= 8);
        assert_eq!(first[0].as_array().unwrap().len(), 3);
    }
    assert!(sheaves_json(0).is_err());
    assert!(sheaves_json(DEMO_MAX_K + 1).is_err());
}

#[test]
fn single_point_goes_to_nearest_side() {
    let v = parse(solve_json("[[0.3, 0.55]]", 0.5, 1, 10).unwrap());
    assert!((v["value"].as_f64().unwrap() - 0.3).abs() < 1e-12, "{v}");
    let e = &v["edges"][0];
    assert_eq!(e["d"], 1);
    assert!((e["to"][0].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn solve_bounds_are_ordered_and_edges_drawable() {
    let pts = "[[0.2,0.2],[0.25,0.3],[0.7,0.6],[0.5,0.5],[0.45,0.52]]";
    let v = parse(solve_json(pts, 0.5, 3, 40).unwrap());
    let (lo, up) = (v["lower"].as_f64().unwrap(), v["value"].as_f64().unwrap());
    assert!(0.0 < lo && lo <= up);
    // Total flux leaving through the boundary equals the number of points.
    let out: u64 = v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["to"].as_array().unwrap().iter().any(|c| c.as_f64().unwrap() <= 1e-12 || c.as_f64().unwrap() >= 1.0 - 1e-12))
        .map(|e| e["d"].as_u64().unwrap())
        .sum();
    assert_eq!(out, 5);
}

#[test]
fn solve_rejects_bad_input() {
    assert!(solve_json("not json", 0.5, 0, 10).is_err());
    assert!(solve_json("[]", 0.5, 0, 10).is_err());
    assert!(solve_json("[[0.5,0.5]]", 1.5, 0, 10).is_err());
    assert!(solve_json("[[1.5,0.5]]", 0.5, 0, 10).is_err());
}

#[test]
fn hopf_preimages_of_the_hopf_map() {
    let v = parse(hopf_json("hopfmap", 32).unwrap());
    assert_eq!(v["hopf"].as_i64().map(i64::abs), Some(1));
    let fams = v["preimages"].as_array().unwrap();
    assert_eq!(fams.len(), 2);
    assert!(fams.iter().all(|f| !f.as_array().unwrap().is_empty()));
    assert!(hopf_json("nope", 32).is_err());
    assert!(hopf_json("hopfmap", 4).is_err());
    assert!(hopf_json("hopfmap", 1000).is_err());
}
