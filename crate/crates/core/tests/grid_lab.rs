use branchlink::bounds::certified_grid_bound;
use branchlink::grid_lab::*;
use branchlink::solver::SolveOptions;

#[test]
fn budget_constant_normalizes_the_radii() {
    let c = budget_constant();
    let direct: f64 = (2..=200_000u64).map(|i| {
        let x = i as f64;
        1.0 / (x.powi(4) * x.ln().powi(2))
    }).sum();
    assert!((8.0 * c * direct - 1.0).abs() < 1e-12);
}

#[test]
fn budget_partial_sums_match_naive() {
    let b = budget_series(1000).unwrap();
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for i in 2..=1000u64 {
        let x = i as f64;
        let r = b.c / (x.powi(4) * x.ln().powi(2));
        s1 += r;
        s2 += r * x.powi(3);
        s3 += r * x.powi(3) * x.ln();
    }
    for (got, want) in [(b.s1, s1), (b.s2, s2), (b.s3, s3)] {
        assert!((got / want - 1.0).abs() < 1e-12);
    }
    assert!(b.s3 >= b.s3_lower);
    assert!((b.s1 - 1.0 / 8.0).abs() < 1e-6);
    assert!(budget_series(1).is_err());
}

#[test]
fn singularity_lattice_sizes() {
    let opts = SolveOptions { iterations: 0, ..SolveOptions::default() };
    for k in 1..=3 {
        let r = singularity_grid(k, &opts).unwrap();
        assert_eq!(r.points.len() as u64, k.pow(4));
        assert!(r.lower <= r.upper);
        assert!(r.points.iter().all(|p| p.iter().all(|&x| (0.5 - SINGULAR_BOX / 2.0..=0.5 + SINGULAR_BOX / 2.0).contains(&x))));
    }
    assert!(singularity_grid(0, &opts).is_err());
}

#[test]
fn scaling_rows_and_csv() {
    let opts = SolveOptions { iterations: 20, ..SolveOptions::default() };
    let r = run_scaling(2, 0.5, &[2, 4, 8], &opts).unwrap();
    assert_eq!(r.rows.len(), 3);
    for row in &r.rows {
        assert!(row.lower <= row.upper);
        assert!(row.lower >= certified_grid_bound(2, row.k, 0.5).unwrap().lambda);
        assert!((row.xi_upper - row.upper / (row.k as f64)).abs() < 1e-12);
    }
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("2,0.5,2,"));
    let path = std::env::temp_dir().join(format!("grid_lab_{}.csv", std::process::id()));
    emit_csv(&r, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), csv);
    let _ = std::fs::remove_file(&path);
    assert!(run_scaling(2, 0.5, &[4, 2], &opts).is_err());
    assert!(run_scaling(2, 0.5, &[400], &opts).is_err());
}
