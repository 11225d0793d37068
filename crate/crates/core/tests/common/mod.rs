#![allow(dead_code)]

use branchlink::domain::BoxDomain;
use branchlink::graph::{graph_from_segments, TransportGraph};
use branchlink::solver::Forest;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, dim: usize, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(lo..hi)).collect()).collect()
}

/// Random in-forest on `sources` plus a few branch nodes; each node either
/// exits straight to the boundary or hangs under an earlier node.
pub fn random_forest(rng: &mut ChaCha8Rng, domain: &BoxDomain, sources: &[Vec<f64>]) -> TransportGraph {
    let dim = domain.dim();
    let mut f = Forest::from_sources(domain, sources);
    let extra = rng.gen_range(0..3);
    for p in random_points(rng, dim, extra, 0.05, 0.95) {
        f.push(&p, false);
    }
    let n = f.pos.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for (slot, &v) in order.iter().enumerate() {
        if slot > 0 && rng.gen_bool(0.6) {
            let p = order[rng.gen_range(0..slot)];
            f.reparent(v, Some(p));
        }
    }
    f.to_graph().expect("forest graph")
}

/// A directed triangle of unit multiplicity inside the box.
pub fn random_cycle(rng: &mut ChaCha8Rng, domain: &BoxDomain) -> TransportGraph {
    let p = random_points(rng, domain.dim(), 3, 0.05, 0.95);
    let segs = vec![(p[0].clone(), p[1].clone(), 1), (p[1].clone(), p[2].clone(), 1), (p[2].clone(), p[0].clone(), 1)];
    graph_from_segments(domain, &segs, &[]).expect("cycle")
}

/// Two graphs on disjoint random sources, the second possibly carrying an
/// extra cycle.
pub fn random_pair(seed: u64) -> (TransportGraph, TransportGraph) {
    let mut r = rng(seed);
    let dim = r.gen_range(2..=3);
    let domain = BoxDomain::unit(dim).unwrap();
    let n = r.gen_range(1..=6);
    let m = r.gen_range(1..=6);
    let all = random_points(&mut r, dim, n + m, 0.05, 0.95);
    let a = random_forest(&mut r, &domain, &all[..n]);
    let mut b = random_forest(&mut r, &domain, &all[n..]);
    if r.gen_bool(0.3) {
        b = b.glue(&random_cycle(&mut r, &domain)).unwrap();
    }
    (a, b)
}

/// Outcome of the four graph-calculus checks on one random instance.
pub fn graph_calculus_check(seed: u64) -> Result<(), String> {
    let (a, b) = random_pair(seed);
    for g in [&a, &b] {
        if !g.validate().is_valid() {
            return Err(format!("seed {seed}: generated graph invalid: {:?}", g.validate().violations));
        }
        if g.boundary_flux() != g.source_count() as i64 {
            return Err(format!("seed {seed}: boundary flux {} for {} sources", g.boundary_flux(), g.source_count()));
        }
    }
    let ab = a.glue(&b).map_err(|e| format!("seed {seed}: glue {e}"))?;
    if !ab.validate().is_valid() {
        return Err(format!("seed {seed}: glued graph invalid"));
    }
    if ab.boundary_flux() != (a.source_count() + b.source_count()) as i64 {
        return Err(format!("seed {seed}: glued flux"));
    }
    let back = ab.subtract(&b).map_err(|e| format!("seed {seed}: subtract {e}"))?;
    if !back.same_as(&a) {
        return Err(format!("seed {seed}: glue/subtract round trip differs"));
    }
    let dec = ab.decompose().map_err(|e| format!("seed {seed}: decompose {e}"))?;
    if dec.threads.len() != ab.source_count() {
        return Err(format!("seed {seed}: {} threads for {} sources", dec.threads.len(), ab.source_count()));
    }
    for (s, t) in &dec.threads {
        if t.vertices.first() != Some(s) || !ab.is_boundary_vertex(*t.vertices.last().unwrap()) {
            return Err(format!("seed {seed}: thread does not run from its source to the boundary"));
        }
    }
    let re = ab.reglue(&dec).map_err(|e| format!("seed {seed}: reglue {e}"))?;
    if !re.same_as(&ab) {
        return Err(format!("seed {seed}: decompose/reglue differs"));
    }
    Ok(())
}
