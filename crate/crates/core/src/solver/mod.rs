//! Upper-bound constructions for the boundary connection cost, plus the
//! charged variant and an exact lattice oracle for tiny instances.

mod charged;
mod oracle;
mod tree;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::cost::CostModel;
use crate::domain::BoxDomain;
use crate::graph::TransportGraph;
use crate::{par, Error, Result};

pub use charged::{solve_charged, ChargedConfig, ChargedGraph, ChargedSolution};
pub use oracle::{lattice_oracle, Lattice, OracleResult, MAX_RES, MAX_SOURCES};
pub use tree::{improve, Forest, SearchParams};

/// Local search is skipped above this many sources.
pub const LOCAL_SEARCH_LIMIT: usize = 5000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub seed: u64,
    pub resolution: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { seed: 0, resolution: 9, iterations: 200, restarts: 1, tol: 1e-9 }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::input("resolution must be at least 2"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::input("tolerance must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    pub graph: TransportGraph,
    pub value: f64,
    pub method: String,
    pub lower: Option<f64>,
}

impl Solution {
    fn from_forest(f: &Forest, model: &CostModel, method: &str) -> Result<Solution> {
        let graph = f.to_graph()?;
        let value = graph.weighted_length(|d| model.cost(d));
        Ok(Solution { graph, value, method: method.to_string(), lower: None })
    }
}

fn check_points(points: &[Vec<f64>], domain: &BoxDomain) -> Result<()> {
    for p in points {
        if p.len() != domain.dim() {
            return Err(Error::input("point dimension does not match the domain"));
        }
        if !domain.contains(p, 0.0) {
            return Err(Error::input(format!("point {p:?} lies outside the domain")));
        }
    }
    for (i, p) in points.iter().enumerate() {
        for q in &points[..i] {
            if crate::geom::dist_n(p, q) <= crate::domain::COINCIDENCE_TOL {
                return Err(Error::input("duplicate source points"));
            }
        }
    }
    Ok(())
}

fn star_forest(points: &[Vec<f64>], domain: &BoxDomain) -> Forest {
    Forest::from_sources(domain, points)
}

/// Each source joined straight to its nearest boundary point.
pub fn star_baseline(points: &[Vec<f64>], domain: &BoxDomain, model: &CostModel) -> Result<Solution> {
    check_points(points, domain)?;
    Solution::from_forest(&star_forest(points, domain), model, "star")
}

fn dyadic_forest(points: &[Vec<f64>], domain: &BoxDomain) -> Forest {
    let mut f = Forest::from_sources(domain, points);
    let interior: Vec<usize> = (0..points.len()).filter(|&i| !domain.on_boundary(&points[i])).collect();
    build_cell(&mut f, domain.lo().to_vec(), domain.hi().to_vec(), interior, 0);
    f
}

fn build_cell(f: &mut Forest, lo: Vec<f64>, hi: Vec<f64>, members: Vec<usize>, depth: usize) -> Option<usize> {
    match members.len() {
        0 => return None,
        1 => return Some(members[0]),
        _ => {}
    }
    let m = lo.len();
    let mid: Vec<f64> = (0..m).map(|a| 0.5 * (lo[a] + hi[a])).collect();
    let mut reps = Vec::new();
    if depth >= 64 {
        reps = members;
    } else {
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); 1 << m];
        for &i in &members {
            let c = (0..m).fold(0, |acc, a| acc * 2 + (f.pos[i][a] >= mid[a]) as usize);
            cells[c].push(i);
        }
        for (c, mem) in cells.into_iter().enumerate() {
            let (mut clo, mut chi) = (lo.clone(), hi.clone());
            for a in 0..m {
                if (c >> (m - 1 - a)) & 1 == 1 {
                    clo[a] = mid[a];
                } else {
                    chi[a] = mid[a];
                }
            }
            if let Some(r) = build_cell(f, clo, chi, mem, depth + 1) {
                reps.push(r);
            }
        }
    }
    let dist_mid = |f: &Forest, i: usize| (0..m).map(|a| (f.pos[i][a] - mid[a]).powi(2)).sum::<f64>();
    let rep = *reps.iter().min_by(|&&a, &&b| dist_mid(f, a).total_cmp(&dist_mid(f, b)).then(a.cmp(&b)))?;
    for r in reps {
        if r != rep {
            f.reparent(r, Some(rep));
        }
    }
    Some(rep)
}

/// Hierarchical aggregation on the dyadic cube tree of the box.
pub fn dyadic_construction(points: &[Vec<f64>], domain: &BoxDomain, model: &CostModel) -> Result<Solution> {
    check_points(points, domain)?;
    Solution::from_forest(&dyadic_forest(points, domain), model, "dyadic")
}

fn search_all(start: &Forest, model: &CostModel, options: &SolveOptions) -> Forest {
    let params = SearchParams { kicks: options.iterations, ..SearchParams::default() };
    let restarts = options.restarts.max(1);
    let runs = par::map_range(restarts, |r| {
        let order = Some((options.seed, r as u64));
        let f = tree::improve(start, model, params, order);
        let v = f.total(model);
        (v, f)
    });
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 < runs[best].0 {
            best = i;
        }
    }
    runs.into_iter().nth(best).expect("at least one restart").1
}

/// Improves an in-forest solution by branch insertion, relocation,
/// splicing and rerouting moves.
pub fn local_search(start: &Solution, model: &CostModel, options: &SolveOptions) -> Result<Solution> {
    options.check()?;
    let r = start.graph.validate();
    if !r.is_valid() {
        return Err(Error::input(format!("invalid start graph: {:?}", r.violations.first())));
    }
    let f = Forest::from_graph(&start.graph)?;
    let out = search_all(&f, model, options);
    let sol = Solution::from_forest(&out, model, &format!("local_search({})", start.method))?;
    if sol.value > start.value {
        return Ok(Solution { method: sol.method, ..start.clone() });
    }
    Ok(sol)
}

/// Best of star, dyadic and their local-search refinements, with the
/// point-set lower bound attached.
pub fn solve_brbd(points: &[Vec<f64>], domain: &BoxDomain, model: &CostModel, options: &SolveOptions) -> Result<Solution> {
    check_points(points, domain)?;
    options.check()?;
    let star = star_forest(points, domain);
    let dy = dyadic_forest(points, domain);
    let mut cands = vec![(star.clone(), "star"), (dy.clone(), "dyadic")];
    if points.len() <= LOCAL_SEARCH_LIMIT && options.iterations > 0 {
        cands.push((search_all(&star, model, options), "local_search(star)"));
        cands.push((search_all(&dy, model, options), "local_search(dyadic)"));
    }
    let mut best: Option<Solution> = None;
    for (f, name) in &cands {
        let s = Solution::from_forest(f, model, name)?;
        if best.as_ref().map_or(true, |b| s.value < b.value) {
            best = Some(s);
        }
    }
    let mut best = best.expect("candidates");
    let lower = bounds::point_set_lower_bound(points, domain, model)?;
    best.lower = Some(lower);
    Ok(best)
}

/// Exact optimum over lattice routings.
pub fn oracle_exact(points: &[Vec<f64>], domain: &BoxDomain, model: &CostModel, options: &SolveOptions) -> Result<f64> {
    check_points(points, domain)?;
    Ok(lattice_oracle(domain, points, model, options.resolution)?.value)
}
