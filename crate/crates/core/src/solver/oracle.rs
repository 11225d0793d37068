//! Exact optimum over routings restricted to a lattice, by dynamic
//! programming over source subsets (Steiner-tree style) with edge cost
//! `cost(|S|) * length` for the subset `S` carried.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cost::CostModel;
use crate::domain::BoxDomain;
use crate::graph::TransportGraph;
use crate::{Error, Result};

pub const MAX_SOURCES: usize = 3;
pub const MAX_RES: usize = 9;

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

pub struct Lattice {
    pub res: usize,
    pub dim: usize,
    pub coords: Vec<Vec<f64>>,
    pub boundary: Vec<bool>,
    pub adj: Vec<Vec<(usize, f64)>>,
}

fn offsets(dim: usize) -> Vec<Vec<i64>> {
    match dim {
        1 => vec![vec![1], vec![-1]],
        _ => {
            let mut v = Vec::new();
            for a in -2i64..=2 {
                for b in -2i64..=2 {
                    let g = gcd(a.unsigned_abs(), b.unsigned_abs());
                    if (a, b) != (0, 0) && g == 1 {
                        v.push(vec![a, b]);
                    }
                }
            }
            v
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Lattice {
    pub fn new(domain: &BoxDomain, res: usize) -> Result<Lattice> {
        let dim = domain.dim();
        if dim > 2 {
            return Err(Error::input("lattice oracle supports dimension 1 or 2"));
        }
        if !(2..=MAX_RES).contains(&res) {
            return Err(Error::resource(format!("lattice resolution must be in 2..={MAX_RES}")));
        }
        let n = res.pow(dim as u32);
        let idx = |i: usize| -> Vec<usize> { (0..dim).rev().map(|a| (i / res.pow(a as u32)) % res).collect() };
        let mut coords = Vec::with_capacity(n);
        let mut boundary = Vec::with_capacity(n);
        for i in 0..n {
            let ix = idx(i);
            coords.push((0..dim).map(|a| domain.lo()[a] + (domain.hi()[a] - domain.lo()[a]) * ix[a] as f64 / (res - 1) as f64).collect::<Vec<_>>());
            boundary.push(ix.iter().any(|&t| t == 0 || t == res - 1));
        }
        let offs = offsets(dim);
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            let ix = idx(i);
            for o in &offs {
                let j: Option<Vec<usize>> = (0..dim)
                    .map(|a| {
                        let t = ix[a] as i64 + o[a];
                        (0..res as i64).contains(&t).then_some(t as usize)
                    })
                    .collect();
                if let Some(j) = j {
                    let jj = j.iter().fold(0, |acc, &t| acc * res + t);
                    let len = crate::geom::dist_n(&coords[i], &coords[jj]);
                    adj[i].push((jj, len));
                }
            }
        }
        Ok(Lattice { res, dim, coords, boundary, adj })
    }

    pub fn node_of(&self, p: &[f64]) -> Option<usize> {
        self.coords.iter().position(|c| crate::geom::dist_n(c, p) <= 1e-9)
    }
}

pub struct OracleResult {
    pub value: f64,
    pub graph: TransportGraph,
}

/// Exact lattice optimum. Sources must be lattice nodes.
pub fn lattice_oracle(domain: &BoxDomain, sources: &[Vec<f64>], model: &CostModel, res: usize) -> Result<OracleResult> {
    if sources.len() > MAX_SOURCES {
        return Err(Error::resource(format!("lattice oracle handles at most {MAX_SOURCES} sources")));
    }
    let lat = Lattice::new(domain, res)?;
    let mut terms = Vec::new();
    let mut g = TransportGraph::new(domain.clone());
    for s in sources {
        let v = lat.node_of(s).ok_or_else(|| Error::input("oracle sources must lie on lattice nodes"))?;
        let id = g.find_or_add_vertex(s)?;
        g.mark_source(id)?;
        if !lat.boundary[v] {
            if terms.contains(&v) {
                return Err(Error::input("duplicate source"));
            }
            terms.push(v);
        }
    }
    let t = terms.len();
    let n = lat.coords.len();
    let full = 1usize << t;
    let mut c = vec![vec![f64::INFINITY; n]; full];
    // back[S][v]: None = leaf, Some(Ok(u)) = edge v<-u... stored as predecessor on
    // the path toward the sources, Some(Err(s1)) = split.
    let mut back: Vec<Vec<Option<std::result::Result<usize, usize>>>> = vec![vec![None; n]; full];
    for (i, &v) in terms.iter().enumerate() {
        c[1 << i][v] = 0.0;
    }
    for s in 1..full {
        let w = model.cost(s.count_ones() as u64);
        for v in 0..n {
            let mut s1 = (s - 1) & s;
            while s1 > 0 {
                if s1 < (s ^ s1) {
                    let val = c[s1][v] + c[s ^ s1][v];
                    if val < c[s][v] {
                        c[s][v] = val;
                        back[s][v] = Some(Err(s1));
                    }
                }
                s1 = (s1 - 1) & s;
            }
        }
        let mut heap: BinaryHeap<Item> = (0..n).filter(|&v| c[s][v].is_finite()).map(|v| Item(c[s][v], v)).collect();
        while let Some(Item(dv, v)) = heap.pop() {
            if dv > c[s][v] {
                continue;
            }
            for &(u, len) in &lat.adj[v] {
                let nd = dv + w * len;
                if nd < c[s][u] - 1e-15 {
                    c[s][u] = nd;
                    back[s][u] = Some(Ok(v));
                    heap.push(Item(nd, u));
                }
            }
        }
    }
    // Best exit per subset, then best partition into exiting blocks.
    let mut exit = vec![(f64::INFINITY, 0usize); full];
    for s in 1..full {
        for v in 0..n {
            if lat.boundary[v] && c[s][v] < exit[s].0 {
                exit[s] = (c[s][v], v);
            }
        }
    }
    let mut part = vec![(f64::INFINITY, 0usize); full];
    part[0] = (0.0, 0);
    for s in 1..full {
        let mut s1 = s;
        while s1 > 0 {
            // Block containing the lowest bit of s.
            if s1 & (s & s.wrapping_neg()) != 0 {
                let val = exit[s1].0 + part[s ^ s1].0;
                if val < part[s].0 {
                    part[s] = (val, s1);
                }
            }
            s1 = (s1 - 1) & s;
        }
    }
    // Rebuild edges with multiplicities.
    let mut mult: std::collections::BTreeMap<(usize, usize), u64> = Default::default();
    let mut stack = Vec::new();
    let mut rest = full - 1;
    while rest > 0 {
        let b = part[rest].1;
        stack.push((b, exit[b].1));
        rest ^= b;
    }
    while let Some((s, v)) = stack.pop() {
        match back[s][v] {
            None => {}
            Some(Ok(u)) => {
                *mult.entry((u, v)).or_default() += s.count_ones() as u64;
                stack.push((s, u));
            }
            Some(Err(s1)) => {
                stack.push((s1, v));
                stack.push((s ^ s1, v));
            }
        }
    }
    // Cancel opposite directions, which can only appear in ties.
    let keys: Vec<_> = mult.keys().copied().collect();
    for (a, b) in keys {
        if a < b {
            if let (Some(&x), Some(&y)) = (mult.get(&(a, b)), mult.get(&(b, a))) {
                let m = x.min(y);
                *mult.get_mut(&(a, b)).unwrap() -= m;
                *mult.get_mut(&(b, a)).unwrap() -= m;
            }
        }
    }
    for (&(a, b), &m) in &mult {
        if m > 0 {
            let ta = g.find_or_add_vertex(&lat.coords[a])?;
            let hb = g.find_or_add_vertex(&lat.coords[b])?;
            g.add_edge(ta, hb, m)?;
        }
    }
    Ok(OracleResult { value: part[full - 1].0, graph: g })
}
