//! Configurations with positive and negative unit charges.

use std::collections::BTreeMap;

use pathfinding::kuhn_munkres::kuhn_munkres_min;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::domain::{BoxDomain, COINCIDENCE_TOL};
use crate::geom::dist_n;
use crate::{Error, Result};

use super::SolveOptions;

fn ones(n: usize) -> Vec<u64> {
    vec![1; n]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChargedConfig {
    pub positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
    #[serde(default)]
    pub positive_magnitudes: Vec<u64>,
    #[serde(default)]
    pub negative_magnitudes: Vec<u64>,
    /// `None` means all of space: every positive unit must end at a
    /// negative one.
    #[serde(default)]
    pub domain: Option<BoxDomain>,
}

impl ChargedConfig {
    pub fn new(positives: Vec<Vec<f64>>, negatives: Vec<Vec<f64>>, domain: Option<BoxDomain>) -> Self {
        ChargedConfig { positive_magnitudes: ones(positives.len()), negative_magnitudes: ones(negatives.len()), positives, negatives, domain }
    }

    fn mags(&self) -> (Vec<u64>, Vec<u64>) {
        let p = if self.positive_magnitudes.is_empty() { ones(self.positives.len()) } else { self.positive_magnitudes.clone() };
        let n = if self.negative_magnitudes.is_empty() { ones(self.negatives.len()) } else { self.negative_magnitudes.clone() };
        (p, n)
    }

    pub fn validate(&self) -> Result<()> {
        let (pm, nm) = self.mags();
        if pm.len() != self.positives.len() || nm.len() != self.negatives.len() {
            return Err(Error::input("magnitude list length does not match the point list"));
        }
        if pm.iter().chain(&nm).any(|&m| m == 0) {
            return Err(Error::input("charge magnitudes must be at least 1"));
        }
        let all: Vec<&Vec<f64>> = self.positives.iter().chain(&self.negatives).collect();
        let dim = all.first().map_or(0, |p| p.len());
        for (i, p) in all.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::input("mixed point dimensions"));
            }
            if all[..i].iter().any(|q| dist_n(p, q) <= COINCIDENCE_TOL) {
                return Err(Error::input("charged points must be distinct"));
            }
        }
        match &self.domain {
            None => {
                if pm.iter().sum::<u64>() != nm.iter().sum::<u64>() {
                    return Err(Error::input("free-space configuration is unbalanced"));
                }
            }
            Some(d) => {
                if dim != 0 && d.dim() != dim {
                    return Err(Error::input("point dimension does not match the domain"));
                }
                if all.iter().any(|p| !d.contains(p, 0.0)) {
                    return Err(Error::input("charged point outside the domain"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChargedEdge {
    pub tail: usize,
    pub head: usize,
    pub d: u64,
}

/// A graph whose vertices carry signed charges: at every vertex off the
/// boundary, outflow minus inflow equals the charge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChargedGraph {
    pub vertices: Vec<Vec<f64>>,
    pub charges: Vec<i64>,
    pub edges: Vec<ChargedEdge>,
    pub domain: Option<BoxDomain>,
}

impl ChargedGraph {
    pub fn vertex(&mut self, p: &[f64]) -> usize {
        if let Some(i) = self.vertices.iter().position(|q| dist_n(p, q) <= COINCIDENCE_TOL) {
            return i;
        }
        self.vertices.push(p.to_vec());
        self.charges.push(0);
        self.vertices.len() - 1
    }

    fn on_boundary(&self, v: usize) -> bool {
        self.domain.as_ref().is_some_and(|d| d.on_boundary(&self.vertices[v]))
    }

    /// Returns the list of problems; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut net = vec![0i64; self.vertices.len()];
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.tail >= self.vertices.len() || e.head >= self.vertices.len() {
                out.push(format!("edge {}->{} has an unknown endpoint", e.tail, e.head));
                continue;
            }
            if e.d == 0 {
                out.push(format!("edge {}->{} has zero multiplicity", e.tail, e.head));
            }
            if dist_n(&self.vertices[e.tail], &self.vertices[e.head]) <= COINCIDENCE_TOL {
                out.push(format!("edge {}->{} has zero length", e.tail, e.head));
            }
            if seen.contains(&(e.head, e.tail)) {
                out.push(format!("edge {}->{} is anti-parallel", e.tail, e.head));
            }
            seen.insert((e.tail, e.head));
            net[e.tail] += e.d as i64;
            net[e.head] -= e.d as i64;
        }
        for v in 0..self.vertices.len() {
            if !self.on_boundary(v) && net[v] != self.charges[v] {
                out.push(format!("vertex {v}: net outflow {} but charge {}", net[v], self.charges[v]));
            }
        }
        out
    }

    pub fn weighted_length(&self, model: &CostModel) -> f64 {
        self.edges.iter().map(|e| model.cost(e.d) * dist_n(&self.vertices[e.tail], &self.vertices[e.head])).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChargedSolution {
    pub graph: ChargedGraph,
    pub value: f64,
    pub method: String,
}

const FORBIDDEN: i64 = 1 << 50;
const SCALE: f64 = 1e9;

/// Optimal unit-to-unit assignment (with boundary exits and entries when a
/// domain is given), routed along straight segments.
pub fn solve_charged(config: &ChargedConfig, model: &CostModel, options: &SolveOptions) -> Result<ChargedSolution> {
    options.check()?;
    config.validate()?;
    let (pm, nm) = config.mags();
    let pu: Vec<usize> = pm.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat(i).take(m as usize)).collect();
    let nu: Vec<usize> = nm.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat(i).take(m as usize)).collect();
    if pu.len() + nu.len() > 2000 {
        return Err(Error::resource("too many charge units for the assignment solver"));
    }
    let dom = config.domain.as_ref();
    let bdist = |p: &[f64]| dom.map_or(f64::INFINITY, |d| d.dist_to_boundary_unchecked(p));
    // Rows: positive units, then one boundary entry per negative unit.
    // Columns: negative units, then one boundary exit per positive unit.
    let (np, nn) = (pu.len(), nu.len());
    let size = if dom.is_some() { np + nn } else { np };
    let scaled = |x: f64| if x.is_finite() { (x * SCALE).round() as i64 } else { FORBIDDEN };
    let mut w = Matrix::new(size, size, 0i64);
    for r in 0..size {
        for c in 0..size {
            let v = match (r < np, c < nn) {
                (true, true) => dist_n(&config.positives[pu[r]], &config.negatives[nu[c]]),
                (true, false) => {
                    if c - nn == r {
                        bdist(&config.positives[pu[r]])
                    } else {
                        f64::INFINITY
                    }
                }
                (false, true) => {
                    if r - np == c {
                        bdist(&config.negatives[nu[c]])
                    } else {
                        f64::INFINITY
                    }
                }
                (false, false) => 0.0,
            };
            w[(r, c)] = scaled(v);
        }
    }
    let (_, assign) = if size == 0 { (0, Vec::new()) } else { kuhn_munkres_min(&w) };
    let mut g = ChargedGraph { vertices: Vec::new(), charges: Vec::new(), edges: Vec::new(), domain: config.domain.clone() };
    for (i, p) in config.positives.iter().enumerate() {
        let v = g.vertex(p);
        g.charges[v] += pm[i] as i64;
    }
    for (i, p) in config.negatives.iter().enumerate() {
        let v = g.vertex(p);
        g.charges[v] -= nm[i] as i64;
    }
    let mut flows: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (r, &c) in assign.iter().enumerate() {
        let (a, b) = match (r < np, c < nn) {
            (true, true) => (config.positives[pu[r]].clone(), config.negatives[nu[c]].clone()),
            (true, false) => {
                let p = &config.positives[pu[r]];
                (p.clone(), dom.expect("boundary slot").nearest_boundary_point(p))
            }
            (false, true) => {
                let p = &config.negatives[nu[c]];
                (dom.expect("boundary slot").nearest_boundary_point(p), p.clone())
            }
            (false, false) => continue,
        };
        if w[(r, c)] >= FORBIDDEN {
            return Err(Error::numerical("assignment used a forbidden pairing"));
        }
        if dist_n(&a, &b) <= COINCIDENCE_TOL {
            continue;
        }
        let (t, h) = (g.vertex(&a), g.vertex(&b));
        *flows.entry((t, h)).or_default() += 1;
    }
    for (&(t, h), &d) in &flows {
        g.edges.push(ChargedEdge { tail: t, head: h, d });
    }
    let bad = g.violations();
    if let Some(b) = bad.first() {
        return Err(Error::numerical(format!("charged construction is invalid: {b}")));
    }
    let value = g.weighted_length(model);
    Ok(ChargedSolution { graph: g, value, method: "assignment".into() })
}
