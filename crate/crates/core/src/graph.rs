//! Directed geometric graphs with integer multiplicities routing unit
//! charges from a source set to the boundary of a box.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{BoxDomain, COINCIDENCE_TOL};
use crate::geom::dist_n;
use crate::{Error, Result};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub d: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportGraph {
    domain: BoxDomain,
    vertices: BTreeMap<VertexId, Vec<f64>>,
    /// Keyed by `(tail, head)`.
    edges: BTreeMap<(VertexId, VertexId), u64>,
    sources: BTreeSet<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Unbalanced { vertex: VertexId, outflow: u64, inflow: u64, source: bool },
    AntiParallel { tail: VertexId, head: VertexId },
    ZeroLength { tail: VertexId, head: VertexId },
    ZeroMultiplicity { tail: VertexId, head: VertexId },
    UnknownVertex { vertex: VertexId },
    OutsideDomain { vertex: VertexId },
    CoincidentVertices { a: VertexId, b: VertexId },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct VertexRepr {
    id: VertexId,
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    dim: usize,
    vertices: Vec<VertexRepr>,
    edges: Vec<Edge>,
    sources: Vec<VertexId>,
    domain: BoxDomain,
}

impl Serialize for TransportGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphRepr {
            dim: self.dim(),
            vertices: self.vertices.iter().map(|(&id, p)| VertexRepr { id, p: p.clone() }).collect(),
            edges: self.edges(),
            sources: self.sources.iter().copied().collect(),
            domain: self.domain.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransportGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = GraphRepr::deserialize(d)?;
        if r.dim != r.domain.dim() {
            return Err(D::Error::custom("graph dim does not match domain dim"));
        }
        let mut g = TransportGraph::new(r.domain);
        for v in r.vertices {
            if v.p.len() != r.dim {
                return Err(D::Error::custom(format!("vertex {} has wrong dimension", v.id)));
            }
            if g.vertices.insert(v.id, v.p).is_some() {
                return Err(D::Error::custom(format!("duplicate vertex id {}", v.id)));
            }
        }
        for e in r.edges {
            if e.tail == e.head {
                return Err(D::Error::custom("self-loop edge"));
            }
            *g.edges.entry((e.tail, e.head)).or_insert(0) += e.d;
        }
        g.sources = r.sources.into_iter().collect();
        Ok(g)
    }
}

impl TransportGraph {
    pub fn new(domain: BoxDomain) -> Self {
        TransportGraph { domain, vertices: BTreeMap::new(), edges: BTreeMap::new(), sources: BTreeSet::new() }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    pub fn point(&self, v: VertexId) -> &[f64] {
        &self.vertices[&v]
    }
    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    pub fn sources(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.sources.iter().copied()
    }
    pub fn source_count(&self) -> usize {
        self.sources.len()
    }
    pub fn is_source(&self, v: VertexId) -> bool {
        self.sources.contains(&v)
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(tail, head)` order.
    pub fn edges(&self) -> Vec<Edge> {
        self.edges.iter().map(|(&(tail, head), &d)| Edge { tail, head, d }).collect()
    }

    pub fn multiplicity(&self, tail: VertexId, head: VertexId) -> u64 {
        self.edges.get(&(tail, head)).copied().unwrap_or(0)
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        dist_n(self.point(e.tail), self.point(e.head))
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.domain.on_boundary(self.point(v))
    }

    fn next_id(&self) -> VertexId {
        self.vertices.keys().next_back().map_or(0, |&m| m + 1)
    }

    /// Adds a vertex unconditionally and returns its id.
    pub fn add_vertex(&mut self, p: Vec<f64>) -> Result<VertexId> {
        if p.len() != self.dim() {
            return Err(Error::input("vertex dimension does not match the domain"));
        }
        let id = self.next_id();
        self.vertices.insert(id, p);
        Ok(id)
    }

    /// Returns an existing vertex within the coincidence tolerance, or adds one.
    pub fn find_or_add_vertex(&mut self, p: &[f64]) -> Result<VertexId> {
        match self.find_vertex(p) {
            Some(v) => Ok(v),
            None => self.add_vertex(p.to_vec()),
        }
    }

    pub fn find_vertex(&self, p: &[f64]) -> Option<VertexId> {
        self.vertices.iter().find(|(_, q)| dist_n(p, q) <= COINCIDENCE_TOL).map(|(&id, _)| id)
    }

    pub fn mark_source(&mut self, v: VertexId) -> Result<()> {
        if !self.vertices.contains_key(&v) {
            return Err(Error::input(format!("unknown vertex {v}")));
        }
        self.sources.insert(v);
        Ok(())
    }

    /// Adds multiplicity `d` to edge `tail → head`. Refuses reversals,
    /// self-loops and unknown endpoints.
    pub fn add_edge(&mut self, tail: VertexId, head: VertexId, d: u64) -> Result<()> {
        if tail == head {
            return Err(Error::input("self-loop edge"));
        }
        if !self.vertices.contains_key(&tail) || !self.vertices.contains_key(&head) {
            return Err(Error::input("edge endpoint is not a vertex"));
        }
        if self.edges.contains_key(&(head, tail)) {
            return Err(Error::input(format!("edge {tail}->{head} is anti-parallel to an existing edge")));
        }
        if d > 0 {
            *self.edges.entry((tail, head)).or_insert(0) += d;
        }
        Ok(())
    }

    /// Drops vertices that are neither sources nor edge endpoints.
    pub fn prune_isolated(&mut self) {
        let mut used: BTreeSet<VertexId> = self.sources.clone();
        for &(t, h) in self.edges.keys() {
            used.insert(t);
            used.insert(h);
        }
        self.vertices.retain(|id, _| used.contains(id));
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let mut out: BTreeMap<VertexId, u64> = BTreeMap::new();
        let mut inn: BTreeMap<VertexId, u64> = BTreeMap::new();
        for (&(t, h), &d) in &self.edges {
            if !self.vertices.contains_key(&t) {
                v.push(Violation::UnknownVertex { vertex: t });
                continue;
            }
            if !self.vertices.contains_key(&h) {
                v.push(Violation::UnknownVertex { vertex: h });
                continue;
            }
            if d == 0 {
                v.push(Violation::ZeroMultiplicity { tail: t, head: h });
            }
            if t < h && self.edges.contains_key(&(h, t)) {
                v.push(Violation::AntiParallel { tail: t, head: h });
            }
            if dist_n(self.point(t), self.point(h)) <= COINCIDENCE_TOL {
                v.push(Violation::ZeroLength { tail: t, head: h });
            }
            *out.entry(t).or_insert(0) += d;
            *inn.entry(h).or_insert(0) += d;
        }
        for &s in &self.sources {
            if !self.vertices.contains_key(&s) {
                v.push(Violation::UnknownVertex { vertex: s });
            }
        }
        for (&id, p) in &self.vertices {
            if !self.domain.contains(p, COINCIDENCE_TOL) {
                v.push(Violation::OutsideDomain { vertex: id });
                continue;
            }
            if self.domain.on_boundary(p) {
                continue;
            }
            let o = out.get(&id).copied().unwrap_or(0);
            let i = inn.get(&id).copied().unwrap_or(0);
            let s = self.sources.contains(&id);
            if o != i + s as u64 {
                v.push(Violation::Unbalanced { vertex: id, outflow: o, inflow: i, source: s });
            }
        }
        let ids: Vec<_> = self.vertices.keys().copied().collect();
        for (n, &a) in ids.iter().enumerate() {
            for &b in &ids[n + 1..] {
                if dist_n(self.point(a), self.point(b)) <= COINCIDENCE_TOL {
                    v.push(Violation::CoincidentVertices { a, b });
                }
            }
        }
        ValidationReport { violations: v }
    }

    /// Net multiplicity flowing into boundary vertices. Equals the number of
    /// sources for a valid graph.
    pub fn boundary_flux(&self) -> i64 {
        let mut f = 0i64;
        for (&(t, h), &d) in &self.edges {
            if self.is_boundary_vertex(h) {
                f += d as i64;
            }
            if self.is_boundary_vertex(t) {
                f -= d as i64;
            }
        }
        f + self.sources.iter().filter(|&&s| self.is_boundary_vertex(s)).count() as i64
    }

    /// Sum of `cost(d)·length` over edges.
    pub fn weighted_length(&self, cost: impl Fn(u64) -> f64) -> f64 {
        self.edges().iter().map(|e| cost(e.d) * self.edge_length(e)).sum()
    }

    /// Union of two graphs on the same domain with multiplicities summed on
    /// shared edges.
    pub fn glue(&self, other: &TransportGraph) -> Result<TransportGraph> {
        if self.domain != other.domain {
            return Err(Error::input("glue: graphs live on different domains"));
        }
        let mut g = self.clone();
        let mut map = BTreeMap::new();
        for (&id, p) in &other.vertices {
            map.insert(id, g.find_or_add_vertex(p)?);
        }
        for &s in &other.sources {
            let t = map[&s];
            if self.sources.contains(&t) {
                return Err(Error::input("glue: source sets are not disjoint"));
            }
            g.sources.insert(t);
        }
        for e in other.edges() {
            let (t, h) = (map[&e.tail], map[&e.head]);
            if g.edges.contains_key(&(h, t)) {
                return Err(Error::input("glue: anti-parallel edge pair"));
            }
            if !g.edges.contains_key(&(t, h)) {
                let (p0, p1) = (g.point(t).to_vec(), g.point(h).to_vec());
                for f in self.edges() {
                    if collinear_overlap(&p0, &p1, self.point(f.tail), self.point(f.head)) {
                        return Err(Error::input("glue: partially overlapping edges"));
                    }
                }
            }
            g.add_edge(t, h, e.d)?;
        }
        Ok(g)
    }

    /// Removes a subgraph: multiplicities are subtracted edgewise and the
    /// sources of `sub` are unmarked.
    pub fn subtract(&self, sub: &TransportGraph) -> Result<TransportGraph> {
        if self.domain != sub.domain {
            return Err(Error::input("subtract: graphs live on different domains"));
        }
        let mut map = BTreeMap::new();
        for (&id, p) in &sub.vertices {
            let t = self.find_vertex(p).ok_or_else(|| Error::input("subtract: vertex missing from the larger graph"))?;
            map.insert(id, t);
        }
        let mut g = self.clone();
        for &s in &sub.sources {
            if !g.sources.remove(&map[&s]) {
                return Err(Error::input("subtract: source missing from the larger graph"));
            }
        }
        for e in sub.edges() {
            let key = (map[&e.tail], map[&e.head]);
            let have = g.edges.get(&key).copied().unwrap_or(0);
            if have < e.d {
                return Err(Error::input("subtract: edge multiplicity exceeds the larger graph"));
            }
            if have == e.d {
                g.edges.remove(&key);
            } else {
                g.edges.insert(key, have - e.d);
            }
        }
        g.prune_isolated();
        Ok(g)
    }

    /// Clips every edge to `sub`, inserting vertices where edges cross its
    /// boundary. Edges lying in a face of `sub` are kept.
    pub fn restrict(&self, sub: &BoxDomain) -> Result<TransportGraph> {
        if !self.domain.contains_box(sub) {
            return Err(Error::input("restrict: sub-box is not inside the domain"));
        }
        let mut g = TransportGraph::new(sub.clone());
        for (_, p) in self.vertices.iter() {
            if sub.contains(p, COINCIDENCE_TOL) {
                g.find_or_add_vertex(p)?;
            }
        }
        for &s in &self.sources {
            let p = self.point(s);
            if sub.contains(p, COINCIDENCE_TOL) {
                let v = g.find_or_add_vertex(p)?;
                g.sources.insert(v);
            }
        }
        for e in self.edges() {
            let (p, q) = (self.point(e.tail), self.point(e.head));
            if let Some((t0, t1)) = clip_segment(p, q, sub) {
                let a: Vec<f64> = p.iter().zip(q).map(|(x, y)| x + t0 * (y - x)).collect();
                let b: Vec<f64> = p.iter().zip(q).map(|(x, y)| x + t1 * (y - x)).collect();
                if dist_n(&a, &b) <= COINCIDENCE_TOL {
                    continue;
                }
                let va = g.find_or_add_vertex(&a)?;
                let vb = g.find_or_add_vertex(&b)?;
                g.add_edge(va, vb, e.d)?;
            }
        }
        g.prune_isolated();
        Ok(g)
    }

    /// Geometric fingerprint used to compare graphs up to relabeling:
    /// sorted `(tail point, head point, d)` triples and sorted source points.
    pub fn fingerprint(&self) -> (Vec<(Vec<f64>, Vec<f64>, u64)>, Vec<Vec<f64>>) {
        let mut es: Vec<_> = self.edges().iter().map(|e| (self.point(e.tail).to_vec(), self.point(e.head).to_vec(), e.d)).collect();
        es.sort_by(|a, b| cmp_pts(&a.0, &b.0).then(cmp_pts(&a.1, &b.1)).then(a.2.cmp(&b.2)));
        let mut ss: Vec<_> = self.sources.iter().map(|&s| self.point(s).to_vec()).collect();
        ss.sort_by(|a, b| cmp_pts(a, b));
        (es, ss)
    }

    /// Equality up to vertex relabeling, ignoring isolated non-source vertices.
    pub fn same_as(&self, other: &TransportGraph) -> bool {
        let (e1, s1) = self.fingerprint();
        let (e2, s2) = other.fingerprint();
        let close = |a: &[f64], b: &[f64]| dist_n(a, b) <= COINCIDENCE_TOL;
        self.domain == other.domain
            && e1.len() == e2.len()
            && s1.len() == s2.len()
            && e1.iter().zip(&e2).all(|(a, b)| close(&a.0, &b.0) && close(&a.1, &b.1) && a.2 == b.2)
            && s1.iter().zip(&s2).all(|(a, b)| close(a, b))
    }

    /// Splits the graph into one unit thread per source plus residual loops,
    /// walking outgoing multiplicity greedily and cutting out any cycle met
    /// on the way.
    pub fn decompose(&self) -> Result<Decomposition> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::input(format!("decompose: invalid graph ({} violations)", report.violations.len())));
        }
        let mut residual = self.edges.clone();
        let mut out_adj: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        for &(t, h) in self.edges.keys() {
            out_adj.entry(t).or_default().insert(h);
        }
        let mut loops = Vec::new();
        let mut threads = Vec::new();

        let take = |residual: &mut BTreeMap<(VertexId, VertexId), u64>, out_adj: &mut BTreeMap<VertexId, BTreeSet<VertexId>>, t: VertexId, h: VertexId| {
            let r = residual.get_mut(&(t, h)).expect("edge in residual");
            *r -= 1;
            if *r == 0 {
                residual.remove(&(t, h));
                out_adj.get_mut(&t).unwrap().remove(&h);
            }
        };
        let next_of = |out_adj: &BTreeMap<VertexId, BTreeSet<VertexId>>, v: VertexId| out_adj.get(&v).and_then(|s| s.iter().next().copied());

        // Walks from `start` until the boundary; cycles closed on the way are
        // moved to `loops`.
        let walk = |start: VertexId,
                    residual: &mut BTreeMap<(VertexId, VertexId), u64>,
                    out_adj: &mut BTreeMap<VertexId, BTreeSet<VertexId>>,
                    loops: &mut Vec<Loop>|
         -> Result<Vec<VertexId>> {
            let mut path = vec![start];
            let mut pos: BTreeMap<VertexId, usize> = BTreeMap::from([(start, 0)]);
            let mut steps = 0usize;
            loop {
                let v = *path.last().unwrap();
                if path.len() > 1 && self.is_boundary_vertex(v) {
                    return Ok(path);
                }
                let h = match next_of(out_adj, v) {
                    Some(h) => h,
                    None if self.is_boundary_vertex(v) => return Ok(path),
                    None => return Err(Error::numerical("decompose: walk stalled at an unbalanced vertex")),
                };
                take(residual, out_adj, v, h);
                steps += 1;
                if steps > 4 * self.edges.values().sum::<u64>() as usize + 8 {
                    return Err(Error::numerical("decompose: walk did not terminate"));
                }
                if let Some(&i) = pos.get(&h) {
                    let mut cyc: Vec<VertexId> = path.split_off(i + 1);
                    for c in &cyc {
                        pos.remove(c);
                    }
                    cyc.insert(0, h);
                    cyc.push(h);
                    loops.push(Loop { vertices: cyc, closed: true });
                } else {
                    pos.insert(h, path.len());
                    path.push(h);
                }
            }
        };

        for &s in &self.sources {
            if self.is_boundary_vertex(s) {
                threads.push((s, Thread { vertices: vec![s] }));
                continue;
            }
            let p = walk(s, &mut residual, &mut out_adj, &mut loops)?;
            threads.push((s, Thread { vertices: p }));
        }
        // Boundary-to-boundary loops.
        let starts: Vec<VertexId> = self.vertices.keys().copied().filter(|&v| self.is_boundary_vertex(v)).collect();
        for b in starts {
            while next_of(&out_adj, b).is_some() {
                let p = walk(b, &mut residual, &mut out_adj, &mut loops)?;
                if p.len() > 1 {
                    loops.push(Loop { vertices: p, closed: false });
                }
            }
        }
        // Whatever is left is a union of closed cycles.
        while let Some((&(t, _), _)) = residual.iter().next() {
            let mut path = vec![t];
            let mut pos = BTreeMap::from([(t, 0usize)]);
            loop {
                let v = *path.last().unwrap();
                let h = next_of(&out_adj, v).ok_or_else(|| Error::numerical("decompose: residual is not a cycle union"))?;
                take(&mut residual, &mut out_adj, v, h);
                if let Some(&i) = pos.get(&h) {
                    let mut cyc = path.split_off(i + 1);
                    cyc.insert(0, h);
                    cyc.push(h);
                    loops.push(Loop { vertices: cyc, closed: true });
                    break;
                }
                pos.insert(h, path.len());
                path.push(h);
            }
        }
        Ok(Decomposition { threads, loops })
    }

    /// Rebuilds a graph on this graph's vertex set from unit paths.
    pub fn reglue(&self, dec: &Decomposition) -> Result<TransportGraph> {
        let mut g = TransportGraph::new(self.domain.clone());
        g.vertices = self.vertices.clone();
        for (s, t) in &dec.threads {
            g.sources.insert(*s);
            for w in t.vertices.windows(2) {
                g.add_edge(w[0], w[1], 1)?;
            }
        }
        for l in &dec.loops {
            for w in l.vertices.windows(2) {
                g.add_edge(w[0], w[1], 1)?;
            }
        }
        g.prune_isolated();
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thread {
    pub vertices: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Loop {
    pub vertices: Vec<VertexId>,
    /// `true` when the loop closes on itself, `false` when both ends sit on
    /// the boundary.
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub threads: Vec<(VertexId, Thread)>,
    pub loops: Vec<Loop>,
}

fn cmp_pts(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Parameter interval of `p + t(q−p)` inside the closed box.
pub fn clip_segment(p: &[f64], q: &[f64], b: &BoxDomain) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..p.len() {
        let d = q[i] - p[i];
        let (lo, hi) = (b.lo()[i], b.hi()[i]);
        if d.abs() < 1e-300 {
            if p[i] < lo - COINCIDENCE_TOL || p[i] > hi + COINCIDENCE_TOL {
                return None;
            }
            continue;
        }
        let (mut a, mut c) = ((lo - p[i]) / d, (hi - p[i]) / d);
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        t0 = t0.max(a);
        t1 = t1.min(c);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Two segments lie on one line and share a piece of positive length while
/// not being the same segment.
fn collinear_overlap(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> bool {
    let d: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len <= COINCIDENCE_TOL {
        return false;
    }
    let u: Vec<f64> = d.iter().map(|x| x / len).collect();
    let off_line = |q: &[f64]| {
        let w: Vec<f64> = q.iter().zip(p0).map(|(a, b)| a - b).collect();
        let t: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
        let perp: f64 = w.iter().zip(&u).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>().sqrt();
        (t, perp)
    };
    let (s0, e0) = off_line(q0);
    let (s1, e1) = off_line(q1);
    if e0 > COINCIDENCE_TOL || e1 > COINCIDENCE_TOL {
        return false;
    }
    let (a, b) = (s0.min(s1), s0.max(s1));
    let overlap = b.min(len) - a.max(0.0);
    if overlap <= COINCIDENCE_TOL {
        return false;
    }
    let same = (dist_n(p0, q0) <= COINCIDENCE_TOL && dist_n(p1, q1) <= COINCIDENCE_TOL)
        || (dist_n(p0, q1) <= COINCIDENCE_TOL && dist_n(p1, q0) <= COINCIDENCE_TOL);
    !same
}

/// A graph joining each listed point by one straight unit edge to another
/// point (typically on the boundary). Shared endpoints are merged.
pub fn graph_from_segments(domain: &BoxDomain, segments: &[(Vec<f64>, Vec<f64>, u64)], sources: &[Vec<f64>]) -> Result<TransportGraph> {
    let mut g = TransportGraph::new(domain.clone());
    for s in sources {
        let v = g.find_or_add_vertex(s)?;
        g.sources.insert(v);
    }
    for (a, b, d) in segments {
        let va = g.find_or_add_vertex(a)?;
        let vb = g.find_or_add_vertex(b)?;
        g.add_edge(va, vb, *d)?;
    }
    Ok(g)
}
