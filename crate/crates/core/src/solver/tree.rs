//! In-forest representation of a boundary connection and the local search
//! that improves it.
//!
//! Every node has one outgoing edge: to its parent node or, for roots,
//! straight to the nearest boundary point. Nodes are sources (fixed) or
//! branch points (movable).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::CostModel;
use crate::domain::{BoxDomain, COINCIDENCE_TOL};
use crate::graph::TransportGraph;
use crate::{Error, Result};

pub type P = [f64; 4];

#[derive(Clone, Debug)]
pub struct Forest {
    pub dim: usize,
    lo: P,
    hi: P,
    pub pos: Vec<P>,
    pub parent: Vec<Option<usize>>,
    pub source: Vec<bool>,
    pub alive: Vec<bool>,
    pub flow: Vec<u64>,
    pub children: Vec<Vec<usize>>,
}

fn to_p(x: &[f64]) -> P {
    let mut p = [0.0; 4];
    p[..x.len()].copy_from_slice(x);
    p
}

#[inline]
fn d(a: &P, b: &P) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2) + (a[3] - b[3]).powi(2)).sqrt()
}

impl Forest {
    pub fn new(domain: &BoxDomain) -> Self {
        Forest {
            dim: domain.dim(),
            lo: to_p(domain.lo()),
            hi: to_p(domain.hi()),
            pos: Vec::new(),
            parent: Vec::new(),
            source: Vec::new(),
            alive: Vec::new(),
            flow: Vec::new(),
            children: Vec::new(),
        }
    }

    /// Adds an unattached node (a root exiting straight to the boundary).
    pub fn push(&mut self, x: &[f64], is_source: bool) -> usize {
        self.pos.push(to_p(x));
        self.parent.push(None);
        self.source.push(is_source);
        self.alive.push(true);
        self.flow.push(is_source as u64);
        self.children.push(Vec::new());
        self.pos.len() - 1
    }

    fn domain(&self) -> BoxDomain {
        BoxDomain::new(self.lo[..self.dim].to_vec(), self.hi[..self.dim].to_vec()).expect("valid box")
    }

    pub fn boundary_dist(&self, x: &P) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.dim {
            best = best.min(x[i] - self.lo[i]).min(self.hi[i] - x[i]);
        }
        best.max(0.0)
    }

    pub fn exit_point(&self, x: &P) -> P {
        let (mut best, mut ax, mut high) = (f64::INFINITY, 0, false);
        for i in 0..self.dim {
            if x[i] - self.lo[i] < best {
                best = x[i] - self.lo[i];
                ax = i;
                high = false;
            }
            if self.hi[i] - x[i] < best {
                best = self.hi[i] - x[i];
                ax = i;
                high = true;
            }
        }
        let mut q = *x;
        q[ax] = if high { self.hi[ax] } else { self.lo[ax] };
        q
    }

    fn is_steiner(&self, v: usize) -> bool {
        !self.source[v]
    }

    pub fn edge_len(&self, v: usize) -> f64 {
        match self.parent[v] {
            Some(p) => d(&self.pos[v], &self.pos[p]),
            None => self.boundary_dist(&self.pos[v]),
        }
    }

    pub fn total(&self, m: &CostModel) -> f64 {
        (0..self.pos.len()).filter(|&v| self.alive[v] && self.flow[v] > 0).map(|v| m.cost(self.flow[v]) * self.edge_len(v)).sum()
    }

    fn ancestors(&self, v: usize, out: &mut Vec<usize>) {
        let mut c = self.parent[v];
        while let Some(p) = c {
            out.push(p);
            c = self.parent[p];
        }
    }

    fn in_subtree(&self, u: usize, v: usize) -> bool {
        let mut c = Some(u);
        while let Some(x) = c {
            if x == v {
                return true;
            }
            c = self.parent[x];
        }
        false
    }

    fn add_flow_up(&mut self, start: Option<usize>, f: i64) {
        let mut c = start;
        while let Some(p) = c {
            self.flow[p] = (self.flow[p] as i64 + f) as u64;
            c = self.parent[p];
        }
    }

    /// Moves `v` (with its subtree) under `newp`. Caller guarantees no cycle.
    pub fn reparent(&mut self, v: usize, newp: Option<usize>) {
        let f = self.flow[v] as i64;
        if let Some(p) = self.parent[v] {
            self.children[p].retain(|&c| c != v);
        }
        self.add_flow_up(self.parent[v], -f);
        self.parent[v] = newp;
        if let Some(p) = newp {
            self.children[p].push(v);
        }
        self.add_flow_up(newp, f);
    }

    /// Splits the outgoing edge of `u` at `q` with a new branch node.
    fn split_edge(&mut self, u: usize, q: &P) -> usize {
        let s = self.push(&q[..self.dim], false);
        self.flow[s] = self.flow[u];
        let p = self.parent[u];
        if let Some(p) = p {
            self.children[p].retain(|&c| c != u);
            self.children[p].push(s);
        }
        self.parent[s] = p;
        self.parent[u] = Some(s);
        self.children[s].push(u);
        s
    }

    fn unsplit(&mut self, s: usize) {
        let u = self.children[s][0];
        let p = self.parent[s];
        if let Some(p) = p {
            self.children[p].retain(|&c| c != s);
            self.children[p].push(u);
        }
        self.parent[u] = p;
        self.pos.pop();
        self.parent.pop();
        self.source.pop();
        self.alive.pop();
        self.flow.pop();
        self.children.pop();
    }

    fn local_cost(&self, m: &CostModel, set: &[usize]) -> f64 {
        set.iter().filter(|&&v| self.alive[v] && self.flow[v] > 0).map(|&v| m.cost(self.flow[v]) * self.edge_len(v)).sum()
    }

    fn affected(&self, v: usize, other: Option<usize>, buf: &mut Vec<usize>) {
        buf.clear();
        buf.push(v);
        self.ancestors(v, buf);
        if let Some(u) = other {
            buf.push(u);
            self.ancestors(u, buf);
        }
        buf.sort_unstable();
        buf.dedup();
    }

    /// Cost change of moving `v` under `newp`.
    fn delta_reparent(&mut self, m: &CostModel, v: usize, newp: Option<usize>, buf: &mut Vec<usize>) -> f64 {
        let old = self.parent[v];
        self.affected(v, newp, buf);
        let before = self.local_cost(m, buf);
        self.reparent(v, newp);
        let after = self.local_cost(m, buf);
        self.reparent(v, old);
        after - before
    }

    /// Cost change of hanging `v` from a new branch point at `q` on the
    /// outgoing edge of `u`.
    fn delta_attach(&mut self, m: &CostModel, v: usize, u: usize, q: &P, buf: &mut Vec<usize>) -> f64 {
        let old = self.parent[v];
        self.affected(v, Some(u), buf);
        let before = self.local_cost(m, buf);
        let s = self.split_edge(u, q);
        self.reparent(v, Some(s));
        buf.push(s);
        let after = self.local_cost(m, buf);
        buf.pop();
        self.reparent(v, old);
        self.unsplit(s);
        after - before
    }

    /// Weighted Fermat point of a branch node's neighbours, by majorize-
    /// minimize (Weiszfeld) steps; the boundary term uses the current
    /// nearest face.
    fn weiszfeld(&self, m: &CostModel, s: usize, iters: usize) -> P {
        let mut x = self.pos[s];
        for _ in 0..iters {
            let mut num = [0.0; 4];
            let mut den = 0.0;
            let mut add = |w: f64, y: &P, x: &P| {
                let r = d(x, y).max(1e-15);
                for i in 0..4 {
                    num[i] += w * y[i] / r;
                }
                den += w / r;
            };
            for &c in &self.children[s] {
                add(m.cost(self.flow[c]), &self.pos[c], &x);
            }
            let w = m.cost(self.flow[s]);
            match self.parent[s] {
                Some(p) => add(w, &self.pos[p], &x),
                None => add(w, &self.exit_point(&x), &x),
            }
            if den == 0.0 {
                break;
            }
            let mut nx = [0.0; 4];
            for i in 0..self.dim {
                nx[i] = (num[i] / den).clamp(self.lo[i], self.hi[i]);
            }
            if d(&nx, &x) < 1e-14 {
                x = nx;
                break;
            }
            x = nx;
        }
        x
    }

    fn star_cost_of(&self, m: &CostModel, s: usize, x: &P) -> f64 {
        let mut c = 0.0;
        for &ch in &self.children[s] {
            c += m.cost(self.flow[ch]) * d(&self.pos[ch], x);
        }
        c + m.cost(self.flow[s])
            * match self.parent[s] {
                Some(p) => d(x, &self.pos[p]),
                None => self.boundary_dist(x),
            }
    }

    /// Removes a branch node with at most one child.
    fn splice(&mut self, s: usize) {
        let p = self.parent[s];
        let kids = std::mem::take(&mut self.children[s]);
        for c in kids {
            self.parent[c] = p;
            if let Some(p) = p {
                self.children[p].push(c);
            }
        }
        if let Some(p) = p {
            self.children[p].retain(|&c| c != s);
        }
        self.alive[s] = false;
        self.flow[s] = 0;
        self.parent[s] = None;
    }

    /// Drops useless branch nodes and merges coincident parent/child pairs.
    /// Returns the nodes whose neighbourhood changed.
    pub fn tidy(&mut self) -> Vec<usize> {
        let mut touched = Vec::new();
        loop {
            let mut changed = false;
            for s in 0..self.pos.len() {
                if !self.alive[s] {
                    continue;
                }
                if self.is_steiner(s) && self.children[s].len() <= 1 {
                    touched.extend(self.parent[s]);
                    touched.extend(self.children[s].iter().copied());
                    self.splice(s);
                    changed = true;
                    continue;
                }
                if let Some(p) = self.parent[s] {
                    if d(&self.pos[s], &self.pos[p]) <= COINCIDENCE_TOL {
                        touched.push(p);
                        touched.extend(self.children[s].iter().copied());
                        if self.is_steiner(s) {
                            self.splice(s);
                            changed = true;
                        } else if self.is_steiner(p) {
                            // Promote the source into the branch node's place.
                            touched.push(s);
                            let gp = self.parent[p];
                            let sibs: Vec<usize> = self.children[p].iter().copied().filter(|&c| c != s).collect();
                            for c in sibs {
                                self.reparent(c, Some(s));
                            }
                            self.reparent(s, gp);
                            self.splice(p);
                            changed = true;
                        }
                    }
                } else if self.boundary_dist(&self.pos[s]) <= COINCIDENCE_TOL && self.is_steiner(s) {
                    // A branch point on the boundary: its children exit there.
                    let kids = self.children[s].clone();
                    touched.extend(kids.iter().copied());
                    for c in kids {
                        self.reparent(c, None);
                    }
                    self.splice(s);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        touched.retain(|&v| self.alive[v]);
        touched
    }

    pub fn from_sources(domain: &BoxDomain, points: &[Vec<f64>]) -> Forest {
        let mut f = Forest::new(domain);
        for p in points {
            f.push(p, true);
        }
        f
    }

    /// Converts to a graph. Sources on the boundary stay isolated.
    pub fn to_graph(&self) -> Result<TransportGraph> {
        let dom = self.domain();
        let mut g = TransportGraph::new(dom.clone());
        let mut id = vec![usize::MAX; self.pos.len()];
        for v in 0..self.pos.len() {
            if self.alive[v] && (self.source[v] || self.flow[v] > 0) {
                id[v] = g.find_or_add_vertex(&self.pos[v][..self.dim])?;
                if self.source[v] {
                    g.mark_source(id[v])?;
                }
            }
        }
        for v in 0..self.pos.len() {
            if !self.alive[v] || self.flow[v] == 0 {
                continue;
            }
            if dom.on_boundary(&self.pos[v][..self.dim]) && self.parent[v].is_none() {
                continue;
            }
            let h = match self.parent[v] {
                Some(p) => id[p],
                None => g.find_or_add_vertex(&self.exit_point(&self.pos[v])[..self.dim])?,
            };
            if h != id[v] {
                g.add_edge(id[v], h, self.flow[v])?;
            }
        }
        let r = g.validate();
        if !r.is_valid() {
            return Err(Error::numerical(format!("forest produced an invalid graph: {:?}", r.violations.first())));
        }
        Ok(g)
    }

    /// Reads an in-forest graph: interior vertices have at most one
    /// outgoing edge and root edges end on the boundary.
    pub fn from_graph(g: &TransportGraph) -> Result<Forest> {
        let mut f = Forest::new(g.domain());
        let mut map = std::collections::BTreeMap::new();
        for v in g.vertex_ids() {
            if g.is_boundary_vertex(v) && !g.is_source(v) {
                continue;
            }
            map.insert(v, f.push(g.point(v), g.is_source(v)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in g.edges() {
            if g.is_boundary_vertex(e.tail) {
                return Err(Error::input("local search needs a forest: edge leaves the boundary"));
            }
            if !seen.insert(e.tail) {
                return Err(Error::input("local search needs a forest: vertex with two outgoing edges"));
            }
            let t = map[&e.tail];
            if !g.is_boundary_vertex(e.head) {
                let h = map[&e.head];
                f.parent[t] = Some(h);
                f.children[h].push(t);
            }
        }
        // Recompute flows from the structure.
        let n = f.pos.len();
        for v in 0..n {
            if f.source[v] && f.boundary_dist(&f.pos[v]) > COINCIDENCE_TOL {
                let mut c = Some(v);
                let mut steps = 0;
                while let Some(x) = c {
                    f.flow[x] += if x == v { 0 } else { 1 };
                    c = f.parent[x];
                    steps += 1;
                    if steps > n + 1 {
                        return Err(Error::input("local search needs a forest: cycle"));
                    }
                }
            } else if f.source[v] {
                f.flow[v] = 0;
            }
        }
        Ok(f)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchParams {
    /// Cap on full passes of the local optimizer.
    pub sweeps: usize,
    pub neighbours: usize,
    /// Perturbation rounds after the first local optimum.
    pub kicks: usize,
    pub rel_tol: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { sweeps: 50, neighbours: 10, kicks: 0, rel_tol: 1e-10 }
    }
}

fn nearest(f: &Forest, v: usize, k: usize, buf: &mut Vec<(f64, usize)>) {
    buf.clear();
    let x = f.pos[v];
    for u in 0..f.pos.len() {
        if u != v && f.alive[u] && f.flow[u] > 0 {
            buf.push((d(&x, &f.pos[u]), u));
        }
    }
    let k = k.min(buf.len());
    if k < buf.len() {
        buf.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        buf.truncate(k);
    }
    buf.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

fn closest_on(a: &P, b: &P, x: &P) -> (P, f64) {
    let mut ab = [0.0; 4];
    let mut ax = 0.0;
    let mut l2 = 0.0;
    for i in 0..4 {
        ab[i] = b[i] - a[i];
        ax += (x[i] - a[i]) * ab[i];
        l2 += ab[i] * ab[i];
    }
    let t = if l2 == 0.0 { 0.0 } else { (ax / l2).clamp(0.0, 1.0) };
    let mut q = [0.0; 4];
    for i in 0..4 {
        q[i] = a[i] + t * ab[i];
    }
    (q, t)
}

enum Move {
    Reparent(Option<usize>),
    Attach(usize, P),
}

struct Work {
    queue: std::collections::VecDeque<usize>,
    queued: Vec<bool>,
}

impl Work {
    fn push(&mut self, v: usize) {
        if v >= self.queued.len() {
            self.queued.resize(v + 1, false);
        }
        if !self.queued[v] {
            self.queued[v] = true;
            self.queue.push_back(v);
        }
    }
    fn pop(&mut self) -> Option<usize> {
        let v = self.queue.pop_front()?;
        self.queued[v] = false;
        Some(v)
    }
}

/// Tries the rerouting and attaching moves for `v`; applies the best one.
fn best_move(f: &mut Forest, model: &CostModel, v: usize, params: &SearchParams, tol: f64, w: &mut Work, buf: &mut Vec<usize>, near: &mut Vec<(f64, usize)>) -> bool {
    let mut best: (f64, Option<Move>) = (-tol, None);
    if f.parent[v].is_some() {
        let dl = f.delta_reparent(model, v, None, buf);
        if dl < best.0 {
            best = (dl, Some(Move::Reparent(None)));
        }
    }
    nearest(f, v, params.neighbours, near);
    if f.flow[v] >= 4 {
        // Heavy branches also look at other heavy branches further away.
        let mut heavy = Vec::new();
        let x = f.pos[v];
        for u in 0..f.pos.len() {
            if u != v && f.alive[u] && 2 * f.flow[u] >= f.flow[v] && !near.iter().any(|n| n.1 == u) {
                heavy.push((d(&x, &f.pos[u]), u));
            }
        }
        heavy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        heavy.truncate(params.neighbours);
        near.extend(heavy);
    }
    for &(_, u) in near.iter() {
        if f.in_subtree(u, v) {
            continue;
        }
        if f.parent[v] != Some(u) {
            let dl = f.delta_reparent(model, v, Some(u), buf);
            if dl < best.0 {
                best = (dl, Some(Move::Reparent(Some(u))));
            }
        }
        let end = match f.parent[u] {
            Some(p) => f.pos[p],
            None => f.exit_point(&f.pos[u]),
        };
        let (q, t) = closest_on(&f.pos[u], &end, &f.pos[v]);
        let seg = d(&f.pos[u], &end);
        let gap = COINCIDENCE_TOL * 10.0;
        if t * seg > gap && (1.0 - t) * seg > gap && d(&q, &f.pos[v]) > gap {
            if let Some(p) = f.parent[u] {
                if f.in_subtree(p, v) {
                    continue;
                }
            }
            let dl = f.delta_attach(model, v, u, &q, buf);
            if dl < best.0 {
                best = (dl, Some(Move::Attach(u, q)));
            }
        }
    }
    let old = f.parent[v];
    match best.1 {
        Some(Move::Reparent(p)) => {
            f.reparent(v, p);
            w.push(v);
            old.into_iter().chain(p).for_each(|x| w.push(x));
        }
        Some(Move::Attach(u, q)) => {
            let s = f.split_edge(u, &q);
            f.reparent(v, Some(s));
            relocate(f, model, s);
            w.push(v);
            w.push(s);
            w.push(u);
            old.into_iter().for_each(|x| w.push(x));
        }
        None => return false,
    }
    for &(_, u) in near.iter() {
        w.push(u);
    }
    true
}

/// Worklist local optimizer: a node is revisited whenever something near
/// it changes.
fn local_opt(f: &mut Forest, model: &CostModel, params: &SearchParams, init: &[usize], tol: f64) {
    let mut w = Work { queue: Default::default(), queued: vec![false; f.pos.len()] };
    let (mut buf, mut near) = (Vec::new(), Vec::new());
    init.iter().for_each(|&v| w.push(v));
    for _ in 0..params.sweeps.max(1) {
        let mut budget = 50 * f.pos.len() + 1000;
        while let Some(v) = w.pop() {
            if budget == 0 {
                break;
            }
            budget -= 1;
            if v >= f.pos.len() || !f.alive[v] || f.flow[v] == 0 {
                continue;
            }
            best_move(f, model, v, params, tol, &mut w, &mut buf, &mut near);
            if f.children[v].len() >= 2 {
                if let Some(s) = branch_insert(f, model, v, tol) {
                    w.push(v);
                    w.push(s);
                    f.children[s].clone().into_iter().for_each(|c| w.push(c));
                }
            }
            if f.source[v] && !f.children[v].is_empty() {
                if let Some(s) = split_insert(f, model, v, tol) {
                    w.push(v);
                    w.push(s);
                    f.children[s].clone().into_iter().for_each(|c| w.push(c));
                }
            }
            if !f.source[v] && f.alive[v] && f.flow[v] > 0 {
                let before = f.star_cost_of(model, v, &f.pos[v]);
                relocate(f, model, v);
                if f.star_cost_of(model, v, &f.pos[v]) < before - 100.0 * tol {
                    f.parent[v].into_iter().for_each(|x| w.push(x));
                    f.children[v].clone().into_iter().for_each(|x| w.push(x));
                }
            }
        }
        let touched = f.tidy();
        if touched.is_empty() && w.queue.is_empty() {
            break;
        }
        touched.into_iter().for_each(|v| w.push(v));
    }
}

impl Forest {
    /// Drops dead nodes, keeping the relative order of the rest.
    pub fn compact(&self) -> Forest {
        let mut map = vec![usize::MAX; self.pos.len()];
        let mut out = Forest { pos: vec![], parent: vec![], source: vec![], alive: vec![], flow: vec![], children: vec![], ..self.clone() };
        for v in 0..self.pos.len() {
            if self.alive[v] {
                map[v] = out.pos.len();
                out.pos.push(self.pos[v]);
                out.source.push(self.source[v]);
                out.alive.push(true);
                out.flow.push(self.flow[v]);
            }
        }
        for v in 0..self.pos.len() {
            if self.alive[v] {
                out.parent.push(self.parent[v].map(|p| map[p]));
                out.children.push(self.children[v].iter().map(|&c| map[c]).collect());
            }
        }
        out
    }
}

/// Local search to a local optimum, then seeded perturbation rounds. The
/// visiting order is canonical when `order_seed` is `None` or its stream is 0.
pub fn improve(start: &Forest, model: &CostModel, params: SearchParams, order_seed: Option<(u64, u64)>) -> Forest {
    let mut f = start.compact();
    let _ = f.tidy();
    let scale = f.total(model).max(1e-300);
    let tol = params.rel_tol * scale;
    let (seed, stream) = order_seed.unwrap_or((0, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..f.pos.len()).filter(|&v| f.alive[v] && f.flow[v] > 0).collect();
    if stream != 0 {
        order.shuffle(&mut rng);
    }
    local_opt(&mut f, model, &params, &order, tol);
    let mut best = f.compact();
    let mut best_val = best.total(model);
    let mut near = Vec::new();
    for round in 0..params.kicks {
        let live: Vec<usize> = (0..best.pos.len()).filter(|&v| best.flow[v] > 0).collect();
        if live.is_empty() {
            break;
        }
        let mut g = best.clone();
        let c = live[rng.gen_range(0..live.len())];
        let size = rng.gen_range(params.neighbours / 2..=params.neighbours * 4);
        nearest(&g, c, size, &mut near);
        let mut region: Vec<usize> = near.iter().map(|x| x.1).collect();
        region.push(c);
        if round % 2 == 0 {
            for &v in &region {
                if g.source[v] {
                    g.reparent(v, None);
                }
            }
        } else {
            for &v in &region {
                let cand: Vec<usize> = near.iter().map(|x| x.1).filter(|&u| u != v && !g.in_subtree(u, v)).collect();
                if !cand.is_empty() && g.source[v] {
                    let u = cand[rng.gen_range(0..cand.len())];
                    g.reparent(v, Some(u));
                }
            }
        }
        let mut init: Vec<usize> = g.tidy();
        for &v in &region {
            if g.alive[v] {
                nearest(&g, v, params.neighbours, &mut near);
                init.push(v);
                init.extend(near.iter().map(|x| x.1));
            }
        }
        local_opt(&mut g, model, &params, &init, tol);
        let val = g.total(model);
        if val < best_val - 10.0 * tol {
            best = g.compact();
            best_val = val;
        }
    }
    polish(&mut best, model);
    best
}

/// Block-coordinate descent on all branch positions.
fn polish(f: &mut Forest, model: &CostModel) {
    for _ in 0..50 {
        let before = f.total(model);
        for s in 0..f.pos.len() {
            if f.alive[s] && !f.source[s] && f.flow[s] > 0 {
                relocate(f, model, s);
            }
        }
        let after = f.total(model);
        if before - after <= 1e-12 * before {
            break;
        }
    }
    let _ = f.tidy();
}

/// Moves a branch node to the best of its Weiszfeld point and its
/// neighbours' positions (where the Weiszfeld iteration stalls).
fn relocate(f: &mut Forest, model: &CostModel, s: usize) {
    let mut best = (f.star_cost_of(model, s, &f.pos[s]), f.pos[s]);
    let x = f.weiszfeld(model, s, 60);
    let mut cands = vec![x];
    cands.extend(f.children[s].iter().map(|&c| f.pos[c]));
    if let Some(p) = f.parent[s] {
        cands.push(f.pos[p]);
    }
    for y in cands {
        let c = f.star_cost_of(model, s, &y);
        if c < best.0 {
            best = (c, y);
        }
    }
    f.pos[s] = best.1;
}

fn branch_insert(f: &mut Forest, model: &CostModel, v: usize, tol: f64) -> Option<usize> {
    let kids = f.children[v].clone();
    let mut best: (f64, usize, usize, P) = (-tol, 0, 0, [0.0; 4]);
    for (i, &a) in kids.iter().enumerate() {
        for &b in &kids[i + 1..] {
            let (fa, fb) = (f.flow[a], f.flow[b]);
            let (wa, wb, wv) = (model.cost(fa), model.cost(fb), model.cost(fa + fb));
            let pts = [f.pos[a], f.pos[b], f.pos[v]];
            let ws = [wa, wb, wv];
            let mut x = [0.0; 4];
            for i in 0..4 {
                x[i] = (pts[0][i] + pts[1][i] + pts[2][i]) / 3.0;
            }
            for _ in 0..60 {
                let (mut num, mut den) = ([0.0; 4], 0.0);
                for k in 0..3 {
                    let r = d(&x, &pts[k]).max(1e-15);
                    for i in 0..4 {
                        num[i] += ws[k] * pts[k][i] / r;
                    }
                    den += ws[k] / r;
                }
                for i in 0..4 {
                    x[i] = num[i] / den;
                }
            }
            let new = wa * d(&pts[0], &x) + wb * d(&pts[1], &x) + wv * d(&x, &pts[2]);
            let old = wa * d(&pts[0], &pts[2]) + wb * d(&pts[1], &pts[2]);
            let dl = new - old;
            if dl < best.0 && d(&x, &pts[2]) > COINCIDENCE_TOL * 10.0 {
                best = (dl, a, b, x);
            }
        }
    }
    if best.0 < -tol {
        let (_, a, b, x) = best;
        let s = f.push(&x[..f.dim], false);
        f.flow[s] = 0;
        f.parent[s] = Some(v);
        f.children[v].push(s);
        f.reparent(a, Some(s));
        f.reparent(b, Some(s));
        Some(s)
    } else {
        None
    }
}

/// Lets one child of the source `v` join `v`'s outgoing edge at a new
/// branch point instead of at `v` itself.
fn split_insert(f: &mut Forest, model: &CostModel, v: usize, tol: f64) -> Option<usize> {
    let fv = f.flow[v];
    let mut best: (f64, usize, P) = (-tol, 0, [0.0; 4]);
    for &a in &f.children[v] {
        let fa = f.flow[a];
        if fa >= fv {
            continue;
        }
        let ws = [model.cost(fa), model.cost(fv - fa), model.cost(fv)];
        let end = |x: &P| match f.parent[v] {
            Some(p) => f.pos[p],
            None => f.exit_point(x),
        };
        let cost = |x: &P| ws[0] * d(x, &f.pos[a]) + ws[1] * d(x, &f.pos[v]) + ws[2] * d(x, &end(x));
        let mut x = f.pos[v];
        for i in 0..f.dim {
            x[i] = 0.5 * (f.pos[v][i] + end(&f.pos[v])[i]);
        }
        for _ in 0..500 {
            let pts = [f.pos[a], f.pos[v], end(&x)];
            let (mut num, mut den) = ([0.0; 4], 0.0);
            for k in 0..3 {
                let r = d(&x, &pts[k]).max(1e-15);
                for i in 0..4 {
                    num[i] += ws[k] * pts[k][i] / r;
                }
                den += ws[k] / r;
            }
            let prev = x;
            for i in 0..f.dim {
                x[i] = (num[i] / den).clamp(f.lo[i], f.hi[i]);
            }
            if d(&prev, &x) < 1e-13 {
                break;
            }
        }
        let old = ws[0] * d(&f.pos[a], &f.pos[v]) + model.cost(fv) * f.edge_len(v);
        let dl = cost(&x) - old;
        let gap = COINCIDENCE_TOL * 10.0;
        if dl < best.0 && d(&x, &f.pos[v]) > gap && d(&x, &end(&x)) > gap && f.boundary_dist(&x) > gap {
            best = (dl, a, x);
        }
    }
    if best.0 < -tol {
        let (_, a, x) = best;
        let s = f.split_edge(v, &x);
        f.reparent(a, Some(s));
        Some(s)
    } else {
        None
    }
}
