//! Sparse cubic lattices restricted to the boxes where a field differs
//! from the south pole, swept one `x`-layer at a time.

use std::collections::HashMap;

use serde::Serialize;

use super::{SphereField, SOUTH};
use crate::curves::{gauss_linking, segment_distance3, Polyline3};
use crate::error::{Error, Result};
use crate::geom::{cross, dist, dot, normalize, scale, sub, V3};
use crate::par;

/// Largest number of lattice nodes a single sweep may visit.
pub const MAX_NODES: f64 = 6e8;

/// Fractional offset of the lattice, kept away from the rational points
/// where curve data tends to sit.
const SHIFT: V3 = [0.414_213_562_373_095, 0.732_050_807_568_877, 0.236_067_977_499_79];

#[derive(Clone, Debug, Serialize)]
pub struct LatticeSpec {
    pub h: f64,
    pub resolution: usize,
    /// Inclusive index boxes `[i0, i1, j0, j1, l0, l1]`.
    #[serde(skip)]
    boxes: Vec<[i64; 6]>,
    pub estimated_nodes: f64,
}

impl LatticeSpec {
    pub fn new(field: &dyn SphereField, resolution: usize) -> Result<LatticeSpec> {
        if resolution < 2 {
            return Err(Error::input("resolution must be at least 2"));
        }
        let h = field.sampling_extent() / resolution as f64;
        let pad = 3.0 * h;
        let mut boxes = Vec::new();
        let mut est = 0.0;
        for (lo, hi) in field.active_boxes() {
            let b: [i64; 6] = std::array::from_fn(|k| {
                let ax = k / 2;
                if k % 2 == 0 {
                    ((lo[ax] - pad) / h - SHIFT[ax]).floor() as i64
                } else {
                    ((hi[ax] + pad) / h - SHIFT[ax]).ceil() as i64
                }
            });
            est += ((b[1] - b[0] + 1) * (b[3] - b[2] + 1)) as f64 * (b[5] - b[4] + 1) as f64;
            boxes.push(b);
        }
        if est > MAX_NODES {
            return Err(Error::resource(format!("about {est:.3e} lattice nodes requested, limit {MAX_NODES:.0e}")));
        }
        boxes.sort_by_key(|b| b[0]);
        Ok(LatticeSpec { h, resolution, boxes, estimated_nodes: est })
    }

    pub fn position(&self, i: i64, j: i64, l: i64) -> V3 {
        [(i as f64 + SHIFT[0]) * self.h, (j as f64 + SHIFT[1]) * self.h, (l as f64 + SHIFT[2]) * self.h]
    }

    fn layer_range(&self) -> (i64, i64) {
        let lo = self.boxes.iter().map(|b| b[0]).min().unwrap_or(0);
        let hi = self.boxes.iter().map(|b| b[1]).max().unwrap_or(-1);
        (lo, hi)
    }
}

const OFF: i64 = 1 << 30;

fn key(j: i64, l: i64) -> u64 {
    (((j + OFF) as u64) << 32) | ((l + OFF) as u64)
}

fn unkey(k: u64) -> (i64, i64) {
    ((k >> 32) as i64 - OFF, (k & 0xffff_ffff) as i64 - OFF)
}

struct Layer {
    i: i64,
    keys: Vec<u64>,
    values: Vec<V3>,
}

impl Layer {
    fn get(&self, j: i64, l: i64) -> V3 {
        match self.keys.binary_search(&key(j, l)) {
            Ok(p) => self.values[p],
            Err(_) => SOUTH,
        }
    }

    fn build(spec: &LatticeSpec, field: &dyn SphereField, i: i64) -> Layer {
        let mut keys = Vec::new();
        for b in spec.boxes.iter().take_while(|b| b[0] <= i) {
            if b[1] < i {
                continue;
            }
            for j in b[2]..=b[3] {
                for l in b[4]..=b[5] {
                    keys.push(key(j, l));
                }
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let values = par::map_collect(&keys, |&k| {
            let (j, l) = unkey(k);
            field.eval(spec.position(i, j, l))
        });
        Layer { i, keys, values }
    }

    fn empty(i: i64) -> Layer {
        Layer { i, keys: Vec::new(), values: Vec::new() }
    }
}

/// Sweeps the lattice, handing the callback each layer `i` together with
/// layers `i−2 ..= i+2` (missing nodes read as south).
fn sweep(spec: &LatticeSpec, field: &dyn SphereField, mut f: impl FnMut(&[Layer; 5])) {
    let (lo, hi) = spec.layer_range();
    if hi < lo {
        return;
    }
    let make = |i: i64| if (lo..=hi).contains(&i) { Layer::build(spec, field, i) } else { Layer::empty(i) };
    let mut w: [Layer; 5] = std::array::from_fn(|d| make(lo - 2 + d as i64));
    for i in lo..=hi {
        f(&w);
        w.rotate_left(1);
        w[4] = make(i + 3);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldStats {
    pub resolution: usize,
    pub h: f64,
    pub nodes: usize,
    /// `(p, E_p)` with `E_p = Σ |∇u|^p h³` over the lattice.
    pub energies: Vec<(f64, f64)>,
    /// Largest central-difference gradient norm.
    pub sup_gradient: f64,
}

/// Five-point central difference times `h`.
fn stencil(p2: V3, p1: V3, m1: V3, m2: V3) -> V3 {
    std::array::from_fn(|c| (8.0 * (p1[c] - m1[c]) - (p2[c] - m2[c])) / 12.0)
}

/// Energies `∫|∇u|^p` for each requested `p` and the sup of the gradient,
/// from five-point central differences summed over lattice nodes (the
/// midpoint rule on the dual cells) at the given resolution.
pub fn field_stats(field: &dyn SphereField, ps: &[f64], resolution: usize) -> Result<FieldStats> {
    if ps.iter().any(|&p| !(p >= 1.0) || !p.is_finite()) {
        return Err(Error::input("energy exponents must be at least 1"));
    }
    if resolution < 32 {
        return Err(Error::input("energy resolution must be at least 32"));
    }
    let spec = LatticeSpec::new(field, resolution)?;
    let h = spec.h;
    let mut sums = vec![0.0; ps.len()];
    let mut sup: f64 = 0.0;
    let mut nodes = 0usize;
    sweep(&spec, field, |w| {
        let cur = &w[2];
        nodes += cur.keys.len();
        let parts: Vec<(Vec<f64>, f64)> = par::map_range(cur.keys.len(), |n| {
            let (j, l) = unkey(cur.keys[n]);
            let gx = stencil(w[4].get(j, l), w[3].get(j, l), w[1].get(j, l), w[0].get(j, l));
            let gy = stencil(cur.get(j + 2, l), cur.get(j + 1, l), cur.get(j - 1, l), cur.get(j - 2, l));
            let gz = stencil(cur.get(j, l + 2), cur.get(j, l + 1), cur.get(j, l - 1), cur.get(j, l - 2));
            let g2 = (dot(gx, gx) + dot(gy, gy) + dot(gz, gz)) / (h * h);
            (ps.iter().map(|&p| g2.powf(p / 2.0)).collect(), g2)
        });
        for (e, g2) in parts {
            for (s, v) in sums.iter_mut().zip(e) {
                *s += v;
            }
            sup = sup.max(g2);
        }
    });
    if !sums.iter().all(|s| s.is_finite()) || !sup.is_finite() {
        return Err(Error::numerical("non-finite field samples"));
    }
    let h3 = h * h * h;
    Ok(FieldStats {
        resolution,
        h,
        nodes,
        energies: ps.iter().zip(&sums).map(|(&p, &s)| (p, s * h3)).collect(),
        sup_gradient: sup.sqrt(),
    })
}

/// `∫|∇u|^p` on the lattice of the given resolution.
pub fn energy_p(field: &dyn SphereField, p: f64, resolution: usize) -> Result<f64> {
    Ok(field_stats(field, &[p], resolution)?.energies[0].1)
}

/// Oriented preimage of one value, as closed polygons.
#[derive(Clone, Debug, Serialize)]
pub struct PreimageFamily {
    pub value: V3,
    pub loops: Vec<Polyline3>,
}

impl PreimageFamily {
    pub fn total_length(&self) -> f64 {
        self.loops.iter().map(|l| l.length()).sum()
    }
}

/// Level functions `φ₁ = u·W₁`, `φ₂ = u·W₂` with `(W₁, W₂, M)` direct.
fn level_basis(m: V3) -> (V3, V3) {
    let a = if m[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let w1 = normalize(sub(a, scale(m, dot(a, m))));
    (w1, cross(m, w1))
}

const KUHN: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn pack(n: [i64; 3]) -> u64 {
    let o = 1i64 << 20;
    (((n[0] + o) as u64) << 42) | (((n[1] + o) as u64) << 21) | ((n[2] + o) as u64)
}

struct Extractor {
    m: V3,
    w: (V3, V3),
    points: Vec<V3>,
    faces: HashMap<[u64; 3], Option<u32>>,
    edges: Vec<(u32, u32)>,
    bad: usize,
}

impl Extractor {
    fn new(m: V3) -> Extractor {
        Extractor { m, w: level_basis(m), points: Vec::new(), faces: HashMap::new(), edges: Vec::new(), bad: 0 }
    }

    /// Stereographic coordinates of `u` seen from `−M`; they vanish only at
    /// `u = M`. `None` when `u` is within 60° of `−M`, where they blow up.
    fn stereo(&self, u: V3) -> Option<(f64, f64)> {
        let c = 1.0 + dot(u, self.m);
        if c < 0.5 {
            return None;
        }
        Some((dot(u, self.w.0) / c, dot(u, self.w.1) / c))
    }

    fn linear(&self, u: V3) -> (f64, f64) {
        (dot(u, self.w.0), dot(u, self.w.1))
    }

    /// Level functions at the vertices of a simplex: stereographic when all
    /// vertices allow it, otherwise the plain components (then zeros with
    /// `u·M ≤ 0` belong to `−M` and are discarded by the caller).
    fn levels(&self, us: &[V3]) -> (Vec<(f64, f64)>, bool) {
        match us.iter().map(|&u| self.stereo(u)).collect::<Option<Vec<_>>>() {
            Some(f) => (f, true),
            None => (us.iter().map(|&u| self.linear(u)).collect(), false),
        }
    }

    /// Zero of the linear interpolant of the level functions on a face, if
    /// inside and on the `M` branch.
    fn face_point(&mut self, verts: [(u64, V3, V3); 3]) -> Option<u32> {
        let mut v = verts;
        v.sort_by_key(|t| t.0);
        let k = [v[0].0, v[1].0, v[2].0];
        if let Some(&p) = self.faces.get(&k) {
            return p;
        }
        let (f, stereo) = self.levels(&[v[0].2, v[1].2, v[2].2]);
        let (a0, a1, a2) = (f[0].0, f[1].0, f[2].0);
        let (b0, b1, b2) = (f[0].1, f[1].1, f[2].1);
        let l = [a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0];
        let det = l[0] + l[1] + l[2];
        let mut out = None;
        if det != 0.0 && l.iter().all(|&x| x / det >= 0.0) {
            let lam = l.map(|x| x / det);
            let pos: V3 = std::array::from_fn(|c| lam[0] * v[0].1[c] + lam[1] * v[1].1[c] + lam[2] * v[2].1[c]);
            let u: V3 = std::array::from_fn(|c| lam[0] * v[0].2[c] + lam[1] * v[1].2[c] + lam[2] * v[2].2[c]);
            if stereo || dot(u, self.m) > 0.0 {
                self.points.push(pos);
                out = Some(self.points.len() as u32 - 1);
            }
        }
        self.faces.insert(k, out);
        out
    }

    fn cell(&mut self, corner: &[(u64, V3, V3); 8]) {
        // Both level-function families have the sign of the plain
        // components, so a cell where either keeps one sign has no zero.
        let ph: Vec<(f64, f64)> = corner.iter().map(|c| self.linear(c.2)).collect();
        let s1 = ph.iter().filter(|p| p.0 > 0.0).count();
        let s2 = ph.iter().filter(|p| p.1 > 0.0).count();
        if s1 == 0 || s1 == 8 || s2 == 0 || s2 == 8 || corner.iter().all(|c| dot(c.2, self.m) <= 0.0) {
            return;
        }
        for perm in KUHN {
            let mut idx = [0usize; 4];
            for s in 0..3 {
                idx[s + 1] = idx[s] | (1 << perm[s]);
            }
            let tv = idx.map(|i| corner[i]);
            let mut hits = Vec::with_capacity(2);
            for skip in 0..4 {
                let face: Vec<_> = (0..4).filter(|&t| t != skip).map(|t| tv[t]).collect();
                if let Some(p) = self.face_point([face[0], face[1], face[2]]) {
                    hits.push(p);
                }
            }
            match hits.len() {
                0 => {}
                2 if hits[0] != hits[1] => {
                    let (f, _) = self.levels(&tv.map(|t| t.2));
                    let (mut a, mut b) = (hits[0], hits[1]);
                    let r: Vec<V3> = (1..4).map(|t| sub(tv[t].1, tv[0].1)).collect();
                    let vol = dot(r[0], cross(r[1], r[2]));
                    let c = [cross(r[1], r[2]), cross(r[2], r[0]), cross(r[0], r[1])];
                    let grad = |g: &dyn Fn(usize) -> f64| -> V3 {
                        let d: Vec<f64> = (1..4).map(|t| g(t) - g(0)).collect();
                        std::array::from_fn(|x| (d[0] * c[0][x] + d[1] * c[1][x] + d[2] * c[2][x]) / vol)
                    };
                    let t = cross(grad(&|i| f[i].0), grad(&|i| f[i].1));
                    if dot(sub(self.points[b as usize], self.points[a as usize]), t) < 0.0 {
                        std::mem::swap(&mut a, &mut b);
                    }
                    self.edges.push((a, b));
                }
                _ => self.bad += 1,
            }
        }
    }

    fn finish(self) -> Result<PreimageFamily> {
        if self.bad > 0 {
            return Err(Error::numerical(format!("{} degenerate tetrahedra", self.bad)));
        }
        let n = self.points.len();
        let mut next = vec![u32::MAX; n];
        let mut indeg = vec![0u8; n];
        for &(a, b) in &self.edges {
            if next[a as usize] != u32::MAX {
                return Err(Error::numerical("preimage branches"));
            }
            next[a as usize] = b;
            indeg[b as usize] += 1;
        }
        for p in 0..n {
            let used = next[p] != u32::MAX;
            if used != (indeg[p] == 1) || indeg[p] > 1 {
                return Err(Error::numerical("open preimage chain"));
            }
        }
        let mut seen = vec![false; n];
        let mut loops = Vec::new();
        for s in 0..n {
            if seen[s] || next[s] == u32::MAX {
                continue;
            }
            let mut v = Vec::new();
            let mut c = s;
            while !seen[c] {
                seen[c] = true;
                v.push(self.points[c]);
                c = next[c] as usize;
            }
            v.dedup_by(|a, b| dist(*a, *b) <= 1e-12);
            while v.len() > 1 && dist(v[0], *v.last().unwrap()) <= 1e-12 {
                v.pop();
            }
            if v.len() >= 3 {
                loops.push(Polyline3 { closed: true, vertices: v });
            }
        }
        Ok(PreimageFamily { value: self.m, loops })
    }
}

/// Preimages of several values in one sweep, by piecewise-linear
/// interpolation on the Kuhn subdivision of each lattice cube. The
/// interpolated functions are the stereographic coordinates of `u` from
/// `−M`, so only the branch `u = M` (where `u·M > 0`) is traced.
pub fn extract_preimages(field: &dyn SphereField, values: &[V3], resolution: usize) -> Result<Vec<PreimageFamily>> {
    let spec = LatticeSpec::new(field, resolution)?;
    let mut ex: Vec<Extractor> = values.iter().map(|&m| Extractor::new(normalize(m))).collect();
    sweep(&spec, field, |w| {
        let (cur, next) = (&w[2], &w[3]);
        let i = cur.i;
        for (n, &k) in cur.keys.iter().enumerate() {
            let (j, l) = unkey(k);
            let corner: [(u64, V3, V3); 8] = std::array::from_fn(|c| {
                let (di, dj, dl) = ((c & 1) as i64, ((c >> 1) & 1) as i64, ((c >> 2) & 1) as i64);
                let u = if c == 0 {
                    cur.values[n]
                } else if di == 0 {
                    cur.get(j + dj, l + dl)
                } else {
                    next.get(j + dj, l + dl)
                };
                let g = [i + di, j + dj, l + dl];
                (pack(g), spec.position(g[0], g[1], g[2]), u)
            });
            if corner.iter().all(|c| c.2 == SOUTH) {
                continue;
            }
            for e in ex.iter_mut() {
                e.cell(&corner);
            }
        }
    });
    ex.into_iter().map(|e| e.finish()).collect()
}

/// Preimage of one value.
pub fn extract_preimage(field: &dyn SphereField, value: V3, resolution: usize) -> Result<PreimageFamily> {
    Ok(extract_preimages(field, &[value], resolution)?.remove(0))
}

/// Douglas–Peucker on a closed polygon: every dropped vertex lies within
/// `eps` of the kept chord that replaces it.
fn simplify(p: &Polyline3, eps: f64) -> Polyline3 {
    let v = &p.vertices;
    let n = v.len();
    if n <= 4 {
        return p.clone();
    }
    let far = (1..n).max_by(|&a, &b| dist(v[0], v[a]).total_cmp(&dist(v[0], v[b]))).unwrap();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let mut stack = vec![(0usize, far), (far, n)];
    while let Some((a, b)) = stack.pop() {
        if b - a < 2 {
            continue;
        }
        let (pa, pb) = (v[a], v[b % n]);
        let mut best = (0.0, a);
        for (t, &q) in v.iter().enumerate().take(b).skip(a + 1) {
            let d = segment_distance3(q, q, pa, pb);
            if d > best.0 {
                best = (d, t);
            }
        }
        if best.0 > eps {
            keep[best.1] = true;
            stack.push((a, best.1));
            stack.push((best.1, b));
        }
    }
    let mut out: Vec<V3> = (0..n).filter(|&i| keep[i]).map(|i| v[i]).collect();
    if out.len() < 3 {
        out = vec![v[0], v[n / 3], v[2 * n / 3]];
    }
    Polyline3 { closed: true, vertices: out }
}

fn family_distance(a: &[Polyline3], b: &[Polyline3]) -> f64 {
    let mut d = f64::INFINITY;
    for x in a {
        for y in b {
            d = d.min(x.distance_to(y));
        }
    }
    d
}

/// Linking number of two disjoint families of closed polygons. Both are
/// simplified with tolerance `ε` only when the simplified families stay
/// more than `4ε` apart, so the straight-line homotopy back to the
/// originals never lets them meet and the linking number is unchanged.
pub fn preimage_linking(a: &[Polyline3], b: &[Polyline3], eps: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let mut e = eps;
    for _ in 0..8 {
        let sa: Vec<Polyline3> = a.iter().map(|p| simplify(p, e)).collect();
        let sb: Vec<Polyline3> = b.iter().map(|p| simplify(p, e)).collect();
        if family_distance(&sa, &sb) > 4.0 * e {
            let mut s = 0.0;
            for x in &sa {
                for y in &sb {
                    s += gauss_linking(x, y)?;
                }
            }
            return Ok(s);
        }
        e /= 4.0;
    }
    Err(Error::numerical("preimage families are too close to separate"))
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfPreimage {
    pub hopf: i64,
    /// Gauss sum before rounding.
    pub raw: f64,
    pub values: [V3; 2],
    pub loops: [usize; 2],
    pub lengths: [f64; 2],
    pub resolution: usize,
    pub h: f64,
    pub attempts: usize,
}

/// Default regular values: one near the north pole, one on the equator.
pub const DEFAULT_VALUES: [V3; 2] = [[0.198_669_330_795_061_2, 0.0, 0.980_066_577_841_241_6], [1.0, 0.0, 0.0]];

fn rotate_z(v: V3, a: f64) -> V3 {
    let (s, c) = a.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Hopf invariant as the linking number of two preimages, retrying with
/// values rotated by the golden angle when the lattice is degenerate for
/// the current pair.
pub fn hopf_preimage(field: &dyn SphereField, resolution: usize) -> Result<HopfPreimage> {
    hopf_preimage_with(field, resolution, DEFAULT_VALUES)
}

pub fn hopf_preimage_with(field: &dyn SphereField, resolution: usize, values: [V3; 2]) -> Result<HopfPreimage> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let h = field.sampling_extent() / resolution as f64;
    if h > field.feature_size() / 2.0 {
        let need = (2.0 * field.sampling_extent() / field.feature_size()).ceil();
        return Err(Error::input(format!("resolution {resolution} too coarse for {}: need at least {need}", field.name())));
    }
    let mut last = None;
    for attempt in 0..4 {
        let m = values.map(|v| normalize(rotate_z(v, golden * attempt as f64)));
        match extract_preimages(field, &m, resolution) {
            Ok(fam) => {
                let raw = preimage_linking(&fam[0].loops, &fam[1].loops, h / 4.0)?;
                let hopf = raw.round() as i64;
                if (raw - hopf as f64).abs() > 1e-6 {
                    return Err(Error::numerical(format!("linking sum {raw} is not an integer")));
                }
                return Ok(HopfPreimage {
                    hopf,
                    raw,
                    values: m,
                    loops: [fam[0].loops.len(), fam[1].loops.len()],
                    lengths: [fam[0].total_length(), fam[1].total_length()],
                    resolution,
                    h,
                    attempts: attempt + 1,
                });
            }
            Err(e @ Error::Numerical(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}
