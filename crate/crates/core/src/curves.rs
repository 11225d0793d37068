//! Closed polygonal curves, linking numbers, the two perpendicular sheaves
//! of stadium curves, and the curves of the four-dimensional crossing
//! gadget.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geom::{cross, dist, dot, norm, normalize, scale, sub, V3};
use crate::{par, Error, Result};

/// Consecutive vertices closer than this are rejected.
pub const DUPLICATE_TOL: f64 = 1e-12;
/// Curves closer than this are treated as intersecting.
pub const CONTACT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline3 {
    pub closed: bool,
    pub vertices: Vec<V3>,
}

impl Polyline3 {
    pub fn new(vertices: Vec<V3>, closed: bool) -> Result<Polyline3> {
        let c = Polyline3 { closed, vertices };
        c.check()?;
        Ok(c)
    }

    pub fn closed(vertices: Vec<V3>) -> Result<Polyline3> {
        Polyline3::new(vertices, true)
    }

    pub fn check(&self) -> Result<()> {
        if self.closed && self.vertices.len() < 3 {
            return Err(Error::input("a closed curve needs at least 3 vertices"));
        }
        if self.vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::input("curve vertex is not finite"));
        }
        for (a, b) in self.segments() {
            if dist(a, b) <= DUPLICATE_TOL {
                return Err(Error::input("consecutive duplicate vertices"));
            }
        }
        Ok(())
    }

    pub fn segment_count(&self) -> usize {
        let n = self.vertices.len();
        if self.closed {
            n
        } else {
            n.saturating_sub(1)
        }
    }

    pub fn segment(&self, i: usize) -> (V3, V3) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn segments(&self) -> impl Iterator<Item = (V3, V3)> + '_ {
        (0..self.segment_count()).map(move |i| self.segment(i))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist(a, b)).sum()
    }

    pub fn translated(&self, t: V3) -> Polyline3 {
        Polyline3 { closed: self.closed, vertices: self.vertices.iter().map(|&v| crate::geom::add(v, t)).collect() }
    }

    pub fn reversed(&self) -> Polyline3 {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline3 { closed: self.closed, vertices: v }
    }

    pub fn max_radius(&self) -> f64 {
        self.vertices.iter().map(|&v| norm(v)).fold(0.0, f64::max)
    }

    /// Minimum distance to another curve.
    pub fn distance_to(&self, other: &Polyline3) -> f64 {
        let mut best = f64::INFINITY;
        for (a, b) in self.segments() {
            for (c, d) in other.segments() {
                best = best.min(segment_distance3(a, b, c, d));
            }
        }
        best
    }

    /// Minimum distance between non-adjacent segments; a curve is simple
    /// when this is positive.
    pub fn self_distance(&self) -> f64 {
        let n = self.segment_count();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 2..n {
                if self.closed && i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = self.segment(i);
                let (c, d) = self.segment(j);
                best = best.min(segment_distance3(a, b, c, d));
            }
        }
        best
    }

    /// Unit tangent at a vertex: the normalized average of the adjacent
    /// segment directions.
    pub fn vertex_tangent(&self, i: usize) -> V3 {
        let n = self.vertices.len();
        let next = if i + 1 < n || self.closed { Some(normalize(sub(self.vertices[(i + 1) % n], self.vertices[i]))) } else { None };
        let prev = if i > 0 || self.closed { Some(normalize(sub(self.vertices[i], self.vertices[(i + n - 1) % n]))) } else { None };
        match (prev, next) {
            (Some(p), Some(q)) => normalize(crate::geom::add(p, q)),
            (Some(p), None) => p,
            (None, Some(q)) => q,
            (None, None) => [0.0; 3],
        }
    }
}

/// Distance between segments `[a,b]` and `[c,d]` in 3-space.
pub fn segment_distance3(a: V3, b: V3, c: V3, d: V3) -> f64 {
    let d1 = sub(b, a);
    let d2 = sub(d, c);
    let r = sub(a, c);
    let (aa, ee, ff) = (dot(d1, d1), dot(d2, d2), dot(d2, r));
    let (s, t);
    if aa <= 1e-300 && ee <= 1e-300 {
        return dist(a, c);
    }
    if aa <= 1e-300 {
        s = 0.0;
        t = (ff / ee).clamp(0.0, 1.0);
    } else {
        let cc = dot(d1, r);
        if ee <= 1e-300 {
            t = 0.0;
            s = (-cc / aa).clamp(0.0, 1.0);
        } else {
            let bb = dot(d1, d2);
            let den = aa * ee - bb * bb;
            let mut s0 = if den > 1e-14 * aa * ee { ((bb * ff - cc * ee) / den).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (bb * s0 + ff) / ee;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-cc / aa).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((bb - cc) / aa).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let p = crate::geom::axpy(s, d1, a);
    let q = crate::geom::axpy(t, d2, c);
    dist(p, q)
}

/// Signed solid angle subtended by the pair of segments, divided by 4π.
fn segment_pair_linking(p1: V3, p2: V3, p3: V3, p4: V3) -> f64 {
    let r13 = sub(p3, p1);
    let r14 = sub(p4, p1);
    let r23 = sub(p3, p2);
    let r24 = sub(p4, p2);
    let n = [cross(r13, r14), cross(r14, r24), cross(r24, r23), cross(r23, r13)];
    let mut u = [[0.0; 3]; 4];
    for i in 0..4 {
        let l = norm(n[i]);
        if l < 1e-300 {
            return 0.0;
        }
        u[i] = scale(n[i], 1.0 / l);
    }
    let mut omega = 0.0;
    for i in 0..4 {
        omega += dot(u[i], u[(i + 1) % 4]).clamp(-1.0, 1.0).asin();
    }
    let s = dot(cross(sub(p4, p3), sub(p2, p1)), r13);
    if s == 0.0 {
        return 0.0;
    }
    omega.copysign(s) / (4.0 * PI)
}

/// Linking number by the Gauss double integral, evaluated exactly on each
/// pair of straight segments.
pub fn gauss_linking(c1: &Polyline3, c2: &Polyline3) -> Result<f64> {
    if !c1.closed || !c2.closed {
        return Err(Error::input("linking needs closed curves"));
    }
    c1.check()?;
    c2.check()?;
    let parts = par::map_range(c1.segment_count(), |i| {
        let (a, b) = c1.segment(i);
        let mut sum = 0.0;
        let mut close = f64::INFINITY;
        for (c, d) in c2.segments() {
            close = close.min(segment_distance3(a, b, c, d));
            sum += segment_pair_linking(a, b, c, d);
        }
        (sum, close)
    });
    let close = parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if close <= CONTACT_TOL {
        return Err(Error::input(format!("curves are too close ({close:.3e})")));
    }
    Ok(parts.iter().map(|p| p.0).sum::<f64>())
}

/// Gauss linking rounded to an integer, with the rounding error.
pub fn gauss_linking_int(c1: &Polyline3, c2: &Polyline3) -> Result<(i64, f64)> {
    let g = gauss_linking(c1, c2)?;
    let r = g.round();
    Ok((r as i64, (g - r).abs()))
}

const GENERIC_TOL: f64 = 1e-9;

fn orthonormal_basis(d: V3) -> (V3, V3) {
    let a = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = normalize(cross(d, a));
    let v = cross(d, u);
    (u, v)
}

fn crossing_sum(c1: &Polyline3, c2: &Polyline3, d: V3) -> Option<i64> {
    let (u, v) = orthonormal_basis(d);
    let proj = |p: V3| ([dot(p, u), dot(p, v)], dot(p, d));
    let s2: Vec<_> = c2.segments().map(|(a, b)| (proj(a), proj(b), sub(b, a))).collect();
    let mut total = 0i64;
    for (a, b) in c1.segments() {
        let ((pa, ha), (pb, hb)) = (proj(a), proj(b));
        let t1 = sub(b, a);
        let e1 = [pb[0] - pa[0], pb[1] - pa[1]];
        for &((pc, hc), (pd, hd), t2) in &s2 {
            let e2 = [pd[0] - pc[0], pd[1] - pc[1]];
            let den = e1[0] * e2[1] - e1[1] * e2[0];
            let w = [pc[0] - pa[0], pc[1] - pa[1]];
            let l1 = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
            let l2 = (e2[0] * e2[0] + e2[1] * e2[1]).sqrt();
            if den.abs() <= 1e-12 * l1 * l2 {
                // Parallel in projection: only a problem if they overlap.
                let off = (w[0] * e1[1] - w[1] * e1[0]).abs() / l1.max(1e-300);
                if off <= GENERIC_TOL && l1 > 0.0 && l2 > 0.0 {
                    let t0 = (w[0] * e1[0] + w[1] * e1[1]) / (l1 * l1);
                    let t1e = ((pd[0] - pa[0]) * e1[0] + (pd[1] - pa[1]) * e1[1]) / (l1 * l1);
                    if t0.max(t1e) >= -GENERIC_TOL && t0.min(t1e) <= 1.0 + GENERIC_TOL {
                        return None;
                    }
                }
                continue;
            }
            let s = (w[0] * e2[1] - w[1] * e2[0]) / den;
            let t = (w[0] * e1[1] - w[1] * e1[0]) / den;
            let (es, et) = (GENERIC_TOL / l1.max(1e-300), GENERIC_TOL / l2.max(1e-300));
            let near_s = s > -es && s < 1.0 + es;
            let near_t = t > -et && t < 1.0 + et;
            if !(near_s && near_t) {
                continue;
            }
            if s < es || s > 1.0 - es || t < et || t > 1.0 - et {
                return None;
            }
            let h1 = ha + s * (hb - ha);
            let h2 = hc + t * (hd - hc);
            if (h1 - h2).abs() <= GENERIC_TOL {
                return None;
            }
            let orient = dot(cross(t1, t2), d);
            total += ((h1 - h2).signum() * orient.signum()) as i64;
        }
    }
    Some(total)
}

/// Linking number as half the signed crossing count of the projection
/// along `direction`; the direction is perturbed when the projection is
/// not generic.
pub fn crossing_linking(c1: &Polyline3, c2: &Polyline3, direction: V3) -> Result<i64> {
    if !c1.closed || !c2.closed {
        return Err(Error::input("linking needs closed curves"));
    }
    c1.check()?;
    c2.check()?;
    if norm(direction) == 0.0 {
        return Err(Error::input("projection direction must be nonzero"));
    }
    let mut d = normalize(direction);
    for attempt in 0..=8 {
        if let Some(t) = crossing_sum(c1, c2, d) {
            if t % 2 != 0 {
                return Err(Error::numerical("odd signed crossing count"));
            }
            return Ok(t / 2);
        }
        // Tilt by a small irrational-looking angle about a fixed axis.
        let (u, v) = orthonormal_basis(d);
        let ang = 1e-3 * (attempt as f64 + 1.0) * 0.7548776662466927;
        let w = normalize(crate::geom::add(u, scale(v, 0.5698402909980532)));
        d = normalize(crate::geom::add(scale(d, ang.cos()), scale(w, ang.sin())));
    }
    Err(Error::numerical("projection stayed non-generic after 8 perturbations"))
}

/// Default projection direction: generic for the axis-aligned families
/// built here.
pub const DEFAULT_DIRECTION: V3 = [0.1234567, 0.2718281, 0.9541231];

/// Sum of pairwise linking numbers between two families of curves.
pub fn family_linking(a: &[Polyline3], b: &[Polyline3]) -> Result<f64> {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += gauss_linking(x, y)?;
        }
    }
    Ok(s)
}

/// Framing of a curve: either the rule for planar curves (first vector the
/// plane normal, second the in-plane exterior normal) or explicit pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Framing {
    Reference { normal: V3 },
    Explicit { frames: Vec<(V3, V3)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FramedCurve {
    pub curve: Polyline3,
    pub framing: Framing,
}

impl FramedCurve {
    /// Frame at vertex `i`.
    pub fn frame(&self, i: usize) -> (V3, V3) {
        match &self.framing {
            Framing::Reference { normal } => {
                let n = normalize(*normal);
                let t = self.curve.vertex_tangent(i);
                (n, normalize(cross(t, n)))
            }
            Framing::Explicit { frames } => frames[i],
        }
    }

    /// Checks unit length, mutual orthogonality, orthogonality to the
    /// tangent and that `(τ₁, τ₂, tangent)` is direct.
    pub fn check(&self) -> Result<()> {
        self.curve.check()?;
        if let Framing::Explicit { frames } = &self.framing {
            if frames.len() != self.curve.vertices.len() {
                return Err(Error::input("one frame per vertex is required"));
            }
        }
        if let Framing::Reference { normal } = &self.framing {
            if norm(*normal) == 0.0 {
                return Err(Error::input("reference normal must be nonzero"));
            }
            let n = normalize(*normal);
            let c = self.curve.vertices[0];
            if self.curve.vertices.iter().any(|&v| dot(sub(v, c), n).abs() > 1e-9) {
                return Err(Error::input("reference framing needs a planar curve"));
            }
        }
        for i in 0..self.curve.vertices.len() {
            let (a, b) = self.frame(i);
            let t = self.curve.vertex_tangent(i);
            let bad = (norm(a) - 1.0).abs() > 1e-6
                || (norm(b) - 1.0).abs() > 1e-6
                || dot(a, b).abs() > 1e-6
                || dot(a, t).abs() > 1e-6
                || dot(b, t).abs() > 1e-6
                || dot(cross(a, b), t) <= 0.0;
            if bad {
                return Err(Error::input(format!("frame at vertex {i} is not a direct orthonormal normal frame")));
            }
        }
        Ok(())
    }
}

/// Planar stadium: two parallel segments joined by half circles. Built in
/// a plane spanned by orthonormal `(e, f)` around `origin`, counter-
/// clockwise in `(e, f)`: the lower segment runs from `(-half, -radius)`
/// to `(half, -radius)` relative to the centre line.
#[derive(Clone, Copy, Debug)]
pub struct Stadium {
    pub origin: V3,
    pub e: V3,
    pub f: V3,
    /// Half length of the straight parts.
    pub half: f64,
    pub radius: f64,
}

impl Stadium {
    /// Polygon circumscribed about the stadium with `n` edges per half
    /// circle; the straight parts are exact and every polygon edge is
    /// tangent to the true curve, so the polygon stays outside it by at
    /// most `radius·(1/cos(π/2n) − 1)`.
    pub fn polygon(&self, n: usize) -> Polyline3 {
        let at = |x: f64, y: f64| -> V3 {
            [
                self.origin[0] + x * self.e[0] + y * self.f[0],
                self.origin[1] + x * self.e[1] + y * self.f[1],
                self.origin[2] + x * self.e[2] + y * self.f[2],
            ]
        };
        let delta = PI / n as f64;
        let rv = self.radius / (delta / 2.0).cos();
        let mut v = Vec::with_capacity(2 * n + 4);
        for (cx, start) in [(self.half, -PI / 2.0), (-self.half, PI / 2.0)] {
            v.push(at(cx + self.radius * start.cos(), self.radius * start.sin()));
            for j in 0..n {
                let a = start + (j as f64 + 0.5) * delta;
                v.push(at(cx + rv * a.cos(), rv * a.sin()));
            }
            let end = start + PI;
            v.push(at(cx + self.radius * end.cos(), self.radius * end.sin()));
        }
        Polyline3 { closed: true, vertices: v }
    }

    /// Edges per half circle so that the polygon deviates by at most `tol`.
    pub fn edges_for(radius: f64, tol: f64) -> usize {
        let half = (1.0 / (1.0 + tol / radius)).acos();
        ((PI / (2.0 * half)).ceil() as usize).max(2)
    }

    pub fn normal(&self) -> V3 {
        cross(self.e, self.f)
    }
}

pub const MAX_SHEAF_K: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct SheafPair {
    pub k: usize,
    /// Index `(j, q)` at position `j·k + q`.
    pub horizontal: Vec<Polyline3>,
    /// Index `(i, q)` at position `i·k + q`.
    pub perpendicular: Vec<Polyline3>,
    #[serde(skip)]
    pub horizontal_stadia: Vec<Stadium>,
    #[serde(skip)]
    pub perpendicular_stadia: Vec<Stadium>,
}

/// Stadium of the first sheaf with indices `(j, q)`: straight parts at
/// heights `-j/k` and `10 + j/k` over `x ∈ [-5, 5]`, in the plane
/// `x₃ = q/k`.
pub fn horizontal_stadium(k: usize, j: usize, q: usize) -> Stadium {
    let kf = k as f64;
    Stadium { origin: [0.0, 5.0, q as f64 / kf], e: [1.0, 0.0, 0.0], f: [0.0, 1.0, 0.0], half: 5.0, radius: 5.0 + j as f64 / kf }
}

/// Stadium of the second sheaf with indices `(i, q)`: in the plane
/// `x₁ = i/k`, straight parts `x₂ ∈ [-7, 3]` at `x₃ = ±(5 + q/k)`.
pub fn perpendicular_stadium(k: usize, i: usize, q: usize) -> Stadium {
    let kf = k as f64;
    Stadium { origin: [i as f64 / kf, -2.0, 0.0], e: [0.0, 1.0, 0.0], f: [0.0, 0.0, 1.0], half: 5.0, radius: 5.0 + q as f64 / kf }
}

/// Both sheaves for `1 ≤ k ≤ 8`, with arcs sampled to deviate by at most
/// `0.01/k`. All stadia of a sheaf share the angular subdivision, so
/// neighbouring fibers stay exactly `1/k` apart.
pub fn build_sheaves(k: usize) -> Result<SheafPair> {
    if !(1..=MAX_SHEAF_K).contains(&k) {
        return Err(Error::input(format!("sheaf parameter k must be in 1..={MAX_SHEAF_K}")));
    }
    let n = Stadium::edges_for(6.0, 0.01 / k as f64);
    let mut hs = Vec::new();
    let mut ps = Vec::new();
    for a in 0..k {
        for q in 0..k {
            hs.push(horizontal_stadium(k, a, q));
            ps.push(perpendicular_stadium(k, a, q));
        }
    }
    Ok(SheafPair {
        k,
        horizontal: hs.iter().map(|s| s.polygon(n)).collect(),
        perpendicular: ps.iter().map(|s| s.polygon(n)).collect(),
        horizontal_stadia: hs,
        perpendicular_stadia: ps,
    })
}

impl SheafPair {
    pub fn intra_min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for fam in [&self.horizontal, &self.perpendicular] {
            for i in 0..fam.len() {
                for j in i + 1..fam.len() {
                    best = best.min(fam[i].distance_to(&fam[j]));
                }
            }
        }
        best
    }

    pub fn inter_min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.horizontal {
            for b in &self.perpendicular {
                best = best.min(a.distance_to(b));
            }
        }
        best
    }

    pub fn max_radius(&self) -> f64 {
        self.horizontal.iter().chain(&self.perpendicular).map(|c| c.max_radius()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkingSummary {
    pub k: usize,
    pub pairs: usize,
    pub total_linking: i64,
    pub gauss_sum: f64,
    pub crossing_total: i64,
    /// Largest distance of a pairwise Gauss value from its integer.
    pub max_gauss_error: f64,
    pub methods_agree: bool,
}

/// Pairwise linking of every horizontal fiber with every perpendicular
/// fiber, by both methods.
pub fn total_linking(pair: &SheafPair) -> Result<LinkingSummary> {
    let mut jobs = Vec::new();
    for a in 0..pair.horizontal.len() {
        for b in 0..pair.perpendicular.len() {
            jobs.push((a, b));
        }
    }
    let res = jobs
        .iter()
        .map(|&(a, b)| -> Result<(f64, i64)> {
            let g = gauss_linking(&pair.horizontal[a], &pair.perpendicular[b])?;
            let c = crossing_linking(&pair.horizontal[a], &pair.perpendicular[b], DEFAULT_DIRECTION)?;
            Ok((g, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let gauss_sum: f64 = res.iter().map(|r| r.0).sum();
    let max_gauss_error = res.iter().map(|r| (r.0 - r.0.round()).abs()).fold(0.0, f64::max);
    let rounded: i64 = res.iter().map(|r| r.0.round() as i64).sum();
    let crossing_total: i64 = res.iter().map(|r| r.1).sum();
    let methods_agree = res.iter().all(|r| r.0.round() as i64 == r.1);
    Ok(LinkingSummary { k: pair.k, pairs: res.len(), total_linking: rounded, gauss_sum, crossing_total, max_gauss_error, methods_agree })
}

pub type V4 = [f64; 4];

/// Even profile with `g(0) = 1/2`, `g = −3/4` for `|s| ≥ 1/2`, monotone in
/// between, continuously differentiable.
pub fn gadget_profile(s: f64) -> f64 {
    let t = (2.0 * s.abs()).min(1.0);
    0.5 - 1.25 * t * t * (3.0 - 2.0 * t)
}

pub fn gadget_profile_derivative(s: f64) -> f64 {
    let t = 2.0 * s.abs();
    if t >= 1.0 {
        return 0.0;
    }
    -1.25 * 6.0 * t * (1.0 - t) * 2.0 * s.signum()
}

#[derive(Clone, Debug, Serialize)]
pub struct GadgetCurves {
    pub r: f64,
    pub l1: Vec<V4>,
    pub l2: Vec<V4>,
}

/// The two closed curves on the boundary of `[-r, r]⁴`: `L1` bounds the
/// square `[-r,r] × {0} × {r/4} × [-r,r]`; `L2` runs along the graph
/// `x₃ = r·g(x₂/r)` on the face `x₄ = r`, the segment `x₃ = −3r/4` on
/// `x₄ = −r`, and two lateral segments. `samples` points resolve the graph.
pub fn gadget_curves(r: f64, samples: usize) -> Result<GadgetCurves> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::input("gadget size r must be positive"));
    }
    let q = r / 4.0;
    let l1 = vec![[-r, 0.0, q, r], [r, 0.0, q, r], [r, 0.0, q, -r], [-r, 0.0, q, -r]];
    let low = -0.75 * r;
    let n = samples.max(8);
    let mut l2 = vec![[0.0, -r, low, -r], [0.0, r, low, -r]];
    for i in 0..=n {
        let x2 = r - 2.0 * r * i as f64 / n as f64;
        l2.push([0.0, x2, r * gadget_profile(x2 / r), r]);
    }
    Ok(GadgetCurves { r, l1, l2 })
}

/// A stereographic chart of `∂[-r,r]⁴`: radial projection to the round
/// 3-sphere, then stereographic projection from `pole`.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryChart {
    pub pole: V4,
    basis: [V4; 3],
}

fn dot4(a: &V4, b: &V4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn det4(m: [V4; 4]) -> f64 {
    let mut a = m;
    let mut det = 1.0;
    for c in 0..4 {
        let p = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for i in c + 1..4 {
            let f = a[i][c] / a[c][c];
            for j in c..4 {
                a[i][j] -= f * a[c][j];
            }
        }
    }
    det
}

impl BoundaryChart {
    /// The pole is normalized; the chart basis is chosen so that
    /// `(pole, b₁, b₂, b₃)` is positively oriented, which makes all charts
    /// induce the same orientation.
    pub fn new(pole: V4) -> Result<BoundaryChart> {
        let n = dot4(&pole, &pole).sqrt();
        if n == 0.0 {
            return Err(Error::input("pole must be nonzero"));
        }
        let p = pole.map(|x| x / n);
        let mut basis: Vec<V4> = Vec::new();
        for e in 0..4 {
            let mut v = [0.0; 4];
            v[e] = 1.0;
            let mut w = v;
            for b in std::iter::once(&p).chain(basis.iter()) {
                let c = dot4(&w, b);
                for i in 0..4 {
                    w[i] -= c * b[i];
                }
            }
            let l = dot4(&w, &w).sqrt();
            if l > 1e-6 && basis.len() < 3 {
                basis.push(w.map(|x| x / l));
            }
        }
        let mut b = [basis[0], basis[1], basis[2]];
        if det4([p, b[0], b[1], b[2]]) < 0.0 {
            b[2] = b[2].map(|x| -x);
        }
        Ok(BoundaryChart { pole: p, basis: b })
    }

    pub fn project(&self, x: &V4) -> Result<V3> {
        let n = dot4(x, x).sqrt();
        if n == 0.0 {
            return Err(Error::input("cannot project the origin"));
        }
        let y = x.map(|t| t / n);
        let c = dot4(&y, &self.pole);
        if 1.0 - c < 1e-9 {
            return Err(Error::input("point too close to the projection pole"));
        }
        let mut out = [0.0; 3];
        for (i, b) in self.basis.iter().enumerate() {
            out[i] = dot4(&y, b) / (1.0 - c);
        }
        Ok(out)
    }
}

impl BoundaryChart {
    /// Inverse stereographic projection back to the round unit 3-sphere.
    pub fn unproject(&self, y: V3) -> V4 {
        let s = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let c = (s - 1.0) / (s + 1.0);
        let w = 2.0 / (s + 1.0);
        std::array::from_fn(|j| c * self.pole[j] + w * (y[0] * self.basis[0][j] + y[1] * self.basis[1][j] + y[2] * self.basis[2][j]))
    }
}

/// Candidate poles on the faces `x₃ = ±r`, away from both gadget curves.
pub fn gadget_poles(r: f64) -> [V4; 4] {
    [[0.0, 0.0, r, 0.0], [0.5 * r, -0.5 * r, r, 0.5 * r], [0.0, 0.0, -r, 0.0], [-0.5 * r, 0.5 * r, -r, -0.5 * r]]
}

/// Image of a closed curve on the cube boundary in a chart, after
/// refining each edge so the curved image is resolved. The curve must stay
/// `0.1·r` away from the pole (in the max norm of the cube).
pub fn project_boundary_to_r3(curve: &[V4], chart: &BoundaryChart, r: f64, refine: usize) -> Result<Polyline3> {
    let pole_on_cube = {
        let m = chart.pole.iter().map(|x| x.abs()).fold(0.0, f64::max);
        chart.pole.map(|x| x * r / m)
    };
    let mut out = Vec::new();
    for i in 0..curve.len() {
        let a = curve[i];
        let b = curve[(i + 1) % curve.len()];
        for s in 0..refine.max(1) {
            let t = s as f64 / refine.max(1) as f64;
            let p: V4 = std::array::from_fn(|j| a[j] + t * (b[j] - a[j]));
            let gap = p.iter().zip(&pole_on_cube).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if gap < 0.1 * r {
                return Err(Error::input("curve passes too close to the projection pole"));
            }
            out.push(chart.project(&p)?);
        }
    }
    out.dedup_by(|a, b| dist(*a, *b) <= DUPLICATE_TOL);
    Polyline3::closed(out)
}

/// Linking number of the gadget curves in the chart of `pole`.
pub fn gadget_linking(r: f64, pole: V4) -> Result<(f64, i64)> {
    let g = gadget_curves(r, 64)?;
    let chart = BoundaryChart::new(pole)?;
    let c1 = project_boundary_to_r3(&g.l1, &chart, r, 32)?;
    let c2 = project_boundary_to_r3(&g.l2, &chart, r, 8)?;
    Ok((gauss_linking(&c1, &c2)?, crossing_linking(&c1, &c2, DEFAULT_DIRECTION)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(c: V3, e: V3, f: V3, n: usize) -> Polyline3 {
        let v = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [c[0] + t.cos() * e[0] + t.sin() * f[0], c[1] + t.cos() * e[1] + t.sin() * f[1], c[2] + t.cos() * e[2] + t.sin() * f[2]]
            })
            .collect();
        Polyline3::closed(v).unwrap()
    }

    /// Midpoint quadrature of the Gauss double integral.
    fn gauss_quadrature(a: &Polyline3, b: &Polyline3) -> f64 {
        let mut s = 0.0;
        for (p, q) in a.segments() {
            let m1 = scale(crate::geom::add(p, q), 0.5);
            let d1 = sub(q, p);
            for (u, v) in b.segments() {
                let m2 = scale(crate::geom::add(u, v), 0.5);
                let d2 = sub(v, u);
                let r = sub(m1, m2);
                s += dot(r, cross(d1, d2)) / norm(r).powi(3);
            }
        }
        s / (4.0 * PI)
    }

    fn hopf_pair() -> (Polyline3, Polyline3) {
        let a = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 400);
        let b = circle([0.0, -1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 400);
        (a, b)
    }

    #[test]
    fn circles_link_once() {
        let (a, b) = hopf_pair();
        let q = gauss_quadrature(&a, &b);
        let g = gauss_linking(&a, &b).unwrap();
        assert!((q - 1.0).abs() < 1e-2, "quadrature {q}");
        assert!((g - 1.0).abs() < 1e-6, "exact {g}");
        assert_eq!(crossing_linking(&a, &b, DEFAULT_DIRECTION).unwrap(), 1);
        assert_eq!(crossing_linking(&a, &b, [0.0, 0.0, 1.0]).unwrap(), 1);
        assert!((gauss_linking(&a, &b.reversed()).unwrap() + 1.0).abs() < 1e-6);
        assert_eq!(crossing_linking(&a.reversed(), &b, DEFAULT_DIRECTION).unwrap(), -1);
        assert!((gauss_linking(&b, &a).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn translate_is_unlinked() {
        let (a, _) = hopf_pair();
        let t = a.translated([0.3, 0.2, 0.5]);
        assert!(gauss_linking(&a, &t).unwrap().abs() < 1e-6);
        assert_eq!(crossing_linking(&a, &t, DEFAULT_DIRECTION).unwrap(), 0);
    }

    #[test]
    fn touching_curves_rejected() {
        let (a, _) = hopf_pair();
        assert!(gauss_linking(&a, &a.translated([0.0, 0.0, 1e-8])).is_err());
    }

    #[test]
    fn stadium_polygon_geometry() {
        let s = horizontal_stadium(2, 1, 0);
        let n = Stadium::edges_for(6.0, 0.005);
        let p = s.polygon(n);
        // Every vertex lies on or outside the true stadium, within tolerance.
        for v in &p.vertices {
            let cx = v[0].clamp(-5.0, 5.0);
            let d = ((v[0] - cx).powi(2) + (v[1] - 5.0).powi(2)).sqrt();
            assert!(d >= s.radius - 1e-12 && d <= s.radius + 0.005 + 1e-12, "{d}");
        }
        assert!(p.self_distance() > 0.0);
    }

    #[test]
    fn sheaves_k1_link() {
        let sp = build_sheaves(1).unwrap();
        let g = gauss_linking(&sp.horizontal[0], &sp.perpendicular[0]).unwrap();
        assert!((g - 1.0).abs() < 1e-6, "{g}");
    }

    #[test]
    fn sheaves_k2_distances() {
        let sp = build_sheaves(2).unwrap();
        assert!(sp.intra_min_distance() >= 0.5 - 1e-9);
        assert!(sp.max_radius() < 17.0);
        assert!(build_sheaves(0).is_err() && build_sheaves(9).is_err());
    }

    #[test]
    fn reference_frame_is_direct() {
        let (a, _) = hopf_pair();
        let f = FramedCurve { curve: a, framing: Framing::Reference { normal: [0.0, 0.0, 1.0] } };
        f.check().unwrap();
        let (t1, t2) = f.frame(0);
        assert!((t1[2] - 1.0).abs() < 1e-12);
        // Exterior normal at (1,0,0) points along +x.
        assert!(t2[0] > 0.99);
    }

    #[test]
    fn profile_constraints() {
        assert_eq!(gadget_profile(0.0), 0.5);
        for s in [0.5, 0.7, 1.0, -0.6] {
            assert!((gadget_profile(s) + 0.75).abs() < 1e-15);
        }
        let mut prev = gadget_profile(0.0);
        for i in 1..=100 {
            let s = i as f64 / 100.0;
            let g = gadget_profile(s);
            assert!(g <= prev + 1e-15);
            assert_eq!(g, gadget_profile(-s));
            let h = 1e-6;
            let fd = (gadget_profile(s + h) - gadget_profile(s - h)) / (2.0 * h);
            assert!((fd - gadget_profile_derivative(s)).abs() < 1e-4, "{s}");
            prev = g;
        }
    }
}
