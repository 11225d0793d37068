use std::collections::HashMap;

use super::{Aabb, DiskProfile, SphereField, SOUTH};
use crate::curves::{build_sheaves, horizontal_stadium, perpendicular_stadium, segment_distance3, FramedCurve, Framing, Stadium};
use crate::error::{Error, Result};
use crate::geom::{closest_on_segment, cross, dot, norm, normalize, scale, sub, V3};

/// Tube field of a family of disjoint framed curves: inside the tube of
/// radius `ρ` around a curve, the normal-disk coordinates with respect to
/// the framing are fed through the profile; everything else is south.
pub struct PontryaginField {
    curves: Vec<FramedCurve>,
    profile: DiskProfile,
    /// Per curve: per segment `(τ₁, τ₂)` at the segment midpoint, and the
    /// outward in-plane normal at each vertex for reference framings.
    seg_frames: Vec<Vec<(V3, V3)>>,
    vertex_normals: Vec<Vec<V3>>,
    cell: f64,
    index: HashMap<[i64; 3], Vec<(u32, u32)>>,
    support: f64,
    name: String,
}

fn cell_of(x: V3, cell: f64) -> [i64; 3] {
    [(x[0] / cell).floor() as i64, (x[1] / cell).floor() as i64, (x[2] / cell).floor() as i64]
}

fn seg_box(a: V3, b: V3, pad: f64) -> Aabb {
    (std::array::from_fn(|i| a[i].min(b[i]) - pad), std::array::from_fn(|i| a[i].max(b[i]) + pad))
}

/// Distinct curves must stay `3ρ` apart; parts of one curve that are more
/// than `4ρ` apart along it must stay `2ρ` apart.
fn check_tubes(curves: &[FramedCurve], rho: f64) -> Result<()> {
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            let d = a.curve.distance_to(&b.curve);
            if d < 3.0 * rho {
                return Err(Error::input(format!("tube overlap: curves {d:.4} apart, radius {rho}")));
            }
        }
        // Pieces of length at most ρ, with their arc-length positions.
        let mut pieces: Vec<(V3, V3, f64)> = Vec::new();
        let mut arc = 0.0;
        for (p, q) in a.curve.segments() {
            let len = norm(sub(q, p));
            let m = (len / rho).ceil().max(1.0) as usize;
            for t in 0..m {
                let (u, w) = (t as f64 / m as f64, (t + 1) as f64 / m as f64);
                let at = |x: f64| -> V3 { std::array::from_fn(|i| p[i] + x * (q[i] - p[i])) };
                pieces.push((at(u), at(w), arc + u * len));
            }
            arc += len;
        }
        for (i, x) in pieces.iter().enumerate() {
            for y in &pieces[i + 1..] {
                let gap = y.2 - x.2;
                if gap.min(arc - gap) <= 4.0 * rho + 2.0 * rho {
                    continue;
                }
                if segment_distance3(x.0, x.1, y.0, y.1) < 2.0 * rho {
                    return Err(Error::input("tube overlap: curve comes back too close to itself"));
                }
            }
        }
    }
    Ok(())
}

/// Field of framed curves with tube radius `rho`.
pub fn pontryagin_field(curves: Vec<FramedCurve>, rho: f64, name: &str) -> Result<PontryaginField> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::input("tube radius must be positive"));
    }
    if curves.is_empty() {
        return Err(Error::input("at least one curve is required"));
    }
    for c in &curves {
        c.check()?;
        if !c.curve.closed {
            return Err(Error::input("curves must be closed"));
        }
    }
    check_tubes(&curves, rho)?;
    let cell = 2.0 * rho;
    let mut index: HashMap<[i64; 3], Vec<(u32, u32)>> = HashMap::new();
    let mut seg_frames = Vec::new();
    let mut vertex_normals = Vec::new();
    let mut support: f64 = 0.0;
    for (ci, c) in curves.iter().enumerate() {
        let n = c.curve.segment_count();
        let mut frames = Vec::with_capacity(n);
        for s in 0..n {
            let (a, b) = c.curve.segment(s);
            let t = normalize(sub(b, a));
            let f = match &c.framing {
                Framing::Reference { normal } => {
                    let nn = normalize(*normal);
                    (nn, normalize(cross(t, nn)))
                }
                Framing::Explicit { frames } => {
                    let (u, w) = (frames[s].0, frames[(s + 1) % frames.len()].0);
                    let m = scale([u[0] + w[0], u[1] + w[1], u[2] + w[2]], 0.5);
                    let m = normalize(sub(m, scale(t, dot(m, t))));
                    (m, cross(t, m))
                }
            };
            frames.push(f);
            let (lo, hi) = seg_box(a, b, rho);
            let (l, h) = (cell_of(lo, cell), cell_of(hi, cell));
            for x in l[0]..=h[0] {
                for y in l[1]..=h[1] {
                    for z in l[2]..=h[2] {
                        index.entry([x, y, z]).or_default().push((ci as u32, s as u32));
                    }
                }
            }
        }
        let nv = c.curve.vertices.len();
        let normals = (0..nv)
            .map(|v| {
                let prev = frames[(v + n - 1) % n].1;
                let next = frames[v % n].1;
                normalize([prev[0] + next[0], prev[1] + next[1], prev[2] + next[2]])
            })
            .collect();
        vertex_normals.push(normals);
        seg_frames.push(frames);
        support = support.max(c.curve.max_radius() + rho);
    }
    Ok(PontryaginField { curves, profile: DiskProfile { rho }, seg_frames, vertex_normals, cell, index, support, name: name.to_string() })
}

impl PontryaginField {
    pub fn rho(&self) -> f64 {
        self.profile.rho
    }

    pub fn curves(&self) -> &[FramedCurve] {
        &self.curves
    }

    /// Normal-disk coordinates of `x` around the nearest curve, if within
    /// the tube.
    pub fn disk_coordinates(&self, x: V3) -> Option<(f64, f64)> {
        let cands = self.index.get(&cell_of(x, self.cell))?;
        let mut best: Option<(f64, u32, u32, V3, f64)> = None;
        for &(c, s) in cands {
            let (a, b) = self.curves[c as usize].curve.segment(s as usize);
            let (p, t) = closest_on_segment(x, a, b);
            let d = norm(sub(x, p));
            if best.map_or(true, |bb| d < bb.0) {
                best = Some((d, c, s, p, t));
            }
        }
        let (d, c, s, p, t) = best?;
        if d >= self.profile.rho {
            return None;
        }
        let (c, s) = (c as usize, s as usize);
        let (t1, t2) = self.seg_frames[c][s];
        let v = sub(x, p);
        let x1 = dot(v, t1);
        match self.curves[c].framing {
            Framing::Reference { .. } => {
                let q = sub(v, scale(t1, x1));
                let nv = self.vertex_normals[c].len();
                let nu = if t <= 0.0 {
                    self.vertex_normals[c][s]
                } else if t >= 1.0 {
                    self.vertex_normals[c][(s + 1) % nv]
                } else {
                    t2
                };
                let x2 = norm(q) * if dot(q, nu) < 0.0 { -1.0 } else { 1.0 };
                Some((x1, x2))
            }
            Framing::Explicit { .. } => Some((x1, dot(v, t2))),
        }
    }
}

impl SphereField for PontryaginField {
    fn eval(&self, x: V3) -> V3 {
        match self.disk_coordinates(x) {
            Some((a, b)) => self.profile.chi(a, b),
            None => SOUTH,
        }
    }
    fn support_radius(&self) -> f64 {
        self.support
    }
    fn active_boxes(&self) -> Vec<Aabb> {
        let mut out = Vec::new();
        for c in &self.curves {
            for (a, b) in c.curve.segments() {
                out.push(seg_box(a, b, self.profile.rho));
            }
        }
        out
    }
    fn sampling_extent(&self) -> f64 {
        32.0 * self.profile.rho
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

fn stadium_curve(s: &Stadium, n: usize) -> FramedCurve {
    FramedCurve { curve: s.polygon(n), framing: Framing::Reference { normal: s.normal() } }
}

/// Tube radius of the spaghetton at level `k`: a quarter of the fiber
/// spacing.
pub fn spaghetton_rho(k: usize) -> f64 {
    0.25 / k as f64
}

pub const MAX_SPAGHETTON_K: usize = 4;

/// Declared support radius of every spaghetton.
pub const SPAGHETTON_SUPPORT: f64 = 17.0;

/// Tube field of both sheaves at level `k`, each stadium with its reference
/// framing. The tube radius defaults to [`spaghetton_rho`].
pub fn spaghetton_field(k: usize, rho: Option<f64>) -> Result<PontryaginField> {
    if !(1..=MAX_SPAGHETTON_K).contains(&k) {
        return Err(Error::input(format!("spaghetton level must be in 1..={MAX_SPAGHETTON_K}")));
    }
    let pair = build_sheaves(k)?;
    let mut curves = Vec::new();
    for (p, s) in pair.horizontal.iter().zip(&pair.horizontal_stadia) {
        curves.push(FramedCurve { curve: p.clone(), framing: Framing::Reference { normal: s.normal() } });
    }
    for (p, s) in pair.perpendicular.iter().zip(&pair.perpendicular_stadia) {
        curves.push(FramedCurve { curve: p.clone(), framing: Framing::Reference { normal: s.normal() } });
    }
    let mut f = pontryagin_field(curves, rho.unwrap_or(spaghetton_rho(k)), &format!("spaghetton{k}"))?;
    f.support = f.support.max(SPAGHETTON_SUPPORT);
    Ok(f)
}

/// The single stadium of the first sheaf at level 1.
pub fn stadium_field(rho: f64) -> Result<PontryaginField> {
    let s = horizontal_stadium(1, 0, 0);
    pontryagin_field(vec![stadium_curve(&s, Stadium::edges_for(s.radius, 0.01))], rho, "stadium")
}

/// One stadium of each sheaf at level 1; they link once.
pub fn linked_stadia_field(rho: f64) -> Result<PontryaginField> {
    let a = horizontal_stadium(1, 0, 0);
    let b = perpendicular_stadium(1, 0, 0);
    let n = Stadium::edges_for(5.0, 0.01);
    pontryagin_field(vec![stadium_curve(&a, n), stadium_curve(&b, n)], rho, "linked")
}

