use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{union_box, SphereField, SOUTH};
use crate::error::{Error, Result};
use crate::geom::{add, cross, dot, norm, normalize, scale, sub, V3};
use crate::par;

pub const MAX_DENSE: usize = 256;

/// Field values on a periodic cube of `n³` nodes `lo + (i, j, l)·h`.
#[derive(Clone, Debug)]
pub struct SampledField {
    pub n: usize,
    pub lo: V3,
    pub h: f64,
    pub values: Vec<V3>,
}

impl SampledField {
    fn at(&self, i: usize, j: usize, l: usize) -> V3 {
        self.values[(i * self.n + j) * self.n + l]
    }
}

/// Samples `field` on the cube `[lo, lo + side]³`; the outermost layer of
/// nodes must already be south, so the periodic extension is continuous.
pub fn sample_dense(field: &dyn SphereField, lo: V3, side: f64, n: usize) -> Result<SampledField> {
    if !(8..=MAX_DENSE).contains(&n) {
        return Err(Error::resource(format!("dense resolution must be in 8..={MAX_DENSE}")));
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::input("box side must be positive"));
    }
    let h = side / n as f64;
    let values = par::map_range(n * n * n, |idx| {
        let (i, j, l) = (idx / (n * n), (idx / n) % n, idx % n);
        field.eval([lo[0] + i as f64 * h, lo[1] + j as f64 * h, lo[2] + l as f64 * h])
    });
    let s = SampledField { n, lo, h, values };
    for i in 0..n {
        for j in 0..n {
            for l in [0, n - 1] {
                for (a, b, c) in [(i, j, l), (i, l, j), (l, i, j)] {
                    if norm(sub(s.at(a, b, c), SOUTH)) > 1e-9 {
                        return Err(Error::input("field is not constant on the boundary of the sampling box"));
                    }
                }
            }
        }
    }
    Ok(s)
}

fn fft_axis(data: &mut [Complex64], n: usize, axis: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let stride = [n * n, n, 1][axis];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for t in 0..n {
                buf[t] = data[base + t * stride];
            }
            fft.process(&mut buf);
            for t in 0..n {
                data[base + t * stride] = buf[t];
            }
        }
    }
}

fn fft3(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..3 {
        fft_axis(data, n, axis, inverse, &mut planner);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WhiteheadReport {
    pub hopf: f64,
    pub n: usize,
    pub lo: V3,
    pub side: f64,
}

/// Whitehead integral `(1/16π²) ∫ A·B` with `B = ½ εᵢⱼₖ u·(∂ⱼu × ∂ₖu)` by
/// central differences and `curl A = B` solved spectrally on the periodic
/// cube. Without a box, a cube twice the size of the support is used.
pub fn hopf_whitehead(field: &dyn SphereField, cube: Option<(V3, f64)>, n: usize) -> Result<WhiteheadReport> {
    let (lo, side) = cube.unwrap_or_else(|| {
        let (a, b) = union_box(&field.active_boxes());
        let side = 2.0 * (0..3).map(|i| b[i] - a[i]).fold(0.0, f64::max);
        let c = scale(add(a, b), 0.5);
        (sub(c, [side / 2.0; 3]), side)
    });
    let s = sample_dense(field, lo, side, n)?;
    Ok(WhiteheadReport { hopf: whitehead_sampled(&s), n, lo, side })
}

pub fn whitehead_sampled(s: &SampledField) -> f64 {
    let n = s.n;
    let h = s.h;
    let w = |i: usize, d: isize| ((i as isize + d).rem_euclid(n as isize)) as usize;
    let b: Vec<V3> = par::map_range(n * n * n, |idx| {
        let (i, j, l) = (idx / (n * n), (idx / n) % n, idx % n);
        let u = s.at(i, j, l);
        let d1 = scale(sub(s.at(w(i, 1), j, l), s.at(w(i, -1), j, l)), 0.5 / h);
        let d2 = scale(sub(s.at(i, w(j, 1), l), s.at(i, w(j, -1), l)), 0.5 / h);
        let d3 = scale(sub(s.at(i, j, w(l, 1)), s.at(i, j, w(l, -1))), 0.5 / h);
        [dot(u, cross(d2, d3)), dot(u, cross(d3, d1)), dot(u, cross(d1, d2))]
    });
    let mut comp: Vec<Vec<Complex64>> = (0..3).map(|c| b.iter().map(|v| Complex64::new(v[c], 0.0)).collect()).collect();
    for c in comp.iter_mut() {
        fft3(c, n, false);
    }
    let wave = |m: usize| {
        let m = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
        (2.0 * std::f64::consts::PI * m / n as f64).sin() / h
    };
    let i_unit = Complex64::new(0.0, 1.0);
    let mut a: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n * n * n]; 3];
    for idx in 0..n * n * n {
        let k = [wave(idx / (n * n)), wave((idx / n) % n), wave(idx % n)];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let bb = [comp[0][idx], comp[1][idx], comp[2][idx]];
        let kx = [
            k[1] * bb[2] - k[2] * bb[1],
            k[2] * bb[0] - k[0] * bb[2],
            k[0] * bb[1] - k[1] * bb[0],
        ];
        for c in 0..3 {
            a[c][idx] = i_unit * kx[c] / k2;
        }
    }
    let norm_fft = (n * n * n) as f64;
    let mut total = 0.0;
    for (c, ac) in a.iter_mut().enumerate() {
        fft3(ac, n, true);
        for (idx, v) in ac.iter().enumerate() {
            total += v.re / norm_fft * b[idx][c];
        }
    }
    total * h * h * h / (16.0 * std::f64::consts::PI * std::f64::consts::PI)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Disk {
    pub center: V3,
    pub normal: V3,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxReport {
    /// `∫ u*ω` over the disk.
    pub raw: f64,
    /// `raw / 4π`: the signed number of fibers crossing the disk.
    pub count: f64,
    pub points: usize,
}

/// Flux of the pulled-back area form through a flat disk, by midpoint
/// quadrature on `res × res` cells of the circumscribed square. The rim
/// must lie where the field is south.
pub fn fiber_flux(field: &dyn SphereField, disk: Disk, res: usize) -> Result<FluxReport> {
    if !(disk.radius > 0.0) || norm(disk.normal) == 0.0 {
        return Err(Error::input("disk needs a positive radius and a nonzero normal"));
    }
    if !(4..=20_000).contains(&res) {
        return Err(Error::resource("flux resolution must be in 4..=20000"));
    }
    let nrm = normalize(disk.normal);
    let seed = if nrm[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let ea = normalize(sub(seed, scale(nrm, dot(seed, nrm))));
    let eb = cross(nrm, ea);
    let at = |s: f64, t: f64| add(disk.center, add(scale(ea, s), scale(eb, t)));
    let rim = 8 * res;
    for q in 0..rim {
        let th = 2.0 * std::f64::consts::PI * q as f64 / rim as f64;
        let u = field.eval(at(disk.radius * th.cos(), disk.radius * th.sin()));
        if norm(sub(u, SOUTH)) > 1e-12 {
            return Err(Error::input("disk rim meets the support of the field"));
        }
    }
    let d = 2.0 * disk.radius / res as f64;
    let eta = d / 2.0;
    let rows = par::map_range(res, |r| {
        let t = -disk.radius + (r as f64 + 0.5) * d;
        let mut sum = 0.0;
        let mut count = 0usize;
        for c in 0..res {
            let s = -disk.radius + (c as f64 + 0.5) * d;
            if s * s + t * t > disk.radius * disk.radius {
                continue;
            }
            count += 1;
            let u = field.eval(at(s, t));
            let da = scale(sub(field.eval(at(s + eta, t)), field.eval(at(s - eta, t))), 0.5 / eta);
            let db = scale(sub(field.eval(at(s, t + eta)), field.eval(at(s, t - eta))), 0.5 / eta);
            sum += dot(u, cross(da, db));
        }
        (sum, count)
    });
    let raw: f64 = rows.iter().map(|r| r.0).sum::<f64>() * d * d;
    let points = rows.iter().map(|r| r.1).sum();
    Ok(FluxReport { raw, count: raw / (4.0 * std::f64::consts::PI), points })
}
