//! Small fixed-size vector helpers.

pub type V3 = [f64; 3];

#[inline]
pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
#[inline]
pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
#[inline]
pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}
#[inline]
pub fn axpy(s: f64, a: V3, b: V3) -> V3 {
    [s * a[0] + b[0], s * a[1] + b[1], s * a[2] + b[2]]
}
#[inline]
pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
#[inline]
pub fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
#[inline]
pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}
#[inline]
pub fn dist(a: V3, b: V3) -> f64 {
    norm(sub(a, b))
}
#[inline]
pub fn normalize(a: V3) -> V3 {
    let n = norm(a);
    if n == 0.0 {
        a
    } else {
        scale(a, 1.0 / n)
    }
}

/// Closest point on segment `[a, b]` to `p`, with its parameter in `[0, 1]`.
#[inline]
pub fn closest_on_segment(p: V3, a: V3, b: V3) -> (V3, f64) {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    let t = if l2 == 0.0 {
        0.0
    } else {
        (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0)
    };
    (axpy(t, ab, a), t)
}

/// Euclidean distance between two points of any matching dimension.
pub fn dist_n(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance between segments `[p0,p1]` and `[q0,q1]` in any dimension.
pub fn segment_distance(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> f64 {
    let d1: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let d2: Vec<f64> = q1.iter().zip(q0).map(|(a, b)| a - b).collect();
    let r: Vec<f64> = p0.iter().zip(q0).map(|(a, b)| a - b).collect();
    let dt = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let a = dt(&d1, &d1);
    let e = dt(&d2, &d2);
    let f = dt(&d2, &r);
    let (s, t);
    if a <= 1e-300 && e <= 1e-300 {
        return dist_n(p0, q0);
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dt(&d1, &r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dt(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-14 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let pa: Vec<f64> = p0.iter().zip(&d1).map(|(x, d)| x + s * d).collect();
    let qb: Vec<f64> = q0.iter().zip(&d2).map(|(x, d)| x + t * d).collect();
    dist_n(&pa, &qb)
}
