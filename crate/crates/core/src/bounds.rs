//! Certified lower bounds on the branched connection cost.

use serde::Serialize;

use crate::cost::{kappa1, CostModel};
use crate::domain::{BoxDomain, UniformGridSpec, COINCIDENCE_TOL};
use crate::{Error, Result};

/// Range of subdivision factors searched by the grid bounds.
pub const Q_RANGE: std::ops::RangeInclusive<u64> = 4..=16;

/// Sum of per-part lower bounds.
pub fn partition_lower_bound(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// `L1 + L2 + κ₁(α)·μ₁·N^α·dist`.
pub fn decomposition_lower_bound(l1: f64, l2: f64, mu1: f64, n: u64, dist: f64, alpha: f64) -> Result<f64> {
    if l1 < 0.0 || l2 < 0.0 || dist < 0.0 || !(0.0..=1.0).contains(&mu1) {
        return Err(Error::input("decomposition bound: inputs must be nonnegative and mu1 in [0,1]"));
    }
    Ok(l1 + l2 + kappa1(alpha)? * mu1 * (n as f64).powf(alpha) * dist)
}

/// One step of the grid recursion: `q^{m(1−α)−1}·ξ + κ₁(α)/(4q)`.
pub fn crazy_step(xi: f64, m: u32, alpha: f64, q: u64) -> Result<f64> {
    if q < 4 {
        return Err(Error::input("subdivision factor must be at least 4"));
    }
    if xi < 0.0 {
        return Err(Error::input("xi must be nonnegative"));
    }
    let qf = q as f64;
    Ok(qf.powf(m as f64 * (1.0 - alpha) - 1.0) * xi + kappa1(alpha)? / (4.0 * qf))
}

/// The critical exponent `1 − 1/m`.
pub fn critical_alpha(m: u32) -> f64 {
    1.0 - 1.0 / m as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridBound {
    pub lambda: f64,
    pub xi: f64,
    /// Subdivision factor attaining the maximum; 0 when the bound is zero.
    pub q: u64,
}

/// `⌊log k / log q⌋` computed exactly on integers.
pub fn floor_log(k: u64, q: u64) -> u64 {
    let mut l = 0;
    let mut p = q;
    while p <= k {
        l += 1;
        match p.checked_mul(q) {
            Some(n) => p = n,
            None => break,
        }
    }
    l
}

/// Closed-form bound at the critical exponent:
/// `Ξ ≥ max_q q^{−m}·κ₁/(4q)·⌊log k/log q⌋` and `Λ = Ξ·k^{m−1}`.
pub fn grid_lower_bound(m: u32, k: u64) -> Result<GridBound> {
    if !(1..=4).contains(&m) || k == 0 {
        return Err(Error::input("grid bound needs 1 ≤ m ≤ 4 and k ≥ 1"));
    }
    if m == 1 {
        // α₁ = 0 is outside the model range; the bound degenerates.
        return Ok(GridBound { lambda: 0.0, xi: 0.0, q: 0 });
    }
    let kap = kappa1(critical_alpha(m))?;
    let mut best = GridBound { lambda: 0.0, xi: 0.0, q: 0 };
    for q in Q_RANGE {
        let qf = q as f64;
        let xi = qf.powi(-(m as i32)) * kap / (4.0 * qf) * floor_log(k, q) as f64;
        if xi > best.xi {
            best = GridBound { lambda: 0.0, xi, q };
        }
    }
    best.lambda = best.xi * (k as f64).powi(m as i32 - 1);
    Ok(best)
}

/// Lower bounds valid for any finite source set, any concave model:
/// - packing: disjoint cubes around sources each cost at least one unit
///   edge from the centre to the cube boundary;
/// - flux: an optimal graph carries at most `N` per edge, so every edge
///   costs at least `cost(N)/N` per unit of flow, and every source must
///   travel at least its distance to the boundary;
/// - single thread: the farthest source needs a path of unit edges.
///
/// Sources on the boundary cost nothing and are ignored.
pub fn point_set_lower_bound(points: &[Vec<f64>], domain: &BoxDomain, model: &CostModel) -> Result<f64> {
    let mut inner: Vec<(&Vec<f64>, f64)> = Vec::new();
    for p in points {
        let d = domain.dist_to_boundary(p)?;
        if d > COINCIDENCE_TOL {
            inner.push((p, d));
        }
    }
    let n = inner.len();
    if n == 0 {
        return Ok(0.0);
    }
    let c1 = model.cost(1);
    let sum_d: f64 = inner.iter().map(|x| x.1).sum();
    let max_d = inner.iter().map(|x| x.1).fold(0.0, f64::max);
    let flux = model.cost(n as u64) / n as f64 * sum_d;
    let mut packing = 0.0;
    for (i, (p, d)) in inner.iter().enumerate() {
        let mut r = *d;
        for (j, (q, _)) in inner.iter().enumerate() {
            if i != j {
                let linf = p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                r = r.min(linf / 2.0);
            }
        }
        packing += c1 * r;
    }
    Ok(flux.max(packing).max(c1 * max_d))
}

/// Best certified lower bound for the uniform `k`-grid in the unit cube:
/// the generic point-set bounds, the closed form at the critical exponent,
/// and the recursion `Ξ(qk) ≥ q^{m(1−α)−1}Ξ(k) + κ₁/(4q)` seeded with them.
pub fn certified_grid_bound(m: u32, k: u64, alpha: f64) -> Result<GridBound> {
    let model = CostModel::power_law(alpha)?;
    let mut memo = std::collections::BTreeMap::new();
    let xi = certified_xi(m, k, alpha, &model, &mut memo)?;
    let closed = if (alpha - critical_alpha(m)).abs() < 1e-12 { grid_lower_bound(m, k)? } else { GridBound { lambda: 0.0, xi: 0.0, q: 0 } };
    let xi = xi.max(closed.xi);
    Ok(GridBound { lambda: xi * (k as f64).powf(m as f64 * alpha), xi, q: closed.q })
}

fn certified_xi(m: u32, k: u64, alpha: f64, model: &CostModel, memo: &mut std::collections::BTreeMap<u64, f64>) -> Result<f64> {
    if let Some(&v) = memo.get(&k) {
        return Ok(v);
    }
    let norm = (k as f64).powf(m as f64 * alpha);
    let mut best = grid_point_bound(m, k, model)? / norm;
    for q in Q_RANGE {
        if k % q == 0 && k / q >= 1 {
            let sub = certified_xi(m, k / q, alpha, model, memo)?;
            best = best.max(crazy_step(sub, m, alpha, q)?);
        }
    }
    memo.insert(k, best);
    Ok(best)
}

/// Point-set bounds evaluated in closed form on the unit grid.
fn grid_point_bound(m: u32, k: u64, model: &CostModel) -> Result<f64> {
    if k <= 1 {
        return Ok(0.0);
    }
    let n_in = (k - 1).pow(m);
    let h = 1.0 / k as f64;
    // Per-axis distances of interior indices are min(i, k−i)·h; a point's
    // distance is the minimum over axes, summed by counting how many
    // indices clear each level.
    let mut sum_d = 0.0;
    for t in 1..=k / 2 {
        let above = (k - 1) - 2 * (t - 1);
        sum_d += (above as f64).powi(m as i32);
    }
    sum_d *= h;
    let flux = model.cost(n_in) / n_in as f64 * sum_d;
    let packing = model.cost(1) * n_in as f64 * h / 2.0;
    let max_d = model.cost(1) * (k / 2) as f64 * h;
    Ok(flux.max(packing).max(max_d))
}

/// Combines per-box bounds for a signed configuration; refuses boxes that
/// contain a negative charge or overlap.
pub fn charged_lower_bound(negatives: &[Vec<f64>], protected: &[BoxDomain], per_box_values: &[f64]) -> Result<f64> {
    if protected.len() != per_box_values.len() {
        return Err(Error::input("one value per protected box is required"));
    }
    for (i, b) in protected.iter().enumerate() {
        for q in negatives {
            if b.contains(q, 0.0) {
                return Err(Error::input(format!("negative charge inside protected box {i}")));
            }
        }
        for c in &protected[..i] {
            if !b.interiors_disjoint(c) {
                return Err(Error::input("protected boxes overlap"));
            }
        }
    }
    if per_box_values.iter().any(|&v| v < 0.0) {
        return Err(Error::input("per-box values must be nonnegative"));
    }
    Ok(per_box_values.iter().sum())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScalingConsistency {
    /// Pairs `(k′, k)` with `Λ(k′) > (k/k′)·Λ(k) + 1e−9`.
    pub violations: Vec<(u64, u64)>,
}

/// Checks `Λ(k′) ≤ (k/k′)·Λ(k)` over all ordered pairs.
pub fn scaling_consistency(values: &[(u64, f64)]) -> ScalingConsistency {
    let mut v = Vec::new();
    for (i, &(kp, lp)) in values.iter().enumerate() {
        for &(k, l) in &values[i + 1..] {
            if lp > (k as f64 / kp as f64) * l + 1e-9 {
                v.push((kp, k));
            }
        }
    }
    ScalingConsistency { violations: v }
}

/// Uniform-grid points of the unit cube as plain coordinates.
pub fn unit_grid(m: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    crate::domain::grid_points(&UniformGridSpec::unit(m, k))
}
