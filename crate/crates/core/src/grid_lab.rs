//! Scaling experiments on uniform grids, the four-dimensional singularity
//! lattice, and the radius/degree budget series.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::bounds::{self, certified_grid_bound};
use crate::cost::CostModel;
use crate::domain::BoxDomain;
use crate::fmt::sig9_str;
use crate::solver::{self, SolveOptions};
use crate::{Error, Result};

/// Largest grid (`k^m` points) accepted by the scaling runs.
pub const MAX_GRID_POINTS: u64 = 100_000;

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub m: u32,
    pub alpha: f64,
    pub k: u64,
    pub upper: f64,
    pub lower: f64,
    pub xi_upper: f64,
    pub xi_lower: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

pub const CSV_HEADER: &str = "m,alpha,k,upper,lower,xi_upper,xi_lower,seconds";

fn check_size(m: u32, k: u64) -> Result<()> {
    match k.checked_pow(m) {
        Some(n) if n <= MAX_GRID_POINTS => Ok(()),
        _ => Err(Error::resource(format!("grid {k}^{m} exceeds {MAX_GRID_POINTS} points"))),
    }
}

/// Upper bound from the solver and certified lower bound for each `k`.
pub fn run_scaling(m: u32, alpha: f64, ks: &[u64], options: &SolveOptions) -> Result<ScalingReport> {
    if m == 0 {
        return Err(Error::input("dimension must be positive"));
    }
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 {
        return Err(Error::input("ks must be positive and strictly increasing"));
    }
    for &k in ks {
        check_size(m, k)?;
    }
    let model = CostModel::power_law(alpha)?;
    let domain = BoxDomain::unit(m as usize)?;
    let rows = crate::par::map_collect(ks, |&k| -> Result<ScalingRow> {
        let t = Instant::now();
        let points = bounds::unit_grid(m as usize, k as usize)?;
        let sol = solver::solve_brbd(&points, &domain, &model, options)?;
        let cert = certified_grid_bound(m, k, alpha)?;
        let lower = cert.lambda.max(sol.lower.unwrap_or(0.0));
        let norm = (k as f64).powf(m as f64 * alpha);
        Ok(ScalingRow { m, alpha, k, upper: sol.value, lower, xi_upper: sol.value / norm, xi_lower: lower / norm, seconds: t.elapsed().as_secs_f64() })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScalingReport { rows })
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let cells = [
                r.m.to_string(),
                sig9_str(r.alpha),
                r.k.to_string(),
                sig9_str(r.upper),
                sig9_str(r.lower),
                sig9_str(r.xi_upper),
                sig9_str(r.xi_lower),
                format!("{:.3}", r.seconds),
            ];
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Least-squares slope of `xi_upper` against `ln k`.
    pub fn xi_upper_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| ((r.k as f64).ln(), r.xi_upper)).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    }

    /// `max/min` of `xi_upper` over rows with a positive value.
    pub fn xi_upper_spread(&self) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.xi_upper).filter(|&x| x > 0.0).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

pub fn emit_csv(report: &ScalingReport, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(report.to_csv().as_bytes())?;
    Ok(())
}

pub fn emit_json(report: &ScalingReport, path: &Path) -> Result<()> {
    let mut v = serde_json::to_value(report)?;
    crate::fmt::round_json(&mut v);
    std::fs::write(path, serde_json::to_string_pretty(&v)?)?;
    Ok(())
}

/// Side of the small box holding the lattice, relative to the unit cube.
pub const SINGULAR_BOX: f64 = 1.0 / 40.0;

#[derive(Clone, Debug, Serialize)]
pub struct SingularityReport {
    pub k: u64,
    pub points: Vec<Vec<f64>>,
    pub lower: f64,
    pub upper: f64,
    pub lower_over_k3: f64,
}

/// The uniform `k⁴` lattice of side `1/40` centred in the unit 4-cube,
/// with the certified bound (the lattice box can only be left through its
/// own boundary, so the box bound scaled by `1/40` applies) and the best
/// construction.
pub fn singularity_grid(k: u64, options: &SolveOptions) -> Result<SingularityReport> {
    if !(1..=6).contains(&k) {
        return Err(Error::input("singularity lattice needs 1 <= k <= 6"));
    }
    let alpha = bounds::critical_alpha(4);
    let model = CostModel::power_law(alpha)?;
    let domain = BoxDomain::unit(4)?;
    let offset = 0.5 - SINGULAR_BOX / 2.0;
    let points: Vec<Vec<f64>> = bounds::unit_grid(4, k as usize)?.into_iter().map(|p| p.iter().map(|x| offset + SINGULAR_BOX * x).collect()).collect();
    let lower = SINGULAR_BOX * certified_grid_bound(4, k, alpha)?.lambda;
    let sol = solver::solve_brbd(&points, &domain, &model, options)?;
    Ok(SingularityReport { k, lower, upper: sol.value, lower_over_k3: lower / (k as f64).powi(3), points })
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetSeries {
    pub n: u64,
    pub c: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// Integral bound on `Σ_{i>N} c/(i ln² i)`.
    pub s2_tail_bound: f64,
    /// `c·(ln ln N − ln ln 3)`, below `S₃(N)` by integral comparison.
    pub s3_lower: f64,
}

/// Normalization with `8·c·Σ_{i≥2} 1/(i⁴ ln² i) = 1`; the sum's tail past
/// `i = 10⁴` is bounded by `∫ dx/x⁴ / ln² 10⁴` and split at its midpoint.
pub fn budget_constant() -> f64 {
    let cut = 10_000u64;
    let head: f64 = (2..=cut).map(|i| r_tilde(i)).sum();
    let tail_max = 1.0 / (3.0 * (cut as f64).powi(3) * (cut as f64).ln().powi(2));
    1.0 / (8.0 * (head + 0.5 * tail_max))
}

fn r_tilde(i: u64) -> f64 {
    let x = i as f64;
    1.0 / (x.powi(4) * x.ln().powi(2))
}

/// Partial sums of the radii `r_i = c/(i⁴ ln² i)` with degrees `k_i = i`.
pub fn budget_series(n: u64) -> Result<BudgetSeries> {
    if n < 2 {
        return Err(Error::input("budget series needs N >= 2"));
    }
    let c = budget_constant();
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    // Summed from the small end in compensated form: terms shrink slowly.
    let (mut e1, mut e2, mut e3) = (0.0, 0.0, 0.0);
    let add = |s: &mut f64, e: &mut f64, x: f64| {
        let y = x - *e;
        let t = *s + y;
        *e = (t - *s) - y;
        *s = t;
    };
    for i in 2..=n {
        let r = c * r_tilde(i);
        let k3 = (i as f64).powi(3);
        add(&mut s1, &mut e1, r);
        add(&mut s2, &mut e2, r * k3);
        add(&mut s3, &mut e3, r * k3 * (i as f64).ln());
    }
    let ln_n = (n as f64).ln();
    Ok(BudgetSeries { n, c, s1, s2, s3, s2_tail_bound: c / ln_n, s3_lower: c * (ln_n.ln() - 3f64.ln().ln()) })
}
