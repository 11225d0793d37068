//! Edge cost models and the weighted length functional.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::TransportGraph;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    /// `d^α` with `0 < α ≤ 1`.
    PowerLaw { alpha: f64 },
    /// `2π²·d`: the volume of the unit three-sphere per unit of degree.
    Nu3,
    /// `C·d^{3/4}`, the upper power-law envelope of the two-dimensional
    /// energy cost.
    Nu2Upper { c_nu: f64 },
}

impl CostModel {
    pub fn power_law(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(CostModel::PowerLaw { alpha })
    }

    pub fn nu2_upper(c_nu: f64) -> Result<Self> {
        if !(c_nu > 0.0 && c_nu.is_finite()) {
            return Err(Error::input("nu2 constant must be positive"));
        }
        Ok(CostModel::Nu2Upper { c_nu })
    }

    /// Cost per unit length of an edge with multiplicity `d`.
    pub fn cost(&self, d: u64) -> f64 {
        self.cost_f(d as f64)
    }

    pub fn cost_f(&self, d: f64) -> f64 {
        match *self {
            CostModel::PowerLaw { alpha } => {
                if alpha == 1.0 {
                    d
                } else {
                    d.powf(alpha)
                }
            }
            CostModel::Nu3 => 2.0 * std::f64::consts::PI * std::f64::consts::PI * d.abs(),
            CostModel::Nu2Upper { c_nu } => c_nu * d.powf(0.75),
        }
    }

    /// Growth exponent of the model.
    pub fn exponent(&self) -> f64 {
        match *self {
            CostModel::PowerLaw { alpha } => alpha,
            CostModel::Nu3 => 1.0,
            CostModel::Nu2Upper { .. } => 0.75,
        }
    }

    /// Cost of a unit edge; lower bounds scale by this factor.
    pub fn unit_cost(&self) -> f64 {
        self.cost(1)
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::PowerLaw { alpha } => write!(f, "alpha:{alpha}"),
            CostModel::Nu3 => write!(f, "nu3"),
            CostModel::Nu2Upper { c_nu } => write!(f, "nu2:Cnu={c_nu}"),
        }
    }
}

impl FromStr for CostModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "nu3" {
            return Ok(CostModel::Nu3);
        }
        if s == "nu2" {
            return CostModel::nu2_upper(1.0);
        }
        if let Some(rest) = s.strip_prefix("nu2:") {
            let v = rest.strip_prefix("Cnu=").ok_or_else(|| Error::input(format!("bad model spec {s:?}")))?;
            let c: f64 = v.parse().map_err(|_| Error::input(format!("bad nu2 constant {v:?}")))?;
            return CostModel::nu2_upper(c);
        }
        if let Some(rest) = s.strip_prefix("alpha:") {
            let a: f64 = rest.parse().map_err(|_| Error::input(format!("bad exponent {rest:?}")))?;
            return CostModel::power_law(a);
        }
        Err(Error::input(format!("unknown cost model {s:?}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("exponent {alpha} outside (0, 1]")))
    }
}

/// Weighted length `Σ cost(d(e))·|e|` of a valid graph.
pub fn w_alpha(g: &TransportGraph, model: &CostModel) -> Result<f64> {
    let r = g.validate();
    if !r.is_valid() {
        return Err(Error::input(format!("w_alpha: invalid graph ({} violations)", r.violations.len())));
    }
    Ok(g.weighted_length(|d| model.cost(d)))
}

/// The universal constant of the strict concavity inequality
/// `min{α/4, α·8^{−(α+1)}, 1 − 8^{−α}}`.
pub fn kappa1(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((alpha / 4.0).min(alpha * 0.125f64.powf(alpha + 1.0)).min(1.0 - 8f64.powf(-alpha)))
}

/// `(d1+d2)^α ≥ d1^α + κ₁·min{d2^α, d2·d1^{α−1}}`.
pub fn concavity_holds(d1: u64, d2: u64, alpha: f64) -> bool {
    let k = match kappa1(alpha) {
        Ok(k) => k,
        Err(_) => return false,
    };
    let (a, b) = (d1 as f64, d2 as f64);
    let gain = b.powf(alpha).min(b * a.powf(alpha - 1.0));
    (a + b).powf(alpha) >= a.powf(alpha) + k * gain
}

/// Counts pairs in `{1..n}²` violating the concavity inequality, using a
/// shared power table.
pub fn concavity_violations(n: u64, alpha: f64) -> Result<u64> {
    let k = kappa1(alpha)?;
    let pw: Vec<f64> = (0..=2 * n).map(|d| (d as f64).powf(alpha)).collect();
    let rows = crate::par::map_range(n as usize, |i| {
        let d1 = i as u64 + 1;
        let p1 = pw[d1 as usize];
        let slope = p1 / d1 as f64;
        let mut bad = 0u64;
        for d2 in 1..=n {
            let gain = pw[d2 as usize].min(d2 as f64 * slope);
            if pw[(d1 + d2) as usize] < p1 + k * gain {
                bad += 1;
            }
        }
        bad
    });
    Ok(rows.iter().sum())
}
