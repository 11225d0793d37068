use serde::Serialize;

use super::{Aabb, DiskProfile, SphereField, SOUTH};
use crate::curves::{gadget_curves, gadget_profile, BoundaryChart, V4};
use crate::error::{Error, Result};
use crate::geom::V3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetVariant {
    /// Tubes around the straight segments `D₀` and `D⁻`.
    Plus,
    /// Tubes around `D₀` and the graph `C⁺`.
    Minus,
}

/// The two gadget fields on `[-r, r]³`. `D₀ = [-r,r] × {0} × {r/4}` is
/// framed by `(e₃, −e₂)`, `D⁻ = {0} × [-r,r] × {−3r/4}` by `(e₁, −e₃)`; the
/// graph `x₃ = r·g(x₂/r)` gets the vertical-offset tube
/// `χ_ρ(x₁, −(x₃ − r·g))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GadgetField3d {
    pub r: f64,
    pub rho: f64,
    pub variant: GadgetVariant,
}

pub fn gadget_field_3d(r: f64, rho: f64, variant: GadgetVariant) -> Result<GadgetField3d> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::input("gadget size r must be positive"));
    }
    if !(rho > 0.0) || rho > 0.01 * r {
        return Err(Error::input("gadget tube radius must be in (0, 0.01·r]"));
    }
    Ok(GadgetField3d { r, rho, variant })
}

impl GadgetField3d {
    pub fn eval(&self, x: V3) -> V3 {
        let p = DiskProfile { rho: self.rho };
        let r = self.r;
        let (a, b) = (x[2] - 0.25 * r, -x[1]);
        if a * a + b * b < self.rho * self.rho {
            return p.chi(a, b);
        }
        let off = match self.variant {
            GadgetVariant::Plus => x[2] + 0.75 * r,
            GadgetVariant::Minus => x[2] - r * gadget_profile(x[1] / r),
        };
        if x[0] * x[0] + off * off < self.rho * self.rho {
            return p.chi(x[0], -off);
        }
        SOUTH
    }
}

/// Field on the boundary of `[-r, r]⁴`: the plus gadget on the face
/// `x₄ = r`, the minus gadget on `x₄ = −r`, and their common boundary
/// values (independent of `x₄`) on the lateral faces. The north preimage
/// is `L₁` together with the mirror image of `L₂` under `x₄ ↦ −x₄`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Gadget4d {
    pub plus: GadgetField3d,
    pub minus: GadgetField3d,
}

impl Gadget4d {
    pub fn new(r: f64, rho: f64) -> Result<Gadget4d> {
        Ok(Gadget4d { plus: gadget_field_3d(r, rho, GadgetVariant::Plus)?, minus: gadget_field_3d(r, rho, GadgetVariant::Minus)? })
    }

    pub fn eval(&self, x: V4) -> V3 {
        let lateral = x[0].abs().max(x[1].abs()).max(x[2].abs());
        let y = [x[0], x[1], x[2]];
        if x[3].abs() >= lateral && x[3] < 0.0 {
            self.minus.eval(y)
        } else {
            self.plus.eval(y)
        }
    }
}

/// The boundary field read through a stereographic chart whose pole lies
/// where the field is south, giving a compactly supported field on ℝ³.
pub struct GadgetChartField {
    pub gadget: Gadget4d,
    pub chart: BoundaryChart,
    boxes: Vec<Aabb>,
    extent: f64,
    support: f64,
}

impl GadgetChartField {
    pub fn new(r: f64, rho: f64, pole: V4) -> Result<GadgetChartField> {
        let gadget = Gadget4d::new(r, rho)?;
        let chart = BoundaryChart::new(pole)?;
        let poled = {
            let m = chart.pole.iter().map(|x| x.abs()).fold(0.0, f64::max);
            gadget.eval(chart.pole.map(|x| x * r / m))
        };
        if poled != SOUTH {
            return Err(Error::input("chart pole must lie where the gadget field is south"));
        }
        let curves = gadget_curves(r, 1024)?;
        let step = 4.0 * rho;
        let eps = 1e-3 * rho;
        // Projected sample with the Frobenius norm of the chart differential.
        let sample = |p: V4| -> Result<(V3, f64)> {
            let y = chart.project(&p)?;
            let mut frob = 0.0;
            for ax in 0..4 {
                let mut q = p;
                q[ax] += eps;
                let yq = chart.project(&q)?;
                frob += (0..3).map(|i| ((yq[i] - y[i]) / eps).powi(2)).sum::<f64>();
            }
            Ok((y, frob.sqrt()))
        };
        let mut boxes = Vec::new();
        let mut min_scale = f64::INFINITY;
        let mut support: f64 = 0.0;
        let mirrored: Vec<V4> = curves.l2.iter().map(|p| [p[0], p[1], p[2], -p[3]]).collect();
        for l in [&curves.l1, &mirrored] {
            let mut pts = Vec::new();
            for e in 0..l.len() {
                let (a, b) = (l[e], l[(e + 1) % l.len()]);
                let len = (0..4).map(|i| (b[i] - a[i]).powi(2)).sum::<f64>().sqrt();
                let m = (len / step).ceil().max(1.0) as usize;
                for s in 0..m {
                    let t = s as f64 / m as f64;
                    pts.push(sample(std::array::from_fn(|i| a[i] + t * (b[i] - a[i])))?);
                }
            }
            for w in 0..pts.len() {
                let (ya, sa) = pts[w];
                let (yb, sb) = pts[(w + 1) % pts.len()];
                min_scale = min_scale.min(sa / 3f64.sqrt());
                // Tube radius plus a generous chord sag, through the local stretch.
                let pad = (1.2 * rho + 0.05 * step) * sa.max(sb);
                let lo: V3 = std::array::from_fn(|i| ya[i].min(yb[i]) - pad);
                let hi: V3 = std::array::from_fn(|i| ya[i].max(yb[i]) + pad);
                support = support.max((0..3).map(|i| lo[i].abs().max(hi[i].abs()).powi(2)).sum::<f64>().sqrt());
                boxes.push((lo, hi));
            }
        }
        Ok(GadgetChartField { gadget, chart, boxes, extent: 32.0 * rho * min_scale, support })
    }
}

impl SphereField for GadgetChartField {
    fn eval(&self, y: V3) -> V3 {
        let s = self.chart.unproject(y);
        let m = s.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let r = self.gadget.plus.r;
        self.gadget.eval(s.map(|x| x * r / m))
    }
    fn support_radius(&self) -> f64 {
        self.support
    }
    fn active_boxes(&self) -> Vec<Aabb> {
        self.boxes.clone()
    }
    fn sampling_extent(&self) -> f64 {
        self.extent
    }
    fn name(&self) -> String {
        "gadget".into()
    }
}
