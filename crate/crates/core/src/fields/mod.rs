//! Sphere-valued fields on ℝ³, their energies, preimages and Hopf
//! invariants.

mod gadget;
mod lattice;
mod pontryagin;
mod whitehead;

use serde::Serialize;

use crate::geom::{norm, scale, V3};

pub use gadget::{gadget_field_3d, Gadget4d, GadgetChartField, GadgetField3d, GadgetVariant};
pub use lattice::{energy_p, extract_preimage, extract_preimages, field_stats, hopf_preimage, hopf_preimage_with, preimage_linking, FieldStats, HopfPreimage, LatticeSpec, PreimageFamily, DEFAULT_VALUES};
pub use pontryagin::{linked_stadia_field, pontryagin_field, spaghetton_field, spaghetton_rho, stadium_field, PontryaginField, MAX_SPAGHETTON_K, SPAGHETTON_SUPPORT};
pub use whitehead::{fiber_flux, hopf_whitehead, sample_dense, whitehead_sampled, Disk, FluxReport, SampledField, WhiteheadReport};

pub const NORTH: V3 = [0.0, 0.0, 1.0];
pub const SOUTH: V3 = [0.0, 0.0, -1.0];

/// Axis-aligned box `(lo, hi)`.
pub type Aabb = (V3, V3);

/// A map from ℝ³ to the unit sphere, equal to the south pole outside a
/// bounded region.
pub trait SphereField: Sync {
    fn eval(&self, x: V3) -> V3;
    /// Everything outside this ball maps to the south pole.
    fn support_radius(&self) -> f64;
    /// Boxes covering every point whose value is not the south pole.
    fn active_boxes(&self) -> Vec<Aabb>;
    /// Length scale that lattice resolutions refer to: the lattice spacing
    /// at resolution `n` is `sampling_extent() / n`.
    fn sampling_extent(&self) -> f64;
    /// Smallest length on which the field turns; preimage extraction
    /// refuses lattices coarser than half of it.
    fn feature_size(&self) -> f64 {
        self.sampling_extent() / 32.0
    }
    fn name(&self) -> String;
}

pub fn union_box(boxes: &[Aabb]) -> Aabb {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (a, b) in boxes {
        for i in 0..3 {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(b[i]);
        }
    }
    (lo, hi)
}

/// Radial profile `χ_ρ(x₁, x₂) = (x₁ f, x₂ f, g)` in units of `ρ`, with
/// `g(r) = cos πr` and `f(r) = sin(πr)/r`: north at the core, south on
/// and beyond the unit circle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiskProfile {
    pub rho: f64,
}

impl DiskProfile {
    pub fn f(r: f64) -> f64 {
        if r < 1e-8 {
            std::f64::consts::PI * (1.0 - (std::f64::consts::PI * r).powi(2) / 6.0)
        } else {
            (std::f64::consts::PI * r).sin() / r
        }
    }

    pub fn g(r: f64) -> f64 {
        (std::f64::consts::PI * r).cos()
    }

    pub fn chi(&self, x1: f64, x2: f64) -> V3 {
        let (a, b) = (x1 / self.rho, x2 / self.rho);
        let r = (a * a + b * b).sqrt();
        if r >= 1.0 {
            return SOUTH;
        }
        let f = Self::f(r);
        unit([a * f, b * f, Self::g(r)])
    }
}

/// Renormalizes to remove rounding drift.
pub fn unit(v: V3) -> V3 {
    let n = norm(v);
    scale(v, 1.0 / n)
}

/// The Hopf map made compactly supported: the ball of radius `R` is
/// wrapped onto S³ by `x ↦ (cos θ, −sin θ·x/|x|)`, `θ = π|x|/R`, followed by
/// `q ↦ q i q̄`, rotated so that `±1 ∈ S³` (the centre and the whole
/// outside) go to the south pole.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HopfMapField {
    pub radius: f64,
}

impl Default for HopfMapField {
    fn default() -> Self {
        HopfMapField { radius: 10.0 }
    }
}

impl SphereField for HopfMapField {
    fn eval(&self, x: V3) -> V3 {
        let r = norm(x);
        if r >= self.radius {
            return SOUTH;
        }
        let th = std::f64::consts::PI * r / self.radius;
        let w = th.cos();
        let s = if r > 0.0 { th.sin() / r } else { 0.0 };
        let (v1, v2, v3) = (-x[0] * s, -x[1] * s, -x[2] * s);
        // Image of i under the rotation of q = w + v.
        let c1 = w * w + v1 * v1 - v2 * v2 - v3 * v3;
        let c2 = 2.0 * (v1 * v2 + w * v3);
        let c3 = 2.0 * (v1 * v3 - w * v2);
        unit([c3, c2, -c1])
    }
    fn support_radius(&self) -> f64 {
        self.radius
    }
    fn active_boxes(&self) -> Vec<Aabb> {
        let r = self.radius;
        vec![([-r; 3], [r; 3])]
    }
    fn sampling_extent(&self) -> f64 {
        2.0 * self.radius
    }
    fn feature_size(&self) -> f64 {
        self.radius / 4.0
    }
    fn name(&self) -> String {
        "hopfmap".into()
    }
}

/// `x ↦ u(x/r)`.
pub struct Dilated<'a> {
    pub inner: &'a dyn SphereField,
    pub factor: f64,
}

impl SphereField for Dilated<'_> {
    fn eval(&self, x: V3) -> V3 {
        self.inner.eval(scale(x, 1.0 / self.factor))
    }
    fn support_radius(&self) -> f64 {
        self.inner.support_radius() * self.factor
    }
    fn active_boxes(&self) -> Vec<Aabb> {
        self.inner.active_boxes().into_iter().map(|(a, b)| (scale(a, self.factor), scale(b, self.factor))).collect()
    }
    fn sampling_extent(&self) -> f64 {
        self.inner.sampling_extent() * self.factor
    }
    fn feature_size(&self) -> f64 {
        self.inner.feature_size() * self.factor
    }
    fn name(&self) -> String {
        format!("{}*{}", self.inner.name(), self.factor)
    }
}

/// The constant south-pole field.
pub struct ConstantField;

impl SphereField for ConstantField {
    fn eval(&self, _: V3) -> V3 {
        SOUTH
    }
    fn support_radius(&self) -> f64 {
        0.0
    }
    fn active_boxes(&self) -> Vec<Aabb> {
        vec![([-1.0; 3], [1.0; 3])]
    }
    fn sampling_extent(&self) -> f64 {
        2.0
    }
    fn feature_size(&self) -> f64 {
        f64::INFINITY
    }
    fn name(&self) -> String {
        "constant".into()
    }
}
