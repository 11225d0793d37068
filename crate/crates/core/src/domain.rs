//! Axis-aligned box domains, uniform source grids and box partitions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance below which two points are the same and a point is on
/// a face.
pub const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<BoxRepr> for BoxDomain {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        if r.lo.len() != r.dim {
            return Err(Error::input("box: lo length does not match dim"));
        }
        BoxDomain::new(r.lo, r.hi)
    }
}

impl From<BoxDomain> for BoxRepr {
    fn from(b: BoxDomain) -> Self {
        BoxRepr { dim: b.dim(), lo: b.lo, hi: b.hi }
    }
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() > 4 {
            return Err(Error::input(format!("box dimension {} not in 1..=4", lo.len())));
        }
        if lo.len() != hi.len() {
            return Err(Error::input("box: lo and hi differ in length"));
        }
        for i in 0..lo.len() {
            if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]) {
                return Err(Error::input(format!("box: need lo < hi on axis {i}")));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// The unit cube `[0,1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        BoxDomain::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim()
            && p.iter().enumerate().all(|(i, &x)| x >= self.lo[i] - tol && x <= self.hi[i] + tol)
    }

    /// Signed distance to the nearest face; negative outside.
    fn face_slack(&self, p: &[f64]) -> (f64, usize, bool) {
        let mut best = (f64::INFINITY, 0, false);
        for i in 0..self.dim() {
            let dl = p[i] - self.lo[i];
            let dh = self.hi[i] - p[i];
            if dl < best.0 {
                best = (dl, i, false);
            }
            if dh < best.0 {
                best = (dh, i, true);
            }
        }
        best
    }

    /// Distance from a point of the closed box to its boundary.
    pub fn dist_to_boundary(&self, p: &[f64]) -> Result<f64> {
        if !self.contains(p, COINCIDENCE_TOL) {
            return Err(Error::input(format!("point {p:?} lies outside the box")));
        }
        Ok(self.face_slack(p).0.max(0.0))
    }

    /// Distance to the boundary, clamped to zero for points outside.
    pub fn dist_to_boundary_unchecked(&self, p: &[f64]) -> f64 {
        self.face_slack(p).0.max(0.0)
    }

    /// Orthogonal projection onto the nearest face. Ties go to the lowest
    /// axis, low face first.
    pub fn nearest_boundary_point(&self, p: &[f64]) -> Vec<f64> {
        let (_, axis, high) = self.face_slack(p);
        let mut q = p.to_vec();
        q[axis] = if high { self.hi[axis] } else { self.lo[axis] };
        q
    }

    pub fn on_boundary(&self, p: &[f64]) -> bool {
        self.contains(p, COINCIDENCE_TOL) && self.face_slack(p).0 <= COINCIDENCE_TOL
    }

    /// Whether `inner` lies in the closure of `self`.
    pub fn contains_box(&self, inner: &BoxDomain) -> bool {
        inner.dim() == self.dim()
            && (0..self.dim()).all(|i| inner.lo[i] >= self.lo[i] - COINCIDENCE_TOL && inner.hi[i] <= self.hi[i] + COINCIDENCE_TOL)
    }

    /// Distance between the boundary of `self` and a box contained in it.
    pub fn gap_to(&self, inner: &BoxDomain) -> f64 {
        (0..self.dim())
            .map(|i| (inner.lo[i] - self.lo[i]).min(self.hi[i] - inner.hi[i]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub fn interiors_disjoint(&self, other: &BoxDomain) -> bool {
        (0..self.dim()).any(|i| self.hi[i] <= other.lo[i] + COINCIDENCE_TOL || other.hi[i] <= self.lo[i] + COINCIDENCE_TOL)
    }

    /// Image under `x ↦ s·x + t`.
    pub fn affine(&self, s: f64, t: &[f64]) -> Result<BoxDomain> {
        BoxDomain::new(
            self.lo.iter().zip(t).map(|(a, b)| s * a + b).collect(),
            self.hi.iter().zip(t).map(|(a, b)| s * a + b).collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGridSpec {
    pub k: usize,
    pub dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub offset: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub p: Vec<f64>,
    /// Some index equals `k`, so the point sits on a face of the box.
    pub on_boundary: bool,
}

impl UniformGridSpec {
    pub fn unit(dim: usize, k: usize) -> Self {
        UniformGridSpec { k, dim, scale: 1.0, offset: vec![0.0; dim] }
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::input("grid: k must be at least 1"));
        }
        if self.dim == 0 || self.dim > 4 {
            return Err(Error::input("grid: dim must be in 1..=4"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::input("grid: scale must be positive"));
        }
        if !self.offset.is_empty() && self.offset.len() != self.dim {
            return Err(Error::input("grid: offset length does not match dim"));
        }
        Ok(())
    }

    fn offset(&self) -> Vec<f64> {
        if self.offset.is_empty() {
            vec![0.0; self.dim]
        } else {
            self.offset.clone()
        }
    }

    pub fn count(&self) -> usize {
        self.k.pow(self.dim as u32)
    }

    /// The box `offset + scale·[0,1]^dim` the grid lives in.
    pub fn domain(&self) -> Result<BoxDomain> {
        self.check()?;
        BoxDomain::unit(self.dim)?.affine(self.scale, &self.offset())
    }

    /// Points `offset + scale·I/k` for `I ∈ {1..k}^dim`, lexicographic in `I`.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        self.check()?;
        let (k, m) = (self.k, self.dim);
        let h = self.scale / k as f64;
        let off = self.offset();
        let mut out = Vec::with_capacity(self.count());
        let mut idx = vec![1usize; m];
        loop {
            out.push(GridPoint {
                p: (0..m).map(|i| off[i] + h * idx[i] as f64).collect(),
                on_boundary: idx.iter().any(|&j| j == k),
            });
            let mut ax = m;
            loop {
                if ax == 0 {
                    return Ok(out);
                }
                ax -= 1;
                if idx[ax] < k {
                    idx[ax] += 1;
                    break;
                }
                idx[ax] = 1;
            }
        }
    }
}

/// Convenience: the raw coordinates of [`UniformGridSpec::points`].
pub fn grid_points(spec: &UniformGridSpec) -> Result<Vec<Vec<f64>>> {
    Ok(spec.points()?.into_iter().map(|g| g.p).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Box(BoxDomain),
    /// `outer` with the interior of `hole` removed.
    Shell { outer: BoxDomain, hole: BoxDomain },
}

impl Region {
    pub fn volume(&self) -> f64 {
        match self {
            Region::Box(b) => b.volume(),
            Region::Shell { outer, hole } => outer.volume() - hole.volume(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxPartition {
    pub parent: BoxDomain,
    pub parts: Vec<Region>,
    /// Distance from the first part to the parent's boundary.
    pub separation: f64,
}

/// Splits `outer` into `inner` and the surrounding shell.
pub fn carve(outer: &BoxDomain, inner: &BoxDomain) -> Result<BoxPartition> {
    if inner.dim() != outer.dim() || !outer.contains_box(inner) {
        return Err(Error::input("carve: inner box is not contained in the outer box"));
    }
    Ok(BoxPartition {
        parent: outer.clone(),
        parts: vec![Region::Box(inner.clone()), Region::Shell { outer: outer.clone(), hole: inner.clone() }],
        separation: outer.gap_to(inner),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let p = grid_points(&UniformGridSpec::unit(1, 2)).unwrap();
        assert_eq!(p, vec![vec![0.5], vec![1.0]]);
        let p = grid_points(&UniformGridSpec::unit(2, 1)).unwrap();
        assert_eq!(p, vec![vec![1.0, 1.0]]);
        let p = grid_points(&UniformGridSpec::unit(3, 4)).unwrap();
        assert_eq!(p.len(), 64);
        let mut dmin = f64::INFINITY;
        for i in 0..p.len() {
            for j in 0..i {
                dmin = dmin.min(crate::geom::dist_n(&p[i], &p[j]));
            }
        }
        assert!((dmin - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let p = grid_points(&UniformGridSpec::unit(2, 2)).unwrap();
        assert_eq!(p, vec![vec![0.5, 0.5], vec![0.5, 1.0], vec![1.0, 0.5], vec![1.0, 1.0]]);
    }

    #[test]
    fn distances() {
        let b = BoxDomain::unit(2).unwrap();
        assert_eq!(b.dist_to_boundary(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(b.dist_to_boundary(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(b.dist_to_boundary(&[0.25, 0.5]).unwrap(), 0.25);
        assert!(b.dist_to_boundary(&[1.5, 0.5]).is_err());
        assert_eq!(b.nearest_boundary_point(&[0.25, 0.5]), vec![0.0, 0.5]);
    }

    #[test]
    fn carve_volumes() {
        let b = BoxDomain::new(vec![0.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
        let i = BoxDomain::new(vec![0.2, 0.3, 0.4], vec![0.7, 1.1, 2.9]).unwrap();
        let part = carve(&b, &i).unwrap();
        let v: f64 = part.parts.iter().map(Region::volume).sum();
        assert!(((v - b.volume()) / b.volume()).abs() < 1e-12);
        assert!((part.separation - 0.1).abs() < 1e-12);
        assert!(carve(&i, &b).is_err());
    }

    #[test]
    fn json_shapes() {
        let b = BoxDomain::unit(2).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"dim":2,"lo":[0.0,0.0],"hi":[1.0,1.0]}"#);
        let back: BoxDomain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BoxDomain>(r#"{"dim":1,"lo":[1.0],"hi":[0.0]}"#).is_err());
        let g: UniformGridSpec = serde_json::from_str(r#"{"k":3,"dim":2,"scale":1.0,"offset":[0,0]}"#).unwrap();
        assert_eq!(g.count(), 9);
    }
}
