use branchlink::fields::{
    linked_stadia_field, spaghetton_field, stadium_field, GadgetChartField, HopfMapField, SphereField,
};
use branchlink::{Error, Result};

pub struct Parsed {
    pub field: Box<dyn SphereField>,
    /// Integration cube for the Whitehead method, when the default (twice
    /// the active region) is not appropriate.
    pub cube: Option<([f64; 3], f64)>,
}

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::input(format!("bad {what} {s:?}")))
}

pub fn parse(spec: &str) -> Result<Parsed> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let plain = |f: Box<dyn SphereField>| Ok(Parsed { field: f, cube: None });
    match (name, arg) {
        ("hopfmap", None) => {
            let f = HopfMapField::default();
            let r = f.radius;
            Ok(Parsed { field: Box::new(f), cube: Some(([-2.0 * r; 3], 4.0 * r)) })
        }
        ("stadium", a) => plain(Box::new(stadium_field(a.map(|a| num(a, "rho")).transpose()?.unwrap_or(1.0))?)),
        ("linked-stadia", a) => plain(Box::new(linked_stadia_field(a.map(|a| num(a, "rho")).transpose()?.unwrap_or(0.5))?)),
        ("spaghetton", Some(k)) => {
            let k: usize = k.trim().parse().map_err(|_| Error::input(format!("bad spaghetton level {k:?}")))?;
            plain(Box::new(spaghetton_field(k, None)?))
        }
        ("gadget", Some(a)) => {
            let (r, rho) = a.split_once(',').ok_or_else(|| Error::input("gadget needs r,rho"))?;
            let (r, rho) = (num(r, "r")?, num(rho, "rho")?);
            plain(Box::new(GadgetChartField::new(r, rho, [0.0, 0.0, r, 0.0])?))
        }
        _ => Err(Error::input(format!("unknown field {spec:?}; expected hopfmap, stadium, linked-stadia, spaghetton:k or gadget:r,rho"))),
    }
}
