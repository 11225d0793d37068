//! Browser bindings. Every export returns a JSON string; the `*_json`
//! functions hold the logic so they can be tested natively.

use branchlink::cost::CostModel;
use branchlink::curves::{build_sheaves, total_linking, Polyline3};
use branchlink::domain::BoxDomain;
use branchlink::fields::{extract_preimages, hopf_preimage, linked_stadia_field, stadium_field, HopfMapField, SphereField};
use branchlink::solver::{solve_brbd, SolveOptions};
use branchlink::{Error, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest sheaf level offered in the page.
pub const DEMO_MAX_K: usize = 4;
pub const DEMO_MAX_POINTS: usize = 40;
pub const DEMO_MAX_RES: usize = 96;

fn vertices(c: &Polyline3) -> Value {
    json!(c.vertices)
}

pub fn sheaves_json(k: usize) -> Result<String> {
    if k == 0 || k > DEMO_MAX_K {
        return Err(Error::input(format!("k must be in 1..={DEMO_MAX_K}")));
    }
    let pair = build_sheaves(k)?;
    let s = total_linking(&pair)?;
    let v = json!({
        "k": k,
        "pairs": s.pairs,
        "total_linking": s.total_linking,
        "horizontal": pair.horizontal.iter().map(vertices).collect::<Vec<_>>(),
        "perpendicular": pair.perpendicular.iter().map(vertices).collect::<Vec<_>>(),
    });
    Ok(v.to_string())
}

/// `points` is a JSON list of `[x, y]` in the unit square.
pub fn solve_json(points: &str, alpha: f64, seed: u64, iterations: usize) -> Result<String> {
    let pts: Vec<Vec<f64>> = serde_json::from_str(points).map_err(|e| Error::input(format!("points: {e}")))?;
    if pts.is_empty() || pts.len() > DEMO_MAX_POINTS {
        return Err(Error::input(format!("need 1..={DEMO_MAX_POINTS} points")));
    }
    let model = CostModel::power_law(alpha)?;
    let domain = BoxDomain::unit(2)?;
    let opts = SolveOptions { seed, iterations, ..SolveOptions::default() };
    let sol = solve_brbd(&pts, &domain, &model, &opts)?;
    let g = &sol.graph;
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|e| json!({ "from": g.point(e.tail), "to": g.point(e.head), "d": e.d }))
        .collect();
    let v = json!({
        "value": sol.value,
        "lower": sol.lower,
        "method": sol.method,
        "edges": edges,
        "steiner": g.vertex_ids().filter(|&v| !g.is_source(v) && !g.is_boundary_vertex(v)).map(|v| g.point(v)).collect::<Vec<_>>(),
    });
    Ok(v.to_string())
}

/// `field` is `hopfmap`, `stadium` or `linked-stadia`.
pub fn hopf_json(field: &str, res: usize) -> Result<String> {
    if res > DEMO_MAX_RES {
        return Err(Error::resource(format!("resolution above {DEMO_MAX_RES}")));
    }
    let f: Box<dyn SphereField> = match field {
        "hopfmap" => Box::new(HopfMapField::default()),
        "stadium" => Box::new(stadium_field(1.0)?),
        "linked-stadia" => Box::new(linked_stadia_field(0.5)?),
        _ => return Err(Error::input(format!("unknown field {field:?}"))),
    };
    let r = hopf_preimage(f.as_ref(), res)?;
    let fams = extract_preimages(f.as_ref(), &r.values, res)?;
    let v = json!({
        "field": field,
        "hopf": r.hopf,
        "raw": r.raw,
        "values": r.values,
        "preimages": fams.iter().map(|fm| fm.loops.iter().map(vertices).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    Ok(v.to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn sheaves(k: usize) -> std::result::Result<String, JsError> {
    js(sheaves_json(k))
}

#[wasm_bindgen]
pub fn solve(points: &str, alpha: f64, seed: u64, iterations: usize) -> std::result::Result<String, JsError> {
    js(solve_json(points, alpha, seed, iterations))
}

#[wasm_bindgen]
pub fn hopf(field: &str, res: usize) -> std::result::Result<String, JsError> {
    js(hopf_json(field, res))
}
