use std::io::Write;
use std::path::Path;
use std::time::Instant;

use branchlink::cost::{w_alpha, CostModel};
use branchlink::curves::{build_sheaves, crossing_linking, gauss_linking, total_linking, Polyline3, DEFAULT_DIRECTION};
use branchlink::domain::{grid_points, BoxDomain, UniformGridSpec};
use branchlink::fields::{field_stats, hopf_preimage, hopf_whitehead, spaghetton_field, spaghetton_rho, SphereField};
use branchlink::fmt::{round_json, sig9_str};
use branchlink::graph::TransportGraph;
use branchlink::grid_lab::{budget_series, run_scaling, singularity_grid};
use branchlink::solver::{lattice_oracle, solve_brbd, solve_charged, ChargedConfig, SolveOptions};
use branchlink::{Error, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{Cli, Command, Method};

pub fn run(cli: &Cli) -> Result<()> {
    branchlink::set_threads(cli.threads)?;
    let config = serde_json::to_value(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Linking(a) => emit_json(out, &config, linking(a)?),
        Command::Hopf(a) => emit_json(out, &config, hopf(a)?),
        Command::Spaghetton(a) => emit_json(out, &config, spaghetton(a)?),
        Command::Solve(a) => emit_json(out, &config, solve(a)?),
        Command::GridScaling(a) => grid_scaling(a, out, &config),
        Command::Singularities(a) => singularities(a, out, &config),
        Command::Budget(a) => budget(a, out, &config),
        Command::ValidateGraph(a) => validate(a, out, &config),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Result object with the effective configuration under `"config"` and
/// every float rounded to nine significant digits.
fn emit_json(out: Option<&Path>, config: &Value, mut body: Value) -> Result<()> {
    if let Value::Object(m) = &mut body {
        m.insert("config".into(), config.clone());
    }
    round_json(&mut body);
    write_out(out, &(serde_json::to_string_pretty(&body)? + "\n"))
}

fn emit_csv(out: Option<&Path>, config: &Value, csv: &str) -> Result<()> {
    write_out(out, &format!("# config {}\n{csv}", serde_json::to_string(config)?))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn model_of(alpha: Option<f64>, model: Option<&str>) -> Result<CostModel> {
    match (alpha, model) {
        (Some(a), None) => CostModel::power_law(a),
        (None, Some(m)) => m.parse(),
        (None, None) => Err(Error::input("give --alpha or --model")),
        (Some(_), Some(_)) => Err(Error::input("--alpha and --model are exclusive")),
    }
}

fn parse_ks(s: &str) -> Result<Vec<u64>> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| Error::input(format!("bad k list {s:?}")))).collect()
}

fn linking(a: &crate::LinkingArgs) -> Result<Value> {
    match (a.spaghetton, a.curves.len()) {
        (Some(k), 0) => {
            let pair = build_sheaves(k)?;
            let s = total_linking(&pair)?;
            if !s.methods_agree || s.max_gauss_error >= 1e-3 {
                return Err(Error::numerical("linking methods disagree"));
            }
            Ok(json!({
                "k": k,
                "pairs": s.pairs,
                "total_linking": s.total_linking,
                "gauss_sum": s.gauss_sum,
                "crossing_total": s.crossing_total,
                "max_gauss_error": s.max_gauss_error,
                "intra_min_distance": pair.intra_min_distance(),
                "inter_min_distance": pair.inter_min_distance(),
            }))
        }
        (None, 2) => {
            let c1: Polyline3 = read_json(&a.curves[0])?;
            let c2: Polyline3 = read_json(&a.curves[1])?;
            let g = gauss_linking(&c1, &c2)?;
            let c = crossing_linking(&c1, &c2, DEFAULT_DIRECTION)?;
            if (g - c as f64).abs() >= 1e-3 {
                return Err(Error::numerical(format!("Gauss integral {g} does not round to the crossing count {c}")));
            }
            Ok(json!({ "linking": c, "gauss": g, "crossing": c }))
        }
        _ => Err(Error::input("linking takes two curve files or --spaghetton k")),
    }
}

fn hopf(a: &crate::HopfArgs) -> Result<Value> {
    let parsed = crate::fieldspec::parse(&a.field)?;
    let t = Instant::now();
    let (value, details) = match a.method {
        Method::Preimage => {
            let r = hopf_preimage(parsed.field.as_ref(), a.res.unwrap_or(128))?;
            (json!(r.hopf), json!({ "raw": r.raw, "values": r.values, "loops": r.loops, "lengths": r.lengths, "h": r.h, "attempts": r.attempts }))
        }
        Method::Whitehead => {
            let r = hopf_whitehead(parsed.field.as_ref(), parsed.cube, a.res.unwrap_or(96))?;
            (json!(r.hopf), json!({ "n": r.n, "lo": r.lo, "side": r.side }))
        }
    };
    Ok(json!({
        "field": parsed.field.name(),
        "method": a.method,
        "value": value,
        "runtime": t.elapsed().as_secs_f64(),
        "details": details,
    }))
}

fn spaghetton(a: &crate::SpaghettonArgs) -> Result<Value> {
    let f = spaghetton_field(a.k, a.rho)?;
    let pair = build_sheaves(a.k)?;
    let stats = field_stats(&f, &[2.0, 3.0], a.res)?;
    let energies: serde_json::Map<String, Value> = stats.energies.iter().map(|(p, e)| (format!("E{p}"), json!(e))).collect();
    let mut v = json!({
        "k": a.k,
        "rho": a.rho.unwrap_or(spaghetton_rho(a.k)),
        "curves": 2 * a.k * a.k,
        "expected_hopf": 2 * (a.k as i64).pow(4),
        "intra_min_distance": pair.intra_min_distance(),
        "inter_min_distance": pair.inter_min_distance(),
        "support_radius": f.support_radius(),
        "resolution": stats.resolution,
        "h": stats.h,
        "energies": energies,
        "sup_gradient": stats.sup_gradient,
    });
    if a.hopf {
        v["hopf"] = json!(hopf_preimage(&f, a.res)?.hopf);
    }
    Ok(v)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointsFile {
    Bare(Vec<Vec<f64>>),
    WithDomain { points: Vec<Vec<f64>>, domain: Option<BoxDomain> },
}

fn solve(a: &crate::SolveArgs) -> Result<Value> {
    let model = model_of(a.alpha, a.model.as_deref())?;
    let opts = SolveOptions { seed: a.seed, iterations: a.iterations, restarts: a.restarts, ..SolveOptions::default() };
    if let Some(path) = &a.charged {
        let cfg: ChargedConfig = read_json(path)?;
        let s = solve_charged(&cfg, &model, &opts)?;
        return Ok(json!({ "value": s.value, "method": s.method, "graph": s.graph }));
    }
    let (points, domain) = match (&a.points, &a.grid) {
        (Some(p), None) => match read_json::<PointsFile>(p)? {
            PointsFile::Bare(pts) => {
                let dim = pts.first().map_or(2, |p| p.len());
                (pts, BoxDomain::unit(dim)?)
            }
            PointsFile::WithDomain { points, domain } => {
                let dim = points.first().map_or(2, |p| p.len());
                let d = match domain {
                    Some(d) => d,
                    None => BoxDomain::unit(dim)?,
                };
                (points, d)
            }
        },
        (None, Some(g)) => {
            let mk = parse_ks(g)?;
            if mk.len() != 2 {
                return Err(Error::input("--grid takes m,k"));
            }
            let n = mk[1].checked_pow(mk[0] as u32).filter(|&n| n <= branchlink::grid_lab::MAX_GRID_POINTS);
            if n.is_none() {
                return Err(Error::resource("grid is too large"));
            }
            let spec = UniformGridSpec::unit(mk[0] as usize, mk[1] as usize);
            (grid_points(&spec)?, spec.domain()?)
        }
        _ => return Err(Error::input("give exactly one of --points, --grid or --charged")),
    };
    if points.is_empty() {
        return Err(Error::input("no points"));
    }
    let s = solve_brbd(&points, &domain, &model, &opts)?;
    let mut v = json!({ "value": s.value, "lower": s.lower, "method": s.method, "sources": points.len(), "graph": s.graph });
    if let Some(res) = a.res {
        v["oracle"] = json!(lattice_oracle(&domain, &points, &model, res)?.value);
    }
    Ok(v)
}

fn grid_scaling(a: &crate::GridScalingArgs, out: Option<&Path>, config: &Value) -> Result<()> {
    let alpha = match model_of(a.alpha, a.model.as_deref())? {
        CostModel::PowerLaw { alpha } => alpha,
        _ => return Err(Error::input("grid scaling needs a power-law model")),
    };
    let opts = SolveOptions { seed: a.seed, iterations: a.iterations, ..SolveOptions::default() };
    let rep = run_scaling(a.m, alpha, &parse_ks(&a.ks)?, &opts)?;
    if a.json {
        emit_json(out, config, json!({ "rows": rep.rows, "xi_upper_slope": rep.xi_upper_slope(), "xi_upper_spread": rep.xi_upper_spread() }))
    } else {
        emit_csv(out, config, &rep.to_csv())
    }
}

fn singularities(a: &crate::SingularitiesArgs, out: Option<&Path>, config: &Value) -> Result<()> {
    let opts = SolveOptions { seed: a.seed, iterations: a.iterations, ..SolveOptions::default() };
    let mut csv = String::from("k,points,lower,upper,lower_over_k3\n");
    for k in parse_ks(&a.ks)? {
        let r = singularity_grid(k, &opts)?;
        csv.push_str(&format!("{},{},{},{},{}\n", r.k, r.points.len(), sig9_str(r.lower), sig9_str(r.upper), sig9_str(r.lower_over_k3)));
    }
    emit_csv(out, config, &csv)
}

fn budget(a: &crate::BudgetArgs, out: Option<&Path>, config: &Value) -> Result<()> {
    if a.n < 2 {
        return Err(Error::input("--N must be at least 2"));
    }
    let mut ns: Vec<u64> = std::iter::successors(Some(10u64), |n| n.checked_mul(10)).take_while(|&n| n < a.n).collect();
    ns.push(a.n);
    let mut csv = String::from("N,c,s1,s2,s3,s2_tail_bound,s3_lower\n");
    for n in ns {
        let b = budget_series(n)?;
        let cells = [b.n.to_string(), sig9_str(b.c), sig9_str(b.s1), sig9_str(b.s2), sig9_str(b.s3), sig9_str(b.s2_tail_bound), sig9_str(b.s3_lower)];
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    emit_csv(out, config, &csv)
}

fn validate(a: &crate::ValidateArgs, out: Option<&Path>, config: &Value) -> Result<()> {
    let g: TransportGraph = read_json(&a.graph)?;
    let r = g.validate();
    let mut v = json!({
        "valid": r.is_valid(),
        "violations": r.violations.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>(),
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "sources": g.source_count(),
        "boundary_flux": g.boundary_flux(),
    });
    if a.alpha.is_some() || a.model.is_some() {
        let m = model_of(a.alpha, a.model.as_deref())?;
        v["cost"] = json!(w_alpha(&g, &m)?);
    }
    emit_json(out, config, v)?;
    if r.is_valid() {
        Ok(())
    } else {
        Err(Error::input(format!("graph has {} violations", r.violations.len())))
    }
}
