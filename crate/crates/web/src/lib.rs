//! Browser bindings: chart analysis, geodesic fans and developing-map grids as JSON.

use nalgebra::DMatrix;
use projflat::algebra::analyze;
use projflat::chart::{parse_chart, parse_point, Chart};
use projflat::connection::torsion;
use projflat::develop::{
    cartan_transport, certify_flat, geodesic_trace, Domain, TransportOptions, HOLONOMY_TOL,
};
use projflat::Error;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Box used when a chart declares no domain.
const DEFAULT_DOMAIN: Domain = Domain { lo: -1.0, hi: 1.0 };
const FLAT_TOL: f64 = 1e-9;
/// Plotting needs far less than the CLI's transport accuracy.
const DRAW_TOL: f64 = 1e-8;
const MAX_RAYS: usize = 64;
const MAX_GRID: usize = 24;

fn chart(text: &str) -> Result<Chart, String> {
    parse_chart(text).map_err(|e| e.to_string())
}

fn domain(c: &Chart) -> Domain {
    c.domain.unwrap_or(DEFAULT_DOMAIN)
}

fn plane(c: &Chart) -> Result<(), String> {
    match c.spec.dim() {
        2 => Ok(()),
        n => Err(format!(
            "the demo draws surfaces only; this chart has dimension {n}"
        )),
    }
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[derive(Serialize)]
struct Analysis {
    n: usize,
    point: Vec<f64>,
    torsion: f64,
    verdict: String,
    flat: Option<bool>,
    norms: Vec<(&'static str, f64)>,
}

/// Curvature norms and the flatness verdict at one point.
pub fn analysis(text: &str, point: &str) -> Result<String, String> {
    let c = chart(text)?;
    let n = c.spec.dim();
    let p = parse_point(point, n)?;
    if !domain(&c).contains(&p) {
        return Err("point lies outside the chart domain".into());
    }
    let cv = c.spec.evaluate(&p, 2).map_err(|e| e.to_string())?;
    let t = torsion(&cv).norm();
    if t > 1e-12 {
        return Ok(to_json(&Analysis {
            n,
            point: p,
            torsion: t,
            verdict: "connection has torsion; curvature split needs a torsion-free connection"
                .into(),
            flat: None,
            norms: Vec::new(),
        }));
    }
    let rep = analyze(&cv).map_err(|e| e.to_string())?;
    let flat = rep.projectively_flat(FLAT_TOL);
    let verdict = match (n, flat) {
        (2, Some(true)) => "C = 0: projectively flat",
        (2, _) => "C ≠ 0: not projectively flat",
        (_, Some(true)) => "W = 0: projectively flat",
        _ => "W ≠ 0: not projectively flat",
    };
    let mut norms = vec![
        ("R", rep.r_full.norm()),
        ("Ric", rep.r.norm()),
        ("W", rep.w.norm()),
        ("Q", rep.q.norm()),
    ];
    if let Some(cot) = &rep.c {
        norms.push(("C", cot.norm()));
    }
    Ok(to_json(&Analysis {
        n,
        point: p,
        torsion: t,
        verdict: verdict.into(),
        flat,
        norms,
    }))
}

#[derive(Serialize)]
struct Fan {
    base: Vec<f64>,
    domain: [f64; 2],
    rays: Vec<Vec<[f64; 2]>>,
}

/// Geodesics leaving `base` in `count` evenly spaced directions, cut where they leave the domain.
pub fn fan(text: &str, base: &str, count: usize, length: f64) -> Result<String, String> {
    let c = chart(text)?;
    plane(&c)?;
    let d = domain(&c);
    let x0 = parse_point(base, 2)?;
    if !d.contains(&x0) {
        return Err("base point lies outside the chart domain".into());
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err("length must be positive".into());
    }
    let steps = 200;
    let mut rays = Vec::new();
    for k in 0..count.clamp(1, MAX_RAYS) {
        let a = std::f64::consts::TAU * k as f64 / count.max(1) as f64;
        let v = [a.cos(), a.sin()];
        let ray = match geodesic_trace(&c.spec, &x0, &v, length, steps, Some(d)) {
            Ok(r) => r,
            // Keep the part that stayed inside.
            Err(Error::LeftDomain { step }) if step > 0 => geodesic_trace(
                &c.spec,
                &x0,
                &v,
                length * step as f64 / steps as f64,
                step,
                Some(d),
            )
            .map_err(|e| e.to_string())?,
            Err(Error::LeftDomain { .. }) => vec![x0.clone()],
            Err(e) => return Err(e.to_string()),
        };
        rays.push(ray.into_iter().map(|p| [p[0], p[1]]).collect());
    }
    Ok(to_json(&Fan {
        base: x0,
        domain: [d.lo, d.hi],
        rays,
    }))
}

#[derive(Serialize)]
struct Grid {
    base: Vec<f64>,
    domain: [f64; 2],
    /// Grid lines in the chart.
    source: Vec<Vec<[f64; 2]>>,
    /// Their images under the developing map, in the affine chart `x₀ = 1`.
    image: Vec<Vec<Option<[f64; 2]>>>,
}

/// Images of a `lines × lines` coordinate grid under the developing map from `base`.
pub fn grid(text: &str, base: &str, lines: usize) -> Result<String, String> {
    let c = chart(text)?;
    plane(&c)?;
    let d = domain(&c);
    let x0 = parse_point(base, 2)?;
    if !d.contains(&x0) {
        return Err("base point lies outside the chart domain".into());
    }
    let lines = lines.clamp(2, MAX_GRID);
    let samples = 2 * lines + 1;
    // Stay off the boundary so the straight paths from the base remain inside.
    let (lo, hi) = (d.lo + 0.05 * (d.hi - d.lo), d.hi - 0.05 * (d.hi - d.lo));
    let at = |i: usize, m: usize| lo + (hi - lo) * i as f64 / (m - 1) as f64;
    let mut source = Vec::new();
    for i in 0..lines {
        source.push(
            (0..samples)
                .map(|j| [at(i, lines), at(j, samples)])
                .collect::<Vec<_>>(),
        );
        source.push(
            (0..samples)
                .map(|j| [at(j, samples), at(i, lines)])
                .collect::<Vec<_>>(),
        );
    }
    let opts = TransportOptions {
        tol: DRAW_TOL,
        domain: Some(d),
    };
    certify_flat(&c.spec, &x0, HOLONOMY_TOL, 0, opts).map_err(|e| match e {
        Error::NotFlat { holonomy, .. } => {
            format!("not projectively flat (loop holonomy {holonomy:.3e}): no developing map")
        }
        other => other.to_string(),
    })?;
    // Walk each grid line vertex to vertex, carrying the frame along.
    let project = |phi: &DMatrix<f64>| {
        (phi[(0, 0)].abs() > 1e-9).then(|| [phi[(1, 0)] / phi[(0, 0)], phi[(2, 0)] / phi[(0, 0)]])
    };
    let mut image = Vec::with_capacity(source.len());
    for line in &source {
        let start = line[0].to_vec();
        let mut phi = cartan_transport(
            &c.spec,
            &[x0.clone(), start],
            &DMatrix::identity(3, 3),
            opts,
        )
        .map_err(|e| e.to_string())?
        .phi;
        let mut row = vec![project(&phi)];
        for w in line.windows(2) {
            phi = cartan_transport(&c.spec, &[w[0].to_vec(), w[1].to_vec()], &phi, opts)
                .map_err(|e| e.to_string())?
                .phi;
            row.push(project(&phi));
        }
        image.push(row);
    }
    Ok(to_json(&Grid {
        base: x0,
        domain: [d.lo, d.hi],
        source,
        image,
    }))
}

#[wasm_bindgen(js_name = analyzeChart)]
pub fn analyze_chart(text: &str, point: &str) -> Result<String, JsValue> {
    analysis(text, point).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = geodesicFan)]
pub fn geodesic_fan(text: &str, base: &str, count: usize, length: f64) -> Result<String, JsValue> {
    fan(text, base, count, length).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = developGrid)]
pub fn develop_grid(text: &str, base: &str, lines: usize) -> Result<String, JsValue> {
    grid(text, base, lines).map_err(|e| JsValue::from_str(&e))
}
