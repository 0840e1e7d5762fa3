use std::path::Path;

use projflat::algebra::{analyze as analyze_at, cotton as cotton_at};
use projflat::chart::{parse_chart, parse_one_form, parse_point, parse_targets, Chart};
use projflat::connection::torsion;
use projflat::develop::{certify_flat, develop_map, TransportOptions, TRANSPORT_TOL};
use projflat::projective::{
    check_weyl_invariance, projectively_equivalent, remove_torsion, same_twistor_structure,
    Equivalence, SameTwistor, TorsionRemoval,
};
use projflat::reps::{j0_census, piece_dims, weyl_dim, Piece, Space, MAX_CENSUS_DIM};
use projflat::twistor::{nijenhuis_report, Integrability};
use projflat::{par_map, samples, ConnectionSpec, ConnectionValue, Error};
use serde::Serialize;

use crate::report::{num, nums, Failure, Outcome};

const DEFAULT_BOX: (f64, f64) = (-1.0, 1.0);
/// Relative torsion below which a connection counts as torsion-free.
const TORSION_TOL: f64 = 1e-12;
/// Complex structures sampled for the same-twistor comparison.
const J_SAMPLES: usize = 10;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Chart, Failure> {
    parse_chart(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn sample_box(chart: &Chart) -> (f64, f64) {
    chart.domain.map_or(DEFAULT_BOX, |d| (d.lo, d.hi))
}

fn point_arg(flag: &str, s: &str, chart: &Chart) -> Result<Vec<f64>, Failure> {
    let p =
        parse_point(s, chart.spec.dim()).map_err(|m| Failure::Input(format!("--{flag}: {m}")))?;
    if let Some(d) = chart.domain {
        if !d.contains(&p) {
            return Err(Failure::Input(format!(
                "--{flag}: point outside the chart domain [{}, {}]",
                d.lo, d.hi
            )));
        }
    }
    Ok(p)
}

fn torsion_norm(cv: &ConnectionValue) -> f64 {
    let scale = cv.gamma.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    torsion(cv).norm() / scale
}

fn require_torsion_free(cv: &ConnectionValue, what: &str) -> Result<(), Failure> {
    let t = torsion_norm(cv);
    if t > TORSION_TOL {
        return Err(Failure::Input(format!(
            "{what} needs a torsion-free connection (relative |T| = {})",
            num(t)
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Norms {
    #[serde(rename = "R")]
    r: f64,
    ricci: f64,
    s: f64,
    #[serde(rename = "W")]
    w: f64,
    #[serde(rename = "Q")]
    q: f64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "C")]
    c: Option<f64>,
}

pub fn analyze(path: &Path, point: &str, tol: f64, assert_flat: bool) -> Result<Outcome, Failure> {
    let chart = load(path)?;
    let n = chart.spec.dim();
    let p = point_arg("point", point, &chart)?;
    let cv = chart.spec.evaluate(&p, 2)?;
    require_torsion_free(&cv, "analyze")?;
    let rep = analyze_at(&cv)?;
    let flat = rep.projectively_flat(tol).unwrap_or(false);
    let verdict = match (n, flat) {
        (2, true) => "W=0, C=0: projectively flat (n=2 criterion)",
        (2, false) => "W=0, C!=0: not projectively flat (n=2 criterion)",
        (_, true) => "projectively flat (W=0)",
        (_, false) => "not projectively flat (W!=0)",
    };
    let norms = Norms {
        r: rep.r_full.norm(),
        ricci: rep.r.norm(),
        s: rep.s.norm(),
        w: rep.w.norm(),
        q: rep.q.norm(),
        f: rep.f.norm(),
        c: rep.c.as_ref().map(|c| c.norm()),
    };

    let mut out = Outcome::new("analyze", flat || !assert_flat);
    out.line(format!("verdict: {verdict}"));
    out.field("dimension", n);
    out.field("point", nums(&p));
    out.field("tolerance", num(tol));
    out.field("|R|", num(norms.r));
    out.field("|Ric|", num(norms.ricci));
    out.field("|s|", num(norms.s));
    out.field("|W|", num(norms.w));
    out.field("|Q|", num(norms.q));
    out.field("|F|", num(norms.f));
    if let Some(c) = norms.c {
        out.field("|C|", num(c));
    }
    out.line("residuals:");
    for (k, v) in &rep.residuals {
        out.field(&format!("  {k}"), num(*v));
    }
    out.put("n", n);
    out.put("point", &p);
    out.put("tol", tol);
    out.put("verdict", verdict);
    out.put("projectively_flat", flat);
    out.put("norms", norms);
    out.put("residuals", &rep.residuals);
    out.put("tensors", &rep);
    Ok(out)
}

pub fn invariance(
    path: &Path,
    alpha: &Path,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome, Failure> {
    let chart = load(path)?;
    let n = chart.spec.dim();
    let form = parse_one_form(&read(alpha)?, n)
        .map_err(|e| Failure::Input(format!("{}: {e}", alpha.display())))?;
    let (lo, hi) = sample_box(&chart);
    let points = samples::points(&mut samples::rng(seed), n, count, lo, hi);
    let rep = check_weyl_invariance(&chart.spec, &form, &points)?;
    let worst = rep.weyl_residual.max(rep.cotton_residual.unwrap_or(0.0));
    let ok = worst <= tol;
    let verdict = if ok { "invariant" } else { "not invariant" };

    let mut out = Outcome::new("invariance", ok);
    out.line(format!("verdict: {verdict}"));
    out.field("dimension", n);
    out.field("samples", count);
    out.field("seed", seed);
    out.field("tolerance", num(tol));
    out.field("max |W' - W|", num(rep.weyl_residual));
    if let Some(c) = rep.cotton_residual {
        out.field("max |C' - C|", num(c));
    }
    out.put("n", n);
    out.put("seed", seed);
    out.put("tol", tol);
    out.put("points", &points);
    out.put("verdict", verdict);
    out.put("report", &rep);
    Ok(out)
}

pub fn equivalent(
    a: &Path,
    b: &Path,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome, Failure> {
    let ca = load(a)?;
    let cb = load(b)?;
    let n = ca.spec.dim();
    if cb.spec.dim() != n {
        return Err(Failure::Input(format!(
            "charts have different dimensions ({n} and {})",
            cb.spec.dim()
        )));
    }
    let (lo, hi) = sample_box(&ca);
    let mut rng = samples::rng(seed);
    let points = samples::points(&mut rng, n, count, lo, hi);
    let eq = projectively_equivalent(&ca.spec, &cb.spec, &points, tol)?;
    let twistor =
        if n % 2 == 0 && torsion_free_at(&ca.spec, &points)? && torsion_free_at(&cb.spec, &points)?
        {
            let js: Vec<Vec<f64>> = (0..J_SAMPLES)
                .map(|_| samples::complex_structure(&mut rng, n))
                .collect();
            Some(same_twistor_structure(
                &ca.spec, &cb.spec, &points, &js, tol,
            )?)
        } else {
            None
        };
    let verdict = if eq.is_yes() {
        "projectively equivalent"
    } else {
        "not projectively equivalent"
    };

    let mut out = Outcome::new("equivalent", eq.is_yes());
    out.line(format!("verdict: {verdict}"));
    out.field("dimension", n);
    out.field("samples", count);
    out.field("seed", seed);
    out.field("tolerance", num(tol));
    match &eq {
        Equivalence::Yes {
            alpha,
            max_residual,
            marginal,
        } => {
            out.field("max residual", num(*max_residual));
            out.field("marginal", marginal);
            for (p, a) in points.iter().zip(alpha) {
                out.field(&format!("  alpha at {}", nums(p)), nums(a));
            }
        }
        Equivalence::No {
            point,
            residual,
            marginal,
        } => {
            out.field("witness point", nums(point));
            out.field("residual", num(*residual));
            out.field("marginal", marginal);
        }
    }
    if let Some(tw) = &twistor {
        let agree = tw.is_yes() == eq.is_yes();
        match tw {
            SameTwistor::Yes { max_residual, .. } => {
                out.field(
                    "same twistor J",
                    format!("yes (max residual {})", num(*max_residual)),
                );
            }
            SameTwistor::No { witness, .. } => {
                out.field(
                    "same twistor J",
                    format!(
                        "no (residual {} at {})",
                        num(witness.residual),
                        nums(&witness.point)
                    ),
                );
            }
        }
        out.field("verdicts agree", agree);
        out.put("verdicts_agree", agree);
    }
    out.put("n", n);
    out.put("seed", seed);
    out.put("tol", tol);
    out.put("points", &points);
    out.put("verdict", verdict);
    out.put("equivalence", &eq);
    out.put("same_twistor", &twistor);
    Ok(out)
}

fn torsion_free_at(spec: &ConnectionSpec, points: &[Vec<f64>]) -> Result<bool, Failure> {
    for p in points {
        if torsion_norm(&spec.evaluate(p, 0)?) > TORSION_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn twistor(path: &Path, count: usize, h: f64, seed: u64) -> Result<Outcome, Failure> {
    let chart = load(path)?;
    let n = chart.spec.dim();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n).into());
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Failure::Input("--h must be positive".into()));
    }
    let (lo, hi) = sample_box(&chart);
    let tps = samples::twistor_points(&mut samples::rng(seed), n, count, lo, hi);
    let xs: Vec<Vec<f64>> = tps.iter().map(|tp| tp.x.clone()).collect();

    let mut out = Outcome::new("twistor", true);
    let mut spec = chart.spec.clone();
    if !torsion_free_at(&spec, &xs)? {
        match remove_torsion(&spec, &xs, 1e-9)? {
            TorsionRemoval::Removed {
                alpha,
                torsion_residual,
                spec: fixed,
            } => {
                out.field(
                    "torsion removed with",
                    format!("alpha = ({})", alpha.join(", ")),
                );
                out.field("  remaining torsion", num(torsion_residual));
                out.put(
                    "torsion_removal",
                    serde_json::json!({ "alpha": alpha, "torsion_residual": torsion_residual }),
                );
                spec = fixed;
            }
            TorsionRemoval::Fail { point, t1_norm } => {
                let verdict =
                    "torsion has a trace-free part; it cannot be removed without changing J";
                out.ok = false;
                out.line(format!("verdict: {verdict}"));
                out.field("point", nums(&point));
                out.field("|T1|", num(t1_norm));
                out.put("verdict", verdict);
                out.put(
                    "torsion_removal",
                    serde_json::json!({ "point": point, "t1_norm": t1_norm }),
                );
                return Ok(out);
            }
        }
    }
    let reports = par_map(&tps, |tp| nijenhuis_report(&spec, tp, h))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let worst = reports.iter().fold(0.0f64, |m, r| m.max(r.residual));
    let verdict = if reports
        .iter()
        .all(|r| r.verdict == Integrability::Integrable)
    {
        "integrable at every sample"
    } else if reports
        .iter()
        .any(|r| r.verdict == Integrability::Obstruction)
    {
        "obstruction detected"
    } else {
        "inconclusive: refine h"
    };
    out.ok = verdict == "integrable at every sample";

    let mut text = std::mem::take(&mut out.text);
    out.line(format!("verdict: {verdict}"));
    out.field("dimension", n);
    out.field("samples", count);
    out.field("seed", seed);
    out.field("h", num(h));
    out.field("max residual", num(worst));
    out.text.push_str(&std::mem::take(&mut text));
    for r in &reports {
        out.line(
            format!(
                "  x = {}  residual {}  {:?}",
                nums(&r.point),
                num(r.residual),
                r.verdict
            )
            .to_lowercase(),
        );
    }
    out.put("n", n);
    out.put("seed", seed);
    out.put("h", h);
    out.put("verdict", verdict);
    out.put("max_residual", worst);
    out.put("samples", &reports);
    Ok(out)
}

#[derive(Serialize)]
struct RepRow {
    piece: Piece,
    label: &'static str,
    highest_weight: Option<String>,
    dim: usize,
    /// Eigenvalues `i·k` of `j₀` as `[k, multiplicity]`; even `n` only.
    spectrum: Option<Vec<(i32, usize)>>,
}

pub fn reps(n: usize, space: Space, census: bool) -> Result<Outcome, Failure> {
    if n < 2 {
        return Err(Failure::Input("--dim must be at least 2".into()));
    }
    if census && (n % 2 == 1 || n > MAX_CENSUS_DIM) {
        return Err(Failure::Input(format!(
            "--census needs an even dimension up to {MAX_CENSUS_DIM}"
        )));
    }
    let pieces = Piece::pieces(space);
    let weights: Vec<_> = pieces.iter().map(|p| p.highest_weight(n)).collect();
    let dims: Vec<usize> = if weights.iter().all(Option::is_some) {
        weights
            .iter()
            .map(|w| weyl_dim(w.as_ref().expect("checked")).map(|d| d as usize))
            .collect::<Result<_, _>>()?
    } else {
        piece_dims(space, n)?
    };
    let spectra = if n.is_multiple_of(2) && n <= MAX_CENSUS_DIM {
        let c = j0_census(space, n)?;
        let by_piece = |p: Piece| {
            c.components
                .iter()
                .find(|comp| comp.piece == p)
                .map(|comp| comp.spectrum.iter().map(|(&k, &m)| (k, m)).collect())
        };
        pieces.iter().map(|&p| by_piece(p)).collect()
    } else {
        vec![None; pieces.len()]
    };
    let rows: Vec<RepRow> = pieces
        .iter()
        .zip(&weights)
        .zip(&dims)
        .zip(spectra)
        .map(|(((&piece, w), &dim), spectrum)| RepRow {
            piece,
            label: piece.label(),
            highest_weight: w.as_ref().map(ToString::to_string),
            dim,
            spectrum,
        })
        .collect();
    let total: usize = dims.iter().sum();
    let full = space.dim(n);

    let mut out = Outcome::new("reps", total == full);
    let name = match space {
        Space::Torsion => "torsion",
        Space::Curvature => "curvature",
    };
    out.line(format!("{name} space, n = {n}"));
    out.line(format!(
        "{:<20}{:<20}{:>6}",
        "piece", "highest weight", "dim"
    ));
    for r in &rows {
        out.line(format!(
            "{:<20}{:<20}{:>6}",
            r.label,
            r.highest_weight.as_deref().unwrap_or("-"),
            r.dim
        ));
    }
    let parts: Vec<String> = dims.iter().map(ToString::to_string).collect();
    out.line(format!(
        "total {} = {total}, tensor space dim {full}",
        parts.join(" + ")
    ));
    out.put("n", n);
    out.put("space", space);
    out.put("components", &rows);
    out.put("total_dim", total);
    out.put("space_dim", full);
    if census {
        out.line("eigenvalues i*k of j0 (k: multiplicity):");
        for r in &rows {
            let spec: Vec<String> = r
                .spectrum
                .iter()
                .flatten()
                .map(|(k, m)| format!("{k}:{m}"))
                .collect();
            out.line(format!("  {:<18}{}", r.label, spec.join(" ")));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct DevelopedRow {
    target: Vec<f64>,
    homogeneous: Vec<f64>,
    /// Affine coordinates `x_k / x_0`, when `x_0 ≠ 0`.
    affine: Option<Vec<f64>>,
    path_error: f64,
}

pub fn develop(
    path: &Path,
    base: &str,
    targets: &Path,
    holonomy_tol: f64,
    seed: u64,
) -> Result<Outcome, Failure> {
    let chart = load(path)?;
    let n = chart.spec.dim();
    let x0 = point_arg("base", base, &chart)?;
    let pts = parse_targets(&read(targets)?, n)
        .map_err(|e| Failure::Input(format!("{}: {e}", targets.display())))?;
    let opts = TransportOptions {
        tol: TRANSPORT_TOL,
        domain: chart.domain,
    };
    let holonomy = match certify_flat(&chart.spec, &x0, holonomy_tol, seed, opts) {
        Ok(h) => h,
        Err(Error::NotFlat { holonomy, tol }) => {
            let verdict = "not projectively flat: loop holonomy exceeds tolerance";
            let mut out = Outcome::new("develop", false);
            out.line(format!("verdict: {verdict}"));
            out.field("base", nums(&x0));
            out.field("holonomy", num(holonomy));
            out.field("tolerance", num(tol));
            out.put("n", n);
            out.put("base", &x0);
            out.put("seed", seed);
            out.put("verdict", verdict);
            out.put("holonomy", holonomy);
            out.put("holonomy_tol", tol);
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let dev = develop_map(&chart.spec, &x0, &pts, holonomy_tol, seed, opts)?;
    let rows: Vec<DevelopedRow> = dev
        .into_iter()
        .map(|d| {
            let h0 = d.homogeneous[0];
            let affine =
                (h0.abs() > 1e-12).then(|| d.homogeneous[1..].iter().map(|x| x / h0).collect());
            DevelopedRow {
                target: d.target,
                homogeneous: d.homogeneous,
                affine,
                path_error: d.path_error,
            }
        })
        .collect();
    let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.path_error));
    let verdict = "projectively flat: developing map defined";

    let mut out = Outcome::new("develop", true);
    out.line(format!("verdict: {verdict}"));
    out.field("base", nums(&x0));
    out.field("holonomy", num(holonomy));
    out.field("tolerance", num(holonomy_tol));
    out.field("max path error", num(worst));
    for r in &rows {
        let image = r
            .affine
            .as_deref()
            .map_or_else(|| format!("[{}]", nums(&r.homogeneous)), nums);
        out.line(format!("  {} -> {}", nums(&r.target), image));
    }
    out.put("n", n);
    out.put("base", &x0);
    out.put("seed", seed);
    out.put("verdict", verdict);
    out.put("holonomy", holonomy);
    out.put("holonomy_tol", holonomy_tol);
    out.put("max_path_error", worst);
    out.put("points", &rows);
    Ok(out)
}

pub fn cotton(path: &Path, point: &str) -> Result<Outcome, Failure> {
    let chart = load(path)?;
    let n = chart.spec.dim();
    let p = point_arg("point", point, &chart)?;
    let cv = chart.spec.evaluate(&p, 2)?;
    require_torsion_free(&cv, "cotton")?;
    let c = cotton_at(&cv)?;
    let norm = c.norm();

    let mut out = Outcome::new("cotton", true);
    if n == 2 {
        let verdict = if norm <= 1e-9 {
            "C=0: projectively flat (n=2 criterion)"
        } else {
            "C!=0: not projectively flat (n=2 criterion)"
        };
        out.line(format!("verdict: {verdict}"));
        out.put("verdict", verdict);
    }
    out.field("dimension", n);
    out.field("point", nums(&p));
    out.field("|C|", num(norm));
    for i in 0..n {
        for j in i + 1..n {
            let row: Vec<f64> = (0..n).map(|k| c.get(&[i, j, k])).collect();
            out.field(&format!("  C[{},{},k]", i + 1, j + 1), nums(&row));
        }
    }
    out.put("n", n);
    out.put("point", &p);
    out.put("norm", norm);
    out.put("C", &c);
    Ok(out)
}
