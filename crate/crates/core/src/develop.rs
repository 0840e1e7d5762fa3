//! Parallel transport for the Cartan connection `∇̂ = d + Â` on `Λ ⊕ TMΛ`,
//! loop holonomy, the developing map into ℝPⁿ, and geodesic tracing.
//!
//! A frame `Φ` solves `∂_X Φ = Φ Â_X`, so `Φ s` is constant for parallel `s`
//! and `φ(x) = Φ(x) e₀` is the image of the density line.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::algebra::{cartan_matrices, require_torsion_free};
use crate::connection::ConnectionSpec;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::par_map;
use crate::samples;

/// Local error target per unit of path length.
pub const TRANSPORT_TOL: f64 = 1e-10;
pub const HOLONOMY_TOL: f64 = 1e-7;
const MIN_STEP: f64 = 1e-9;

/// Axis-aligned box `[lo, hi]^n` that paths must stay in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().all(|x| (self.lo..=self.hi).contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    pub tol: f64,
    pub domain: Option<Domain>,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            tol: TRANSPORT_TOL,
            domain: None,
        }
    }
}

/// Homogeneous coordinates scaled to max-abs 1 with first nonzero entry positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectivePoint {
    pub homogeneous: Vec<f64>,
}

impl ProjectivePoint {
    pub fn new(v: &[f64]) -> Result<Self> {
        let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if m == 0.0 || !m.is_finite() {
            return Err(Error::Domain("zero homogeneous vector".into()));
        }
        let lead = v
            .iter()
            .find(|x| x.abs() > 1e-14 * m)
            .copied()
            .unwrap_or(1.0);
        let s = lead.signum() / m;
        Ok(Self {
            homogeneous: v.iter().map(|x| x * s).collect(),
        })
    }

    /// Max-abs difference of normalized coordinates.
    pub fn distance(&self, o: &Self) -> f64 {
        self.homogeneous
            .iter()
            .zip(&o.homogeneous)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// Largest absolute 3×3 minor of the matrix with rows `a, b, c`: zero exactly
/// when the three points lie on a projective line.
pub fn collinearity(a: &ProjectivePoint, b: &ProjectivePoint, c: &ProjectivePoint) -> f64 {
    let (a, b, c) = (&a.homogeneous, &b.homogeneous, &c.homogeneous);
    let m = a.len();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let det = a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i])
                    + a[k] * (b[i] * c[j] - b[j] * c[i]);
                worst = worst.max(det.abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanFrame {
    pub phi: DMatrix<f64>,
    pub base: Vec<f64>,
    pub current: Vec<f64>,
    /// Sum of accepted step-doubling error estimates.
    pub error_estimate: f64,
}

impl CartanFrame {
    pub fn image(&self) -> Result<ProjectivePoint> {
        ProjectivePoint::new(self.phi.column(0).as_slice())
    }
}

fn outside(p: &[f64], reason: impl Into<String>) -> Error {
    Error::PathOutsideDomain {
        point: p.to_vec(),
        reason: reason.into(),
    }
}

struct Transporter<'a> {
    spec: &'a ConnectionSpec,
    opts: TransportOptions,
}

impl Transporter<'_> {
    /// `Â(v)` at `p`.
    fn generator(&self, p: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        if let Some(d) = self.opts.domain {
            if !d.contains(p) {
                return Err(outside(p, format!("outside [{}, {}]", d.lo, d.hi)));
            }
        }
        let cv = self.spec.evaluate(p, 1).map_err(|e| match e {
            Error::Domain(m) => outside(p, m),
            Error::SingularMetric { condition } => {
                outside(p, format!("metric condition {condition:e}"))
            }
            other => other,
        })?;
        let mats = cartan_matrices(&cv)?;
        let n = self.spec.dim();
        Ok(mats
            .iter()
            .zip(v)
            .fold(DMatrix::zeros(n + 1, n + 1), |acc, (m, vi)| acc + m * *vi))
    }

    fn rk4(
        &self,
        phi: &DMatrix<f64>,
        a: &[f64],
        d: &[f64],
        t: f64,
        h: f64,
    ) -> Result<DMatrix<f64>> {
        let at = |s: f64| -> Vec<f64> { a.iter().zip(d).map(|(x, y)| x + s * y).collect() };
        let f = |s: f64, y: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            Ok(y * self.generator(&at(s), d)?)
        };
        let k1 = f(t, phi)?;
        let k2 = f(t + h / 2.0, &(phi + &k1 * (h / 2.0)))?;
        let k3 = f(t + h / 2.0, &(phi + &k2 * (h / 2.0)))?;
        let k4 = f(t + h, &(phi + &k3 * h))?;
        Ok(phi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }

    /// Transport along the straight segment `a → b`, returning the new frame and
    /// the accumulated error estimate.
    fn segment(&self, phi: DMatrix<f64>, a: &[f64], b: &[f64]) -> Result<(DMatrix<f64>, f64)> {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            return Ok((phi, 0.0));
        }
        let budget = self.opts.tol * len;
        let mut phi = phi;
        let mut t = 0.0;
        let mut h = (0.05 / len).min(1.0);
        let mut total = 0.0;
        while t < 1.0 {
            h = h.min(1.0 - t);
            let full = self.rk4(&phi, a, &d, t, h)?;
            let half = self.rk4(&phi, a, &d, t, h / 2.0)?;
            let half = self.rk4(&half, a, &d, t + h / 2.0, h / 2.0)?;
            let err = (&full - &half).amax() / 15.0;
            // rounding in the comparison itself sets a floor on what is resolvable
            let allowed = budget * h + 64.0 * f64::EPSILON * half.amax();
            if err <= allowed || h * len < MIN_STEP {
                if err > allowed {
                    return Err(Error::StepFailure { t });
                }
                // Richardson-corrected two-half-step result.
                phi = &half + (&half - &full) / 15.0;
                t += h;
                total += err;
                if err < budget * h / 32.0 {
                    h *= 2.0;
                }
            } else {
                h /= 2.0;
            }
        }
        Ok((phi, total))
    }
}

/// Transports `Φ₀` along a piecewise-linear path.
pub fn cartan_transport(
    spec: &ConnectionSpec,
    path: &[Vec<f64>],
    phi0: &DMatrix<f64>,
    opts: TransportOptions,
) -> Result<CartanFrame> {
    let n = spec.dim();
    if path.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: 0,
        });
    }
    if phi0.nrows() != n + 1 || phi0.ncols() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: phi0.nrows(),
        });
    }
    for p in path {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
    }
    let tr = Transporter { spec, opts };
    // Torsion-freeness is checked at the vertices; evaluation also checks the domain.
    for p in path {
        tr.generator(p, &vec![0.0; n])?;
        require_torsion_free(&spec.evaluate(p, 0)?)?;
    }
    let mut phi = phi0.clone();
    let mut error_estimate = 0.0;
    for w in path.windows(2) {
        let (next, err) = tr.segment(phi, &w[0], &w[1])?;
        phi = next;
        error_estimate += err;
    }
    Ok(CartanFrame {
        phi,
        base: path[0].clone(),
        current: path[path.len() - 1].clone(),
        error_estimate,
    })
}

/// Square loop centred at `c` in the plane of orthonormal `u, v`, closed.
pub fn square_loop(c: &[f64], u: &[f64], v: &[f64], side: f64) -> Vec<Vec<f64>> {
    let corner = |a: f64, b: f64| -> Vec<f64> {
        c.iter()
            .zip(u)
            .zip(v)
            .map(|((x, ui), vi)| x + 0.5 * side * (a * ui + b * vi))
            .collect()
    };
    vec![
        corner(-1.0, -1.0),
        corner(1.0, -1.0),
        corner(1.0, 1.0),
        corner(-1.0, 1.0),
        corner(-1.0, -1.0),
    ]
}

/// `max |Φ_loop − I|` for transport of the identity around a closed path.
pub fn holonomy(spec: &ConnectionSpec, lp: &[Vec<f64>], opts: TransportOptions) -> Result<f64> {
    let n = spec.dim();
    let id = DMatrix::identity(n + 1, n + 1);
    let f = cartan_transport(spec, lp, &id, opts)?;
    Ok((f.phi - id).amax())
}

/// Number of loops used to certify flatness.
pub const FLATNESS_LOOPS: usize = 8;

/// The seeded loop family: four random orthonormal planes through `x₀`, each
/// with sides 0.1 and 0.2.
pub fn flatness_loops(x0: &[f64], seed: u64) -> Vec<Vec<Vec<f64>>> {
    let n = x0.len();
    let mut rng = samples::rng(seed);
    let mut out = Vec::with_capacity(FLATNESS_LOOPS);
    for _ in 0..FLATNESS_LOOPS / 2 {
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        normalize(&mut u);
        let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&u).for_each(|(b, a)| *b -= d * a);
        normalize(&mut v);
        for side in [0.1, 0.2] {
            out.push(square_loop(x0, &u, &v, side));
        }
    }
    out
}

fn normalize(v: &mut [f64]) {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Max holonomy over [`flatness_loops`]; `NotFlat` if it exceeds `tol`.
pub fn certify_flat(
    spec: &ConnectionSpec,
    x0: &[f64],
    tol: f64,
    seed: u64,
    opts: TransportOptions,
) -> Result<f64> {
    let loops = flatness_loops(x0, seed);
    let hol = par_map(&loops, |lp| holonomy(spec, lp, opts));
    let mut worst = 0.0f64;
    for h in hol {
        worst = worst.max(h?);
    }
    if worst > tol {
        Err(Error::NotFlat {
            holonomy: worst,
            tol,
        })
    } else {
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DevelopedPoint {
    pub target: Vec<f64>,
    pub homogeneous: Vec<f64>,
    /// Distance between the images along a straight and an axis-by-axis path.
    pub path_error: f64,
}

/// Axis-by-axis staircase from `a` to `b`.
fn staircase(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    let mut path = vec![a.to_vec()];
    let mut cur = a.to_vec();
    for k in 0..a.len() {
        if cur[k] != b[k] {
            cur[k] = b[k];
            path.push(cur.clone());
        }
    }
    path
}

/// `φ(x) = [Φ(x) e₀]` with `Φ(x₀) = I`, after certifying flatness at `x₀`.
pub fn develop_map(
    spec: &ConnectionSpec,
    x0: &[f64],
    targets: &[Vec<f64>],
    holonomy_tol: f64,
    seed: u64,
    opts: TransportOptions,
) -> Result<Vec<DevelopedPoint>> {
    certify_flat(spec, x0, holonomy_tol, seed, opts)?;
    let n = spec.dim();
    let id = DMatrix::identity(n + 1, n + 1);
    let out = par_map(targets, |x| -> Result<DevelopedPoint> {
        let straight = cartan_transport(spec, &[x0.to_vec(), x.clone()], &id, opts)?.image()?;
        let stairs = cartan_transport(spec, &staircase(x0, x), &id, opts)?.image()?;
        Ok(DevelopedPoint {
            target: x.clone(),
            path_error: straight.distance(&stairs),
            homogeneous: straight.homogeneous,
        })
    });
    out.into_iter().collect()
}

/// The affine chart of ℝPⁿ: `Γ = 0`.
pub fn model_connection(n: usize) -> ConnectionSpec {
    ConnectionSpec::flat(n)
}

/// `g = 4/(1 + |x|²)² δ`, the round sphere in stereographic coordinates.
pub fn model_metric(n: usize) -> ConnectionSpec {
    let r2: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
    let conformal = parse(&format!("4/(1+{})^2", r2.join("+")), n).expect("fixed grammar");
    let mut table = vec![Expr::num(0.0); n * n];
    for i in 0..n {
        table[i * n + i] = conformal.clone();
    }
    ConnectionSpec::metric(n, table).expect("fixed shape")
}

/// RK4 for `ẍ^k + Γ^k_{ij} ẋ^i ẋ^j = 0` with `steps` equal steps up to `t_end`.
pub fn geodesic_trace(
    spec: &ConnectionSpec,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    steps: usize,
    domain: Option<Domain>,
) -> Result<Vec<Vec<f64>>> {
    let n = spec.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().min(v0.len()),
        });
    }
    let rhs = |y: &[f64], step: usize| -> Result<Vec<f64>> {
        let (x, v) = y.split_at(n);
        if domain.is_some_and(|d| !d.contains(x)) {
            return Err(Error::LeftDomain { step });
        }
        let cv = spec.evaluate(x, 0).map_err(|e| match e {
            Error::Domain(_) | Error::SingularMetric { .. } => Error::LeftDomain { step },
            other => other,
        })?;
        let mut out = v.to_vec();
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += cv.gamma(k, i, j) * v[i] * v[j];
                }
            }
            out.push(-acc);
        }
        Ok(out)
    };
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    let h = t_end / steps as f64;
    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    let mut out = vec![x0.to_vec()];
    for step in 0..steps {
        let k1 = rhs(&y, step)?;
        let k2 = rhs(&axpy(&y, &k1, h / 2.0), step)?;
        let k3 = rhs(&axpy(&y, &k2, h / 2.0), step)?;
        let k4 = rhs(&axpy(&y, &k3, h), step)?;
        for i in 0..2 * n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if domain.is_some_and(|d| !d.contains(&y[..n])) {
            return Err(Error::LeftDomain { step: step + 1 });
        }
        out.push(y[..n].to_vec());
    }
    Ok(out)
}

/// Distance from `p` to the polyline `curve`.
pub fn distance_to_polyline(p: &[f64], curve: &[Vec<f64>]) -> f64 {
    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
        let l2: f64 = ab.iter().map(|x| x * x).sum();
        let t = if l2 == 0.0 {
            0.0
        } else {
            (ap.iter().zip(&ab).map(|(x, y)| x * y).sum::<f64>() / l2).clamp(0.0, 1.0)
        };
        ap.iter().zip(&ab).map(|(x, y)| (x - t * y).powi(2)).sum()
    };
    curve
        .windows(2)
        .map(|w| dist2(&w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}
