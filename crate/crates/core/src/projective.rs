//! Projective change of connection and the tests built on it: invariance of
//! `W` (and `C` when `n = 2`), projective equivalence, torsion removal, and
//! the twistor comparison of two connections.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{cotton, require_torsion_free, torsion_split, weyl};
use crate::connection::{curvature, torsion, ConnectionSpec, ConnectionValue, Source};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::par_map;

/// Default tolerance for equivalence and same-twistor verdicts.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

/// A 1-form `α = α_i dx^i` with expression coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    pub n: usize,
    pub components: Vec<Expr>,
}

impl OneFormField {
    pub fn new(n: usize, components: Vec<Expr>) -> Result<Self> {
        if components.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: components.len(),
            });
        }
        if let Some(v) = components.iter().filter_map(Expr::max_var).max() {
            if v >= n {
                return Err(Error::UnknownVariable {
                    name: format!("x{}", v + 1),
                    offset: 0,
                    dim: n,
                });
            }
        }
        Ok(Self { n, components })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            components: vec![Expr::num(0.0); n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|e| e.eval(p)).collect()
    }
}

fn sum_exprs(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms
        .into_iter()
        .filter(|e| !e.is_zero())
        .reduce(|a, b| a + b)
        .unwrap_or(Expr::num(0.0))
}

fn scaled(c: f64, e: Expr) -> Expr {
    if e.is_zero() || c == 1.0 {
        e
    } else if c == -1.0 {
        Expr::Neg(Box::new(e))
    } else {
        Expr::num(c) * e
    }
}

/// Adds `A^k_{ij}` to Γ, folding into the table when Γ is given symbolically.
fn add_shift(spec: &ConnectionSpec, shift: Vec<Expr>) -> Result<ConnectionSpec> {
    if shift.iter().all(Expr::is_zero) {
        return Ok(spec.clone());
    }
    let merge = |base: &[Expr], extra: Vec<Expr>| -> Vec<Expr> {
        base.iter()
            .zip(extra)
            .map(|(b, e)| sum_exprs([b.clone(), e]))
            .collect()
    };
    match spec.source() {
        Source::Christoffel(table) => ConnectionSpec::christoffel(spec.dim(), merge(table, shift)),
        Source::Shifted { base, shift: old } => {
            ConnectionSpec::shifted((**base).clone(), merge(old, shift))
        }
        Source::Metric(_) => ConnectionSpec::shifted(spec.clone(), shift),
    }
}

/// `∇^α_X Y = ∇_X Y + α(X)Y + α(Y)X`, i.e. `Γ' = Γ + α_i δ^k_j + α_j δ^k_i`.
pub fn projective_change(spec: &ConnectionSpec, alpha: &OneFormField) -> Result<ConnectionSpec> {
    let n = spec.dim();
    if alpha.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.n,
        });
    }
    let mut shift = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                if k == j {
                    terms.push(alpha.components[i].clone());
                }
                if k == i {
                    terms.push(alpha.components[j].clone());
                }
                shift.push(sum_exprs(terms));
            }
        }
    }
    add_shift(spec, shift)
}

/// `T^k_{ij}` as expressions (zero literals where structurally zero).
fn torsion_exprs(spec: &ConnectionSpec) -> Vec<Expr> {
    let n = spec.dim();
    let antisym = |t: &[Expr]| -> Vec<Expr> {
        let mut out = vec![Expr::num(0.0); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let a = &t[(k * n + i) * n + j];
                    let b = &t[(k * n + j) * n + i];
                    out[(k * n + i) * n + j] = match (a.is_zero(), b.is_zero()) {
                        (true, true) => Expr::num(0.0),
                        (false, true) => a.clone(),
                        (true, false) => Expr::Neg(Box::new(b.clone())),
                        _ if a == b => Expr::num(0.0),
                        _ => a.clone() - b.clone(),
                    };
                }
            }
        }
        out
    };
    match spec.source() {
        Source::Christoffel(t) => antisym(t),
        Source::Metric(_) => vec![Expr::num(0.0); n * n * n],
        Source::Shifted { base, shift } => torsion_exprs(base)
            .into_iter()
            .zip(antisym(shift))
            .map(|(a, b)| sum_exprs([a, b]))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub points: usize,
    pub weyl_residual: f64,
    /// Only computed for `n = 2`, where `C` is the invariant.
    pub cotton_residual: Option<f64>,
}

/// Max over `points` of `‖W^{∇^α} − W^∇‖`, plus `‖C^{∇^α} − C^∇‖` for `n = 2`.
pub fn check_weyl_invariance(
    spec: &ConnectionSpec,
    alpha: &OneFormField,
    points: &[Vec<f64>],
) -> Result<InvarianceReport> {
    let changed = projective_change(spec, alpha)?;
    let n = spec.dim();
    let derivs = if n == 2 { 2 } else { 1 };
    let per_point = par_map(points, |p| -> Result<(f64, Option<f64>)> {
        let a = spec.evaluate(p, derivs)?;
        let b = changed.evaluate(p, derivs)?;
        require_torsion_free(&a)?;
        let wa = weyl(&curvature(&a)?)?.w;
        let wb = weyl(&curvature(&b)?)?.w;
        let c = if n == 2 {
            Some(cotton(&a)?.distance(&cotton(&b)?)?)
        } else {
            None
        };
        Ok((wa.distance(&wb)?, c))
    });
    let mut report = InvarianceReport {
        points: points.len(),
        weyl_residual: 0.0,
        cotton_residual: (n == 2).then_some(0.0),
    };
    for r in per_point {
        let (w, c) = r?;
        report.weyl_residual = report.weyl_residual.max(w);
        if let (Some(acc), Some(c)) = (report.cotton_residual.as_mut(), c) {
            *acc = acc.max(c);
        }
    }
    Ok(report)
}

/// Within a factor of ten of the threshold on either side.
fn is_marginal(residual: f64, tol: f64) -> bool {
    residual > tol / 10.0 && residual <= tol * 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Equivalence {
    Yes {
        /// Recovered `α` at each point, in input order.
        alpha: Vec<Vec<f64>>,
        max_residual: f64,
        marginal: bool,
    },
    No {
        point: Vec<f64>,
        residual: f64,
        marginal: bool,
    },
}

impl Equivalence {
    pub fn is_yes(&self) -> bool {
        matches!(self, Equivalence::Yes { .. })
    }
}

/// Difference tensor `A = Γ_b − Γ_a` and the best-fitting `α` with the
/// reconstruction residual `‖A − (α_i δ^k_j + α_j δ^k_i)‖`.
pub fn recover_alpha(a: &ConnectionValue, b: &ConnectionValue) -> (Vec<f64>, f64) {
    let n = a.dim();
    let diff = |k: usize, i: usize, j: usize| b.gamma(k, i, j) - a.gamma(k, i, j);
    let alpha: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| diff(k, i, k)).sum::<f64>() / (n as f64 + 1.0))
        .collect();
    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let mut residual = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let fit = alpha[i] * d(k, j) + alpha[j] * d(k, i);
                residual = residual.max((diff(k, i, j) - fit).abs());
            }
        }
    }
    (alpha, residual)
}

pub fn projectively_equivalent(
    a: &ConnectionSpec,
    b: &ConnectionSpec,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Equivalence> {
    check_same_dim(a, b)?;
    let per_point = par_map(points, |p| -> Result<(Vec<f64>, f64)> {
        let va = a.evaluate(p, 0)?;
        let vb = b.evaluate(p, 0)?;
        require_torsion_free(&va)?;
        require_torsion_free(&vb)?;
        Ok(recover_alpha(&va, &vb))
    });
    let mut alphas = Vec::with_capacity(points.len());
    let mut worst = 0.0f64;
    for (p, r) in points.iter().zip(per_point) {
        let (alpha, residual) = r?;
        if residual > tol {
            return Ok(Equivalence::No {
                point: p.clone(),
                residual,
                marginal: is_marginal(residual, tol),
            });
        }
        worst = worst.max(residual);
        alphas.push(alpha);
    }
    Ok(Equivalence::Yes {
        alpha: alphas,
        max_residual: worst,
        marginal: is_marginal(worst, tol),
    })
}

fn check_same_dim(a: &ConnectionSpec, b: &ConnectionSpec) -> Result<()> {
    if a.dim() != b.dim() {
        Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum TorsionRemoval {
    Removed {
        alpha: Vec<String>,
        /// Max torsion of the corrected connection over the sample points.
        torsion_residual: f64,
        #[serde(skip)]
        spec: ConnectionSpec,
    },
    /// Torsion has a trace-free part, which no correction of this shape removes.
    Fail { point: Vec<f64>, t1_norm: f64 },
}

/// Replaces `∇` by `∇_X Y − ½(α(X)Y − α(Y)X)` with `α` the torsion trace,
/// provided the torsion is pure trace at every sample point.
pub fn remove_torsion(
    spec: &ConnectionSpec,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<TorsionRemoval> {
    let n = spec.dim();
    let t1 = par_map(points, |p| -> Result<f64> {
        let cv = spec.evaluate(p, 0)?;
        Ok(torsion_split(&torsion(&cv))?.t1.norm())
    });
    for (p, r) in points.iter().zip(t1) {
        let t1_norm = r?;
        if t1_norm > tol {
            return Ok(TorsionRemoval::Fail {
                point: p.clone(),
                t1_norm,
            });
        }
    }

    let t = torsion_exprs(spec);
    let at = |k: usize, i: usize, j: usize| t[(k * n + i) * n + j].clone();
    let alpha: Vec<Expr> = (0..n)
        .map(|j| {
            scaled(
                1.0 / (n as f64 - 1.0),
                sum_exprs((0..n).map(|k| at(k, j, k))),
            )
        })
        .collect();

    let mut shift = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                if k == j && k != i {
                    terms.push(scaled(-0.5, alpha[i].clone()));
                }
                if k == i && k != j {
                    terms.push(scaled(0.5, alpha[j].clone()));
                }
                shift.push(sum_exprs(terms));
            }
        }
    }
    let corrected = add_shift(spec, shift)?;
    let residuals = par_map(points, |p| -> Result<f64> {
        Ok(torsion(&corrected.evaluate(p, 0)?).norm())
    });
    let mut torsion_residual = 0.0f64;
    for r in residuals {
        torsion_residual = torsion_residual.max(r?);
    }
    Ok(TorsionRemoval::Removed {
        alpha: alpha.iter().map(|e| e.to_string()).collect(),
        torsion_residual,
        spec: corrected,
    })
}

/// Norm of the `3i` part `(j+i)∘A((j−i)·)∘(j−i)` of a `(1,2)` tensor under a
/// complex structure `j` (row-major), divided by `(1 + ‖j‖)^3`.
pub fn three_i_residual(n: usize, a: &[f64], j: &[f64]) -> f64 {
    let i = Complex64::i();
    let jp =
        |r: usize, c: usize| Complex64::from(j[r * n + c]) + if r == c { i } else { 0.0.into() };
    let jm =
        |r: usize, c: usize| Complex64::from(j[r * n + c]) - if r == c { i } else { 0.0.into() };
    let mut worst = 0.0f64;
    let mut m = vec![Complex64::from(0.0); n * n];
    let mut tmp = vec![Complex64::from(0.0); n * n];
    for col in 0..n {
        // Y = (j − i) e_col, M = A(Y)
        let y: Vec<Complex64> = (0..n).map(|r| jm(r, col)).collect();
        for k in 0..n {
            for l in 0..n {
                m[k * n + l] = (0..n).map(|s| y[s] * a[(k * n + s) * n + l]).sum();
            }
        }
        for r in 0..n {
            for c in 0..n {
                tmp[r * n + c] = (0..n).map(|s| jp(r, s) * m[s * n + c]).sum();
            }
        }
        for r in 0..n {
            for c in 0..n {
                let v: Complex64 = (0..n).map(|s| tmp[r * n + s] * jm(s, c)).sum();
                worst = worst.max(v.norm());
            }
        }
    }
    let jn = j.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    worst / (1.0 + jn).powi(3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistorWitness {
    pub point: Vec<f64>,
    pub j: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum SameTwistor {
    Yes {
        max_residual: f64,
        marginal: bool,
    },
    No {
        witness: TwistorWitness,
        marginal: bool,
    },
}

impl SameTwistor {
    pub fn is_yes(&self) -> bool {
        matches!(self, SameTwistor::Yes { .. })
    }
}

/// Whether `J^{∇_a}` and `J^{∇_b}` agree, tested through the `3i` part of
/// `A = Γ_b − Γ_a` for every `(point, j)` pair.
pub fn same_twistor_structure(
    a: &ConnectionSpec,
    b: &ConnectionSpec,
    points: &[Vec<f64>],
    j_samples: &[Vec<f64>],
    tol: f64,
) -> Result<SameTwistor> {
    check_same_dim(a, b)?;
    let n = a.dim();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    for j in j_samples {
        crate::twistor::check_complex_structure(n, j)?;
    }
    let diffs = par_map(points, |p| -> Result<Vec<f64>> {
        let va = a.evaluate(p, 0)?;
        let vb = b.evaluate(p, 0)?;
        Ok(vb.gamma.iter().zip(&va.gamma).map(|(x, y)| x - y).collect())
    });
    let diffs: Vec<Vec<f64>> = diffs.into_iter().collect::<Result<_>>()?;
    let grid: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..j_samples.len()).map(move |s| (p, s)))
        .collect();
    let residuals = par_map(&grid, |&(p, s)| {
        three_i_residual(n, &diffs[p], &j_samples[s])
    });
    let mut worst = 0.0f64;
    let mut witness = None;
    for (&(p, s), r) in grid.iter().zip(residuals) {
        if r > worst {
            worst = r;
            witness = Some((p, s));
        }
    }
    if worst > tol {
        let (p, s) = witness.expect("nonzero residual has a witness");
        Ok(SameTwistor::No {
            witness: TwistorWitness {
                point: points[p].clone(),
                j: j_samples[s].clone(),
                residual: worst,
            },
            marginal: is_marginal(worst, tol),
        })
    } else {
        Ok(SameTwistor::Yes {
            max_residual: worst,
            marginal: is_marginal(worst, tol),
        })
    }
}
