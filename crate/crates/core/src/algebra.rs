//! The graded Lie algebra `TM ⊕ End TM ⊕ T*M` and the curvature decomposition
//! built on it: `[Q∧Id]`, the Weyl component, `Q^∇`, `F^∇`, the Cotton tensor
//! and the curvature of the Cartan connection `∇̂ = (∇, Q; Id, ∇)` on
//! `Λ ⊕ TMΛ`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::connection::{
    curvature, curvature_derivative, first_bianchi_residual, ricci, second_bianchi_residual,
    torsion, trace2form, ConnectionValue, CURVATURE, FORM2, TORSION,
};
use crate::error::{Error, Result};
use crate::tensor::{Slot, TensorValue};

/// Default tolerance for identity checks that gate a computation.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative tolerance for the first-Bianchi precondition of [`weyl`].
pub const BIANCHI_TOL: f64 = 1e-10;

const FORM3: [Slot; 3] = [Slot::Down, Slot::Down, Slot::Down];

/// An element `(X, A, α)`; `a` is row-major with `a[i*n + j] = A^i_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl AlgebraElement {
    pub fn zero(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            a: vec![0.0; n * n],
            alpha: vec![0.0; n],
        }
    }

    pub fn vector(x: Vec<f64>) -> Self {
        let n = x.len();
        Self { x, ..Self::zero(n) }
    }

    pub fn covector(alpha: Vec<f64>) -> Self {
        let n = alpha.len();
        Self {
            alpha,
            ..Self::zero(n)
        }
    }

    pub fn endo(a: Vec<f64>) -> Self {
        let n = (a.len() as f64).sqrt().round() as usize;
        Self { a, ..Self::zero(n) }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn norm(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.a)
            .chain(&self.alpha)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, o: &Self) -> Self {
        let z = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p + q).collect();
        Self {
            x: z(&self.x, &o.x),
            a: z(&self.a, &o.a),
            alpha: z(&self.alpha, &o.alpha),
        }
    }
}

/// The matrix of `Z ↦ α(X)Z + α(Z)X`.
fn vec_covec(x: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = x.len();
    let ax: f64 = x.iter().zip(alpha).map(|(p, q)| p * q).sum();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = x[i] * alpha[j] + if i == j { ax } else { 0.0 };
        }
    }
    m
}

pub fn bracket(p: &AlgebraElement, q: &AlgebraElement) -> Result<AlgebraElement> {
    let n = p.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.dim(),
        });
    }
    let (a, b) = (&p.a, &q.a);
    let mut out = AlgebraElement::zero(n);
    // vector part: [A, Y] + [X, B] = AY - BX
    for i in 0..n {
        out.x[i] = (0..n)
            .map(|j| a[i * n + j] * q.x[j] - b[i * n + j] * p.x[j])
            .sum();
    }
    // endomorphism part: [A, B] + [X, β] - [Y, α]
    let xb = vec_covec(&p.x, &q.alpha);
    let ya = vec_covec(&q.x, &p.alpha);
    for i in 0..n {
        for j in 0..n {
            let comm: f64 = (0..n)
                .map(|m| a[i * n + m] * b[m * n + j] - b[i * n + m] * a[m * n + j])
                .sum();
            out.a[i * n + j] = comm + xb[i * n + j] - ya[i * n + j];
        }
    }
    // covector part: [α, B] + [A, β] = α∘B - β∘A
    for j in 0..n {
        out.alpha[j] = (0..n)
            .map(|i| p.alpha[i] * b[i * n + j] - q.alpha[i] * a[i * n + j])
            .sum();
    }
    Ok(out)
}

fn expect_variance(t: &TensorValue, want: &[Slot], what: &str) -> Result<()> {
    if t.variance != want {
        Err(Error::VarianceMismatch(format!(
            "{what} expects {want:?}, got {:?}",
            t.variance
        )))
    } else {
        Ok(())
    }
}

/// `[Q∧Id](X, Y) = [Q(X), Y] - [Q(Y), X]`, evaluated through [`bracket`].
pub fn wedge_id(q: &TensorValue) -> Result<TensorValue> {
    expect_variance(q, &FORM2, "wedge_id")?;
    let n = q.n;
    let mut out = TensorValue::zeros(n, &CURVATURE);
    let basis = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    let row = |i: usize| (0..n).map(|b| q.get(&[i, b])).collect::<Vec<_>>();
    for i in 0..n {
        for j in 0..n {
            let first = bracket(
                &AlgebraElement::covector(row(i)),
                &AlgebraElement::vector(basis(j)),
            )?;
            let second = bracket(
                &AlgebraElement::covector(row(j)),
                &AlgebraElement::vector(basis(i)),
            )?;
            for l in 0..n {
                for k in 0..n {
                    out.set(&[l, k, i, j], first.a[l * n + k] - second.a[l * n + k]);
                }
            }
        }
    }
    Ok(out)
}

/// The `Σ_i α^i([ω∧Id](X, Y, X_i) Z)` contraction of `[ω∧Id]` for a
/// `T*M`-valued 2-form `ω_{abc} = ω(e_a, e_b)(e_c)`, returned as `[X][Y][Z]`.
pub fn wedge_id_form_trace(omega: &TensorValue) -> Result<TensorValue> {
    expect_variance(omega, &FORM3, "wedge_id_form_trace")?;
    let n = omega.n;
    let w = |a: usize, b: usize, c: usize| omega.get(&[a, b, c]);
    // [ω∧Id](X,Y,W)Z = [ω(X,Y),W]Z + [ω(Y,W),X]Z + [ω(W,X),Y]Z
    // with [α,V]Z = -α(V)Z - α(Z)V; trace over W and the output index.
    Ok(TensorValue::from_fn(n, &FORM3, |ix| {
        let (x, y, z) = (ix[0], ix[1], ix[2]);
        let mut acc = 0.0;
        for i in 0..n {
            let dz = |c: usize| if c == i { 1.0 } else { 0.0 };
            acc += -w(x, y, i) * dz(z) - w(x, y, z);
            acc += -w(y, i, x) * dz(z) - w(y, i, z) * dz(x);
            acc += -w(i, x, y) * dz(z) - w(i, x, z) * dz(y);
        }
        acc
    }))
}

/// Splits a `T*M`-valued 2-form into its totally alternating part and the
/// remainder (the Λ³ and ℬ₀ components).
pub fn split_form3(omega: &TensorValue) -> Result<(TensorValue, TensorValue)> {
    expect_variance(omega, &FORM3, "split_form3")?;
    let minus = TensorValue::from_fn(omega.n, &FORM3, |ix| {
        let (a, b, c) = (ix[0], ix[1], ix[2]);
        (omega.get(&[a, b, c]) + omega.get(&[b, c, a]) + omega.get(&[c, a, b])) / 3.0
    });
    let plus = omega.sub(&minus)?;
    Ok((plus, minus))
}

/// Weyl component, `Q^∇` and `F^∇` of a Bianchi-closed curvature tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylParts {
    pub w: TensorValue,
    pub q: TensorValue,
    pub f: TensorValue,
}

pub fn weyl(r: &TensorValue) -> Result<WeylParts> {
    weyl_with_tol(r, BIANCHI_TOL)
}

pub fn weyl_with_tol(r: &TensorValue, tol: f64) -> Result<WeylParts> {
    expect_variance(r, &CURVATURE, "weyl")?;
    let n = r.n as f64;
    let residual = first_bianchi_residual(r);
    if residual > tol * r.norm().max(1.0) {
        return Err(Error::NotBianchi { residual });
    }
    let ric = ricci(r)?;
    let plus = ric.sym2(0, 1)?;
    let minus = ric.alt2(0, 1)?;
    let q = plus
        .scale(1.0 / (n - 1.0))
        .add(&minus.scale(1.0 / (n + 1.0)))?;
    let w = r.add(&wedge_id(&q)?)?;
    let f = minus.scale(-2.0 / (n + 1.0));
    Ok(WeylParts { w, q, f })
}

/// `Q^∇ = r₊/(n-1) + r₋/(n+1)`.
pub fn projective_schouten(r: &TensorValue) -> Result<TensorValue> {
    let ric = ricci(r)?;
    let n = r.n as f64;
    ric.sym2(0, 1)?
        .scale(1.0 / (n - 1.0))
        .add(&ric.alt2(0, 1)?.scale(1.0 / (n + 1.0)))
}

/// Torsion split `T = T1 + T2` with `T2 = ᾱ` the trace part,
/// `α_j = Σ_k T^k_{jk} / (n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionSplit {
    pub t1: TensorValue,
    pub t2: TensorValue,
    pub alpha: Vec<f64>,
}

pub fn torsion_split(t: &TensorValue) -> Result<TorsionSplit> {
    expect_variance(t, &TORSION, "torsion_split")?;
    let residual = t.sym2(1, 2)?.norm();
    if residual > 1e-12 * t.norm().max(1.0) {
        return Err(Error::NotAntisymmetric { residual });
    }
    let n = t.n;
    let alpha: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| t.get(&[k, j, k])).sum::<f64>() / (n as f64 - 1.0))
        .collect();
    let t2 = alpha_bar(&alpha);
    let t1 = t.sub(&t2)?;
    Ok(TorsionSplit { t1, t2, alpha })
}

/// `ᾱ(X, Y) = α(X)Y - α(Y)X` as `[k][i][j]`.
pub fn alpha_bar(alpha: &[f64]) -> TensorValue {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    TensorValue::from_fn(alpha.len(), &TORSION, |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        alpha[i] * d(k, j) - alpha[j] * d(k, i)
    })
}

pub(crate) fn require_torsion_free(cv: &ConnectionValue) -> Result<()> {
    let scale = cv.gamma.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    let norm = torsion(cv).norm();
    if norm > 1e-12 * scale {
        Err(Error::HasTorsion { norm })
    } else {
        Ok(())
    }
}

/// `Q^∇` and `∂_m Q_{ij}` (stored `[i][j][m]`).
fn schouten_with_derivative(cv: &ConnectionValue) -> Result<(TensorValue, TensorValue)> {
    let r = curvature(cv)?;
    let dr = curvature_derivative(cv)?;
    let n = cv.dim();
    let q = projective_schouten(&r)?;
    let dric = TensorValue::from_fn(n, &FORM3, |ix| {
        let (i, j, m) = (ix[0], ix[1], ix[2]);
        (0..n).map(|k| dr.get(&[k, j, i, k, m])).sum()
    });
    let nf = n as f64;
    let dq = TensorValue::from_fn(n, &FORM3, |ix| {
        let (i, j, m) = (ix[0], ix[1], ix[2]);
        let sym = 0.5 * (dric.get(&[i, j, m]) + dric.get(&[j, i, m]));
        let alt = 0.5 * (dric.get(&[i, j, m]) - dric.get(&[j, i, m]));
        sym / (nf - 1.0) + alt / (nf + 1.0)
    });
    Ok((q, dq))
}

/// `C_{ijk} = ∇_i Q_{jk} - ∇_j Q_{ik}` (the covariant exterior derivative of `Q^∇`).
pub fn cotton(cv: &ConnectionValue) -> Result<TensorValue> {
    if cv.ddgamma.is_none() {
        return Err(Error::MissingJet("Cotton tensor needs ∂∂Γ"));
    }
    require_torsion_free(cv)?;
    let (q, dq) = schouten_with_derivative(cv)?;
    let n = cv.dim();
    let nabla_q = |i: usize, j: usize, k: usize| {
        let mut v = dq.get(&[j, k, i]);
        for a in 0..n {
            v -= cv.gamma(a, i, j) * q.get(&[a, k]) + cv.gamma(a, i, k) * q.get(&[j, a]);
        }
        v
    };
    Ok(TensorValue::from_fn(n, &FORM3, |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        nabla_q(i, j, k) - nabla_q(j, i, k)
    }))
}

/// Connection coefficient of the density line `Λ`: `a_i = -Γ^k_{ki}/(n+1)`,
/// normalized so that the curvature of `Λ` is `F^∇ = -Tr R^∇/(n+1)`.
pub fn density_connection(cv: &ConnectionValue) -> Vec<f64> {
    let n = cv.dim();
    (0..n)
        .map(|i| -(0..n).map(|k| cv.gamma(k, k, i)).sum::<f64>() / (n as f64 + 1.0))
        .collect()
}

/// The matrices `Â_i` of `∇̂_{∂_i} = ∂_i + Â_i` on `Λ ⊕ TMΛ` in the frame
/// `(σ, ∂_1⊗σ, …, ∂_n⊗σ)`.
pub fn cartan_matrices(cv: &ConnectionValue) -> Result<Vec<DMatrix<f64>>> {
    let n = cv.dim();
    let q = projective_schouten(&curvature(cv)?)?;
    let a = density_connection(cv);
    Ok((0..n)
        .map(|i| {
            DMatrix::from_fn(n + 1, n + 1, |row, col| match (row, col) {
                (0, 0) => a[i],
                (0, c) => q.get(&[i, c - 1]),
                (r, 0) => {
                    if r - 1 == i {
                        1.0
                    } else {
                        0.0
                    }
                }
                (r, c) => cv.gamma(r - 1, i, c - 1) + if r == c { a[i] } else { 0.0 },
            })
        })
        .collect())
}

/// The four blocks of the curvature of `∇̂` in the `(Λ, TMΛ)` splitting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartanBlocks {
    /// Λ → Λ, `[i][j]`.
    pub top_left: TensorValue,
    /// TMΛ → Λ, `[i][j][b]`.
    pub top_right: TensorValue,
    /// Λ → TMΛ, `[a][i][j]`.
    pub bottom_left: TensorValue,
    /// TMΛ → TMΛ, `[a][b][i][j]`.
    pub bottom_right: TensorValue,
}

impl CartanBlocks {
    pub fn max_norm(&self) -> f64 {
        self.top_left
            .norm()
            .max(self.top_right.norm())
            .max(self.bottom_left.norm())
            .max(self.bottom_right.norm())
    }
}

pub fn cartan_curvature(cv: &ConnectionValue) -> Result<CartanBlocks> {
    if cv.ddgamma.is_none() {
        return Err(Error::MissingJet("Cartan curvature needs ∂∂Γ"));
    }
    require_torsion_free(cv)?;
    let n = cv.dim();
    let hat = cartan_matrices(cv)?;
    let (_, dq) = schouten_with_derivative(cv)?;
    let nf = n as f64;
    // ∂_j Â_i
    let d_hat = |i: usize, j: usize| {
        let da_i = -(0..n).map(|k| cv.dgamma(k, k, i, j)).sum::<f64>() / (nf + 1.0);
        DMatrix::from_fn(n + 1, n + 1, |row, col| match (row, col) {
            (0, 0) => da_i,
            (0, c) => dq.get(&[i, c - 1, j]),
            (_, 0) => 0.0,
            (r, c) => cv.dgamma(r - 1, i, c - 1, j) + if r == c { da_i } else { 0.0 },
        })
    };
    let mut curv = vec![DMatrix::<f64>::zeros(n + 1, n + 1); n * n];
    for i in 0..n {
        for j in 0..n {
            curv[i * n + j] = d_hat(j, i) - d_hat(i, j) + &hat[i] * &hat[j] - &hat[j] * &hat[i];
        }
    }
    let at = |i: usize, j: usize, r: usize, c: usize| curv[i * n + j][(r, c)];
    Ok(CartanBlocks {
        top_left: TensorValue::from_fn(n, &FORM2, |ix| at(ix[0], ix[1], 0, 0)),
        top_right: TensorValue::from_fn(n, &FORM3, |ix| at(ix[0], ix[1], 0, ix[2] + 1)),
        bottom_left: TensorValue::from_fn(n, &TORSION, |ix| at(ix[1], ix[2], ix[0] + 1, 0)),
        bottom_right: TensorValue::from_fn(n, &CURVATURE, |ix| {
            at(ix[2], ix[3], ix[0] + 1, ix[1] + 1)
        }),
    })
}

/// Everything [`analyze`] computes at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub n: usize,
    pub point: Vec<f64>,
    #[serde(rename = "R")]
    pub r_full: TensorValue,
    pub r: TensorValue,
    pub r_plus: TensorValue,
    pub r_minus: TensorValue,
    pub s: TensorValue,
    #[serde(rename = "W")]
    pub w: TensorValue,
    #[serde(rename = "Q")]
    pub q: TensorValue,
    #[serde(rename = "F")]
    pub f: TensorValue,
    #[serde(rename = "C")]
    pub c: Option<TensorValue>,
    pub residuals: BTreeMap<String, f64>,
}

impl CurvatureReport {
    /// `W = 0` for `n ≥ 3`, `C = 0` for `n = 2`, within `tol`.
    pub fn projectively_flat(&self, tol: f64) -> Option<bool> {
        if self.n >= 3 {
            Some(self.w.norm() <= tol)
        } else {
            self.c.as_ref().map(|c| c.norm() <= tol)
        }
    }
}

/// Full curvature decomposition at a torsion-free connection value. Cotton and
/// Cartan-curvature entries are filled in when `∂∂Γ` is present.
pub fn analyze(cv: &ConnectionValue) -> Result<CurvatureReport> {
    let n = cv.dim();
    let nf = n as f64;
    let r_full = curvature(cv)?;
    let WeylParts { w, q, f } = weyl(&r_full)?;
    let r = ricci(&r_full)?;
    let r_plus = r.sym2(0, 1)?;
    let r_minus = r.alt2(0, 1)?;
    let s = trace2form(&r_full)?;

    let mut residuals = BTreeMap::new();
    residuals.insert("torsion".into(), torsion(cv).norm());
    residuals.insert("first_bianchi".into(), first_bianchi_residual(&r_full));
    residuals.insert("ricci_of_weyl".into(), ricci(&w)?.norm());
    residuals.insert("weyl_first_bianchi".into(), first_bianchi_residual(&w));
    // R = W - [r₊∧Id]/(n-1) - [r₋∧Id]/(n+1)
    let rebuilt = w
        .sub(&wedge_id(&r_plus)?.scale(1.0 / (nf - 1.0)))?
        .sub(&wedge_id(&r_minus)?.scale(1.0 / (nf + 1.0)))?;
    residuals.insert("reconstruction".into(), rebuilt.distance(&r_full)?);
    residuals.insert("trace_form".into(), s.distance(&r_minus.scale(2.0))?);

    let c = if cv.ddgamma.is_some() {
        residuals.insert("second_bianchi".into(), second_bianchi_residual(cv)?);
        let blocks = cartan_curvature(cv)?;
        residuals.insert("cartan_top_left".into(), blocks.top_left.norm());
        residuals.insert("cartan_bottom_left".into(), blocks.bottom_left.norm());
        residuals.insert(
            "cartan_bottom_right_vs_weyl".into(),
            blocks.bottom_right.distance(&w)?,
        );
        let c = cotton(cv)?;
        residuals.insert(
            "cartan_top_right_vs_cotton".into(),
            blocks.top_right.distance(&c)?,
        );
        Some(c)
    } else {
        None
    };

    Ok(CurvatureReport {
        n,
        point: cv.point.clone(),
        r_full,
        r,
        r_plus,
        r_minus,
        s,
        w,
        q,
        f,
        c,
        residuals,
    })
}
