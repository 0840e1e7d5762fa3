//! The twistor space `J(M)` of fibrewise complex structures, the almost
//! complex structure `J^∇` on it, and a finite-difference Nijenhuis tensor.
//!
//! Near a point `(x₀, j₀)` we use coordinates `(x, c)` with `c` the components
//! of `m = Σ c_a B_a` in an orthonormal basis of `{m : m j₀ = −j₀ m}`, and
//! `j = exp(2m) j₀`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::require_torsion_free;
use crate::connection::{ConnectionSpec, ConnectionValue};
use crate::error::{Error, Result};
use crate::par_map;

pub const DEFAULT_H: f64 = 1e-4;
pub const INTEGRABLE_TOL: f64 = 1e-5;
pub const OBSTRUCTION_TOL: f64 = 1e-2;

/// `‖j² + I‖ ≤ 1e-12 (1 + ‖j‖)²`, scaled so conjugated samples pass.
pub fn check_complex_structure(n: usize, j: &[f64]) -> Result<()> {
    if j.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: j.len(),
        });
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let m = DMatrix::from_row_slice(n, n, j);
    let residual = (&m * &m + DMatrix::identity(n, n)).amax();
    if residual > 1e-12 * (1.0 + m.amax()).powi(2) {
        return Err(Error::NotAlmostComplex { residual });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistorPoint {
    pub x: Vec<f64>,
    /// Row-major `n×n`.
    pub j: Vec<f64>,
}

impl TwistorPoint {
    pub fn new(x: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        check_complex_structure(x.len(), &j)?;
        Ok(Self { x, j })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Local chart `(x, c) ↦ (x, exp(2 Σ c_a B_a) j₀)` around `(x₀, j₀)`.
#[derive(Debug, Clone)]
pub struct TwistorChart {
    pub x0: Vec<f64>,
    pub anchor: DMatrix<f64>,
    pub basis: Vec<DMatrix<f64>>,
}

impl TwistorChart {
    pub fn new(tp: &TwistorPoint) -> Self {
        let n = tp.dim();
        let anchor = DMatrix::from_row_slice(n, n, &tp.j);
        Self {
            x0: tp.x.clone(),
            basis: anticommutant_basis(&anchor),
            anchor,
        }
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn fibre_dim(&self) -> usize {
        self.basis.len()
    }

    /// Total real dimension `n + n²/2`.
    pub fn dim(&self) -> usize {
        self.n() + self.fibre_dim()
    }

    pub fn fibre_matrix(&self, c: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        self.basis
            .iter()
            .zip(c)
            .fold(DMatrix::zeros(n, n), |acc, (b, ci)| acc + b * *ci)
    }

    /// Base point and complex structure at chart coordinates `y = (x, c)`.
    pub fn point(&self, y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.n();
        let m = self.fibre_matrix(&y[n..]);
        (y[..n].to_vec(), (m * 2.0).exp() * &self.anchor)
    }

    pub fn origin(&self) -> Vec<f64> {
        let mut y = self.x0.clone();
        y.resize(self.dim(), 0.0);
        y
    }
}

/// Orthonormal (Frobenius) basis of the matrices anticommuting with `j`.
fn anticommutant_basis(j: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = j.nrows();
    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut e = DMatrix::zeros(n, n);
            e[(a, b)] = 1.0;
            let mut v = (&e + j * &e * j) * 0.5;
            for u in &basis {
                let d = u.dot(&v);
                v -= u * d;
            }
            let norm = v.norm();
            if norm > 1e-8 {
                basis.push(v / norm);
            }
        }
    }
    basis
}

/// Fréchet derivative of `exp` at `m` in direction `e`.
fn dexp(m: &DMatrix<f64>, e: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(m);
    big.view_mut((n, n), (n, n)).copy_from(m);
    big.view_mut((0, n), (n, n)).copy_from(e);
    big.exp().view((0, n), (n, n)).into_owned()
}

/// `Γ(v)^k_l = v^i Γ^k_{il}`.
fn gamma_matrix(cv: &ConnectionValue, v: &[f64]) -> DMatrix<f64> {
    let n = cv.dim();
    DMatrix::from_row_slice(n, n, &cv.gamma_along(v))
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Matrix of `J^∇` at chart coordinates `y`, given Γ at the base point of `y`.
pub fn acs_matrix(chart: &TwistorChart, cv: &ConnectionValue, y: &[f64]) -> Result<DMatrix<f64>> {
    let n = chart.n();
    let d = chart.fibre_dim();
    if cv.dim() != n || y.len() != n + d {
        return Err(Error::DimensionMismatch {
            expected: n + d,
            got: y.len(),
        });
    }
    let m2 = chart.fibre_matrix(&y[n..]) * 2.0;
    let j = m2.exp() * &chart.anchor;
    // Columns: dj for each fibre coordinate.
    let tangent: Vec<DMatrix<f64>> = chart
        .basis
        .iter()
        .map(|b| dexp(&m2, &(b * 2.0)) * &chart.anchor)
        .collect();
    let mut lift = DMatrix::zeros(n * n, d);
    for (a, t) in tangent.iter().enumerate() {
        for r in 0..n {
            for c in 0..n {
                lift[(r * n + c, a)] = t[(r, c)];
            }
        }
    }
    let svd = lift.svd(true, true);

    let mut out = DMatrix::zeros(n + d, n + d);
    for col in 0..n + d {
        let mut xdot = vec![0.0; n];
        let mut djdot = DMatrix::zeros(n, n);
        if col < n {
            xdot[col] = 1.0;
        } else {
            djdot = tangent[col - n].clone();
        }
        let xv = DVector::from_vec(xdot.clone());
        let jx = &j * &xv;
        // vertical part ∇_ẋ j, rotated by j, then re-lifted along j·ẋ
        let vertical = &djdot + commutator(&gamma_matrix(cv, &xdot), &j);
        let dj_new = &j * vertical - commutator(&gamma_matrix(cv, jx.as_slice()), &j);
        let rhs = DVector::from_iterator(
            n * n,
            (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| dj_new[(r, c)]),
        );
        let cdot = svd
            .solve(&rhs, 1e-13)
            .map_err(|e| Error::Domain(format!("fibre lift: {e}")))?;
        for k in 0..n {
            out[(k, col)] = jx[k];
        }
        for a in 0..d {
            out[(n + a, col)] = cdot[a];
        }
    }
    Ok(out)
}

/// `J^∇` at a twistor point, in the chart anchored there.
pub fn twistor_acs(cv: &ConnectionValue, tp: &TwistorPoint) -> Result<DMatrix<f64>> {
    check_complex_structure(tp.dim(), &tp.j)?;
    let chart = TwistorChart::new(tp);
    acs_matrix(&chart, cv, &chart.origin())
}

/// A frame `g` with `g⁻¹ j g = j₀` and `cond(g) ≈ ‖j‖`.
///
/// `q = I + jᵀj` is `j`-invariant, so `k = s j s⁻¹` with `s = q^{1/2}` is an
/// orthogonal complex structure; an orthonormal basis `v₁, kv₁, v₂, kv₂, …`
/// then conjugates `k` to `j₀`, and `g = s⁻¹ o`.
pub fn adapted_frame(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j.nrows();
    let q = DMatrix::identity(n, n) + j.transpose() * j;
    let eig = q.symmetric_eigen();
    let root = |p: f64| {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p)));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    };
    let (s, s_inv) = (root(0.5), root(-0.5));
    let k = &s * j * &s_inv;
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let v = (0..n)
            .map(|i| {
                let e = DVector::from_fn(n, |r, _| f64::from(u8::from(r == i)));
                cols.iter().fold(e, |acc, u| &acc - u * u.dot(&acc))
            })
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("n > 0");
        let v = &v / v.norm();
        let kv = &k * &v;
        cols.push(v);
        cols.push(kv);
    }
    s_inv * DMatrix::from_columns(&cols)
}

/// The field `y ↦ J^∇(y)` over a twistor chart.
///
/// Base coordinates are the linear chart `x = x₀ + g x'` with `g` from
/// [`adapted_frame`], so the anchor structure is standard and finite
/// differences are not swamped by a badly scaled `j`. The Nijenhuis tensor is
/// tensorial, so its vanishing does not depend on this choice.
pub struct TwistorField<'a> {
    spec: &'a ConnectionSpec,
    pub stencil: Stencil,
    base: Vec<f64>,
    frame: DMatrix<f64>,
    frame_inv: DMatrix<f64>,
    pub chart: TwistorChart,
}

pub type VectorField<'f> = &'f dyn Fn(&[f64]) -> DVector<f64>;

impl<'a> TwistorField<'a> {
    pub fn new(spec: &'a ConnectionSpec, tp: &TwistorPoint) -> Result<Self> {
        if spec.dim() != tp.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: tp.dim(),
            });
        }
        let n = tp.dim();
        check_complex_structure(n, &tp.j)?;
        require_torsion_free(&spec.evaluate(&tp.x, 0)?)?;
        let j = DMatrix::from_row_slice(n, n, &tp.j);
        let frame = adapted_frame(&j);
        let frame_inv = frame
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("singular adapted frame".into()))?;
        // g⁻¹ j g is j₀ up to rounding; anchor on j₀ itself
        let local = TwistorPoint {
            x: vec![0.0; n],
            j: crate::samples::standard_complex_structure(n),
        };
        Ok(Self {
            spec,
            stencil: Stencil::Richardson,
            base: tp.x.clone(),
            frame,
            frame_inv,
            chart: TwistorChart::new(&local),
        })
    }

    /// Γ in the adapted linear chart at local base coordinates `xl`.
    fn local_connection(&self, xl: &[f64]) -> Result<ConnectionValue> {
        let n = self.chart.n();
        let x: Vec<f64> = (0..n)
            .map(|k| self.base[k] + (0..n).map(|i| self.frame[(k, i)] * xl[i]).sum::<f64>())
            .collect();
        let cv = self.spec.evaluate(&x, 0)?;
        let (g, gi) = (&self.frame, &self.frame_inv);
        let mut gamma = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = cv.gamma(a, b, c);
                    if v == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        let vk = gi[(k, a)] * v;
                        for i in 0..n {
                            let vki = vk * g[(b, i)];
                            for jj in 0..n {
                                gamma[(k * n + i) * n + jj] += vki * g[(c, jj)];
                            }
                        }
                    }
                }
            }
        }
        ConnectionValue::new(n, xl.to_vec(), gamma, None, None)
    }

    pub fn acs(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let cv = self.local_connection(&y[..self.chart.n()])?;
        acs_matrix(&self.chart, &cv, y)
    }

    /// `(Y(y + hv) − Y(y − hv)) / 2h` for the field `Y`.
    fn central(
        f: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
        y: &[f64],
        v: &DVector<f64>,
        h: f64,
    ) -> Result<DVector<f64>> {
        let plus: Vec<f64> = y.iter().zip(v.iter()).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = y.iter().zip(v.iter()).map(|(a, b)| a - h * b).collect();
        Ok((f(&plus)? - f(&minus)?) / (2.0 * h))
    }

    fn directional(
        &self,
        f: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
        y: &[f64],
        v: &DVector<f64>,
        h: f64,
    ) -> Result<DVector<f64>> {
        match self.stencil {
            Stencil::Central => Self::central(f, y, v, h),
            Stencil::Richardson => {
                let coarse = Self::central(f, y, v, h)?;
                let fine = Self::central(f, y, v, h / 2.0)?;
                Ok((fine * 4.0 - coarse) / 3.0)
            }
        }
    }

    fn bracket(
        &self,
        f: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
        g: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
        y: &[f64],
        h: f64,
    ) -> Result<DVector<f64>> {
        let fy = f(y)?;
        let gy = g(y)?;
        Ok(self.directional(g, y, &fy, h)? - self.directional(f, y, &gy, h)?)
    }

    /// `N(X,Y) = [JX,JY] − [X,Y] − J[JX,Y] − J[X,JY]` at `y`, all brackets by
    /// finite differences with step `h` and the field's stencil.
    pub fn nijenhuis_fields(
        &self,
        x: VectorField<'_>,
        yv: VectorField<'_>,
        y: &[f64],
        h: f64,
    ) -> Result<DVector<f64>> {
        let xf = |p: &[f64]| -> Result<DVector<f64>> { Ok(x(p)) };
        let yf = |p: &[f64]| -> Result<DVector<f64>> { Ok(yv(p)) };
        let jx = |p: &[f64]| -> Result<DVector<f64>> { Ok(self.acs(p)? * x(p)) };
        let jy = |p: &[f64]| -> Result<DVector<f64>> { Ok(self.acs(p)? * yv(p)) };
        let j = self.acs(y)?;
        let a = self.bracket(&jx, &jy, y, h)?;
        let b = self.bracket(&xf, &yf, y, h)?;
        let c = self.bracket(&jx, &yf, y, h)?;
        let d = self.bracket(&xf, &jy, y, h)?;
        Ok(a - b - &j * c - &j * d)
    }

    /// `N` on constant coordinate fields `u`, `v` at the chart origin.
    pub fn nijenhuis_constant(&self, u: &[f64], v: &[f64], h: f64) -> Result<DVector<f64>> {
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        let fu = move |_: &[f64]| u.clone();
        let fv = move |_: &[f64]| v.clone();
        self.nijenhuis_fields(&fu, &fv, &self.chart.origin(), h)
    }
}

/// Difference stencil for the vector field brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Plain central differences, error `O(h²)`.
    Central,
    /// Central differences at `h` and `h/2` combined to cancel the `h²`
    /// term, error `O(h⁴)`.
    #[default]
    Richardson,
}

/// Max-abs `N(e_a, e_b)` over coordinate basis pairs `a < b`.
pub fn nijenhuis(spec: &ConnectionSpec, tp: &TwistorPoint, h: f64) -> Result<f64> {
    nijenhuis_with(spec, tp, h, Stencil::default())
}

pub fn nijenhuis_with(
    spec: &ConnectionSpec,
    tp: &TwistorPoint,
    h: f64,
    stencil: Stencil,
) -> Result<f64> {
    let mut field = TwistorField::new(spec, tp)?;
    field.stencil = stencil;
    let dim = field.chart.dim();
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|a| (a + 1..dim).map(move |b| (a, b)))
        .collect();
    let unit = |a: usize| {
        let mut e = vec![0.0; dim];
        e[a] = 1.0;
        e
    };
    let values = par_map(&pairs, |&(a, b)| {
        field
            .nijenhuis_constant(&unit(a), &unit(b), h)
            .map(|v| v.amax())
    });
    values
        .into_iter()
        .try_fold(0.0f64, |m, r| r.map(|v| m.max(v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrability {
    Integrable,
    Obstruction,
    Inconclusive,
}

impl Integrability {
    pub fn from_residual(r: f64) -> Self {
        if r <= INTEGRABLE_TOL {
            Integrability::Integrable
        } else if r >= OBSTRUCTION_TOL {
            Integrability::Obstruction
        } else {
            Integrability::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NijenhuisReport {
    pub point: Vec<f64>,
    pub j: Vec<f64>,
    pub residual: f64,
    pub verdict: Integrability,
}

pub fn nijenhuis_report(
    spec: &ConnectionSpec,
    tp: &TwistorPoint,
    h: f64,
) -> Result<NijenhuisReport> {
    let residual = nijenhuis(spec, tp, h)?;
    Ok(NijenhuisReport {
        point: tp.x.clone(),
        j: tp.j.clone(),
        residual,
        verdict: Integrability::from_residual(residual),
    })
}
