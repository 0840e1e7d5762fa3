//! Linear connections on a coordinate chart.
//!
//! Index conventions used by every module of this crate:
//!
//! * `Γ^k_{ij}` is defined by `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k` and stored at `[k][i][j]`.
//! * `∂_l Γ^k_{ij}` is stored at `[k][i][j][l]`, `∂_m ∂_l Γ^k_{ij}` at `[k][i][j][l][m]`.
//! * Torsion `T^k_{ij} = Γ^k_{ij} - Γ^k_{ji}` has variance (up, down, down).
//! * Curvature `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l` is stored at `[l][k][i][j]`,
//!   variance (up, down, down, down); the last two slots are the form slots.
//! * Ricci `r(X, Y) = Tr(Z ↦ R(X, Z)Y)`, i.e. `r_{ij} = Σ_k R^k_{jik}`.
//! * Trace 2-form `s(X, Y) = Tr R(X, Y)`, i.e. `s_{ij} = Σ_k R^k_{kij}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet3;
use crate::tensor::{Slot, TensorValue};

pub(crate) const CURVATURE: [Slot; 4] = [Slot::Up, Slot::Down, Slot::Down, Slot::Down];
pub(crate) const TORSION: [Slot; 3] = [Slot::Up, Slot::Down, Slot::Down];
pub(crate) const FORM2: [Slot; 2] = [Slot::Down, Slot::Down];

/// Metrics whose `‖g‖∞‖g⁻¹‖∞` exceeds this are rejected.
pub const MAX_METRIC_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `n^3` entries indexed `[k][i][j]`.
    Christoffel(Vec<Expr>),
    /// `n^2` entries, symmetric.
    Metric(Vec<Expr>),
    /// A base connection plus a tensor `A^k_{ij}` (`n^3` entries).
    Shifted {
        base: Box<ConnectionSpec>,
        shift: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSpec {
    n: usize,
    source: Source,
}

impl ConnectionSpec {
    pub fn christoffel(n: usize, table: Vec<Expr>) -> Result<Self> {
        check_dim(n)?;
        expect_len(&table, n * n * n)?;
        check_vars(&table, n)?;
        Ok(Self {
            n,
            source: Source::Christoffel(table),
        })
    }

    /// Metric connection from a full `n×n` table; the upper triangle wins.
    pub fn metric(n: usize, table: Vec<Expr>) -> Result<Self> {
        check_dim(n)?;
        expect_len(&table, n * n)?;
        check_vars(&table, n)?;
        let mut table = table;
        for i in 0..n {
            for j in 0..i {
                table[i * n + j] = table[j * n + i].clone();
            }
        }
        Ok(Self {
            n,
            source: Source::Metric(table),
        })
    }

    /// The zero connection `Γ = 0` (the affine chart of ℝPⁿ).
    pub fn flat(n: usize) -> Self {
        Self {
            n,
            source: Source::Christoffel(vec![Expr::num(0.0); n * n * n]),
        }
    }

    pub fn shifted(base: ConnectionSpec, shift: Vec<Expr>) -> Result<Self> {
        let n = base.n;
        expect_len(&shift, n * n * n)?;
        check_vars(&shift, n)?;
        Ok(Self {
            n,
            source: Source::Shifted {
                base: Box::new(base),
                shift,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn is_metric(&self) -> bool {
        matches!(self.source, Source::Metric(_))
    }

    /// Γ together with `derivs` (0, 1 or 2) orders of its partial derivatives.
    pub fn evaluate(&self, p: &[f64], derivs: u8) -> Result<ConnectionValue> {
        assert!(derivs <= 2, "at most two derivatives of Γ are available");
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        match &self.source {
            Source::Christoffel(table) => {
                let jets = eval_table(table, p, derivs)?;
                Ok(ConnectionValue::from_jets(self.n, p, &jets, derivs))
            }
            Source::Metric(table) => levi_civita(self.n, table, p, derivs),
            Source::Shifted { base, shift } => {
                let mut cv = base.evaluate(p, derivs)?;
                let jets = eval_table(shift, p, derivs)?;
                let extra = ConnectionValue::from_jets(self.n, p, &jets, derivs);
                cv.accumulate(&extra);
                Ok(cv)
            }
        }
    }

    /// Max-abs residual of `∇g = 0` for a metric source.
    pub fn metricity_residual(&self, p: &[f64]) -> Result<f64> {
        let Source::Metric(table) = &self.source else {
            return Err(Error::VarianceMismatch(
                "metricity needs a metric source".into(),
            ));
        };
        let n = self.n;
        let g = eval_table(table, p, 1)?;
        let cv = self.evaluate(p, 0)?;
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = g[i * n + j].d1[l];
                    for m in 0..n {
                        r -= cv.gamma(m, l, i) * g[m * n + j].value
                            + cv.gamma(m, l, j) * g[i * n + m].value;
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::DimensionMismatch {
            expected: 2,
            got: n,
        })
    } else {
        Ok(())
    }
}

fn expect_len(table: &[Expr], want: usize) -> Result<()> {
    if table.len() == want {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: want,
            got: table.len(),
        })
    }
}

fn check_vars(table: &[Expr], n: usize) -> Result<()> {
    for e in table {
        if let Some(i) = e.max_var() {
            if i >= n {
                return Err(Error::UnknownVariable {
                    name: format!("x{}", i + 1),
                    offset: 0,
                    dim: n,
                });
            }
        }
    }
    Ok(())
}

fn eval_table(table: &[Expr], p: &[f64], order: u8) -> Result<Vec<Jet3>> {
    table
        .iter()
        .map(|e| {
            if e.is_zero() {
                Ok(Jet3::constant(p.len(), order, 0.0))
            } else {
                e.eval_jet(p, order)
            }
        })
        .collect()
}

/// Christoffel symbols of a metric, computed entirely in jet arithmetic so
/// that derivatives of Γ come out exact.
fn levi_civita(n: usize, table: &[Expr], p: &[f64], derivs: u8) -> Result<ConnectionValue> {
    let g = eval_table(table, p, derivs + 1)?;
    let ginv = invert_jet_matrix(n, &g)?;
    let dg: Vec<Vec<Jet3>> = (0..n)
        .map(|l| g.iter().map(|e| e.partial(l)).collect())
        .collect();
    let mut gamma = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = Jet3::constant(n, derivs, 0.0);
                for l in 0..n {
                    let bracket = &(&dg[i][j * n + l] + &dg[j][i * n + l]) - &dg[l][i * n + j];
                    acc = &acc + &(&ginv[k * n + l] * &bracket);
                }
                gamma.push(acc.scale(0.5));
            }
        }
    }
    Ok(ConnectionValue::from_jets(n, p, &gamma, derivs))
}

fn invert_jet_matrix(n: usize, g: &[Jet3]) -> Result<Vec<Jet3>> {
    let values = DMatrix::from_fn(n, n, |i, j| g[i * n + j].value);
    let inv = values.clone().try_inverse().ok_or(Error::SingularMetric {
        condition: f64::INFINITY,
    })?;
    let inf_norm = |m: &DMatrix<f64>| {
        m.row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let condition = inf_norm(&values) * inf_norm(&inv);
    if !condition.is_finite() || condition > MAX_METRIC_CONDITION {
        return Err(Error::SingularMetric { condition });
    }

    // Gauss-Jordan with partial pivoting on the values.
    let order = g[0].order();
    let mut a: Vec<Jet3> = g.to_vec();
    let mut b: Vec<Jet3> = (0..n * n)
        .map(|ix| Jet3::constant(n, order, if ix / n == ix % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .value
                    .abs()
                    .total_cmp(&a[s * n + col].value.abs())
            })
            .expect("non-empty range");
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
                b.swap(pivot * n + c, col * n + c);
            }
        }
        let inv_p = a[col * n + col].recip().ok_or(Error::SingularMetric {
            condition: f64::INFINITY,
        })?;
        for c in 0..n {
            a[col * n + c] = &a[col * n + c] * &inv_p;
            b[col * n + c] = &b[col * n + c] * &inv_p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col].clone();
            for c in 0..n {
                a[r * n + c] = &a[r * n + c] - &(&f * &a[col * n + c]);
                b[r * n + c] = &b[r * n + c] - &(&f * &b[col * n + c]);
            }
        }
    }
    Ok(b)
}

/// Γ and its derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionValue {
    n: usize,
    pub point: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dgamma: Option<Vec<f64>>,
    pub ddgamma: Option<Vec<f64>>,
}

impl ConnectionValue {
    pub fn new(
        n: usize,
        point: Vec<f64>,
        gamma: Vec<f64>,
        dgamma: Option<Vec<f64>>,
        ddgamma: Option<Vec<f64>>,
    ) -> Result<Self> {
        let check = |len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: want,
                    got: len,
                })
            }
        };
        check(point.len(), n)?;
        check(gamma.len(), n.pow(3))?;
        if let Some(d) = &dgamma {
            check(d.len(), n.pow(4))?;
        }
        if let Some(d) = &ddgamma {
            check(d.len(), n.pow(5))?;
        }
        Ok(Self {
            n,
            point,
            gamma,
            dgamma,
            ddgamma,
        })
    }

    fn from_jets(n: usize, p: &[f64], jets: &[Jet3], derivs: u8) -> Self {
        let gamma = jets.iter().map(|j| j.value).collect();
        let dgamma = (derivs >= 1).then(|| jets.iter().flat_map(|j| j.d1.clone()).collect());
        let ddgamma = (derivs >= 2).then(|| jets.iter().flat_map(|j| j.d2.clone()).collect());
        Self {
            n,
            point: p.to_vec(),
            gamma,
            dgamma,
            ddgamma,
        }
    }

    fn accumulate(&mut self, other: &Self) {
        let add = |a: &mut Vec<f64>, b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.gamma, &other.gamma);
        if let (Some(a), Some(b)) = (self.dgamma.as_mut(), other.dgamma.as_ref()) {
            add(a, b);
        }
        if let (Some(a), Some(b)) = (self.ddgamma.as_mut(), other.ddgamma.as_ref()) {
            add(a, b);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.gamma[(k * n + i) * n + j]
    }

    /// `∂_l Γ^k_{ij}`; panics if first derivatives were not evaluated.
    #[inline]
    pub fn dgamma(&self, k: usize, i: usize, j: usize, l: usize) -> f64 {
        let n = self.n;
        self.dgamma.as_ref().expect("first derivatives of Γ")[((k * n + i) * n + j) * n + l]
    }

    /// `∂_m ∂_l Γ^k_{ij}`.
    #[inline]
    pub fn ddgamma(&self, k: usize, i: usize, j: usize, l: usize, m: usize) -> f64 {
        let n = self.n;
        self.ddgamma.as_ref().expect("second derivatives of Γ")
            [(((k * n + i) * n + j) * n + l) * n + m]
    }

    /// Γ contracted with a direction: the matrix `M^k_j = v^i Γ^k_{ij}`.
    pub fn gamma_along(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                m[k * n + j] = (0..n).map(|i| v[i] * self.gamma(k, i, j)).sum();
            }
        }
        m
    }
}

pub fn torsion(cv: &ConnectionValue) -> TensorValue {
    TensorValue::from_fn(cv.n, &TORSION, |ix| {
        cv.gamma(ix[0], ix[1], ix[2]) - cv.gamma(ix[0], ix[2], ix[1])
    })
}

pub fn curvature(cv: &ConnectionValue) -> Result<TensorValue> {
    if cv.dgamma.is_none() {
        return Err(Error::MissingJet("curvature needs ∂Γ"));
    }
    let n = cv.n;
    Ok(TensorValue::from_fn(n, &CURVATURE, |ix| {
        let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let mut r = cv.dgamma(l, j, k, i) - cv.dgamma(l, i, k, j);
        for m in 0..n {
            r += cv.gamma(l, i, m) * cv.gamma(m, j, k) - cv.gamma(l, j, m) * cv.gamma(m, i, k);
        }
        r
    }))
}

/// `∂_m R^l_{kij}` stored at `[l][k][i][j][m]`.
pub fn curvature_derivative(cv: &ConnectionValue) -> Result<TensorValue> {
    if cv.ddgamma.is_none() || cv.dgamma.is_none() {
        return Err(Error::MissingJet("∂R needs ∂∂Γ"));
    }
    let n = cv.n;
    let variance = [Slot::Up, Slot::Down, Slot::Down, Slot::Down, Slot::Down];
    Ok(TensorValue::from_fn(n, &variance, |ix| {
        let (l, k, i, j, m) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut r = cv.ddgamma(l, j, k, i, m) - cv.ddgamma(l, i, k, j, m);
        for a in 0..n {
            r += cv.dgamma(l, i, a, m) * cv.gamma(a, j, k)
                + cv.gamma(l, i, a) * cv.dgamma(a, j, k, m)
                - cv.dgamma(l, j, a, m) * cv.gamma(a, i, k)
                - cv.gamma(l, j, a) * cv.dgamma(a, i, k, m);
        }
        r
    }))
}

fn expect_curvature(r: &TensorValue) -> Result<()> {
    if r.variance != CURVATURE {
        Err(Error::VarianceMismatch(format!(
            "expected curvature variance, got {:?}",
            r.variance
        )))
    } else {
        Ok(())
    }
}

pub fn ricci(r: &TensorValue) -> Result<TensorValue> {
    expect_curvature(r)?;
    let n = r.n;
    Ok(TensorValue::from_fn(n, &FORM2, |ix| {
        (0..n).map(|k| r.get(&[k, ix[1], ix[0], k])).sum()
    }))
}

pub fn trace2form(r: &TensorValue) -> Result<TensorValue> {
    expect_curvature(r)?;
    let n = r.n;
    Ok(TensorValue::from_fn(n, &FORM2, |ix| {
        (0..n).map(|k| r.get(&[k, k, ix[0], ix[1]])).sum()
    }))
}

/// Max-abs cyclic sum `R^l_{kij} + R^l_{ijk} + R^l_{jki}`.
pub fn first_bianchi_residual(r: &TensorValue) -> f64 {
    let n = r.n;
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let s = r.get(&[l, k, i, j]) + r.get(&[l, i, j, k]) + r.get(&[l, j, k, i]);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// `∇_m R^l_{kij}` at `[l][k][i][j][m]`.
pub fn covariant_curvature_derivative(cv: &ConnectionValue) -> Result<TensorValue> {
    let r = curvature(cv)?;
    let dr = curvature_derivative(cv)?;
    let n = cv.n;
    Ok(TensorValue::from_fn(n, &dr.variance.clone(), |ix| {
        let (l, k, i, j, m) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut v = dr.get(ix);
        for a in 0..n {
            v += cv.gamma(l, m, a) * r.get(&[a, k, i, j])
                - cv.gamma(a, m, k) * r.get(&[l, a, i, j])
                - cv.gamma(a, m, i) * r.get(&[l, k, a, j])
                - cv.gamma(a, m, j) * r.get(&[l, k, i, a]);
        }
        v
    }))
}

/// Max-abs residual of the second Bianchi identity including torsion terms.
pub fn second_bianchi_residual(cv: &ConnectionValue) -> Result<f64> {
    let r = curvature(cv)?;
    let nr = covariant_curvature_derivative(cv)?;
    let t = torsion(cv);
    let n = cv.n;
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for k in 0..n {
            for m in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut s = nr.get(&[l, k, i, j, m])
                            + nr.get(&[l, k, j, m, i])
                            + nr.get(&[l, k, m, i, j]);
                        for a in 0..n {
                            s += t.get(&[a, m, i]) * r.get(&[l, k, a, j])
                                + t.get(&[a, i, j]) * r.get(&[l, k, a, m])
                                + t.get(&[a, j, m]) * r.get(&[l, k, a, i]);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn sphere(n: usize) -> ConnectionSpec {
        let r2: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
        let conf = format!("4/(1+{})^2", r2.join("+"));
        let table = (0..n * n)
            .map(|ix| {
                if ix / n == ix % n {
                    parse(&conf, n).unwrap()
                } else {
                    Expr::num(0.0)
                }
            })
            .collect();
        ConnectionSpec::metric(n, table).unwrap()
    }

    #[test]
    fn euclidean_metric_is_flat() {
        let table = (0..9)
            .map(|ix| Expr::num(if ix / 3 == ix % 3 { 1.0 } else { 0.0 }))
            .collect();
        let spec = ConnectionSpec::metric(3, table).unwrap();
        let cv = spec.evaluate(&[0.3, -1.0, 2.0], 2).unwrap();
        assert!(cv.gamma.iter().all(|&g| g == 0.0));
        assert_eq!(curvature(&cv).unwrap().norm(), 0.0);
    }

    #[test]
    fn sphere_gamma_vanishes_at_origin() {
        let cv = sphere(2).evaluate(&[0.0, 0.0], 1).unwrap();
        assert!(cv.gamma.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn sphere_is_metric_and_torsion_free() {
        let spec = sphere(2);
        let p = [0.3, -0.2];
        assert!(spec.metricity_residual(&p).unwrap() <= 1e-12);
        let cv = spec.evaluate(&p, 0).unwrap();
        assert!(torsion(&cv).norm() <= 1e-15);
    }

    #[test]
    fn torsion_of_single_entry() {
        // Γ^1_12 = x2
        let mut table = vec![Expr::num(0.0); 8];
        table[1] = parse("x2", 2).unwrap();
        let spec = ConnectionSpec::christoffel(2, table).unwrap();
        let t = torsion(&spec.evaluate(&[0.0, 0.7], 0).unwrap());
        assert_eq!(t.get(&[0, 0, 1]), 0.7);
        assert_eq!(t.get(&[0, 1, 0]), -0.7);
        assert_eq!(t.norm(), 0.7);
    }

    #[test]
    fn sphere_has_constant_curvature_one() {
        for n in 2..=4 {
            let spec = sphere(n);
            let p: Vec<f64> = (0..n).map(|i| 0.3 - 0.25 * i as f64).collect();
            let cv = spec.evaluate(&p, 1).unwrap();
            let r = curvature(&cv).unwrap();
            let conf = 4.0 / (1.0 + p.iter().map(|x| x * x).sum::<f64>()).powi(2);
            let g = |a: usize, b: usize| if a == b { conf } else { 0.0 };
            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            let expected = TensorValue::from_fn(n, &CURVATURE, |ix| {
                let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
                d(l, i) * g(j, k) - d(l, j) * g(i, k)
            });
            assert!(r.distance(&expected).unwrap() <= 1e-10, "n = {n}");
            assert!(trace2form(&r).unwrap().norm() <= 1e-12);
        }
    }

    #[test]
    fn sphere_ricci_at_origin() {
        // r(X,Y) = Tr(Z ↦ R(X,Z)Y) = -(n-1) g for unit curvature
        let cv = sphere(2).evaluate(&[0.0, 0.0], 1).unwrap();
        let ric = ricci(&curvature(&cv).unwrap()).unwrap();
        let expected = TensorValue::from_vec(2, &FORM2, vec![-4.0, 0.0, 0.0, -4.0]).unwrap();
        assert!(ric.distance(&expected).unwrap() <= 1e-12);
    }

    #[test]
    fn missing_jets_are_reported() {
        let cv = ConnectionSpec::flat(2).evaluate(&[0.0, 0.0], 0).unwrap();
        assert!(matches!(curvature(&cv), Err(Error::MissingJet(_))));
        let cv = ConnectionSpec::flat(2).evaluate(&[0.0, 0.0], 1).unwrap();
        assert!(matches!(
            curvature_derivative(&cv),
            Err(Error::MissingJet(_))
        ));
        assert!(matches!(
            ricci(&TensorValue::identity(2)),
            Err(Error::VarianceMismatch(_))
        ));
    }

    #[test]
    fn singular_metric_rejected() {
        let table = vec![
            parse("1", 2).unwrap(),
            parse("1", 2).unwrap(),
            parse("1", 2).unwrap(),
            parse("1 + x1", 2).unwrap(),
        ];
        let spec = ConnectionSpec::metric(2, table).unwrap();
        assert!(matches!(
            spec.evaluate(&[0.0, 0.0], 0),
            Err(Error::SingularMetric { .. })
        ));
        assert!(matches!(
            spec.evaluate(&[1e-13, 0.0], 0),
            Err(Error::SingularMetric { .. })
        ));
        assert!(spec.evaluate(&[0.5, 0.0], 0).is_ok());
    }

    #[test]
    fn dimension_checks() {
        assert!(ConnectionSpec::christoffel(1, vec![Expr::num(0.0)]).is_err());
        assert!(ConnectionSpec::christoffel(2, vec![Expr::num(0.0); 7]).is_err());
        let mut t = vec![Expr::num(0.0); 8];
        t[0] = Expr::var(2);
        assert!(ConnectionSpec::christoffel(2, t).is_err());
    }
}
