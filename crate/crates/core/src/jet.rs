//! Truncated multivariate Taylor expansions ("jets") up to third order.
//!
//! A [`Jet3`] carries a value together with all partial derivatives up to its
//! `order`. Derivative arrays are stored densely (`d2` is `n*n`, `d3` is `n^3`)
//! and every arithmetic operation writes them symmetrically: each mixed
//! partial is computed once for its sorted index tuple and copied to every
//! permutation, so symmetry holds bit-for-bit.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet3 {
    n: usize,
    order: u8,
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

impl Jet3 {
    pub fn constant(n: usize, order: u8, c: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Self {
            n,
            order,
            value: c,
            d1: vec![0.0; n],
            d2: vec![0.0; n * n],
            d3: vec![0.0; n * n * n],
        }
    }

    /// The coordinate function `x_i` (0-based) evaluated at `value`.
    pub fn variable(n: usize, order: u8, i: usize, value: f64) -> Self {
        let mut j = Self::constant(n, order, value);
        if order >= 1 {
            j.d1[i] = 1.0;
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.d2[i * self.n + j]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.d3[(i * self.n + j) * self.n + k]
    }

    fn set2(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.d2[i * n + j] = v;
        self.d2[j * n + i] = v;
    }

    fn set3(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        for (a, b, c) in [
            (i, j, k),
            (i, k, j),
            (j, i, k),
            (j, k, i),
            (k, i, j),
            (k, j, i),
        ] {
            self.d3[(a * n + b) * n + c] = v;
        }
    }

    /// Drops every derivative above `order`.
    pub fn truncate(mut self, order: u8) -> Self {
        if order < self.order {
            self.order = order;
            if order < 1 {
                self.d1.iter_mut().for_each(|x| *x = 0.0);
            }
            if order < 2 {
                self.d2.iter_mut().for_each(|x| *x = 0.0);
            }
            if order < 3 {
                self.d3.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        self
    }

    /// The jet of `∂_i f`, one order lower.
    pub fn partial(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.n;
        let mut out = Self::constant(n, self.order - 1, self.d1[i]);
        if out.order >= 1 {
            for a in 0..n {
                out.d1[a] = self.d2(i, a);
            }
        }
        if out.order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    out.d2[a * n + b] = self.d3(i, a, b);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            order: self.order,
            value: c * self.value,
            d1: self.d1.iter().map(|x| c * x).collect(),
            d2: self.d2.iter().map(|x| c * x).collect(),
            d3: self.d3.iter().map(|x| c * x).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let zipv = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Self {
            n: self.n,
            order,
            value: f(self.value, other.value),
            d1: zipv(&self.d1, &other.d1),
            d2: zipv(&self.d2, &other.d2),
            d3: zipv(&self.d3, &other.d3),
        }
        .truncate(order)
    }

    /// Chain rule for `g(u)` given `g(u0), g'(u0), g''(u0), g'''(u0)`.
    pub fn compose(&self, g: [f64; 4]) -> Self {
        let n = self.n;
        let u = self;
        let mut out = Self::constant(n, self.order, g[0]);
        if self.order >= 1 {
            for i in 0..n {
                out.d1[i] = g[1] * u.d1[i];
            }
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let v = g[2] * u.d1[i] * u.d1[j] + g[1] * u.d2(i, j);
                    out.set2(i, j, v);
                }
            }
        }
        if self.order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let v = g[3] * u.d1[i] * u.d1[j] * u.d1[k]
                            + g[2]
                                * (u.d2(i, j) * u.d1[k]
                                    + u.d2(i, k) * u.d1[j]
                                    + u.d2(j, k) * u.d1[i])
                            + g[1] * u.d3(i, j, k);
                        out.set3(i, j, k, v);
                    }
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Option<Self> {
        let x = self.value;
        if x == 0.0 {
            return None;
        }
        let r = 1.0 / x;
        Some(self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    /// Integer power by binary exponentiation (negative exponents go through
    /// the reciprocal).
    pub fn powi(&self, e: i64) -> Option<Self> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Self::constant(self.n, self.order, 1.0);
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &sq;
            }
            k >>= 1;
            if k > 0 {
                sq = &sq * &sq;
            }
        }
        Some(acc)
    }

    /// Real power of a strictly positive jet.
    pub fn powf(&self, p: f64) -> Option<Self> {
        let x = self.value;
        if x <= 0.0 {
            return None;
        }
        let f0 = x.powf(p);
        Some(self.compose([
            f0,
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ]))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose([e; 4])
    }

    pub fn ln(&self) -> Option<Self> {
        let x = self.value;
        if x <= 0.0 {
            return None;
        }
        let r = 1.0 / x;
        Some(self.compose([x.ln(), r, -r * r, 2.0 * r * r * r]))
    }

    pub fn sqrt(&self) -> Option<Self> {
        let x = self.value;
        if x < 0.0 || (x == 0.0 && self.order > 0) {
            return None;
        }
        let s = x.sqrt();
        if self.order == 0 {
            return Some(Self::constant(self.n, 0, s));
        }
        Some(self.compose([s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)]))
    }
}

impl Add for &Jet3 {
    type Output = Jet3;
    fn add(self, rhs: &Jet3) -> Jet3 {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet3 {
    type Output = Jet3;
    fn sub(self, rhs: &Jet3) -> Jet3 {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul for &Jet3 {
    type Output = Jet3;
    fn mul(self, v: &Jet3) -> Jet3 {
        assert_eq!(self.n, v.n, "jet dimension mismatch");
        let u = self;
        let n = u.n;
        let order = u.order.min(v.order);
        let mut out = Jet3::constant(n, order, u.value * v.value);
        if order >= 1 {
            for i in 0..n {
                out.d1[i] = u.d1[i] * v.value + u.value * v.d1[i];
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let h = u.d2(i, j) * v.value
                        + u.d1[i] * v.d1[j]
                        + u.d1[j] * v.d1[i]
                        + u.value * v.d2(i, j);
                    out.set2(i, j, h);
                }
            }
        }
        if order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let h = u.d3(i, j, k) * v.value
                            + u.d2(i, j) * v.d1[k]
                            + u.d2(i, k) * v.d1[j]
                            + u.d2(j, k) * v.d1[i]
                            + u.d1[i] * v.d2(j, k)
                            + u.d1[j] * v.d2(i, k)
                            + u.d1[k] * v.d2(i, j)
                            + u.value * v.d3(i, j, k);
                        out.set3(i, j, k, h);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_on_monomials() {
        // x*y at (2,3): d/dx = 3, d/dy = 2, d2/dxdy = 1
        let x = Jet3::variable(2, 3, 0, 2.0);
        let y = Jet3::variable(2, 3, 1, 3.0);
        let p = &x * &y;
        assert_eq!(p.value, 6.0);
        assert_eq!(p.d1, vec![3.0, 2.0]);
        assert_eq!(p.d2(0, 1), 1.0);
        assert_eq!(p.d2(1, 0), 1.0);
        assert_eq!(p.d2(0, 0), 0.0);
        assert!(p.d3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn powi_matches_repeated_product() {
        let x = Jet3::variable(1, 3, 0, 1.5);
        let cube = x.powi(3).unwrap();
        assert_eq!(cube.value, 3.375);
        assert_eq!(cube.d1[0], 3.0 * 2.25);
        assert_eq!(cube.d2[0], 6.0 * 1.5);
        assert_eq!(cube.d3[0], 6.0);
        let inv = x.powi(-1).unwrap();
        assert!((inv.d1[0] + 1.0 / 2.25).abs() < 1e-15);
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet3::variable(2, 3, 0, 0.5);
        let y = Jet3::variable(2, 3, 1, -1.0);
        let f = &(&x * &x) * &y; // x^2 y
        let fx = f.partial(0); // 2xy
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value, -1.0);
        assert_eq!(fx.d1, vec![-2.0, 1.0]);
        assert_eq!(fx.d2(0, 1), 2.0);
    }

    #[test]
    fn domain_failures() {
        let z = Jet3::variable(1, 2, 0, 0.0);
        assert!(z.recip().is_none());
        assert!(z.ln().is_none());
        assert!(z.sqrt().is_none());
        assert!(Jet3::variable(1, 0, 0, 0.0).sqrt().is_some());
        assert!(Jet3::variable(1, 1, 0, -1.0).powf(0.5).is_none());
    }
}
