//! Dense tensors at a point with explicit variance bookkeeping.
//!
//! Data is row-major over the slots in order, so the entry with multi-index
//! `(i0, i1, ..., ir)` lives at `((i0 * n + i1) * n + ...) * n + ir`. Slots are
//! 0-based throughout the API.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    pub variance: Vec<Slot>,
    pub n: usize,
    pub data: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(n: usize, variance: &[Slot]) -> Self {
        Self {
            variance: variance.to_vec(),
            n,
            data: vec![0.0; n.pow(variance.len() as u32)],
        }
    }

    pub fn from_vec(n: usize, variance: &[Slot], data: Vec<f64>) -> Result<Self> {
        let want = n.pow(variance.len() as u32);
        if data.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: data.len(),
            });
        }
        Ok(Self {
            variance: variance.to_vec(),
            n,
            data,
        })
    }

    pub fn from_fn(n: usize, variance: &[Slot], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(n, variance);
        let mut idx = vec![0; variance.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            advance(&mut idx, n);
        }
        t
    }

    /// δ^k_i as an (up, down) tensor.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, &[Slot::Up, Slot::Down], |ix| {
            if ix[0] == ix[1] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    fn check_slot(&self, s: usize) -> Result<()> {
        if s >= self.rank() {
            Err(Error::SlotOutOfRange {
                slot: s,
                rank: self.rank(),
            })
        } else {
            Ok(())
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.variance != other.variance {
            return Err(Error::VarianceMismatch(format!(
                "{:?} vs {:?}",
                self.variance, other.variance
            )));
        }
        Ok(())
    }

    /// Trace over an (up, down) slot pair.
    pub fn contract(&self, a: usize, b: usize) -> Result<Self> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        if a == b || self.variance[a] == self.variance[b] {
            return Err(Error::VarianceMismatch(format!(
                "cannot contract slots {a} and {b} of {:?}",
                self.variance
            )));
        }
        let variance: Vec<Slot> = self
            .variance
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != a && *s != b)
            .map(|(_, v)| *v)
            .collect();
        let n = self.n;
        let mut full = vec![0; self.rank()];
        Ok(Self::from_fn(n, &variance, |ix| {
            let mut rest = ix.iter();
            for (s, slot) in full.iter_mut().enumerate() {
                if s != a && s != b {
                    *slot = *rest.next().expect("rank bookkeeping");
                }
            }
            (0..n)
                .map(|m| {
                    full[a] = m;
                    full[b] = m;
                    self.get(&full)
                })
                .sum()
        }))
    }

    /// Exchanges two slots (a transpose of the multi-index).
    pub fn swap(&self, a: usize, b: usize) -> Result<Self> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        let mut variance = self.variance.clone();
        variance.swap(a, b);
        let mut src = vec![0; self.rank()];
        Ok(Self::from_fn(self.n, &variance, |ix| {
            src.copy_from_slice(ix);
            src.swap(a, b);
            self.get(&src)
        }))
    }

    fn pair_part(&self, a: usize, b: usize, sign: f64) -> Result<Self> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        if a == b {
            return Err(Error::VarianceMismatch(format!(
                "slot {a} paired with itself"
            )));
        }
        if self.variance[a] != self.variance[b] {
            return Err(Error::VarianceMismatch(format!(
                "slots {a} and {b} have different variance"
            )));
        }
        let mut src = vec![0; self.rank()];
        Ok(Self::from_fn(self.n, &self.variance, |ix| {
            src.copy_from_slice(ix);
            src.swap(a, b);
            0.5 * (self.get(ix) + sign * self.get(&src))
        }))
    }

    /// Antisymmetric part in slots `(a, b)`.
    pub fn alt2(&self, a: usize, b: usize) -> Result<Self> {
        self.pair_part(a, b, -1.0)
    }

    /// Symmetric part in slots `(a, b)`.
    pub fn sym2(&self, a: usize, b: usize) -> Result<Self> {
        self.pair_part(a, b, 1.0)
    }

    /// Max-abs entry.
    pub fn norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            variance: self.variance.clone(),
            n: self.n,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            variance: self.variance.clone(),
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Max-abs entry of `self - other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

/// Odometer increment of a multi-index in `[0, n)^r`.
pub(crate) fn advance(idx: &mut [usize], n: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return;
        }
        *slot = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Slot::{Down, Up};

    #[test]
    fn trace_of_identity() {
        let id = TensorValue::identity(3);
        let tr = id.contract(0, 1).unwrap();
        assert_eq!(tr.rank(), 0);
        assert_eq!(tr.data, vec![3.0]);
    }

    #[test]
    fn trace_of_alpha_bar() {
        // T^k_ij = δ^k_i α_j - δ^k_j α_i with α = (1,0,0)
        let alpha = [1.0, 0.0, 0.0];
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let t = TensorValue::from_fn(3, &[Up, Down, Down], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            d(k, i) * alpha[j] - d(k, j) * alpha[i]
        });
        let c = t.contract(0, 1).unwrap();
        assert_eq!(c.variance, vec![Down]);
        assert_eq!(c.data, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn sym_and_alt_of_two_by_two() {
        let q = TensorValue::from_vec(2, &[Down, Down], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(q.sym2(0, 1).unwrap().data, vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(q.alt2(0, 1).unwrap().data, vec![0.0, -0.5, 0.5, 0.0]);
        let s = q.sym2(0, 1).unwrap();
        assert_eq!(s.alt2(0, 1).unwrap().norm(), 0.0);
    }

    #[test]
    fn errors() {
        let q = TensorValue::zeros(2, &[Down, Down]);
        assert!(matches!(q.contract(0, 1), Err(Error::VarianceMismatch(_))));
        assert!(matches!(
            q.contract(0, 2),
            Err(Error::SlotOutOfRange { slot: 2, rank: 2 })
        ));
        let m = TensorValue::identity(2);
        assert!(matches!(m.alt2(0, 1), Err(Error::VarianceMismatch(_))));
        assert!(matches!(m.alt2(0, 3), Err(Error::SlotOutOfRange { .. })));
        assert!(TensorValue::from_vec(2, &[Up], vec![1.0]).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(TensorValue::zeros(3, &[Up, Down]).norm(), 0.0);
        assert_eq!(TensorValue::identity(4).norm(), 1.0);
        let t = TensorValue::from_vec(2, &[Up], vec![0.5, -2.0]).unwrap();
        assert_eq!(t.scale(-3.0).norm(), 6.0);
    }

    #[test]
    fn json_layout() {
        let t = TensorValue::identity(2);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(
            s,
            r#"{"variance":["up","down"],"n":2,"data":[1.0,0.0,0.0,1.0]}"#
        );
        let back: TensorValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
