//! Weights of `sl(n)`, the multiplicity-one tensor-product rule, the Weyl
//! dimension formula, and a numerical census of the eigenvalues of a complex
//! structure `j₀` on the irreducible pieces of torsion and curvature space.
//!
//! Weights are written in the fundamental basis `ω_1, …, ω_{n-1}`; `ω_0` and
//! `ω_n` are read as zero.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::algebra::{alpha_bar, wedge_id};
use crate::connection::{ricci, CURVATURE, TORSION};
use crate::error::{Error, Result};
use crate::samples::standard_complex_structure;
use crate::tensor::{advance, Slot, TensorValue};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightVector(pub Vec<i64>);

impl WeightVector {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n - 1])
    }

    /// `ω_k` in rank `n − 1`; zero for `k = 0` or `k = n`.
    pub fn fundamental(n: usize, k: usize) -> Self {
        let mut w = Self::zero(n);
        if (1..n).contains(&k) {
            w.0[k - 1] = 1;
        }
        w
    }

    pub fn is_dominant(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    fn require_dominant(&self) -> Result<()> {
        if self.is_dominant() {
            Ok(())
        } else {
            Err(Error::NotDominant(self.0.clone()))
        }
    }
}

impl fmt::Display for WeightVector {
    /// `V(1,0,1)` style.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "V({})", parts.join(","))
    }
}

impl Serialize for WeightVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// `ω_1, ω_2 − ω_1, …, ω_{n−1} − ω_{n−2}, −ω_{n−1}`.
pub fn weights_of_v(n: usize) -> Vec<WeightVector> {
    assert!(n >= 2);
    (1..=n)
        .map(|k| {
            let a = WeightVector::fundamental(n, k);
            let b = WeightVector::fundamental(n, k - 1);
            a.add(&b.neg())
        })
        .collect()
}

pub fn weights_of_dual(n: usize) -> Vec<WeightVector> {
    weights_of_v(n).iter().map(WeightVector::neg).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Factor {
    V,
    Dual,
}

/// Highest weights of `V(hw) ⊗ factor`: the dominant members of `hw + weights`.
pub fn decompose_with(hw: &WeightVector, factor: Factor, n: usize) -> Result<Vec<WeightVector>> {
    hw.require_dominant()?;
    let weights = match factor {
        Factor::V => weights_of_v(n),
        Factor::Dual => weights_of_dual(n),
    };
    Ok(weights
        .iter()
        .map(|w| hw.add(w))
        .filter(WeightVector::is_dominant)
        .collect())
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `Π_{i<j} (Σ_{k=i}^{j−1} (m_k + 1)) / (j − i)` in exact integer arithmetic.
pub fn weyl_dim(hw: &WeightVector) -> Result<u128> {
    hw.require_dominant()?;
    let m = &hw.0;
    let n = m.len() + 1;
    let (mut num, mut den) = (1u128, 1u128);
    // Positive roots e_i − e_j, 1 ≤ i < j ≤ n.
    for i in 1..n {
        for j in i + 1..=n {
            let top: u128 = (i..j).map(|k| m[k - 1] as u128 + 1).sum();
            num *= top;
            den *= (j - i) as u128;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
    }
    debug_assert_eq!(den, 1);
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Torsion,
    Curvature,
}

impl Space {
    pub fn variance(self) -> &'static [Slot] {
        match self {
            Space::Torsion => &TORSION,
            Space::Curvature => &CURVATURE,
        }
    }

    /// Dimension of `Λ²V*⊗V` or `Λ²V*⊗V*⊗V`.
    pub fn dim(self, n: usize) -> usize {
        let pairs = n * (n - 1) / 2;
        match self {
            Space::Torsion => pairs * n,
            Space::Curvature => pairs * n * n,
        }
    }
}

impl std::str::FromStr for Space {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "torsion" => Ok(Space::Torsion),
            "curvature" => Ok(Space::Curvature),
            _ => Err(format!(
                "unknown space {s:?} (expected torsion or curvature)"
            )),
        }
    }
}

/// The irreducible pieces of torsion and curvature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    /// Trace-free torsion.
    T1,
    /// Pure-trace torsion `ᾱ`.
    T2,
    /// Trace-free part of `Λ³V* ⊗ V`.
    Lambda3TraceFree,
    /// Trace part of `Λ³V* ⊗ V`.
    Lambda3Trace,
    Weyl,
    /// `[S²V* ∧ Id]`.
    SymWedge,
    /// `[Λ²V* ∧ Id]`.
    AltWedge,
}

impl Piece {
    pub fn pieces(space: Space) -> &'static [Piece] {
        match space {
            Space::Torsion => &[Piece::T1, Piece::T2],
            Space::Curvature => &[
                Piece::Lambda3TraceFree,
                Piece::Lambda3Trace,
                Piece::Weyl,
                Piece::SymWedge,
                Piece::AltWedge,
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Piece::T1 => "T1",
            Piece::T2 => "T2",
            Piece::Lambda3TraceFree => "Lambda3-tracefree",
            Piece::Lambda3Trace => "Lambda3-trace",
            Piece::Weyl => "Weyl",
            Piece::SymWedge => "[S2^Id]",
            Piece::AltWedge => "[L2^Id]",
        }
    }

    /// Bianchi-type pieces (those satisfying the first Bianchi identity).
    pub fn is_bianchi(self) -> bool {
        matches!(self, Piece::Weyl | Piece::SymWedge | Piece::AltWedge)
    }

    /// Highest weight predicted by the tensor-product rule, where it applies
    /// (`n ≥ 3` for torsion, `n ≥ 4` for curvature).
    pub fn highest_weight(self, n: usize) -> Option<WeightVector> {
        let w = |k| WeightVector::fundamental(n, k);
        let torsion_ok = n >= 3;
        let curv_ok = n >= 4;
        match self {
            Piece::T1 if torsion_ok => Some(w(n - 2).add(&w(1))),
            Piece::T2 if torsion_ok => Some(w(n - 1)),
            Piece::Lambda3TraceFree if curv_ok => Some(w(n - 3).add(&w(1))),
            Piece::Lambda3Trace if curv_ok => Some(w(n - 2)),
            Piece::Weyl if curv_ok => Some(w(1).add(&w(n - 2)).add(&w(n - 1))),
            Piece::SymWedge if curv_ok => Some(w(n - 1).add(&w(n - 1))),
            Piece::AltWedge if curv_ok => Some(w(n - 2)),
            _ => None,
        }
    }
}

/// Highest weights of the components via the tensor-product rule:
/// `Λ²V* = V(ω_{n−2})`, tensored with `V` (torsion) or with `V*` then `V`
/// (curvature).
pub fn component_weights(space: Space, n: usize) -> Result<Vec<WeightVector>> {
    let l2 = WeightVector::fundamental(n, n - 2);
    match space {
        Space::Torsion => decompose_with(&l2, Factor::V, n),
        Space::Curvature => {
            let mut out = Vec::new();
            for hw in decompose_with(&l2, Factor::Dual, n)? {
                out.extend(decompose_with(&hw, Factor::V, n)?);
            }
            Ok(out)
        }
    }
}

/// Projections of `x` (full `n^3` or `n^4` storage) onto every piece of
/// `space`, in [`Piece::pieces`] order.
pub fn project_all(space: Space, x: &TensorValue) -> Result<Vec<TensorValue>> {
    let n = x.n;
    match space {
        Space::Torsion => {
            let alt = x.alt2(1, 2)?;
            let trace = alt.contract(0, 2)?;
            let alpha: Vec<f64> = trace.data.iter().map(|v| v / (n as f64 - 1.0)).collect();
            let t2 = alpha_bar(&alpha);
            Ok(vec![alt.sub(&t2)?, t2])
        }
        Space::Curvature => {
            let alt = x.alt2(2, 3)?;
            let lambda3 = TensorValue::from_fn(n, &CURVATURE, |ix| {
                let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
                (alt.get(&[l, k, i, j]) + alt.get(&[l, i, j, k]) + alt.get(&[l, j, k, i])) / 3.0
            });
            let l3_trace = if n > 2 {
                let beta = lambda3.contract(0, 1)?;
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                TensorValue::from_fn(n, &CURVATURE, |ix| {
                    let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
                    (d(l, k) * beta.get(&[i, j])
                        + d(l, i) * beta.get(&[j, k])
                        + d(l, j) * beta.get(&[k, i]))
                        / (n as f64 - 2.0)
                })
            } else {
                TensorValue::zeros(n, &CURVATURE)
            };
            let bianchi = alt.sub(&lambda3)?;
            let r = ricci(&bianchi)?;
            let sym = wedge_id(&r.sym2(0, 1)?.scale(-1.0 / (n as f64 - 1.0)))?;
            let skew = wedge_id(&r.alt2(0, 1)?.scale(-1.0 / (n as f64 + 1.0)))?;
            let weyl = bianchi.sub(&sym)?.sub(&skew)?;
            Ok(vec![lambda3.sub(&l3_trace)?, l3_trace, weyl, sym, skew])
        }
    }
}

/// Dimension of every piece of `space`, as the trace of its projector.
pub fn piece_dims(space: Space, n: usize) -> Result<Vec<usize>> {
    let variance = space.variance();
    let size = n.pow(variance.len() as u32);
    let mut traces = vec![0.0f64; Piece::pieces(space).len()];
    for a in 0..size {
        let mut e = TensorValue::zeros(n, variance);
        e.data[a] = 1.0;
        for (t, p) in traces.iter_mut().zip(project_all(space, &e)?) {
            *t += p.data[a];
        }
    }
    Ok(traces.into_iter().map(|t| t.round() as usize).collect())
}

/// Eigenvalues `i·k` of `j₀` on one piece, with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrrepComponent {
    pub piece: Piece,
    pub label: &'static str,
    pub highest_weight: Option<WeightVector>,
    pub dim: usize,
    /// `k ↦ multiplicity` of the eigenvalue `i·k`.
    #[serde(serialize_with = "spectrum_as_list")]
    pub spectrum: BTreeMap<i32, usize>,
}

fn spectrum_as_list<S: Serializer>(
    m: &BTreeMap<i32, usize>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry {
        k: i32,
        multiplicity: usize,
    }
    let v: Vec<Entry> = m
        .iter()
        .map(|(&k, &multiplicity)| Entry { k, multiplicity })
        .collect();
    v.serialize(s)
}

impl IrrepComponent {
    pub fn has_eigenvalue(&self, k: i32) -> bool {
        self.spectrum.get(&k).copied().unwrap_or(0) > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub space: Space,
    pub n: usize,
    pub total_dim: usize,
    pub components: Vec<IrrepComponent>,
}

/// Largest dimension accepted by [`j0_census`] (dense eigen-bookkeeping).
pub const MAX_CENSUS_DIM: usize = 6;

/// Eigenvalue census of the standard `j₀` acting on each piece.
///
/// `j₀` is diagonalized over ℂ with eigenvectors `e_{2b} ∓ i e_{2b+1}` for
/// `±i`. Product basis tensors are eigenvectors of the induced action, and the
/// multiplicity of `i·k` on a piece is the trace of its projector over the
/// basis tensors of weight `k`.
pub fn j0_census(space: Space, n: usize) -> Result<Census> {
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if !(2..=MAX_CENSUS_DIM).contains(&n) {
        return Err(Error::DimensionMismatch {
            expected: MAX_CENSUS_DIM,
            got: n,
        });
    }
    let j0 = DMatrix::from_row_slice(n, n, &standard_complex_structure(n));
    let i = Complex64::i();
    // Columns of u are eigenvectors, eigenvalue sign in `lambda`.
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut lambda = vec![0i32; n];
    for b in (0..n).step_by(2) {
        u[(b, b)] = 1.0.into();
        u[(b + 1, b)] = -i;
        u[(b, b + 1)] = 1.0.into();
        u[(b + 1, b + 1)] = i;
        lambda[b] = 1;
        lambda[b + 1] = -1;
    }
    debug_assert!({
        let jc = j0.map(Complex64::from);
        (0..n).all(|c| {
            let col = u.column(c);
            (&jc * col - col * (i * lambda[c] as f64)).camax() < 1e-14
        })
    });
    let uinv = u.clone().try_inverse().expect("eigenbasis is invertible");

    let variance = space.variance();
    let rank = variance.len();
    let pieces = Piece::pieces(space);
    let mut spectra: Vec<BTreeMap<i32, f64>> = vec![BTreeMap::new(); pieces.len()];
    let mut idx = vec![0usize; rank];
    let size = n.pow(rank as u32);
    let factor = |slot: Slot, a: usize, c: usize| match slot {
        Slot::Up => u[(c, a)],
        Slot::Down => uinv[(a, c)],
    };
    let dual = |slot: Slot, a: usize, c: usize| match slot {
        Slot::Up => uinv[(a, c)],
        Slot::Down => u[(c, a)],
    };
    for _ in 0..size {
        let weight: i32 = variance
            .iter()
            .zip(&idx)
            .map(|(s, &a)| match s {
                Slot::Up => lambda[a],
                Slot::Down => -lambda[a],
            })
            .sum();
        let e: Vec<Complex64> = {
            let mut out = Vec::with_capacity(size);
            let mut c = vec![0usize; rank];
            for _ in 0..size {
                out.push(
                    variance
                        .iter()
                        .enumerate()
                        .map(|(s, &slot)| factor(slot, idx[s], c[s]))
                        .product(),
                );
                advance(&mut c, n);
            }
            out
        };
        let re = TensorValue::from_vec(n, variance, e.iter().map(|z| z.re).collect())?;
        let im = TensorValue::from_vec(n, variance, e.iter().map(|z| z.im).collect())?;
        let pre = project_all(space, &re)?;
        let pim = project_all(space, &im)?;
        for (p, (a, b)) in pre.iter().zip(&pim).enumerate() {
            let mut c = vec![0usize; rank];
            let mut tr = Complex64::from(0.0);
            for o in 0..size {
                let z = Complex64::new(a.data[o], 0.0) + i * b.data[o];
                if z.norm() > 0.0 {
                    let w: Complex64 = variance
                        .iter()
                        .enumerate()
                        .map(|(s, &slot)| dual(slot, idx[s], c[s]))
                        .product();
                    tr += w * z;
                }
                advance(&mut c, n);
            }
            *spectra[p].entry(weight).or_insert(0.0) += tr.re;
        }
        advance(&mut idx, n);
    }

    let components = pieces
        .iter()
        .zip(spectra)
        .map(|(&piece, spec)| {
            let spectrum: BTreeMap<i32, usize> = spec
                .into_iter()
                .map(|(k, m)| (k, m.round() as usize))
                .filter(|&(_, m)| m > 0)
                .collect();
            let dim = spectrum.values().sum();
            IrrepComponent {
                piece,
                label: piece.label(),
                highest_weight: piece.highest_weight(n),
                dim,
                spectrum,
            }
        })
        .collect();
    Ok(Census {
        space,
        n,
        total_dim: space.dim(n),
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(c: &[i64]) -> WeightVector {
        WeightVector(c.to_vec())
    }

    #[test]
    fn weights_small_cases() {
        assert_eq!(weights_of_v(2), vec![wv(&[1]), wv(&[-1])]);
        assert_eq!(
            weights_of_dual(3),
            vec![wv(&[-1, 0]), wv(&[1, -1]), wv(&[0, 1])]
        );
        for n in 2..8 {
            let total = weights_of_v(n)
                .iter()
                .fold(WeightVector::zero(n), |a, w| a.add(w));
            assert_eq!(total, WeightVector::zero(n));
        }
    }

    #[test]
    fn decompositions_at_n5() {
        let w = |k| WeightVector::fundamental(5, k);
        let l2 = w(3);
        assert_eq!(
            decompose_with(&l2, Factor::V, 5).unwrap(),
            vec![w(1).add(&w(3)), w(4)]
        );
        assert_eq!(
            decompose_with(&l2, Factor::Dual, 5).unwrap(),
            vec![w(2), w(3).add(&w(4))]
        );
        let b0 = w(3).add(&w(4));
        let mut got = decompose_with(&b0, Factor::V, 5).unwrap();
        let mut want = vec![w(1).add(&w(3)).add(&w(4)), w(4).add(&w(4)), w(3)];
        got.sort();
        want.sort();
        assert_eq!(got, want);
        assert!(matches!(
            decompose_with(&wv(&[0, -1, 0, 0]), Factor::V, 5),
            Err(Error::NotDominant(_))
        ));
    }

    #[test]
    fn dimensions() {
        for n in 2..9 {
            assert_eq!(
                weyl_dim(&WeightVector::fundamental(n, 1)).unwrap(),
                n as u128
            );
        }
        assert_eq!(weyl_dim(&wv(&[1, 1])).unwrap(), 8);
        assert_eq!(weyl_dim(&wv(&[1, 1, 1])).unwrap(), 64);
        assert_eq!(weyl_dim(&wv(&[0, 0, 2])).unwrap(), 10);
        assert!(weyl_dim(&wv(&[-1])).is_err());
    }

    #[test]
    fn component_dimensions_add_up() {
        for n in 4..=6 {
            for space in [Space::Torsion, Space::Curvature] {
                let total: u128 = component_weights(space, n)
                    .unwrap()
                    .iter()
                    .map(|w| weyl_dim(w).unwrap())
                    .sum();
                assert_eq!(total, space.dim(n) as u128, "{space:?} n = {n}");
            }
        }
    }

    #[test]
    fn torsion_census_n4() {
        let c = j0_census(Space::Torsion, 4).unwrap();
        let t1 = &c.components[0];
        let t2 = &c.components[1];
        assert_eq!((t1.dim, t2.dim), (20, 4));
        assert!(t1.has_eigenvalue(3) && t1.has_eigenvalue(-3));
        assert!(t2.spectrum.keys().all(|k| k.abs() == 1));
    }

    #[test]
    fn curvature_census_n4() {
        let c = j0_census(Space::Curvature, 4).unwrap();
        let dims: Vec<usize> = c.components.iter().map(|p| p.dim).collect();
        assert_eq!(dims, vec![10, 6, 64, 10, 6]);
        for comp in &c.components {
            for (&k, &m) in &comp.spectrum {
                assert_eq!(comp.spectrum.get(&-k), Some(&m));
            }
        }
        let weyl = &c.components[2];
        assert!(weyl.has_eigenvalue(4));
        for comp in &c.components[3..] {
            assert!(comp.spectrum.keys().all(|k| [0, 2, -2].contains(k)));
        }
    }
}
