//! Seeded random inputs: sample points, polynomial fields, connections and
//! complex structures. Everything is driven by a `ChaCha8Rng` so runs are
//! reproducible from a single `u64` seed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connection::ConnectionSpec;
use crate::expr::Expr;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in the box `[lo, hi]^n`.
pub fn points(rng: &mut SampleRng, n: usize, count: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect()
}

/// A polynomial of total degree at most `degree` with `terms` monomials and
/// coefficients uniform in `[-1, 1]`.
pub fn polynomial(rng: &mut SampleRng, n: usize, degree: usize, terms: usize) -> Expr {
    let mut acc: Option<Expr> = None;
    for _ in 0..terms {
        let mut term = Expr::num(round_coeff(rng.gen_range(-1.0..=1.0)));
        let d = rng.gen_range(0..=degree);
        for _ in 0..d {
            term = term * Expr::var(rng.gen_range(0..n));
        }
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc.unwrap_or(Expr::num(0.0))
}

// Short decimal coefficients keep printed expressions readable.
fn round_coeff(c: f64) -> f64 {
    (c * 1000.0).round() / 1000.0
}

/// Symmetric (torsion-free) polynomial Christoffel symbols.
pub fn torsion_free_connection(rng: &mut SampleRng, n: usize, degree: usize) -> ConnectionSpec {
    let mut table = vec![Expr::num(0.0); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let e = polynomial(rng, n, degree, 3);
                table[(k * n + i) * n + j] = e.clone();
                table[(k * n + j) * n + i] = e;
            }
        }
    }
    ConnectionSpec::christoffel(n, table).expect("well-formed table")
}

/// Polynomial Christoffel symbols with no symmetry imposed.
pub fn general_connection(rng: &mut SampleRng, n: usize, degree: usize) -> ConnectionSpec {
    let table = (0..n * n * n)
        .map(|_| polynomial(rng, n, degree, 3))
        .collect();
    ConnectionSpec::christoffel(n, table).expect("well-formed table")
}

pub fn one_form(rng: &mut SampleRng, n: usize, degree: usize) -> Vec<Expr> {
    (0..n).map(|_| polynomial(rng, n, degree, 3)).collect()
}

/// Block-diagonal `j₀` made of 2×2 rotations by a quarter turn, row-major.
pub fn standard_complex_structure(n: usize) -> Vec<f64> {
    assert!(
        n.is_multiple_of(2),
        "complex structures need even dimension"
    );
    let mut j = vec![0.0; n * n];
    for b in (0..n).step_by(2) {
        // j e_b = e_{b+1}, j e_{b+1} = -e_b
        j[(b + 1) * n + b] = 1.0;
        j[b * n + b + 1] = -1.0;
    }
    j
}

/// Largest condition number accepted for the conjugating matrix.
pub const MAX_CONJUGATOR_CONDITION: f64 = 1e6;

/// `j = g j₀ g⁻¹` with `g` uniform in `[-1, 1]^{n×n}`, redrawn until its
/// condition number is at most [`MAX_CONJUGATOR_CONDITION`].
pub fn complex_structure(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    complex_structure_within(rng, n, MAX_CONJUGATOR_CONDITION)
}

/// As [`complex_structure`] with a caller-chosen bound on `cond(g)`.
pub fn complex_structure_within(rng: &mut SampleRng, n: usize, max_condition: f64) -> Vec<f64> {
    let j0 = DMatrix::from_row_slice(n, n, &standard_complex_structure(n));
    loop {
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
        let sv = g.clone().singular_values();
        let smin = sv.min();
        if smin <= 0.0 || sv.max() / smin > max_condition {
            continue;
        }
        let ginv = g.clone().try_inverse().expect("well-conditioned");
        let j = &g * &j0 * ginv;
        return j.transpose().as_slice().to_vec();
    }
}

/// Twistor points for Nijenhuis sampling keep `j` a bounded distance from
/// orthogonal structures: `‖j‖` grows like `cond(g)²` and the finite
/// difference error with it.
pub const MAX_TWISTOR_CONDITION: f64 = 10.0;

/// `count` twistor points with `x` uniform in `[lo, hi]ⁿ`.
pub fn twistor_points(
    rng: &mut SampleRng,
    n: usize,
    count: usize,
    lo: f64,
    hi: f64,
) -> Vec<crate::twistor::TwistorPoint> {
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
            let j = complex_structure_within(rng, n, MAX_TWISTOR_CONDITION);
            crate::twistor::TwistorPoint::new(x, j).expect("sampled j is a complex structure")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_structures_square_to_minus_one() {
        let mut r = rng(7);
        for n in [2, 4, 6] {
            let j = DMatrix::from_row_slice(n, n, &complex_structure(&mut r, n));
            let sq = &j * &j + DMatrix::identity(n, n);
            assert!(sq.amax() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = points(&mut rng(3), 3, 4, -1.0, 1.0);
        let b = points(&mut rng(3), 3, 4, -1.0, 1.0);
        assert_eq!(a, b);
        let e1 = polynomial(&mut rng(5), 3, 2, 3);
        let e2 = polynomial(&mut rng(5), 3, 2, 3);
        assert_eq!(e1, e2);
    }

    #[test]
    fn torsion_free_connections_are_symmetric() {
        let spec = torsion_free_connection(&mut rng(1), 3, 2);
        let cv = spec.evaluate(&[0.2, 0.1, -0.4], 0).unwrap();
        assert_eq!(crate::connection::torsion(&cv).norm(), 0.0);
    }
}
