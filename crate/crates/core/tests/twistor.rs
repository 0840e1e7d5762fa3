use nalgebra::{DMatrix, DVector};
use projflat::chart::parse_chart;
use projflat::twistor::{
    adapted_frame, nijenhuis, nijenhuis_report, nijenhuis_with, twistor_acs, Integrability,
    Stencil, TwistorField, TwistorPoint, DEFAULT_H,
};
use projflat::{samples, ConnectionSpec, Error};
use proptest::prelude::*;

fn data(name: &str) -> ConnectionSpec {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_chart(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .spec
}

fn one_point(seed: u64, n: usize) -> TwistorPoint {
    samples::twistor_points(&mut samples::rng(seed), n, 1, -0.5, 0.5).remove(0)
}

#[test]
fn central_differences_converge_at_second_order() {
    let mut rng = samples::rng(41);
    let spec = samples::torsion_free_connection(&mut rng, 2, 3);
    let tp = one_point(42, 2);
    let coarse = nijenhuis_with(&spec, &tp, 1e-2, Stencil::Central).unwrap();
    let fine = nijenhuis_with(&spec, &tp, 1e-3, Stencil::Central).unwrap();
    let ratio = coarse / fine;
    assert!(
        (50.0..200.0).contains(&ratio),
        "ratio {ratio} ({coarse:e} / {fine:e})"
    );
    let extrapolated = nijenhuis_with(&spec, &tp, 1e-3, Stencil::Richardson).unwrap();
    assert!(extrapolated < fine / 100.0, "{extrapolated:e} vs {fine:e}");
}

#[test]
fn flat_residual_is_at_rounding_level_for_both_steps() {
    let spec = ConnectionSpec::flat(4);
    let tp = one_point(43, 4);
    for h in [1e-2, 1e-3] {
        assert!(nijenhuis_with(&spec, &tp, h, Stencil::Central).unwrap() < 1e-8);
    }
}

#[test]
fn nijenhuis_is_antisymmetric_and_tensorial() {
    let spec = data("witness4.chart");
    let tp = one_point(44, 4);
    let field = TwistorField::new(&spec, &tp).unwrap();
    let dim = field.chart.dim();
    let mut rng = samples::rng(45);
    let vecs = samples::points(&mut rng, dim, 3, -1.0, 1.0);
    let (u, v, lin) = (&vecs[0], &vecs[1], &vecs[2]);
    let nuv = field.nijenhuis_constant(u, v, DEFAULT_H).unwrap();
    let nvu = field.nijenhuis_constant(v, u, DEFAULT_H).unwrap();
    assert!((&nuv + &nvu).amax() < 1e-10);
    assert!(nuv.amax() > 1e-2);

    // f = 1.5 + lin·(y − y₀), so f(y₀) = 1.5
    let origin = field.chart.origin();
    let f = |y: &[f64]| {
        1.5 + y
            .iter()
            .zip(&origin)
            .zip(lin)
            .map(|((a, b), c)| (a - b) * c)
            .sum::<f64>()
    };
    let uf = DVector::from_column_slice(u);
    let vf = DVector::from_column_slice(v);
    let fu = |y: &[f64]| &uf * f(y);
    let cv = |_: &[f64]| vf.clone();
    let n_fu = field
        .nijenhuis_fields(&fu, &cv, &origin, DEFAULT_H)
        .unwrap();
    assert!((n_fu - nuv * 1.5).amax() < 1e-5);
}

#[test]
fn acs_depends_only_on_the_value_of_gamma() {
    let mut rng = samples::rng(46);
    let a = samples::torsion_free_connection(&mut rng, 4, 2);
    let tp = one_point(47, 4);
    let cv = a.evaluate(&tp.x, 1).unwrap();
    let mut other = cv.clone();
    other
        .dgamma
        .as_mut()
        .unwrap()
        .iter_mut()
        .for_each(|d| *d += 1.0);
    assert_eq!(
        twistor_acs(&cv, &tp).unwrap(),
        twistor_acs(&other, &tp).unwrap()
    );
}

#[test]
fn witness_is_obstructed_and_verdicts_follow_thresholds() {
    let spec = data("witness4.chart");
    let tp = one_point(48, 4);
    let report = nijenhuis_report(&spec, &tp, DEFAULT_H).unwrap();
    assert_eq!(report.verdict, Integrability::Obstruction, "{report:?}");
    assert_eq!(
        Integrability::from_residual(1e-3),
        Integrability::Inconclusive
    );
    assert_eq!(Integrability::from_residual(0.0), Integrability::Integrable);
}

#[test]
fn torsion_and_odd_dimension_are_rejected() {
    let mut rng = samples::rng(49);
    let twisted = samples::general_connection(&mut rng, 2, 1);
    let tp = one_point(50, 2);
    assert!(matches!(
        nijenhuis(&twisted, &tp, DEFAULT_H),
        Err(Error::HasTorsion { .. })
    ));
    let odd = TwistorPoint::new(vec![0.0; 3], vec![0.0; 9]);
    assert!(matches!(odd, Err(Error::OddDimension(3))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn acs_squares_to_minus_identity(seed in any::<u64>(), half in 1usize..=2) {
        let n = 2 * half;
        let mut rng = samples::rng(seed);
        let spec = samples::general_connection(&mut rng, n, 2);
        let tp = TwistorPoint::new(
            samples::points(&mut rng, n, 1, -1.0, 1.0).remove(0),
            samples::complex_structure_within(&mut rng, n, 100.0),
        ).unwrap();
        let j = twistor_acs(&spec.evaluate(&tp.x, 0).unwrap(), &tp).unwrap();
        let dim = j.nrows();
        let scale = 1.0 + j.amax();
        prop_assert!((&j * &j + DMatrix::identity(dim, dim)).amax() < 1e-10 * scale * scale);
    }

    #[test]
    fn adapted_frame_conjugates_to_the_standard_structure(seed in any::<u64>(), half in 1usize..=3) {
        let n = 2 * half;
        let mut rng = samples::rng(seed);
        let j = DMatrix::from_row_slice(n, n, &samples::complex_structure(&mut rng, n));
        let g = adapted_frame(&j);
        let j0 = DMatrix::from_row_slice(n, n, &samples::standard_complex_structure(n));
        let back = g.clone().try_inverse().unwrap() * &j * &g;
        prop_assert!((back - j0).amax() < 1e-9 * (1.0 + j.amax()));
        // cond(g)² = (1 + σ_max(j)²) / (1 + σ_min(j)²)
        let sj = j.clone().singular_values();
        let sv = g.singular_values();
        prop_assert!(sv.max() / sv.min() <= (1.0 + sj.max().powi(2)).sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn random_surfaces_are_integrable(seed in any::<u64>()) {
        let mut rng = samples::rng(seed);
        let spec = samples::torsion_free_connection(&mut rng, 2, 2);
        let tp = samples::twistor_points(&mut rng, 2, 1, -0.5, 0.5).remove(0);
        prop_assert!(nijenhuis(&spec, &tp, DEFAULT_H).unwrap() <= 1e-5);
    }
}
