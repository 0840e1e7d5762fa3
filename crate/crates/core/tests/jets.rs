use projflat::{parse, Expr};
use proptest::prelude::*;

const EXPRS: &[&str] = &[
    "sin(x1*x2) + exp(x2)/(1 + x1^2)",
    "sqrt(2 + x1^2 + x2^2) * cos(x1 - 3*x2)",
    "ln(3 + x1*x2)^2 - x2^(-0.5)",
    "x1^2.5 * x2 + 1/(x1 + x2)",
    "exp(-(x1^2 + x2^2)/2) * (x1 - x2)^3",
];

const POINT: [f64; 2] = [0.7, 1.3];

fn eval(e: &Expr, p: &[f64]) -> f64 {
    e.eval(p).unwrap()
}

fn shifted(p: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[i] += h;
    q
}

#[test]
fn frozen_third_order_jet_of_a_monomial() {
    // f = x1³ x2 at (2, 3), derivatives by hand.
    let f = parse("x1^3*x2", 2).unwrap();
    let j = f.eval_jet(&[2.0, 3.0], 3).unwrap();
    assert_eq!(j.value, 24.0);
    assert_eq!(j.d1, vec![36.0, 8.0]);
    assert_eq!(j.d2(0, 0), 36.0);
    assert_eq!(j.d2(0, 1), 12.0);
    assert_eq!(j.d2(1, 1), 0.0);
    assert_eq!(j.d3(0, 0, 0), 18.0);
    assert_eq!(j.d3(0, 0, 1), 12.0);
    assert_eq!(j.d3(1, 0, 0), 12.0);
    assert_eq!(j.d3(0, 1, 1), 0.0);
}

#[test]
fn first_derivatives_match_central_differences() {
    let h = 1e-5;
    for src in EXPRS {
        let e = parse(src, 2).unwrap();
        let jet = e.eval_jet(&POINT, 1).unwrap();
        for i in 0..2 {
            let fd =
                (eval(&e, &shifted(&POINT, i, h)) - eval(&e, &shifted(&POINT, i, -h))) / (2.0 * h);
            assert!(
                (jet.d1[i] - fd).abs() < 1e-7 * (1.0 + fd.abs()),
                "{src}: d{i} {} vs {fd}",
                jet.d1[i]
            );
        }
    }
}

#[test]
fn higher_derivatives_match_differences_of_lower_jets() {
    let h = 1e-5;
    for src in EXPRS {
        let e = parse(src, 2).unwrap();
        let jet = e.eval_jet(&POINT, 3).unwrap();
        for k in 0..2 {
            let plus = e.eval_jet(&shifted(&POINT, k, h), 2).unwrap();
            let minus = e.eval_jet(&shifted(&POINT, k, -h), 2).unwrap();
            for i in 0..2 {
                let fd2 = (plus.d1[i] - minus.d1[i]) / (2.0 * h);
                let d2 = jet.d2(i, k);
                assert!(
                    (d2 - fd2).abs() < 1e-6 * (1.0 + fd2.abs()),
                    "{src}: d2[{i}{k}]"
                );
                for j in 0..2 {
                    let fd3 = (plus.d2(i, j) - minus.d2(i, j)) / (2.0 * h);
                    let d3 = jet.d3(i, j, k);
                    assert!(
                        (d3 - fd3).abs() < 1e-5 * (1.0 + fd3.abs()),
                        "{src}: d3[{i}{j}{k}]"
                    );
                }
            }
        }
    }
}

#[test]
fn derivative_tables_are_symmetric() {
    let e = parse(EXPRS[1], 2).unwrap();
    let j = e.eval_jet(&POINT, 3).unwrap();
    assert_eq!(j.d2(0, 1), j.d2(1, 0));
    for (a, b, c) in [(0, 0, 1), (0, 1, 1)] {
        let v = j.d3(a, b, c);
        assert_eq!(v, j.d3(b, c, a));
        assert_eq!(v, j.d3(c, a, b));
        assert_eq!(v, j.d3(b, a, c));
    }
}

#[test]
fn evaluation_errors_outside_the_function_domain() {
    for src in ["ln(x1 - 5)", "sqrt(-1 - x2^2)", "x1^0.5", "1/(x1 - x1)"] {
        let e = parse(src, 2).unwrap();
        assert!(e.eval(&[-0.5, 0.5]).is_err(), "{src}");
    }
}

#[test]
fn parse_errors() {
    for (src, n) in [
        ("x3", 2),
        ("sin x1", 1),
        ("x1^x2", 2),
        ("foo(x1)", 1),
        ("(x1", 1),
        ("1 +", 1),
        ("", 1),
    ] {
        assert!(parse(src, n).is_err(), "{src:?}");
    }
}

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0.1f64..5.0).prop_map(|c| format!("{c:.3}")),
        (1usize..=3).prop_map(|i| format!("x{i}")),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                inner.clone(),
                prop::sample::select(vec!["+", "-", "*"])
            )
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + ({b})^2)")),
            (inner.clone(), prop::sample::select(vec!["sin", "cos"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
            inner.clone().prop_map(|a| format!("exp(({a})/8)")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("ln(1 + ({a})^2)")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn display_round_trips(src in expr_source(), p in prop::array::uniform3(-1.0f64..1.0)) {
        let e = parse(&src, 3).unwrap();
        let again = parse(&e.to_string(), 3).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(e.eval(&p).ok(), again.eval(&p).ok());
    }

    #[test]
    fn jets_are_linear(a in expr_source(), b in expr_source(), c in -3.0f64..3.0,
                       p in prop::array::uniform3(-1.0f64..1.0)) {
        let ea = parse(&a, 3).unwrap();
        let eb = parse(&b, 3).unwrap();
        let combined = ea.clone() + Expr::num(c) * eb.clone();
        let (Ok(ja), Ok(jb), Ok(jc)) = (ea.eval_jet(&p, 3), eb.eval_jet(&p, 3), combined.eval_jet(&p, 3)) else {
            return Ok(());
        };
        prop_assert!(close(jc.value, ja.value + c * jb.value));
        for i in 0..3 {
            prop_assert!(close(jc.d1[i], ja.d1[i] + c * jb.d1[i]));
            for j in 0..3 {
                prop_assert!(close(jc.d2(i, j), ja.d2(i, j) + c * jb.d2(i, j)));
                for k in 0..3 {
                    prop_assert!(close(jc.d3(i, j, k), ja.d3(i, j, k) + c * jb.d3(i, j, k)));
                }
            }
        }
    }

    #[test]
    fn jets_obey_the_product_rule(a in expr_source(), b in expr_source(),
                                  p in prop::array::uniform3(-1.0f64..1.0)) {
        let ea = parse(&a, 3).unwrap();
        let eb = parse(&b, 3).unwrap();
        let prod = ea.clone() * eb.clone();
        let (Ok(ja), Ok(jb), Ok(jp)) = (ea.eval_jet(&p, 2), eb.eval_jet(&p, 2), prod.eval_jet(&p, 2)) else {
            return Ok(());
        };
        let tol = |x: f64| 1e-10 * (1.0 + x.abs());
        for i in 0..3 {
            let want = ja.d1[i] * jb.value + ja.value * jb.d1[i];
            prop_assert!((jp.d1[i] - want).abs() <= tol(want));
            for j in 0..3 {
                let want = ja.d2(i, j) * jb.value + ja.d1[i] * jb.d1[j] + ja.d1[j] * jb.d1[i]
                    + ja.value * jb.d2(i, j);
                prop_assert!((jp.d2(i, j) - want).abs() <= tol(want));
            }
        }
    }
}
