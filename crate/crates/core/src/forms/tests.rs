use std::collections::BTreeMap;

use proptest::prelude::*;

use crate::expr::{parse_expr, JetCoord, MapEnv, ParseContext, RawExpr, Symbol};

use super::*;

fn parse(s: &str) -> Expr {
    parse_expr(s, &ParseContext::default()).unwrap()
}

fn dx() -> CovectorLabel {
    CovectorLabel::Coord(JetCoord::X)
}

fn du() -> CovectorLabel {
    CovectorLabel::Coord(JetCoord::U)
}

fn dp() -> CovectorLabel {
    CovectorLabel::Coord(JetCoord::P)
}

fn one_form(terms: &[(CovectorLabel, &str)]) -> OneForm {
    OneForm::from_terms(
        BasisContext::coordinate(),
        terms.iter().map(|(l, s)| (*l, parse(s))),
    )
    .unwrap()
}

#[test]
fn wedge_of_form_with_itself_vanishes() {
    let form = one_form(&[(dx(), "1"), (du(), "p")]);
    assert!(form.wedge(&form).unwrap().is_zero());
}

#[test]
fn wedge_antisymmetry() {
    let a = one_form(&[(dx(), "1")]);
    let b = one_form(&[(du(), "1")]);
    let ab = a.wedge(&b).unwrap();
    let ba = b.wedge(&a).unwrap();
    assert_eq!(ab.coefficient(dx(), du()), Expr::one());
    assert_eq!(ba.coefficient(dx(), du()), Expr::int(-1));
    assert!(ab.add(&ba).unwrap().is_zero());
}

#[test]
fn wedge_bilinearity_example() {
    let a = one_form(&[(dx(), "p")]);
    let b = one_form(&[(du(), "q")]);
    let w = a.wedge(&b).unwrap();
    assert_eq!(w.coefficient(dx(), du()), parse("p*q"));
}

#[test]
fn exterior_derivative_of_coordinate_covector_vanishes() {
    let form = one_form(&[(dx(), "1")]);
    assert!(exterior_derivative(&form).unwrap().is_zero());
}

#[test]
fn exterior_derivative_of_contact_form() {
    // d((du - p dx)/u) = (1/u) dx^dp - (p/u^2) dx^du
    let omega2 = one_form(&[(du(), "1/u"), (dx(), "-p/u")]);
    let d = exterior_derivative(&omega2).unwrap();
    assert_eq!(d.coefficient(dx(), dp()), parse("1/u"));
    assert_eq!(d.coefficient(dx(), du()), parse("-p/u^2"));
    assert_eq!(d.terms().count(), 2);
}

/// Finite-difference check of the same exterior derivative: for each
/// coordinate pair `(a, b)`, `d omega (e_a, e_b) ~ d_a omega_b - d_b
/// omega_a` by central differences.
#[test]
fn exterior_derivative_matches_finite_differences() {
    let omega2 = one_form(&[(du(), "1/u"), (dx(), "-p/u")]);
    let d = exterior_derivative(&omega2).unwrap();
    let coords = [JetCoord::X, JetCoord::U, JetCoord::P];
    let mut state = 0xABCDEFu64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        0.6 + ((state >> 11) as f64 / (1u64 << 53) as f64) * 1.2
    };
    let h = 1e-5;
    for _ in 0..10 {
        let point: BTreeMap<Symbol, f64> = JetCoord::ALL
            .iter()
            .map(|c| (Symbol::jet(*c), next()))
            .collect();
        for a in coords {
            for b in coords {
                if a as usize >= b as usize {
                    continue;
                }
                let eval_at = |c: JetCoord, delta: f64, which: JetCoord| -> f64 {
                    let mut env = point.clone();
                    *env.get_mut(&Symbol::jet(c)).unwrap() += delta;
                    omega2
                        .coefficient(CovectorLabel::Coord(which))
                        .evaluate(&MapEnv(env))
                        .unwrap()
                };
                let fd = (eval_at(a, h, b) - eval_at(a, -h, b)) / (2.0 * h)
                    - (eval_at(b, h, a) - eval_at(b, -h, a)) / (2.0 * h);
                let exact = d
                    .coefficient(CovectorLabel::Coord(a), CovectorLabel::Coord(b))
                    .evaluate(&MapEnv(point.clone()))
                    .unwrap();
                let rel = (fd - exact).abs() / exact.abs().max(1.0);
                assert!(rel < 1e-6, "pair ({a:?},{b:?}): rel {rel}");
            }
        }
    }
}

#[test]
fn derivative_requires_coordinate_basis() {
    let frame = OneForm::from_terms(
        BasisContext::frame(),
        [(CovectorLabel::Theta(1), Expr::one())],
    )
    .unwrap();
    assert!(matches!(
        exterior_derivative(&frame),
        Err(Error::NeedsCoordinateBasis)
    ));
}

#[test]
fn mismatched_contexts_are_rejected() {
    let coord = one_form(&[(dx(), "1")]);
    let frame = OneForm::from_terms(
        BasisContext::frame(),
        [(CovectorLabel::Theta(1), Expr::one())],
    )
    .unwrap();
    assert!(matches!(coord.wedge(&frame), Err(Error::BasisMismatch)));
}

#[test]
fn solve_identity_returns_rhs() {
    let a = ExprMatrix::identity(3);
    let b = vec![parse("u"), parse("p+q"), parse("1/u")];
    assert_eq!(solve_linear(&a, &b).unwrap(), b);
}

#[test]
fn solve_lower_triangular_system() {
    // [[u, 0], [p, u]] x = [1, 0]  =>  x = (1/u, -p/u^2)
    let a = ExprMatrix::from_rows(vec![
        vec![parse("u"), Expr::zero()],
        vec![parse("p"), parse("u")],
    ]);
    let x = solve_linear(&a, &[Expr::one(), Expr::zero()]).unwrap();
    assert_eq!(x[0], parse("1/u"));
    assert_eq!(x[1], parse("-p/u^2"));
}

#[test]
fn singular_systems_report_the_stage() {
    let a = ExprMatrix::from_rows(vec![
        vec![parse("u"), parse("u")],
        vec![parse("u"), parse("u")],
    ]);
    match solve_linear(&a, &[Expr::one(), Expr::zero()]) {
        Err(Error::SingularSystem { stage, .. }) => assert_eq!(stage, 1),
        other => panic!("expected singular system, got {other:?}"),
    }
}

#[test]
fn inverse_round_trip() {
    let a = ExprMatrix::from_rows(vec![
        vec![parse("u"), Expr::zero(), Expr::zero()],
        vec![parse("p"), parse("u^2"), Expr::zero()],
        vec![parse("q"), parse("p"), parse("a1")],
    ]);
    let inv = a.inverse().unwrap();
    assert_eq!(a.mul(&inv), ExprMatrix::identity(3));
    assert_eq!(inv.mul(&a), ExprMatrix::identity(3));
}

#[test]
fn determinant_of_triangular_matrix() {
    let a = ExprMatrix::from_rows(vec![
        vec![parse("u"), Expr::zero()],
        vec![parse("p"), parse("a3")],
    ]);
    assert_eq!(a.det().unwrap(), parse("u*a3"));
}

// ---- randomized corpora ----

fn scalar_strategy() -> impl Strategy<Value = Expr> {
    let leaves = prop_oneof![
        (-3i64..=3).prop_map(RawExpr::int),
        prop_oneof![
            Just(Symbol::jet(JetCoord::X)),
            Just(Symbol::jet(JetCoord::U)),
            Just(Symbol::jet(JetCoord::P)),
            Just(Symbol::jet(JetCoord::S)),
            Just(Symbol::group(2)),
            Just(Symbol::group(10)),
            Just(Symbol::coeff(3, 0)),
            Just(Symbol::coeff(4, 1)),
            Just(Symbol::constant("lam")),
        ]
        .prop_map(RawExpr::Symbol),
    ];
    leaves
        .prop_recursive(3, 16, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(RawExpr::Add),
                prop::collection::vec(inner.clone(), 2..3).prop_map(RawExpr::Mul),
                (inner.clone(), prop_oneof![
                    Just(Symbol::jet(JetCoord::U)),
                    Just(Symbol::group(10)),
                ])
                    .prop_map(|(a, s)| RawExpr::Div(
                        Box::new(a),
                        Box::new(RawExpr::Symbol(s))
                    )),
            ]
        })
        .prop_filter_map("canonicalizable", |raw| raw.canonicalize().ok())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, .. ProptestConfig::default() })]

    /// d o d = 0 on random 0-forms over the full symbol vocabulary.
    #[test]
    fn d_squared_vanishes(e in scalar_strategy()) {
        let df = differential(&e);
        let ddf = exterior_derivative(&df).unwrap();
        prop_assert!(ddf.is_zero(), "d(d({e})) = {ddf:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    /// Leibniz rule: d(e * omega) = de ^ omega + e * d(omega).
    #[test]
    fn leibniz_rule(e in scalar_strategy(), c in scalar_strategy()) {
        let omega = one_form_from(&c);
        let lhs = exterior_derivative(&omega.scale(&e)).unwrap();
        let de_wedge = differential(&e).wedge(&omega).unwrap();
        let rhs = de_wedge.add(&exterior_derivative(&omega).unwrap().scale(&e)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Wedge bilinearity over random scalar multiples.
    #[test]
    fn wedge_bilinear(e in scalar_strategy(), f in scalar_strategy()) {
        let a = one_form_from(&e);
        let b = one_form_from(&f);
        let sum = a.add(&b).unwrap();
        let lhs = sum.wedge(&b).unwrap();
        let rhs = a.wedge(&b).unwrap().add(&b.wedge(&b).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        let scaled = a.scale(&f).wedge(&b).unwrap();
        let direct = a.wedge(&b).unwrap().scale(&f);
        prop_assert_eq!(scaled, direct);
    }
}

/// A small deterministic one-form seeded by a scalar, exercising both
/// jet and parameter covectors.
fn one_form_from(e: &Expr) -> OneForm {
    let mut form = OneForm::zero(BasisContext::coordinate());
    form.add_term(dx(), e.clone()).unwrap();
    form.add_term(du(), e.add(&Expr::jet(JetCoord::P))).unwrap();
    form.add_term(CovectorLabel::Param(2), Expr::jet(JetCoord::U)).unwrap();
    form
}
