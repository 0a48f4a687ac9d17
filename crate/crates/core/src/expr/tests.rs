use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use crate::error::Error;

use super::*;

fn parse(s: &str) -> Expr {
    parse_expr(s, &ParseContext::default()).unwrap()
}

fn env(bindings: &[(Symbol, f64)]) -> MapEnv {
    MapEnv(bindings.iter().cloned().collect())
}

#[test]
fn fifth_root_power_collapses() {
    let u = Expr::jet(JetCoord::U);
    let root = u.pow(exp(1, 5)).unwrap();
    assert_eq!(root.pow(exp(5, 1)).unwrap(), u);
}

#[test]
fn cancellation_to_zero() {
    let p = Expr::jet(JetCoord::P);
    assert!(p.sub(&p).is_zero());
}

#[test]
fn content_cancellation() {
    let u = Expr::jet(JetCoord::U);
    let inv = Expr::one().div(&u).unwrap();
    assert!(inv.mul(&u).is_one());
}

#[test]
fn division_by_zero_is_reported() {
    let p = Expr::jet(JetCoord::P);
    let zero = p.sub(&p);
    assert_eq!(Expr::one().div(&zero), Err(Error::DivisionByZero));
}

#[test]
fn linear_partial() {
    let f4 = Expr::coeff_fn(4, 0);
    let s = Expr::jet(JetCoord::S);
    let prod = f4.mul(&s);
    assert_eq!(prod.partial_derivative(&Symbol::jet(JetCoord::S)), f4);
}

#[test]
fn power_rule_partial() {
    let u = Expr::jet(JetCoord::U);
    let e = u.pow(exp(4, 5)).unwrap();
    let d = e.partial_derivative(&Symbol::jet(JetCoord::U));
    let expected = Expr::rational(4, 5)
        .mul(&u.pow(exp(-1, 5)).unwrap());
    assert_eq!(d, expected);
}

/// Independent finite-difference oracle for a single partial.
fn central_diff(
    e: &Expr,
    sym: &Symbol,
    base: &BTreeMap<Symbol, f64>,
    h: f64,
) -> f64 {
    let mut hi = base.clone();
    let mut lo = base.clone();
    *hi.get_mut(sym).unwrap() += h;
    *lo.get_mut(sym).unwrap() -= h;
    let fh = e.evaluate(&MapEnv(hi)).unwrap();
    let fl = e.evaluate(&MapEnv(lo)).unwrap();
    (fh - fl) / (2.0 * h)
}

#[test]
fn i1_partial_matches_finite_differences() {
    // I1 = -(f4*u + 3p)/u^(4/5); dI1/dp = -3*u^(-4/5).
    let i1 = parse("-(f4*u + 3*p)/u^(4/5)");
    let d = i1.partial_derivative(&Symbol::jet(JetCoord::P));
    assert_eq!(d, parse("-3/u^(4/5)"));

    let mut rng_state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 1.5 + 0.5
    };
    for _ in 0..10 {
        let point: BTreeMap<Symbol, f64> = [
            (Symbol::jet(JetCoord::U), next()),
            (Symbol::jet(JetCoord::P), next() * 2.0 - 1.5),
            (Symbol::coeff(4, 0), next() * 2.0 - 1.5),
        ]
        .into_iter()
        .collect();
        let exact = d.evaluate(&MapEnv(point.clone())).unwrap();
        for h in [1e-4, 1e-5] {
            let approx = central_diff(&i1, &Symbol::jet(JetCoord::P), &point, h);
            let rel = (approx - exact).abs() / exact.abs().max(1.0);
            assert!(rel < 1e-6, "h={h} rel={rel}");
        }
    }
}

#[test]
fn simultaneous_substitution() {
    // a1 -> u^(-1/5) in a15/a1 gives a15*u^(1/5).
    let e = parse("a15/a1");
    let mut bindings = BTreeMap::new();
    bindings.insert(
        Symbol::group(1),
        Expr::jet(JetCoord::U).pow(exp(-1, 5)).unwrap(),
    );
    let out = e.substitute(&bindings).unwrap();
    assert_eq!(out, parse("a15*u^(1/5)"));
}

#[test]
fn loop_one_torsion_normalizes_to_one() {
    // Direct problem: T^6_17 = a15/a1 with a1 = a15 = u^(-1/5).
    let direct = parse("a15/a1");
    let mut b = BTreeMap::new();
    let fifth = Expr::jet(JetCoord::U).pow(exp(-1, 5)).unwrap();
    b.insert(Symbol::group(1), fifth.clone());
    b.insert(Symbol::group(15), fifth);
    assert!(direct.substitute(&b).unwrap().is_one());

    // Gauge problem: T^6_17 = a15*u/a1 with a1 = 1, a15 = 1/u.
    let gauge = parse("a15*u/a1");
    let mut b = BTreeMap::new();
    b.insert(Symbol::group(1), Expr::one());
    b.insert(
        Symbol::group(15),
        Expr::one().div(&Expr::jet(JetCoord::U)).unwrap(),
    );
    assert!(gauge.substitute(&b).unwrap().is_one());
}

#[test]
fn substitution_rejects_bound_symbols_in_values() {
    let e = parse("a1*a2");
    let mut b = BTreeMap::new();
    b.insert(Symbol::group(1), Expr::group(2));
    b.insert(Symbol::group(2), Expr::jet(JetCoord::U));
    assert!(matches!(
        e.substitute(&b),
        Err(Error::InvalidSubstitution(_))
    ));
}

#[test]
fn substitution_creating_pole_is_reported() {
    let e = parse("1/(u - p)");
    let mut b = BTreeMap::new();
    b.insert(Symbol::jet(JetCoord::U), Expr::jet(JetCoord::P));
    assert_eq!(e.substitute(&b), Err(Error::DivisionByZero));
}

#[test]
fn odd_real_roots_in_evaluation() {
    let root = Expr::jet(JetCoord::U).pow(exp(1, 5)).unwrap();
    let at = |v: f64| root.evaluate(&env(&[(Symbol::jet(JetCoord::U), v)])).unwrap();
    assert_eq!(at(32.0), 2.0);
    assert_eq!(at(-32.0), -2.0);
}

#[test]
fn i1_value_at_example_point() {
    // I1 at f4 = 0, u = 1, p = 2 evaluates to -6.
    let i1 = parse("-(f4*u + 3*p)/u^(4/5)");
    let value = i1
        .evaluate(&env(&[
            (Symbol::coeff(4, 0), 0.0),
            (Symbol::jet(JetCoord::U), 1.0),
            (Symbol::jet(JetCoord::P), 2.0),
        ]))
        .unwrap();
    assert!((value + 6.0).abs() < 1e-12);
}

#[test]
fn missing_binding_and_pole_errors() {
    let e = parse("p/u");
    assert!(matches!(
        e.evaluate(&env(&[(Symbol::jet(JetCoord::P), 1.0)])),
        Err(Error::UnboundSymbol(_))
    ));
    assert_eq!(
        e.evaluate(&env(&[
            (Symbol::jet(JetCoord::P), 1.0),
            (Symbol::jet(JetCoord::U), 0.0)
        ])),
        Err(Error::PoleAtPoint)
    );
}

// ---- randomized corpora ----

#[derive(Clone, Debug)]
struct SymbolPool;

fn pool_symbols() -> Vec<Symbol> {
    vec![
        Symbol::jet(JetCoord::U),
        Symbol::jet(JetCoord::P),
        Symbol::jet(JetCoord::Q),
        Symbol::group(1),
        Symbol::group(3),
        Symbol::coeff(4, 0),
        Symbol::constant("lam"),
    ]
}

fn leaf_strategy() -> impl Strategy<Value = RawExpr> {
    prop_oneof![
        (-4i64..=4).prop_map(RawExpr::int),
        (0usize..pool_symbols().len()).prop_map(|i| RawExpr::Symbol(pool_symbols()[i].clone())),
    ]
}

/// Divisors restricted to monomial shapes so that canonical forms stay
/// structurally comparable (polynomial denominators are only reduced
/// by monomial content, by design).
fn monomial_divisor() -> impl Strategy<Value = RawExpr> {
    (0usize..pool_symbols().len(), 1i64..=2).prop_map(|(i, k)| {
        RawExpr::Pow(
            Box::new(RawExpr::Symbol(pool_symbols()[i].clone())),
            Exponent::from_integer(k),
        )
    })
}

fn raw_strategy() -> impl Strategy<Value = RawExpr> {
    leaf_strategy().prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(RawExpr::Add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(RawExpr::Mul),
            inner.clone().prop_map(|e| RawExpr::Neg(Box::new(e))),
            (inner.clone(), monomial_divisor())
                .prop_map(|(a, b)| RawExpr::Div(Box::new(a), Box::new(b))),
            (inner, 1i64..=3)
                .prop_map(|(a, k)| RawExpr::Pow(Box::new(a), Exponent::from_integer(k))),
        ]
    })
}

/// Embeds a canonical expression back into a raw tree.
fn expr_to_raw(e: &Expr) -> RawExpr {
    let sum = |ms: &[Monomial]| -> RawExpr {
        let terms = ms
            .iter()
            .map(|m| {
                let mut factors = vec![RawExpr::Rational(m.coeff.clone())];
                for (sym, e) in &m.factors {
                    factors.push(RawExpr::Pow(
                        Box::new(RawExpr::Symbol(sym.clone())),
                        *e,
                    ));
                }
                RawExpr::Mul(factors)
            })
            .collect::<Vec<_>>();
        if terms.is_empty() {
            RawExpr::Rational(BigRational::zero())
        } else {
            RawExpr::Add(terms)
        }
    };
    RawExpr::Div(Box::new(sum(&e.num)), Box::new(sum(&e.den)))
}

fn eval_corpus_env(seed: u64) -> MapEnv {
    // Values drawn away from zero to keep clear of poles.
    let mut state = seed.wrapping_mul(0x2545F4914F6CDD1D).wrapping_add(1);
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
        0.6 + unit * 0.9
    };
    MapEnv(
        pool_symbols()
            .into_iter()
            .map(|s| (s, next()))
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, .. ProptestConfig::default() })]

    #[test]
    fn canonicalize_is_idempotent(raw in raw_strategy()) {
        if let Ok(e) = raw.canonicalize() {
            let again = expr_to_raw(&e).canonicalize().unwrap();
            prop_assert_eq!(e, again);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, .. ProptestConfig::default() })]

    #[test]
    fn multiplication_commutes(a in raw_strategy(), b in raw_strategy()) {
        if let (Ok(e1), Ok(e2)) = (a.canonicalize(), b.canonicalize()) {
            prop_assert!(e1.mul(&e2).sub(&e2.mul(&e1)).is_zero());
        }
    }

    #[test]
    fn additive_cancellation(a in raw_strategy(), b in raw_strategy()) {
        if let (Ok(e1), Ok(e2)) = (a.canonicalize(), b.canonicalize()) {
            let back = e1.add(&e2).sub(&e2);
            prop_assert_eq!(back, e1);
        }
    }

    #[test]
    fn partials_commute(a in raw_strategy()) {
        if let Ok(e) = a.canonicalize() {
            let u = Symbol::jet(JetCoord::U);
            let p = Symbol::jet(JetCoord::P);
            let up = e.partial_derivative(&u).partial_derivative(&p);
            let pu = e.partial_derivative(&p).partial_derivative(&u);
            prop_assert!(up.equivalent(&pu));
        }
    }

    #[test]
    fn equality_agrees_with_evaluation(a in raw_strategy(), b in raw_strategy(), seed in 0u64..1u64<<48) {
        if let (Ok(e1), Ok(e2)) = (a.canonicalize(), b.canonicalize()) {
            let equal = e1 == e2;
            let mut max_gap: f64 = 0.0;
            let mut compared = 0;
            for k in 0..20u64 {
                let env = eval_corpus_env(seed.wrapping_add(k));
                match (e1.evaluate(&env), e2.evaluate(&env)) {
                    (Ok(v1), Ok(v2)) => {
                        compared += 1;
                        let scale = v1.abs().max(v2.abs()).max(1.0);
                        let gap = (v1 - v2).abs() / scale;
                        if equal {
                            prop_assert!(gap < 1e-10, "equal forms disagree: {gap}");
                        }
                        max_gap = max_gap.max(gap);
                    }
                    _ => {}
                }
            }
            // Distinct canonical forms that are *semantically* different
            // must be told apart at some sampled point.
            if compared == 20 && !e1.equivalent(&e2) {
                prop_assert!(max_gap > 1e-6, "distinct values never separated");
            }
        }
    }
}

#[test]
fn additive_cancellation_is_structural_for_monomial_denominators() {
    let e1 = parse("(u + p)/u^2");
    let e2 = parse("(q - 3*p)/(u*p)");
    assert_eq!(e1.add(&e2).sub(&e2), e1);
}

#[test]
fn serialization_shape() {
    let e = parse("-(f4*u + 3*p)/u^(4/5)");
    let json = serde_json::to_value(&e).unwrap();
    assert_eq!(json["denominator"][0]["factors"]["u"], "4/5");
    assert_eq!(json["numerator"][0]["coeff"], "-1");
    assert!(json["text"].as_str().unwrap().contains("f4"));
}

#[test]
fn exponent_denominator_limit_enforced() {
    let u = Expr::jet(JetCoord::U);
    assert!(u.pow(exp(1, 21)).is_err());
    assert!(u.pow(exp(1, 20)).is_ok());
}

#[test]
fn constants_are_recognized() {
    let one = Expr::one();
    assert_eq!(one.as_rational_constant(), Some(BigRational::one()));
    let seven_fifths = parse("7/5");
    assert_eq!(seven_fifths.as_rational_constant(), Some(rat(7, 5)));
    assert_eq!(parse("u").as_rational_constant(), None);
}
