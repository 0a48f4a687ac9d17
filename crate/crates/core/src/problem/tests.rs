use crate::expr::{exp, parse_expr, ParseContext};
use crate::forms::exterior_derivative;

use super::*;

fn parse(s: &str) -> Expr {
    parse_expr(s, &ParseContext::default()).unwrap()
}

fn parse_c(s: &str, consts: &[&str]) -> Expr {
    parse_expr(s, &ParseContext::with_consts(consts.iter().copied().map(String::from))).unwrap()
}

fn coord(c: JetCoord) -> CovectorLabel {
    CovectorLabel::Coord(c)
}

#[test]
fn direct_omega7_dx_coefficient() {
    let op = OperatorSpec::generic();
    let omega = base_coframe(&op, Variant::Direct);
    let dx_coeff = omega[6].coefficient(coord(JetCoord::X));
    assert_eq!(
        dx_coeff,
        parse("f4'*s + f3'*r + f2'*q + f1'*p + f0'*u")
    );
    assert_eq!(omega[6].coefficient(coord(JetCoord::T)), Expr::one());
    assert_eq!(
        omega[6].coefficient(coord(JetCoord::S)),
        Expr::coeff_fn(4, 0)
    );
}

#[test]
fn gauge_omega7_du_coefficient() {
    let op = OperatorSpec::generic();
    let omega = base_coframe(&op, Variant::Gauge);
    assert_eq!(
        omega[6].coefficient(coord(JetCoord::U)),
        parse("-(t + f4*s + f3*r + f2*q + f1*p)/u^2")
    );
    assert_eq!(
        omega[6].coefficient(coord(JetCoord::T)),
        parse("1/u")
    );
}

#[test]
fn omega7_is_exact_for_both_variants() {
    let op = OperatorSpec::generic();
    for variant in [Variant::Direct, Variant::Gauge] {
        let omega = base_coframe(&op, variant);
        let d = exterior_derivative(&omega[6]).unwrap();
        assert!(d.is_zero(), "omega^7 not closed for {variant}");
    }
}

#[test]
fn worked_example_omega7() {
    // f0 = q(x) - lam*a^5 with potential q(x) = x, other coefficients
    // zero: dI = u dx + (x - lam*a^5) du + dt.
    let consts = ["lam", "a"];
    let f0 = parse_c("x - lam*a^5", &consts);
    let op = OperatorSpec::new(
        [f0.clone(), Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()],
        consts.iter().map(|s| Arc::from(*s)),
    )
    .unwrap();
    let omega = base_coframe(&op, Variant::Direct);
    assert_eq!(omega[6].coefficient(coord(JetCoord::X)), parse("u"));
    assert_eq!(omega[6].coefficient(coord(JetCoord::U)), f0);
    assert_eq!(omega[6].coefficient(coord(JetCoord::T)), Expr::one());
    assert!(exterior_derivative(&omega[6]).unwrap().is_zero());
}

fn identity_state() -> GroupState {
    let mut state = GroupState::fresh();
    for n in 1..=15u8 {
        let value = if matches!(n, 1 | 3 | 6 | 10 | 15) {
            Expr::one()
        } else {
            Expr::zero()
        };
        state.assign(n, value).unwrap();
    }
    state
}

#[test]
fn identity_group_element_fixes_coframe() {
    let op = OperatorSpec::generic();
    let base = base_coframe(&op, Variant::Direct);
    let lc = lifted_coframe(&base, &identity_state()).unwrap();
    for (theta, omega) in lc.theta.iter().zip(base.iter()) {
        assert_eq!(theta, omega);
    }
}

#[test]
fn theta7_is_omega7_for_generic_group() {
    let op = OperatorSpec::generic();
    for variant in [Variant::Direct, Variant::Gauge] {
        let base = base_coframe(&op, variant);
        let lc = lifted_coframe(&base, &GroupState::fresh()).unwrap();
        assert_eq!(&lc.theta[6], &base[6]);
    }
}

#[test]
fn loop_one_normalization_scales_theta1() {
    let op = OperatorSpec::generic();
    let base = base_coframe(&op, Variant::Direct);
    let mut state = GroupState::fresh();
    state
        .assign(1, Expr::jet(JetCoord::U).pow(exp(-1, 5)).unwrap())
        .unwrap();
    let lc = lifted_coframe(&base, &state).unwrap();
    assert_eq!(
        lc.theta[0].coefficient(coord(JetCoord::X)),
        parse("1/u^(1/5)")
    );
    assert_eq!(lc.theta[0].terms().count(), 1);
}

#[test]
fn degenerate_group_is_rejected() {
    let op = OperatorSpec::generic();
    let base = base_coframe(&op, Variant::Direct);
    let mut state = GroupState::fresh();
    state.assign(3, Expr::zero()).unwrap();
    assert!(matches!(
        lifted_coframe(&base, &state),
        Err(Error::SingularGroup(_))
    ));
}

#[test]
fn change_of_basis_recomposes_coframe() {
    let op = OperatorSpec::generic();
    let base = base_coframe(&op, Variant::Gauge);
    let lc = lifted_coframe(&base, &GroupState::fresh()).unwrap();
    assert_eq!(
        lc.coord_matrix.mul(&lc.change_of_basis),
        ExprMatrix::identity(7)
    );
}

#[test]
fn group_determinant() {
    let g = group_matrix(&GroupState::fresh());
    assert_eq!(g.det().unwrap(), parse("a1*a3*a6*a10*a15"));
}

#[test]
fn group_inverse_round_trip() {
    let g = group_matrix(&GroupState::fresh());
    let inv = g.inverse().unwrap();
    assert_eq!(g.mul(&inv), ExprMatrix::identity(7));
    assert_eq!(inv.mul(&g), ExprMatrix::identity(7));
}

fn alpha_form(mc: &MaurerCartan, label: u8) -> &OneForm {
    &mc.alphas.iter().find(|(l, _)| *l == label).unwrap().1
}

fn da(n: u8) -> CovectorLabel {
    CovectorLabel::Param(n)
}

#[test]
fn full_group_maurer_cartan_matches_closed_forms() {
    let mc = maurer_cartan(&GroupState::fresh()).unwrap();
    assert_eq!(mc.alphas.len(), 15);
    let labels: Vec<u8> = mc.alphas.iter().map(|(l, _)| *l).collect();
    assert_eq!(labels, (1..=15).collect::<Vec<_>>());

    // alpha^1 = da1/a1
    assert_eq!(alpha_form(&mc, 1).coefficient(da(1)), parse("1/a1"));
    // alpha^2 = (a3 da2 - a2 da3)/a3
    assert_eq!(alpha_form(&mc, 2).coefficient(da(2)), Expr::one());
    assert_eq!(alpha_form(&mc, 2).coefficient(da(3)), parse("-a2/a3"));
    // alpha^3 = da3/a3
    assert_eq!(alpha_form(&mc, 3).coefficient(da(3)), parse("1/a3"));
    // alpha^5 = (a6 da5 - a5 da6)/(a3 a6)
    assert_eq!(alpha_form(&mc, 5).coefficient(da(5)), parse("1/a3"));
    assert_eq!(
        alpha_form(&mc, 5).coefficient(da(6)),
        parse("-a5/(a3*a6)")
    );
    // alpha^9 = (a10 da9 - a9 da10)/(a6 a10)
    assert_eq!(alpha_form(&mc, 9).coefficient(da(9)), parse("1/a6"));
    assert_eq!(
        alpha_form(&mc, 9).coefficient(da(10)),
        parse("-a9/(a6*a10)")
    );
    // alpha^15 = da15/a15
    assert_eq!(alpha_form(&mc, 15).coefficient(da(15)), parse("1/a15"));
}

#[test]
fn scalar_subgroup_maurer_cartan() {
    let mut state = identity_state();
    state.assigned.remove(&1);
    let mc = maurer_cartan(&state).unwrap();
    assert_eq!(mc.alphas.len(), 1);
    assert_eq!(mc.alphas[0].0, 1);
    assert_eq!(mc.alphas[0].1.coefficient(da(1)), parse("1/a1"));
}

/// Rebuilds the full gamma matrix from the alpha forms (every nonzero
/// slot of the full group is its own basis element).
fn gamma_matrix(mc: &MaurerCartan) -> Vec<Vec<OneForm>> {
    let ctx = BasisContext::coordinate();
    let mut gamma = vec![vec![OneForm::zero(ctx); 7]; 7];
    for (idx, (row, col)) in PARAM_SLOTS.iter().enumerate() {
        gamma[(*row - 1) as usize][(*col - 1) as usize] =
            alpha_form(mc, (idx + 1) as u8).clone();
    }
    gamma
}

#[test]
fn gamma_times_g_recovers_dg() {
    let state = GroupState::fresh();
    let mc = maurer_cartan(&state).unwrap();
    let gamma = gamma_matrix(&mc);
    let g = group_matrix(&state);
    let ctx = BasisContext::coordinate();
    for i in 0..7 {
        for j in 0..7 {
            let mut acc = OneForm::zero(ctx.clone());
            for (k, gamma_ik) in gamma[i].iter().enumerate() {
                acc = acc.add(&gamma_ik.scale(g.get(k, j))).unwrap();
            }
            let expected = match slot_number(((i + 1) as u8, (j + 1) as u8)) {
                Some(m) => {
                    OneForm::from_terms(ctx.clone(), [(da(m), Expr::one())]).unwrap()
                }
                None => OneForm::zero(ctx.clone()),
            };
            assert_eq!(acc, expected, "slot ({},{})", i + 1, j + 1);
        }
    }
}

/// The Maurer-Cartan structure equation for right-invariant forms:
/// d gamma = gamma ^ gamma, checked entrywise on the full group.
#[test]
fn maurer_cartan_structure_equation() {
    let mc = maurer_cartan(&GroupState::fresh()).unwrap();
    let gamma = gamma_matrix(&mc);
    for i in 0..7 {
        for j in 0..7 {
            let lhs = exterior_derivative(&gamma[i][j]).unwrap();
            let mut rhs = crate::forms::TwoForm::zero(BasisContext::coordinate());
            for k in 0..7 {
                rhs = rhs.add(&gamma[i][k].wedge(&gamma[k][j]).unwrap()).unwrap();
            }
            assert_eq!(lhs, rhs, "entry ({},{})", i + 1, j + 1);
        }
    }
}

#[test]
fn operator_rejects_stray_symbols() {
    let bad = OperatorSpec::new(
        [parse("u"), Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()],
        [],
    );
    assert!(bad.is_err());
}

#[test]
fn coefficient_derivative_formal_and_concrete() {
    let generic = OperatorSpec::generic();
    assert_eq!(generic.coefficient_derivative(4, 2), Expr::coeff_fn(4, 2));
    let op = OperatorSpec::new(
        [Expr::zero(), Expr::zero(), parse("x^2"), Expr::zero(), parse("x")],
        [],
    )
    .unwrap();
    assert_eq!(op.coefficient_derivative(2, 1), parse("2*x"));
    assert_eq!(op.coefficient_derivative(4, 1), Expr::one());
    assert_eq!(op.coefficient_derivative(4, 2), Expr::zero());
}
