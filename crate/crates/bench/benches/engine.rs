//! Benchmarks for the hot paths of the engine: expression arithmetic,
//! structure-equation assembly, and the end-to-end reductions.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use cartan5_core::expr::{parse_expr, ParseContext};
use cartan5_core::problem::{
    base_coframe, frame_basis, lifted_coframe, maurer_cartan, GroupState, OperatorSpec, Variant,
};
use cartan5_core::reduction::{
    absorb, run_reduction, structure_equations, NormalizationPlan,
};

fn expression_arithmetic(c: &mut Criterion) {
    let ctx = ParseContext::default();
    let i4 = parse_expr(
        "-(625*u^4*f1 - 800*u^2*f4*p*q + 2375*u^3*f4*r + 1770*p^2*q*u - 1275*p*r*u^2 \
         + 3000*s*u^3 + 270*f4*p^3*u - 225*u^2*f3*p^2 + 1750*u^3*f3*q + 1125*u^3*f2*p \
         - 594*p^4 - 800*q^2*u^2)/(625*u^(16/5))",
        &ctx,
    )
    .unwrap();
    let i2 = parse_expr(
        "(10*f4'*u^2 - 12*f4*p*u - 5*f3*u^2 - 9*p^2 - 10*q*u)/(5*u^(8/5))",
        &ctx,
    )
    .unwrap();
    c.bench_function("expr_mul_large", |b| {
        b.iter(|| black_box(&i4).mul(black_box(&i2)))
    });
    c.bench_function("expr_partial_derivative", |b| {
        b.iter(|| {
            black_box(&i4)
                .partial_derivative(&cartan5_core::expr::Symbol::jet(
                    cartan5_core::expr::JetCoord::U,
                ))
        })
    });
}

fn loop_one(c: &mut Criterion) {
    let op = OperatorSpec::generic();
    let base = base_coframe(&op, Variant::Direct);
    let state = GroupState::fresh();
    c.bench_function("loop_one_structure_equations", |b| {
        b.iter(|| {
            let lc = lifted_coframe(black_box(&base), &state).unwrap();
            let mc = maurer_cartan(&state).unwrap();
            let basis = frame_basis(&lc, &mc);
            let se = structure_equations(&lc, &basis).unwrap();
            absorb(&se).unwrap()
        })
    });
}

fn full_reduction(c: &mut Criterion) {
    let op = OperatorSpec::generic();
    c.bench_function("full_direct_reduction", |b| {
        b.iter(|| {
            run_reduction(
                black_box(&op),
                Variant::Direct,
                NormalizationPlan::default_for(Variant::Direct),
            )
            .unwrap()
        })
    });
    c.bench_function("full_gauge_reduction", |b| {
        b.iter(|| {
            run_reduction(
                black_box(&op),
                Variant::Gauge,
                NormalizationPlan::default_for(Variant::Gauge),
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, expression_arithmetic, loop_one, full_reduction);
criterion_main!(benches);
