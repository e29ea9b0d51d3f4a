//! Benchmarks for the hot paths: jet arithmetic, the geometry tower, and a
//! full transform analysis with its heaviest check.

use std::hint::black_box;

use berwald::catalog;
use berwald::conformal::ConformalAnalysis;
use berwald::geometry::SurfaceJets;
use berwald::jet;
use berwald::SupportElement;
use criterion::{criterion_group, criterion_main, Criterion};

const ORDER: usize = 6;

fn support() -> SupportElement {
    SupportElement::new([0.1, 0.2], [1.0, 0.5])
}

fn scenario(name: &str) -> catalog::Scenario {
    *catalog::scenarios()
        .iter()
        .find(|s| s.name == name)
        .expect("catalog scenario")
}

fn jet_multiplication(c: &mut Criterion) {
    let vars = jet::seed(&support(), ORDER).expect("seed");
    let klein = scenario("klein_log_shift").metric.field;
    let f = klein(&vars).expect("metric value");
    let f2 = &f * &f;
    c.bench_function("jet_mul_order_6", |b| {
        b.iter(|| black_box(&f) * black_box(&f2))
    });
}

fn geometry_tower(c: &mut Criterion) {
    let u = support();
    let klein = scenario("klein_log_shift").metric.field;
    c.bench_function("surface_jets_order_6", |b| {
        b.iter(|| SurfaceJets::new(&klein, black_box(&u), ORDER).expect("geometry"))
    });
}

fn transform_analysis(c: &mut Criterion) {
    let u = support();
    let scn = scenario("klein_log_shift");
    c.bench_function("conformal_analysis_order_6", |b| {
        b.iter(|| {
            ConformalAnalysis::new(
                &scn.metric.field,
                &scn.factor.field,
                scn.factor.kind,
                black_box(&u),
                ORDER,
            )
            .expect("analysis")
        })
    });

    let analysis = scn.analyze(&u, ORDER).expect("analysis");
    c.bench_function("master_equivalence_check", |b| {
        b.iter(|| {
            analysis
                .run_check(black_box("master_equivalence"), 1e-8)
                .expect("known check")
        })
    });
}

criterion_group!(
    benches,
    jet_multiplication,
    geometry_tower,
    transform_analysis
);
criterion_main!(benches);
