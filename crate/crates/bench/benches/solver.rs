use criterion::{criterion_group, criterion_main, Criterion};
use pinnflow_bench::paper_network;
use pinnflow_core::geometry::{generate_collocation, partition_domain, sample_lhs};
use pinnflow_core::net::evaluate_with_derivatives;
use pinnflow_core::physics::Variant;
use pinnflow_core::trainer::{self, ExperimentConfig};
use std::hint::black_box;

fn point_evaluation(c: &mut Criterion) {
    let net = paper_network(1);
    let input = [0.55, 0.2, 0.25];
    c.bench_function("point_eval_order2_7x50", |b| {
        b.iter(|| evaluate_with_derivatives(&net, black_box(&input), 2).unwrap())
    });
    c.bench_function("point_eval_order3_7x50", |b| {
        b.iter(|| evaluate_with_derivatives(&net, black_box(&input), 3).unwrap())
    });
}

fn objective_evaluation(c: &mut Criterion) {
    let cfg = ExperimentConfig::rectangle_scaled(Variant::Wcpinn);
    let (nets, subs) = trainer::initial_networks(&cfg).unwrap();
    c.bench_function("objective_scaled_wcpinn_500pts", |b| {
        b.iter(|| {
            trainer::loss_and_gradient(
                black_box(&nets),
                &subs,
                &cfg.flow,
                cfg.weights,
                cfg.variant,
                false,
            )
            .unwrap()
        })
    });
}

fn sampling(c: &mut Criterion) {
    let bounds = [(0.0, 1.1), (0.0, 0.41), (0.0, 0.5)];
    c.bench_function("lhs_3321_points", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            sample_lhs(black_box(&bounds), 3321, seed).unwrap()
        })
    });

    let cfg = ExperimentConfig::rectangle_paper(Variant::Wxpinn);
    c.bench_function("collocation_and_partition_paper", |b| {
        b.iter(|| {
            let set = generate_collocation(&cfg.domain, &cfg.flow, &cfg.counts, 7).unwrap();
            partition_domain(&cfg.domain, &set, 2, cfg.interface_points, 7).unwrap()
        })
    });
}

criterion_group!(benches, point_evaluation, objective_evaluation, sampling);
criterion_main!(benches);
