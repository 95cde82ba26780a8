use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use saasel_core::bench::{
    brute_force_minimum, mass_spring, random_stabilizable_network, MassSpringSpec, MethodConfig,
    RandomNetworkSpec,
};
use saasel_core::candidates::{enumerate_with, prune_on_infeasible_with, EnumerateOptions};
use saasel_core::exec::Execution;
use saasel_core::model::{reduced_bc, LogisticConstraint, Selection};
use saasel_core::sdp::SolverTolerances;
use saasel_core::search::{pbh_stabilizable_with, PbhOptions};
use std::hint::black_box;

const MODES: [Execution; 2] = [Execution::Parallel, Execution::Sequential];

fn candidates(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_and_prune");
    let lc = LogisticConstraint::at_least(10, 2, 2);
    for exec in MODES {
        let opts = EnumerateOptions {
            execution: exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| {
                let cs = enumerate_with(10, &lc, &opts).unwrap();
                let probe = cs.get(cs.sigma() / 2).unwrap();
                black_box(prune_on_infeasible_with(&cs, &probe, exec))
            })
        });
    }
    g.finish();
}

fn pbh(c: &mut Criterion) {
    let net = mass_spring(&MassSpringSpec::uniform(10).with_damping(0.0)).unwrap();
    let opts = PbhOptions::default().calibrated(&net).unwrap();
    let s = Selection::from_active_nodes(10, &[3, 9], &[3, 9]).unwrap();
    let (bq, _) = reduced_bc(&s, &net).unwrap();
    let mut g = c.benchmark_group("pbh_stabilizable");
    for exec in MODES {
        g.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| black_box(pbh_stabilizable_with(net.a(), &bq, &opts, exec).unwrap()))
        });
    }
    g.finish();
}

fn exhaustive(c: &mut Criterion) {
    let tol = SolverTolerances::default();
    let (net, _) = random_stabilizable_network(&RandomNetworkSpec::new(3, 7), &tol, 50).unwrap();
    let lc = LogisticConstraint::none();
    let mut g = c.benchmark_group("brute_force_sdp");
    g.sample_size(10);
    for exec in MODES {
        let cfg = MethodConfig::default().with_execution(exec);
        g.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| black_box(brute_force_minimum(&net, &lc, &cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, candidates, pbh, exhaustive);
criterion_main!(benches);
