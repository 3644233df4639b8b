use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nlbvp::assembly::{assemble_stiffness, OperatorAssembly};
use nlbvp::solvers::{solve_dirichlet, SolverOptions};
use nlbvp::{AnalyticFn, InnerResolution, NodalOperator};
use nlbvp_bench::{disk, interval};

fn operator_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_build");
    group.sample_size(10);
    for delta in [0.1, 0.05, 0.025] {
        let inst = interval(delta);
        group.bench_with_input(BenchmarkId::new("interval", delta), &inst, |b, inst| {
            b.iter(|| NodalOperator::build(&inst.kernel, &inst.mesh, InnerResolution::default()).unwrap())
        });
    }
    let (scn, inst) = disk(0.1);
    group.bench_function("disk/0.1", |b| b.iter(|| NodalOperator::build(&inst.kernel, &inst.mesh, scn.inner).unwrap()));
    group.finish();
}

fn stiffness(c: &mut Criterion) {
    let mut group = c.benchmark_group("stiffness");
    group.sample_size(10);
    for delta in [0.1, 0.05] {
        let inst = interval(delta);
        group.bench_with_input(BenchmarkId::new("interval", delta), &inst, |b, inst| {
            b.iter(|| assemble_stiffness(&inst.kernel, &inst.mesh, InnerResolution::default()).unwrap())
        });
    }
    group.finish();
}

fn apply_l(c: &mut Criterion) {
    let inst = interval(0.05);
    let op = NodalOperator::build(&inst.kernel, &inst.mesh, InnerResolution::default()).unwrap();
    let u = AnalyticFn::SinPi.sample(&inst.mesh);
    c.bench_function("apply_l/interval/0.05", |b| b.iter(|| op.apply_l(black_box(&u))));
}

fn dirichlet_solve(c: &mut Criterion) {
    let inst = interval(0.05);
    let asm = OperatorAssembly::assemble(&inst.kernel, &inst.mesh, InnerResolution::default()).unwrap();
    let f = AnalyticFn::SinPiLoad.sample(&inst.mesh);
    let load = nlbvp::assembly::load_l2(&inst.mesh, &f);
    let opts = SolverOptions::default();
    c.bench_function("dirichlet_cg/interval/0.05", |b| {
        b.iter(|| solve_dirichlet(&asm, &inst.mesh, black_box(&load), None, 0.05, &opts).unwrap())
    });
}

criterion_group!(benches, operator_build, stiffness, apply_l, dirichlet_solve);
criterion_main!(benches);
