use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use domino::enumerate::enumerate_tilings;
use domino::heights::height_from_tiling;
use domino::sample::{initial_tiling, MarkovState};
use domino::shapes;
use domino::tension::{sigma, sigma_derivatives, Slope};
use domino::varsolve::{build_mesh, maximize, problems, SolveOptions};

fn tension(c: &mut Criterion) {
    let slopes: Vec<Slope> = (0..64).map(|k| Slope::new(1.9 * (k as f64 / 64.0) - 0.95, 0.4).unwrap()).collect();
    c.bench_function("sigma/64 slopes", |b| b.iter(|| slopes.iter().map(|&s| sigma(black_box(s)).unwrap()).sum::<f64>()));
    c.bench_function("sigma_derivatives/64 slopes", |b| {
        b.iter(|| slopes.iter().map(|&s| sigma_derivatives(black_box(s)).unwrap().hess[0][0]).sum::<f64>())
    });
}

fn enumeration(c: &mut Criterion) {
    let d = shapes::annulus(6, 2).unwrap();
    c.bench_function("enumerate/annulus 6:2", |b| b.iter(|| enumerate_tilings(black_box(&d)).unwrap().count()));
    let t = enumerate_tilings(&d).unwrap().next().unwrap();
    c.bench_function("height_from_tiling/annulus 6:2", |b| b.iter(|| height_from_tiling(&d, black_box(&t)).unwrap()));
}

fn chain(c: &mut Criterion) {
    let d = shapes::modified_aztec(32, None).unwrap();
    let start = MarkovState::new(&d, &initial_tiling(&d, None).unwrap(), 1, true).unwrap();
    let sweep = d.squares().len() as u64;
    c.bench_function("chain/modified aztec 32, one sweep", |b| {
        b.iter_batched(|| start.clone(), |mut s| s.run(sweep).unwrap(), BatchSize::SmallInput)
    });
}

fn solver(c: &mut Criterion) {
    let p = problems::aztec_diamond();
    let mesh = build_mesh(&p.domain, 0.1).unwrap();
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("aztec, spacing 0.1", |b| b.iter(|| maximize(&mesh, &p.data, &SolveOptions::default()).unwrap().objective));
    g.finish();
}

criterion_group!(benches, tension, enumeration, chain, solver);
criterion_main!(benches);
