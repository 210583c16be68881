use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use disperse_core::{
    find_empty_box, largest_empty_box_exact, largest_empty_box_f64, radix_point, stage1, stage2,
    ConstructionParams, Coord, FinderParams, OracleOptions, PointSet, Rational, Space,
};

fn random_exact(seed: u64, n: usize) -> PointSet<Rational> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|_| {
            (0..2)
                .map(|_| Rational::from_int_ratio(rng.gen_range(0..=1 << 16), 1 << 16))
                .collect()
        })
        .collect();
    PointSet::new(2, pts, Space::Cube).unwrap()
}

fn bench_oracle(c: &mut Criterion) {
    let opts = OracleOptions::default();
    for n in [100usize, 400, 1600] {
        let p = random_exact(1, n);
        c.bench_function(&format!("oracle_exact_d2_n{n}"), |b| {
            b.iter(|| largest_empty_box_exact(&p, &opts).unwrap())
        });
        let pf = p.to_f64_set();
        c.bench_function(&format!("oracle_f64_d2_n{n}"), |b| {
            b.iter(|| largest_empty_box_f64(&pf, &opts).unwrap())
        });
    }
}

fn bench_finder(c: &mut Criterion) {
    let p = random_exact(2, 400).to_f64_set();
    c.bench_function("find_empty_box_d2_n400", |b| {
        let mut seed = 0u64;
        b.iter_batched(
            || {
                seed += 1;
                FinderParams::simple_default(2, seed)
            },
            |params| find_empty_box(&p, &params).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_construction(c: &mut Criterion) {
    let params = ConstructionParams::desk(2).unwrap();
    let n = 432u128;
    c.bench_function("stage1_desk_n432", |b| {
        b.iter(|| stage1(n, &params, 11, true).unwrap())
    });
    let s1 = stage1(n, &params, 11, true).unwrap();
    c.bench_function("stage2_desk_n432", |b| {
        b.iter(|| stage2(&s1.points, &params).unwrap())
    });
    c.bench_function("radix_point_20bit", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for x in 0..1u128 << 10 {
                acc += Coord::to_f64(&radix_point(x, &params)[0]);
            }
            acc
        })
    });
}

criterion_group!(benches, bench_oracle, bench_finder, bench_construction);
criterion_main!(benches);
