use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qhemi::hemi::{verify_hemisystem, Construction, Mask};
use qhemi::quadric::enumerate_maximals;
use qhemi::{Exec, Field, StandardModel};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn maximals(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_maximals");
    group.sample_size(10);
    for (p, d) in [(7, 2), (3, 3)] {
        let model = StandardModel::new(&Field::prime(p).unwrap(), d).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("q{p}d{d}")), &model, |b, m| {
                b.iter(|| enumerate_maximals(m, exec))
            });
        }
    }
    group.finish();
}

fn construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("construction");
    group.sample_size(10);
    let f = Field::new(3, 2, None).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "q9d2"), |b| b.iter(|| Construction::new(&f, 2, exec).unwrap()));
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_hemisystem");
    let con = Construction::new(&Field::prime(3).unwrap(), 3, Exec::Parallel).unwrap();
    let h = con.assemble(&Mask::zeros(con.ab_report().m)).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "q3d3"), |b| {
            b.iter(|| verify_hemisystem(con.quadric(), &h.members, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, maximals, construction, verification);
criterion_main!(benches);
