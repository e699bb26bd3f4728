use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use podr_core::flow::Field2D;
use podr_core::mps::tt_svd;
use podr_core::pod::pod_decompose;
use podr_core::readout::{fsr_readout, podr_readout, rsr_readout};
use podr_core::{MpsVector, PodBasisSet, Sampling, SnapshotMatrix};

const SIDE: usize = 64;

/// Smooth, cavity-like fields that differ per `k`.
fn fields(m: usize) -> Vec<Field2D> {
    (0..m)
        .map(|k| {
            let a = 1.0 + k as f64 * 0.37;
            Field2D::from_fn(SIDE, SIDE, |i, j| {
                let (x, y) = (i as f64 / (SIDE - 1) as f64, j as f64 / (SIDE - 1) as f64);
                (a * x * 3.1).sin() * (y * y * a).cos() + x * y * y * (1.0 + 0.1 * a)
            })
        })
        .collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn basis(m: usize) -> PodBasisSet {
    let f = fields(m);
    let labels: Vec<f64> = (0..m).map(|k| k as f64).collect();
    pod_decompose(&SnapshotMatrix::build(&f, &labels).unwrap()).unwrap()
}

fn bench_pod(c: &mut Criterion) {
    let f = fields(10);
    let labels: Vec<f64> = (0..10).map(|k| k as f64).collect();
    let s = SnapshotMatrix::build(&f, &labels).unwrap();
    c.bench_function("pod_decompose 4096x10", |b| b.iter(|| pod_decompose(&s).unwrap()));
}

fn bench_tt_svd(c: &mut Criterion) {
    let b = basis(10);
    let mut group = c.benchmark_group("tt_svd 4096");
    for chi in [2usize, 8, 16, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(chi), &chi, |bench, &chi| {
            bench.iter(|| tt_svd(b.basis(2), chi).unwrap())
        });
    }
    group.finish();
}

fn bench_readout(c: &mut Criterion) {
    let b = basis(10);
    let approx: Vec<MpsVector> = (0..5).map(|i| tt_svd(b.basis(i), 8).unwrap()).collect();
    let x = unit(fields(11)[10].values());
    let s = Sampling::shots(10_000, 1);
    let mut group = c.benchmark_group("readout 4096 at 1e4 shots");
    group.bench_function("PODR", |bench| bench.iter(|| podr_readout(&x, &b, &approx, s, 2.0, None).unwrap()));
    group.bench_function("RSR", |bench| bench.iter(|| rsr_readout(&x, s, true).unwrap()));
    group.bench_function("FSR", |bench| bench.iter(|| fsr_readout(&x, SIDE, SIDE, 1e-3, s).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_pod, bench_tt_svd, bench_readout);
criterion_main!(benches);
