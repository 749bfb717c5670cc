use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use galvanic_core::ingest_io::{parse_capture_str, write_capture_to, FormatOptions};
use galvanic_core::signals::{default_mseq, repeat, to_bipolar, zero_pad, Waveform};
use galvanic_core::sounder::{estimate_cir, Alignment, SounderConfig};
use galvanic_core::tissue_fem::{gain_sweep, ArmModel, GridResolution};

fn mseq(c: &mut Criterion) {
    c.bench_function("mseq degree 13", |b| b.iter(|| default_mseq(black_box(13)).unwrap()));
}

fn sounder(c: &mut Criterion) {
    let seq = default_mseq(13).unwrap();
    let period = to_bipolar(&seq, 1.0, 5e6).unwrap();
    let tx = zero_pad(&repeat(&period, 2), period.len());
    let rx: Vec<f64> = tx.samples().iter().enumerate().map(|(n, v)| 0.8 * v + 0.1 * (n as f64).sin()).collect();
    let rx = Waveform::new(rx, 5e6).unwrap();
    let cfg = SounderConfig { alignment: Alignment::AbsoluteLatency, ..Default::default() };
    c.bench_function("estimate_cir degree 13", |b| b.iter(|| estimate_cir(&tx, &rx, &seq, &cfg).unwrap()));
}

fn tissue(c: &mut Criterion) {
    let arm = ArmModel::reference();
    let res = GridResolution::default();
    let mut g = c.benchmark_group("tissue");
    g.sample_size(10);
    g.bench_function("gain_sweep one frequency", |b| b.iter(|| gain_sweep(&arm, &[1e6], &res).unwrap()));
    g.finish();
}

fn ingest(c: &mut Criterion) {
    let w = Waveform::new((0..100_000).map(|n| (n as f64 * 0.01).sin()).collect(), 5e6).unwrap();
    let mut buf = Vec::new();
    write_capture_to(&w, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let opts = FormatOptions::default();
    c.bench_function("parse_capture 100k samples", |b| {
        b.iter(|| parse_capture_str(black_box(&text), &opts, "bench").unwrap())
    });
}

criterion_group!(benches, mseq, sounder, tissue, ingest);
criterion_main!(benches);
