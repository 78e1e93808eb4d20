use criterion::{criterion_group, criterion_main, Criterion};
use derdo::codec::{encode_frame, EncoderConfig, Frame};
use derdo::energy_model::SpecificEnergyProfile;
use derdo::optimizer::ObjectiveKind;
use derdo::par;

fn frames(count: usize) -> Vec<Frame> {
    (0..count)
        .map(|k| {
            let (w, h) = (128, 64);
            let y = (0..w * h).map(|i| ((i % w) * 2 + (i / w) * 3 + k * 17) as u8 ^ ((i * 7919) % 13) as u8).collect();
            let u = (0..w * h / 4).map(|i| (i % 64 + 96) as u8).collect();
            let v = (0..w * h / 4).map(|i| (200 - i % 48) as u8).collect();
            Frame::from_planes(w, h, y, u, v).unwrap()
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let profile = SpecificEnergyProfile::default_synthetic();
    let cfg = EncoderConfig::new(ObjectiveKind::Derdo, 30).unwrap();
    let input = frames(4);
    let encode = |f: &Frame| encode_frame(f, &profile, &cfg).unwrap().payload.len();

    let mut g = c.benchmark_group("encode_frames");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| par::map_sequential(&input, encode)));
    #[cfg(feature = "parallel")]
    g.bench_function("parallel", |b| b.iter(|| par::map_parallel(&input, encode)));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
