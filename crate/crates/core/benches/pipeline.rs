//! Atlas construction and parcellation on one thread versus the full pool.
//! Built without the `parallel` feature both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use swmparc::atlas::{build_atlas, AtlasOptions};
use swmparc::exec::{default_workers, with_workers};
use swmparc::parcellation::{parcellate, ParcellationOptions};
use swmparc::streamline::{Bundle, DEFAULT_K};
use swmparc::synth::{generate_scene, ArcGrid};

fn pipeline(c: &mut Criterion) {
    let grid = ArcGrid {
        bundles: 8,
        distractors: 200,
        ..ArcGrid::default()
    };
    let scene = generate_scene(&grid.scene_spec()).expect("scene");
    let bundles: Vec<Bundle> = scene
        .atlas_bundles
        .iter()
        .map(|(id, raw)| Bundle::from_raw(id.clone(), raw, DEFAULT_K).expect("bundle"))
        .collect();
    let subject: Vec<_> = scene
        .subject
        .iter()
        .map(|s| s.resample(DEFAULT_K).expect("resample"))
        .collect();
    let atlas_opts = AtlasOptions::default();
    let parc_opts = ParcellationOptions::default();
    let atlas = build_atlas(bundles.clone(), &atlas_opts).expect("atlas");

    let all = default_workers();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for (label, workers) in [("sequential", Some(1)), ("parallel", None)] {
        let threads = workers.unwrap_or(all);
        group.bench_with_input(
            BenchmarkId::new(format!("build_atlas/{label}"), threads),
            &workers,
            |b, &w| {
                b.iter(|| {
                    with_workers(w, || {
                        build_atlas(bundles.clone(), &atlas_opts).expect("atlas")
                    })
                })
            },
        );
        group.bench_with_input(
            BenchmarkId::new(format!("parcellate/{label}"), threads),
            &workers,
            |b, &w| {
                b.iter(|| {
                    with_workers(w, || {
                        parcellate(&atlas, &subject, &parc_opts).expect("parcellate")
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
