//! Parallel-vs-sequential benchmarks over the batch workloads.
//!
//! With the default `parallel` feature, each workload runs inside rayon
//! pools of increasing size so the speedup and scheduling overhead are both
//! visible; `--no-default-features` benches the true sequential fallback.
//! Results are identical in every mode, so the comparison is timing only.
//!
//!     cargo bench -p ruptura-core
//!     cargo bench -p ruptura-core --no-default-features

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ruptura_core::features::{dataset_from_panel, FeatureSetSpec};
use ruptura_core::learners::{train, ModelFamily, ModelSpec};
use ruptura_core::placebo::placebo_run;
use ruptura_core::rdd::{batch_estimate, WindowConfig};
use ruptura_core::synth::{generate, EffectMap, SynthConfig, SynthData};

fn noisy_cohort(n_regions: usize) -> SynthData {
    let mut config = SynthConfig::quiet(n_regions, 120, 97);
    config.noise_sigma = 0.5;
    config.ar_coefficient = 0.3;
    config.effect_map = EffectMap::LinearInTrend {
        delta0: (0.3, 1.5),
        delta1: (-0.05, -0.6),
    };
    generate(&config).unwrap()
}

fn run_modes<F: Fn() + Sync>(c: &mut Criterion, group_name: &str, workload: F) {
    let mut group = c.benchmark_group(group_name);
    #[cfg(feature = "parallel")]
    {
        let max_threads = std::thread::available_parallelism().map_or(4, |n| n.get().max(2));
        for threads in [1usize, 2, max_threads] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("pool");
            group.bench_with_input(BenchmarkId::new("rayon", threads), &threads, |b, _| {
                b.iter(|| pool.install(&workload))
            });
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        group.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(&workload));
    }
    group.finish();
}

fn bench_batch_estimate(c: &mut Criterion) {
    let data = noisy_cohort(400);
    run_modes(c, "batch_estimate_400_regions", || {
        let (outcomes, _) =
            batch_estimate(&data.panel, &data.events, "event", &WindowConfig::default()).unwrap();
        assert_eq!(outcomes.len(), 400);
    });
}

fn bench_placebo(c: &mut Criterion) {
    let data = noisy_cohort(50);
    run_modes(c, "placebo_500_episodes", || {
        let summary = placebo_run(&data.panel, 500, &WindowConfig::default(), 13).unwrap();
        assert_eq!(summary.n_episodes, 500);
    });
}

fn bench_forest_training(c: &mut Criterion) {
    let data = noisy_cohort(200);
    let (dataset, _) = dataset_from_panel(
        &data.panel,
        &data.events,
        "event",
        None,
        None,
        FeatureSetSpec::parse("P,RC").unwrap(),
        &WindowConfig::default(),
    )
    .unwrap();
    let spec = ModelSpec::new(ModelFamily::RandomForest {
            n_estimators: 50,
            max_depth: None,
        }, 3);
    run_modes(c, "random_forest_50_trees", || {
        train(&spec, &dataset).unwrap();
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_batch_estimate, bench_placebo, bench_forest_training
}
criterion_main!(benches);
