use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use duav_core::channel::{draw_gain, Fading, LinkClass};
use duav_core::config::{BetaInterpretation, Scenario, SimConfig, Strategy};
use duav_core::deployment::{place_nodes, NodeId, SpatialIndex};
use duav_core::engine::run_drop;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(scenario: Scenario) -> SimConfig {
    let aerial = scenario == Scenario::AerialUe;
    SimConfig {
        area_m2: 1e5,
        bandwidth_hz: 2e9,
        bs_density_per_m2: if aerial { 4e-5 } else { 0.0 },
        uav_density_per_m2: if aerial { 1e-3 } else { 1e-4 },
        ue_density_per_m2: if aerial { 0.01 } else { 0.2 },
        eaves_density_per_m2: if aerial { 0.098 } else { 0.04 },
        uav_altitude_m: if aerial { 200.0 } else { 300.0 },
        uav_tx_mw: 200.0,
        ue_tx_mw: if aerial { 300.0 } else { 230.0 },
        jammer_tx_mw: None,
        beta_dbm: -120.0,
        beta_interpretation: BetaInterpretation::SinrDb,
        eta: if aerial { 0.5 } else { 0.6 },
        noise_dbm: -130.0,
        alpha_air: 2.0,
        alpha_ground: 4.0,
        rician_k_db: 10.0,
        underlay_prob: 0.5,
        min_link_distance_m: 1.0,
        scenario,
        strategy: Strategy::New,
        n_drops: 1,
        master_seed: 3,
    }
}

fn bench_run_drop(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_drop");
    group.sample_size(10);
    for (name, scenario) in [
        ("flying_bs", Scenario::FlyingBs),
        ("aerial_ue", Scenario::AerialUe),
    ] {
        let cfg = config(scenario);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            let mut i = 0u64;
            b.iter(|| {
                i += 1;
                black_box(run_drop(cfg, Strategy::New, i))
            });
        });
    }
    group.finish();
}

fn bench_nearest(c: &mut Criterion) {
    let cfg = config(Scenario::FlyingBs);
    let deployment = place_nodes(&cfg, 42);
    let ids: Vec<(NodeId, [f64; 3])> = deployment
        .transmitting_ue_ids()
        .into_iter()
        .map(|id| (id, deployment.node(id).pos))
        .collect();
    let index = SpatialIndex::build(ids.iter().cloned(), cfg.area_m2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let queries: Vec<[f64; 3]> = (0..1024)
        .map(|_| [rng.gen::<f64>() * 316.0, rng.gen::<f64>() * 316.0, 0.0])
        .collect();

    let mut group = c.benchmark_group("nearest");
    group.bench_function("grid_20k_points", |b| {
        let mut k = 0usize;
        b.iter(|| {
            k = (k + 1) % queries.len();
            black_box(index.nearest(queries[k], None))
        });
    });
    group.finish();
}

fn bench_draw_gain(c: &mut Criterion) {
    let rayleigh = LinkClass {
        fading: Fading::Rayleigh,
        alpha: 4.0,
    };
    let rician = LinkClass {
        fading: Fading::Rician { k_db: 10.0 },
        alpha: 2.0,
    };
    let mut group = c.benchmark_group("draw_gain");
    group.bench_function("rayleigh", |b| {
        let mut i = 0u32;
        b.iter(|| {
            i = i.wrapping_add(1);
            black_box(draw_gain(&rayleigh, i, 7, 99))
        });
    });
    group.bench_function("rician_10db", |b| {
        let mut i = 0u32;
        b.iter(|| {
            i = i.wrapping_add(1);
            black_box(draw_gain(&rician, i, 7, 99))
        });
    });
    group.finish();
}

criterion_group!(benches, bench_run_drop, bench_nearest, bench_draw_gain);
criterion_main!(benches);
