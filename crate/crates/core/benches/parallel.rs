use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rydxpm::atomic::mixing_angles;
use rydxpm::dynamics::simulate_counter;
use rydxpm::exec::Exec;
use rydxpm::harness::scenario::{interaction_params, propagation_options, system_params};
use rydxpm::harness::{parse_config, presets, run_sweep};
use rydxpm::xpm::{phase_map, ProfileSize};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn overlap(c: &mut Criterion) {
    let cfg = parse_config(presets::find("fig3-a15").unwrap().config).unwrap();
    let p = system_params(&cfg).unwrap();
    let ip = interaction_params(&cfg).unwrap();
    let angles = mixing_angles(&p);
    let traj = simulate_counter(&p, &ip, cfg.interaction.sigma, &propagation_options(&cfg)).unwrap();
    let mut g = c.benchmark_group("overlap");
    g.sample_size(10);
    for n in [321, 1281] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| {
                    let map = phase_map(&traj, &ip, &angles, ProfileSize::Initial, n, exec).unwrap();
                    map.overlap(exec)
                })
            });
        }
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut cfg = parse_config(presets::find("fig3").unwrap().config).unwrap();
    cfg.propagation.step_frac = 0.02;
    let mut g = c.benchmark_group("sweep_fig3");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| run_sweep(&cfg, exec, None)));
    }
    g.finish();
}

criterion_group!(benches, overlap, sweep);
criterion_main!(benches);
