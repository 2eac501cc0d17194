use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use swnoon::dataset::SeriesPoint;
use swnoon::detection::readout_distribution;
use swnoon::fitting::{eval_first_order, fit_first_order, FirstOrderParams, FitOptions};
use swnoon::herald::herald;
use swnoon::optics::{noon_network, stokes_analyzer};
use swnoon::{ClickPattern, ExperimentConfig};
use swnoon_bench::write_fixture;

fn network_apply(c: &mut Criterion) {
    let state = write_fixture(5);
    let net = noon_network(3).unwrap();
    c.bench_function("noon_network(3) apply, cutoff 5", |b| {
        b.iter(|| net.apply(black_box(&state)).unwrap())
    });
}

fn herald_n3(c: &mut Criterion) {
    let state = write_fixture(5);
    let net = noon_network(3).unwrap();
    let pattern = ClickPattern::coincidence(&net);
    c.bench_function("herald N=3 coincidence", |b| {
        b.iter(|| herald(black_box(&state), &net, &pattern).unwrap())
    });
}

fn readout(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let net = stokes_analyzer();
    let h = herald(&write_fixture(4), &net, &ClickPattern::coincidence(&net)).unwrap();
    let (det, motion) = (cfg.detector(), cfg.motion());
    c.bench_function("readout distribution, order 2", |b| {
        b.iter(|| readout_distribution(black_box(&h.branches), 150e-6, &det, &motion).unwrap())
    });
}

fn lm_fit(c: &mut Criterion) {
    let p = FirstOrderParams {
        a: 20.0,
        t: 317e-6,
        phi0: 0.3,
        tau: 200e-6,
    };
    let series = |plus: bool| -> Vec<SeriesPoint> {
        (0..25)
            .map(|i| {
                let dt = i as f64 * 25e-6;
                let (fp, fm) = eval_first_order(&p, dt);
                SeriesPoint {
                    dt,
                    value: if plus { fp } else { fm },
                    samples: 1e4,
                }
            })
            .collect()
    };
    let (plus, minus) = (series(true), series(false));
    let opts = FitOptions::new(200e-6, 1);
    c.bench_function("joint first-order fit, 25 points", |b| {
        b.iter(|| fit_first_order(black_box(&plus), black_box(&minus), &opts).unwrap())
    });
}

criterion_group!(benches, network_apply, herald_n3, readout, lm_fit);
criterion_main!(benches);
