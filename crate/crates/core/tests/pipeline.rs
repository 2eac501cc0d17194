use proptest::prelude::*;

use swnoon::config::DtGrid;
use swnoon::experiment::{herald_stats, run_fringe};
use swnoon::io::Table;
use swnoon::{ExperimentConfig, FringeDataset};

fn quick(order: u8, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        order,
        seed,
        trials_per_point: 3000,
        dt_grid: DtGrid {
            start_s: 0.0,
            stop_s: 480e-6,
            count: 17,
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn fringe_dataset_round_trips_through_csv() {
    let run = run_fringe(&quick(1, 5)).unwrap();
    let back = FringeDataset::from_csv(&run.dataset.to_csv(), Some(&run.dataset.metadata_text())).unwrap();
    assert_eq!(back.to_csv(), run.dataset.to_csv());
    assert_eq!(back.channels, run.dataset.channels);
    assert_eq!(back.metadata, run.dataset.metadata);
    for (x, y) in back.points.iter().zip(&run.dataset.points) {
        assert_eq!((x.trials, &x.counts), (y.trials, &y.counts));
        assert!((x.dt - y.dt).abs() <= 1e-15 * y.dt.abs().max(1e-6));
    }
}

#[test]
fn same_seed_same_bytes_different_seed_different_counts() {
    let a = run_fringe(&quick(2, 11)).unwrap();
    let b = run_fringe(&quick(2, 11)).unwrap();
    let c = run_fringe(&quick(2, 12)).unwrap();
    assert_eq!(a.dataset.to_csv(), b.dataset.to_csv());
    assert_eq!(a.fit.to_csv(), b.fit.to_csv());
    assert_ne!(a.dataset.to_csv(), c.dataset.to_csv());
}

#[test]
fn second_order_period_is_half_the_first() {
    let one = run_fringe(&quick(1, 21)).unwrap().fit.period().0;
    let two = run_fringe(&quick(2, 21)).unwrap().fit.period().0;
    let ratio = one / two;
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");
}

#[test]
fn herald_stats_csv_round_trips() {
    let t = herald_stats(&ExperimentConfig::default()).unwrap();
    let back = Table::parse_csv(&t.to_csv()).unwrap();
    assert_eq!(back.to_csv(), t.to_csv());
}

#[test]
fn config_json_round_trips() {
    let cfg = quick(2, 99);
    let back = ExperimentConfig::from_json(&cfg.to_json(), &[], None).unwrap();
    assert_eq!(back, cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn overrides_land_on_the_named_field(chi in 0.0f64..0.5, trials in 1u64..100_000, seed in any::<u64>()) {
        let cfg = ExperimentConfig::from_json(
            "{}",
            &[format!("chi={chi}"), format!("trials_per_point={trials}")],
            Some(&seed.to_string()),
        )
        .unwrap();
        prop_assert_eq!(cfg.chi, chi);
        prop_assert_eq!(cfg.trials_per_point, trials);
        prop_assert_eq!(cfg.seed, seed);
    }
}
