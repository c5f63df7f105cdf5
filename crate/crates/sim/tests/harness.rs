use irsopt::config::parse_value_list;
use irsopt::harness::{mean_stderr, run_sweep, CompensatedSum, Method, SweepParam, SweepSpec};
use irsopt_core::config::SystemConfig;
use proptest::prelude::*;

fn tiny_spec(param: SweepParam, values: Vec<f64>, seed: u64) -> SweepSpec {
    SweepSpec {
        param,
        values,
        trials: 3,
        base: SystemConfig {
            mt: 3,
            mr: 2,
            ms: 2,
            mi: 6,
            k_max: 8,
            seed,
            check_invariants: true,
            ..SystemConfig::default()
        },
        methods: Method::ALL.to_vec(),
        timing: false,
    }
}

proptest! {
    #[test]
    fn ranges_hit_both_ends(start in -50i32..50, step in 1i32..10, count in 1usize..40) {
        let stop = start + step * (count as i32 - 1);
        let values = parse_value_list(&format!("{start}:{step}:{stop}")).unwrap();
        prop_assert_eq!(values.len(), count);
        prop_assert_eq!(values[0], start as f64);
        prop_assert_eq!(*values.last().unwrap(), stop as f64);
        let list = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_value_list(&list).unwrap(), values);
    }

    #[test]
    fn compensated_sum_matches_exact_integers(xs in proptest::collection::vec(-1_000_000i64..1_000_000, 0..200)) {
        let mut s = CompensatedSum::default();
        for &x in &xs {
            s.add(x as f64);
        }
        prop_assert_eq!(s.value(), xs.iter().sum::<i64>() as f64);
    }

    #[test]
    fn stderr_of_constant_is_zero(x in -1e3f64..1e3, n in 1usize..50) {
        let (mean, se) = mean_stderr(&vec![x; n]);
        prop_assert!((mean - x).abs() <= 1e-12 * x.abs().max(1.0));
        prop_assert!(se.abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn stderr_of_known_sample() {
    let (mean, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(mean, 2.5);
    // sample standard deviation sqrt(5/3), divided by sqrt(4)
    assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn power_values_share_channel_draws() {
    // common random numbers: the no-IRS rate at one power level does not
    // depend on which other levels are in the sweep
    let both = run_sweep(&tiny_spec(SweepParam::PowerDb, vec![0.0, 10.0], 5)).unwrap();
    let alone = run_sweep(&tiny_spec(SweepParam::PowerDb, vec![10.0], 5)).unwrap();
    for m in Method::ALL {
        assert_eq!(both.row(10.0, m).unwrap(), alone.row(10.0, m).unwrap());
    }
}

#[test]
fn seed_changes_results() {
    let a = run_sweep(&tiny_spec(SweepParam::PowerDb, vec![5.0], 1)).unwrap();
    let b = run_sweep(&tiny_spec(SweepParam::PowerDb, vec![5.0], 2)).unwrap();
    assert_ne!(a.means(Method::NoIrs), b.means(Method::NoIrs));
}

#[test]
fn dimension_sweeps_validate_every_value() {
    let err = run_sweep(&tiny_spec(SweepParam::Ms, vec![1.0, 3.0], 1)).unwrap_err();
    assert!(err.to_string().contains("ms"), "{err}");
}
