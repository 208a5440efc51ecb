mod support;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use popcast::allocation::{popularity_allocate, rank_sessions, SessionCensus, SystemParams};
use support::{exact_cascade, rel_close, to_f64, WORKED_COUNTS, WORKED_RATES_MBPS};

fn kbps_params(capacity: i64, max_rate: i64, min_rate: i64) -> SystemParams {
    SystemParams::new(
        capacity as f64 * 1e3,
        max_rate as f64 * 1e3,
        min_rate as f64 * 1e3,
    )
    .unwrap()
}

fn float_cascade(params: &SystemParams, counts: &[u64]) -> Vec<f64> {
    let ranked = rank_sessions(&SessionCensus::from_counts(counts).unwrap());
    let (alloc, _) = popularity_allocate(params, &ranked).unwrap();
    alloc.rates().collect()
}

#[test]
fn oracle_reproduces_worked_vector_exactly() {
    let exact = exact_cascade(30_000, 2_000, 600, &WORKED_COUNTS);
    for (got, want) in exact.iter().zip(WORKED_RATES_MBPS) {
        // 1e-3 Mbps = 1 kbps; every worked value is a whole number of bps.
        let want_bps = (want * 1e6).round() as i64;
        assert_eq!(
            got * BigRational::from_integer(BigInt::from(1000)),
            BigRational::from_integer(BigInt::from(want_bps))
        );
    }
    let weighted: BigRational = exact
        .iter()
        .zip(WORKED_COUNTS)
        .map(|(r, k)| r * BigRational::from_integer(BigInt::from(k)))
        .sum();
    // 355.649375 Mbps-users = 355649.375 kbps-users.
    assert_eq!(
        weighted,
        BigRational::new(BigInt::from(355_649_375), BigInt::from(1000))
    );
}

#[test]
fn oracle_two_sessions() {
    let exact = exact_cascade(3_000, 2_000, 600, &[190, 10]);
    assert_eq!(to_f64(&exact[0]), 2000.0);
    assert_eq!(to_f64(&exact[1]), 1000.0);
}

#[test]
fn worked_vector_matches_float_path() {
    let params = SystemParams::reference();
    let rates = float_cascade(&params, &WORKED_COUNTS);
    let exact = exact_cascade(30_000, 2_000, 600, &WORKED_COUNTS);
    for (f, e) in rates.iter().zip(&exact) {
        assert!(rel_close(*f, to_f64(e) * 1e3, 1e-9));
    }
}

fn census_strategy() -> impl Strategy<Value = (i64, i64, i64, Vec<u64>)> {
    (1usize..=8, 100i64..=1000, 0i64..=2000).prop_flat_map(|(m, min_rate, extra)| {
        let max_rate = min_rate + extra;
        let lo = min_rate * m as i64;
        let hi = (max_rate * m as i64 * 6 / 5).max(lo);
        (
            lo..=hi,
            Just(max_rate),
            Just(min_rate),
            prop::collection::vec(0u64..=1000, m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn float_cascade_matches_exact_rationals((capacity, max_rate, min_rate, counts) in census_strategy()) {
        let params = kbps_params(capacity, max_rate, min_rate);
        let mut sorted = counts.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let exact = exact_cascade(capacity, max_rate, min_rate, &sorted);
        let rates = float_cascade(&params, &counts);
        for (f, e) in rates.iter().zip(&exact) {
            let e = to_f64(e) * 1e3;
            prop_assert!(rel_close(*f, e, 1e-9), "{} vs {}", f, e);
        }
    }
}
