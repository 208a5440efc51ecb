#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use popcast::allocation::{Allocation, Regime, SystemParams, RATE_REL_TOL};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact evaluation of the popularity cascade.
///
/// Rates are integers in kbps, counts must already be sorted non-increasing.
/// Written straight from the recurrence, with the surplus coefficient in its
/// `(M/K)(C/M - min)` form, so it shares no code path with the library.
pub fn exact_cascade(
    capacity: i64,
    max_rate: i64,
    min_rate: i64,
    counts: &[u64],
) -> Vec<BigRational> {
    let m = counts.len() as i64;
    let total: u64 = counts.iter().sum();
    if max_rate * m <= capacity {
        return vec![rat(max_rate); counts.len()];
    }
    assert!(
        min_rate * m <= capacity,
        "oracle called on an infeasible census"
    );
    if total == 0 {
        return vec![rat(capacity) / rat(m); counts.len()];
    }
    let a = (rat(m) / rat(total as i64)) * (rat(capacity) / rat(m) - rat(min_rate));
    let diff = rat(max_rate - min_rate);
    let mut carries: Vec<BigRational> = Vec::new();
    let mut rates = Vec::new();
    for (idx, &k) in counts.iter().enumerate() {
        let rank = idx as i64 + 1;
        let mut s = a.clone() * rat(k as i64);
        for x in &carries {
            s += x.clone();
        }
        let carry = if s > diff && rank < m {
            (s.clone() - diff.clone()) / rat(m - rank)
        } else {
            BigRational::zero()
        };
        if rank == m {
            assert!(s < diff, "exact cascade overflowed at the last rank");
        }
        carries.push(carry);
        rates.push(if s >= diff {
            rat(max_rate)
        } else {
            rat(min_rate) + s
        });
    }
    rates
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Checks conservation, bounds and rank ordering of a popularity allocation.
pub fn check_allocation(params: &SystemParams, alloc: &Allocation) -> Result<(), String> {
    let m = alloc.sessions.len();
    let rates: Vec<f64> = alloc.rates().collect();
    let c = params.capacity_bps();
    let fair = c / m as f64;
    for w in alloc.sessions.windows(2) {
        if w[0].users < w[1].users {
            return Err(format!("ranking not non-increasing at rank {}", w[0].rank));
        }
        if w[0].rate_bps < w[1].rate_bps {
            return Err(format!(
                "rates not non-increasing at rank {}: {} < {}",
                w[0].rank, w[0].rate_bps, w[1].rate_bps
            ));
        }
        if w[0].users == w[1].users && w[0].rate_bps != w[1].rate_bps {
            return Err(format!(
                "equal counts got unequal rates at rank {}",
                w[0].rank
            ));
        }
    }
    match alloc.regime {
        Regime::Saturated => {
            if rates.iter().any(|&r| r != params.max_session_bps()) {
                return Err("saturated allocation below the cap".into());
            }
        }
        Regime::Constrained => {
            let total: f64 = rates.iter().sum();
            if (total - c).abs() > RATE_REL_TOL * c {
                return Err(format!("conservation: total {total} vs capacity {c}"));
            }
            for &r in &rates {
                if r < params.min_session_bps() || r > params.max_session_bps() {
                    return Err(format!("rate {r} outside bounds"));
                }
            }
            let slack = RATE_REL_TOL * fair;
            if rates[0] < fair - slack {
                return Err(format!("top rate {} below fair share {fair}", rates[0]));
            }
            if rates[m - 1] > fair + slack {
                return Err(format!(
                    "bottom rate {} above fair share {fair}",
                    rates[m - 1]
                ));
            }
        }
        Regime::Infeasible => return Err("infeasible allocation produced".into()),
    }
    Ok(())
}

pub const WORKED_COUNTS: [u64; 20] = [
    40, 30, 20, 15, 12, 10, 10, 9, 8, 8, 7, 6, 5, 5, 4, 3, 3, 2, 2, 1,
];

pub const WORKED_RATES_MBPS: [f64; 20] = [
    2.0, 2.0, 2.0, 2.0, 1.920625, 1.740625, 1.740625, 1.650625, 1.560625, 1.560625, 1.470625,
    1.380625, 1.290625, 1.290625, 1.200625, 1.110625, 1.110625, 1.020625, 1.020625, 0.930625,
];
