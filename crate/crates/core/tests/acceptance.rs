//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line each.

mod support;

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use popcast::allocation::{
    classify_regime, mbps, popularity_allocate, rank_sessions, Regime, SessionCensus, SystemParams,
    RATE_REL_TOL,
};
use popcast::harness::{random_census, run_sweep, snapshots_jsonl, Popularity, ScenarioConfig};
use popcast::layers::LayerProfile;
use popcast::satisfaction::{compare_schemes, equal_share_satisfaction, SATISFACTION_TOL};
use popcast::sim::{
    generate_trace, run_trace, EventKind, EventMix, SimEvent, Snapshot, TraceGenConfig,
};
use popcast::Error;
use support::{
    check_allocation, exact_cascade, rel_close, to_f64, WORKED_COUNTS, WORKED_RATES_MBPS,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn ac1_worked_allocation() -> Outcome {
    let params = SystemParams::reference();
    let census = SessionCensus::from_counts(&WORKED_COUNTS).unwrap();
    let (alloc, _) =
        popularity_allocate(&params, &rank_sessions(&census)).map_err(|e| e.to_string())?;
    for (s, want) in alloc.sessions.iter().zip(WORKED_RATES_MBPS) {
        ensure!(
            rel_close(s.rate_bps, mbps(want), 1e-9),
            "rank {}: {} vs {} Mbps",
            s.rank,
            s.rate_bps / 1e6,
            want
        );
    }
    ensure!(
        rel_close(alloc.total_bps(), mbps(30.0), 1e-9),
        "total {} bit/s",
        alloc.total_bps()
    );
    let cmp = compare_schemes(&params, &census).map_err(|e| e.to_string())?;
    ensure!(
        (cmp.avg_satisfaction_popularity - 0.8891234375).abs() <= 1e-9,
        "popularity average {}",
        cmp.avg_satisfaction_popularity
    );
    ensure!(
        cmp.avg_satisfaction_equal == 0.75,
        "equal average {}",
        cmp.avg_satisfaction_equal
    );
    ensure!(
        cmp.improved_users == 162 && cmp.degraded_users == 38,
        "improved {} degraded {}",
        cmp.improved_users,
        cmp.degraded_users
    );
    Ok(format!(
        "avg_prop={} avg_equal={} improved={} degraded={}",
        cmp.avg_satisfaction_popularity,
        cmp.avg_satisfaction_equal,
        cmp.improved_users,
        cmp.degraded_users
    ))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (SystemParams, Vec<u64>) {
    let m = rng.gen_range(1..=50usize);
    let total = rng.gen_range(0..=1000u64);
    let params = if rng.gen_bool(0.5) {
        SystemParams::reference()
    } else {
        let min = rng.gen_range(0.05..3.0);
        let max = min + rng.gen_range(0.0..4.0);
        let capacity = min * m as f64 * rng.gen_range(1.0..(max / min * 1.2).max(1.0 + 1e-9));
        SystemParams::from_mbps(capacity, max, min).unwrap()
    };
    let census = if rng.gen_bool(0.1) {
        // Force the all-equal case regularly.
        let k = total / m as u64;
        vec![k; m]
    } else {
        let dist = if rng.gen_bool(0.5) {
            Popularity::Uniform
        } else {
            Popularity::Zipf {
                s: rng.gen_range(0.2..2.0),
            }
        };
        random_census(m, total, dist, rng.gen())
            .unwrap()
            .iter()
            .map(|(_, k)| k)
            .collect()
    };
    (params, census)
}

fn ac2_dominance_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut checked = 0;
    let mut constrained = 0;
    while checked < 10_000 {
        let (params, counts) = random_instance(&mut rng);
        let m = counts.len();
        let regime = classify_regime(&params, m);
        if regime == Regime::Infeasible {
            continue;
        }
        checked += 1;
        if regime == Regime::Constrained {
            constrained += 1;
        }
        let census = SessionCensus::from_counts(&counts).unwrap();
        let (alloc, _) =
            popularity_allocate(&params, &rank_sessions(&census)).map_err(|e| e.to_string())?;
        check_allocation(&params, &alloc).map_err(|e| format!("{e} (counts {counts:?})"))?;

        let scaled =
            SessionCensus::from_counts(&counts.iter().map(|k| k * 7).collect::<Vec<_>>()).unwrap();
        let (scaled_alloc, _) =
            popularity_allocate(&params, &rank_sessions(&scaled)).map_err(|e| e.to_string())?;
        for (a, b) in alloc.rates().zip(scaled_alloc.rates()) {
            ensure!(rel_close(a, b, RATE_REL_TOL), "scale invariance {a} vs {b}");
        }

        let cmp = compare_schemes(&params, &census).map_err(|e| e.to_string())?;
        ensure!(
            cmp.avg_satisfaction_popularity >= cmp.avg_satisfaction_equal - SATISFACTION_TOL,
            "dominance violated: {} < {}",
            cmp.avg_satisfaction_popularity,
            cmp.avg_satisfaction_equal
        );
        if counts.iter().all(|&k| k == counts[0]) {
            ensure!(
                (cmp.avg_satisfaction_popularity - cmp.avg_satisfaction_equal).abs()
                    <= SATISFACTION_TOL,
                "equal counts but averages differ"
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2}s");
    Ok(format!(
        "{checked} instances ({constrained} constrained) in {secs:.2}s"
    ))
}

// Non-increasing vectors over `values` of the given length.
fn multisets(values: &[u64], len: usize) -> Vec<Vec<u64>> {
    fn go(values: &[u64], len: usize, start: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..values.len() {
            cur.push(values[i]);
            go(values, len, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(values, len, 0, &mut Vec::new(), &mut out);
    out
}

fn ac3_exact_oracle() -> Outcome {
    // Descending so every generated vector is already ranked.
    let values = [100, 10, 5, 2, 1, 0];
    let (max_rate, min_rate) = (2_000i64, 600i64);
    let mut cases = 0;
    for m in 1..=6usize {
        let mi = m as i64;
        let capacities = [
            30_000,
            min_rate * mi,
            1_000 * mi + 7,
            1_300 * mi,
            max_rate * mi - 1,
        ];
        for counts in multisets(&values, m) {
            for &capacity in &capacities {
                let params = SystemParams::new(
                    capacity as f64 * 1e3,
                    max_rate as f64 * 1e3,
                    min_rate as f64 * 1e3,
                )
                .unwrap();
                let census = SessionCensus::from_counts(&counts).unwrap();
                let (alloc, _) = popularity_allocate(&params, &rank_sessions(&census))
                    .map_err(|e| e.to_string())?;
                let exact = exact_cascade(capacity, max_rate, min_rate, &counts);
                for (f, e) in alloc.rates().zip(&exact) {
                    let e = to_f64(e) * 1e3;
                    ensure!(
                        rel_close(f, e, 1e-9),
                        "C={capacity} counts {counts:?}: {f} vs {e}"
                    );
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} censuses match exact rationals"))
}

fn ac4_regime_boundaries() -> Outcome {
    let params = SystemParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in 1..=15 {
        for _ in 0..20 {
            let census = random_census(m, 200, Popularity::Zipf { s: 1.0 }, rng.gen()).unwrap();
            let (alloc, _) =
                popularity_allocate(&params, &rank_sessions(&census)).map_err(|e| e.to_string())?;
            ensure!(
                alloc.rates().all(|r| r == mbps(2.0)),
                "M={m} not all at cap"
            );
            let cmp = compare_schemes(&params, &census).map_err(|e| e.to_string())?;
            ensure!(
                cmp.avg_satisfaction_equal == 1.0 && cmp.avg_satisfaction_popularity == 1.0,
                "M={m} satisfaction below 1"
            );
            ensure!(
                equal_share_satisfaction(&params, m) == 1.0,
                "M={m} equal share below 1"
            );
        }
    }
    for m in [51, 60, 100] {
        let census = random_census(m, 200, Popularity::Uniform, 1).unwrap();
        ensure!(
            matches!(
                popularity_allocate(&params, &rank_sessions(&census)),
                Err(Error::InfeasibleCapacity { .. })
            ),
            "M={m} not infeasible"
        );
        let status = Command::new(env!("CARGO_BIN_EXE_popcast"))
            .args(["allocate", "--sessions", &m.to_string(), "--users", "200"])
            .output()
            .map_err(|e| e.to_string())?
            .status;
        ensure!(
            status.code() == Some(2),
            "CLI exit {:?} for M={m}",
            status.code()
        );
    }
    Ok("M<=15 saturated, M>=51 infeasible with exit code 2".into())
}

fn ac5_fig2_analog() -> Outcome {
    let mut notes = Vec::new();
    for dist in [Popularity::Uniform, Popularity::Zipf { s: 1.0 }] {
        let config = ScenarioConfig::reference(5, 40, dist);
        let outcome = run_sweep(&config).map_err(|e| e.to_string())?;
        ensure!(
            outcome.skipped.is_empty(),
            "{dist}: skipped {:?}",
            outcome.skipped
        );
        ensure!(
            outcome.rows.len() == 36,
            "{dist}: {} rows",
            outcome.rows.len()
        );
        for row in &outcome.rows {
            let m = row.sessions;
            let (eq, pop) = (row.avg_sat_equal.mean, row.avg_sat_popularity.mean);
            ensure!(pop >= eq - SATISFACTION_TOL, "{dist} M={m}: {pop} < {eq}");
            if m <= 15 {
                ensure!(eq == 1.0 && pop == 1.0, "{dist} M={m}: means {eq} {pop}");
            } else {
                let want = 30.0 / (2.0 * m as f64);
                ensure!(
                    (eq - want).abs() <= SATISFACTION_TOL,
                    "{dist} M={m}: equal {eq} vs {want}"
                );
            }
        }
        for w in outcome.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            ensure!(
                b.avg_sat_equal.mean <= a.avg_sat_equal.mean + SATISFACTION_TOL,
                "{dist}: equal mean rises from M={} to M={}",
                a.sessions,
                b.sessions
            );
            ensure!(
                b.avg_sat_popularity.mean <= a.avg_sat_popularity.mean + SATISFACTION_TOL,
                "{dist}: popularity mean rises from M={} ({}) to M={} ({})",
                a.sessions,
                a.avg_sat_popularity.mean,
                b.sessions,
                b.avg_sat_popularity.mean
            );
        }
        let last = outcome.rows.last().unwrap();
        notes.push(format!(
            "{dist} M=40: prop={:.4} equal={:.4}",
            last.avg_sat_popularity.mean, last.avg_sat_equal.mean
        ));
    }
    Ok(notes.join("; "))
}

// First-run means of the zipf(s=1), M=20, K=200, seed 7 sweep row.
const FIG3_IMPROVED_MEAN: f64 = 161.16000000000005;
const FIG3_DEGRADED_MEAN: f64 = 38.84;

fn ac6_fig3_analog() -> Outcome {
    let config = ScenarioConfig::reference(20, 20, Popularity::Zipf { s: 1.0 });
    let outcome = run_sweep(&config).map_err(|e| e.to_string())?;
    let row = &outcome.rows[0];
    ensure!(
        row.improved.mean > row.degraded.mean,
        "improved {} <= degraded {}",
        row.improved.mean,
        row.degraded.mean
    );
    ensure!(
        row.improved.mean == FIG3_IMPROVED_MEAN && row.degraded.mean == FIG3_DEGRADED_MEAN,
        "fixture drift: improved {} degraded {}",
        row.improved.mean,
        row.degraded.mean
    );
    Ok(format!(
        "improved={} degraded={}",
        row.improved.mean, row.degraded.mean
    ))
}

fn check_snapshot(
    params: &SystemParams,
    profile: &LayerProfile,
    snap: &Snapshot,
) -> Result<(), String> {
    check_allocation(params, &snap.popularity).map_err(|e| format!("t={}: {e}", snap.time))?;
    let cmp = &snap.comparison;
    ensure!(
        cmp.improved_users + cmp.degraded_users + cmp.unchanged_users == snap.census.total_users(),
        "t={}: user partition",
        snap.time
    );
    ensure!(
        cmp.delta_avg >= -SATISFACTION_TOL,
        "t={}: dominance",
        snap.time
    );
    let mut granted = 0.0;
    for (plan, s) in snap.plans.iter().zip(&snap.popularity.sessions) {
        ensure!(plan.session_id == s.id, "t={}: plan order", snap.time);
        ensure!(
            plan.granted_bps <= s.rate_bps * (1.0 + RATE_REL_TOL),
            "t={}: granted above allocation",
            snap.time
        );
        ensure!(
            plan.residual_bps < profile.enhancement_bps(),
            "t={}: residual too large",
            snap.time
        );
        granted += plan.granted_bps;
    }
    ensure!(
        granted <= params.capacity_bps() * (1.0 + RATE_REL_TOL),
        "t={}: granted total above capacity",
        snap.time
    );
    for w in snap.plans.windows(2) {
        ensure!(
            w[0].enhancement_count >= w[1].enhancement_count,
            "t={}: layer order",
            snap.time
        );
    }
    Ok(())
}

fn churn_runs() -> Vec<(SystemParams, SessionCensus, Vec<SimEvent>)> {
    let worked = SessionCensus::from_counts(&WORKED_COUNTS).unwrap();
    let mut runs = Vec::new();
    for (seed, mix) in [
        (1, EventMix::default()),
        (2, EventMix::switch_only()),
        (3, EventMix::default()),
    ] {
        let config = TraceGenConfig {
            event_count: 400,
            initial: worked.clone(),
            mix,
            mean_gap_s: 0.25,
        };
        runs.push((
            SystemParams::reference(),
            worked.clone(),
            generate_trace(&config, seed),
        ));
    }
    let tight = SystemParams::from_mbps(12.5, 2.0, 0.6).unwrap();
    let census = random_census(12, 150, Popularity::Zipf { s: 1.2 }, 77).unwrap();
    let config = TraceGenConfig {
        event_count: 300,
        initial: census.clone(),
        mix: EventMix::default(),
        mean_gap_s: 1.0,
    };
    runs.push((tight, census, generate_trace(&config, 4)));
    runs
}

fn ac7_simulator() -> Outcome {
    let params = SystemParams::reference();
    let profile = LayerProfile::default();
    let worked = SessionCensus::from_counts(&WORKED_COUNTS).unwrap();

    let mut reversibility = 0;
    for id in ["s01", "s07", "s20"] {
        let trace = [
            SimEvent::new(1.0, EventKind::UserJoin { session: id.into() }),
            SimEvent::new(2.0, EventKind::UserLeave { session: id.into() }),
        ];
        let out =
            run_trace(&params, &profile, worked.clone(), &trace).map_err(|e| e.to_string())?;
        ensure!(out.rejected.is_empty(), "join/leave rejected");
        let (first, last) = (&out.snapshots[0], out.snapshots.last().unwrap());
        ensure!(
            first.popularity == last.popularity,
            "allocation not restored after {id}"
        );
        ensure!(first.plans == last.plans, "layers not restored after {id}");
        reversibility += 1;
    }

    let gen = TraceGenConfig {
        event_count: 10,
        initial: worked.clone(),
        mix: EventMix::default(),
        mean_gap_s: 1.0,
    };
    let a = run_trace(&params, &profile, worked.clone(), &generate_trace(&gen, 10))
        .map_err(|e| e.to_string())?;
    let b = run_trace(&params, &profile, worked.clone(), &generate_trace(&gen, 10))
        .map_err(|e| e.to_string())?;
    ensure!(
        a.snapshots.len() == 11,
        "expected 11 snapshots, got {}",
        a.snapshots.len()
    );
    ensure!(
        snapshots_jsonl(&a.snapshots) == snapshots_jsonl(&b.snapshots),
        "serialized snapshots differ between runs"
    );

    let mut snapshots = 0;
    for (params, census, trace) in churn_runs() {
        let out = run_trace(&params, &profile, census, &trace).map_err(|e| e.to_string())?;
        for snap in &out.snapshots {
            check_snapshot(&params, &profile, snap)?;
            snapshots += 1;
        }
    }
    Ok(format!(
        "{reversibility} join/leave reversals, deterministic replay, {snapshots} snapshots checked"
    ))
}

fn ac8_layer_quantizer() -> Outcome {
    let profiles = [
        LayerProfile::default(),
        LayerProfile::from_mbps(0.6, 0.35).unwrap(),
        LayerProfile::from_mbps(0.3, 0.1).unwrap(),
    ];
    let mut snapshots = 0;
    for profile in &profiles {
        for (params, census, trace) in churn_runs() {
            let out = run_trace(&params, profile, census, &trace).map_err(|e| e.to_string())?;
            for snap in &out.snapshots {
                check_snapshot(&params, profile, snap)?;
                snapshots += 1;
            }
        }
    }
    Ok(format!(
        "{snapshots} quantized snapshots across {} profiles",
        profiles.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 worked allocation", ac1_worked_allocation),
        ("AC2 dominance property suite", ac2_dominance_suite),
        ("AC3 exact-arithmetic oracle", ac3_exact_oracle),
        ("AC4 regime boundaries", ac4_regime_boundaries),
        ("AC5 satisfaction sweep analog", ac5_fig2_analog),
        ("AC6 improved vs degraded analog", ac6_fig3_analog),
        ("AC7 simulator", ac7_simulator),
        ("AC8 layer quantizer", ac8_layer_quantizer),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
