//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p kljn-trust --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    attach, id, naive_partial_sum, pick, random_topology, sparse_random_topology, Attachment,
};
use kljn_trust::fixtures::{self, REFERENCE_TRUST_MATRIX};
use kljn_trust::kljn::{
    self, simulate_bit_period, AttackModel, Attacker, KljnSessionConfig, LevelClass,
};
use kljn_trust::orchestrator::{self, Channel, EstablishOptions, RecordStatus};
use kljn_trust::trust::{self, geometric_partial_sum, tiered_sum, Evaluator};
use kljn_trust::{KillSwitchState, SensorId, Topology, TrustCoefficients, TrustCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("{what} took {elapsed:?}, limit {limit:?}")
    })
}

/// 1. Reference matrix reproduction.
fn reference_reproduction() -> Outcome {
    let t = fixtures::reference_topology().with_derived_wireless_sets();
    let coef = TrustCoefficients::closed_form();
    let ks = KillSwitchState::new();
    let start = Instant::now();
    let m = trust::trust_matrix(&t, &coef, &ks).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for (i, row) in REFERENCE_TRUST_MATRIX.iter().enumerate() {
        for (j, expected) in row.iter().enumerate() {
            let err = (m.values[i][j] - expected).abs();
            worst = worst.max(err);
            let tol = fixtures::reference_tolerance(*expected);
            ensure(err <= tol, || {
                format!(
                    "G[{}][{}] = {:.5}, expected {expected} (tol {tol})",
                    m.order[i], m.order[j], m.values[i][j]
                )
            })?;
        }
    }
    within_time(elapsed, Duration::from_millis(10), "trust_matrix")?;
    Ok(format!(
        "100/100 entries, max |err| = {worst:.5}, {elapsed:?}"
    ))
}

/// 2. Coefficient correctness.
fn coefficient_correctness() -> Outcome {
    let cf = TrustCoefficients::closed_form();
    let r = cf.residuals();
    ensure(r.max_abs() < 1e-12, || format!("residuals {r:?}"))?;
    let quad = cf.a * cf.a - 3.0 * cf.a + 1.0;
    ensure(quad.abs() < 1e-12, || format!("a^2 - 3a + 1 = {quad}"))?;
    let oracle = TrustCoefficients::fixed_point(1e-10).map_err(|e| e.to_string())?;
    let diff = cf.max_abs_diff(&oracle);
    ensure(diff < 1e-10, || format!("bisection differs by {diff}"))?;
    let rounded = (
        format!("{:.4}", cf.a),
        format!("{:.4}", cf.b),
        format!("{:.4}", cf.c),
    );
    ensure(
        rounded == ("0.3820".into(), "0.1729".into(), "0.1474".into()),
        || format!("rounded to {rounded:?}"),
    )?;
    ensure(cf.is_ordered(), || "c < b < a < 1 violated".into())?;
    Ok(format!(
        "a={:.10} b={:.10} c={:.10}, max residual {:.1e}, oracle diff {:.1e}",
        cf.a,
        cf.b,
        cf.c,
        r.max_abs(),
        diff
    ))
}

/// 3. Saturation and tier ceilings at K = W = Z = 10^6.
fn tier_ceilings() -> Outcome {
    let k = TrustCoefficients::closed_form();
    let n = 1_000_000u64;
    let sz = geometric_partial_sum(k.c, n).map_err(|e| e.to_string())?;
    let sw = geometric_partial_sum(k.b, n).map_err(|e| e.to_string())?;
    let sk = geometric_partial_sum(k.a, n).map_err(|e| e.to_string())?;
    // In f64 the sums have reached their limits; the limits themselves
    // must not exceed the ceilings beyond rounding.
    let slack = 1e-15;
    ensure(sz <= k.b + slack, || format!("S_Z(c) = {sz} > b = {}", k.b))?;
    ensure(sw + sz <= k.a + slack, || {
        format!("S_W+S_Z = {} > a", sw + sz)
    })?;
    ensure(sk + sw + sz <= 1.0 + slack, || {
        format!("total = {}", sk + sw + sz)
    })?;
    // The true gaps are geometric tails around 1e-830000, below f64 range;
    // they are checked in log space.
    let gaps = k.tier_gaps(n, n, n);
    ensure(gaps.all_positive(), || {
        format!("non-positive gap: {gaps:?}")
    })?;
    let rel = gaps.ln_relative();
    ensure(rel.iter().all(|g| *g < (1e-6f64).ln()), || {
        format!("relative gaps too large: {rel:?}")
    })?;
    // Where f64 can resolve the gap, the strict inequalities hold directly.
    for m in [1u64, 5, 10, 15] {
        let (z, w, kk) = (
            geometric_partial_sum(k.c, m).unwrap(),
            geometric_partial_sum(k.b, m).unwrap(),
            geometric_partial_sum(k.a, m).unwrap(),
        );
        ensure(z < k.b && w + z < k.a && kk + w + z < 1.0, || {
            format!("strict ceiling violated at count {m}")
        })?;
    }
    let log10 = std::f64::consts::LN_10;
    Ok(format!(
        "log10 gaps: b-S_Z={:.0}, a-S_W-S_Z={:.0}, 1-total={:.0}",
        gaps.ln_wireless_below_b / log10,
        gaps.ln_lower_below_a / log10,
        gaps.ln_total_below_one / log10
    ))
}

struct PropertyTally {
    cells: usize,
    kill_checks: usize,
    kljn_checks: usize,
    mono: [usize; 3],
    sum_checks: usize,
}

/// Checks `G_ip > G_iq` for two attached peers that differ by one in a
/// single count coordinate. Returns false when the network is too small.
fn monotone_step<R: Rng>(
    rng: &mut R,
    t: &Topology,
    coef: &TrustCoefficients,
    coord: usize,
) -> Result<bool, String> {
    let sensors: Vec<SensorId> = t.sensors().iter().cloned().collect();
    let i = sensors
        .iter()
        .max_by_key(|s| t.peer_sets(s).unwrap().kljn.len())
        .unwrap()
        .clone();
    let i_kljn: Vec<SensorId> = t.peer_sets(&i).unwrap().kljn.into_iter().collect();
    let others: Vec<SensorId> = sensors
        .iter()
        .filter(|s| **s != i && !i_kljn.contains(s))
        .cloned()
        .collect();
    let k_max = i_kljn.len().saturating_sub(usize::from(coord == 0));
    if (coord == 0 && i_kljn.is_empty()) || others.len() < 2 {
        return Ok(false);
    }
    let k0 = rng.random_range(0..=k_max.min(3));
    let spare = others.len() - 1;
    let w0 = rng.random_range(0..=spare.min(3));
    let z0 = rng.random_range(0..=(spare - w0));
    let mut ks = [k0, k0];
    let mut ws = [w0, w0];
    let mut zs = [z0, z0];
    match coord {
        0 => ks[0] += 1,
        1 => ws[0] += 1,
        _ => zs[0] += 1,
    }
    if ws[0] + zs[0] > others.len() {
        return Ok(false);
    }
    let shuffled = pick(rng, &others, others.len());
    let mutual = pick(rng, &i_kljn, ks[0]);
    let names = [id("zz-p"), id("zz-q")];
    let attachments: Vec<Attachment> = (0..2)
        .map(|n| {
            let mut kljn: Vec<SensorId> = mutual[..ks[n]].to_vec();
            kljn.extend_from_slice(&shuffled[..ws[n]]);
            let mut wireless: Vec<SensorId> = shuffled[ws[n]..ws[n] + zs[n]].to_vec();
            wireless.push(i.clone());
            Attachment {
                name: names[n].clone(),
                kljn,
                wireless,
            }
        })
        .collect();
    let t2 = attach(t, &attachments);
    let ev = Evaluator::new(&t2, coef, &KillSwitchState::new()).map_err(|e| e.to_string())?;
    for n in 0..2 {
        let got = ev.counts(&i, &names[n]).map_err(|e| e.to_string())?;
        let want = TrustCounts::new(ks[n] as u64, ws[n] as u64, zs[n] as u64);
        ensure(got == want, || {
            format!("constructed counts {got:?}, wanted {want:?}")
        })?;
    }
    let gp = ev.trust(&i, &names[0]).unwrap();
    let gq = ev.trust(&i, &names[1]).unwrap();
    let ctx =
        || format!("coordinate {coord}: G_ip = {gp}, G_iq = {gq} at K={ks:?} W={ws:?} Z={zs:?}");
    let exact = ev.compare(&i, &names[0], &names[1]).unwrap();
    ensure(exact == std::cmp::Ordering::Greater, || {
        format!("exact order {exact:?}; {}", ctx())
    })?;
    ensure(gp >= gq, || format!("rounded values decrease; {}", ctx()))?;
    // Once the step exceeds a few ulps the rounded values must separate too.
    let step = match coord {
        0 => coef.a.powi(ks[0] as i32),
        1 => coef.b.powi(ws[0] as i32),
        _ => coef.c.powi(zs[0] as i32),
    };
    if step > 8.0 * f64::EPSILON {
        ensure(gp > gq, || {
            format!("resolvable step {step:e} lost; {}", ctx())
        })?;
    }
    Ok(true)
}

/// 4. Property suite on 200 random topologies.
fn property_suite() -> Outcome {
    let start = Instant::now();
    let coef = TrustCoefficients::closed_form();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0004);
    let mut tally = PropertyTally {
        cells: 0,
        kill_checks: 0,
        kljn_checks: 0,
        mono: [0; 3],
        sum_checks: 0,
    };
    for round in 0..200 {
        let n = rng.random_range(3..=50);
        let p = rng.random_range(0.02..0.4);
        let t = random_topology(&mut rng, n, p);
        let sensors: Vec<SensorId> = t.sensors().iter().cloned().collect();
        let n_killed = rng.random_range(0..=n / 4);
        let killed = pick(&mut rng, &sensors, n_killed);
        let ks = KillSwitchState::with_killed(killed.iter().cloned());
        let ev = Evaluator::new(&t, &coef, &ks).map_err(|e| e.to_string())?;
        let m = ev.matrix();
        for (a, i) in sensors.iter().enumerate() {
            for (b, j) in sensors.iter().enumerate() {
                let g = m.values[a][b];
                tally.cells += 1;
                ensure((0.0..=1.0).contains(&g), || {
                    format!("round {round}: G[{i}][{j}] = {g} out of range")
                })?;
                if ks.is_killed(j) {
                    tally.kill_checks += 1;
                    ensure(g == 0.0, || {
                        format!("round {round}: killed {j} has G = {g}")
                    })?;
                }
                if a != b && t.is_kljn_pair(i, j) && !ks.is_killed(j) {
                    tally.kljn_checks += 1;
                    ensure(g == 1.0, || {
                        format!("round {round}: KLJN pair {i}-{j} has G = {g}")
                    })?;
                    if !ks.is_killed(i) {
                        ensure(m.values[b][a] == 1.0, || {
                            format!("round {round}: reverse KLJN pair {j}-{i} not 1")
                        })?;
                    }
                }
                if let Some(c) = m.counts[a][b] {
                    tally.sum_checks += 1;
                    let naive = naive_partial_sum(coef.a, c.k)
                        + naive_partial_sum(coef.b, c.w)
                        + naive_partial_sum(coef.c, c.z);
                    let fast = tiered_sum(&coef, c);
                    ensure((fast - naive).abs() < 1e-12, || {
                        format!("round {round}: closed form {fast} vs naive {naive} at {c:?}")
                    })?;
                    if !ks.is_killed(j) {
                        ensure(g == fast, || {
                            format!("round {round}: G differs from tiered sum")
                        })?;
                    }
                }
            }
        }
        for coord in 0..3 {
            if monotone_step(&mut rng, &t, &coef, coord)? {
                tally.mono[coord] += 1;
            }
        }
    }
    ensure(tally.mono.iter().all(|c| *c >= 100), || {
        format!("too few monotonicity checks ran: {:?}", tally.mono)
    })?;
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(5), "property suite")?;
    Ok(format!(
        "{} cells, {} kill, {} KLJN, {} sum checks, monotone K/W/Z {:?}, {elapsed:.2?}",
        tally.cells, tally.kill_checks, tally.kljn_checks, tally.sum_checks, tally.mono
    ))
}

/// 5. KLJN statistics over 10^4 attack-free periods.
fn kljn_statistics() -> Outcome {
    let start = Instant::now();
    let cfg = KljnSessionConfig::default();
    // Ten independent sessions of 1000 periods each.
    let outcomes: Vec<_> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let mut a = ChaCha8Rng::seed_from_u64(1000 + seed);
            a.set_stream(1);
            let mut b = ChaCha8Rng::seed_from_u64(1000 + seed);
            b.set_stream(2);
            (0..1000)
                .map(|_| simulate_bit_period(&cfg, &mut a, &mut b, None))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    let total = outcomes.len() as f64;
    let freq = |class: LevelClass| {
        outcomes.iter().filter(|o| o.level_class == class).count() as f64 / total
    };
    let (ll, hh, mid, und) = (
        freq(LevelClass::LL),
        freq(LevelClass::HH),
        freq(LevelClass::Intermediate),
        freq(LevelClass::Undecided),
    );
    ensure((ll - 0.25).abs() <= 0.02, || format!("LL frequency {ll}"))?;
    ensure((hh - 0.25).abs() <= 0.02, || format!("HH frequency {hh}"))?;
    ensure((mid - 0.50).abs() <= 0.02, || {
        format!("Intermediate frequency {mid}")
    })?;
    ensure(und < 0.01, || format!("Undecided frequency {und}"))?;
    let bits: Vec<bool> = outcomes.iter().filter_map(|o| o.bit).collect();
    let ones = bits.iter().filter(|b| **b).count() as f64 / bits.len() as f64;
    ensure((ones - 0.5).abs() <= 0.02, || format!("bit balance {ones}"))?;
    let disagreements = outcomes.iter().filter(|o| o.bit != o.bob_bit).count();
    ensure(disagreements == 0, || {
        format!("{disagreements} bit disagreements")
    })?;
    ensure(outcomes.iter().all(|o| !o.attack_flag), || {
        "false attack flag".into()
    })?;
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(30), "KLJN statistics")?;
    Ok(format!(
        "LL={ll:.4} HH={hh:.4} Int={mid:.4} Und={und:.4}, {} bits with ones={ones:.4}, {elapsed:.2?}",
        bits.len()
    ))
}

/// 6. Active-attack detection.
fn attack_detection() -> Outcome {
    let cfg = KljnSessionConfig::default();
    let detected_fast: usize = (0..1000u64)
        .into_par_iter()
        .map(|trial| {
            let start_period = trial % 7;
            let attacker = Attacker {
                model: AttackModel::WireSubstitution,
                start_period,
            };
            let res =
                kljn::run_key_exchange(&cfg.clone().with_seed(10_000 + trial), 128, Some(attacker))
                    .expect("attacked sessions end by detection");
            let within = res.attack_detected
                && res.key_bits.is_empty()
                && res
                    .detection_period
                    .is_some_and(|p| p >= start_period && p < start_period + 3);
            usize::from(within)
        })
        .sum();
    let rate = detected_fast as f64 / 1000.0;
    ensure(rate >= 0.99, || {
        format!("detection within 3 periods in {rate} of trials")
    })?;
    let false_positives: usize = (0..1000u64)
        .into_par_iter()
        .map(|trial| {
            let res = kljn::run_key_exchange(&cfg.clone().with_seed(20_000 + trial), 8, None)
                .expect("clean sessions complete");
            usize::from(res.attack_detected)
        })
        .sum();
    ensure(false_positives == 0, || {
        format!("{false_positives} false positives")
    })?;
    Ok(format!(
        "{detected_fast}/1000 detected within 3 periods, {false_positives}/1000 false positives"
    ))
}

/// 7. Orchestrator.
fn orchestrator_checks() -> Outcome {
    let t = fixtures::reference_topology();
    let cfg = KljnSessionConfig::default();
    let opts = EstablishOptions::default();
    let state =
        orchestrator::establish_network_keys(&t, &cfg, 42, &opts).map_err(|e| e.to_string())?;
    let (kljn_n, wireless_n) = (state.count(Channel::Kljn), state.count(Channel::Wireless));
    ensure(kljn_n == 6 && wireless_n == 39, || {
        format!("{kljn_n} KLJN + {wireless_n} wireless records")
    })?;
    ensure(
        state.records.iter().all(|r| r.status == RecordStatus::Ok),
        || "not every record established".into(),
    )?;

    let mut killed = state.clone();
    let revoked = killed
        .apply_kill_event(&id("H"), "compromised")
        .map_err(|e| e.to_string())?;
    ensure(revoked == 9, || {
        format!("killing H revoked {revoked} records")
    })?;
    let coef = TrustCoefficients::closed_form();
    let before = orchestrator::trust_report(&state, &coef).map_err(|e| e.to_string())?;
    let after = orchestrator::trust_report(&killed, &coef).map_err(|e| e.to_string())?;
    let col = after.matrix.column(&id("H")).unwrap();
    ensure(col.iter().all(|v| *v == 0.0), || {
        format!("column H after kill: {col:?}")
    })?;
    for (r0, r1) in before.matrix.values.iter().zip(&after.matrix.values) {
        for (v0, v1) in r0.iter().zip(r1) {
            ensure(v1 <= v0, || "kill raised a trust value".into())?;
        }
    }

    let again =
        orchestrator::establish_network_keys(&t, &cfg, 42, &opts).map_err(|e| e.to_string())?;
    ensure(state.to_json() == again.to_json(), || {
        "state files differ for equal seeds".into()
    })?;
    let other =
        orchestrator::establish_network_keys(&t, &cfg, 43, &opts).map_err(|e| e.to_string())?;
    ensure(state.to_json() != other.to_json(), || {
        "different seeds gave identical state".into()
    })?;
    Ok("6 KLJN + 39 wireless, kill H revoked 9, column H zero, state files byte-identical".into())
}

/// 8. Scale check.
fn scale_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0008);
    let t = sparse_random_topology(&mut rng, 1000, 6);
    let coef = TrustCoefficients::closed_form();
    let start = Instant::now();
    let m = trust::trust_matrix(&t, &coef, &KillSwitchState::new()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(
        m.values.len() == 1000 && m.values.iter().all(|r| r.len() == 1000),
        || "wrong matrix shape".into(),
    )?;
    within_time(elapsed, Duration::from_secs(10), "1000-sensor trust_matrix")?;
    Ok(format!(
        "1000 sensors, {} KLJN edges, {elapsed:.2?}",
        t.kljn_edges().len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "1 reference trust matrix reproduction",
            reference_reproduction,
        ),
        ("2 coefficient correctness", coefficient_correctness),
        ("3 saturation and tier ceilings", tier_ceilings),
        ("4 property suite, 200 random topologies", property_suite),
        ("5 KLJN level statistics", kljn_statistics),
        ("6 active-attack detection", attack_detection),
        ("7 network key orchestration", orchestrator_checks),
        ("8 1000-sensor scale check", scale_check),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
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
