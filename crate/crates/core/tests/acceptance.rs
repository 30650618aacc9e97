//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The tests share a lock so that their timing budgets are measured on an
//! otherwise idle process.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use wtot_core::analysis::{simulate_attacks, AttackerId};
use wtot_core::bounds::{
    corollary_rate, general_lower_bound, grid_lower_bound, lower_bound_besbc, upper_bound, RateConstants,
};
use wtot_core::channel::ChannelParams;
use wtot_core::hash::LinearHash;
use wtot_core::protocol::{derive_dimensions, ProtocolConfig, SetCase};
use wtot_core::rng::{substream, Stream};
use wtot_core::BitVec;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

// Written straight to the process stdout so the line survives output capture.
fn verdict(id: u8, name: &str, ok: bool, detail: &str) {
    let line = format!("criterion {id} {}: {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
}

fn ch(e1: f64, e2: f64, e3: f64) -> ChannelParams {
    ChannelParams::new(e1, e2, e3).unwrap()
}

fn tenths(lo: u32, hi: u32) -> impl Iterator<Item = f64> {
    (lo..=hi).map(|i| f64::from(i) / 10.0)
}

#[test]
fn criterion_1_bounds_meet_when_eps2_ge_eps3() {
    let _g = serial();
    let start = Instant::now();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for e1 in tenths(1, 9) {
        for e3 in tenths(1, 9) {
            let first = (e3 * 10.0).round() as u32;
            for e2 in tenths(first, 10) {
                let p = ch(e1, e2, e3);
                checked += 1;
                match lower_bound_besbc(&p) {
                    Some(l) if l.to_bits() == upper_bound(&p).to_bits() => {}
                    other => mismatches.push((p, other)),
                }
            }
        }
    }
    let spot_a = upper_bound(&ch(0.5, 1.0, 0.5));
    let spot_b = upper_bound(&ch(0.4, 0.9, 0.5));
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty()
        && (spot_a - 0.25).abs() <= 1e-12
        && (spot_b - 0.30).abs() <= 1e-12
        && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "capacity meeting",
        ok,
        &format!(
            "{checked} grid points, {} mismatches; upper(0.5,1,0.5) = {spot_a}, upper(0.4,0.9,0.5) = {spot_b}; {elapsed:?}",
            mismatches.len()
        ),
    );
}

#[test]
fn criterion_2_corollary_matches_optimizer() {
    let _g = serial();
    let start = Instant::now();
    let step = 0.05;
    let tol = 2e-3;
    let axis: Vec<f64> = (0..=20).map(|i| f64::from(i) * step).collect();
    let mut points = 0;
    let mut rate_misses = 0;
    let mut rate_misses_above = 0;
    let mut corner_misses = 0;
    let mut corner_misses_above = 0;
    let mut worst = (0.0, None);
    for &e1 in &axis {
        for &e2 in &axis {
            for &e3 in &axis {
                let p = ch(e1, e2, e3);
                let lb = general_lower_bound(&RateConstants::besbc(&p), e1).unwrap();
                let cor = corollary_rate(&p);
                points += 1;
                let diff = (lb.rate - cor).abs();
                if diff > tol {
                    rate_misses += 1;
                    if e2 >= e3 {
                        rate_misses_above += 1;
                    }
                }
                if diff > worst.0 {
                    worst = (diff, Some((p, cor, lb.rate)));
                }
                let a = lb.argmax;
                let corner_gap = if e1 <= 0.5 { e1 } else { 1.0 - e1 };
                if (a.gamma1 - (1.0 - e1)).abs() > 1e-3 || ((a.gamma1 - a.gamma2) - corner_gap).abs() > 1e-3 {
                    corner_misses += 1;
                    if e2 >= e3 {
                        corner_misses_above += 1;
                    }
                }
            }
        }
    }
    // The exact optimizer must dominate an independent brute-force search.
    let mut oracle_violations = 0;
    for e1 in tenths(0, 10) {
        for e2 in tenths(0, 10) {
            for e3 in tenths(0, 10) {
                let c = RateConstants::besbc(&ch(e1, e2, e3));
                let exact = general_lower_bound(&c, e1).unwrap().rate;
                let grid = grid_lower_bound(&c, e1, 40).unwrap().rate;
                if grid > exact + 1e-12 {
                    oracle_violations += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let (worst_diff, worst_at) = worst;
    let worst_text = worst_at.map_or(String::new(), |(p, cor, opt)| {
        format!(
            "; worst at ({}, {}, {}): closed form {cor:.4} vs optimum {opt:.4} (|diff| {worst_diff:.4})",
            p.eps1, p.eps2, p.eps3
        )
    });
    let ok = rate_misses == 0 && corner_misses == 0 && oracle_violations == 0 && elapsed < Duration::from_secs(60);
    verdict(
        2,
        "closed form vs optimizer",
        ok,
        &format!(
            "{points} points, {rate_misses} off by more than {tol} ({rate_misses_above} with eps2 >= eps3), \
             {corner_misses} argmax away from the corner points ({corner_misses_above} with eps2 >= eps3), {oracle_violations} grid-oracle violations{worst_text}; {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_3_gap_below_diagonal() {
    let _g = serial();
    let p = ch(0.4, 0.2, 0.5);
    let cor = corollary_rate(&p);
    let up = upper_bound(&p);
    // min{0.5·0.6, 0.4, ½(0.4·0.2 + 0.5·0.6)} = min{0.30, 0.40, 0.19}
    let ok = (cor - 0.18).abs() <= 1e-12 && (up - 0.19).abs() <= 1e-12 && cor < up;
    verdict(
        3,
        "gap existence",
        ok,
        &format!("corollary(0.4,0.2,0.5) = {cor}, upper = {up}, gap = {}", up - cor),
    );
}

#[test]
fn criterion_4_protocol_correctness() {
    let _g = serial();
    let start = Instant::now();
    let config = ProtocolConfig::at_fraction_of_capacity(20_000, 0.8, ch(0.5, 0.9, 0.4));
    let report = simulate_attacks(&config, 1000, &[], 4).unwrap();
    let elapsed = start.elapsed();
    let rate = report.aborts.rate();
    let ok = report.completed == 1000
        && report.decoding_errors == 0
        && report.order_bit_mismatches == 0
        && rate <= report.chernoff_bound
        && elapsed < Duration::from_secs(30);
    verdict(
        4,
        "protocol correctness",
        ok,
        &format!(
            "r = {:.3}, {} runs completed, {} decoding errors, {} order-bit mismatches, abort rate {rate} <= bound {:.3e}; {elapsed:?}",
            config.rate, report.completed, report.decoding_errors, report.order_bit_mismatches, report.chernoff_bound
        ),
    );
}

#[test]
fn criterion_5_set_cases() {
    let _g = serial();
    let cases = [
        (SetCase::ErasedSubset, ProtocolConfig::new(20_000, 0.2, ch(0.5, 1.0, 0.5))),
        (SetCase::PaddedErasures, ProtocolConfig::new(20_000, 0.2, ch(0.3, 0.6, 0.5))),
        (
            SetCase::Overlapping,
            ProtocolConfig::new(20_000, 0.104, ch(0.45, 1.0, 0.2)).with_slacks(0.01, 0.01, 0.001, 0.01),
        ),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (i, (case, config)) in cases.iter().enumerate() {
        let dims = derive_dimensions(config).unwrap();
        let report = simulate_attacks(config, 200, &[], 50 + i as u64).unwrap();
        let case_ok = dims.case == *case
            && report.completed == report.trials
            && report.decoding_errors == 0
            && report.bob_audit_failures == 0
            && report.min_bob_erased.is_some_and(|m| m as f64 >= config.rate * config.n as f64);
        ok &= case_ok;
        details.push(format!(
            "case {}: {}/{} runs, {} errors, min erasures in unselected set {} vs nr {}",
            dims.case.id(),
            report.completed,
            report.trials,
            report.decoding_errors,
            report.min_bob_erased.unwrap_or(0),
            config.rate * config.n as f64
        ));
    }
    verdict(5, "case coverage", ok, &details.join("; "));
}

#[test]
fn criterion_6_privacy_suite() {
    let _g = serial();
    let mut ok = true;
    let mut details = Vec::new();
    for (label, channel) in [("IEBC", ch(0.5, 0.4, 0.4)), ("DEBC", ch(0.5, 1.0, 0.4))] {
        let config = ProtocolConfig::at_fraction_of_capacity(10_000, 0.8, channel);
        let report = simulate_attacks(&config, 10_000, &AttackerId::ALL, 6).unwrap();
        ok &= report.completed == 10_000 && report.decoding_errors == 0;
        for (id, e) in &report.attacks {
            ok &= e.consistent_with_guessing();
            details.push(format!("{label} {id} {:.4} ± {:.4}", e.accuracy, e.ci_halfwidth));
        }
    }
    verdict(6, "privacy suite", ok, &details.join(", "));
}

#[test]
fn criterion_7_unmasked_order_leaks_choice() {
    let _g = serial();
    let config = ProtocolConfig::at_fraction_of_capacity(10_000, 0.8, ch(0.5, 1.0, 0.4)).without_order_mask();
    let report = simulate_attacks(&config, 1000, &[AttackerId::EveGuessesC], 7).unwrap();
    let e = report.attacks[0].1;
    verdict(
        7,
        "ablation leak",
        e.accuracy >= 0.9,
        &format!("eve-c without the order bit: accuracy {} over {} runs", e.accuracy, e.trials),
    );
}

#[test]
fn criterion_8_hash_universality() {
    let _g = serial();
    let (m, l) = (64, 16);
    let pairs = 1_000_000u32;
    let mut rng = substream(8, Stream::Attacker);
    let mut collisions = 0u32;
    for _ in 0..pairs {
        let h = LinearHash::sample(m, l, &mut rng).unwrap();
        let a = BitVec::random(m, &mut rng);
        let mut b = BitVec::random(m, &mut rng);
        while b == a {
            b = BitVec::random(m, &mut rng);
        }
        collisions += u32::from(h.apply(&a).unwrap() == h.apply(&b).unwrap());
    }
    let expected = f64::from(pairs) / 65_536.0;
    let within = (f64::from(collisions) - expected).abs() <= 4.0 * expected.sqrt();

    let mut linear_failures = 0;
    for _ in 0..10_000 {
        let h = LinearHash::sample(256, 16, &mut rng).unwrap();
        let a = BitVec::random(256, &mut rng);
        let b = BitVec::random(256, &mut rng);
        if h.apply(&a.xor(&b)).unwrap() != h.apply(&a).unwrap().xor(&h.apply(&b).unwrap()) {
            linear_failures += 1;
        }
    }
    verdict(
        8,
        "hash universality",
        within && linear_failures == 0,
        &format!(
            "{collisions} collisions in {pairs} pairs (expected {expected:.2}, 4σ = {:.2}); {linear_failures} linearity failures in 10000",
            4.0 * expected.sqrt()
        ),
    );
}
