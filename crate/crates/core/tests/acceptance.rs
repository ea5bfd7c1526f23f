//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any line fails.

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starnet_core::encoding::generate_table;
use starnet_core::lhv::{
    alpha_by_enumeration, alpha_closed_form, exhaustive_strategy_max, DEFAULT_MAX_STATES,
};
use starnet_core::network::{
    bounds_table, build_optimal_strategy, evaluate_quantum, quantum_optimum_formula,
    QuantumStrategy, ScenarioConfig,
};
use starnet_core::optimize::{
    linear_grid, seed_range, seesaw_best, visibility_sweep, with_werner_links, SeesawOptions,
};
use starnet_core::qcore::{
    anticommutator, anticommuting_set, identity, max_abs, random_traceless_involution,
    random_unitary, werner_copies, ComplexMatrix, Observable,
};
use starnet_core::sos::{certificate, omegas};

struct Ledger {
    failures: usize,
}

impl Ledger {
    fn line(&mut self, id: &str, ok: bool, elapsed: Duration, budget_s: u64, detail: String) {
        let in_time = elapsed.as_secs_f64() < budget_s as f64;
        let ok = ok && in_time;
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} [{id}] {detail} ({:.2} s, budget {budget_s} s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn obs(m: ComplexMatrix) -> Observable {
    Observable::new(m).expect("involution")
}

fn random_strategy(cfg: &ScenarioConfig, copies: usize, rng: &mut ChaCha8Rng) -> QuantumStrategy {
    let cfg = ScenarioConfig::with_copies(cfg.n, cfg.m, copies).unwrap();
    starnet_core::network::random_strategy(&cfg, rng).unwrap()
}

/// One pair per link, traceless observables, so white noise only rescales
/// each correlator by `v`.
fn random_traceless_strategy(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> QuantumStrategy {
    let mut s = random_strategy(cfg, 1, rng);
    for o in s
        .observables
        .iter_mut()
        .chain(s.hub_factors.iter_mut())
        .flatten()
    {
        *o = obs(random_traceless_involution(2, rng));
    }
    s
}

fn sos_scenarios() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for n in 2..=3 {
        for m in 2..=4 {
            v.push((n, m));
        }
    }
    v
}

fn classical_bounds(l: &mut Ledger) {
    let t0 = Instant::now();
    let mut ok = alpha_closed_form(2).unwrap() == 2 && alpha_closed_form(3).unwrap() == 6;
    let mut cases = vec![(4, 2), (4, 3)];
    for n in 2..=3 {
        for m in 2..=4 {
            cases.push((n, m));
        }
    }
    let mut bad = Vec::new();
    for &(n, m) in &cases {
        let cfg = ScenarioConfig::new(n, m).unwrap();
        let closed = alpha_closed_form(m).unwrap();
        let enumerated = alpha_by_enumeration(&generate_table(m).unwrap());
        let brute = exhaustive_strategy_max(&cfg, DEFAULT_MAX_STATES)
            .unwrap()
            .alpha_strategy_max
            .unwrap();
        if closed != enumerated || closed != brute {
            ok = false;
            bad.push(format!("({n},{m}): {closed}/{enumerated}/{brute}"));
        }
    }
    l.line(
        "1 classical bound",
        ok,
        t0.elapsed(),
        30,
        format!(
            "alpha_2=2, alpha_3=6, triple agreement on {} scenarios {bad:?}",
            cases.len()
        ),
    );
}

fn quantum_optimum(l: &mut Ledger) {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        for m in 2..=6 {
            let cfg = ScenarioConfig::new(n, m).unwrap();
            let t = generate_table(m).unwrap();
            let r = evaluate_quantum(&cfg, &t, &build_optimal_strategy(&cfg).unwrap()).unwrap();
            worst = worst.max((r.delta - quantum_optimum_formula(m)).abs());
        }
    }
    let anchors = (quantum_optimum_formula(2) - 2.0 * 2f64.sqrt()).abs() < 1e-12
        && (quantum_optimum_formula(3) - 4.0 * 3f64.sqrt()).abs() < 1e-12;
    l.line(
        "2 quantum optimum",
        worst < 1e-8 && anchors,
        t0.elapsed(),
        60,
        format!("max |delta - 2^(m-1) sqrt(m)| = {worst:.2e} over n=2..5, m=2..6"),
    );
}

fn ratio_curve(l: &mut Ledger) {
    let t0 = Instant::now();
    let rows = bounds_table(3..=50).unwrap();
    let r3 = rows[0].ratio;
    let r4 = rows[1].ratio;
    let tail = rows
        .iter()
        .filter(|r| r.m >= 40)
        .map(|r| (r.ratio - 1.2533).abs())
        .fold(0.0, f64::max);
    let ok = (r3 - 1.154701).abs() < 1e-6 && (r4 - 1.333333).abs() < 1e-6 && tail < 0.02;
    l.line(
        "3 ratio curve",
        ok,
        t0.elapsed(),
        5,
        format!("ratio(3)={r3:.7}, ratio(4)={r4:.7}, max |ratio-1.2533| for m>=40 = {tail:.4}"),
    );
}

fn sos(l: &mut Ledger) {
    let t0 = Instant::now();
    let mut opt_ok = true;
    for (n, m) in sos_scenarios() {
        let cfg = ScenarioConfig::new(n, m).unwrap();
        let t = generate_table(m).unwrap();
        let r = certificate(&cfg, &t, &build_optimal_strategy(&cfg).unwrap()).unwrap();
        let sq = (m as f64).sqrt();
        opt_ok &= r.gamma.abs() < 1e-7 && r.omegas.iter().flatten().all(|w| (w - sq).abs() < 1e-10);
    }
    l.line(
        "4a sos at optimum",
        opt_ok,
        t0.elapsed(),
        120,
        "|gamma| < 1e-7 and omega = sqrt(m) on {2,3}x{2,3,4}".into(),
    );

    let t0 = Instant::now();
    let mut min_gamma = f64::INFINITY;
    let mut aggregate_excess = f64::NEG_INFINITY;
    let mut omega_excess = f64::NEG_INFINITY;
    let mut omega_violations = 0usize;
    let mut total = 0usize;
    for (n, m) in sos_scenarios() {
        let cfg = ScenarioConfig::new(n, m).unwrap();
        let t = generate_table(m).unwrap();
        let sq = (m as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 * n as u64 + m as u64);
        for _ in 0..1000 {
            let strat = random_strategy(&cfg, m / 2, &mut rng);
            let r = certificate(&cfg, &t, &strat).unwrap();
            min_gamma = min_gamma.min(r.gamma);
            for row in &r.omegas {
                aggregate_excess =
                    aggregate_excess.max(row.iter().sum::<f64>() - quantum_optimum_formula(m));
                for w in row {
                    total += 1;
                    omega_excess = omega_excess.max(w - sq);
                    if *w > sq + 1e-10 {
                        omega_violations += 1;
                    }
                }
            }
        }
    }
    l.line(
        "4b sos slack",
        min_gamma >= -1e-8 && aggregate_excess <= 1e-8,
        t0.elapsed(),
        120,
        format!(
            "6000 random strategies: min gamma = {min_gamma:.3e}, \
             max (sum_i omega - 2^(m-1) sqrt(m)) = {aggregate_excess:.3e}"
        ),
    );
    l.line(
        "4c per-input omega <= sqrt(m)",
        omega_violations == 0,
        t0.elapsed(),
        120,
        format!(
            "{omega_violations}/{total} omegas exceed sqrt(m) + 1e-10, worst excess {omega_excess:.3e}"
        ),
    );
}

#[allow(clippy::approx_constant)]
fn noise_threshold(l: &mut Ledger) {
    let t0 = Instant::now();
    let analytic = 2.0 / (2.0 * 2f64.sqrt());
    let cfg = ScenarioConfig::new(2, 2).unwrap();
    let t = generate_table(2).unwrap();
    let base = build_optimal_strategy(&cfg).unwrap();
    let r = visibility_sweep(
        &cfg,
        &t,
        |v| with_werner_links(&base, 1, v),
        &linear_grid(0.0, 1.0, 101),
    )
    .unwrap();
    let v = r.critical_v.unwrap_or(f64::NAN);
    let ok = (v - 0.707107).abs() < 1e-4 && (analytic - 0.707107).abs() < 1e-4;
    l.line(
        "5 noise threshold",
        ok,
        t0.elapsed(),
        10,
        format!("sweep v* = {v:.7}, analytic 1/sqrt(2) = {analytic:.7}"),
    );
}

fn copy_advantage(l: &mut Ledger) {
    let t0 = Instant::now();
    let seeds = seed_range(0, 20);
    let opts = SeesawOptions {
        max_iters: 2000,
        ..SeesawOptions::default()
    };
    let multi = seesaw_best(&ScenarioConfig::new(2, 4).unwrap(), &seeds, &opts).unwrap();
    let single = seesaw_best(
        &ScenarioConfig::with_copies(2, 4, 1).unwrap(),
        &seeds,
        &opts,
    )
    .unwrap();
    let (dm, ds) = (multi.best.delta, single.best.delta);
    let ok = (dm - 16.0).abs() < 1e-5 && ds < 16.0 - 0.1 && ds > 12.0;
    l.line(
        "6 copy advantage",
        ok,
        t0.elapsed(),
        300,
        format!("n=2, m=4 seesaw over 20 seeds: two copies {dm:.9}, one copy {ds:.9}"),
    );
}

fn run_property<S, F>(l: &mut Ledger, id: &str, cases: u32, strategy: S, test: F)
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let t0 = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let outcome = runner.run(&strategy, test);
    let detail = match &outcome {
        Ok(()) => format!("{cases} cases, zero failures"),
        Err(e) => format!("{e}"),
    };
    l.line(id, outcome.is_ok(), t0.elapsed(), 120, detail);
}

fn properties(l: &mut Ledger) {
    run_property(
        l,
        "7a anticommutation and involution",
        200,
        (2usize..=8, any::<u64>()),
        |(m, seed)| {
            let set = anticommuting_set(m).unwrap();
            let d = set[0].dim();
            let u = random_unitary(d, &mut ChaCha8Rng::seed_from_u64(seed));
            let rot: Vec<Observable> = set.iter().map(|o| o.conjugate(&u).unwrap()).collect();
            let id = identity(d);
            for (x, a) in rot.iter().enumerate() {
                prop_assert!(max_abs(&(a.matrix() * a.matrix() - &id)) < 1e-10);
                for b in &rot[x + 1..] {
                    prop_assert!(max_abs(&anticommutator(a.matrix(), b.matrix())) < 1e-10);
                }
            }
            let t = generate_table(m).unwrap();
            for i in 1..=t.len() {
                let e = starnet_core::network::edge_operator(&t, i, &rot).unwrap();
                prop_assert!(max_abs(&(&e * &e - id.scale(m as f64))) < 1e-10);
            }
            Ok(())
        },
    );

    run_property(
        l,
        "7b sign-flip invariance",
        200,
        (2usize..=8, any::<u64>()),
        |(m, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = generate_table(m).unwrap();
            let flips: Vec<bool> = (0..m).map(|_| rng.random()).collect();

            let a: Vec<i64> = (0..m)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let a_flipped: Vec<i64> = a
                .iter()
                .zip(&flips)
                .map(|(&v, &f)| if f { -v } else { v })
                .collect();
            let party_terms = |a: &[i64]| -> Vec<u64> {
                let mut v: Vec<u64> = t
                    .sign_vectors()
                    .iter()
                    .map(|s| {
                        s.entries()
                            .iter()
                            .zip(a)
                            .map(|(&sx, &ax)| i64::from(sx) * ax)
                            .sum::<i64>()
                            .unsigned_abs()
                    })
                    .collect();
                v.sort_unstable();
                v
            };
            prop_assert_eq!(party_terms(&a), party_terms(&a_flipped));

            // Quantum counterpart: the per-link multiset of ω is unchanged.
            if m <= 5 {
                let cfg = ScenarioConfig::new(2, m).unwrap();
                let strat = random_strategy(&cfg, m / 2, &mut rng);
                let mut flipped = strat.clone();
                for (x, &f) in flips.iter().enumerate() {
                    if f {
                        flipped.observables[0][x] = obs(-strat.observables[0][x].matrix().clone());
                    }
                }
                let sorted = |s: &QuantumStrategy| {
                    let mut row = omegas(&cfg, &t, s).unwrap().swap_remove(0);
                    row.sort_by(f64::total_cmp);
                    row
                };
                for (p, q) in sorted(&strat).iter().zip(sorted(&flipped)) {
                    prop_assert!((p - q).abs() < 1e-10, "{p} vs {q}");
                }
            }
            Ok(())
        },
    );

    run_property(
        l,
        "7c local unitary invariance of delta",
        200,
        (2usize..=3, 2usize..=5, any::<u64>(), any::<bool>()),
        |(n, m, seed, optimal)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = ScenarioConfig::new(n, m).unwrap();
            let t = generate_table(m).unwrap();
            let strat = if optimal {
                build_optimal_strategy(&cfg).unwrap()
            } else {
                random_strategy(&cfg, m / 2, &mut rng)
            };
            let before = evaluate_quantum(&cfg, &t, &strat).unwrap();
            let mut rotated = strat.clone();
            for k in 0..n {
                let u = random_unitary(strat.states[k].alice_dim(), &mut rng);
                rotated.observables[k] = strat.observables[k]
                    .iter()
                    .map(|o| o.conjugate(&u).unwrap())
                    .collect();
                rotated.states[k] = strat.states[k].conjugate_alice(&u).unwrap();
            }
            let after = evaluate_quantum(&cfg, &t, &rotated).unwrap();
            for (p, q) in before.per_i_signed.iter().zip(&after.per_i_signed) {
                prop_assert!((p - q).abs() < 1e-10, "J {p} vs {q}");
            }
            // |x|^{1/n} is 1/n-Hölder, so delta moves by at most this much.
            let slack: f64 = before
                .per_i_signed
                .iter()
                .zip(&after.per_i_signed)
                .map(|(p, q)| (p - q).abs().powf(1.0 / n as f64))
                .sum();
            prop_assert!((before.delta - after.delta).abs() <= slack + 1e-12);
            Ok(())
        },
    );

    run_property(
        l,
        "7d visibility monotonicity",
        200,
        (
            2usize..=3,
            2usize..=4,
            any::<u64>(),
            0.0f64..=1.0,
            0.0f64..=1.0,
            any::<bool>(),
        ),
        |(n, m, seed, v1, v2, optimal)| {
            let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            let t = generate_table(m).unwrap();
            let (cfg, copies, strat) = if optimal {
                let cfg = ScenarioConfig::new(n, m).unwrap();
                (cfg, m / 2, build_optimal_strategy(&cfg).unwrap())
            } else {
                let cfg = ScenarioConfig::with_copies(n, m, 1).unwrap();
                let s = random_traceless_strategy(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
                (cfg, 1, s)
            };
            let at = |v: f64| {
                let states = vec![werner_copies(copies, v).unwrap(); n];
                evaluate_quantum(&cfg, &t, &strat.with_states(states))
                    .unwrap()
                    .delta
            };
            let (d_lo, d_hi) = (at(lo), at(hi));
            prop_assert!(
                d_lo <= d_hi + 1e-9,
                "delta({lo}) = {d_lo} > delta({hi}) = {d_hi}"
            );
            Ok(())
        },
    );
}

fn main() {
    let mut l = Ledger { failures: 0 };
    let t0 = Instant::now();
    classical_bounds(&mut l);
    quantum_optimum(&mut l);
    ratio_curve(&mut l);
    sos(&mut l);
    noise_threshold(&mut l);
    copy_advantage(&mut l);
    properties(&mut l);
    println!(
        "acceptance: {} failing line(s), total {:.1} s",
        l.failures,
        t0.elapsed().as_secs_f64()
    );
    if l.failures > 0 {
        std::process::exit(1);
    }
}
