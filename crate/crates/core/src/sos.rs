//! Scalar side of the sum-of-squares certificate.
//!
//! For every link and input, `ω_{k,i} = ‖J^k_i |ψ⟩‖` with
//! `ω_{k,i}² = tr[ρ_k ((J^k_i)² ⊗ I)]`. Cauchy-Schwarz gives
//! `|tr[ρ (J ⊗ B)]| ≤ ω` for any involution `B`, so
//! `γ = Σ_i (Π_k ω_{k,i})^{1/n} − Δ ≥ 0`, with equality exactly when every
//! hub factor aligns `B|ψ⟩` with `J|ψ⟩ / ω`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodingTable;
use crate::error::{Error, Result};
use crate::network::{evaluate_quantum, QuantumStrategy, ScenarioConfig};
use crate::qcore::{anticommutator, identity, ComplexMatrix, LinkState, Observable};

pub const SLACK_TOL: f64 = 1e-8;
pub const TIGHT_TOL: f64 = 1e-7;
/// Agreement required between [`omega`] and the anticommutator expansion.
pub const EXPANSION_TOL: f64 = 1e-10;
const RADICAND_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosReport {
    /// `omegas[k][i]`, one row per link.
    pub omegas: Vec<Vec<f64>>,
    pub gamma: f64,
    pub delta_q: f64,
    pub slack_ok: bool,
    pub tight: bool,
    /// Set when some link state is mixed; ω is then extended by linearity.
    pub extended_regime: bool,
}

fn sqrt_radicand(r: f64) -> Result<f64> {
    if r < RADICAND_FLOOR {
        return Err(Error::Numeric(format!("negative radicand {r:.3e}")));
    }
    Ok(r.max(0.0).sqrt())
}

/// `√tr[ρ (J² ⊗ I)]`.
pub fn omega(edge_op: &ComplexMatrix, state: &LinkState) -> Result<f64> {
    let sq = edge_op * edge_op;
    let z = state.expectation(&sq, &identity(state.bob_dim()))?;
    if z.im.abs() > 1e-10 {
        return Err(Error::Numeric(format!(
            "⟨J²⟩ has imaginary part {:.3e}",
            z.im
        )));
    }
    sqrt_radicand(z.re)
}

/// ω from its expansion for ±1-valued observables:
/// `m + Σ_x ⟨{s_x A_x, Σ_{y>x} s_y A_y}⟩`, without squaring `J`.
pub fn omega_expansion(
    table: &EncodingTable,
    i: usize,
    obs: &[Observable],
    state: &LinkState,
) -> Result<f64> {
    let m = table.m();
    if obs.len() != m {
        return Err(Error::Dimension(format!(
            "{} observables for m={m}",
            obs.len()
        )));
    }
    let sign = table.sign_vector(i)?;
    let bob_id = identity(state.bob_dim());
    let mut radicand = m as f64;
    for x in 0..m.saturating_sub(1) {
        let head = obs[x].matrix().scale(f64::from(sign[x]));
        let mut tail = ComplexMatrix::zeros(head.nrows(), head.ncols());
        for y in x + 1..m {
            tail += obs[y].matrix().scale(f64::from(sign[y]));
        }
        let z = state.expectation(&anticommutator(&head, &tail), &bob_id)?;
        radicand += z.re;
    }
    sqrt_radicand(radicand)
}

/// Evaluates the expansion and checks it against [`omega`].
pub fn omega_anticommutator_expansion(
    table: &EncodingTable,
    i: usize,
    obs: &[Observable],
    state: &LinkState,
) -> Result<f64> {
    let expanded = omega_expansion(table, i, obs, state)?;
    let direct = omega(&crate::network::edge_operator(table, i, obs)?, state)?;
    if !expansion_agrees(expanded, direct) {
        return Err(Error::Inconsistent(format!(
            "ω expansion {expanded} disagrees with direct value {direct}"
        )));
    }
    Ok(expanded)
}

/// Near ω = 0 the square root magnifies rounding, so agreement of ω² is
/// also accepted.
fn expansion_agrees(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPANSION_TOL || (a * a - b * b).abs() <= EXPANSION_TOL
}

/// `ω_{k,i}` for every link and input.
pub fn omegas(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    strat: &QuantumStrategy,
) -> Result<Vec<Vec<f64>>> {
    strat.check(cfg)?;
    (0..cfg.n)
        .into_par_iter()
        .map(|k| {
            (1..=table.len())
                .map(|i| {
                    let edge = crate::network::edge_operator(table, i, &strat.observables[k])?;
                    omega(&edge, &strat.states[k])
                })
                .collect()
        })
        .collect()
}

pub fn certificate(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    strat: &QuantumStrategy,
) -> Result<SosReport> {
    let report = evaluate_quantum(cfg, table, strat)?;
    let omegas = omegas(cfg, table, strat)?;
    let inv_n = 1.0 / cfg.n as f64;
    let bound: f64 = (0..table.len())
        .map(|i| omegas.iter().map(|row| row[i]).product::<f64>().powf(inv_n))
        .sum();
    let gamma = bound - report.delta;
    Ok(SosReport {
        omegas,
        gamma,
        delta_q: report.delta,
        slack_ok: gamma >= -SLACK_TOL,
        tight: gamma.abs() < TIGHT_TOL,
        extended_regime: strat.states.iter().any(|s| !s.is_pure()),
    })
}

/// Largest `‖{A_x, A_y}‖_max` over pairs of one party's observables.
pub fn max_anticommutator(obs: &[Observable]) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, a) in obs.iter().enumerate() {
        for b in &obs[x + 1..] {
            worst = worst.max(crate::qcore::max_abs(&anticommutator(
                a.matrix(),
                b.matrix(),
            )));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::generate_table;
    use crate::network::build_optimal_strategy;
    use crate::qcore::{
        anticommuting_set, bell_copies, pauli_x, pauli_z, random_involution, werner_copies,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(m: ComplexMatrix) -> Observable {
        Observable::new(m).unwrap()
    }

    #[test]
    fn omega_on_anticommuting_sets() {
        for m in 2..=6 {
            let t = generate_table(m).unwrap();
            let set = anticommuting_set(m).unwrap();
            let state = bell_copies(m / 2).unwrap();
            for i in 1..=t.len() {
                let w = omega_anticommutator_expansion(&t, i, &set, &state).unwrap();
                assert!((w - (m as f64).sqrt()).abs() < 1e-10);
            }
            assert!(max_anticommutator(&set) < 1e-12);
        }
    }

    #[test]
    fn omega_degenerate_pairs() {
        let t = generate_table(2).unwrap();
        let bell = bell_copies(1).unwrap();
        let xx = [obs(pauli_x()), obs(pauli_x())];
        let e2 = crate::network::edge_operator(&t, 2, &xx).unwrap();
        assert!(omega(&e2, &bell).unwrap().abs() < 1e-15);
        // {X, X} = 2I, so the radicand is 2 + 2 = 4.
        assert!((omega_anticommutator_expansion(&t, 1, &xx, &bell).unwrap() - 2.0).abs() < 1e-12);
        let xz = [obs(pauli_x()), obs(pauli_z())];
        let w = omega_anticommutator_expansion(&t, 1, &xz, &bell).unwrap();
        assert!((w - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn expansion_matches_direct_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = generate_table(2).unwrap();
        for trial in 0..100 {
            let d = if trial % 2 == 0 { 2 } else { 4 };
            let pair = [
                obs(random_involution(d, &mut rng)),
                obs(random_involution(d, &mut rng)),
            ];
            let state = werner_copies(d / 2, 0.3 + 0.007 * trial as f64).unwrap();
            for i in 1..=2 {
                let a = omega_expansion(&t, i, &pair, &state).unwrap();
                let e = crate::network::edge_operator(&t, i, &pair).unwrap();
                let b = omega(&e, &state).unwrap();
                assert!(expansion_agrees(a, b), "trial {trial}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn certificate_is_tight_at_optimum() {
        let cfg = ScenarioConfig::new(2, 3).unwrap();
        let t = generate_table(3).unwrap();
        let r = certificate(&cfg, &t, &build_optimal_strategy(&cfg).unwrap()).unwrap();
        assert!(r.tight && r.slack_ok && !r.extended_regime);
        assert!(r.gamma.abs() < 1e-7);
        assert!((r.delta_q - 4.0 * 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn certificate_has_slack_for_random_strategies() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cfg = ScenarioConfig::new(2, 2).unwrap();
        let t = generate_table(2).unwrap();
        for _ in 0..50 {
            let strat = QuantumStrategy {
                observables: (0..2)
                    .map(|_| {
                        (0..2)
                            .map(|_| obs(random_involution(2, &mut rng)))
                            .collect()
                    })
                    .collect(),
                hub_factors: (0..2)
                    .map(|_| {
                        (0..2)
                            .map(|_| obs(random_involution(2, &mut rng)))
                            .collect()
                    })
                    .collect(),
                states: vec![bell_copies(1).unwrap(); 2],
            };
            let r = certificate(&cfg, &t, &strat).unwrap();
            assert!(r.gamma >= -1e-8 && r.slack_ok);
        }
    }

    #[test]
    fn degenerate_strategy_has_strict_slack() {
        let cfg = ScenarioConfig::new(2, 2).unwrap();
        let t = generate_table(2).unwrap();
        let xx = vec![obs(pauli_x()), obs(pauli_x())];
        let strat = QuantumStrategy {
            observables: vec![xx.clone(), xx],
            hub_factors: vec![vec![obs(pauli_z()), obs(pauli_z())]; 2],
            states: vec![bell_copies(1).unwrap(); 2],
        };
        let r = certificate(&cfg, &t, &strat).unwrap();
        // ⟨2X ⊗ Z⟩ = 0 while ω = 2 for i = 1.
        assert!(r.gamma > 1.0);
        assert!(!r.tight);
    }

    #[test]
    fn mixed_states_are_flagged() {
        let cfg = ScenarioConfig::new(2, 2).unwrap();
        let t = generate_table(2).unwrap();
        let s = build_optimal_strategy(&cfg).unwrap();
        let noisy = s.with_states(vec![werner_copies(1, 0.5).unwrap(); 2]);
        let r = certificate(&cfg, &t, &noisy).unwrap();
        assert!(r.extended_regime && r.slack_ok);
    }
}
