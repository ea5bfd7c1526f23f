//! Star-network scenario: edge operators, factorized hub observables,
//! correlators and the inequality value `Δ = Σ_i |J_i|^{1/n}`.
//!
//! Bob's observable for input `i` is stored as one factor per link,
//! `B_i = ⊗_k B_i^{(k)}`, so `J_i` is a product of `n` bipartite traces.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{generate_table, EncodingTable};
use crate::error::{Error, Result};
use crate::lhv::alpha_closed_form;
use crate::qcore::{
    anticommuting_set, bell_copies, identity, kron_all, max_abs, permute_subsystems,
    random_involution, trace, transpose_on_bob, ComplexMatrix, LinkState, Observable,
    INVOLUTION_TOL,
};

/// Slack used for `violated`.
pub const VIOLATION_SLACK: f64 = 1e-9;
/// Largest imaginary part tolerated in a correlator.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub m: usize,
    pub copies_per_link: usize,
}

impl ScenarioConfig {
    /// `copies_per_link` defaults to `⌊m/2⌋`.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Self::with_copies(n, m, (m / 2).max(1))
    }

    pub fn with_copies(n: usize, m: usize, copies_per_link: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidScenario(format!(
                "need n >= 2 edge parties, got {n}"
            )));
        }
        if m < 2 {
            return Err(Error::InvalidScenario(format!(
                "need m >= 2 settings, got {m}"
            )));
        }
        if copies_per_link == 0 {
            return Err(Error::InvalidScenario(
                "copies_per_link must be >= 1".into(),
            ));
        }
        Ok(Self {
            n,
            m,
            copies_per_link,
        })
    }

    pub fn terms(&self) -> usize {
        1 << (self.m - 1)
    }
}

/// Observables, hub factors and link states for every party.
#[derive(Debug, Clone)]
pub struct QuantumStrategy {
    /// `observables[k][x]`: Alice_k's setting `x`.
    pub observables: Vec<Vec<Observable>>,
    /// `hub_factors[k][i]`: factor of `B_i` acting on link `k`.
    pub hub_factors: Vec<Vec<Observable>>,
    pub states: Vec<LinkState>,
}

impl QuantumStrategy {
    pub fn check(&self, cfg: &ScenarioConfig) -> Result<()> {
        let n = cfg.n;
        if self.observables.len() != n || self.hub_factors.len() != n || self.states.len() != n {
            return Err(Error::Dimension(format!(
                "strategy has {}/{}/{} parties, expected {n}",
                self.observables.len(),
                self.hub_factors.len(),
                self.states.len()
            )));
        }
        for k in 0..n {
            let state = &self.states[k];
            if self.observables[k].len() != cfg.m {
                return Err(Error::Dimension(format!(
                    "party {} has {} observables, expected {}",
                    k + 1,
                    self.observables[k].len(),
                    cfg.m
                )));
            }
            if self.hub_factors[k].len() != cfg.terms() {
                return Err(Error::Dimension(format!(
                    "link {} has {} hub factors, expected {}",
                    k + 1,
                    self.hub_factors[k].len(),
                    cfg.terms()
                )));
            }
            if self.observables[k]
                .iter()
                .any(|o| o.dim() != state.alice_dim())
            {
                return Err(Error::Dimension(format!(
                    "party {} observables do not match link dimension {}",
                    k + 1,
                    state.alice_dim()
                )));
            }
            if self.hub_factors[k]
                .iter()
                .any(|o| o.dim() != state.bob_dim())
            {
                return Err(Error::Dimension(format!(
                    "hub factors on link {} do not match dimension {}",
                    k + 1,
                    state.bob_dim()
                )));
            }
        }
        Ok(())
    }

    /// Same observables with every link state replaced.
    pub fn with_states(&self, states: Vec<LinkState>) -> Self {
        Self {
            observables: self.observables.clone(),
            hub_factors: self.hub_factors.clone(),
            states,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub m: usize,
    pub copies: usize,
    /// `|J_i|` for `i = 1..2^{m-1}`.
    pub per_i_values: Vec<f64>,
    /// Signed `J_i`, kept for diagnostics.
    pub per_i_signed: Vec<f64>,
    pub delta: f64,
    pub classical_bound: f64,
    pub quantum_optimum: f64,
    /// `delta / classical_bound`.
    pub ratio: f64,
    pub violated: bool,
}

/// `Σ_x (−1)^{y^i_x} A_x`.
pub fn edge_operator(table: &EncodingTable, i: usize, obs: &[Observable]) -> Result<ComplexMatrix> {
    if obs.len() != table.m() {
        return Err(Error::Dimension(format!(
            "{} observables for m={}",
            obs.len(),
            table.m()
        )));
    }
    let dim = obs[0].dim();
    if obs.iter().any(|o| o.dim() != dim) {
        return Err(Error::Dimension("observables differ in dimension".into()));
    }
    let sign = table.sign_vector(i)?;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (s, o) in sign.iter().zip(obs) {
        acc += o.matrix().scale(s);
    }
    Ok(acc)
}

/// `(1/√m) (edge_op)ᵀ`, an involution whenever `edge_op² = m I`.
pub fn optimal_hub_factor(edge_op: &ComplexMatrix, m: usize) -> Result<Observable> {
    let dim = edge_op.nrows();
    let defect = max_abs(&(edge_op * edge_op - identity(dim).scale(m as f64)));
    if defect > INVOLUTION_TOL * m as f64 {
        return Err(Error::NotNormalizable(format!(
            "edge operator squared differs from {m}·I by {defect:.3e}"
        )));
    }
    let scaled = Observable::new(edge_op.scale(1.0 / (m as f64).sqrt()))
        .map_err(|e| Error::NotNormalizable(e.to_string()))?;
    Ok(transpose_on_bob(&scaled))
}

/// `tr[ρ (edge_op ⊗ hub)]`, real part.
pub fn link_correlator(
    edge_op: &ComplexMatrix,
    hub: &ComplexMatrix,
    state: &LinkState,
) -> Result<f64> {
    real_part(state.expectation(edge_op, hub)?)
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(Error::Numeric(format!(
            "expectation has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `2^{m−1} √m`, the same for every `n`.
pub fn quantum_optimum_formula(m: usize) -> f64 {
    (m as f64 - 1.0).exp2() * (m as f64).sqrt()
}

fn check_table(cfg: &ScenarioConfig, table: &EncodingTable) -> Result<()> {
    if table.m() != cfg.m {
        return Err(Error::Dimension(format!(
            "table for m={} used with m={}",
            table.m(),
            cfg.m
        )));
    }
    Ok(())
}

/// Per-term correlators `c[i][k] = tr[ρ_k (J^k_i ⊗ B_i^{(k)})]`.
pub fn link_correlators(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    strat: &QuantumStrategy,
) -> Result<Vec<Vec<f64>>> {
    check_table(cfg, table)?;
    strat.check(cfg)?;
    (1..=table.len())
        .into_par_iter()
        .map(|i| {
            (0..cfg.n)
                .map(|k| {
                    let edge = edge_operator(table, i, &strat.observables[k])?;
                    link_correlator(
                        &edge,
                        strat.hub_factors[k][i - 1].matrix(),
                        &strat.states[k],
                    )
                })
                .collect()
        })
        .collect()
}

/// Builds a report from signed `J_i` values.
pub fn report_from_terms(cfg: &ScenarioConfig, signed: Vec<f64>) -> Result<EvaluationReport> {
    let inv_n = 1.0 / cfg.n as f64;
    let per_i_values: Vec<f64> = signed.iter().map(|j| j.abs()).collect();
    let delta = per_i_values.iter().map(|j| j.powf(inv_n)).sum::<f64>();
    let classical_bound = alpha_closed_form(cfg.m)? as f64;
    Ok(EvaluationReport {
        n: cfg.n,
        m: cfg.m,
        copies: cfg.copies_per_link,
        per_i_values,
        per_i_signed: signed,
        delta,
        classical_bound,
        quantum_optimum: quantum_optimum_formula(cfg.m),
        ratio: delta / classical_bound,
        violated: delta > classical_bound + VIOLATION_SLACK,
    })
}

pub fn evaluate_quantum(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    strat: &QuantumStrategy,
) -> Result<EvaluationReport> {
    let corr = link_correlators(cfg, table, strat)?;
    report_from_terms(cfg, corr.iter().map(|c| c.iter().product()).collect())
}

/// Dense cross-check for `n <= 2`: forms the full state on
/// `A_1 … A_n ⊗ B` and a joint hub observable per input.
///
/// `joint_hub[i]` acts on Bob's systems in link order. Passing the
/// Kronecker product of the hub factors must reproduce [`evaluate_quantum`].
pub fn evaluate_joint(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    observables: &[Vec<Observable>],
    joint_hub: &[ComplexMatrix],
    states: &[LinkState],
) -> Result<EvaluationReport> {
    check_table(cfg, table)?;
    if cfg.n > 2 {
        return Err(Error::Capacity(format!(
            "dense evaluation supports n <= 2, got n={}",
            cfg.n
        )));
    }
    if observables.len() != cfg.n || states.len() != cfg.n || joint_hub.len() != table.len() {
        return Err(Error::Dimension(
            "joint strategy shape does not match scenario".into(),
        ));
    }
    // Product state in order A_1 B_1 A_2 B_2, moved to A_1 A_2 B_1 B_2.
    let rho = kron_all(states.iter().map(|s| s.matrix()));
    let dims: Vec<usize> = states
        .iter()
        .flat_map(|s| [s.alice_dim(), s.bob_dim()])
        .collect();
    let order: Vec<usize> = (0..cfg.n)
        .map(|k| 2 * k)
        .chain((0..cfg.n).map(|k| 2 * k + 1))
        .collect();
    let rho = permute_subsystems(&rho, &dims, &order);
    let bob_dim: usize = states.iter().map(|s| s.bob_dim()).product();
    let signed = (1..=table.len())
        .map(|i| {
            let hub = &joint_hub[i - 1];
            if hub.nrows() != bob_dim {
                return Err(Error::Dimension(format!(
                    "joint hub observable has dimension {}, expected {bob_dim}",
                    hub.nrows()
                )));
            }
            let edges = (0..cfg.n)
                .map(|k| edge_operator(table, i, &observables[k]))
                .collect::<Result<Vec<_>>>()?;
            let mut op = kron_all(&edges);
            op = op.kronecker(hub);
            real_part(trace(&(&rho * op)))
        })
        .collect::<Result<Vec<f64>>>()?;
    report_from_terms(cfg, signed)
}

/// Anticommuting observables on `⌊m/2⌋` Bell pairs per link with
/// `B_i^{(k)} = (J^k_i)ᵀ / √m`.
pub fn build_optimal_strategy(cfg: &ScenarioConfig) -> Result<QuantumStrategy> {
    let table = generate_table(cfg.m)?;
    let copies = cfg.m / 2;
    if cfg.copies_per_link != copies {
        return Err(Error::InvalidScenario(format!(
            "the anticommuting construction needs {copies} copies per link, got {}",
            cfg.copies_per_link
        )));
    }
    let set = anticommuting_set(cfg.m)?;
    let state = bell_copies(copies)?;
    let hubs = (1..=table.len())
        .map(|i| optimal_hub_factor(&edge_operator(&table, i, &set)?, cfg.m))
        .collect::<Result<Vec<_>>>()?;
    let observables = (0..cfg.n)
        .map(|k| {
            set.iter()
                .enumerate()
                .map(|(x, o)| o.clone().with_label(k + 1, x + 1))
                .collect()
        })
        .collect();
    Ok(QuantumStrategy {
        observables,
        hub_factors: vec![hubs; cfg.n],
        states: vec![state; cfg.n],
    })
}

/// One row of the ratio curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub m: usize,
    pub alpha: u128,
    pub qopt: f64,
    pub ratio: f64,
}

/// `α_m`, `2^{m−1}√m` and their ratio for `m` in `range`.
pub fn bounds_table(range: std::ops::RangeInclusive<usize>) -> Result<Vec<BoundsRow>> {
    if *range.start() < 2 || *range.end() > 50 {
        return Err(Error::InvalidScenario(format!(
            "m range {}..={} outside 2..=50",
            range.start(),
            range.end()
        )));
    }
    range
        .map(|m| {
            let alpha = alpha_closed_form(m)?;
            let qopt = quantum_optimum_formula(m);
            Ok(BoundsRow {
                m,
                alpha,
                qopt,
                ratio: qopt / alpha as f64,
            })
        })
        .collect()
}

/// Haar-random involutions (random ±1 spectrum) for every observable and
/// hub factor, with `copies_per_link` Bell pairs on each link.
pub fn random_strategy<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<QuantumStrategy> {
    let state = bell_copies(cfg.copies_per_link)?;
    let d = state.alice_dim();
    let mut draw = |count: usize, party: usize| -> Result<Vec<Observable>> {
        (0..count)
            .map(|x| Ok(Observable::new(random_involution(d, rng))?.with_label(party, x + 1)))
            .collect()
    };
    let observables = (1..=cfg.n)
        .map(|k| draw(cfg.m, k))
        .collect::<Result<Vec<_>>>()?;
    let hub_factors = (0..cfg.n)
        .map(|_| draw(cfg.terms(), 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantumStrategy {
        observables,
        hub_factors,
        states: vec![state; cfg.n],
    })
}
