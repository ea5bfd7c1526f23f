//! Classical n-local bound.
//!
//! `α_m` is computed three ways: the binomial closed form, the weight sum
//! over encoding rows, and an exhaustive search over deterministic
//! strategies. The first two are exact integers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{generate_table, EncodingTable};
use crate::error::{Error, Result};
use crate::network::ScenarioConfig;

/// Largest `m` accepted by [`alpha_closed_form`].
pub const MAX_CLOSED_FORM_M: usize = 60;

/// Default cap on the number of edge assignments enumerated (2^24).
pub const DEFAULT_MAX_STATES: u64 = 1 << 24;

/// `Σ_{j=0}^{⌊m/2⌋} C(m, j) (m − 2j)`.
pub fn alpha_closed_form(m: usize) -> Result<u128> {
    if m < 2 {
        return Err(Error::InvalidScenario(format!("m={m} < 2")));
    }
    if m > MAX_CLOSED_FORM_M {
        return Err(Error::Capacity(format!(
            "closed form limited to m <= {MAX_CLOSED_FORM_M}, got {m}"
        )));
    }
    let m128 = m as u128;
    let overflow = || Error::Capacity(format!("overflow evaluating alpha for m={m}"));
    let mut binom: u128 = 1;
    let mut total: u128 = 0;
    for j in 0..=m / 2 {
        if j > 0 {
            // C(m, j) = C(m, j-1) (m - j + 1) / j, exact at every step.
            binom = binom
                .checked_mul(m128 - j as u128 + 1)
                .ok_or_else(overflow)?
                / j as u128;
        }
        let term = binom
            .checked_mul(m128 - 2 * j as u128)
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(total)
}

/// `Σ_i |m − 2 wt(y^i)|`: the value of the all-(+1) deterministic assignment.
pub fn alpha_by_enumeration(table: &EncodingTable) -> u128 {
    let m = table.m() as i64;
    (1..=table.len())
        .map(|i| {
            let w = i64::from(table.hamming_weight(i).expect("index in range"));
            (m - 2 * w).unsigned_abs() as u128
        })
        .sum()
}

/// ±1 outcome assignments for one hidden-variable value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    /// `edge[k][x]` is Alice_k's outcome for setting `x`.
    pub edge: Vec<Vec<i8>>,
    /// `hub[i]` is Bob's outcome for input `i`.
    pub hub: Vec<i8>,
}

impl DeterministicStrategy {
    pub fn all_plus(n: usize, m: usize) -> Self {
        Self {
            edge: vec![vec![1; m]; n],
            hub: vec![1; 1 << (m - 1)],
        }
    }

    fn check(&self, n: usize, table: &EncodingTable) -> Result<()> {
        let m = table.m();
        if self.edge.len() != n {
            return Err(Error::Dimension(format!(
                "{} edge assignments for n={n}",
                self.edge.len()
            )));
        }
        if let Some(row) = self.edge.iter().find(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "edge assignment of length {} for m={m}",
                row.len()
            )));
        }
        if self.hub.len() != table.len() {
            return Err(Error::Dimension(format!(
                "{} hub outcomes for {} inputs",
                self.hub.len(),
                table.len()
            )));
        }
        let valid = |v: &i8| *v == 1 || *v == -1;
        if !self.edge.iter().flatten().all(valid) || !self.hub.iter().all(valid) {
            return Err(Error::Domain("outcomes must be ±1".into()));
        }
        Ok(())
    }
}

/// `Σ_i |Π_k (Σ_x s^i_x a^k_x) · b_i|^{1/n}`.
pub fn evaluate_strategy(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    s: &DeterministicStrategy,
) -> Result<f64> {
    if table.m() != cfg.m {
        return Err(Error::Dimension(format!(
            "table for m={} used with m={}",
            table.m(),
            cfg.m
        )));
    }
    s.check(cfg.n, table)?;
    let inv_n = 1.0 / cfg.n as f64;
    let total = table
        .sign_vectors()
        .iter()
        .zip(&s.hub)
        .map(|(sign, &b)| {
            let j: i64 = s
                .edge
                .iter()
                .map(|a| {
                    sign.entries()
                        .iter()
                        .zip(a)
                        .map(|(&sx, &ax)| i64::from(sx) * i64::from(ax))
                        .sum::<i64>()
                })
                .product::<i64>()
                * i64::from(b);
            (j.unsigned_abs() as f64).powf(inv_n)
        })
        .sum();
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalBoundReport {
    pub m: usize,
    pub alpha_closed: u128,
    pub alpha_enumerated: u128,
    pub alpha_strategy_max: Option<u128>,
    pub agree: bool,
}

/// Closed form and weight enumeration only.
pub fn classical_bound(m: usize) -> Result<ClassicalBoundReport> {
    let table = generate_table(m)?;
    let alpha_closed = alpha_closed_form(m)?;
    let alpha_enumerated = alpha_by_enumeration(&table);
    Ok(ClassicalBoundReport {
        m,
        alpha_closed,
        alpha_enumerated,
        alpha_strategy_max: None,
        agree: alpha_closed == alpha_enumerated,
    })
}

/// Maximum of [`evaluate_strategy`] over all deterministic strategies.
///
/// Every `b_i` multiplies a single term whose absolute value is taken, so
/// `b_i = +1` throughout and only the `2^{nm}` edge assignments are searched.
pub fn exhaustive_strategy_max(
    cfg: &ScenarioConfig,
    max_states: u64,
) -> Result<ClassicalBoundReport> {
    let (n, m) = (cfg.n, cfg.m);
    let bits = n * m;
    if bits >= 64 || (1u64 << bits) > max_states {
        return Err(Error::Capacity(format!(
            "2^{bits} edge assignments exceed the limit of {max_states}"
        )));
    }
    let table = generate_table(m)?;
    let signs = table.sign_vectors();
    // |Σ_x s^i_x a_x| for every single-party assignment `a` (bit x set => -1).
    let per_party: Vec<Vec<u64>> = (0..1u64 << m)
        .map(|a| {
            signs
                .iter()
                .map(|s| {
                    (0..m)
                        .map(|x| {
                            let ax = if (a >> x) & 1 == 1 { -1 } else { 1 };
                            i64::from(s[x]) * ax
                        })
                        .sum::<i64>()
                        .unsigned_abs()
                })
                .collect()
        })
        .collect();
    let inv_n = 1.0 / n as f64;
    let party_mask = (1u64 << m) - 1;
    let best = (0..1u64 << bits)
        .into_par_iter()
        .map(|code| {
            (0..signs.len())
                .map(|i| {
                    let prod: u64 = (0..n)
                        .map(|k| per_party[((code >> (k * m)) & party_mask) as usize][i])
                        .product();
                    (prod as f64).powf(inv_n)
                })
                .sum::<f64>()
        })
        .reduce(|| 0.0, f64::max);
    let rounded = best.round();
    if (best - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Numeric(format!(
            "deterministic maximum {best} is not an integer"
        )));
    }
    let strategy_max = rounded as u128;
    let mut report = classical_bound(m)?;
    report.alpha_strategy_max = Some(strategy_max);
    report.agree = report.agree && strategy_max == report.alpha_closed;
    Ok(report)
}
