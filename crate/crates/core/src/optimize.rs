//! Noise and dimension experiments: visibility sweeps, the critical
//! visibility, and a seesaw search over observables of a fixed local
//! dimension.

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{generate_table, EncodingTable, SignVector};
use crate::error::{Error, Result};
use crate::lhv::alpha_closed_form;
use crate::network::{
    evaluate_quantum, EvaluationReport, QuantumStrategy, ScenarioConfig, VIOLATION_SLACK,
};
use crate::qcore::{
    hermitian_sign, near_identity_unitary, random_traceless_involution, trace, werner_copies,
    ComplexMatrix, LinkState, Observable,
};

/// Width of the final bisection bracket for the critical visibility.
pub const CRITICAL_V_TOL: f64 = 1e-7;
const MONOTONE_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Visibility sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub v: f64,
    pub delta: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n: usize,
    pub m: usize,
    pub copies: usize,
    pub alpha: f64,
    pub grid: Vec<SweepPoint>,
    /// Smallest violating visibility, refined by bisection inside the first
    /// bracketing grid interval.
    pub critical_v: Option<f64>,
    /// Whether delta was non-decreasing along the grid.
    pub monotone: bool,
}

/// Replaces every link by `copies` Werner pairs of visibility `v`.
pub fn with_werner_links(
    strat: &QuantumStrategy,
    copies: usize,
    v: f64,
) -> Result<QuantumStrategy> {
    let state = werner_copies(copies, v)?;
    Ok(strat.with_states(vec![state; strat.states.len()]))
}

/// Heterogeneous visibilities, one per link.
pub fn evaluate_with_visibilities(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    strat: &QuantumStrategy,
    visibilities: &[f64],
) -> Result<EvaluationReport> {
    if visibilities.len() != cfg.n {
        return Err(Error::Dimension(format!(
            "{} visibilities for {} links",
            visibilities.len(),
            cfg.n
        )));
    }
    let states = visibilities
        .iter()
        .map(|&v| werner_copies(cfg.copies_per_link, v))
        .collect::<Result<Vec<_>>>()?;
    evaluate_quantum(cfg, table, &strat.with_states(states))
}

/// Evaluates `builder(v)` on each grid point and locates the critical
/// visibility where `delta − α_m` first changes sign.
pub fn visibility_sweep<F>(
    cfg: &ScenarioConfig,
    table: &EncodingTable,
    builder: F,
    v_grid: &[f64],
) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<QuantumStrategy> + Sync,
{
    if let Some(v) = v_grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("visibility {v} outside [0, 1]")));
    }
    let alpha = alpha_closed_form(cfg.m)? as f64;
    let delta_at =
        |v: f64| -> Result<f64> { Ok(evaluate_quantum(cfg, table, &builder(v)?)?.delta) };
    let grid = v_grid
        .par_iter()
        .map(|&v| {
            let delta = delta_at(v)?;
            Ok(SweepPoint {
                v,
                delta,
                violated: delta > alpha + VIOLATION_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = grid
        .windows(2)
        .all(|w| w[0].v > w[1].v || w[0].delta <= w[1].delta + MONOTONE_SLACK);

    let mut critical_v = None;
    let bracket = grid
        .windows(2)
        .find(|w| w[0].v < w[1].v && w[0].delta <= alpha && w[1].delta > alpha);
    if let Some(w) = bracket {
        let (mut lo, mut hi) = (w[0].v, w[1].v);
        while hi - lo > CRITICAL_V_TOL {
            let mid = 0.5 * (lo + hi);
            if delta_at(mid)? > alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        critical_v = Some(hi);
    } else {
        debug!("no bracketing interval for the critical visibility");
    }
    Ok(SweepResult {
        n: cfg.n,
        m: cfg.m,
        copies: cfg.copies_per_link,
        alpha,
        grid,
        critical_v,
        monotone,
    })
}

/// `steps` evenly spaced points from `v_min` to `v_max` inclusive.
pub fn linear_grid(v_min: f64, v_max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![v_min],
        _ => (0..steps)
            .map(|s| v_min + (v_max - v_min) * s as f64 / (steps - 1) as f64)
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Seesaw
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub max_iters: usize,
    /// Stop once a full round improves delta by less than this.
    pub tol: f64,
    /// Werner visibility of every pair on every link.
    pub visibility: f64,
    /// Perturb-and-reconverge attempts after the first ascent.
    pub perturbations: usize,
    /// Strength of each perturbation (rotation angle scale).
    pub kick: f64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-9,
            visibility: 1.0,
            perturbations: 10,
            kick: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeesawState {
    pub seed: u64,
    pub observables: Vec<Vec<Observable>>,
    pub hub_factors: Vec<Vec<Observable>>,
    pub delta: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Delta after every accepted update.
    pub history: Vec<f64>,
}

impl SeesawState {
    pub fn strategy(&self, state: &LinkState) -> QuantumStrategy {
        QuantumStrategy {
            observables: self.observables.clone(),
            hub_factors: self.hub_factors.clone(),
            states: vec![state.clone(); self.observables.len()],
        }
    }
}

const SIGN_ZERO_TOL: f64 = 1e-12;
const WEIGHT_FLOOR: f64 = 1e-12;
/// Step sizes tried when the full projected step does not improve.
const DAMPED_STEPS: [f64; 8] = [4.0, 2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];

fn project(h: &ComplexMatrix) -> ComplexMatrix {
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let (s, ties) = hermitian_sign(h, SIGN_ZERO_TOL * scale);
    if ties > 0 {
        warn!("{ties} zero eigenvalue(s) mapped to +1 during involution projection");
    }
    s
}

struct Seesaw<'a> {
    n: usize,
    signs: Vec<SignVector>,
    state: &'a LinkState,
    obs: Vec<Vec<ComplexMatrix>>,
    hub: Vec<Vec<ComplexMatrix>>,
}

impl Seesaw<'_> {
    fn edge(&self, k: usize, i: usize) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.obs[k][0].nrows(), self.obs[k][0].ncols());
        for (s, a) in self.signs[i].iter().zip(&self.obs[k]) {
            acc += a.scale(s);
        }
        acc
    }

    fn delta_from(&self, corr: &[Vec<f64>]) -> f64 {
        let inv_n = 1.0 / self.n as f64;
        (0..self.signs.len())
            .map(|i| corr.iter().map(|c| c[i]).product::<f64>().abs().powf(inv_n))
            .sum()
    }

    fn correlators(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.n)
            .map(|k| {
                (0..self.signs.len())
                    .map(|i| {
                        Ok(self
                            .state
                            .expectation(&self.edge(k, i), &self.hub[k][i])?
                            .re)
                    })
                    .collect()
            })
            .collect()
    }

    /// Exact maximization over hub factors: `B = sign(tr_A[(J ⊗ I) ρ])`.
    fn update_hub(&mut self) -> Result<()> {
        for k in 0..self.n {
            for i in 0..self.signs.len() {
                let eff = self.state.reduce_to_bob(&self.edge(k, i))?;
                self.hub[k][i] = project(&eff);
            }
        }
        Ok(())
    }

    /// Projected ascent step on party `k` with hub factors fixed.
    fn update_party(
        &mut self,
        k: usize,
        corr: &[Vec<f64>],
        current: f64,
    ) -> Result<Option<(f64, Vec<Vec<f64>>)>> {
        let n = self.n;
        let inv_n = 1.0 / n as f64;
        let terms = self.signs.len();
        let eff: Vec<ComplexMatrix> = (0..terms)
            .map(|i| self.state.reduce_to_alice(&self.hub[k][i]))
            .collect::<Result<_>>()?;
        // d/dc_k |Π c|^{1/n} = (1/n) sgn(c_k) |c_k|^{1/n−1} Π_{k'≠k} |c_{k'}|^{1/n}.
        let weights: Vec<f64> = (0..terms)
            .map(|i| {
                let others: f64 = (0..n)
                    .filter(|&q| q != k)
                    .map(|q| corr[q][i].abs().powf(inv_n))
                    .product();
                let c = corr[k][i];
                others * inv_n * c.abs().max(WEIGHT_FLOOR).powf(inv_n - 1.0) * c.signum()
            })
            .collect();
        let m = self.obs[k].len();
        let grads: Vec<ComplexMatrix> = (0..m)
            .map(|x| {
                let mut g = ComplexMatrix::zeros(eff[0].nrows(), eff[0].ncols());
                for i in 0..terms {
                    g += eff[i].scale(weights[i] * f64::from(self.signs[i][x]));
                }
                // Hermitian part of the gradient of tr(A F).
                (&g + g.adjoint()).scale(0.5)
            })
            .collect();
        let eval = |cand: &[ComplexMatrix]| -> Vec<f64> {
            (0..terms)
                .map(|i| {
                    cand.iter()
                        .zip(self.signs[i].iter())
                        .map(|(a, s)| s * trace(&(a * &eff[i])).re)
                        .sum()
                })
                .collect()
        };
        let old = self.obs[k].clone();
        let full: Vec<ComplexMatrix> = grads.iter().map(project).collect();
        let mut candidates = vec![full];
        for t in DAMPED_STEPS {
            candidates.push(
                old.iter()
                    .zip(&grads)
                    .map(|(a, g)| {
                        let gn = g.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
                        project(&(a + g.scale(t / gn)))
                    })
                    .collect(),
            );
        }
        for cand in candidates {
            let mut new_corr = corr.to_vec();
            new_corr[k] = eval(&cand);
            let d = self.delta_from(&new_corr);
            if d > current {
                self.obs[k] = cand;
                return Ok(Some((d, new_corr)));
            }
        }
        Ok(None)
    }

    /// Alternates hub and party updates until a round gains less than `tol`.
    /// Accepted values are appended to `history`.
    fn ascend(
        &mut self,
        max_iters: usize,
        tol: f64,
        history: &mut Vec<f64>,
    ) -> Result<(f64, usize, bool)> {
        let mut best = f64::NEG_INFINITY;
        let mut iterations = 0;
        while iterations < max_iters {
            iterations += 1;
            let round_start = best;
            // The hub step is an exact maximization, so it never decreases delta.
            self.update_hub()?;
            let mut corr = self.correlators()?;
            let mut delta = self.delta_from(&corr);
            if delta > best {
                history.push(delta);
            }
            for k in 0..self.n {
                if let Some((d, c)) = self.update_party(k, &corr, delta)? {
                    delta = d;
                    corr = c;
                    history.push(delta);
                }
            }
            best = best.max(delta);
            if best - round_start < tol {
                return Ok((best, iterations, true));
            }
        }
        Ok((best, iterations, false))
    }
}

/// One seeded seesaw trajectory. Observables live on `2^c` dimensions where
/// `c = cfg.copies_per_link`; links carry `c` Werner pairs at the configured
/// visibility. The returned delta is a lower bound on the maximum for that
/// dimension.
pub fn seesaw_maximize(
    cfg: &ScenarioConfig,
    seed: u64,
    opts: &SeesawOptions,
) -> Result<SeesawState> {
    let table = generate_table(cfg.m)?;
    let state = werner_copies(cfg.copies_per_link, opts.visibility)?;
    let dim = state.alice_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs = (0..cfg.n)
        .map(|_| {
            (0..cfg.m)
                .map(|_| random_traceless_involution(dim, &mut rng))
                .collect()
        })
        .collect();
    let hub = (0..cfg.n)
        .map(|_| {
            (0..table.len())
                .map(|_| random_traceless_involution(dim, &mut rng))
                .collect()
        })
        .collect();
    let mut ss = Seesaw {
        n: cfg.n,
        signs: table.sign_vectors(),
        state: &state,
        obs,
        hub,
    };

    let mut history = Vec::new();
    let (mut best, mut iterations, mut converged) =
        ss.ascend(opts.max_iters, opts.tol, &mut history)?;
    for _ in 0..opts.perturbations {
        let saved = (ss.obs.clone(), ss.hub.clone());
        // Independent rotations per observable; a common rotation per party
        // would be a symmetry and leave delta unchanged.
        for a in ss.obs.iter_mut().flatten() {
            let u = near_identity_unitary(dim, opts.kick, &mut rng);
            *a = &u * &*a * u.adjoint();
        }
        let mut trial = Vec::new();
        let (d, it, conv) = ss.ascend(opts.max_iters, opts.tol, &mut trial)?;
        iterations += it;
        if d > best + opts.tol {
            best = d;
            converged = conv;
            history.push(d);
        } else {
            (ss.obs, ss.hub) = saved;
        }
    }
    // Finish with a hub step so the reported factors are optimal for the
    // final observables.
    ss.update_hub()?;
    let delta = ss.delta_from(&ss.correlators()?);
    if delta > *history.last().unwrap_or(&f64::NEG_INFINITY) {
        history.push(delta);
    }
    debug!("seed {seed}: delta {delta} after {iterations} rounds");

    let wrap = |mats: Vec<Vec<ComplexMatrix>>| -> Result<Vec<Vec<Observable>>> {
        mats.into_iter()
            .enumerate()
            .map(|(k, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(x, mat)| Observable::new(mat).map(|o| o.with_label(k + 1, x + 1)))
                    .collect()
            })
            .collect()
    };
    Ok(SeesawState {
        seed,
        observables: wrap(ss.obs)?,
        hub_factors: wrap(ss.hub)?,
        delta,
        iterations,
        converged,
        history,
    })
}

#[derive(Debug, Clone)]
pub struct SeesawSummary {
    pub best: SeesawState,
    /// `(seed, delta)` for every restart, in seed order.
    pub per_seed: Vec<(u64, f64)>,
}

/// Runs one trajectory per seed in parallel and keeps the best (lowest seed
/// on ties).
pub fn seesaw_best(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    opts: &SeesawOptions,
) -> Result<SeesawSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidScenario(
            "at least one seed is required".into(),
        ));
    }
    let runs = seeds
        .par_iter()
        .map(|&s| seesaw_maximize(cfg, s, opts))
        .collect::<Result<Vec<_>>>()?;
    let per_seed = runs.iter().map(|r| (r.seed, r.delta)).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.delta > a.delta { b } else { a })
        .expect("non-empty");
    Ok(SeesawSummary { best, per_seed })
}

/// Seeds `base, base+1, …`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|s| base.wrapping_add(s)).collect()
}

// ---------------------------------------------------------------------------
// Activation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationResult {
    pub n: usize,
    pub m: usize,
    pub v: f64,
    pub alpha: f64,
    pub delta_single: f64,
    pub delta_multi: f64,
    pub violated_single: bool,
    pub violated_multi: bool,
}

impl ActivationResult {
    /// Single copy local, multiple copies nonlocal.
    pub fn activated(&self) -> bool {
        !self.violated_single && self.violated_multi
    }
}

/// Seesaw with one pair per link against `⌊m/2⌋` pairs, both at visibility `v`.
pub fn activation_experiment(
    n: usize,
    m: usize,
    v: f64,
    seeds: &[u64],
    max_iters: usize,
) -> Result<ActivationResult> {
    if m < 4 {
        return Err(Error::InvalidScenario(format!(
            "activation needs m >= 4, got m={m}"
        )));
    }
    let opts = SeesawOptions {
        max_iters,
        visibility: v,
        ..SeesawOptions::default()
    };
    let single = seesaw_best(&ScenarioConfig::with_copies(n, m, 1)?, seeds, &opts)?;
    let multi = seesaw_best(&ScenarioConfig::new(n, m)?, seeds, &opts)?;
    let alpha = alpha_closed_form(m)? as f64;
    Ok(ActivationResult {
        n,
        m,
        v,
        alpha,
        delta_single: single.best.delta,
        delta_multi: multi.best.delta,
        violated_single: single.best.delta > alpha + VIOLATION_SLACK,
        violated_multi: multi.best.delta > alpha + VIOLATION_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationScan {
    pub points: Vec<ActivationResult>,
    /// Smallest and largest grid visibility showing activation.
    pub window: Option<(f64, f64)>,
}

pub fn activation_scan(
    n: usize,
    m: usize,
    v_grid: &[f64],
    seeds: &[u64],
    max_iters: usize,
) -> Result<ActivationScan> {
    let points = v_grid
        .iter()
        .map(|&v| activation_experiment(n, m, v, seeds, max_iters))
        .collect::<Result<Vec<_>>>()?;
    let active: Vec<f64> = points
        .iter()
        .filter(|p| p.activated())
        .map(|p| p.v)
        .collect();
    let window = match (active.first(), active.last()) {
        (Some(&lo), Some(&hi)) => Some((lo, hi)),
        _ => None,
    };
    if let Some((lo, hi)) = window {
        debug!("activation window for m={m}: [{lo}, {hi}]");
    }
    Ok(ActivationScan { points, window })
}
