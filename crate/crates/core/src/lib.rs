//! Generalized n-locality inequalities for star networks.
//!
//! `n` edge parties each measure `m` binary observables; the hub measures
//! `2^{m-1}`. The functional `Δ = Σ_i |J_i|^{1/n}` is bounded by `α_m` for
//! n-local models and reaches `2^{m-1}√m` with anticommuting observables on
//! `⌊m/2⌋` Bell pairs per link.
//!
//! ```
//! use starnet_core::{encoding, network};
//!
//! let cfg = network::ScenarioConfig::new(2, 3).unwrap();
//! let table = encoding::generate_table(cfg.m).unwrap();
//! let strat = network::build_optimal_strategy(&cfg).unwrap();
//! let report = network::evaluate_quantum(&cfg, &table, &strat).unwrap();
//! assert!((report.delta - 4.0 * 3f64.sqrt()).abs() < 1e-8);
//! assert_eq!(report.classical_bound, 6.0);
//! ```

pub mod encoding;
pub mod error;
pub mod export;
pub mod lhv;
pub mod network;
pub mod optimize;
pub mod qcore;
pub mod sos;

pub use error::{Error, Result};
