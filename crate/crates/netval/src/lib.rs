//! Network valuation of equity cross-holdings.
//!
//! Institutions hold each other's debt, so a fall in one balance sheet
//! marks down the assets of its creditors, which marks down theirs in
//! turn. This crate models that feedback as a fixed-point problem: a
//! valuation model maps current equities to claim values, claim values map
//! back to equities, and the stress outcome is the greatest fixed point of
//! the composition, reached by monotone iteration from the post-shock
//! balance sheet.
//!
//! The pieces:
//!
//! * [`network`]: balance sheets, book equity, shocks, validation.
//! * [`valuation`]: the four claim-valuation families and calibration.
//! * [`solver`]: the equity map and its fixed-point iteration.
//! * [`stress`]: scenarios, default classification, parameter sweeps.
//! * [`io`]: CSV/JSON formats, result tables, synthetic networks.
//! * [`guide`]: the user guide, with every example compiled and run.
//!
//! # Quick start
//!
//! ```
//! use netval::network::{FinancialNetwork, Institution, ShockScenario};
//! use netval::valuation::{calibrate, ModelSpec};
//! use netval::stress::run_scenario;
//! use netval::solver::SolverConfig;
//!
//! // Two banks: bank A holds 20 of bank B's debt.
//! let network = FinancialNetwork::from_parts(
//!     vec![Institution::bank("A"), Institution::bank("B")],
//!     vec![100.0, 100.0],      // external assets
//!     vec![80.0, 70.0],        // external liabilities
//!     vec![vec![0.0, 20.0], vec![0.0, 0.0]],
//! )?;
//! assert_eq!(network.book_equity().as_slice(), &[40.0, 10.0]);
//!
//! // Devalue external assets by 10% and revalue under linear write-downs.
//! let model = calibrate(&ModelSpec::linear_dr())?;
//! let result = run_scenario(&network, &model, 0.10, &SolverConfig::default())?;
//! assert!(result.converged);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod guide;
pub mod io;
pub mod network;
pub mod solver;
pub mod stress;
pub mod testing;
pub mod valuation;
