//! Fixed-point solver for the post-shock equity map.
//!
//! Given a base network, a shocked copy of it, and a calibrated model, the
//! equity map revalues every balance sheet at the current equity vector:
//!
//! ```text
//! phi_i(E) = A^e_i * V^e(E) - L^e_i + sum_j holdings[i][j] * V_j(E) - L^int_i
//! ```
//!
//! with `A^e` taken from the shocked network and all loss ratios anchored
//! at the unshocked one. The stress outcome is a self-consistent equity
//! vector `E* = phi(E*)`.
//!
//! The iteration is plain Picard: `E_(k+1) = phi(E_k)` starting from the
//! post-shock book equity, stopping when `max_i |E_(k+1)_i - E_(k)_i|`
//! drops below the tolerance. Because every valuation factor is at most
//! one and nondecreasing in equity, `phi` maps anything below the starting
//! point further down and preserves componentwise order, so the iterates
//! descend monotonically and the limit is the greatest fixed point: the
//! most favorable self-consistent outcome. Hitting the iteration cap is
//! reported explicitly via `converged = false`, never silently.
//!
//! Negative equities are carried through the iteration unmodified; only
//! positive parts enter the valuation factors. All arithmetic is
//! sequential and deterministic: the same inputs produce the same
//! trajectory, bit for bit.

use thiserror::Error;

use crate::network::{EquityVector, FinancialNetwork};
use crate::valuation::{CalibratedModel, ModelError, SystemState};

/// Relative weight of the default stop tolerance: `1e-9 * ||E(0)||_1`.
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-9;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop tolerance in currency units. `None` resolves to
    /// `1e-9 * ||E(0)||_1` of the network being solved.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    /// Record every iterate instead of just the first and last.
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            record_trajectory: false,
        }
    }
}

impl SolverConfig {
    /// The stop tolerance this configuration implies for a network with the
    /// given unshocked book equity.
    pub fn resolve_tolerance(&self, initial_equity: &EquityVector) -> f64 {
        match self.tolerance {
            Some(t) => t,
            None => DEFAULT_RELATIVE_TOLERANCE * initial_equity.l1_norm(),
        }
    }
}

/// Outcome of one fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Recorded equity iterates. With `record_trajectory` every iterate is
    /// kept, in order; otherwise only the initial iterate and the final
    /// one.
    pub iterates: Vec<EquityVector>,
    /// Rate change evaluated at the final iterate (zero unless the model
    /// is `ir-feedback`).
    pub final_delta_r: f64,
    /// Number of applications of the equity map.
    pub iterations_used: usize,
    /// False when the iteration cap was reached before the stop rule.
    pub converged: bool,
    /// True when every step was componentwise nonincreasing.
    pub monotone: bool,
}

impl Trajectory {
    pub fn final_equity(&self) -> &EquityVector {
        self.iterates.last().expect("trajectory holds at least the initial iterate")
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("shocked network inconsistent with base network: {what}")]
    NetworkMismatch { what: String },
    #[error("invalid solver configuration: {what}")]
    Config { what: String },
}

/// A bound stress problem: base network, shocked network, calibrated
/// model. Construction verifies the two networks differ only by an
/// external-asset write-down and that the model fits the network, so
/// [`FixedPointProblem::phi`] and [`FixedPointProblem::solve`] cannot be
/// run on mismatched inputs.
#[derive(Debug)]
pub struct FixedPointProblem<'a> {
    shocked: &'a FinancialNetwork,
    model: &'a CalibratedModel,
    initial_equity: EquityVector,
    internal_liabilities: Vec<f64>,
    liabilities: Vec<f64>,
    initial_iterate: EquityVector,
}

impl<'a> FixedPointProblem<'a> {
    pub fn new(
        network: &'a FinancialNetwork,
        shocked: &'a FinancialNetwork,
        model: &'a CalibratedModel,
    ) -> Result<Self, SolverError> {
        let n = network.n();
        if shocked.n() != n {
            return Err(SolverError::NetworkMismatch {
                what: format!("{} institutions vs {}", shocked.n(), n),
            });
        }
        for i in 0..n {
            if shocked.institution(i).id != network.institution(i).id {
                return Err(SolverError::NetworkMismatch {
                    what: format!("institution {i} id differs"),
                });
            }
            if shocked.holdings_row(i) != network.holdings_row(i) {
                return Err(SolverError::NetworkMismatch {
                    what: format!("internal holdings of institution {i} differ"),
                });
            }
            if shocked.external_liabilities()[i] != network.external_liabilities()[i] {
                return Err(SolverError::NetworkMismatch {
                    what: format!("external liabilities of institution {i} differ"),
                });
            }
            if shocked.external_assets()[i] > network.external_assets()[i] {
                return Err(SolverError::NetworkMismatch {
                    what: format!("institution {i} gained external assets under the shock"),
                });
            }
        }
        model.check_dimensions(n)?;

        let initial_equity = network.book_equity();
        let liabilities = network.total_liabilities();
        // Fails fast on initially insolvent institutions.
        SystemState::build(model, initial_equity.clone(), &initial_equity, &liabilities)?;

        Ok(FixedPointProblem {
            shocked,
            model,
            internal_liabilities: network.internal_liability_totals(),
            initial_iterate: shocked.book_equity(),
            initial_equity,
            liabilities,
        })
    }

    /// Unshocked book equity, the anchor of every loss ratio.
    pub fn initial_equity(&self) -> &EquityVector {
        &self.initial_equity
    }

    /// Post-shock book equity, the starting iterate. Institutions already
    /// insolvent here default directly, before any revaluation.
    pub fn initial_iterate(&self) -> &EquityVector {
        &self.initial_iterate
    }

    fn state_at(&self, equity: EquityVector) -> Result<SystemState, ModelError> {
        SystemState::build(self.model, equity, &self.initial_equity, &self.liabilities)
    }

    fn phi_at(&self, state: &SystemState) -> EquityVector {
        let n = self.shocked.n();
        let v_ext = self.model.value_external(state);
        let v_int: Vec<f64> = (0..n).map(|j| self.model.value_internal(j, state)).collect();
        let ext_assets = self.shocked.external_assets();
        let ext_liabilities = self.shocked.external_liabilities();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = ext_assets[i] * v_ext - ext_liabilities[i];
            for (h, v) in self.shocked.holdings_row(i).iter().zip(&v_int) {
                acc += h * v;
            }
            acc -= self.internal_liabilities[i];
            out.push(acc);
        }
        EquityVector::new(out)
    }

    /// One application of the equity map at the given equity vector.
    pub fn phi(&self, equity: &EquityVector) -> Result<EquityVector, SolverError> {
        let state = self.state_at(equity.clone())?;
        Ok(self.phi_at(&state))
    }

    /// Picard iteration from the post-shock book equity.
    pub fn solve(&self, config: &SolverConfig) -> Result<Trajectory, SolverError> {
        if config.max_iterations == 0 {
            return Err(SolverError::Config { what: "max_iterations must be at least 1".into() });
        }
        let epsilon = config.resolve_tolerance(&self.initial_equity);
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(SolverError::Config {
                what: format!("tolerance must be positive and finite, resolved to {epsilon}"),
            });
        }

        let mut current = self.initial_iterate.clone();
        let mut iterates = vec![current.clone()];
        let mut monotone = true;
        let mut converged = false;
        let mut iterations_used = 0;

        for k in 1..=config.max_iterations {
            let state = self.state_at(current.clone())?;
            let next = self.phi_at(&state);
            if !next.le(&current) {
                monotone = false;
            }
            let step = next.max_abs_diff(&current);
            iterations_used = k;
            if config.record_trajectory {
                iterates.push(next.clone());
            }
            current = next;
            if step < epsilon {
                converged = true;
                break;
            }
        }

        if !config.record_trajectory {
            iterates.push(current.clone());
        }
        let final_delta_r = self.state_at(current)?.delta_r();
        Ok(Trajectory { iterates, final_delta_r, iterations_used, converged, monotone })
    }
}

/// One application of the equity map, for callers that do not need to keep
/// a bound problem around.
pub fn phi_map(
    network: &FinancialNetwork,
    shocked: &FinancialNetwork,
    model: &CalibratedModel,
    equity: &EquityVector,
) -> Result<EquityVector, SolverError> {
    FixedPointProblem::new(network, shocked, model)?.phi(equity)
}

/// Solves the stress fixed point for a prepared shocked network.
pub fn solve_fixed_point(
    network: &FinancialNetwork,
    shocked: &FinancialNetwork,
    model: &CalibratedModel,
    config: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    FixedPointProblem::new(network, shocked, model)?.solve(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Institution, ShockScenario};
    use crate::testing::random_network;
    use crate::valuation::{calibrate, ModelSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Symmetric two-bank network: each holds 20 of the other's debt,
    /// book equity (20, 20).
    fn mutual_two_bank() -> FinancialNetwork {
        FinancialNetwork::from_parts(
            vec![Institution::bank("A"), Institution::bank("B")],
            vec![100.0, 100.0],
            vec![80.0, 80.0],
            vec![vec![0.0, 20.0], vec![20.0, 0.0]],
        )
        .unwrap()
    }

    fn all_specs() -> Vec<ModelSpec> {
        vec![
            ModelSpec::linear_dr(),
            ModelSpec::recovery_dr(0.5),
            ModelSpec::reduced_form(2.0, 0.5, 1.0),
            ModelSpec::ir_feedback(2.0, 0.5, 1.0, 0.05, 0.5),
        ]
    }

    #[test]
    fn phi_is_constant_without_internal_holdings() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("solo")],
            vec![100.0],
            vec![90.0],
            vec![vec![0.0]],
        )
        .unwrap();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        for e in [5.0, -3.0, 10.0, 200.0] {
            let phi = phi_map(&net, &net, &model, &EquityVector::new(vec![e])).unwrap();
            assert_eq!(phi.as_slice(), &[10.0]);
        }
    }

    #[test]
    fn phi_fixes_unshocked_book_equity_for_every_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for spec in all_specs() {
            let model = calibrate(&spec).unwrap();
            for _ in 0..20 {
                let n = 1 + rng.gen_range(0..10);
                let net = random_network(&mut rng, n);
                let e0 = net.book_equity();
                let phi = phi_map(&net, &net, &model, &e0).unwrap();
                assert_eq!(phi, e0, "{}", spec.variant_name());
            }
        }
    }

    #[test]
    fn phi_two_bank_after_ten_percent_shock() {
        let net = mutual_two_bank();
        let shocked = net.apply_shock(&ShockScenario::uniform(0.1).unwrap()).unwrap();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        let direct = shocked.book_equity();
        assert_eq!(direct.as_slice(), &[10.0, 10.0]);
        let phi = phi_map(&net, &shocked, &model, &direct).unwrap();
        assert_eq!(phi.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn solve_two_bank_hand_sequence_exactly() {
        let net = mutual_two_bank();
        let shocked = net.apply_shock(&ShockScenario::uniform(0.1).unwrap()).unwrap();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        let config = SolverConfig { record_trajectory: true, ..SolverConfig::default() };
        let traj = solve_fixed_point(&net, &shocked, &model, &config).unwrap();
        assert!(traj.converged);
        assert!(traj.monotone);
        assert_eq!(traj.iterations_used, 3);
        let recorded: Vec<&[f64]> = traj.iterates.iter().map(|e| e.as_slice()).collect();
        assert_eq!(
            recorded,
            vec![
                &[10.0, 10.0][..],
                &[0.0, 0.0][..],
                &[-10.0, -10.0][..],
                &[-10.0, -10.0][..],
            ]
        );
        assert_eq!(traj.final_equity().as_slice(), &[-10.0, -10.0]);
        assert_eq!(traj.final_delta_r, 0.0);
    }

    #[test]
    fn zero_shock_converges_in_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for spec in all_specs() {
            let model = calibrate(&spec).unwrap();
            for _ in 0..10 {
                let n = 1 + rng.gen_range(0..10);
                let net = random_network(&mut rng, n);
                let traj =
                    solve_fixed_point(&net, &net, &model, &SolverConfig::default()).unwrap();
                assert!(traj.converged);
                assert_eq!(traj.iterations_used, 1, "{}", spec.variant_name());
                assert_eq!(traj.final_equity(), &net.book_equity());
                assert_eq!(traj.iterates.len(), 2);
            }
        }
    }

    #[test]
    fn reduced_form_without_holdings_converges_within_two_iterations() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("a"), Institution::bank("b")],
            vec![100.0, 50.0],
            vec![60.0, 20.0],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let model = calibrate(&ModelSpec::reduced_form(3.0, 0.5, 1.0)).unwrap();
        for a in [0.0, 0.05, 0.2, 0.9] {
            let shocked = net.apply_shock(&ShockScenario::uniform(a).unwrap()).unwrap();
            let traj = solve_fixed_point(&net, &shocked, &model, &SolverConfig::default()).unwrap();
            assert!(traj.converged);
            assert!(traj.iterations_used <= 2, "a = {a}: {}", traj.iterations_used);
        }
    }

    #[test]
    fn iterates_descend_monotonically_on_random_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for spec in all_specs() {
            let model = calibrate(&spec).unwrap();
            for _ in 0..25 {
                let n = 1 + rng.gen_range(0..12);
                let net = random_network(&mut rng, n);
                let a = rng.gen_range(0.0..0.5);
                let shocked = net.apply_shock(&ShockScenario::uniform(a).unwrap()).unwrap();
                let config = SolverConfig { record_trajectory: true, ..SolverConfig::default() };
                let traj = solve_fixed_point(&net, &shocked, &model, &config).unwrap();
                assert!(traj.converged, "{} n={n} a={a}", spec.variant_name());
                assert!(traj.monotone, "{} n={n} a={a}", spec.variant_name());
                for pair in traj.iterates.windows(2) {
                    assert!(pair[1].le(&pair[0]));
                }
            }
        }
    }

    #[test]
    fn reported_fixed_point_has_small_residual() {
        // One extra application of phi at the reported solution moves it by
        // less than twice the stop tolerance.
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for spec in all_specs() {
            let model = calibrate(&spec).unwrap();
            for _ in 0..25 {
                let n = 1 + rng.gen_range(0..12);
                let net = random_network(&mut rng, n);
                let a = rng.gen_range(0.0..0.6);
                let shocked = net.apply_shock(&ShockScenario::uniform(a).unwrap()).unwrap();
                let problem = FixedPointProblem::new(&net, &shocked, &model).unwrap();
                let config = SolverConfig::default();
                let traj = problem.solve(&config).unwrap();
                assert!(traj.converged);
                let e_star = traj.final_equity();
                let residual = problem.phi(e_star).unwrap().max_abs_diff(e_star);
                let eps = config.resolve_tolerance(problem.initial_equity());
                assert!(residual < 2.0 * eps, "residual {residual} vs eps {eps}");
            }
        }
    }

    #[test]
    fn converges_on_networks_up_to_fifty_institutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for spec in all_specs() {
            let model = calibrate(&spec).unwrap();
            for _ in 0..5 {
                let n = 20 + rng.gen_range(0..31);
                let net = random_network(&mut rng, n);
                let a = rng.gen_range(0.0..0.8);
                let shocked = net.apply_shock(&ShockScenario::uniform(a).unwrap()).unwrap();
                let traj =
                    solve_fixed_point(&net, &shocked, &model, &SolverConfig::default()).unwrap();
                assert!(traj.converged, "{} n={n} a={a}", spec.variant_name());
            }
        }
    }

    #[test]
    fn deeper_shocks_produce_componentwise_lower_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for spec in all_specs() {
            let model = calibrate(&spec).unwrap();
            for _ in 0..15 {
                let n = 2 + rng.gen_range(0..10);
                let net = random_network(&mut rng, n);
                let a1 = rng.gen_range(0.0..0.4);
                let a2 = a1 + rng.gen_range(0.0..0.4);
                let s1 = net.apply_shock(&ShockScenario::uniform(a1).unwrap()).unwrap();
                let s2 = net.apply_shock(&ShockScenario::uniform(a2).unwrap()).unwrap();
                let t1 = solve_fixed_point(&net, &s1, &model, &SolverConfig::default()).unwrap();
                let t2 = solve_fixed_point(&net, &s2, &model, &SolverConfig::default()).unwrap();
                assert!(t1.converged && t2.converged);
                // Small slack: the two runs stop within tolerance of their
                // exact fixed points, not exactly on them.
                let eps = SolverConfig::default().resolve_tolerance(&net.book_equity());
                for i in 0..n {
                    assert!(
                        t2.final_equity()[i] <= t1.final_equity()[i] + 2.0 * eps,
                        "{}: component {i}: {} vs {}",
                        spec.variant_name(),
                        t2.final_equity()[i],
                        t1.final_equity()[i]
                    );
                }
            }
        }
    }

    #[test]
    fn hitting_the_iteration_cap_reports_non_convergence() {
        let net = mutual_two_bank();
        let shocked = net.apply_shock(&ShockScenario::uniform(0.1).unwrap()).unwrap();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        let config = SolverConfig { max_iterations: 1, ..SolverConfig::default() };
        let traj = solve_fixed_point(&net, &shocked, &model, &config).unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.iterations_used, 1);
        assert_eq!(traj.final_equity().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn default_tolerance_scales_with_initial_equity() {
        let net = mutual_two_bank();
        let eps = SolverConfig::default().resolve_tolerance(&net.book_equity());
        assert_eq!(eps, 1e-9 * 40.0);
    }

    #[test]
    fn solve_rejects_degenerate_configurations() {
        let net = mutual_two_bank();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        let problem = FixedPointProblem::new(&net, &net, &model).unwrap();
        let err = problem
            .solve(&SolverConfig { max_iterations: 0, ..SolverConfig::default() })
            .unwrap_err();
        assert!(matches!(err, SolverError::Config { .. }));
        let err = problem
            .solve(&SolverConfig { tolerance: Some(0.0), ..SolverConfig::default() })
            .unwrap_err();
        assert!(matches!(err, SolverError::Config { .. }));
        let err = problem
            .solve(&SolverConfig { tolerance: Some(-1.0), ..SolverConfig::default() })
            .unwrap_err();
        assert!(matches!(err, SolverError::Config { .. }));
    }

    #[test]
    fn problem_construction_rejects_mismatched_networks() {
        let net = mutual_two_bank();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();

        // More external assets than the base network: not a write-down.
        let richer = FinancialNetwork::from_parts(
            vec![Institution::bank("A"), Institution::bank("B")],
            vec![150.0, 100.0],
            vec![80.0, 80.0],
            vec![vec![0.0, 20.0], vec![20.0, 0.0]],
        )
        .unwrap();
        assert!(matches!(
            FixedPointProblem::new(&net, &richer, &model),
            Err(SolverError::NetworkMismatch { .. })
        ));

        // Different internal holdings.
        let rewired = FinancialNetwork::from_parts(
            vec![Institution::bank("A"), Institution::bank("B")],
            vec![100.0, 100.0],
            vec![80.0, 80.0],
            vec![vec![0.0, 25.0], vec![20.0, 0.0]],
        )
        .unwrap();
        assert!(matches!(
            FixedPointProblem::new(&net, &rewired, &model),
            Err(SolverError::NetworkMismatch { .. })
        ));

        // Different size.
        let single = FinancialNetwork::from_parts(
            vec![Institution::bank("A")],
            vec![100.0],
            vec![80.0],
            vec![vec![0.0]],
        )
        .unwrap();
        assert!(matches!(
            FixedPointProblem::new(&net, &single, &model),
            Err(SolverError::NetworkMismatch { .. })
        ));
    }

    #[test]
    fn problem_construction_rejects_initially_insolvent_institutions() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("under")],
            vec![50.0],
            vec![60.0],
            vec![vec![0.0]],
        )
        .unwrap();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        assert!(matches!(
            FixedPointProblem::new(&net, &net, &model),
            Err(SolverError::Model(ModelError::DegenerateInstitution { .. }))
        ));
    }

    #[test]
    fn param_vector_length_is_checked_against_network() {
        let net = mutual_two_bank();
        let model = calibrate(&ModelSpec::recovery_dr(vec![0.5, 0.5, 0.5])).unwrap();
        assert!(matches!(
            FixedPointProblem::new(&net, &net, &model),
            Err(SolverError::Model(ModelError::ParamLengthMismatch { .. }))
        ));
    }
}
