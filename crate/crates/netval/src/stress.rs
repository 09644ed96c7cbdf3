//! Stress harness: shock scenarios, default classification, parameter
//! sweeps.
//!
//! A scenario devalues external assets by a fraction `a`, solves the
//! equity fixed point, and classifies defaults against the inclusive
//! threshold `E <= 0`:
//!
//! * direct defaults are insolvent at the post-shock book equity, before
//!   any revaluation;
//! * total defaults are insolvent at the fixed point;
//! * indirect defaults are the difference, the institutions dragged under
//!   by contagion alone.
//!
//! Sweeps run a scenario per point of a shock grid crossed with named
//! parameter grids. Rows are generated in deterministic order (shocks
//! outer, parameter combinations inner, each grid in its spec order), and
//! every scenario is independent of the others, so the table is
//! reproducible bit for bit.

use thiserror::Error;

use crate::network::{EquityVector, FinancialNetwork, NetworkError, ShockScenario};
use crate::solver::{FixedPointProblem, SolverConfig, SolverError};
use crate::valuation::{calibrate, CalibratedModel, ModelError, ModelSpec};

/// Default shock grid for sweeps: 21 points over `[0, 0.10]`.
pub const DEFAULT_SHOCK_GRID: ShockGrid = ShockGrid { start: 0.0, stop: 0.10, step: 0.005 };

#[derive(Debug, Error)]
pub enum StressError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid grid: {what}")]
    InvalidGrid { what: String },
    #[error("result table is empty")]
    EmptyTable,
}

/// Defaults of one scenario, classified against the inclusive threshold
/// `E <= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefaultCounts {
    /// Insolvent at the post-shock book equity.
    pub direct: usize,
    /// Insolvent at the fixed point.
    pub total: usize,
    /// `total - direct`, floored at zero for inputs where a direct default
    /// recovered (cannot happen along a monotone trajectory).
    pub indirect: usize,
    /// Indices insolvent at the fixed point, ascending.
    pub defaulted: Vec<usize>,
}

/// Classifies defaults given the pre-revaluation equity and the fixed
/// point. Panics if the vectors disagree in length.
pub fn classify_defaults(direct_equity: &EquityVector, final_equity: &EquityVector) -> DefaultCounts {
    assert_eq!(direct_equity.len(), final_equity.len(), "equity vector length mismatch");
    let direct = direct_equity.iter().filter(|&&e| e <= 0.0).count();
    let defaulted: Vec<usize> = final_equity
        .iter()
        .enumerate()
        .filter(|(_, &e)| e <= 0.0)
        .map(|(i, _)| i)
        .collect();
    let total = defaulted.len();
    DefaultCounts { direct, total, indirect: total.saturating_sub(direct), defaulted }
}

/// Outcome of one shock scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub shock: f64,
    pub direct_defaults: usize,
    pub total_defaults: usize,
    /// Ids of institutions insolvent at the fixed point, in network order.
    pub defaulted: Vec<String>,
    pub final_equity: EquityVector,
    pub final_delta_r: f64,
    pub converged: bool,
    pub iterations_used: usize,
}

impl ScenarioResult {
    /// Defaults caused by contagion alone: `total - direct`.
    pub fn indirect_defaults(&self) -> usize {
        self.total_defaults.saturating_sub(self.direct_defaults)
    }

    /// System equity at the fixed point.
    pub fn total_final_equity(&self) -> f64 {
        self.final_equity.sum()
    }
}

/// Shocks the network by `a`, solves the fixed point, classifies defaults.
/// Solver non-convergence is surfaced in the result, not an error.
pub fn run_scenario(
    network: &FinancialNetwork,
    model: &CalibratedModel,
    a: f64,
    config: &SolverConfig,
) -> Result<ScenarioResult, StressError> {
    let scenario = ShockScenario::uniform(a)?;
    let shocked = network.apply_shock(&scenario)?;
    let problem = FixedPointProblem::new(network, &shocked, model)?;
    let trajectory = problem.solve(config)?;
    let counts = classify_defaults(problem.initial_iterate(), trajectory.final_equity());
    Ok(ScenarioResult {
        shock: a,
        direct_defaults: counts.direct,
        total_defaults: counts.total,
        defaulted: counts
            .defaulted
            .iter()
            .map(|&i| network.institution(i).id.clone())
            .collect(),
        final_equity: trajectory.final_equity().clone(),
        final_delta_r: trajectory.final_delta_r,
        converged: trajectory.converged,
        iterations_used: trajectory.iterations_used,
    })
}

/// Inclusive arithmetic grid of shock magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ShockGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, StressError> {
        let grid = ShockGrid { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), StressError> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.step.is_finite()
            && (0.0..=1.0).contains(&self.start)
            && self.start <= self.stop
            && self.stop <= 1.0
            && self.step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(StressError::InvalidGrid {
                what: format!(
                    "shock grid {}:{}:{} must satisfy 0 <= start <= stop <= 1 and step > 0",
                    self.start, self.stop, self.step
                ),
            })
        }
    }

    /// Grid points `start + k * step` up to `stop` inclusive. The endpoint
    /// is kept when it lands within a relative rounding slack of the grid,
    /// so decimal steps like `0.005` do not drop it.
    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let mut count = (span / self.step).round();
        if !count.is_finite() || count < 0.0 {
            count = 0.0;
        }
        if self.start + count * self.step > self.stop + self.step * 1e-9 {
            count -= 1.0;
        }
        let count = count.max(0.0) as usize;
        (0..=count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// One named parameter and the values to sweep it over.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub name: String,
    pub values: Vec<f64>,
}

/// A full sweep: model template, shock grid, parameter grids, solver
/// settings. Parameter names must exist on the template variant; the sweep
/// aborts before running anything if one does not.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub model: ModelSpec,
    pub shocks: ShockGrid,
    pub params: Vec<ParamGrid>,
    pub solver: SolverConfig,
}

impl SweepSpec {
    pub fn new(model: ModelSpec, shocks: ShockGrid) -> Self {
        SweepSpec { model, shocks, params: Vec::new(), solver: SolverConfig::default() }
    }
}

/// One row of a sweep result table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Parameter assignment of this row, in spec order. Empty when the
    /// sweep had no parameter grid.
    pub params: Vec<(String, f64)>,
    pub result: ScenarioResult,
}

fn param_combinations(params: &[ParamGrid]) -> Result<Vec<Vec<(String, f64)>>, StressError> {
    let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for grid in params {
        if grid.values.is_empty() {
            return Err(StressError::InvalidGrid {
                what: format!("parameter '{}' has no values", grid.name),
            });
        }
        let mut next = Vec::with_capacity(combos.len() * grid.values.len());
        for combo in &combos {
            for &v in &grid.values {
                let mut c = combo.clone();
                c.push((grid.name.clone(), v));
                next.push(c);
            }
        }
        combos = next;
    }
    Ok(combos)
}

/// Runs one scenario per point of the shock grid crossed with the
/// parameter grids. Row order is deterministic: shocks outer, parameter
/// combinations inner (Cartesian product in spec order). Every parameter
/// combination is validated and calibrated before the first solve.
pub fn sweep(network: &FinancialNetwork, spec: &SweepSpec) -> Result<Vec<SweepRow>, StressError> {
    spec.shocks.validate()?;
    let combos = param_combinations(&spec.params)?;
    let mut prepared: Vec<(Vec<(String, f64)>, CalibratedModel)> = Vec::with_capacity(combos.len());
    for combo in combos {
        let mut model_spec = spec.model.clone();
        for (name, value) in &combo {
            model_spec = model_spec.with_param(name, *value)?;
        }
        prepared.push((combo, calibrate(&model_spec)?));
    }
    let shocks = spec.shocks.values();
    let mut rows = Vec::with_capacity(shocks.len() * prepared.len());
    for &a in &shocks {
        for (combo, model) in &prepared {
            let result = run_scenario(network, model, a, &spec.solver)?;
            rows.push(SweepRow { params: combo.clone(), result });
        }
    }
    Ok(rows)
}

/// Worst case across parameter combinations at one shock level.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub shock: f64,
    pub max_total_defaults: usize,
    pub max_indirect_defaults: usize,
}

/// Per-shock maxima of total and indirect defaults across all rows.
/// Shocks keep their first-seen order. Errors on an empty table.
pub fn envelope(rows: &[SweepRow]) -> Result<Vec<EnvelopePoint>, StressError> {
    if rows.is_empty() {
        return Err(StressError::EmptyTable);
    }
    let mut points: Vec<EnvelopePoint> = Vec::new();
    for row in rows {
        let total = row.result.total_defaults;
        let indirect = row.result.indirect_defaults();
        match points.iter_mut().find(|p| p.shock == row.result.shock) {
            Some(p) => {
                p.max_total_defaults = p.max_total_defaults.max(total);
                p.max_indirect_defaults = p.max_indirect_defaults.max(indirect);
            }
            None => points.push(EnvelopePoint {
                shock: row.result.shock,
                max_total_defaults: total,
                max_indirect_defaults: indirect,
            }),
        }
    }
    Ok(points)
}

/// Shocks where total defaults jump by at least `jump` relative to the
/// previous grid point. `series` must be ordered by shock.
pub fn critical_points(series: &[(f64, usize)], jump: usize) -> Vec<f64> {
    series
        .windows(2)
        .filter(|w| w[1].1.saturating_sub(w[0].1) >= jump && jump > 0)
        .map(|w| w[1].0)
        .collect()
}

/// Smallest shock in the series whose total defaults reach `threshold`.
pub fn first_shock_reaching(series: &[(f64, usize)], threshold: usize) -> Option<f64> {
    series.iter().find(|(_, d)| *d >= threshold).map(|(a, _)| *a)
}

/// Rows matching an exact parameter assignment, as a (shock, total
/// defaults) series in row order.
pub fn default_series(rows: &[SweepRow], params: &[(&str, f64)]) -> Vec<(f64, usize)> {
    rows.iter()
        .filter(|row| {
            row.params.len() == params.len()
                && row.params.iter().zip(params).all(|((n, v), (pn, pv))| n == pn && v == pv)
        })
        .map(|row| (row.result.shock, row.result.total_defaults))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Institution;
    use crate::testing::random_network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mutual_two_bank() -> FinancialNetwork {
        FinancialNetwork::from_parts(
            vec![Institution::bank("A"), Institution::bank("B")],
            vec![100.0, 100.0],
            vec![80.0, 80.0],
            vec![vec![0.0, 20.0], vec![20.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn classify_defaults_spec_cases() {
        let counts = classify_defaults(
            &EquityVector::new(vec![10.0, 10.0]),
            &EquityVector::new(vec![10.0, 10.0]),
        );
        assert_eq!(counts, DefaultCounts { direct: 0, total: 0, indirect: 0, defaulted: vec![] });

        let counts = classify_defaults(
            &EquityVector::new(vec![-5.0, 10.0]),
            &EquityVector::new(vec![-5.0, -1.0]),
        );
        assert_eq!(
            counts,
            DefaultCounts { direct: 1, total: 2, indirect: 1, defaulted: vec![0, 1] }
        );

        // The threshold is inclusive: exactly zero equity is a default.
        let counts = classify_defaults(
            &EquityVector::new(vec![0.0, 1.0]),
            &EquityVector::new(vec![0.0, 0.0]),
        );
        assert_eq!(
            counts,
            DefaultCounts { direct: 1, total: 2, indirect: 1, defaulted: vec![0, 1] }
        );
    }

    #[test]
    fn classify_defaults_floors_indirect_at_zero() {
        // A direct default that recovered: impossible along a monotone
        // trajectory, but the classifier must not underflow on raw input.
        let counts =
            classify_defaults(&EquityVector::new(vec![-1.0]), &EquityVector::new(vec![1.0]));
        assert_eq!(counts, DefaultCounts { direct: 1, total: 0, indirect: 0, defaulted: vec![] });
    }

    #[test]
    fn zero_shock_scenario_has_no_defaults() {
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..10 {
            let net = random_network(&mut rng, 6);
            let result = run_scenario(&net, &model, 0.0, &SolverConfig::default()).unwrap();
            assert!(result.converged);
            assert_eq!(result.iterations_used, 1);
            assert_eq!(result.total_defaults, 0);
            assert_eq!(result.direct_defaults, 0);
            assert!(result.defaulted.is_empty());
        }
    }

    #[test]
    fn two_bank_ten_percent_shock_defaults_both_banks_indirectly() {
        let net = mutual_two_bank();
        let model = calibrate(&ModelSpec::linear_dr()).unwrap();
        let result = run_scenario(&net, &model, 0.1, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.direct_defaults, 0);
        assert_eq!(result.total_defaults, 2);
        assert_eq!(result.indirect_defaults(), 2);
        assert_eq!(result.defaulted, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(result.final_equity.as_slice(), &[-10.0, -10.0]);
        assert_eq!(result.total_final_equity(), -20.0);
    }

    #[test]
    fn without_internal_holdings_every_default_is_direct() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("a"), Institution::bank("b"), Institution::bank("c")],
            vec![100.0, 60.0, 80.0],
            vec![85.0, 50.0, 40.0],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        for spec in [ModelSpec::linear_dr(), ModelSpec::reduced_form(10.0, 0.5, 1.0)] {
            let model = calibrate(&spec).unwrap();
            for a in [0.0, 0.1, 0.16, 0.3, 0.6] {
                let result = run_scenario(&net, &model, a, &SolverConfig::default()).unwrap();
                assert_eq!(
                    result.total_defaults,
                    result.direct_defaults,
                    "{} a={a}",
                    spec.variant_name()
                );
            }
        }
    }

    #[test]
    fn shock_grid_generates_inclusive_decimal_grids() {
        let grid = ShockGrid::new(0.0, 0.10, 0.005).unwrap();
        let values = grid.values();
        assert_eq!(values.len(), 21);
        assert_eq!(values[0], 0.0);
        assert!((values[20] - 0.10).abs() < 1e-12);
        assert!((values[1] - 0.005).abs() < 1e-12);

        let pair = ShockGrid::new(0.0, 0.005, 0.005).unwrap().values();
        assert_eq!(pair.len(), 2);

        let single = ShockGrid::new(0.25, 0.25, 0.01).unwrap().values();
        assert_eq!(single, vec![0.25]);
    }

    #[test]
    fn shock_grid_rejects_bad_bounds() {
        assert!(ShockGrid::new(-0.1, 0.5, 0.1).is_err());
        assert!(ShockGrid::new(0.0, 1.1, 0.1).is_err());
        assert!(ShockGrid::new(0.5, 0.4, 0.1).is_err());
        assert!(ShockGrid::new(0.0, 0.5, 0.0).is_err());
        assert!(ShockGrid::new(0.0, 0.5, -0.1).is_err());
        assert!(ShockGrid::new(0.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn sweep_rows_follow_shock_outer_param_inner_order() {
        let net = mutual_two_bank();
        let mut spec = SweepSpec::new(
            ModelSpec::reduced_form(1.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.005, 0.005).unwrap(),
        );
        spec.params = vec![
            ParamGrid { name: "gamma".into(), values: vec![1.0, 2.0] },
            ParamGrid { name: "beta".into(), values: vec![0.0, 1.0] },
        ];
        let rows = sweep(&net, &spec).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        let key: Vec<(f64, f64, f64)> = rows
            .iter()
            .map(|r| (r.result.shock, r.params[0].1, r.params[1].1))
            .collect();
        assert_eq!(
            key,
            vec![
                (0.0, 1.0, 0.0),
                (0.0, 1.0, 1.0),
                (0.0, 2.0, 0.0),
                (0.0, 2.0, 1.0),
                (0.005, 1.0, 0.0),
                (0.005, 1.0, 1.0),
                (0.005, 2.0, 0.0),
                (0.005, 2.0, 1.0),
            ]
        );
        for row in &rows {
            assert_eq!(row.params[0].0, "gamma");
            assert_eq!(row.params[1].0, "beta");
        }
    }

    #[test]
    fn sweep_single_zero_shock_yields_zero_default_rows() {
        let net = mutual_two_bank();
        let spec = SweepSpec::new(ModelSpec::linear_dr(), ShockGrid::new(0.0, 0.0, 0.005).unwrap());
        let rows = sweep(&net, &spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].result.total_defaults, 0);
        assert!(rows[0].params.is_empty());
    }

    #[test]
    fn sweep_aborts_on_unknown_parameter_name_before_running() {
        let net = mutual_two_bank();
        let mut spec =
            SweepSpec::new(ModelSpec::linear_dr(), ShockGrid::new(0.0, 0.10, 0.005).unwrap());
        spec.params = vec![ParamGrid { name: "gamma".into(), values: vec![1.0] }];
        assert!(matches!(
            sweep(&net, &spec),
            Err(StressError::Model(ModelError::UnknownParameter { .. }))
        ));
    }

    #[test]
    fn sweep_rejects_empty_parameter_grid_values() {
        let net = mutual_two_bank();
        let mut spec = SweepSpec::new(
            ModelSpec::reduced_form(1.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.01, 0.005).unwrap(),
        );
        spec.params = vec![ParamGrid { name: "gamma".into(), values: vec![] }];
        assert!(matches!(sweep(&net, &spec), Err(StressError::InvalidGrid { .. })));
    }

    #[test]
    fn higher_gamma_never_reduces_defaults() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let net = random_network(&mut rng, 12);
        let mut spec = SweepSpec::new(
            ModelSpec::reduced_form(1.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.10, 0.01).unwrap(),
        );
        spec.params = vec![ParamGrid { name: "gamma".into(), values: vec![1.0, 30.0] }];
        let rows = sweep(&net, &spec).unwrap();
        let low = default_series(&rows, &[("gamma", 1.0)]);
        let high = default_series(&rows, &[("gamma", 30.0)]);
        assert_eq!(low.len(), high.len());
        for (l, h) in low.iter().zip(&high) {
            assert_eq!(l.0, h.0);
            assert!(h.1 >= l.1, "shock {}: {} < {}", h.0, h.1, l.1);
        }
    }

    #[test]
    fn higher_beta_never_increases_defaults() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let net = random_network(&mut rng, 12);
        let mut spec = SweepSpec::new(
            ModelSpec::reduced_form(5.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.10, 0.01).unwrap(),
        );
        spec.params = vec![ParamGrid { name: "beta".into(), values: vec![0.0, 1.0] }];
        let rows = sweep(&net, &spec).unwrap();
        let none = default_series(&rows, &[("beta", 0.0)]);
        let full = default_series(&rows, &[("beta", 1.0)]);
        for (n, f) in none.iter().zip(&full) {
            assert!(n.1 >= f.1, "shock {}: beta=0 gives {}, beta=1 gives {}", n.0, n.1, f.1);
        }
    }

    #[test]
    fn envelope_of_single_combination_is_its_own_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let net = random_network(&mut rng, 8);
        let spec = SweepSpec::new(
            ModelSpec::reduced_form(10.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.10, 0.02).unwrap(),
        );
        let rows = sweep(&net, &spec).unwrap();
        let env = envelope(&rows).unwrap();
        assert_eq!(env.len(), rows.len());
        for (point, row) in env.iter().zip(&rows) {
            assert_eq!(point.shock, row.result.shock);
            assert_eq!(point.max_total_defaults, row.result.total_defaults);
            assert_eq!(point.max_indirect_defaults, row.result.indirect_defaults());
        }
    }

    #[test]
    fn envelope_takes_per_shock_maxima_across_combinations() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let net = random_network(&mut rng, 10);
        let mut spec = SweepSpec::new(
            ModelSpec::reduced_form(1.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.08, 0.02).unwrap(),
        );
        spec.params = vec![ParamGrid { name: "gamma".into(), values: vec![1.0, 5.0, 30.0] }];
        let rows = sweep(&net, &spec).unwrap();
        let env = envelope(&rows).unwrap();
        assert_eq!(env.len(), 5);
        for point in &env {
            let max_at_shock = rows
                .iter()
                .filter(|r| r.result.shock == point.shock)
                .map(|r| r.result.total_defaults)
                .max()
                .unwrap();
            assert_eq!(point.max_total_defaults, max_at_shock);
        }
    }

    #[test]
    fn envelope_of_empty_table_is_an_error() {
        assert!(matches!(envelope(&[]), Err(StressError::EmptyTable)));
    }

    #[test]
    fn critical_points_flags_jumps_of_at_least_k() {
        let series = [(0.0, 0), (0.01, 0), (0.02, 3), (0.03, 3), (0.04, 8)];
        assert_eq!(critical_points(&series, 3), vec![0.02, 0.04]);
        assert_eq!(critical_points(&series, 5), vec![0.04]);
        assert_eq!(critical_points(&series, 9), Vec::<f64>::new());
    }

    #[test]
    fn first_shock_reaching_scans_in_order() {
        let series = [(0.0, 0), (0.01, 0), (0.02, 3), (0.03, 3), (0.04, 8)];
        assert_eq!(first_shock_reaching(&series, 1), Some(0.02));
        assert_eq!(first_shock_reaching(&series, 4), Some(0.04));
        assert_eq!(first_shock_reaching(&series, 9), None);
    }
}
