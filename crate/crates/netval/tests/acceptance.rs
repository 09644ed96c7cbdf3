//! Acceptance gate. Ten checks, one PASS/FAIL line each (visible with
//! `cargo test --test acceptance -- --nocapture`):
//!
//!  1. recovery valuation with full equity weight reduces to linear DebtRank
//!  2. every calibrated model values everything at par on the initial sheet
//!  3. spreads, rate feedback, and values respect their bounds and floors
//!  4. valuations are nondecreasing in every equity coordinate
//!  5. the solver matches hand-solvable and independently computed oracles
//!  6. default counts move monotonically with shock and model parameters
//!  7. rate feedback shifts the first multi-default shock left
//!  8. the default envelope over a gamma grid equals the extreme curve
//!  9. exp(-x) stays within x^2/2 of its linearization on realized spreads
//! 10. identical configs and seeds produce byte-identical result tables
//!
//! Tolerances are pinned below; loops are seeded, so every run checks the
//! same cases.

use std::time::{Duration, Instant};

use netval::io::{generate_synthetic, save_results, write_results, SyntheticSpec};
use netval::network::{EquityVector, FinancialNetwork, Institution, ShockScenario};
use netval::solver::{solve_fixed_point, SolverConfig};
use netval::stress::{
    default_series, envelope, first_shock_reaching, sweep, ParamGrid, ShockGrid, SweepSpec,
};
use netval::testing::random_network;
use netval::valuation::{
    calibrate, check_feasibility, CalibratedModel, FeasibilityProbe, ModelSpec, SystemState,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Calibration must hold at least this tightly (criterion 2).
const CALIBRATION_TOL: f64 = 1e-12;
/// Solver vs independent oracle, relative (criterion 5).
const ORACLE_REL_TOL: f64 = 1e-6;
/// Solver vs scalar bisection on the symmetric case (criterion 5).
const BISECTION_TOL: f64 = 1e-9;
/// Floor inequalities may slip by rounding of the exponent (criterion 3).
const FLOOR_SLACK: f64 = 1e-15;
/// Slack on the quadratic remainder bound, which is exact in real
/// arithmetic (criterion 9).
const REMAINDER_SLACK: f64 = 1e-15;
/// Runtime budget for the reduction identity scan (criterion 1).
const REDUCTION_BUDGET: Duration = Duration::from_secs(5);
/// Runtime budget for the monotone sweep suite (criterion 6).
const SWEEP_BUDGET: Duration = Duration::from_secs(60);

fn report(number: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number:2} [{verdict}] {name}: {detail}");
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

/// Two banks with symmetric sheets holding 20 of each other's debt; the
/// solvable-by-hand fixture used throughout.
fn mutual_two_bank() -> FinancialNetwork {
    FinancialNetwork::from_parts(
        vec![Institution::bank("A"), Institution::bank("B")],
        vec![100.0, 100.0],
        vec![80.0, 80.0],
        vec![vec![0.0, 20.0], vec![20.0, 0.0]],
    )
    .unwrap()
}

/// The shared stress fixture: 20 institutions, 5 funds holding 75% of
/// internal assets, fixed seed.
fn synthetic_network() -> FinancialNetwork {
    generate_synthetic(&SyntheticSpec::new(20, 5, 42)).unwrap()
}

fn shock_grid() -> ShockGrid {
    ShockGrid::new(0.0, 0.10, 0.005).unwrap()
}

/// Equity with components anywhere from deep insolvency (assets below
/// zero) to 1.5x the initial level.
fn random_equity(
    rng: &mut ChaCha8Rng,
    initial: &EquityVector,
    liabilities: &[f64],
) -> EquityVector {
    let values = initial
        .iter()
        .zip(liabilities)
        .map(|(&e0, &l)| rng.gen_range(-2.0 * e0 - l..1.5 * e0))
        .collect::<Vec<_>>();
    EquityVector::new(values)
}

fn state(
    model: &CalibratedModel,
    equity: EquityVector,
    initial: &EquityVector,
    liabilities: &[f64],
) -> SystemState {
    SystemState::build(model, equity, initial, liabilities).unwrap()
}

#[test]
fn criterion_01_full_weight_recovery_reduces_to_linear() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let linear = calibrate(&ModelSpec::linear_dr()).unwrap();
    let mut states_checked = 0usize;
    let mut identical = true;

    for _ in 0..50 {
        let n = 1 + rng.gen_range(0..20);
        let net = random_network(&mut rng, n);
        let initial = net.book_equity();
        let liabilities = net.total_liabilities();
        let uniform = calibrate(&ModelSpec::recovery_dr(1.0)).unwrap();
        let per_bank = calibrate(&ModelSpec::recovery_dr(vec![1.0; n])).unwrap();

        for _ in 0..25 {
            let equity = random_equity(&mut rng, &initial, &liabilities);
            let s_lin = state(&linear, equity.clone(), &initial, &liabilities);
            let s_uni = state(&uniform, equity.clone(), &initial, &liabilities);
            let s_vec = state(&per_bank, equity, &initial, &liabilities);
            for j in 0..n {
                let reference = linear.value_internal(j, &s_lin);
                identical &= reference.to_bits() == uniform.value_internal(j, &s_uni).to_bits();
                identical &= reference.to_bits() == per_bank.value_internal(j, &s_vec).to_bits();
            }
            identical &= linear.value_external(&s_lin) == 1.0;
            identical &= uniform.value_external(&s_uni) == 1.0;
            states_checked += 1;
        }
    }

    let elapsed = started.elapsed();
    report(
        1,
        "reduction identity",
        identical && states_checked >= 1000 && elapsed < REDUCTION_BUDGET,
        &format!(
            "{states_checked} states across 50 networks bitwise identical in {:.2?} (budget {:?})",
            elapsed, REDUCTION_BUDGET
        ),
    );
}

#[test]
fn criterion_02_calibration_holds_at_the_initial_sheet() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut worst: f64 = 0.0;

    for _ in 0..10 {
        let n = 1 + rng.gen_range(0..12);
        let net = random_network(&mut rng, n);
        let initial = net.book_equity();
        let liabilities = net.total_liabilities();
        let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let gammas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..30.0)).collect();
        let betas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let specs = [
            ModelSpec::linear_dr(),
            ModelSpec::recovery_dr(0.5),
            ModelSpec::recovery_dr(alphas),
            ModelSpec::reduced_form(2.0, 0.3, 1.5),
            ModelSpec::reduced_form(gammas, betas, 1.0),
            ModelSpec::ir_feedback(20.0, 0.5, 1.0, 0.1, 0.5),
        ];

        for spec in &specs {
            let model = calibrate(spec).unwrap();
            let at_par = state(&model, initial.clone(), &initial, &liabilities);
            for j in 0..n {
                worst = worst.max((model.value_internal(j, &at_par) - 1.0).abs());
                worst = worst.max(model.spread(j, &at_par).abs());
            }
            worst = worst.max((model.value_external(&at_par) - 1.0).abs());
            worst = worst.max(model.delta_r(&at_par).abs());
        }
    }

    report(
        2,
        "calibration at par",
        worst <= CALIBRATION_TOL,
        &format!("largest deviation from par {worst:.2e} (tolerance {CALIBRATION_TOL:.0e})"),
    );
}

#[test]
fn criterion_03_spreads_rates_and_values_respect_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let gamma_tilde = 0.4;
    let mut ok = true;
    let mut checked = 0usize;

    for _ in 0..20 {
        let n = 1 + rng.gen_range(0..10);
        let net = random_network(&mut rng, n);
        let initial = net.book_equity();
        let liabilities = net.total_liabilities();
        let gammas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        let betas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let maturity = rng.gen_range(0.2..2.0);

        let plain = calibrate(&ModelSpec::reduced_form(
            gammas.clone(),
            betas.clone(),
            maturity,
        ))
        .unwrap();
        let feedback = calibrate(&ModelSpec::ir_feedback(
            gammas.clone(),
            betas,
            maturity,
            gamma_tilde,
            0.5,
        ))
        .unwrap();
        let linear = calibrate(&ModelSpec::linear_dr()).unwrap();
        let recovery = calibrate(&ModelSpec::recovery_dr(0.3)).unwrap();

        for _ in 0..50 {
            let equity = random_equity(&mut rng, &initial, &liabilities);
            for model in [&plain, &feedback, &linear, &recovery] {
                let s = state(model, equity.clone(), &initial, &liabilities);
                let delta_r = model.delta_r(&s);
                ok &= (0.0..=gamma_tilde).contains(&delta_r);
                let v_ext = model.value_external(&s);
                ok &= (0.0..=1.0).contains(&v_ext);
                for (j, &gamma_j) in gammas.iter().enumerate() {
                    let spread = model.spread(j, &s);
                    ok &= (0.0..=gamma_j).contains(&spread);
                    let v = model.value_internal(j, &s);
                    ok &= (0.0..=1.0).contains(&v);
                    // Asset floor: the spread cannot exceed its scale, so
                    // discounting never undercuts exp(-gamma tau), plus the
                    // system rate cap for the feedback family.
                    let floor = match model.kind() {
                        netval::valuation::ModelKind::ReducedForm => (-gamma_j * maturity).exp(),
                        netval::valuation::ModelKind::InterestRateFeedback => {
                            (-(gamma_j + gamma_tilde) * maturity).exp()
                        }
                        _ => 0.0,
                    };
                    ok &= v >= floor - FLOOR_SLACK;
                }
                checked += 1;
            }
        }
    }

    report(
        3,
        "bounds and floors",
        ok,
        &format!("{checked} random states within spread, rate, value, and floor bounds"),
    );
}

#[test]
fn criterion_04_valuations_are_monotone_in_equity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut ok = true;
    let mut pairs_checked = 0usize;

    for _ in 0..10 {
        let n = 1 + rng.gen_range(0..8);
        let net = random_network(&mut rng, n);
        let initial = net.book_equity();
        let liabilities = net.total_liabilities();
        let specs = [
            ModelSpec::linear_dr(),
            ModelSpec::recovery_dr(0.4),
            ModelSpec::reduced_form(3.0, 0.6, 1.0),
            ModelSpec::ir_feedback(3.0, 0.6, 1.0, 0.2, 0.5),
        ];

        for spec in &specs {
            let model = calibrate(spec).unwrap();

            // The library's own probe over a deterministic state grid.
            let probe = FeasibilityProbe::standard(initial.clone(), liabilities.clone());
            ok &= check_feasibility(&model, &probe).unwrap().is_feasible();

            // Random ordered pairs: lift each coordinate by a nonnegative
            // amount and require no valuation to fall.
            for _ in 0..25 {
                let lower = random_equity(&mut rng, &initial, &liabilities);
                let lifted: Vec<f64> =
                    lower.iter().map(|&e| e + rng.gen_range(0.0..30.0)).collect();
                let s_lo = state(&model, lower, &initial, &liabilities);
                let s_hi = state(&model, EquityVector::new(lifted), &initial, &liabilities);
                for j in 0..n {
                    ok &= model.value_internal(j, &s_lo) <= model.value_internal(j, &s_hi);
                }
                ok &= model.value_external(&s_lo) <= model.value_external(&s_hi);
                pairs_checked += 1;
            }
        }
    }

    report(
        4,
        "feasibility",
        ok,
        &format!("{pairs_checked} ordered pairs, four families, no valuation decreased"),
    );
}

/// Linear DebtRank equity map written out by hand, iterated with relaxation
/// factor 1/2 to a much tighter tolerance than the solver under test. Fixed
/// points of the damped map are fixed points of the map itself.
fn damped_linear_oracle(net: &FinancialNetwork, a: f64) -> Vec<f64> {
    let n = net.n();
    let initial = net.book_equity();
    let shocked_external: Vec<f64> =
        net.external_assets().iter().map(|x| x * (1.0 - a)).collect();
    let external_liabilities = net.external_liabilities();
    let internal_liabilities = net.internal_liability_totals();

    let mut equity: Vec<f64> = (0..n)
        .map(|i| {
            shocked_external[i] + net.holdings_row(i).iter().sum::<f64>()
                - external_liabilities[i]
                - internal_liabilities[i]
        })
        .collect();

    for _ in 0..500_000 {
        let mapped: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = shocked_external[i] - external_liabilities[i];
                for j in 0..n {
                    let v = (equity[j].max(0.0) / initial[j]).min(1.0);
                    acc += net.holding(i, j) * v;
                }
                acc - internal_liabilities[i]
            })
            .collect();
        let next: Vec<f64> =
            equity.iter().zip(&mapped).map(|(e, p)| 0.5 * e + 0.5 * p).collect();
        let step = next
            .iter()
            .zip(&equity)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        equity = next;
        if step < 1e-13 {
            break;
        }
    }
    equity
}

/// Root of the scalar symmetric fixed-point equation for `mutual_two_bank`
/// under a uniform shock, by bisection. Every quantity here comes from the
/// sheet numbers, not from the library.
fn bisect_symmetric_two_bank(a: f64) -> f64 {
    let psi = |e: f64| {
        (1.0 - a) * 100.0 - 80.0 + 20.0 * ((e.max(0.0)) / 20.0).min(1.0) - 20.0 - e
    };
    let (mut lo, mut hi) = (-200.0, 20.0);
    assert!(psi(lo) > 0.0 && psi(hi) <= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_05_solver_matches_independent_oracles() {
    let model = calibrate(&ModelSpec::linear_dr()).unwrap();
    let config = SolverConfig::default();
    let mut ok = true;
    let mut detail = String::new();

    // Hand case: symmetric two-bank network, 10% shock. Every iterate is
    // exact in floating point, so the comparison is bitwise.
    let net = mutual_two_bank();
    let shocked = net.apply_shock(&ShockScenario::uniform(0.1).unwrap()).unwrap();
    let trajectory = solve_fixed_point(&net, &shocked, &model, &config).unwrap();
    let exact = trajectory.final_equity().as_slice() == [-10.0, -10.0];
    ok &= exact && trajectory.converged && trajectory.monotone && trajectory.iterations_used <= 5;
    detail.push_str(&format!(
        "hand case E*=({}, {}) in {} iterations",
        trajectory.final_equity()[0],
        trajectory.final_equity()[1],
        trajectory.iterations_used
    ));

    // Small random networks against the damped hand-coded oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..40 {
        let n = 1 + rng.gen_range(0..3);
        let net = random_network(&mut rng, n);
        let a = rng.gen_range(0.0..1.0);
        let shocked = net.apply_shock(&ShockScenario::uniform(a).unwrap()).unwrap();
        let trajectory = solve_fixed_point(&net, &shocked, &model, &config).unwrap();
        ok &= trajectory.converged && trajectory.monotone;
        let oracle = damped_linear_oracle(&net, a);
        for (solved, reference) in trajectory.final_equity().iter().zip(&oracle) {
            let rel = (solved - reference).abs() / reference.abs().max(1.0);
            worst_rel = worst_rel.max(rel);
        }
    }
    ok &= worst_rel <= ORACLE_REL_TOL;
    detail.push_str(&format!("; 40 damped-oracle cases, worst relative gap {worst_rel:.2e}"));

    // Symmetric shocks against scalar bisection.
    let mut worst_bisect: f64 = 0.0;
    for a in [0.02, 0.05, 0.1] {
        let shocked = net.apply_shock(&ShockScenario::uniform(a).unwrap()).unwrap();
        let trajectory = solve_fixed_point(&net, &shocked, &model, &config).unwrap();
        let root = bisect_symmetric_two_bank(a);
        ok &= trajectory.monotone;
        for solved in trajectory.final_equity().iter() {
            worst_bisect = worst_bisect.max((solved - root).abs());
        }
    }
    ok &= worst_bisect <= BISECTION_TOL;
    detail.push_str(&format!("; bisection gap {worst_bisect:.2e}"));

    report(5, "solver oracle", ok, &detail);
}

fn total_defaults_nondecreasing(series: &[(f64, usize)]) -> bool {
    series.windows(2).all(|w| w[0].1 <= w[1].1)
}

#[test]
fn criterion_06_defaults_move_monotonically() {
    let started = Instant::now();
    let net = synthetic_network();
    let grid = shock_grid();
    let mut ok = true;
    let mut runs = 0usize;

    // Nondecreasing in the shock, for every family.
    let families = [
        ModelSpec::linear_dr(),
        ModelSpec::recovery_dr(0.5),
        ModelSpec::reduced_form(20.0, 0.5, 1.0),
        ModelSpec::ir_feedback(20.0, 0.5, 1.0, 0.1, 0.5),
    ];
    for spec in &families {
        let rows = sweep(&net, &SweepSpec::new(spec.clone(), grid)).unwrap();
        ok &= rows.iter().all(|r| r.result.converged);
        ok &= total_defaults_nondecreasing(&default_series(&rows, &[]));
        runs += rows.len();
    }

    // Rowwise in gamma: at each shock, more aggressive spreads cannot
    // produce fewer defaults.
    let gammas = [1.0, 5.0, 10.0, 20.0, 30.0];
    let mut spec = SweepSpec::new(ModelSpec::reduced_form(1.0, 0.5, 1.0), grid);
    spec.params = vec![ParamGrid { name: "gamma".into(), values: gammas.to_vec() }];
    let rows = sweep(&net, &spec).unwrap();
    ok &= rows.iter().all(|r| r.result.converged);
    runs += rows.len();
    let by_gamma: Vec<Vec<(f64, usize)>> =
        gammas.iter().map(|&g| default_series(&rows, &[("gamma", g)])).collect();
    for pair in by_gamma.windows(2) {
        for (lo, hi) in pair[0].iter().zip(&pair[1]) {
            ok &= lo.0 == hi.0 && lo.1 <= hi.1;
        }
    }

    // Rowwise in gamma_tilde.
    let tildes = [0.0, 0.05, 0.1];
    let mut spec = SweepSpec::new(ModelSpec::ir_feedback(20.0, 0.5, 1.0, 0.0, 0.5), grid);
    spec.params = vec![ParamGrid { name: "gamma_tilde".into(), values: tildes.to_vec() }];
    let rows = sweep(&net, &spec).unwrap();
    ok &= rows.iter().all(|r| r.result.converged);
    runs += rows.len();
    let by_tilde: Vec<Vec<(f64, usize)>> =
        tildes.iter().map(|&g| default_series(&rows, &[("gamma_tilde", g)])).collect();
    for pair in by_tilde.windows(2) {
        for (lo, hi) in pair[0].iter().zip(&pair[1]) {
            ok &= lo.0 == hi.0 && lo.1 <= hi.1;
        }
    }

    // Rowwise in beta, reversed: better recoveries cannot produce more
    // defaults.
    let betas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut spec = SweepSpec::new(ModelSpec::reduced_form(20.0, 0.0, 1.0), grid);
    spec.params = vec![ParamGrid { name: "beta".into(), values: betas.to_vec() }];
    let rows = sweep(&net, &spec).unwrap();
    ok &= rows.iter().all(|r| r.result.converged);
    runs += rows.len();
    let by_beta: Vec<Vec<(f64, usize)>> =
        betas.iter().map(|&b| default_series(&rows, &[("beta", b)])).collect();
    for pair in by_beta.windows(2) {
        for (lo, hi) in pair[0].iter().zip(&pair[1]) {
            ok &= lo.0 == hi.0 && lo.1 >= hi.1;
        }
    }

    let elapsed = started.elapsed();
    ok &= elapsed < SWEEP_BUDGET;
    report(
        6,
        "monotone sweeps",
        ok,
        &format!("{runs} scenario solves, all orderings hold, {elapsed:.2?} (budget {SWEEP_BUDGET:?})"),
    );
}

#[test]
fn criterion_07_rate_feedback_shifts_the_critical_shock_left() {
    let net = synthetic_network();
    let grid = shock_grid();
    let threshold = 3;

    let series_at = |gamma_tilde: f64| {
        let spec = SweepSpec::new(
            ModelSpec::ir_feedback(20.0, 0.5, 1.0, gamma_tilde, 0.5),
            grid,
        );
        let rows = sweep(&net, &spec).unwrap();
        assert!(rows.iter().all(|r| r.result.converged));
        default_series(&rows, &[])
    };

    let without = first_shock_reaching(&series_at(0.0), threshold);
    let with = first_shock_reaching(&series_at(0.1), threshold);
    let ok = match (with, without) {
        (Some(w), Some(wo)) => w <= wo,
        _ => false,
    };
    report(
        7,
        "feedback left-shift",
        ok,
        &format!(
            "first shock with >= {threshold} defaults: {:?} with feedback vs {:?} without",
            with, without
        ),
    );
}

#[test]
fn criterion_08_envelope_equals_the_extreme_gamma_curve() {
    let net = synthetic_network();
    let gammas = [1.0, 5.0, 10.0, 20.0, 30.0];
    let mut spec = SweepSpec::new(ModelSpec::reduced_form(1.0, 0.5, 1.0), shock_grid());
    spec.params = vec![ParamGrid { name: "gamma".into(), values: gammas.to_vec() }];
    let rows = sweep(&net, &spec).unwrap();

    let boundary = envelope(&rows).unwrap();
    let extreme: Vec<_> = rows.iter().filter(|r| r.params == [("gamma".to_string(), 30.0)]).collect();

    let mut ok = boundary.len() == extreme.len();
    if ok {
        for (point, row) in boundary.iter().zip(&extreme) {
            ok &= point.shock == row.result.shock;
            ok &= point.max_total_defaults == row.result.total_defaults;
            ok &= point.max_indirect_defaults == row.result.indirect_defaults();
        }
    }
    report(
        8,
        "envelope consistency",
        ok,
        &format!(
            "envelope equals the gamma=30 curve at all {} shock grid points",
            boundary.len()
        ),
    );
}

#[test]
fn criterion_09_linearization_bound_on_realized_spreads() {
    let net = synthetic_network();
    let initial = net.book_equity();
    let liabilities = net.total_liabilities();
    let mut ok = true;
    let mut spread_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut checked = 0usize;

    // Realized spreads at the fixed points of the gamma sweep, including
    // the gamma = tau = 1 member whose linearization is a recovery-style
    // rule.
    for gamma in [1.0, 5.0, 10.0, 20.0, 30.0] {
        let spec = ModelSpec::reduced_form(gamma, 0.5, 1.0);
        let model = calibrate(&spec).unwrap();
        let rows = sweep(&net, &SweepSpec::new(spec, shock_grid())).unwrap();
        for row in rows {
            let s = state(&model, row.result.final_equity.clone(), &initial, &liabilities);
            for j in 0..net.n() {
                let x = model.spread(j, &s);
                spread_range.0 = spread_range.0.min(x);
                spread_range.1 = spread_range.1.max(x);
                let remainder = ((-x).exp() - (1.0 - x)).abs();
                ok &= x >= 0.0 && remainder <= 0.5 * x * x + REMAINDER_SLACK;
                checked += 1;
            }
        }
    }

    report(
        9,
        "linearization bound",
        ok,
        &format!(
            "|exp(-x) - (1-x)| <= x^2/2 for {checked} realized spreads in [{:.3}, {:.3}]",
            spread_range.0, spread_range.1
        ),
    );
}

#[test]
fn criterion_10_identical_configs_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();

    for run in 0..2 {
        // Full pipeline from scratch both times: generate, sweep, save.
        let net = generate_synthetic(&SyntheticSpec::new(20, 5, 42)).unwrap();
        let mut spec =
            SweepSpec::new(ModelSpec::ir_feedback(20.0, 0.5, 1.0, 0.0, 0.5), shock_grid());
        spec.params =
            vec![ParamGrid { name: "gamma_tilde".into(), values: vec![0.0, 0.05, 0.1] }];
        let rows = sweep(&net, &spec).unwrap();

        let path = dir.path().join(format!("run{run}.csv"));
        save_results(&rows, &path).unwrap();
        outputs.push(std::fs::read(&path).unwrap());

        // The in-memory writer must agree with the file byte for byte.
        let mut buffer = Vec::new();
        write_results(&rows, &mut buffer).unwrap();
        assert_eq!(buffer, outputs[run]);
    }

    let ok = outputs[0] == outputs[1] && !outputs[0].is_empty();
    report(
        10,
        "determinism",
        ok,
        &format!("two runs wrote {} identical bytes", outputs[0].len()),
    );
}
