//! Claim valuation under stress: the four model families and their shared
//! state.
//!
//! Interbank claims are marked to a valuation factor in `[0, 1]` that is
//! nondecreasing and continuous in the issuer's equity, so face value is an
//! upper bound and revaluation can only write assets down. The families:
//!
//! * `linear-dr`: DebtRank-style linear write-down, claims on `j` are worth
//!   the capped equity ratio `min(E_j+ / E_j(0), 1)`.
//! * `recovery-dr`: blends the equity ratio with the issuer's asset ratio,
//!   `min(alpha E_j+/E_j(0) + (1 - alpha) A_j+/A_j(0), 1)`, weighting
//!   solvency against recoverable value. At `alpha = 1` it reduces exactly
//!   to `linear-dr`.
//! * `reduced-form`: default-intensity pricing in the Duffie-Singleton
//!   tradition. A credit spread reacts to equity losses, damped by asset
//!   recovery, and discounts the claim over its remaining maturity:
//!   `exp(-s_j tau)`.
//! * `ir-feedback`: `reduced-form` plus a system-wide rate change driven by
//!   aggregate losses; both external and internal assets are discounted by
//!   it.
//!
//! All families are calibrated so that every valuation factor equals one at
//! the initial balance sheet, which makes the unshocked network a fixed
//! point of the induced equity map. Raw parameters pass through
//! [`calibrate`], the only constructor of [`CalibratedModel`]; downstream
//! code cannot run an uncalibrated model.
//!
//! Positive parts everywhere: an insolvent issuer contributes zero equity,
//! not negative equity, and an issuer with negative marked assets recovers
//! nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::EquityVector;

/// Default mixing weight for `recovery-dr`.
pub const DEFAULT_RECOVERY_ALPHA: f64 = 0.5;
/// Default spread sensitivity for the reduced-form families.
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Default recovery damping for the reduced-form families.
pub const DEFAULT_BETA: f64 = 0.5;
/// Default remaining maturity (discount horizon) in years.
pub const DEFAULT_MATURITY: f64 = 1.0;
/// Default rate sensitivity for `ir-feedback`.
pub const DEFAULT_GAMMA_TILDE: f64 = 0.05;
/// Default aggregate recovery damping for `ir-feedback`.
pub const DEFAULT_BETA_TILDE: f64 = 0.5;

/// A per-institution parameter: one value broadcast to everyone, or an
/// explicit vector indexed like the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Uniform(f64),
    PerInstitution(Vec<f64>),
}

impl Param {
    pub fn get(&self, j: usize) -> f64 {
        match self {
            Param::Uniform(x) => *x,
            Param::PerInstitution(v) => v[j],
        }
    }

    fn check_len(&self, name: &'static str, n: usize) -> Result<(), ModelError> {
        match self {
            Param::Uniform(_) => Ok(()),
            Param::PerInstitution(v) if v.len() == n => Ok(()),
            Param::PerInstitution(v) => {
                Err(ModelError::ParamLengthMismatch { name, expected: n, got: v.len() })
            }
        }
    }

    fn check_range(
        &self,
        name: &'static str,
        lo: f64,
        lo_strict: bool,
        hi: f64,
        expected: &'static str,
    ) -> Result<(), ModelError> {
        let ok = |x: f64| {
            x.is_finite() && x <= hi && if lo_strict { x > lo } else { x >= lo }
        };
        let bad = match self {
            Param::Uniform(x) => (!ok(*x)).then_some(*x),
            Param::PerInstitution(v) => v.iter().copied().find(|&x| !ok(x)),
        };
        match bad {
            Some(value) => Err(ModelError::ParamOutOfRange { name, value, expected }),
            None => Ok(()),
        }
    }
}

impl From<f64> for Param {
    fn from(x: f64) -> Self {
        Param::Uniform(x)
    }
}

impl From<Vec<f64>> for Param {
    fn from(v: Vec<f64>) -> Self {
        Param::PerInstitution(v)
    }
}

fn default_recovery_alpha() -> Param {
    Param::Uniform(DEFAULT_RECOVERY_ALPHA)
}

fn default_gamma() -> Param {
    Param::Uniform(DEFAULT_GAMMA)
}

fn default_beta() -> Param {
    Param::Uniform(DEFAULT_BETA)
}

fn default_unit_param() -> Param {
    Param::Uniform(1.0)
}

fn default_maturity() -> f64 {
    DEFAULT_MATURITY
}

fn default_gamma_tilde() -> f64 {
    DEFAULT_GAMMA_TILDE
}

fn default_beta_tilde() -> f64 {
    DEFAULT_BETA_TILDE
}

fn default_unit() -> f64 {
    1.0
}

/// Raw, possibly uncalibrated model parameters as written in configuration.
///
/// The reduced-form families carry a raw equity weight `alpha` that
/// calibration pins to one; it is accepted here so that configuration files
/// can state it explicitly, and validated, but a [`CalibratedModel`] never
/// uses it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearDr,
    RecoveryDr {
        #[serde(default = "default_recovery_alpha")]
        alpha: Param,
    },
    ReducedForm {
        #[serde(default = "default_gamma")]
        gamma: Param,
        #[serde(default = "default_beta")]
        beta: Param,
        #[serde(default = "default_unit_param")]
        alpha: Param,
        #[serde(default = "default_maturity")]
        maturity: f64,
    },
    IrFeedback {
        #[serde(default = "default_gamma")]
        gamma: Param,
        #[serde(default = "default_beta")]
        beta: Param,
        #[serde(default = "default_unit_param")]
        alpha: Param,
        #[serde(default = "default_maturity")]
        maturity: f64,
        #[serde(default = "default_gamma_tilde")]
        gamma_tilde: f64,
        #[serde(default = "default_beta_tilde")]
        beta_tilde: f64,
        #[serde(default = "default_unit")]
        alpha_tilde: f64,
    },
}

impl ModelSpec {
    pub fn linear_dr() -> Self {
        ModelSpec::LinearDr
    }

    pub fn recovery_dr(alpha: impl Into<Param>) -> Self {
        ModelSpec::RecoveryDr { alpha: alpha.into() }
    }

    pub fn reduced_form(gamma: impl Into<Param>, beta: impl Into<Param>, maturity: f64) -> Self {
        ModelSpec::ReducedForm {
            gamma: gamma.into(),
            beta: beta.into(),
            alpha: default_unit_param(),
            maturity,
        }
    }

    pub fn ir_feedback(
        gamma: impl Into<Param>,
        beta: impl Into<Param>,
        maturity: f64,
        gamma_tilde: f64,
        beta_tilde: f64,
    ) -> Self {
        ModelSpec::IrFeedback {
            gamma: gamma.into(),
            beta: beta.into(),
            alpha: default_unit_param(),
            maturity,
            gamma_tilde,
            beta_tilde,
            alpha_tilde: 1.0,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            ModelSpec::LinearDr => "linear-dr",
            ModelSpec::RecoveryDr { .. } => "recovery-dr",
            ModelSpec::ReducedForm { .. } => "reduced-form",
            ModelSpec::IrFeedback { .. } => "ir-feedback",
        }
    }

    /// Returns a copy with the named scalar parameter replaced. Parameter
    /// names follow the configuration spelling: `alpha`, `gamma`, `beta`,
    /// `maturity`, `gamma_tilde`, `beta_tilde`, `alpha_tilde`. Names the
    /// variant does not define are rejected.
    pub fn with_param(&self, name: &str, value: f64) -> Result<ModelSpec, ModelError> {
        let mut spec = self.clone();
        let unknown = || ModelError::UnknownParameter {
            model: self.variant_name(),
            name: name.to_string(),
        };
        match &mut spec {
            ModelSpec::LinearDr => return Err(unknown()),
            ModelSpec::RecoveryDr { alpha } => match name {
                "alpha" => *alpha = Param::Uniform(value),
                _ => return Err(unknown()),
            },
            ModelSpec::ReducedForm { gamma, beta, alpha, maturity } => match name {
                "gamma" => *gamma = Param::Uniform(value),
                "beta" => *beta = Param::Uniform(value),
                "alpha" => *alpha = Param::Uniform(value),
                "maturity" => *maturity = value,
                _ => return Err(unknown()),
            },
            ModelSpec::IrFeedback {
                gamma,
                beta,
                alpha,
                maturity,
                gamma_tilde,
                beta_tilde,
                alpha_tilde,
            } => match name {
                "gamma" => *gamma = Param::Uniform(value),
                "beta" => *beta = Param::Uniform(value),
                "alpha" => *alpha = Param::Uniform(value),
                "maturity" => *maturity = value,
                "gamma_tilde" => *gamma_tilde = value,
                "beta_tilde" => *beta_tilde = value,
                "alpha_tilde" => *alpha_tilde = value,
                _ => return Err(unknown()),
            },
        }
        Ok(spec)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value} outside {expected}")]
    ParamOutOfRange { name: &'static str, value: f64, expected: &'static str },
    #[error("parameter {name} has {got} entries, expected {expected}")]
    ParamLengthMismatch { name: &'static str, expected: usize, got: usize },
    #[error("model '{model}' has no parameter named '{name}'")]
    UnknownParameter { model: &'static str, name: String },
    #[error("institution {index}: initial {what} must be positive, got {value}")]
    DegenerateInstitution { index: usize, what: &'static str, value: f64 },
    #[error("state shape error: {what}")]
    StateShape { what: String },
    #[error("non-finite {what} at index {index}")]
    NonFiniteState { what: &'static str, index: usize },
}

/// Which calibrated family a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    LinearDebtRank,
    RecoveryDebtRank,
    ReducedForm,
    InterestRateFeedback,
}

#[derive(Debug, Clone, PartialEq)]
enum Calibrated {
    LinearDr,
    RecoveryDr {
        alpha: Param,
    },
    ReducedForm {
        gamma: Param,
        beta: Param,
        maturity: f64,
    },
    IrFeedback {
        gamma: Param,
        beta: Param,
        maturity: f64,
        gamma_tilde: f64,
        beta_tilde: f64,
    },
}

/// A model whose valuation factors all equal one at the initial balance
/// sheet. Only [`calibrate`] constructs this type, so holding one proves the
/// calibration and parameter checks have run.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedModel {
    inner: Calibrated,
}

/// Validates raw parameters and pins the calibration: the reduced-form
/// equity weight becomes one (spread vanishes at the initial sheet) and the
/// `recovery-dr` asset weight becomes `1 - alpha`.
///
/// Accepted ranges: `alpha` in `[0, 1]`, `gamma > 0`, `beta` in `[0, 1]`,
/// `maturity > 0`, `gamma_tilde >= 0`, `beta_tilde` in `[0, 1]`.
pub fn calibrate(spec: &ModelSpec) -> Result<CalibratedModel, ModelError> {
    let inner = match spec {
        ModelSpec::LinearDr => Calibrated::LinearDr,
        ModelSpec::RecoveryDr { alpha } => {
            alpha.check_range("alpha", 0.0, false, 1.0, "[0, 1]")?;
            Calibrated::RecoveryDr { alpha: alpha.clone() }
        }
        ModelSpec::ReducedForm { gamma, beta, alpha, maturity } => {
            gamma.check_range("gamma", 0.0, true, f64::INFINITY, "(0, inf)")?;
            beta.check_range("beta", 0.0, false, 1.0, "[0, 1]")?;
            alpha.check_range("alpha", 0.0, false, 1.0, "[0, 1]")?;
            Param::Uniform(*maturity).check_range("maturity", 0.0, true, f64::INFINITY, "(0, inf)")?;
            Calibrated::ReducedForm { gamma: gamma.clone(), beta: beta.clone(), maturity: *maturity }
        }
        ModelSpec::IrFeedback {
            gamma,
            beta,
            alpha,
            maturity,
            gamma_tilde,
            beta_tilde,
            alpha_tilde,
        } => {
            gamma.check_range("gamma", 0.0, true, f64::INFINITY, "(0, inf)")?;
            beta.check_range("beta", 0.0, false, 1.0, "[0, 1]")?;
            alpha.check_range("alpha", 0.0, false, 1.0, "[0, 1]")?;
            Param::Uniform(*maturity).check_range("maturity", 0.0, true, f64::INFINITY, "(0, inf)")?;
            Param::Uniform(*gamma_tilde).check_range("gamma_tilde", 0.0, false, f64::INFINITY, "[0, inf)")?;
            Param::Uniform(*beta_tilde).check_range("beta_tilde", 0.0, false, 1.0, "[0, 1]")?;
            Param::Uniform(*alpha_tilde).check_range("alpha_tilde", 0.0, false, 1.0, "[0, 1]")?;
            Calibrated::IrFeedback {
                gamma: gamma.clone(),
                beta: beta.clone(),
                maturity: *maturity,
                gamma_tilde: *gamma_tilde,
                beta_tilde: *beta_tilde,
            }
        }
    };
    Ok(CalibratedModel { inner })
}

/// Spread of one discount factor step: `gamma_j` scaled by the equity loss
/// fraction and damped by capped asset recovery. `beta = 0` disables the
/// recovery damping entirely (the cap `A0/beta` is taken in the limit, so
/// no division by zero occurs).
fn spread_parts(gamma_j: f64, beta_j: f64, e_j: f64, e0_j: f64, a_j: f64, a0_j: f64) -> f64 {
    let equity_loss = 1.0 - e_j.max(0.0).min(e0_j) / e0_j;
    let recovery_damp = if beta_j == 0.0 {
        1.0
    } else {
        1.0 - beta_j * a_j.max(0.0).min(a0_j / beta_j) / a0_j
    };
    (gamma_j * equity_loss * recovery_damp).max(0.0)
}

impl CalibratedModel {
    pub fn kind(&self) -> ModelKind {
        match self.inner {
            Calibrated::LinearDr => ModelKind::LinearDebtRank,
            Calibrated::RecoveryDr { .. } => ModelKind::RecoveryDebtRank,
            Calibrated::ReducedForm { .. } => ModelKind::ReducedForm,
            Calibrated::IrFeedback { .. } => ModelKind::InterestRateFeedback,
        }
    }

    /// Checks that every per-institution parameter vector matches `n`.
    pub fn check_dimensions(&self, n: usize) -> Result<(), ModelError> {
        match &self.inner {
            Calibrated::LinearDr => Ok(()),
            Calibrated::RecoveryDr { alpha } => alpha.check_len("alpha", n),
            Calibrated::ReducedForm { gamma, beta, .. }
            | Calibrated::IrFeedback { gamma, beta, .. } => {
                gamma.check_len("gamma", n)?;
                beta.check_len("beta", n)
            }
        }
    }

    /// Credit spread of issuer `j` in the current state. Zero for the
    /// DebtRank families, which have no spread channel. Bounded by
    /// `[0, gamma_j]`.
    pub fn spread(&self, j: usize, state: &SystemState) -> f64 {
        match &self.inner {
            Calibrated::LinearDr | Calibrated::RecoveryDr { .. } => 0.0,
            Calibrated::ReducedForm { gamma, beta, .. }
            | Calibrated::IrFeedback { gamma, beta, .. } => spread_parts(
                gamma.get(j),
                beta.get(j),
                state.equity[j],
                state.initial_equity[j],
                state.assets[j],
                state.initial_assets[j],
            ),
        }
    }

    /// System-wide rate change implied by aggregate losses. Zero for every
    /// family except `ir-feedback`. Bounded by `[0, gamma_tilde]`.
    ///
    /// Aggregates are L1 norms of positive parts: an insolvent institution
    /// contributes nothing, it does not offset others.
    pub fn delta_r(&self, state: &SystemState) -> f64 {
        match &self.inner {
            Calibrated::IrFeedback { gamma_tilde, beta_tilde, .. } => {
                let e_plus: f64 = state.equity.iter().map(|&x| x.max(0.0)).sum();
                let e0: f64 = state.initial_equity.iter().sum();
                let a_plus: f64 = state.assets.iter().map(|&x| x.max(0.0)).sum();
                let a0: f64 = state.initial_assets.iter().sum();
                let equity_loss = 1.0 - e_plus.min(e0) / e0;
                let recovery_damp = if *beta_tilde == 0.0 {
                    1.0
                } else {
                    1.0 - beta_tilde * a_plus.min(a0 / beta_tilde) / a0
                };
                (gamma_tilde * equity_loss * recovery_damp).max(0.0)
            }
            _ => 0.0,
        }
    }

    /// Value of one unit of face-value debt issued by `j`, in `[0, 1]`.
    pub fn value_internal(&self, j: usize, state: &SystemState) -> f64 {
        let v = match &self.inner {
            Calibrated::LinearDr => {
                (state.equity[j].max(0.0) / state.initial_equity[j]).min(1.0)
            }
            Calibrated::RecoveryDr { alpha } => {
                let a = alpha.get(j);
                let equity_ratio = state.equity[j].max(0.0) / state.initial_equity[j];
                let asset_ratio = state.assets[j].max(0.0) / state.initial_assets[j];
                (a * equity_ratio + (1.0 - a) * asset_ratio).min(1.0)
            }
            Calibrated::ReducedForm { maturity, .. } => {
                (-self.spread(j, state) * maturity).exp()
            }
            Calibrated::IrFeedback { maturity, .. } => {
                (-(state.delta_r + self.spread(j, state)) * maturity).exp()
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Value of one unit of external assets, in `[0, 1]`. One for every
    /// family except `ir-feedback`, where the rate change discounts the
    /// whole asset side.
    pub fn value_external(&self, state: &SystemState) -> f64 {
        match &self.inner {
            Calibrated::IrFeedback { maturity, .. } => {
                (-state.delta_r * maturity).exp().clamp(0.0, 1.0)
            }
            _ => 1.0,
        }
    }
}

/// Everything a valuation factor may depend on: current and initial equity,
/// current and initial assets, and the rate change implied by the current
/// state. Initial quantities always refer to the unshocked balance sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    equity: EquityVector,
    initial_equity: EquityVector,
    assets: Vec<f64>,
    initial_assets: Vec<f64>,
    delta_r: f64,
}

impl SystemState {
    /// Binds an equity vector to a model. Current and initial assets are
    /// derived from face-value total liabilities (`A = E + L`), and the
    /// rate change is evaluated once for the state.
    ///
    /// Rejects initially insolvent institutions (`E_j(0) <= 0` or
    /// `A_j(0) <= 0`): the loss ratios are meaningless for them.
    pub fn build(
        model: &CalibratedModel,
        equity: EquityVector,
        initial_equity: &EquityVector,
        liabilities: &[f64],
    ) -> Result<SystemState, ModelError> {
        let n = initial_equity.len();
        if n == 0 {
            return Err(ModelError::StateShape { what: "state has no institutions".into() });
        }
        if equity.len() != n {
            return Err(ModelError::StateShape {
                what: format!("equity has length {}, initial equity {}", equity.len(), n),
            });
        }
        if liabilities.len() != n {
            return Err(ModelError::StateShape {
                what: format!("liabilities have length {}, initial equity {}", liabilities.len(), n),
            });
        }
        model.check_dimensions(n)?;
        for (i, &e) in equity.iter().enumerate() {
            if !e.is_finite() {
                return Err(ModelError::NonFiniteState { what: "equity", index: i });
            }
        }
        let mut initial_assets = Vec::with_capacity(n);
        for i in 0..n {
            let e0 = initial_equity[i];
            let l = liabilities[i];
            if !e0.is_finite() {
                return Err(ModelError::NonFiniteState { what: "initial equity", index: i });
            }
            if !l.is_finite() {
                return Err(ModelError::NonFiniteState { what: "liabilities", index: i });
            }
            if e0 <= 0.0 {
                return Err(ModelError::DegenerateInstitution { index: i, what: "equity", value: e0 });
            }
            let a0 = e0 + l;
            if a0 <= 0.0 {
                return Err(ModelError::DegenerateInstitution { index: i, what: "assets", value: a0 });
            }
            initial_assets.push(a0);
        }
        let assets: Vec<f64> = equity.iter().zip(liabilities).map(|(e, l)| e + l).collect();
        let mut state = SystemState {
            equity,
            initial_equity: initial_equity.clone(),
            assets,
            initial_assets,
            delta_r: 0.0,
        };
        state.delta_r = model.delta_r(&state);
        Ok(state)
    }

    pub fn equity(&self) -> &EquityVector {
        &self.equity
    }

    pub fn initial_equity(&self) -> &EquityVector {
        &self.initial_equity
    }

    pub fn assets(&self) -> &[f64] {
        &self.assets
    }

    pub fn initial_assets(&self) -> &[f64] {
        &self.initial_assets
    }

    /// Rate change evaluated at construction; consistent with
    /// [`CalibratedModel::delta_r`] for the binding model.
    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }
}

/// Deterministic grid of ordered state pairs used to probe a valuation for
/// feasibility: range inside `[0, 1]` and monotonicity in each equity
/// coordinate.
#[derive(Debug, Clone)]
pub struct FeasibilityProbe {
    pub initial_equity: EquityVector,
    pub liabilities: Vec<f64>,
    /// Equity levels as multiples of initial equity. Must be sorted
    /// ascending; negatives probe insolvent states.
    pub levels: Vec<f64>,
}

impl FeasibilityProbe {
    /// Levels from deep insolvency through the initial sheet and above it.
    pub fn standard(initial_equity: EquityVector, liabilities: Vec<f64>) -> Self {
        FeasibilityProbe {
            initial_equity,
            liabilities,
            levels: vec![-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25],
        }
    }

    /// All ordered pairs of states on the grid: for every coordinate, every
    /// pair of levels applied to that coordinate alone (others held at the
    /// initial sheet), plus every pair of whole-vector scalings. The first
    /// state of each pair is componentwise `<=` the second.
    pub fn ordered_pairs(
        &self,
        model: &CalibratedModel,
    ) -> Result<Vec<(SystemState, SystemState)>, ModelError> {
        let n = self.initial_equity.len();
        let build = |e: Vec<f64>| {
            SystemState::build(model, EquityVector::new(e), &self.initial_equity, &self.liabilities)
        };
        let mut pairs = Vec::new();
        for lo_idx in 0..self.levels.len() {
            for hi_idx in lo_idx + 1..self.levels.len() {
                let (lo, hi) = (self.levels[lo_idx], self.levels[hi_idx]);
                for c in 0..n {
                    let mut e_lo: Vec<f64> = self.initial_equity.as_slice().to_vec();
                    let mut e_hi = e_lo.clone();
                    e_lo[c] = lo * self.initial_equity[c];
                    e_hi[c] = hi * self.initial_equity[c];
                    pairs.push((build(e_lo)?, build(e_hi)?));
                }
                let e_lo: Vec<f64> = self.initial_equity.iter().map(|x| lo * x).collect();
                let e_hi: Vec<f64> = self.initial_equity.iter().map(|x| hi * x).collect();
                pairs.push((build(e_lo)?, build(e_hi)?));
            }
        }
        Ok(pairs)
    }
}

/// First offence found while probing a valuation, if any.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityViolation {
    /// A factor fell outside `[0, 1]`. `issuer` is `None` for the external
    /// factor.
    OutOfRange { issuer: Option<usize>, value: f64 },
    /// A factor decreased when equity increased.
    NonMonotone { issuer: Option<usize>, lower_value: f64, upper_value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violation: Option<FeasibilityViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violation.is_none()
    }
}

/// Probes a calibrated model over the grid and reports the first violation
/// of range or monotonicity, if any. All four built-in families pass by
/// construction; the probe exists to certify configurations empirically and
/// to vet custom valuations via [`check_valuation_feasibility`].
pub fn check_feasibility(
    model: &CalibratedModel,
    probe: &FeasibilityProbe,
) -> Result<FeasibilityReport, ModelError> {
    let pairs = probe.ordered_pairs(model)?;
    Ok(check_valuation_feasibility(
        probe.initial_equity.len(),
        &pairs,
        |j, state| model.value_internal(j, state),
        |state| model.value_external(state),
    ))
}

/// Core of the feasibility probe, generic over the valuation functions so
/// that non-library valuations can be vetted with the same machinery. Each
/// pair must be componentwise ordered (first `<=` second).
pub fn check_valuation_feasibility<FI, FE>(
    n: usize,
    ordered_pairs: &[(SystemState, SystemState)],
    value_internal: FI,
    value_external: FE,
) -> FeasibilityReport
where
    FI: Fn(usize, &SystemState) -> f64,
    FE: Fn(&SystemState) -> f64,
{
    let in_range = |v: f64| (0.0..=1.0).contains(&v);
    for (lo, hi) in ordered_pairs {
        for j in 0..n {
            let v_lo = value_internal(j, lo);
            let v_hi = value_internal(j, hi);
            for v in [v_lo, v_hi] {
                if !in_range(v) {
                    return FeasibilityReport {
                        violation: Some(FeasibilityViolation::OutOfRange { issuer: Some(j), value: v }),
                    };
                }
            }
            if v_lo > v_hi {
                return FeasibilityReport {
                    violation: Some(FeasibilityViolation::NonMonotone {
                        issuer: Some(j),
                        lower_value: v_lo,
                        upper_value: v_hi,
                    }),
                };
            }
        }
        let v_lo = value_external(lo);
        let v_hi = value_external(hi);
        for v in [v_lo, v_hi] {
            if !in_range(v) {
                return FeasibilityReport {
                    violation: Some(FeasibilityViolation::OutOfRange { issuer: None, value: v }),
                };
            }
        }
        if v_lo > v_hi {
            return FeasibilityReport {
                violation: Some(FeasibilityViolation::NonMonotone {
                    issuer: None,
                    lower_value: v_lo,
                    upper_value: v_hi,
                }),
            };
        }
    }
    FeasibilityReport { violation: None }
}
