//! Declarative run configuration: one TOML file, flag overrides win.
//!
//! ```toml
//! network = "data/banks"          # directory, institutions.csv, or .json
//! shock = 0.05                    # used by `run`
//! output = "results.csv"
//!
//! [model]
//! variant = "ir-feedback"         # linear-dr | recovery-dr | reduced-form | ir-feedback
//! gamma = 20.0                    # scalar or per-institution array
//! beta = 0.5
//! maturity = 1.0
//! gamma_tilde = 0.1
//!
//! [solver]
//! epsilon = 1e-9                  # absolute; omitted = relative default
//! max_iterations = 100000
//!
//! [sweep]
//! shock_grid = { start = 0.0, stop = 0.10, step = 0.005 }
//!
//! [[sweep.param]]                 # grid order defines nesting order
//! name = "gamma_tilde"
//! values = [0.0, 0.05, 0.1]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netval::solver::SolverConfig;
use netval::stress::{ParamGrid, ShockGrid};
use netval::valuation::{
    ModelSpec, DEFAULT_BETA, DEFAULT_BETA_TILDE, DEFAULT_GAMMA, DEFAULT_GAMMA_TILDE,
    DEFAULT_MATURITY, DEFAULT_RECOVERY_ALPHA,
};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: Option<PathBuf>,
    pub shock: Option<f64>,
    pub output: Option<PathBuf>,
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub solver: SolverBlock,
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub shock_grid: Option<GridBlock>,
    #[serde(default, rename = "param")]
    pub params: Vec<ParamBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBlock {
    pub name: String,
    pub values: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("config {} is malformed", path.display()))
    }
}

/// A fresh model of the named variant with default parameters.
pub fn model_for_variant(name: &str) -> Result<ModelSpec> {
    Ok(match name {
        "linear-dr" => ModelSpec::linear_dr(),
        "recovery-dr" => ModelSpec::recovery_dr(DEFAULT_RECOVERY_ALPHA),
        "reduced-form" => ModelSpec::reduced_form(DEFAULT_GAMMA, DEFAULT_BETA, DEFAULT_MATURITY),
        "ir-feedback" => ModelSpec::ir_feedback(
            DEFAULT_GAMMA,
            DEFAULT_BETA,
            DEFAULT_MATURITY,
            DEFAULT_GAMMA_TILDE,
            DEFAULT_BETA_TILDE,
        ),
        other => bail!(
            "unknown model variant '{other}': expected linear-dr, recovery-dr, reduced-form, or ir-feedback"
        ),
    })
}

/// Model after flag overrides: `--model` of the configured variant keeps
/// its parameters, any other variant starts from defaults, and `--param`
/// replaces named scalars. No flags and no config block means linear-dr.
pub fn resolve_model(
    config: Option<ModelSpec>,
    variant_flag: Option<&str>,
    param_flags: &[(String, f64)],
) -> Result<ModelSpec> {
    let mut model = match (variant_flag, config) {
        (Some(name), Some(configured)) if configured.variant_name() == name => configured,
        (Some(name), _) => model_for_variant(name)?,
        (None, Some(configured)) => configured,
        (None, None) => ModelSpec::linear_dr(),
    };
    for (name, value) in param_flags {
        model = model.with_param(name, *value)?;
    }
    Ok(model)
}

/// Solver settings after flag overrides.
pub fn resolve_solver(
    block: &SolverBlock,
    epsilon_flag: Option<f64>,
    max_iter_flag: Option<usize>,
) -> SolverConfig {
    let mut config = SolverConfig::default();
    if let Some(e) = epsilon_flag.or(block.epsilon) {
        config.tolerance = Some(e);
    }
    if let Some(m) = max_iter_flag.or(block.max_iterations) {
        config.max_iterations = m;
    }
    config
}

/// Shock grid from `start:stop:step` flag text or the config block.
pub fn resolve_grid(config: Option<&GridBlock>, flag: Option<&str>) -> Result<ShockGrid> {
    if let Some(text) = flag {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            bail!("--shock-grid wants start:stop:step, got '{text}'");
        };
        let parse = |s: &str| {
            s.parse::<f64>().with_context(|| format!("'{s}' in --shock-grid is not a number"))
        };
        return Ok(ShockGrid::new(parse(start)?, parse(stop)?, parse(step)?)?);
    }
    let Some(block) = config else {
        bail!("no shock grid: pass --shock-grid start:stop:step or a [sweep] shock_grid block");
    };
    Ok(ShockGrid::new(block.start, block.stop, block.step)?)
}

/// Parameter grids: `--param` flags replace the config grid wholesale, in
/// flag order.
pub fn resolve_params(config: Option<&SweepBlock>, flags: &[String]) -> Result<Vec<ParamGrid>> {
    if !flags.is_empty() {
        return flags
            .iter()
            .map(|text| {
                let (name, values) = parse_param(text)?;
                Ok(ParamGrid { name, values })
            })
            .collect();
    }
    Ok(config
        .map(|s| {
            s.params
                .iter()
                .map(|p| ParamGrid { name: p.name.clone(), values: p.values.clone() })
                .collect()
        })
        .unwrap_or_default())
}

/// Splits `name=v1,v2,...` into a name and its values.
pub fn parse_param(text: &str) -> Result<(String, Vec<f64>)> {
    let Some((name, rest)) = text.split_once('=') else {
        bail!("--param wants name=value[,value...], got '{text}'");
    };
    if name.is_empty() || rest.is_empty() {
        bail!("--param wants name=value[,value...], got '{text}'");
    }
    let values = rest
        .split(',')
        .map(|v| v.parse::<f64>().with_context(|| format!("'{v}' in --param {name} is not a number")))
        .collect::<Result<Vec<f64>>>()?;
    Ok((name.to_string(), values))
}
