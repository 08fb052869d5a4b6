//! Regime classification and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FieldKind, Lambda, ModelParams, Representation, SystemState};
use crate::error::{Error, Result};
use crate::simulate::initial::{initial_condition, InitialKind};
use crate::simulate::integrator::{IntegratorOptions, Tolerances};
use crate::simulate::metric::rendezvous_metric;
use crate::simulate::trajectory::{integrate_with, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Deadlock,
    Synchronous,
    Asynchronous,
    Unclassified,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Deadlock => "Deadlock",
            Regime::Synchronous => "Synchronous",
            Regime::Asynchronous => "Asynchronous",
            Regime::Unclassified => "Unclassified",
        })
    }
}

/// Thresholds of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Fraction of the horizon discarded as transient.
    pub transient_fraction: f64,
    /// Fraction of the horizon, at the end, over which the residual must
    /// stay small for a deadlock.
    pub settle_fraction: f64,
    pub residual_tol: f64,
    /// Deadlock requires every `|m_k| < 1 − indecision_margin`.
    pub indecision_margin: f64,
    pub sync_spread: f64,
    pub min_minima: usize,
    /// Dense-output samples over the post-transient window.
    pub samples: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Integrator step budget per run.
    pub max_steps: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            transient_fraction: 0.5,
            settle_fraction: 0.1,
            residual_tol: 1e-8,
            indecision_margin: 1e-3,
            sync_spread: 1e-6,
            min_minima: 3,
            samples: 20_000,
            rtol: Tolerances::default().rtol,
            atol: Tolerances::default().atol,
            max_steps: IntegratorOptions::default().max_steps,
        }
    }
}

impl ClassifierConfig {
    pub fn integrator_options(&self) -> IntegratorOptions {
        IntegratorOptions {
            tolerances: self.tolerances(),
            max_steps: self.max_steps,
            ..Default::default()
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| x > 0.0 && x < 1.0;
        if !frac(self.transient_fraction) || !frac(self.settle_fraction) {
            return Err(Error::InvalidParameter(
                "transient and settle fractions must lie in (0, 1)".into(),
            ));
        }
        if !(self.residual_tol > 0.0 && self.sync_spread > 0.0 && self.indecision_margin > 0.0) {
            return Err(Error::InvalidParameter("classifier thresholds must be positive".into()));
        }
        if self.samples < 10 {
            return Err(Error::InvalidParameter("need at least 10 samples".into()));
        }
        self.tolerances().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeLabel {
    pub label: Regime,
    pub metric_final: f64,
    /// Column spread (distance to the symmetric subspace) at the end.
    pub spread_final: f64,
    pub residual_final: f64,
    pub max_spread_post_transient: f64,
    pub max_residual_settle: f64,
    pub metric_minima: usize,
    pub max_abs_motivation: f64,
    /// Set when classification could not run.
    pub failure: Option<String>,
}

impl RegimeLabel {
    pub fn failed(error: &Error) -> Self {
        RegimeLabel {
            label: Regime::Unclassified,
            metric_final: f64::NAN,
            spread_final: f64::NAN,
            residual_final: f64::NAN,
            max_spread_post_transient: f64::NAN,
            max_residual_settle: f64::NAN,
            metric_minima: 0,
            max_abs_motivation: f64::NAN,
            failure: Some(error.to_string()),
        }
    }
}

fn field_kind(params: &ModelParams) -> FieldKind {
    if params.lambda.is_infinite() {
        FieldKind::Slow
    } else {
        FieldKind::Full
    }
}

/// Classify a trajectory already integrated over `[0, horizon]`.
pub fn classify_trajectory(traj: &Trajectory, config: &ClassifierConfig) -> Result<RegimeLabel> {
    config.validate()?;
    let t_end = traj.t_end();
    let t_transient = traj.t_start() + config.transient_fraction * (t_end - traj.t_start());
    let t_settle = t_end - config.settle_fraction * (t_end - traj.t_start());
    let samples = traj.sample(t_transient, t_end, config.samples)?;

    let mut max_spread = 0.0_f64;
    let mut max_residual_settle = 0.0_f64;
    let mut max_residual_post = 0.0_f64;
    for (t, s) in &samples {
        max_spread = max_spread.max(s.column_spread());
        let r = traj.residual(s)?;
        max_residual_post = max_residual_post.max(r);
        if *t >= t_settle {
            max_residual_settle = max_residual_settle.max(r);
        }
    }
    let last = traj.final_state();
    let residual_final = traj.residual(last)?;
    let max_abs_motivation = last.agents.iter().fold(0.0_f64, |a, x| a.max(x.motivation.abs()));
    let minima = traj.metric_minima(t_transient, t_end, config.samples)?.len();

    let settled = max_residual_settle < config.residual_tol;
    let label = if settled && max_abs_motivation < 1.0 - config.indecision_margin {
        Regime::Deadlock
    } else if settled || max_residual_post < config.residual_tol {
        // stationary, but on the boundary of the motivation range
        Regime::Unclassified
    } else if max_spread < config.sync_spread {
        Regime::Synchronous
    } else if minima >= config.min_minima {
        Regime::Asynchronous
    } else {
        Regime::Unclassified
    };
    Ok(RegimeLabel {
        label,
        metric_final: rendezvous_metric(last),
        spread_final: last.column_spread(),
        residual_final,
        max_spread_post_transient: max_spread,
        max_residual_settle,
        metric_minima: minima,
        max_abs_motivation,
        failure: None,
    })
}

/// Integrate from `initial` over `[0, horizon]` with the default
/// thresholds and classify the outcome.
pub fn classify_regime(params: &ModelParams, initial: &SystemState, horizon: f64) -> Result<RegimeLabel> {
    classify_regime_with(params, initial, horizon, &ClassifierConfig::default())
}

pub fn classify_regime_with(
    params: &ModelParams,
    initial: &SystemState,
    horizon: f64,
    config: &ClassifierConfig,
) -> Result<RegimeLabel> {
    params.require_symmetric("regime classification")?;
    config.validate()?;
    let traj = integrate_with(field_kind(params), params, initial, horizon, &config.integrator_options())?;
    classify_trajectory(&traj, config)
}

/// Which initial conditions a sweep uses at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialPolicy {
    Symmetric,
    Generic,
    Both,
}

impl InitialPolicy {
    pub fn kinds(self) -> &'static [InitialKind] {
        match self {
            InitialPolicy::Symmetric => &[InitialKind::Symmetric],
            InitialPolicy::Generic => &[InitialKind::Generic],
            InitialPolicy::Both => &[InitialKind::Symmetric, InitialKind::Generic],
        }
    }
}

impl std::str::FromStr for InitialPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(InitialPolicy::Symmetric),
            "generic" => Ok(InitialPolicy::Generic),
            "both" => Ok(InitialPolicy::Both),
            other => Err(Error::InvalidParameter(format!(
                "unknown initial policy {other:?} (expected symmetric, generic or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub sigma: f64,
    pub lambda: Lambda,
    pub initial: InitialKind,
    pub regime: RegimeLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_agents: usize,
    pub sigmas: Vec<f64>,
    pub lambdas: Vec<Lambda>,
    pub policy: InitialPolicy,
    pub seed: u64,
    pub horizon: f64,
    pub config: ClassifierConfig,
}

/// Classify every `(λ, σ, initial kind)` cell in parallel.
///
/// Every cell of a given initial kind starts from the same state, drawn
/// once from `seed`, so neighbouring cells differ only in the parameters.
/// Cells are ordered by `λ`, then `σ`, then initial kind. A cell whose
/// integration fails is reported as `Unclassified` with the error text.
pub fn sweep_regimes(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    if spec.sigmas.is_empty() || spec.lambdas.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be non-empty".into()));
    }
    if !(spec.horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {}",
            spec.horizon
        )));
    }
    spec.config.validate()?;
    let mut tasks = Vec::new();
    for &lambda in &spec.lambdas {
        for &sigma in &spec.sigmas {
            let params = ModelParams::symmetric(spec.n_agents, sigma, lambda)?;
            for &kind in spec.policy.kinds() {
                tasks.push((params.clone(), kind));
            }
        }
    }
    // the initial states only depend on N, so build them once
    let reference = ModelParams::symmetric(spec.n_agents, 1.0, Lambda::Finite(1.0))?;
    let initials: Vec<(InitialKind, SystemState)> = spec
        .policy
        .kinds()
        .iter()
        .map(|&k| Ok((k, initial_condition(k, &reference, spec.seed, Representation::Rotated)?)))
        .collect::<Result<_>>()?;

    Ok(tasks
        .into_par_iter()
        .map(|(params, kind)| {
            let initial = &initials.iter().find(|(k, _)| *k == kind).expect("kind is in the policy").1;
            let regime = classify_regime_with(&params, initial, spec.horizon, &spec.config)
                .unwrap_or_else(|e| RegimeLabel::failed(&e));
            SweepCell {
                sigma: params.sigma,
                lambda: params.lambda,
                initial: kind,
                regime,
            }
        })
        .collect())
}
