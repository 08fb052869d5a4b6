//! Integration of the model and the resulting trajectories.
//!
//! The motivation is integrated in the chart `θ = atanh(m)`, where its
//! equation becomes `θ' = σ(m + 3α)`. This keeps `|m| < 1` exactly: in the
//! raw chart `m` rounds onto ±1 during long excursions, after which the
//! `(1 − m²)` factor freezes it there for good. Agents that start with
//! `|m| = 1` exactly sit on an invariant face and are held there.

use crate::dynamics::{
    to_flat, Chart, Dynamics, FieldKind, ModelParams, Representation, SystemState,
};
use crate::error::{Error, Result};
use crate::simulate::integrator::{dopri5, DenseSegment, IntegratorOptions, Tolerances};

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: FieldKind,
    pub representation: Representation,
    pub n_agents: usize,
    pub dimension: usize,
    pub times: Vec<f64>,
    /// States at `times`. Slow-field trajectories carry the slaved values.
    pub states: Vec<SystemState>,
    /// One continuous extension per step, in the integration chart.
    pub dense_segments: Vec<DenseSegment>,
    pinned: Vec<Option<f64>>,
    dynamics: Dynamics,
}

fn chart_to_state(
    dynamics: &Dynamics,
    kind: FieldKind,
    repr: Representation,
    pinned: &[Option<f64>],
    flat: &[f64],
) -> Result<SystemState> {
    let n = dynamics.n_agents();
    let d = dynamics.dimension();
    let stride = kind.stride(d);
    let chart = Chart::Atanh(pinned);
    let mut raw = flat.to_vec();
    for k in 0..n {
        raw[k * stride + d] = chart.motivation(k, flat[k * stride + d]);
    }
    let state = crate::dynamics::from_flat(kind, &raw, n, d, repr)?;
    match kind {
        FieldKind::Full => Ok(state),
        FieldKind::Slow => dynamics.slave_values(&state),
    }
}

/// Integrate `kind` from `initial` over `[0, t_final]`.
pub fn integrate(
    kind: FieldKind,
    params: &ModelParams,
    initial: &SystemState,
    t_final: f64,
    tolerances: Tolerances,
) -> Result<Trajectory> {
    integrate_with(
        kind,
        params,
        initial,
        t_final,
        &IntegratorOptions {
            tolerances,
            ..Default::default()
        },
    )
}

pub fn integrate_with(
    kind: FieldKind,
    params: &ModelParams,
    initial: &SystemState,
    t_final: f64,
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    let dynamics = Dynamics::new(params)?;
    initial.validate()?;
    if initial.n_agents() != params.n_agents {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} agents, model has {}",
            initial.n_agents(),
            params.n_agents
        )));
    }
    if initial.dimension() != params.dimension {
        return Err(Error::UnsupportedDimension {
            expected: params.dimension,
            found: initial.dimension(),
        });
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    if kind == FieldKind::Full && params.lambda.is_infinite() {
        return Err(Error::WrongField("lambda is infinite; integrate the slow field"));
    }
    let repr = initial.representation;
    let d = params.dimension;
    let stride = kind.stride(d);

    let pinned: Vec<Option<f64>> = initial
        .agents
        .iter()
        .map(|a| (a.motivation.abs() == 1.0).then_some(a.motivation))
        .collect();
    let mut y0 = to_flat(kind, initial);
    for (k, p) in pinned.iter().enumerate() {
        let slot = &mut y0[k * stride + d];
        *slot = if p.is_some() { 0.0 } else { slot.atanh() };
    }

    let sol = {
        let chart = Chart::Atanh(&pinned);
        let field = |_t: f64, y: &[f64], out: &mut [f64]| dynamics.rate_flat(kind, repr, chart, y, out);
        let check = |t: f64, y: &[f64]| -> Result<()> {
            if let Some(i) = y.iter().position(|x| !x.is_finite()) {
                return Err(Error::Integrity {
                    t,
                    detail: format!("non-finite entry at index {i}"),
                });
            }
            if kind == FieldKind::Full {
                // values track non-negative potentials; allow integrator drift
                let floor = -1e3 * options.tolerances.atol;
                for k in 0..params.n_agents {
                    for v in &y[k * stride + d + 1..(k + 1) * stride] {
                        if *v < floor {
                            return Err(Error::Integrity {
                                t,
                                detail: format!("agent {k} value {v} is negative"),
                            });
                        }
                    }
                }
            }
            Ok(())
        };
        dopri5(field, check, 0.0, &y0, t_final, options)?
    };

    let states = sol
        .states
        .iter()
        .map(|y| chart_to_state(&dynamics, kind, repr, &pinned, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        kind,
        representation: repr,
        n_agents: params.n_agents,
        dimension: d,
        times: sol.times,
        states,
        dense_segments: sol.segments,
        pinned,
        dynamics,
    })
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn final_state(&self) -> &SystemState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn params(&self) -> &ModelParams {
        self.dynamics.params()
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.t_start() && t <= self.t_end()) {
            return Err(Error::OutOfSpan {
                t,
                start: self.t_start(),
                end: self.t_end(),
            });
        }
        let i = self.times.partition_point(|&s| s <= t);
        Ok(i.saturating_sub(1).min(self.dense_segments.len() - 1))
    }

    /// Interpolated state at `t`.
    pub fn state_at(&self, t: f64) -> Result<SystemState> {
        let seg = &self.dense_segments[self.segment_index(t)?];
        chart_to_state(
            &self.dynamics,
            self.kind,
            self.representation,
            &self.pinned,
            &seg.eval(t),
        )
    }

    /// States on a uniform grid of `count` points over `[t0, t1]`.
    pub fn sample(&self, t0: f64, t1: f64, count: usize) -> Result<Vec<(f64, SystemState)>> {
        if count < 2 {
            return Err(Error::InvalidParameter("need at least 2 samples".into()));
        }
        (0..count)
            .map(|i| {
                let t = if i + 1 == count {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (count - 1) as f64
                };
                Ok((t, self.state_at(t)?))
            })
            .collect()
    }

    /// `‖f(Z(t))‖∞` at a stored or interpolated state.
    pub fn residual(&self, state: &SystemState) -> Result<f64> {
        let flat = to_flat(self.kind, state);
        let rate = self.dynamics.rate_vector(self.kind, self.representation, &flat)?;
        Ok(rate.iter().fold(0.0, |a, x| a.max(x.abs())))
    }

    /// Same trajectory with every state converted to `repr`.
    pub fn in_representation(&self, repr: Representation) -> Result<Vec<SystemState>> {
        self.states
            .iter()
            .map(|s| crate::dynamics::in_representation(s, repr))
            .collect()
    }
}
