//! The full, rotated and slow-manifold vector fields.
//!
//! Every field evaluation funnels through [`Dynamics::rate_flat`], which works
//! on a flat per-agent layout. For [`FieldKind::Full`] each agent occupies
//! `d + 3` slots `(x, m, v1, v2)`; for [`FieldKind::Slow`] it occupies `d + 1`
//! slots `(x, m)` and the values are replaced by the task potentials.

use crate::dynamics::params::ModelParams;
use crate::dynamics::potentials::TaskPotentials;
use crate::dynamics::state::{AgentState, Representation, SystemState, VALUE_SUM_GUARD};
use crate::error::{Error, Result};

/// Which vector field to evaluate or integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Positions, motivations and values at finite `λ`.
    Full,
    /// `λ → ∞` limit with values slaved to the potentials.
    Slow,
}

impl FieldKind {
    pub fn stride(self, dimension: usize) -> usize {
        match self {
            FieldKind::Full => dimension + 3,
            FieldKind::Slow => dimension + 1,
        }
    }
}

/// How the motivation slot of a flat vector is stored.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Chart<'a> {
    /// The slot holds `m` itself.
    Raw,
    /// The slot holds `atanh(m)`. Agents with `|m| = 1` exactly are pinned
    /// at that value and their slot is ignored.
    Atanh(&'a [Option<f64>]),
}

impl Chart<'_> {
    #[inline]
    pub(crate) fn motivation(&self, k: usize, slot: f64) -> f64 {
        match self {
            Chart::Raw => slot,
            Chart::Atanh(pinned) => pinned[k].unwrap_or_else(|| slot.tanh()),
        }
    }
}

/// Time derivative of the slow-manifold state `(y, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowRate {
    pub positions: Vec<Vec<f64>>,
    pub motivations: Vec<f64>,
}

/// A validated model with precomputed potentials.
#[derive(Debug, Clone)]
pub struct Dynamics {
    params: ModelParams,
    potentials: TaskPotentials,
}

impl Dynamics {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Dynamics {
            potentials: TaskPotentials::new(params)?,
            params: params.clone(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn potentials(&self) -> &TaskPotentials {
        &self.potentials
    }

    pub fn n_agents(&self) -> usize {
        self.params.n_agents
    }

    pub fn dimension(&self) -> usize {
        self.params.dimension
    }

    pub fn stride(&self, kind: FieldKind) -> usize {
        kind.stride(self.params.dimension)
    }

    pub(crate) fn rate_flat(
        &self,
        kind: FieldKind,
        repr: Representation,
        chart: Chart<'_>,
        state: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.params.n_agents;
        let d = self.params.dimension;
        let stride = kind.stride(d);
        debug_assert_eq!(state.len(), n * stride);
        debug_assert_eq!(out.len(), n * stride);
        self.potentials.check_frame(repr)?;
        let lambda = match (kind, self.params.lambda.finite()) {
            (FieldKind::Full, None) => {
                return Err(Error::WrongField(
                    "lambda is infinite; use the slow-manifold field",
                ))
            }
            (FieldKind::Full, Some(l)) => l,
            (FieldKind::Slow, _) => 0.0,
        };
        let sigma = self.params.sigma;

        let mut pos = Vec::with_capacity(n * d);
        for k in 0..n {
            pos.extend_from_slice(&state[k * stride..k * stride + d]);
        }
        let mut f1 = vec![0.0; d];
        let mut f2 = vec![0.0; d];

        for k in 0..n {
            let base = k * stride;
            let (phi1, phi2) = self.potentials.tasks_flat(repr, &pos, k, &mut f1, &mut f2);
            let m = chart.motivation(k, state[base + d]);
            let (a, b) = match kind {
                FieldKind::Full => (state[base + d + 1], state[base + d + 2]),
                FieldKind::Slow => (phi1, phi2),
            };
            let sum = a + b;
            if !(sum >= VALUE_SUM_GUARD) {
                return Err(Error::SingularValueState { agent: k, sum });
            }
            let alpha = (a - b) / sum;

            let w1 = 0.5 * (1.0 + m);
            let w2 = 0.5 * (1.0 - m);
            for i in 0..d {
                out[base + i] = w1 * f1[i] + w2 * f2[i];
            }
            let drive = sigma * (m + 3.0 * alpha);
            out[base + d] = match chart {
                Chart::Raw => (1.0 - m * m) * drive,
                Chart::Atanh(pinned) if pinned[k].is_some() => 0.0,
                Chart::Atanh(_) => drive,
            };
            if kind == FieldKind::Full {
                out[base + d + 1] = lambda * (phi1 - a);
                out[base + d + 2] = lambda * (phi2 - b);
            }
        }
        Ok(())
    }

    /// Field in the raw `m` chart on a flat vector.
    pub fn rate_vector(&self, kind: FieldKind, repr: Representation, state: &[f64]) -> Result<Vec<f64>> {
        let expected = self.params.n_agents * self.stride(kind);
        if state.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "flat state of length {} where {expected} expected",
                state.len()
            )));
        }
        let mut out = vec![0.0; state.len()];
        self.rate_flat(kind, repr, Chart::Raw, state, &mut out)?;
        Ok(out)
    }

    fn check_state(&self, state: &SystemState) -> Result<()> {
        state.check_shape()?;
        if state.n_agents() != self.params.n_agents {
            return Err(Error::InvalidParameter(format!(
                "state has {} agents, model has {}",
                state.n_agents(),
                self.params.n_agents
            )));
        }
        if state.dimension() != self.params.dimension {
            return Err(Error::UnsupportedDimension {
                expected: self.params.dimension,
                found: state.dimension(),
            });
        }
        Ok(())
    }

    /// Time derivative of a full state; the result has the same shape and
    /// representation as the input.
    pub fn full(&self, state: &SystemState) -> Result<SystemState> {
        self.check_state(state)?;
        let flat = to_flat(FieldKind::Full, state);
        let rate = self.rate_vector(FieldKind::Full, state.representation, &flat)?;
        from_flat(FieldKind::Full, &rate, self.params.n_agents, self.params.dimension, state.representation)
    }

    /// Slow-manifold derivative `(ẏ, ṁ)`; stored values are ignored.
    pub fn slow(&self, state: &SystemState) -> Result<SlowRate> {
        self.check_state(state)?;
        let d = self.params.dimension;
        let flat = to_flat(FieldKind::Slow, state);
        let rate = self.rate_vector(FieldKind::Slow, state.representation, &flat)?;
        let stride = FieldKind::Slow.stride(d);
        Ok(SlowRate {
            positions: rate.chunks_exact(stride).map(|c| c[..d].to_vec()).collect(),
            motivations: rate.chunks_exact(stride).map(|c| c[d]).collect(),
        })
    }

    /// Max-norm of the field at `state` (full field when `λ` is finite,
    /// otherwise the slow field).
    pub fn residual(&self, state: &SystemState) -> Result<f64> {
        let kind = if self.params.lambda.is_infinite() {
            FieldKind::Slow
        } else {
            FieldKind::Full
        };
        let flat = to_flat(kind, state);
        let rate = self.rate_vector(kind, state.representation, &flat)?;
        Ok(rate.iter().fold(0.0, |a, x| a.max(x.abs())))
    }

    /// Replace each agent's values by its current task potentials.
    pub fn slave_values(&self, state: &SystemState) -> Result<SystemState> {
        let phis = self.potentials.all(state)?;
        let mut out = state.clone();
        for (a, p) in out.agents.iter_mut().zip(phis) {
            a.values = p;
        }
        Ok(out)
    }
}

/// Flatten a state into the per-agent layout of `kind`.
pub fn to_flat(kind: FieldKind, state: &SystemState) -> Vec<f64> {
    let d = state.dimension();
    let mut out = Vec::with_capacity(state.n_agents() * kind.stride(d));
    for a in &state.agents {
        out.extend_from_slice(&a.position);
        out.push(a.motivation);
        if kind == FieldKind::Full {
            out.extend_from_slice(&a.values);
        }
    }
    out
}

/// Inverse of [`to_flat`]; slow layouts get zero values.
pub fn from_flat(
    kind: FieldKind,
    flat: &[f64],
    n_agents: usize,
    dimension: usize,
    representation: Representation,
) -> Result<SystemState> {
    let stride = kind.stride(dimension);
    if flat.len() != n_agents * stride {
        return Err(Error::InvalidParameter(format!(
            "flat vector of length {} does not hold {n_agents} agents",
            flat.len()
        )));
    }
    let agents = flat
        .chunks_exact(stride)
        .map(|c| {
            let values = match kind {
                FieldKind::Full => [c[dimension + 1], c[dimension + 2]],
                FieldKind::Slow => [0.0, 0.0],
            };
            AgentState::new(c[..dimension].to_vec(), c[dimension], values)
        })
        .collect();
    SystemState::new(agents, representation)
}

/// Full-system time derivative (finite `λ`).
pub fn vector_field_full(state: &SystemState, params: &ModelParams) -> Result<SystemState> {
    Dynamics::new(params)?.full(state)
}

/// Slow-manifold time derivative; values in `state` are not used.
pub fn vector_field_slow(state: &SystemState, params: &ModelParams) -> Result<SlowRate> {
    Dynamics::new(params)?.slow(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::params::Lambda;
    use crate::dynamics::symmetry::{from_rotated, to_rotated};

    fn state3() -> SystemState {
        SystemState::new(
            vec![
                AgentState::new(vec![0.3, -0.7], 0.2, [0.4, 0.9]),
                AgentState::new(vec![1.2, 0.4], -0.6, [0.3, 0.1]),
                AgentState::new(vec![-0.5, 0.9], 0.95, [1.4, 0.6]),
            ],
            Representation::Rotated,
        )
        .unwrap()
    }

    #[test]
    fn saturated_motivation_does_not_move() {
        let p = ModelParams::symmetric(3, 2.0, Lambda::Finite(1.0)).unwrap();
        let mut s = state3();
        s.agents[0].motivation = 1.0;
        s.agents[1].motivation = -1.0;
        let r = vector_field_full(&s, &p).unwrap();
        assert_eq!(r.agents[0].motivation, 0.0);
        assert_eq!(r.agents[1].motivation, 0.0);
        assert_ne!(r.agents[2].motivation, 0.0);
    }

    #[test]
    fn values_at_potentials_are_stationary() {
        let p = ModelParams::symmetric(3, 2.0, Lambda::Finite(1.0)).unwrap();
        let dy = Dynamics::new(&p).unwrap();
        let s = dy.slave_values(&state3()).unwrap();
        let r = dy.full(&s).unwrap();
        for a in &r.agents {
            assert_eq!(a.values, [0.0, 0.0]);
        }
    }

    #[test]
    fn singular_values_are_an_error() {
        let p = ModelParams::symmetric(3, 2.0, Lambda::Finite(1.0)).unwrap();
        let mut s = state3();
        s.agents[1].values = [0.0, 0.0];
        assert!(matches!(
            vector_field_full(&s, &p),
            Err(Error::SingularValueState { agent: 1, .. })
        ));
    }

    #[test]
    fn infinite_lambda_needs_slow_field() {
        let p = ModelParams::symmetric(3, 2.0, Lambda::Infinite).unwrap();
        assert!(matches!(vector_field_full(&state3(), &p), Err(Error::WrongField(_))));
        assert!(vector_field_slow(&state3(), &p).is_ok());
    }

    #[test]
    fn slow_field_matches_full_field_with_slaved_values() {
        let p = ModelParams::symmetric(3, 1.7, Lambda::Finite(0.8)).unwrap();
        let dy = Dynamics::new(&p).unwrap();
        let s = dy.slave_values(&state3()).unwrap();
        let full = dy.full(&s).unwrap();
        let slow = dy.slow(&s).unwrap();
        for (k, a) in full.agents.iter().enumerate() {
            assert_eq!(a.position, slow.positions[k]);
            assert_eq!(a.motivation, slow.motivations[k]);
        }
    }

    #[test]
    fn slow_field_singular_when_all_at_shared_target() {
        let p = ModelParams::general(
            1.0,
            Lambda::Infinite,
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let s = SystemState::new(
            vec![
                AgentState::new(vec![0.5, 0.5], 0.0, [0.0, 0.0]),
                AgentState::new(vec![0.5, 0.5], 0.0, [0.0, 0.0]),
            ],
            Representation::Original,
        )
        .unwrap();
        assert!(matches!(
            vector_field_slow(&s, &p),
            Err(Error::SingularValueState { .. })
        ));
    }

    #[test]
    fn rotated_and_original_fields_agree() {
        let p = ModelParams::symmetric(3, 1.3, Lambda::Finite(2.0)).unwrap();
        let dy = Dynamics::new(&p).unwrap();
        let z = state3();
        let x = from_rotated(&z).unwrap();
        let fz = dy.full(&z).unwrap();
        // rotating the original-frame velocity gives the rotated-frame velocity
        let fx = to_rotated(&dy.full(&x).unwrap()).unwrap();
        let diff = fz
            .to_row()
            .iter()
            .zip(fx.to_row())
            .fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()));
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn general_field_in_three_dimensions() {
        let p = ModelParams::general(
            1.0,
            Lambda::Finite(1.0),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        let s = SystemState::new(
            vec![
                AgentState::new(vec![1.0, 0.0, 0.0], 1.0, [0.0, 0.5]),
                AgentState::new(vec![0.0, 0.0, 0.0], 0.0, [0.5, 0.5]),
            ],
            Representation::Original,
        )
        .unwrap();
        let r = vector_field_full(&s, &p).unwrap();
        // agent 0 sits on its target with m = 1: it does not move
        assert_eq!(r.agents[0].position, vec![0.0, 0.0, 0.0]);
        // agent 1 blends target (0,1,0) and partner (1,0,0) equally
        assert_eq!(r.agents[1].position, vec![0.25, 0.5, 0.0]);
    }
}
